"""Dense Nystrom discretization of the periodic boundary operators.

Kernels are split on the parameter torus as

    single layer:  (alpha/(4 pi)) log(4 sin^2((t-s)/2)) I   -> Kress log rule
                   + smooth free-space remainder + R^q      -> periodic trapezoid
    traction:      gamma_c cot((t-s)/2)/(2|x'(t)|) J        -> spectral Hilbert rule
                   + smooth symmetric part + R^q traction   -> periodic trapezoid

with gamma_c = (1-beta)/(2 pi) and J the quarter-turn matrix; the traction
kernel of the plane Kelvin matrix has no logarithmic singularity, only the
Cauchy part above.  The split is re-verified numerically at assembly time.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AssemblyError, NearBoundaryWarning
from .kernels import traction_from_gradient, traction_kernel
from .lattice import periodic_green, periodic_green_grad, regular_part, regular_part_grad

_J = np.array([[0.0, -1.0], [1.0, 0.0]])
_CHUNK = 16384


@dataclass
class BoundaryVectorField:
    """Nodal samples of a vector field on the curve, trig-interpolation semantics."""

    values: np.ndarray  # (N, 2)
    curve: object

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.curve.N, 2):
            raise ValueError(
                f"field shape {self.values.shape} does not match curve N={self.curve.N}"
            )

    def resample(self, N, curve=None):
        vals = np.column_stack(
            [trig_resample(self.values[:, k], N) for k in range(2)]
        )
        return BoundaryVectorField(values=vals, curve=curve or self.curve.resample(N))


@dataclass
class BoundaryMatrixField:
    """Nodal samples of a matrix field on the curve."""

    values: np.ndarray  # (N, 2, 2)
    curve: object

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.curve.N, 2, 2):
            raise ValueError(
                f"field shape {self.values.shape} does not match curve N={self.curve.N}"
            )

    def resample(self, N, curve=None):
        vals = np.stack(
            [
                np.column_stack(
                    [trig_resample(self.values[:, i, j], N) for j in range(2)]
                )
                for i in range(2)
            ],
            axis=1,
        )
        return BoundaryMatrixField(values=vals, curve=curve or self.curve.resample(N))


@dataclass
class DenseBoundaryOperator:
    """Dense nodal operator acting on node-major flattened vector fields."""

    matrix: np.ndarray  # (2N, 2N)
    kind: str
    curve: object
    meta: dict

    def apply(self, field):
        out = self.matrix @ field.values.reshape(-1)
        return BoundaryVectorField(values=out.reshape(-1, 2), curve=field.curve)


def trig_resample(vals, M):
    """Exact trigonometric resampling of nodal data from N to M nodes (M >= N)."""
    vals = np.asarray(vals, dtype=float)
    N = vals.shape[0]
    if M == N:
        return vals.copy()
    if M < N or M % 2 or N % 2:
        raise ValueError("resampling requires even M >= N")
    F = np.fft.fft(vals)
    G = np.zeros(M, dtype=complex)
    h = N // 2
    G[:h] = F[:h]
    G[M - h + 1:] = F[h + 1:]
    G[h] = 0.5 * F[h]
    G[M - h] = 0.5 * F[h]
    return np.real(np.fft.ifft(G)) * (M / N)


def kress_log_rule(N):
    """Circulant quadrature for int_0^{2pi} log(4 sin^2((t_a - s)/2)) f(s) ds."""
    m = np.fft.fftfreq(N, d=1.0 / N)
    lam = np.zeros(N)
    nz = m != 0
    lam[nz] = -2.0 * np.pi / np.abs(m[nz])
    eye = np.eye(N)
    return np.real(np.fft.ifft(lam[:, None] * np.fft.fft(eye, axis=0), axis=0))


def hilbert_rule(N):
    """Circulant quadrature for (1/2pi) pv int f(s) cot((t_a - s)/2) ds."""
    m = np.fft.fftfreq(N, d=1.0 / N)
    lam = -1j * np.sign(m)
    lam[np.abs(m) == N // 2] = 0.0  # nodal conjugate of the Nyquist mode vanishes
    eye = np.eye(N)
    return np.real(np.fft.ifft(lam[:, None] * np.fft.fft(eye, axis=0), axis=0))


def _chunked(fn, pts, out_shape):
    out = np.empty((pts.shape[0],) + out_shape)
    for lo in range(0, pts.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, pts.shape[0])
        out[lo:hi] = fn(pts[lo:hi])
    return out


def _pairwise_symmetric(fn, d, out_shape, odd):
    """Evaluate an even/odd kernel on the (N, N, 2) difference array.

    Only the upper triangle is computed; the lower triangle is mirrored with
    the parity sign.
    """
    N = d.shape[0]
    ia, ib = np.triu_indices(N)
    vals = _chunked(fn, d[ia, ib], out_shape)
    out = np.empty((N, N) + out_shape)
    out[ia, ib] = vals
    out[ib, ia] = -vals if odd else vals
    return out


def _blocks_to_matrix(blocks):
    """(N, N, 2, 2) target-source blocks -> (2N, 2N) node-major matrix."""
    N = blocks.shape[0]
    return blocks.transpose(0, 2, 1, 3).reshape(2 * N, 2 * N)


def assemble_single_layer(curve, env, cell, plan):
    """Nystrom matrix of the periodic single-layer operator on the curve."""
    N = curve.N
    t = curve.params
    x = curve.nodes
    sp = curve.speeds
    alpha, beta = env.alpha, env.beta

    d = x[:, None, :] - x[None, :, :]
    r2 = np.sum(d * d, axis=-1)
    np.fill_diagonal(r2, 1.0)

    # smooth factor of the free-space log split
    dt_half = 0.5 * (t[:, None] - t[None, :])
    sin2 = 4.0 * np.sin(dt_half) ** 2
    np.fill_diagonal(sin2, 1.0)
    log_smooth = np.log(r2 / sin2)
    np.fill_diagonal(log_smooth, np.log(sp * sp))

    dyad = d[:, :, :, None] * d[:, :, None, :] / r2[:, :, None, None]
    diag_dyad = curve.d1[:, :, None] * curve.d1[:, None, :] / (sp * sp)[:, None, None]
    dyad[np.arange(N), np.arange(N)] = diag_dyad

    eye = np.eye(2)
    smooth_fs = (alpha / (4.0 * np.pi)) * log_smooth[:, :, None, None] * eye \
        - (beta / (4.0 * np.pi)) * dyad

    _check_log_split(curve, env, smooth_fs, sin2)

    smooth = smooth_fs + _pairwise_symmetric(
        lambda p: regular_part(p, env, cell, plan), d, (2, 2), odd=False
    )

    blocks = (2.0 * np.pi / N) * sp[None, :, None, None] * smooth
    KL = kress_log_rule(N)
    blocks += (alpha / (4.0 * np.pi)) * (KL * sp[None, :])[:, :, None, None] * eye
    return DenseBoundaryOperator(
        matrix=_blocks_to_matrix(blocks),
        kind="single-layer",
        curve=curve,
        meta={"N": N, "plan_tol": plan.tol, "rules": ("kress-log", "trapezoid")},
    )


def _check_log_split(curve, env, smooth_fs, sin2):
    """Log-coefficient extraction must rebuild the Kelvin matrix off-diagonal."""
    from .kernels import kelvin

    N = curve.N
    for a in range(0, N, max(1, N // 8)):
        b = (a + N // 2) % N
        d = curve.nodes[a] - curve.nodes[b]
        direct = kelvin(d, env)
        split = smooth_fs[a, b] \
            + (env.alpha / (4.0 * np.pi)) * np.log(sin2[a, b]) * np.eye(2)
        if np.max(np.abs(direct - split)) > 1e-12 * max(1.0, np.max(np.abs(direct))):
            raise AssemblyError("log-split inconsistency in single-layer assembly")


def assemble_wstar(curve, env, cell, plan):
    """Nystrom matrix of the traction operator of the periodic single layer.

    The target-normal traction kernel splits into a symmetric smooth part, a
    Cauchy part carried by the spectral Hilbert rule, and the smooth periodic
    correction; diagonal limits come from the curvature data.
    """
    N = curve.N
    t = curve.params
    x = curve.nodes
    sp = curve.speeds
    nu = curve.normals
    d1 = curve.d1
    d2 = curve.d2
    beta = env.beta
    gamma_c = (1.0 - beta) / (2.0 * np.pi)
    ar = np.arange(N)

    d = x[:, None, :] - x[None, :, :]
    r2 = np.sum(d * d, axis=-1)
    np.fill_diagonal(r2, 1.0)
    dn = np.einsum("abk,ak->ab", d, nu)

    eye = np.eye(2)
    ksym = (1.0 - beta) / (2.0 * np.pi) * (dn / r2)[:, :, None, None] * eye
    ksym += (beta / np.pi) * (dn / (r2 * r2))[:, :, None, None] \
        * d[:, :, :, None] * d[:, :, None, :]
    d2n = np.einsum("ak,ak->a", d2, nu)
    diag_sym = (-(1.0 - beta) / (4.0 * np.pi)) * (d2n / sp**2)[:, None, None] * eye \
        - (beta / (2.0 * np.pi)) * (d2n / sp**4)[:, None, None] \
        * d1[:, :, None] * d1[:, None, :]
    ksym[ar, ar] = diag_sym

    # Cauchy part: gamma_c * (x'(t).d)/(|x'(t)| r^2) * J, cot subtracted
    xpd = np.einsum("ak,abk->ab", d1, d)
    h = xpd / (sp[:, None] * r2)
    dt_half = 0.5 * (t[:, None] - t[None, :])
    cot = np.zeros((N, N))
    off = ~np.eye(N, dtype=bool)
    cot[off] = 1.0 / np.tan(dt_half[off])
    rho = h - cot / (2.0 * sp[:, None])
    rho[ar, ar] = np.einsum("ak,ak->a", d1, d2) / (2.0 * sp**3)

    rgrad = _pairwise_symmetric(
        lambda p: regular_part_grad(p, env, cell, plan), d, (2, 2, 2), odd=True
    )
    rcorr = traction_from_gradient(rgrad, nu[:, None, :], env.omega)

    _check_traction_split(curve, env, ksym, rho, cot, sp)

    blocks = (2.0 * np.pi / N) * sp[None, :, None, None] \
        * (ksym + gamma_c * rho[:, :, None, None] * _J + rcorr)
    Q = hilbert_rule(N)
    blocks += gamma_c * np.pi * (Q * (sp[None, :] / sp[:, None]))[:, :, None, None] * _J
    return DenseBoundaryOperator(
        matrix=_blocks_to_matrix(blocks),
        kind="wstar",
        curve=curve,
        meta={"N": N, "plan_tol": plan.tol, "rules": ("hilbert", "trapezoid")},
    )


def _check_traction_split(curve, env, ksym, rho, cot, sp):
    """Free-space split must reproduce the direct traction kernel off-diagonal."""
    N = curve.N
    gamma_c = (1.0 - env.beta) / (2.0 * np.pi)
    rng = np.random.default_rng(N)
    pairs = [(int(a), int((a + s) % N)) for a, s in
             zip(rng.integers(0, N, 20), rng.integers(N // 4, 3 * N // 4, 20))]
    worst = 0.0
    for a, b in pairs:
        d = curve.nodes[a] - curve.nodes[b]
        direct = traction_kernel(d, curve.normals[a], env)
        split = ksym[a, b] + gamma_c * (rho[a, b] + cot[a, b] / (2.0 * sp[a])) * _J
        worst = max(worst, float(np.max(np.abs(direct - split))))
        scale = max(1.0, float(np.max(np.abs(direct))))
        if worst > 1e-12 * scale:
            raise AssemblyError(
                f"traction kernel split deviates from direct evaluation by {worst:.3e}"
            )


def boundary_integral(field, curve=None):
    """Componentwise arclength integral of a nodal vector field (trapezoid)."""
    curve = curve if curve is not None else field.curve
    return field.values.T @ curve.weights


def near_boundary(x, curve, cell, spacings=3.0):
    """True when x is closer to the boundary (over images) than `spacings` nodes."""
    from .cell import min_image_distance

    h = np.max(curve.weights)
    return min_image_distance(x, curve, cell) < spacings * h


def eval_single_layer(x, field, env, cell, plan, upsample=1, warn=True):
    """Periodic single-layer potential at off-boundary points x.

    Plain trapezoid against the periodic Green's matrix; accuracy degrades
    within about three node spacings of the boundary (NearBoundaryWarning).
    The quadrature grid can be refined by an integer `upsample` factor using
    exact trigonometric resampling of curve and density.
    """
    src = field if upsample == 1 else field.resample(upsample * field.curve.N)
    curve = src.curve
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if warn:
        base = field.curve
        for p in pts:
            if near_boundary(p, base, cell):
                warnings.warn(
                    "evaluation point within 3 node spacings of the boundary",
                    NearBoundaryWarning,
                    stacklevel=2,
                )
                break
    dens = src.values * curve.weights[:, None]
    M = curve.N
    diffs = (pts[:, None, :] - curve.nodes[None, :, :]).reshape(-1, 2)
    G = _chunked(lambda p: periodic_green(p, env, cell, plan), diffs, (2, 2))
    out = np.einsum("pbjk,bk->pj", G.reshape(pts.shape[0], M, 2, 2), dens)
    return out[0] if single else out


def eval_traction_offboundary(x, nu, field, env, cell, plan, upsample=1, warn=True):
    """Traction T(omega, Dv) nu of the single layer at off-boundary points."""
    src = field if upsample == 1 else field.resample(upsample * field.curve.N)
    curve = src.curve
    x = np.asarray(x, dtype=float)
    nu = np.asarray(nu, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    nus = np.atleast_2d(nu)
    if warn:
        base = field.curve
        for p in pts:
            if near_boundary(p, base, cell):
                warnings.warn(
                    "evaluation point within 3 node spacings of the boundary",
                    NearBoundaryWarning,
                    stacklevel=2,
                )
                break
    from .kernels import traction_map

    dens = src.values * curve.weights[:, None]
    M = curve.N
    diffs = (pts[:, None, :] - curve.nodes[None, :, :]).reshape(-1, 2)
    G = _chunked(lambda p: periodic_green_grad(p, env, cell, plan), diffs, (2, 2, 2))
    # Jacobian of v: Dv[p, j, m] = sum_b d_m Gamma_jk(x_p - y_b) mu_k w_b
    Dv = np.einsum("pbjkm,bk->pjm", G.reshape(pts.shape[0], M, 2, 2, 2), dens)
    out = np.einsum("pjm,pm->pj", traction_map(env.omega, Dv), nus)
    return out[0] if single else out
