"""Independent oracles and the property-report suite.

The filtered-Fourier oracle evaluates the defining lattice series of the
periodic Green's matrix directly: every term is damped by exp(-sigma |k|^2),
summed brutally to a negligible damped tail, and the filter is removed by
Richardson extrapolation over sigma, sigma/2, sigma/4.  The damped sum equals
the true value minus a term linear in sigma plus exponentially small
screened-image corrections, so the extrapolation is certified by comparing
the two first-stage extrapolants.

run_property_suite drives every load-bearing invariant of the package over
the standard configuration matrix and emits OracleReport rows; the registry
of properties is fixed and its completeness is itself under test.
"""

from dataclasses import dataclass

import numpy as np

from .cell import (
    CircleShape,
    EllipseShape,
    TrigShape,
    build_cell,
    discretize_curve,
    hole_area,
    nearest_image,
)
from .errors import AdmissibilityError, DegenerateProblemError, OracleError
from .kernels import LameEnv, kelvin, traction_map
from .lattice import (
    lame_apply_fd,
    pde_residual,
    periodic_green,
    periodic_green_grad,
    plan_lattice_sum,
    regular_part,
    scalar_periodic_green,
)
from .operators import (
    BoundaryVectorField,
    assemble_single_layer,
    assemble_wstar,
    boundary_integral,
    eval_single_layer,
    eval_traction_offboundary,
)
from .robin import (
    RobinData,
    constant_matrix_field,
    constant_vector_field,
    eval_solution,
    representation_roundtrip,
    solve_neumann_aux,
    solve_robin,
    validate_robin_data,
)

ORACLE_DISTANCE_FACTOR = 112.0  # sigma0 = d^2 / factor keeps screened images < 1e-12

CELLS = ((1.0, 1.0), (2.0, 3.0))
OMEGAS = (0.5, 1.0, 4.0)
CURVES = ("circle", "ellipse", "perturbed")


def _filtered_sum(x, beta, cell, sigma, tail=1e-13, scalar=False):
    """Gaussian-filtered brute-force value of the defining Fourier series."""
    q = np.asarray(cell.q_diag)
    kmin_unit = 2.0 * np.pi / cell.max_edge
    m = 8
    while True:
        kmin = kmin_unit * m
        u = sigma * kmin * kmin
        if np.exp(-u) * 16 * m / (kmin * kmin * cell.volume) < tail or m > 4000:
            break
        m += 8
    rng = np.arange(-m, m + 1)
    z1, z2 = np.meshgrid(rng, rng, indexing="ij")
    z = np.column_stack((z1.ravel(), z2.ravel())).astype(float)
    z = z[np.any(z != 0.0, axis=1)]
    k = 2.0 * np.pi * z / q[None, :]
    k2 = np.sum(k * k, axis=1)
    damp = np.exp(-sigma * k2)
    phase = np.cos(k @ np.asarray(x, dtype=float))
    if scalar:
        return float(np.sum(-damp * phase / (k2 * cell.volume)))
    khat = k / np.sqrt(k2)[:, None]
    eye = np.eye(2)
    base = -eye[None, :, :] + beta * khat[:, :, None] * khat[:, None, :]
    coeff = base / (k2[:, None, None] * cell.volume)
    return np.einsum("f,fjk->jk", damp * phase, coeff)


def _richardson_levels(values):
    """Two-stage Richardson in sigma for values at [sigma, sigma/2, sigma/4]."""
    f0, f1, f2 = values
    g1 = 2.0 * f1 - f0
    g2 = 2.0 * f2 - f1
    return g1, g2, (4.0 * g2 - g1) / 3.0


def oracle_filtered_fourier(x, env, cell, sigma0=None, certify=1e-10):
    """Ground-truth periodic Green's matrix at an off-lattice point x.

    sigma0 defaults to d^2/112 with d the distance to the nearest lattice
    point.  Raises OracleError when the extrapolation levels disagree beyond
    10x the certification target.
    """
    x = np.asarray(x, dtype=float)
    xr = nearest_image(x, cell)
    d = float(np.sqrt(np.sum(xr * xr)))
    if d <= 1e-6 * cell.min_edge:
        raise OracleError("oracle point lies on the lattice")
    if sigma0 is None:
        sigma0 = d * d / ORACLE_DISTANCE_FACTOR
    vals = [_filtered_sum(xr, env.beta, cell, s) for s in (sigma0, sigma0 / 2, sigma0 / 4)]
    g1, g2, out = _richardson_levels(vals)
    spread = np.max(np.abs(g2 - g1))
    if spread > 10.0 * certify:
        raise OracleError(
            f"extrapolation levels disagree by {spread:.3e} (> 10 x {certify:.1e})"
        )
    return out


def oracle_scalar_harmonic(x, cell, sigma0=None, certify=1e-10):
    """Ground-truth zero-mean periodic harmonic Green's function (scalar symbol)."""
    x = np.asarray(x, dtype=float)
    xr = nearest_image(x, cell)
    d = float(np.sqrt(np.sum(xr * xr)))
    if d <= 1e-6 * cell.min_edge:
        raise OracleError("oracle point lies on the lattice")
    if sigma0 is None:
        sigma0 = d * d / ORACLE_DISTANCE_FACTOR
    vals = [
        _filtered_sum(xr, 0.0, cell, s, scalar=True) for s in (sigma0, sigma0 / 2, sigma0 / 4)
    ]
    g1, g2, out = _richardson_levels(vals)
    if abs(g2 - g1) > 10.0 * certify:
        raise OracleError("scalar oracle extrapolation inconsistent")
    return out


@dataclass
class OracleReport:
    """Outcome of one verified property across one configuration."""

    name: str
    anchor: str
    max_error: float
    tolerance: float
    passed: bool
    fingerprint: str

    @staticmethod
    def from_error(name, anchor, max_error, tolerance, fingerprint):
        return OracleReport(
            name=name,
            anchor=anchor,
            max_error=float(max_error),
            tolerance=float(tolerance),
            passed=bool(max_error <= tolerance),
            fingerprint=fingerprint,
        )


def _fingerprint(cell=None, omega=None, curve=None, N=None, tol=None):
    parts = []
    if cell is not None:
        parts.append("cell=" + "x".join(f"{q:g}" for q in cell.q_diag))
    if omega is not None:
        parts.append(f"omega={omega:g}")
    if curve is not None:
        parts.append(f"curve={curve}")
    if N is not None:
        parts.append(f"N={N}")
    if tol is not None:
        parts.append(f"plan_tol={tol:g}")
    return ";".join(parts)


def standard_curve(kind, cell, N):
    """The test-matrix hole shapes, scaled into the given cell."""
    s = cell.min_edge
    center = (0.5 * cell.q_diag[0], 0.5 * cell.q_diag[1])
    if kind == "circle":
        return discretize_curve(CircleShape(center, 0.25 * s), N, cell)
    if kind == "ellipse":
        return discretize_curve(
            EllipseShape(center, (0.3 * s, 0.2 * s), rotation=0.5), N, cell
        )
    if kind == "perturbed":

        base = 0.22 * s
        cos_c = np.zeros((2, 4))
        sin_c = np.zeros((2, 4))
        cos_c[0, 0], cos_c[1, 0] = center
        cos_c[0, 1] = base
        sin_c[1, 1] = base
        # third-harmonic radial ripple keeps the curve analytic and starlike
        cos_c[0, 2] = 0.03 * s
        cos_c[0, 3] = 0.02 * s
        sin_c[1, 3] = -0.02 * s
        return discretize_curve(TrigShape(cos_c, sin_c, interior=center), N, cell)
    raise ValueError(f"unknown curve kind {kind!r}")


def _off_lattice_points(cell, count, rng, min_frac=0.15):
    pts = []
    while len(pts) < count:
        p = rng.uniform(-1.0, 2.0, size=2) * np.asarray(cell.q_diag)
        if np.linalg.norm(nearest_image(p, cell)) >= min_frac * cell.min_edge:
            pts.append(p)
    return np.asarray(pts)


def _trig_density(curve, rng, modes=4, scale=1.0):
    t = curve.params
    vals = np.zeros((curve.N, 2))
    for m in range(modes):
        vals += np.outer(np.cos(m * t), rng.normal(size=2) * scale / (1 + m))
        if m:
            vals += np.outer(np.sin(m * t), rng.normal(size=2) * scale / (1 + m))
    return BoundaryVectorField(vals, curve)


# ----------------------------------------------------------------------------
# property checks; each returns (max_error, tolerance, fingerprint)


def _check_green_oracle(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for edges in CELLS:
        cell = build_cell(edges)
        for omega in OMEGAS:
            env = LameEnv(2, omega)
            plan = plan_lattice_sum(cell, env, 1e-10)
            pts = _off_lattice_points(cell, 20, rng)
            for p in pts:
                diff = periodic_green(p, env, cell, plan) - oracle_filtered_fourier(
                    p, env, cell
                )
                worst = max(worst, float(np.max(np.abs(diff))))
    return worst, 1e-9, _fingerprint(tol=1e-10)


def _check_green_evenness(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for edges in CELLS:
        cell = build_cell(edges)
        for omega in OMEGAS:
            env = LameEnv(2, omega)
            plan = plan_lattice_sum(cell, env, 1e-10)
            pts = _off_lattice_points(cell, 50, rng)
            diff = periodic_green(pts, env, cell, plan) - periodic_green(
                -pts, env, cell, plan
            )
            worst = max(worst, float(np.max(np.abs(diff))))
    return worst, 1e-9, _fingerprint(tol=1e-10)


def _check_green_periodicity(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for edges in CELLS:
        cell = build_cell(edges)
        q = np.asarray(edges)
        for omega in OMEGAS:
            env = LameEnv(2, omega)
            plan = plan_lattice_sum(cell, env, 1e-10)
            pts = _off_lattice_points(cell, 50, rng)
            base = periodic_green(pts, env, cell, plan)
            for j in range(2):
                shift = np.zeros(2)
                shift[j] = q[j]
                diff = periodic_green(pts + shift, env, cell, plan) - base
                worst = max(worst, float(np.max(np.abs(diff))))
    return worst, 1e-9, _fingerprint(tol=1e-10)


def _check_green_symmetry(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for edges in CELLS:
        cell = build_cell(edges)
        for omega in OMEGAS:
            env = LameEnv(2, omega)
            plan = plan_lattice_sum(cell, env, 1e-10)
            pts = _off_lattice_points(cell, 50, rng)
            G = periodic_green(pts, env, cell, plan)
            worst = max(worst, float(np.max(np.abs(G - np.swapaxes(G, -1, -2)))))
    return worst, 1e-9, _fingerprint(tol=1e-10)


def _check_green_decomposition(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for edges in CELLS:
        cell = build_cell(edges)
        for omega in OMEGAS:
            env = LameEnv(2, omega)
            plan = plan_lattice_sum(cell, env, 1e-13)
            pts = _off_lattice_points(cell, 20, rng, min_frac=0.1)
            ref = periodic_green(pts, env, cell, plan)
            split = np.stack([kelvin(p, env) for p in pts]) + regular_part(
                pts, env, cell, plan
            )
            worst = max(worst, float(np.max(np.abs(ref - split))))
    return worst, 1e-12, _fingerprint(tol=1e-13)


def _check_remainder_limit(seed):
    """R^q extends to 0: Richardson limit along three directions agrees."""
    worst = 0.0
    for edges in CELLS:
        cell = build_cell(edges)
        for omega in OMEGAS:
            env = LameEnv(2, omega)
            plan = plan_lattice_sum(cell, env, 1e-13)
            r0 = regular_part(np.zeros(2), env, cell, plan)
            for theta in (0.0, 1.1, 2.3):
                u = np.array([np.cos(theta), np.sin(theta)])
                vals = [
                    regular_part(h * u, env, cell, plan)
                    for h in (1e-2, 5e-3, 2.5e-3)
                ]
                # the remainder is even in x, so the limit is second order in h
                extrap = (4.0 * vals[2] - vals[1]) / 3.0
                worst = max(worst, float(np.max(np.abs(extrap - r0))))
    return worst, 1e-8, _fingerprint(tol=1e-13)


def _check_pde_residual(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    decay_ok = True
    for edges in CELLS:
        cell = build_cell(edges)
        for omega in OMEGAS:
            env = LameEnv(2, omega)
            plan = plan_lattice_sum(cell, env, 1e-13)
            pts = _off_lattice_points(cell, 10, rng, min_frac=0.25)
            res = [pde_residual(p, 0, env, cell, plan, h=1e-3) for p in pts]
            worst = max(worst, max(res))
            for j, p in zip((0, 1, 0, 1), pts):
                worst = max(worst, pde_residual(p, j, env, cell, plan, h=1e-3))
            # decay probed at the largest-residual point, stencils wide enough
            # that every level stays above the rounding floor
            probe = pts[int(np.argmax(res))]
            levels = [
                pde_residual(probe, 0, env, cell, plan, h=h)
                for h in (1.6e-2, 8e-3, 4e-3)
            ]
            if not (levels[0] > 8 * levels[1] and levels[1] > 8 * levels[2]):
                decay_ok = False
    err = worst if decay_ok else np.inf
    return err, 1e-6, _fingerprint(tol=1e-13)


def _check_scalar_limit(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for edges in CELLS:
        cell = build_cell(edges)
        env = LameEnv(2, 1e-8)
        plan = plan_lattice_sum(cell, env, 1e-10)
        pts = _off_lattice_points(cell, 20, rng)
        G = periodic_green(pts, env, cell, plan)
        s = scalar_periodic_green(pts, cell)
        worst = max(worst, float(np.max(np.abs(G[:, 0, 0] - s))))
        worst = max(worst, float(np.max(np.abs(G[:, 1, 1] - s))))
    return worst, 1e-6, _fingerprint(tol=1e-10)


def _check_green_gradient(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    h = 1e-5
    for edges in CELLS:
        cell = build_cell(edges)
        for omega in OMEGAS:
            env = LameEnv(2, omega)
            plan = plan_lattice_sum(cell, env, 1e-12)
            pts = _off_lattice_points(cell, 10, rng, min_frac=0.2)
            for p in pts:
                g = periodic_green_grad(p, env, cell, plan)
                fd = np.zeros((2, 2, 2))
                for m in range(2):
                    e = np.zeros(2)
                    e[m] = h
                    fd[:, :, m] = (
                        periodic_green(p + e, env, cell, plan)
                        - periodic_green(p - e, env, cell, plan)
                    ) / (2 * h)
                worst = max(worst, float(np.max(np.abs(g - fd))))
    return worst, 1e-7, _fingerprint(tol=1e-12)


def _check_integral_identity(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    cell = build_cell((1.0, 1.0))
    env = LameEnv(2, 1.0)
    plan = plan_lattice_sum(cell, env, 1e-11)
    for kind in ("circle", "ellipse"):
        curve = standard_curve(kind, cell, 128)
        W = assemble_wstar(curve, env, cell, plan)
        factor = 0.5 - hole_area(curve) / cell.volume
        for _ in range(10):
            mu = _trig_density(curve, rng)
            lhs = boundary_integral(W.apply(mu), curve)
            rhs = factor * boundary_integral(mu, curve)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst, 1e-8, _fingerprint(
        cell=cell, omega=1.0, curve="circle+ellipse", N=128, tol=1e-11
    )


def _check_jump_relation(seed):
    cell = build_cell((1.0, 1.0))
    env = LameEnv(2, 1.0)
    plan = plan_lattice_sum(cell, env, 1e-11)
    N = 256
    curve = discretize_curve(CircleShape((0.5, 0.5), 0.2), N, cell)
    W = assemble_wstar(curve, env, cell, plan)
    t = curve.params
    mu_vals = np.column_stack([0.5 + 0.3 * np.cos(t), 0.4 * np.sin(t)])
    mu = BoundaryVectorField(mu_vals, curve)
    target = -0.5 * mu_vals + W.apply(mu).values
    h = np.max(curve.weights)
    vals = []
    for mfac in (1.0, 2.0, 4.0):
        pts = curve.nodes - mfac * h * curve.normals
        vals.append(
            eval_traction_offboundary(
                pts, curve.normals, mu, env, cell, plan, upsample=4, warn=False
            )
        )
    extrap = (8.0 * vals[0] - 6.0 * vals[1] + vals[2]) / 3.0
    err = float(np.max(np.abs(extrap - target)))
    return err, 1e-6, _fingerprint(cell=cell, omega=1.0, curve="circle", N=N, tol=1e-11)


def _check_single_layer_periodicity(seed):
    rng = np.random.default_rng(seed)
    cell = build_cell((1.0, 1.0))
    env = LameEnv(2, 0.5)
    plan = plan_lattice_sum(cell, env, 1e-11)
    curve = standard_curve("ellipse", cell, 128)
    mu = _trig_density(curve, rng)
    pts = []
    while len(pts) < 10:
        p = rng.uniform(0, 1, size=2)
        from .cell import min_image_distance

        if min_image_distance(p, curve, cell) > 0.1:
            pts.append(p)
    pts = np.asarray(pts)
    base = eval_single_layer(pts, mu, env, cell, plan, warn=False)
    worst = 0.0
    for j, e in enumerate(np.eye(2)):
        shifted = eval_single_layer(
            pts + e * np.asarray(cell.q_diag), mu, env, cell, plan, warn=False
        )
        worst = max(worst, float(np.max(np.abs(shifted - base))))
    return worst, 1e-10, _fingerprint(cell=cell, omega=0.5, curve="ellipse", N=128)


def _check_single_layer_lame(seed):
    """L[omega] v = -(1/|Q|) int mu away from the boundary (relative error)."""
    rng = np.random.default_rng(seed)
    cell = build_cell((1.0, 1.0))
    env = LameEnv(2, 1.0)
    plan = plan_lattice_sum(cell, env, 1e-13)
    curve = standard_curve("circle", cell, 128)
    mu = _trig_density(curve, rng)
    mu.values[:, 0] += 1.0  # ensure a nonzero mean load
    total = boundary_integral(mu, curve)
    target = -total / cell.volume
    scale = float(np.max(np.abs(target)))
    worst = 0.0
    for p in ([0.08, 0.1], [0.9, 0.85], [0.1, 0.9]):
        lam = lame_apply_fd(
            lambda pts: eval_single_layer(pts, mu, env, cell, plan, warn=False),
            np.asarray(p),
            env.omega,
            1e-3,
        )
        worst = max(worst, float(np.max(np.abs(lam - target))) / scale)
    return worst, 1e-5, _fingerprint(cell=cell, omega=1.0, curve="circle", N=128)


def _check_aux_roundtrip(seed):
    rng = np.random.default_rng(seed)
    cell = build_cell((1.0, 1.0))
    env = LameEnv(2, 4.0)
    plan = plan_lattice_sum(cell, env, 1e-11)
    curve = standard_curve("perturbed", cell, 128)
    W = assemble_wstar(curve, env, cell, plan)
    worst = 0.0
    for _ in range(5):
        psi = _trig_density(curve, rng)
        mu = solve_neumann_aux(psi, curve, env, cell, plan, wstar=W)
        res = 0.5 * mu.values + W.apply(mu).values - psi.values
        worst = max(worst, float(np.max(np.abs(res))))
    return worst, 1e-11, _fingerprint(cell=cell, omega=4.0, curve="perturbed", N=128)


def _check_aux_mean_identity(seed):
    rng = np.random.default_rng(seed)
    cell = build_cell((1.0, 1.0))
    env = LameEnv(2, 0.5)
    plan = plan_lattice_sum(cell, env, 1e-11)
    curve = standard_curve("circle", cell, 128)
    W = assemble_wstar(curve, env, cell, plan)
    factor = 1.0 - hole_area(curve) / cell.volume
    worst = 0.0
    for _ in range(5):
        psi = _trig_density(curve, rng)
        mu = solve_neumann_aux(psi, curve, env, cell, plan, wstar=W)
        lhs = boundary_integral(psi, curve)
        rhs = factor * boundary_integral(mu, curve)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst, 1e-8, _fingerprint(cell=cell, omega=0.5, curve="circle", N=128)


def _check_representation(seed):
    rng = np.random.default_rng(seed)
    cell = build_cell((1.0, 1.0))
    env = LameEnv(2, 1.0)
    plan = plan_lattice_sum(cell, env, 1e-11)
    curve = standard_curve("circle", cell, 128)
    V = assemble_single_layer(curve, env, cell, plan)
    W = assemble_wstar(curve, env, cell, plan)
    mu0 = _trig_density(curve, rng)
    mean = boundary_integral(mu0, curve) / np.sum(curve.weights)
    mu0.values -= mean[None, :]  # zero-mean representative
    c0 = rng.normal(size=2)
    v_bdry = V.apply(mu0).values

    def u_fn(pts):
        pts = np.atleast_2d(pts)
        if pts.shape == curve.nodes.shape and np.allclose(pts, curve.nodes):
            return v_bdry + c0[None, :]
        return eval_single_layer(pts, mu0, env, cell, plan, warn=False) + c0[None, :]

    def trac_fn(pts, normals):
        return 0.5 * mu0.values + W.apply(mu0).values

    mu_rec, c_rec, report = representation_roundtrip(
        u_fn, trac_fn, curve, env, cell, plan
    )
    err = max(
        float(np.max(np.abs(mu_rec.values - mu0.values))),
        float(np.max(np.abs(c_rec - c0))),
    )
    return err, 1e-9, _fingerprint(cell=cell, omega=1.0, curve="circle", N=128)


def _sources_field(env, cell, plan, x0, x1, dvec, cstar=None, B=None):
    """Difference-of-sources field with optional constant and drift parts."""
    x0 = np.asarray(x0)
    x1 = np.asarray(x1)
    dvec = np.asarray(dvec)
    cstar = np.zeros(2) if cstar is None else np.asarray(cstar)
    B = np.zeros((2, 2)) if B is None else np.asarray(B)
    Bq = B @ cell.q_inv

    def u_fn(pts):
        pts = np.atleast_2d(pts)
        out = np.einsum("pjk,k->pj", periodic_green(pts - x0, env, cell, plan), dvec)
        out -= np.einsum("pjk,k->pj", periodic_green(pts - x1, env, cell, plan), dvec)
        return out + cstar[None, :] + pts @ Bq.T

    def trac_fn(pts, normals):
        pts = np.atleast_2d(pts)
        Du = np.einsum(
            "pjkm,k->pjm", periodic_green_grad(pts - x0, env, cell, plan), dvec
        )
        Du -= np.einsum(
            "pjkm,k->pjm", periodic_green_grad(pts - x1, env, cell, plan), dvec
        )
        Du += Bq[None, :, :]
        return np.einsum("pjm,pm->pj", traction_map(env.omega, Du), normals)

    return u_fn, trac_fn


def _manufactured_error(env, cell, plan, N, rng):
    curve = discretize_curve(CircleShape((0.5, 0.5), 0.25), N, cell)
    u_fn, trac_fn = _sources_field(
        env, cell, plan, (0.31, 0.5), (0.68, 0.54), (1.0, 1.0)
    )
    g = BoundaryVectorField(
        trac_fn(curve.nodes, curve.normals) - u_fn(curve.nodes), curve
    )
    data = RobinData(
        a=constant_matrix_field(np.eye(2), curve),
        b=constant_matrix_field(-np.eye(2), curve),
        g=g,
        B=np.zeros((2, 2)),
    )
    rep = solve_robin(data, curve, env, cell, plan)
    pts = []
    while len(pts) < 20:
        p = rng.uniform(0, 1, size=2)
        if np.linalg.norm(p - [0.5, 0.5]) > 0.37:
            pts.append(p)
    pts = np.asarray(pts)
    u_num = eval_solution(rep, pts, env, cell, plan, warn=False)
    return float(np.max(np.abs(u_num - u_fn(pts))))


def _check_robin_exact(seed):
    cell = build_cell((1.0, 1.0))
    env = LameEnv(2, 1.0)
    plan = plan_lattice_sum(cell, env, 1e-11)
    curve = standard_curve("circle", cell, 64)
    cstar = np.array([0.3, -0.7])
    data = RobinData(
        a=constant_matrix_field(np.eye(2), curve),
        b=constant_matrix_field(-np.eye(2), curve),
        g=constant_vector_field(-cstar, curve),
        B=np.zeros((2, 2)),
    )
    rep = solve_robin(data, curve, env, cell, plan)
    err = max(
        float(np.max(np.abs(rep.mu.values))), float(np.max(np.abs(rep.c - cstar)))
    )
    B = np.diag([0.2, -0.1])
    Bq = B @ cell.q_inv
    gvals = curve.normals @ traction_map(env.omega, Bq).T - curve.nodes @ Bq.T
    data2 = RobinData(
        a=constant_matrix_field(np.eye(2), curve),
        b=constant_matrix_field(-np.eye(2), curve),
        g=BoundaryVectorField(gvals, curve),
        B=B,
    )
    rep2 = solve_robin(data2, curve, env, cell, plan)
    pts = np.array([[0.1, 0.1], [0.9, 0.2], [0.5, 0.95]])
    u = eval_solution(rep2, pts, env, cell, plan, warn=False)
    err = max(err, float(np.max(np.abs(u - pts @ Bq.T))))
    return err, 1e-9, _fingerprint(cell=cell, omega=1.0, curve="circle", N=64)


def _check_robin_homogeneous(seed):
    cell = build_cell((1.0, 1.0))
    env = LameEnv(2, 4.0)
    plan = plan_lattice_sum(cell, env, 1e-11)
    curve = standard_curve("ellipse", cell, 64)
    data = RobinData(
        a=constant_matrix_field(np.eye(2), curve),
        b=constant_matrix_field(-np.eye(2), curve),
        g=constant_vector_field((0.0, 0.0), curve),
        B=np.zeros((2, 2)),
    )
    rep = solve_robin(data, curve, env, cell, plan)
    err = float(np.max(np.abs(rep.mu.values))) + float(np.max(np.abs(rep.c)))
    return err, 1e-10, _fingerprint(cell=cell, omega=4.0, curve="ellipse", N=64)


def _check_robin_manufactured(seed):
    rng = np.random.default_rng(seed)
    cell = build_cell((1.0, 1.0))
    env = LameEnv(2, 1.0)
    plan = plan_lattice_sum(cell, env, 1e-12)
    errs = {N: _manufactured_error(env, cell, plan, N, rng) for N in (64, 128, 256)}
    ratio = errs[64] / max(errs[256], 1e-16)
    err = errs[128] if ratio >= 100.0 else np.inf
    return err, 1e-8, _fingerprint(cell=cell, omega=1.0, curve="circle", N=128, tol=1e-12)


def _check_quasi_periodicity(seed):
    cell = build_cell((1.0, 1.0))
    env = LameEnv(2, 0.5)
    plan = plan_lattice_sum(cell, env, 1e-11)
    curve = standard_curve("circle", cell, 64)
    B = np.array([[0.3, 0.1], [-0.2, 0.25]])
    Bq = B @ cell.q_inv
    gvals = curve.normals @ traction_map(env.omega, Bq).T - curve.nodes @ Bq.T
    data = RobinData(
        a=constant_matrix_field(np.eye(2), curve),
        b=constant_matrix_field(-np.eye(2), curve),
        g=BoundaryVectorField(gvals, curve),
        B=B,
    )
    rep = solve_robin(data, curve, env, cell, plan)
    pts = np.array([[0.07, 0.12], [0.88, 0.9], [0.5, 0.03]])
    base = eval_solution(rep, pts, env, cell, plan, warn=False)
    worst = 0.0
    for j, e in enumerate(np.eye(2)):
        shifted = eval_solution(
            rep, pts + e * np.asarray(cell.q_diag), env, cell, plan, warn=False
        )
        worst = max(worst, float(np.max(np.abs(shifted - base - B[:, j][None, :]))))
    return worst, 1e-10, _fingerprint(cell=cell, omega=0.5, curve="circle", N=64)


def _check_nonlinear_equivalence(seed):
    from .nonlinear import affine_model, solve_nonlinear_robin

    rng = np.random.default_rng(seed)
    cell = build_cell((1.0, 1.0))
    env = LameEnv(2, 1.0)
    plan = plan_lattice_sum(cell, env, 1e-11)
    curve = standard_curve("circle", cell, 64)
    t = curve.params
    gvals = np.column_stack([0.2 + 0.1 * np.cos(t), -0.3 + 0.2 * np.sin(2 * t)])
    b = -np.eye(2)
    B = np.diag([0.1, -0.05])
    data = RobinData(
        a=constant_matrix_field(np.eye(2), curve),
        b=constant_matrix_field(b, curve),
        g=BoundaryVectorField(gvals, curve),
        B=B,
    )
    rep_lin = solve_robin(data, curve, env, cell, plan)
    model = affine_model(-b, gvals, curve)
    rep_nl = solve_nonlinear_robin(model, B, curve, env, cell, plan, method="newton")
    err = max(
        float(np.max(np.abs(rep_lin.mu.values - rep_nl.mu.values))),
        float(np.max(np.abs(rep_lin.c - rep_nl.c))),
    )
    return err, 1e-9, _fingerprint(cell=cell, omega=1.0, curve="circle", N=64)


def _check_nonlinear_manufactured(seed):
    from .nonlinear import solve_nonlinear_robin, tabulated_model

    rng = np.random.default_rng(seed)
    cell = build_cell((1.0, 1.0))
    env = LameEnv(2, 1.0)
    plan = plan_lattice_sum(cell, env, 1e-12)
    N = 128
    curve = discretize_curve(CircleShape((0.5, 0.5), 0.25), N, cell)
    cstar = np.array([0.2, -0.4])
    B = np.diag([0.15, -0.1])
    u_fn, trac_fn = _sources_field(
        env, cell, plan, (0.31, 0.5), (0.68, 0.54), (1.0, 1.0), cstar=cstar, B=B
    )
    tstar = trac_fn(curve.nodes, curve.normals)
    ustar = u_fn(curve.nodes)
    lam = -np.eye(2)
    model = tabulated_model(
        lambda i, u: tstar[i] + lam @ (u - ustar[i]), lambda i, u: lam
    )
    rep = solve_nonlinear_robin(
        model, B, curve, env, cell, plan, method="picard", max_iter=30, tol=1e-12
    )
    pts = []
    while len(pts) < 20:
        p = rng.uniform(0, 1, size=2)
        if np.linalg.norm(p - [0.5, 0.5]) > 0.37:
            pts.append(p)
    pts = np.asarray(pts)
    u_num = eval_solution(rep, pts, env, cell, plan, warn=False)
    err = float(np.max(np.abs(u_num - u_fn(pts))))
    if rep.diagnostics["iterations"] > 30:
        err = np.inf
    return err, 1e-7, _fingerprint(cell=cell, omega=1.0, curve="circle", N=N, tol=1e-12)


def _check_nonlinear_degeneracy(seed):
    from .nonlinear import solve_nonlinear_robin, tabulated_model

    cell = build_cell((1.0, 1.0))
    env = LameEnv(2, 1.0)
    plan = plan_lattice_sum(cell, env, 1e-11)
    curve = standard_curve("circle", cell, 64)
    model = tabulated_model(
        lambda i, u: np.zeros(2), lambda i, u: np.zeros((2, 2))
    )
    try:
        solve_nonlinear_robin(model, np.zeros((2, 2)), curve, env, cell, plan)
    except DegenerateProblemError:
        return 0.0, 0.5, _fingerprint(cell=cell, omega=1.0, curve="circle", N=64)
    return np.inf, 0.5, _fingerprint(cell=cell, omega=1.0, curve="circle", N=64)


def _check_data_validation(seed):
    cell = build_cell((1.0, 1.0))
    curve = standard_curve("circle", cell, 64)
    failures = 0
    # each admissibility condition violated by a dedicated fixture
    cases = [
        (np.zeros((2, 2)), -np.eye(2), "invertibility-of-a"),
        (np.eye(2), np.eye(2), "negativity-of-ainv-b"),
        (np.eye(2), np.zeros((2, 2)), None),  # fails integral or pointwise check
    ]
    for a, b, expect in cases:
        data = RobinData(
            a=constant_matrix_field(a, curve),
            b=constant_matrix_field(b, curve),
            g=constant_vector_field((0.0, 0.0), curve),
            B=np.zeros((2, 2)),
        )
        try:
            validate_robin_data(data, curve)
        except AdmissibilityError as exc:
            if expect is None or exc.condition == expect:
                failures += 1
    good = RobinData(
        a=constant_matrix_field(np.eye(2), curve),
        b=constant_matrix_field(-np.eye(2), curve),
        g=constant_vector_field((0.0, 0.0), curve),
        B=np.zeros((2, 2)),
    )
    validate_robin_data(good, curve)
    err = 0.0 if failures == 3 else np.inf
    return err, 0.5, _fingerprint(cell=cell, curve="circle", N=64)


REGISTRY = {
    "green-oracle-agreement": ("lattice series definition", _check_green_oracle),
    "green-evenness": ("matrix even in x", _check_green_evenness),
    "green-lattice-periodicity": ("translation invariance", _check_green_periodicity),
    "green-matrix-symmetry": ("entrywise symmetry", _check_green_symmetry),
    "green-kelvin-decomposition": ("smooth remainder split", _check_green_decomposition),
    "remainder-finite-at-zero": ("remainder limit at origin", _check_remainder_limit),
    "green-pde-residual": ("unit sources with uniform background", _check_pde_residual),
    "green-scalar-limit": ("harmonic limit of the diagonal", _check_scalar_limit),
    "green-gradient": ("analytic gradient vs differences", _check_green_gradient),
    "wstar-integral-identity": ("traction operator mean identity", _check_integral_identity),
    "traction-jump-relation": ("one-sided traction jump", _check_jump_relation),
    "single-layer-periodicity": ("potential is cell-periodic", _check_single_layer_periodicity),
    "single-layer-load-balance": ("uniform body load of the potential", _check_single_layer_lame),
    "aux-operator-roundtrip": ("second-kind solve residual", _check_aux_roundtrip),
    "aux-mean-identity": ("integrated second-kind identity", _check_aux_mean_identity),
    "representation-roundtrip": ("density-plus-constant recovery", _check_representation),
    "robin-exact-solutions": ("constant and linear exact fields", _check_robin_exact),
    "robin-homogeneous-uniqueness": ("zero data gives zero solution", _check_robin_homogeneous),
    "robin-manufactured-convergence": ("two-source manufactured field", _check_robin_manufactured),
    "robin-quasi-periodicity": ("prescribed drift across the cell", _check_quasi_periodicity),
    "nonlinear-affine-equivalence": ("affine law matches linear solver", _check_nonlinear_equivalence),
    "nonlinear-manufactured": ("constructed nonlinear solution", _check_nonlinear_manufactured),
    "nonlinear-degeneracy-report": ("unconstrained constant detected", _check_nonlinear_degeneracy),
    "data-admissibility-rejections": ("solvability conditions enforced", _check_data_validation),
}


def run_property_suite(names=None, seed=0):
    """Run the registered property checks; failures are reported, not raised."""
    reports = []
    selected = names if names is not None else list(REGISTRY)
    for name in selected:
        anchor, runner = REGISTRY[name]
        try:
            err, tol, fp = runner(seed)
        except Exception as exc:  # report, never throw: the report is the product
            reports.append(
                OracleReport(
                    name=name,
                    anchor=anchor,
                    max_error=float("inf"),
                    tolerance=0.0,
                    passed=False,
                    fingerprint=f"exception: {type(exc).__name__}: {exc}",
                )
            )
            continue
        reports.append(OracleReport.from_error(name, anchor, err, tol, fp))
    return reports


def convergence_study(error_at, N_list):
    """Errors of a manufactured-solution problem across resolutions.

    error_at(N) must return the measured error; the fitted rate is the least
    squares slope of log2(error) against log2(N) over entries above 1e-14.
    """
    rows = [(int(N), float(error_at(N))) for N in N_list]
    pts = [(np.log2(N), np.log2(e)) for N, e in rows if e > 1e-14]
    rate = 0.0
    if len(pts) >= 2:
        xs, ys = np.array(pts).T
        rate = float(np.polyfit(xs, ys, 1)[0])
    return {"rows": rows, "rate": rate}
