"""Linear Robin traction solver: validation, augmented system, field evaluation.

The collocated integral equation at the nodes is

    (1/2) mu(x_i) + W* mu(x_i) + a^{-1}(x_i) b(x_i) (V mu(x_i) + c)
        = a^{-1} g(x_i) - T(omega, B q^{-1}) nu(x_i) - a^{-1} b B q^{-1} x_i,

closed by the componentwise zero-mean constraint on mu.  The square system of
size (2N + 2) determines the zero-mean density together with the additive
constant c, and the displacement is reconstructed as
u(x) = v[mu](x) + c + B q^{-1} x.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .cell import point_in_hole
from .errors import AdmissibilityError, DomainError, SolveError
from .kernels import traction_map
from .operators import (
    BoundaryMatrixField,
    BoundaryVectorField,
    assemble_single_layer,
    assemble_wstar,
    boundary_integral,
    eval_single_layer,
)

COND_LIMIT = 1e13


@dataclass
class RobinData:
    """Nodal Robin coefficients a, b, datum g and the drift matrix B."""

    a: BoundaryMatrixField
    b: BoundaryMatrixField
    g: BoundaryVectorField
    B: np.ndarray

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=float)
        if self.B.shape != (2, 2):
            raise ValueError("drift matrix B must be 2x2")

    @property
    def curve(self):
        return self.a.curve

    def resample(self, N):
        curve2 = self.curve.resample(N)
        return RobinData(
            a=self.a.resample(N, curve2),
            b=self.b.resample(N, curve2),
            g=self.g.resample(N, curve2),
            B=self.B,
        )


def constant_matrix_field(M, curve):
    vals = np.broadcast_to(np.asarray(M, dtype=float), (curve.N, 2, 2)).copy()
    return BoundaryMatrixField(vals, curve)


def constant_vector_field(v, curve):
    vals = np.broadcast_to(np.asarray(v, dtype=float), (curve.N, 2)).copy()
    return BoundaryVectorField(vals, curve)


@dataclass
class SolutionRep:
    """Zero-mean density, additive constant, prescribed drift and diagnostics."""

    mu: BoundaryVectorField
    c: np.ndarray
    B: np.ndarray
    diagnostics: dict = field(default_factory=dict)


@dataclass
class DiscreteSystem:
    """Dense augmented system; rows/columns are node-major with c appended."""

    matrix: np.ndarray
    rhs: np.ndarray
    layout: str = (
        "rows 0..2N-1: collocation at nodes (node-major components); "
        "rows 2N..2N+1: zero-mean constraint; "
        "cols 0..2N-1: mu unknowns; cols 2N..2N+1: c"
    )


def validate_robin_data(data, curve=None, det_tol=1e-12, semidef_tol=1e-10):
    """Check the three admissibility conditions on (a, b) node by node.

    Returns a diagnostics dict; raises AdmissibilityError naming the first
    failed condition.  Tolerances are relative to the max matrix norm over the
    nodes ('scale'), squared where the compared quantity is a determinant.
    """
    curve = curve if curve is not None else data.curve
    a = data.a.values
    b = data.b.values
    if data.a.curve is not curve or data.b.curve is not curve or data.g.curve is not curve:
        raise AdmissibilityError("sampling", "fields sampled on different curves")

    scale_a = max(np.max(np.linalg.norm(a, axis=(1, 2))), 1e-300)
    scale_b = max(np.max(np.linalg.norm(b, axis=(1, 2))), 1e-300)

    det_a = np.linalg.det(a)
    worst_det = int(np.argmin(np.abs(det_a)))
    if np.min(np.abs(det_a)) <= det_tol * scale_a**2:
        raise AdmissibilityError(
            "invertibility-of-a",
            f"det a vanishes at node {worst_det}: {det_a[worst_det]:.3e}",
        )

    ainv = np.linalg.inv(a)
    ainv_b = np.einsum("nij,njk->nik", ainv, b)
    sym = 0.5 * (ainv_b + np.swapaxes(ainv_b, 1, 2))
    eigs = np.linalg.eigvalsh(sym)
    max_eig = float(np.max(eigs))
    worst_node = int(np.argmax(np.max(eigs, axis=1)))
    scale_ab = max(np.max(np.linalg.norm(ainv_b, axis=(1, 2))), 1e-300)
    if max_eig > semidef_tol * scale_ab:
        raise AdmissibilityError(
            "negativity-of-ainv-b",
            f"symmetric part of a^-1 b not negative semidefinite at node "
            f"{worst_node}: max eigenvalue {max_eig:.3e}",
        )

    integral = np.einsum("n,nij->ij", curve.weights, ainv_b)
    det_integral = float(np.linalg.det(integral))
    scale_int = max(np.linalg.norm(integral), 1e-300)
    cond_integral = float(np.linalg.cond(integral)) if det_integral != 0.0 else np.inf
    if abs(det_integral) <= det_tol * scale_int**2:
        raise AdmissibilityError(
            "invertibility-of-integral",
            f"det of the boundary integral of a^-1 b is {det_integral:.3e}",
        )

    det_b = np.linalg.det(b)
    best_b = int(np.argmax(np.abs(det_b)))
    if np.max(np.abs(det_b)) <= det_tol * scale_b**2:
        raise AdmissibilityError(
            "pointwise-invertibility-of-b",
            f"det b vanishes at every node (best |det| = {np.abs(det_b[best_b]):.3e})",
        )

    return {
        "min_abs_det_a": float(np.min(np.abs(det_a))),
        "max_eig_sym_ainv_b": max_eig,
        "det_integral_ainv_b": det_integral,
        "cond_integral_ainv_b": cond_integral,
        "max_abs_det_b": float(np.max(np.abs(det_b))),
    }


def robin_rhs(data, env, cell):
    """Collocated right-hand side of the integral equation."""
    curve = data.curve
    ainv = np.linalg.inv(data.a.values)
    ainv_b = np.einsum("nij,njk->nik", ainv, data.b.values)
    Bq = data.B @ cell.q_inv
    t_drift = traction_map(env.omega, Bq)
    rhs = np.einsum("nij,nj->ni", ainv, data.g.values)
    rhs -= curve.normals @ t_drift.T
    rhs -= np.einsum("nij,nj->ni", ainv_b, curve.nodes @ Bq.T)
    return rhs


def assemble_robin_system(data, curve, env, cell, plan, operators=None):
    """Augmented (2N+2)-square system realizing the collocated equation."""
    N = curve.N
    if operators is None:
        V = assemble_single_layer(curve, env, cell, plan)
        W = assemble_wstar(curve, env, cell, plan)
    else:
        V, W = operators
    ainv = np.linalg.inv(data.a.values)
    ainv_b = np.einsum("nij,njk->nik", ainv, data.b.values)

    AB = np.zeros((2 * N, 2 * N))
    for i in range(N):
        AB[2 * i: 2 * i + 2, 2 * i: 2 * i + 2] = ainv_b[i]

    top = 0.5 * np.eye(2 * N) + W.matrix + AB @ V.matrix
    c_cols = np.zeros((2 * N, 2))
    for i in range(N):
        c_cols[2 * i: 2 * i + 2, :] = ainv_b[i]

    constraint = np.zeros((2, 2 * N))
    constraint[0, 0::2] = curve.weights
    constraint[1, 1::2] = curve.weights

    matrix = np.block([[top, c_cols], [constraint, np.zeros((2, 2))]])
    rhs = np.concatenate([robin_rhs(data, env, cell).reshape(-1), np.zeros(2)])
    return DiscreteSystem(matrix=matrix, rhs=rhs)


def _condition_estimate(lu, piv, matrix):
    anorm = np.linalg.norm(matrix, 1)
    gecon = sla.get_lapack_funcs("gecon", (matrix,))
    rcond, _ = gecon(lu, anorm, norm="1")
    return np.inf if rcond == 0.0 else 1.0 / rcond


def solve_robin(data, curve, env, cell, plan, operators=None, validate=True):
    """Solve the linear Robin problem; returns the (mu, c, B) representation.

    Dense LU with partial pivoting; a 1-norm condition estimate above 1e13
    raises SolveError since the solvability conditions are then violated
    beyond numerical tolerance.
    """
    diagnostics = {}
    if validate:
        diagnostics.update(validate_robin_data(data, curve))
    system = assemble_robin_system(data, curve, env, cell, plan, operators=operators)
    lu, piv = sla.lu_factor(system.matrix)
    cond = _condition_estimate(lu, piv, system.matrix)
    diagnostics["condition_estimate"] = float(cond)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SolveError(
            f"discrete system numerically singular (condition estimate {cond:.3e}); "
            "the admissibility conditions on (a, b) are likely violated beyond tolerance"
        )
    sol = sla.lu_solve((lu, piv), system.rhs)
    mu_vals = sol[:-2].reshape(-1, 2)
    c = sol[-2:]
    mu = BoundaryVectorField(mu_vals, curve)

    residual = system.matrix @ sol - system.rhs
    diagnostics["residual_on_node"] = float(np.max(np.abs(residual[:-2])))
    diagnostics["zero_mean_violation"] = float(
        np.max(np.abs(boundary_integral(mu, curve)))
    )
    diagnostics["residual_off_node"] = _off_node_residual(
        data, curve, env, cell, plan, mu, c
    )
    rep = SolutionRep(mu=mu, c=c, B=data.B, diagnostics=diagnostics)
    return rep


def _off_node_residual(data, curve, env, cell, plan, mu, c):
    """Collocation residual at the N midpoints via exact trig resampling."""
    N2 = 2 * curve.N
    fine = data.resample(N2)
    mu_fine = mu.resample(N2)
    curve2 = fine.curve
    V2 = assemble_single_layer(curve2, env, cell, plan)
    W2 = assemble_wstar(curve2, env, cell, plan)
    ainv = np.linalg.inv(fine.a.values)
    ainv_b = np.einsum("nij,njk->nik", ainv, fine.b.values)
    lhs = 0.5 * mu_fine.values + W2.apply(mu_fine).values
    vmu = V2.apply(mu_fine).values + c[None, :]
    lhs += np.einsum("nij,nj->ni", ainv_b, vmu)
    rhs = robin_rhs(fine, env, cell)
    res = lhs - rhs
    return float(np.max(np.abs(res[1::2])))  # odd fine nodes = coarse midpoints


def eval_solution(rep, x, env, cell, plan, warn=True):
    """Displacement u(x) = v[mu](x) + c + B q^{-1} x on the perforated domain."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    curve = rep.mu.curve
    for p in pts:
        if point_in_hole(p, curve, cell):
            raise DomainError(f"point {p} lies inside a hole image")
    v = eval_single_layer(pts, rep.mu, env, cell, plan, warn=warn)
    Bq = rep.B @ cell.q_inv
    out = v + rep.c[None, :] + pts @ Bq.T
    return out[0] if single else out


def solve_neumann_aux(psi, curve, env, cell, plan, wstar=None):
    """Solve (1/2 I + W*) mu = psi; the operator is invertible on the curve."""
    W = wstar if wstar is not None else assemble_wstar(curve, env, cell, plan)
    A = 0.5 * np.eye(2 * curve.N) + W.matrix
    lu, piv = sla.lu_factor(A)
    cond = _condition_estimate(lu, piv, A)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SolveError(
            f"auxiliary operator numerically singular (condition {cond:.3e}); "
            "this indicates an assembly defect, not admissible data"
        )
    sol = sla.lu_solve((lu, piv), psi.values.reshape(-1))
    mu = BoundaryVectorField(sol.reshape(-1, 2), curve)
    return mu


def representation_roundtrip(u_fn, traction_fn, curve, env, cell, plan, test_points=None):
    """Recover (mu, c) of a periodic homogeneous field from its boundary data.

    u_fn(points) returns field values; traction_fn(points, normals) returns
    the material-side traction.  The density solves the second-kind system
    with the traction data and c matches the boundary values; the
    reconstruction error at the supplied test points is reported.
    """
    psi = BoundaryVectorField(traction_fn(curve.nodes, curve.normals), curve)
    mu = solve_neumann_aux(psi, curve, env, cell, plan)
    u_bdry = u_fn(curve.nodes)
    v_bdry_op = assemble_single_layer(curve, env, cell, plan)
    v_bdry = v_bdry_op.apply(mu).values
    c_samples = u_bdry - v_bdry
    c = np.mean(c_samples, axis=0)
    report = {
        "c_spread": float(np.max(np.abs(c_samples - c[None, :]))),
        "mean_mu": float(np.max(np.abs(boundary_integral(mu, curve)))),
    }
    if test_points is not None:
        rec = eval_single_layer(test_points, mu, env, cell, plan, warn=False) + c[None, :]
        report["reconstruction_error"] = float(
            np.max(np.abs(rec - u_fn(np.atleast_2d(test_points))))
        )
    return mu, c, report
