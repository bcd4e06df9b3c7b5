"""Nonlinear Robin traction problems via Picard / Newton iteration.

The residual of the augmented system in (mu, c) is

    F(mu, c) = (1/2) mu + W* mu - G(., V mu + c + B q^{-1} x) + T(omega, B q^{-1}) nu
    plus the componentwise zero-mean constraint on mu.

Newton rebuilds the Jacobian (1/2) I + W* - diag(dG) [V | 1] every step;
Picard freezes it at the initial iterate and refactors once.  A Jacobian
whose smallest singular value vanishes (e.g. G independent of u with B = 0,
leaving c unconstrained) is reported, never regularized.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceError, DegenerateProblemError
from .kernels import traction_map
from .operators import BoundaryVectorField, assemble_single_layer, assemble_wstar
from .robin import SolutionRep, boundary_integral


@dataclass
class TractionModel:
    """Nodal traction law G(x_i, u) with optional Jacobian in u."""

    kind: str
    fn: Callable  # fn(i, u) -> value (2,)
    jac: Optional[Callable] = None  # jac(i, u) -> (2, 2)

    def value_at_nodes(self, U):
        return np.array([self.fn(i, U[i]) for i in range(U.shape[0])])

    def jac_at_nodes(self, U):
        if self.jac is None:
            return None
        return np.array([self.jac(i, U[i]) for i in range(U.shape[0])])


def affine_model(M, h, curve):
    """G(x_i, u) = M(x_i) u + h(x_i); M constant 2x2 or nodal (N, 2, 2)."""
    M = np.asarray(M, dtype=float)
    h = np.asarray(h, dtype=float)
    N = curve.N
    Mn = np.broadcast_to(M, (N, 2, 2)) if M.ndim == 2 else M
    hn = np.broadcast_to(h, (N, 2)) if h.ndim == 1 else h
    return TractionModel(
        kind="affine",
        fn=lambda i, u: Mn[i] @ u + hn[i],
        jac=lambda i, u: Mn[i],
    )


def saturating_model(h, kappa, curve):
    """G(x_i, u) = h(x_i) + kappa * u / (1 + |u|^2); bounded for all u."""
    h = np.asarray(h, dtype=float)
    N = curve.N
    hn = np.broadcast_to(h, (N, 2)) if h.ndim == 1 else h

    def fn(i, u):
        return hn[i] + kappa * u / (1.0 + u @ u)

    def jac(i, u):
        s = 1.0 + u @ u
        return kappa * (s * np.eye(2) - 2.0 * np.outer(u, u)) / (s * s)

    return TractionModel(kind="saturating", fn=fn, jac=jac)


def tabulated_model(fn, jac=None):
    """User-supplied nodal law fn(i, u) -> (2,) with optional Jacobian."""
    return TractionModel(kind="tabulated", fn=fn, jac=jac)


def apply_model(model, i, u):
    """Evaluate G(x_i, u); returns (value, jacobian-or-None)."""
    u = np.asarray(u, dtype=float)
    val = model.fn(i, u)
    jac = model.jac(i, u) if model.jac is not None else None
    return np.asarray(val, dtype=float), jac


def _drift_traction(curve, env, cell, B):
    Bq = np.asarray(B, dtype=float) @ cell.q_inv
    return curve.normals @ traction_map(env.omega, Bq).T


def solve_nonlinear_robin(
    model,
    B,
    curve,
    env,
    cell,
    plan,
    method="newton",
    damping=1.0,
    max_iter=30,
    tol=1e-11,
    initial=None,
    operators=None,
    rank_tol=1e-12,
):
    """Iterate the augmented residual to a SolutionRep with iteration trace.

    method: 'picard' freezes the Jacobian at the initial iterate, 'newton'
    rebuilds it each step.  Damping halves the update (at most 5 times per
    step) while the residual sup-norm would increase.  Raises
    DegenerateProblemError on a rank-deficient Jacobian and ConvergenceError
    when max_iter steps do not meet tol.
    """
    if model.jac is None:
        raise ValueError("iteration needs a model Jacobian (affine/saturating/tabulated with jac)")
    N = curve.N
    B = np.asarray(B, dtype=float)
    if operators is None:
        V = assemble_single_layer(curve, env, cell, plan)
        W = assemble_wstar(curve, env, cell, plan)
    else:
        V, W = operators

    drift = _drift_traction(curve, env, cell, B)
    bx = curve.nodes @ (B @ cell.q_inv).T
    half_plus_w = 0.5 * np.eye(2 * N) + W.matrix
    constraint = np.zeros((2, 2 * N + 2))
    constraint[0, 0:2 * N:2] = curve.weights
    constraint[1, 1:2 * N:2] = curve.weights

    def residual(mu_flat, c):
        U = (V.matrix @ mu_flat).reshape(N, 2) + c[None, :] + bx
        G = model.value_at_nodes(U)
        res_top = half_plus_w @ mu_flat - G.reshape(-1) + drift.reshape(-1)
        mean = np.array([
            curve.weights @ mu_flat[0::2], curve.weights @ mu_flat[1::2]
        ])
        return np.concatenate([res_top, mean]), U

    def jacobian(U):
        dG = model.jac_at_nodes(U)
        J = np.zeros((2 * N + 2, 2 * N + 2))
        dgv = np.zeros((2 * N, 2 * N))
        dgc = np.zeros((2 * N, 2))
        for i in range(N):
            dgc[2 * i: 2 * i + 2, :] = dG[i]
        for i in range(N):
            dgv[2 * i: 2 * i + 2, :] = dG[i] @ V.matrix[2 * i: 2 * i + 2, :]
        J[: 2 * N, : 2 * N] = half_plus_w - dgv
        J[: 2 * N, 2 * N:] = -dgc
        J[2 * N:, :] = constraint
        return J

    def factor_checked(J):
        smin = sla.svdvals(J)[-1]
        smax = np.linalg.norm(J, 2)
        if smin <= rank_tol * max(smax, 1.0):
            raise DegenerateProblemError(
                "nonlinear system is rank deficient: nothing constrains the "
                "additive constant (smallest singular value "
                f"{smin:.3e}); refusing to invent a solution",
                smallest_singular_value=float(smin),
            )
        return sla.lu_factor(J)

    if initial is None:
        mu_flat = np.zeros(2 * N)
        c = np.zeros(2)
    else:
        mu_flat = initial.mu.values.reshape(-1).copy()
        c = initial.c.copy()

    res, U = residual(mu_flat, c)
    res_norm = np.max(np.abs(res))
    trace = [res_norm]
    frozen = factor_checked(jacobian(U)) if method == "picard" else None

    converged = False
    update_norm = np.inf
    for _ in range(max_iter):
        factors = frozen if method == "picard" else factor_checked(jacobian(U))
        step = sla.lu_solve(factors, res)
        lam = damping
        for _ in range(6):
            mu_try = mu_flat - lam * step[:-2]
            c_try = c - lam * step[-2:]
            res_try, U_try = residual(mu_try, c_try)
            if np.max(np.abs(res_try)) <= res_norm or lam <= damping / 32.0:
                break
            lam *= 0.5
        update_norm = lam * np.max(np.abs(step))
        mu_flat, c, res, U = mu_try, c_try, res_try, U_try
        res_norm = np.max(np.abs(res))
        trace.append(res_norm)
        if update_norm < tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"no convergence in {max_iter} {method} iterations "
            f"(last update {update_norm:.3e}, residual {res_norm:.3e}); "
            "existence is not guaranteed for this traction law",
            trace=trace,
        )

    mu = BoundaryVectorField(mu_flat.reshape(-1, 2), curve)
    diagnostics = {
        "iterations": len(trace) - 1,
        "residual_on_node": float(res_norm),
        "zero_mean_violation": float(np.max(np.abs(boundary_integral(mu, curve)))),
        "trace": trace,
        "method": method,
    }
    return SolutionRep(mu=mu, c=c, B=B, diagnostics=diagnostics)
