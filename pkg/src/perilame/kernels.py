"""Free-space fundamental solution of the Lame operator and traction kernels.

The operator is D u + omega * grad(div u) with the second Lame constant
normalized to 1; omega must exceed 1 - 2/n.  Kernel formulas accept n = 2 or
n = 3, while everything downstream of this module is two-dimensional.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SingularArgumentError


def sphere_measure(n):
    """Surface measure of the unit sphere in R^n (2*pi for n=2, 4*pi for n=3)."""
    from math import gamma, pi
    return 2.0 * pi ** (n / 2.0) / gamma(n / 2.0)


@dataclass(frozen=True)
class LameEnv:
    """Dimension and Lame ratio parameter with the derived kernel constants."""

    n: int = 2
    omega: float = 1.0

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError(f"kernel formulas support n in (2, 3), got {self.n}")
        if not self.omega > 1.0 - 2.0 / self.n:
            raise ValueError(
                f"omega must exceed {1.0 - 2.0 / self.n} for n={self.n}, got {self.omega}"
            )

    @property
    def alpha(self):
        """Coefficient of the diagonal log/power term, (omega+2)/(2(omega+1))."""
        return (self.omega + 2.0) / (2.0 * (self.omega + 1.0))

    @property
    def beta(self):
        """Coupling ratio omega/(omega+1); the dyadic term carries beta/2."""
        return self.omega / (self.omega + 1.0)

    @property
    def s_n(self):
        return sphere_measure(self.n)


def _check_nonzero(x):
    r2 = np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)
    if np.any(r2 == 0.0):
        raise SingularArgumentError("kernel argument must be nonzero")
    return r2


def fs_laplace(x, n=2):
    """Fundamental solution of the Laplacian: log|x|/(2 pi) in 2D, -1/(4 pi |x|) in 3D."""
    x = np.asarray(x, dtype=float)
    r2 = _check_nonzero(x)
    s = sphere_measure(n)
    if n == 2:
        return 0.5 * np.log(r2) / s
    return r2 ** ((2.0 - n) / 2.0) / ((2.0 - n) * s)


def kelvin(x, env):
    """Kelvin matrix: entries alpha*delta_ij*S_n(x) - (beta/2)*(1/s_n)*x_i x_j/|x|^n."""
    x = np.asarray(x, dtype=float)
    r2 = _check_nonzero(x)
    n = env.n
    s = fs_laplace(x, n)
    coef = 0.5 * env.beta / env.s_n
    dyad = x[..., :, None] * x[..., None, :] / np.asarray(r2)[..., None, None] ** (n / 2.0)
    eye = np.eye(n)
    return env.alpha * np.asarray(s)[..., None, None] * eye - coef * dyad


def kelvin_grad(x, env):
    """Gradient d_k Gamma_ij of the Kelvin matrix, indexed out[..., i, j, k]."""
    x = np.asarray(x, dtype=float)
    r2 = _check_nonzero(x)
    n = env.n
    rn = np.asarray(r2, dtype=float)[..., None, None, None] ** (n / 2.0)
    rn2 = np.asarray(r2, dtype=float)[..., None, None, None] ** ((n + 2.0) / 2.0)
    eye = np.eye(n)
    xi = x[..., :, None, None]
    xj = x[..., None, :, None]
    xk = x[..., None, None, :]
    d_ij = eye[:, :, None]
    d_ik = eye[:, None, :]
    d_jk = eye[None, :, :]
    out = env.alpha * d_ij * xk / rn
    out = out - 0.5 * env.beta * ((d_ik * xj + d_jk * xi) / rn - n * xi * xj * xk / rn2)
    return out / env.s_n


def traction_map(omega, A):
    """Stress map T(omega, A) = (omega-1) tr(A) I + A + A^t."""
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    tr = np.trace(A, axis1=-2, axis2=-1)
    return (omega - 1.0) * tr[..., None, None] * np.eye(n) + A + np.swapaxes(A, -2, -1)


def traction_kernel(x, nu, env):
    """Traction of the Kelvin columns contracted with nu, in closed form.

    Column l holds T(omega, D Gamma^l(x)) nu.  For n=2 this reduces to
        (1/(2 pi)) [ (1-beta)(delta_il (x.nu) + nu_l x_i - nu_i x_l)/|x|^2
                     + 2 beta x_i x_l (x.nu)/|x|^4 ],
    verified in the tests against the composition through kelvin_grad.
    """
    x = np.asarray(x, dtype=float)
    nu = np.asarray(nu, dtype=float)
    r2 = np.asarray(_check_nonzero(x), dtype=float)
    n = env.n
    beta = env.beta
    xdotnu = np.sum(x * nu, axis=-1)
    eye = np.eye(n)
    xi = x[..., :, None]
    xl = x[..., None, :]
    nui = nu[..., :, None]
    nul = nu[..., None, :]
    rn = r2[..., None, None] ** (n / 2.0)
    xn = xdotnu[..., None, None]
    out = (1.0 - beta) * (eye * xn + nul * xi - nui * xl)
    out = out + n * beta * xi * xl * xn / r2[..., None, None]
    return out / (env.s_n * rn)


def traction_from_gradient(grad, nu, omega):
    """Traction columns from a kernel gradient array grad[..., i, l, k].

    Column l of the result is T(omega, A) nu with A_ik = grad[..., i, l, k];
    this is the composition path used to certify traction_kernel and to build
    the smooth periodic correction of the traction operator.
    """
    grad = np.asarray(grad, dtype=float)
    nu = np.asarray(nu, dtype=float)
    div = np.einsum("...klk->...l", grad)
    t1 = np.einsum("...ilk,...k->...il", grad, nu)
    t2 = np.einsum("...kli,...k->...il", grad, nu)
    return (omega - 1.0) * nu[..., :, None] * div[..., None, :] + t1 + t2
