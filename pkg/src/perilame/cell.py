"""Periodicity cell and hole boundary geometry.

The hole boundary is an analytic closed curve given by truncated trigonometric
series for each coordinate, sampled at uniform parameter nodes t_i = 2*pi*i/N
with even N.  All derived quantities (speeds, normals, curvature data) come
from exact differentiation of the series, so resampling at a different N is
exact rather than interpolatory.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CellError, CurveError

CONTAINMENT_MARGIN = 0.01  # fraction of the smallest cell edge


@dataclass(frozen=True)
class PeriodicityCell:
    """Rectangular periodicity cell with positive diagonal edge lengths."""

    q_diag: tuple
    volume: float

    @property
    def n(self):
        return len(self.q_diag)

    @property
    def q(self):
        return np.diag(self.q_diag)

    @property
    def q_inv(self):
        return np.diag([1.0 / q for q in self.q_diag])

    @property
    def min_edge(self):
        return min(self.q_diag)

    @property
    def max_edge(self):
        return max(self.q_diag)


def build_cell(q_diag):
    """Build a PeriodicityCell from edge lengths, rejecting non-positive entries."""
    q_diag = tuple(float(q) for q in q_diag)
    for idx, q in enumerate(q_diag):
        if not q > 0.0:
            raise CellError(f"non-positive edge: q_diag[{idx}] = {q}")
    volume = float(np.prod(q_diag))
    return PeriodicityCell(q_diag=q_diag, volume=volume)


def nearest_image(x, cell):
    """Reduce x modulo the lattice so each component lies in [-q_ll/2, q_ll/2)."""
    x = np.asarray(x, dtype=float)
    q = np.asarray(cell.q_diag)
    return x - q * np.floor(x / q + 0.5)


def cell_coords(x, cell):
    """Representative of x in the fundamental box [0, q_11) x ... x [0, q_nn)."""
    x = np.asarray(x, dtype=float)
    q = np.asarray(cell.q_diag)
    return x - q * np.floor(x / q)


class CircleShape:
    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def trig_coeffs(self):
        cos_c = np.zeros((2, 2))
        sin_c = np.zeros((2, 2))
        cos_c[0, 0], cos_c[1, 0] = self.center
        cos_c[0, 1] = self.radius
        sin_c[1, 1] = self.radius
        return cos_c, sin_c

    def interior_point(self):
        return self.center


class EllipseShape:
    def __init__(self, center, semi_axes, rotation=0.0):
        self.center = np.asarray(center, dtype=float)
        self.semi_axes = (float(semi_axes[0]), float(semi_axes[1]))
        self.rotation = float(rotation)

    def trig_coeffs(self):
        a, b = self.semi_axes
        ct, st = np.cos(self.rotation), np.sin(self.rotation)
        cos_c = np.zeros((2, 2))
        sin_c = np.zeros((2, 2))
        cos_c[0, 0], cos_c[1, 0] = self.center
        # x(t) = center + R_theta (a cos t, b sin t)
        cos_c[0, 1] = a * ct
        sin_c[0, 1] = -b * st
        cos_c[1, 1] = a * st
        sin_c[1, 1] = b * ct
        return cos_c, sin_c

    def interior_point(self):
        return self.center


class TrigShape:
    """Curve given directly by truncated trigonometric series per coordinate.

    cos_coeffs[k, m] multiplies cos(m t) in coordinate k, sin_coeffs[k, m]
    multiplies sin(m t); sin_coeffs[:, 0] is ignored.
    """

    def __init__(self, cos_coeffs, sin_coeffs, interior=None):
        self.cos_coeffs = np.atleast_2d(np.asarray(cos_coeffs, dtype=float))
        self.sin_coeffs = np.atleast_2d(np.asarray(sin_coeffs, dtype=float))
        if self.cos_coeffs.shape[0] != 2 or self.sin_coeffs.shape[0] != 2:
            raise CurveError("trig shape needs one coefficient row per coordinate")
        self._interior = interior

    def trig_coeffs(self):
        m = max(self.cos_coeffs.shape[1], self.sin_coeffs.shape[1])
        cos_c = np.zeros((2, m))
        sin_c = np.zeros((2, m))
        cos_c[:, : self.cos_coeffs.shape[1]] = self.cos_coeffs
        sin_c[:, : self.sin_coeffs.shape[1]] = self.sin_coeffs
        return cos_c, sin_c

    def interior_point(self):
        if self._interior is not None:
            return np.asarray(self._interior, dtype=float)
        return self.cos_coeffs[:, 0]


def _eval_series(cos_c, sin_c, t, derivative=0):
    """Evaluate the trig series (or a parameter derivative) at parameters t."""
    t = np.asarray(t, dtype=float)
    modes = np.arange(cos_c.shape[1])
    mt = np.outer(t, modes)
    cos_mt, sin_mt = np.cos(mt), np.sin(mt)
    k = derivative % 4
    fac = modes.astype(float) ** derivative
    if k == 0:
        basis_c, basis_s = cos_mt, sin_mt
    elif k == 1:
        basis_c, basis_s = -sin_mt, cos_mt
    elif k == 2:
        basis_c, basis_s = -cos_mt, -sin_mt
    else:
        basis_c, basis_s = sin_mt, -cos_mt
    return (basis_c * fac) @ cos_c.T + (basis_s * fac) @ sin_c.T


@dataclass(frozen=True)
class BoundaryCurve:
    """Discretized hole boundary: nodes, speeds and outward unit normals."""

    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray
    N: int
    nodes: np.ndarray      # (N, 2)
    speeds: np.ndarray     # (N,)
    normals: np.ndarray    # (N, 2)
    center_hint: np.ndarray
    params: np.ndarray = field(repr=False, default=None)
    d1: np.ndarray = field(repr=False, default=None)  # x'(t_i)
    d2: np.ndarray = field(repr=False, default=None)  # x''(t_i)

    @property
    def dt(self):
        return 2.0 * np.pi / self.N

    @property
    def weights(self):
        """Trapezoid quadrature weights for arclength integrals."""
        return self.dt * self.speeds

    def eval(self, t, derivative=0):
        return _eval_series(self.cos_coeffs, self.sin_coeffs, t, derivative)

    def resample(self, N):
        """Exact re-discretization of the same curve at a different node count."""
        shape = TrigShape(self.cos_coeffs, self.sin_coeffs, interior=self.center_hint)
        return _discretize_trig(shape, N)


def _discretize_trig(shape, N):
    cos_c, sin_c = shape.trig_coeffs()
    t = 2.0 * np.pi * np.arange(N) / N
    nodes = _eval_series(cos_c, sin_c, t)
    d1 = _eval_series(cos_c, sin_c, t, derivative=1)
    d2 = _eval_series(cos_c, sin_c, t, derivative=2)
    speeds = np.hypot(d1[:, 0], d1[:, 1])
    if np.min(speeds) <= 1e-12 * max(np.max(speeds), 1.0):
        raise CurveError("vanishing parametrization speed")
    normals = np.column_stack((d1[:, 1], -d1[:, 0])) / speeds[:, None]
    return BoundaryCurve(
        cos_coeffs=cos_c, sin_coeffs=sin_c, N=N, nodes=nodes, speeds=speeds,
        normals=normals, center_hint=np.asarray(shape.interior_point(), dtype=float),
        params=t, d1=d1, d2=d2,
    )


def discretize_curve(shape, N, cell):
    """Discretize a closed analytic curve inside the cell at N uniform nodes.

    Requires even N >= 8, counterclockwise orientation, strictly positive
    speed, and containment in the open cell with a 1% margin.
    """
    if N % 2 != 0 or N < 8:
        raise CurveError(f"node count must be even and >= 8, got {N}")
    curve = _discretize_trig(shape, N)

    # orientation: positive signed area <=> counterclockwise <=> outward normals
    signed = signed_area(curve)
    if signed <= 0.0:
        raise CurveError("curve must be parametrized counterclockwise")

    margin = CONTAINMENT_MARGIN * cell.min_edge
    fine = curve.resample(max(4 * N, 256))
    for axis, q in enumerate(cell.q_diag):
        lo = np.min(fine.nodes[:, axis])
        hi = np.max(fine.nodes[:, axis])
        if lo < margin or hi > q - margin:
            raise CurveError(
                f"curve leaves the cell interior along axis {axis}: "
                f"range [{lo:.6g}, {hi:.6g}] vs required [{margin:.6g}, {q - margin:.6g}]"
            )

    # proxy simplicity check: no two nodes coincide
    diff = curve.nodes[:, None, :] - curve.nodes[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(dist, np.inf)
    if np.min(dist) <= 1e-12 * cell.min_edge:
        raise CurveError("coincident nodes: curve is not simple at this resolution")

    # outwardness against the interior hint (meaningful for starlike shapes)
    rel = curve.nodes - curve.center_hint[None, :]
    if np.any(np.sum(rel * curve.normals, axis=1) <= 0.0):
        raise CurveError("normals do not point away from the interior hint")
    return curve


def signed_area(curve):
    """Shoelace area of the curve via the exact nodes, positive for CCW."""
    x, d1 = curve.nodes, curve.d1
    return 0.5 * curve.dt * np.sum(x[:, 0] * d1[:, 1] - x[:, 1] * d1[:, 0])


def hole_area(curve):
    """Area enclosed by the curve, via the divergence theorem (spectral)."""
    return float(signed_area(curve))


def arclength(curve):
    """Total boundary length by the periodic trapezoid rule."""
    return float(np.sum(curve.weights))


def point_in_hole(x, curve, cell):
    """True when the cell representative of x lies inside the hole.

    Uses the winding number of the node polygon; adequate away from the
    boundary (near-boundary queries carry warnings elsewhere).
    """
    p = cell_coords(x, cell)
    v = curve.nodes - p[None, :]
    ang = np.arctan2(v[:, 1], v[:, 0])
    dang = np.diff(np.concatenate([ang, ang[:1]]))
    dang = (dang + np.pi) % (2.0 * np.pi) - np.pi
    return abs(np.sum(dang)) > np.pi


def min_image_distance(x, curve, cell):
    """Distance from x to the node set of the curve, minimized over images."""
    x = nearest_image(np.asarray(x, dtype=float) - curve.nodes[0], cell) + curve.nodes[0]
    best = np.inf
    q1, q2 = cell.q_diag
    for z1 in (-1, 0, 1):
        for z2 in (-1, 0, 1):
            shift = np.array([z1 * q1, z2 * q2])
            d = curve.nodes + shift[None, :] - x[None, :]
            best = min(best, float(np.min(np.hypot(d[:, 0], d[:, 1]))))
    return best
