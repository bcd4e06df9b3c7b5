import numpy as np
import pytest
from scipy.special import ellipe

from perilame.cell import (
    CircleShape,
    EllipseShape,
    TrigShape,
    arclength,
    build_cell,
    discretize_curve,
    hole_area,
    nearest_image,
    point_in_hole,
)
from perilame.errors import CellError, CurveError

UNIT = build_cell([1.0, 1.0])


def test_build_cell_volume():
    assert build_cell([1.0, 1.0]).volume == 1.0
    assert build_cell([2.0, 3.0]).volume == 6.0


def test_build_cell_rejects_nonpositive_edge():
    with pytest.raises(CellError, match=r"q_diag\[1\]"):
        build_cell([1.0, 0.0])


def test_nearest_image_examples():
    assert np.allclose(nearest_image([0.0, 0.0], UNIT), [0.0, 0.0])
    assert np.allclose(nearest_image([2.0, -3.0], UNIT), [0.0, 0.0])
    assert np.allclose(nearest_image([0.75, 0.1], UNIT), [-0.25, 0.1])


def test_nearest_image_shift_invariance():
    rng = np.random.default_rng(0)
    cell = build_cell([2.0, 3.0])
    curve = discretize_curve(CircleShape([1.0, 1.5], 0.4), 32, cell)
    for node in curve.nodes[::4]:
        for _ in range(10):
            z = rng.integers(-3, 4, size=2)
            shifted = node + z * np.array(cell.q_diag)
            assert np.allclose(
                nearest_image(shifted, cell), nearest_image(node, cell), atol=1e-12
            )


def test_circle_discretization_geometry():
    curve = discretize_curve(CircleShape([0.5, 0.5], 0.25), 64, UNIT)
    assert np.allclose(curve.nodes[0], [0.75, 0.5])
    assert np.allclose(curve.normals[0], [1.0, 0.0])
    assert np.allclose(curve.speeds, 0.25)


def test_containment_rejected():
    with pytest.raises(CurveError, match="leaves the cell"):
        discretize_curve(CircleShape([0.5, 0.5], 0.6), 64, UNIT)


def test_node_count_requirements():
    with pytest.raises(CurveError):
        discretize_curve(CircleShape([0.5, 0.5], 0.25), 63, UNIT)
    with pytest.raises(CurveError):
        discretize_curve(CircleShape([0.5, 0.5], 0.25), 4, UNIT)


def test_ellipse_arclength_against_elliptic_integral():
    a, b = 0.3, 0.2
    curve = discretize_curve(EllipseShape([0.5, 0.5], (a, b)), 256, UNIT)
    ref = 4.0 * a * ellipe(1.0 - (b / a) ** 2)
    assert abs(arclength(curve) - ref) < 1e-12


def test_hole_area_closed_forms():
    circle = discretize_curve(CircleShape([0.5, 0.5], 0.25), 64, UNIT)
    assert abs(hole_area(circle) - np.pi / 16) < 1e-13
    ellipse = discretize_curve(EllipseShape([0.5, 0.5], (0.3, 0.2)), 64, UNIT)
    assert abs(hole_area(ellipse) - 0.06 * np.pi) < 1e-13


def _perturbed_circle(scale=1.0):
    cos_c = np.array([[0.5, 0.22 * scale, 0.03 * scale, 0.02 * scale],
                      [0.5, 0.0, 0.0, 0.0]])
    sin_c = np.array([[0.0, 0.0, 0.0, 0.0],
                      [0.0, 0.22 * scale, 0.0, -0.02 * scale]])
    return TrigShape(cos_c, sin_c, interior=(0.5, 0.5))


def test_trig_curve_area_matches_refined_quadrature():
    shape = _perturbed_circle()
    coarse = discretize_curve(shape, 64, UNIT)
    fine = discretize_curve(shape, 1024, UNIT)
    assert abs(hole_area(coarse) - hole_area(fine)) < 1e-12


@pytest.mark.parametrize("quantity", [hole_area, arclength])
def test_spectral_convergence_of_boundary_quadrature(quantity):
    shape = _perturbed_circle()
    ref = quantity(discretize_curve(shape, 2048, UNIT))
    errors = []
    for N in (16, 32, 64):
        errors.append(abs(quantity(discretize_curve(shape, N, UNIT)) - ref))
    # at least a factor 10 per doubling until rounding
    for e0, e1 in zip(errors, errors[1:]):
        assert e1 < e0 / 10 or e1 < 1e-13


def test_normals_orthogonal_to_tangents():
    curve = discretize_curve(_perturbed_circle(), 128, UNIT)
    dots = np.einsum("nk,nk->n", curve.normals, curve.d1)
    assert np.max(np.abs(dots)) < 1e-13 * np.max(curve.speeds)


def test_normals_point_outward():
    curve = discretize_curve(_perturbed_circle(), 128, UNIT)
    rel = curve.nodes - curve.center_hint[None, :]
    assert np.all(np.sum(rel * curve.normals, axis=1) > 0)


def test_clockwise_orientation_rejected():
    cos_c = np.array([[0.5, 0.25], [0.5, 0.0]])
    sin_c = np.array([[0.0, 0.0], [0.0, -0.25]])  # reversed traversal
    with pytest.raises(CurveError, match="counterclockwise"):
        discretize_curve(TrigShape(cos_c, sin_c), 64, UNIT)


def test_point_in_hole():
    curve = discretize_curve(CircleShape([0.5, 0.5], 0.25), 64, UNIT)
    assert point_in_hole([0.5, 0.5], curve, UNIT)
    assert point_in_hole([1.5, 2.5], curve, UNIT)  # image of the center
    assert not point_in_hole([0.1, 0.1], curve, UNIT)


def test_resample_is_exact():
    shape = _perturbed_circle()
    coarse = discretize_curve(shape, 32, UNIT)
    fine = coarse.resample(128)
    assert np.allclose(fine.nodes[::4], coarse.nodes, atol=1e-14)
