import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from grushin.geometry import (GeometryConstants, ball_growth, ball_volume, build_partition, distance,
                              estimate_quasi_constant, homogeneous_dimension, integrability_check, rho1, rho2)

coord = st.floats(-5, 5, allow_nan=False)
point2 = arrays(float, 2, elements=coord)
point3 = arrays(float, 3, elements=coord)


def dilate(x, r, n1):
    x = np.asarray(x, float).copy()
    x[..., :n1] *= r
    x[..., n1:] *= r * r
    return x


@given(point2, point2)
def test_distance_symmetric_and_zero_on_diagonal(x, y):
    assert distance(x, y) == distance(y, x)
    assert distance(x, x) == 0.0


@given(point3, point3, st.floats(0.1, 10))
def test_distance_homogeneous_under_dilations(x, y, r):
    d = distance(x, y, 2)
    assert distance(dilate(x, r, 2), dilate(y, r, 2), 2) == pytest.approx(r * d, rel=1e-9, abs=1e-12)


@given(point2, point2, st.floats(-5, 5))
def test_distance_invariant_under_x2_translation(x, y, c):
    s = np.array([0.0, c])
    assert distance(x + s, y + s) == pytest.approx(distance(x, y), rel=1e-9, abs=1e-12)


def test_distance_examples():
    assert distance(np.array([0.0, 0.0]), np.array([1.0, 0.0])) == pytest.approx(1.0)
    # |x'| = 0 both ends: d = |x''|^(1/2)
    assert distance(np.array([0.0, 0.0]), np.array([0.0, 4.0])) == pytest.approx(2.0)


def test_rho_comparable_to_distance(rng):
    x = rng.uniform(-4, 4, (10000, 2))
    y = rng.uniform(-4, 4, (10000, 2))
    r = np.minimum(rho1(x, y), rho2(x, y)) / distance(x, y)
    assert r.min() >= 0.25 and r.max() <= 4.0


def test_quasi_triangle_constant_close_to_one():
    region = (np.full(2, -4.0), np.full(2, 4.0))
    C0 = estimate_quasi_constant(50000, region, 1, seed=3)
    assert 1.0 <= C0 < 1.5


def test_ball_growth_examples():
    assert homogeneous_dimension(1, 1) == 3
    assert ball_growth(np.array([0.0, 0.0]), 2.0) == pytest.approx(8.0)
    assert ball_growth(np.array([3.0, 0.0]), 1.0) == pytest.approx(3.0)


@pytest.mark.parametrize("center,r", [((0.0, 0.0), 0.5), ((2.0, 1.0), 0.5), ((0.5, 0.0), 1.0)])
def test_monte_carlo_volume_within_growth_bounds(center, r):
    est, err = ball_volume(np.array(center), r, mode="monte_carlo", samples=40000,
                           rng=np.random.default_rng(0))
    g = ball_growth(np.array(center), r)
    assert err < 0.05 * est
    assert 1.0 <= est / g <= 10.0


def test_partition_of_unity():
    C0 = 1.02
    part = build_partition((np.full(2, -1.0), np.full(2, 1.0)), C0)
    pts = np.random.default_rng(0).uniform(-1, 1, (3000, 2))
    assert np.allclose(part.chi_all(pts).sum(axis=0), 1.0, atol=1e-10)
    # centres are 1/C0 separated
    c = part.centers
    d = distance(c[:, None, :], c[None, :, :])
    assert np.min(d[~np.eye(len(c), dtype=bool)]) >= 1 / C0 - 1e-12
    consts = GeometryConstants(C0, 3.7, 6.1)
    assert part.overlap_count(pts).max() <= consts.overlap_bound()


def test_partition_element_support():
    part = build_partition((np.full(2, -1.0), np.full(2, 1.0)), 1.0)
    far = np.array([[30.0, 0.0]])
    assert np.all(part.chi_all(far) == 0.0)
    el = part.elements[0]
    pts = np.random.default_rng(1).uniform(-6, 6, (4000, 2))
    outside = distance(pts, el.center) >= 2.0
    assert np.all(el(pts)[outside] == 0.0)


def test_empty_region_gives_empty_partition():
    part = build_partition((np.full(2, 1.0), np.full(2, -1.0)), 1.0)
    assert len(part) == 0


def test_integrability_threshold():
    Q = homogeneous_dimension(1, 1)
    assert integrability_check(Q + 1).passed
    assert not integrability_check(Q - 1).passed


def test_constants_validation():
    with pytest.raises(ValueError):
        GeometryConstants(0.5, 1.0, 2.0)
    with pytest.raises(ValueError):
        ball_volume(np.zeros(2), 0.0)
