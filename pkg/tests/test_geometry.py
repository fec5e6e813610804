import numpy as np
import pytest
from hypothesis import given, strategies as st

from oseen_tp.exceptions import InvalidParameterError
from oseen_tp.geometry import (
    AnisoWeight,
    Ray,
    default_rays,
    geometric_radii,
    rotation_about_e1,
    sample_ray,
    wake,
    wake_axis,
)

coord = st.floats(-1e3, 1e3, allow_nan=False)
lam_st = st.floats(0.05, 20).flatmap(lambda a: st.sampled_from([a, -a]))


def test_wake_zero_on_wake_axis():
    for lam in (1.0, -2.5):
        x = 7.0 * wake_axis(lam)
        assert wake(x, lam) == 0.0
    assert wake(np.array([-3.0, 0, 0]), 1.0) == 0.0
    assert wake(np.array([3.0, 0, 0]), 1.0) == pytest.approx(6.0)
    assert wake(np.array([0.0, 2.0, 0]), 0.5) == pytest.approx(1.0)


@given(coord, coord, coord, lam_st)
def test_wake_bounds(x1, x2, x3, lam):
    x = np.array([x1, x2, x3])
    s = wake(x, lam)
    r = np.linalg.norm(x)
    assert -1e-9 <= s <= 2 * abs(lam) * r * (1 + 1e-12) + 1e-9


@given(coord, coord, coord, lam_st, st.floats(0, 2 * np.pi))
def test_wake_invariant_under_rotation_about_e1(x1, x2, x3, lam, angle):
    x = np.array([x1, x2, x3])
    y = rotation_about_e1(angle) @ x
    assert wake(y, lam) == pytest.approx(wake(x, lam), rel=1e-9, abs=1e-9)


def test_wake_rejects_zero_lambda():
    with pytest.raises(InvalidParameterError):
        wake(np.ones(3), 0.0)


def test_aniso_weight():
    w = AnisoWeight(2.0, 1.0)
    x = np.array([0.0, 3.0, 0.0])
    assert w(x, 1.0) == pytest.approx(1 / 16 / 4)


def test_ray_validation():
    with pytest.raises(InvalidParameterError):
        Ray(np.array([1.0, 1.0, 0.0]), [1.0, 2.0])
    with pytest.raises(InvalidParameterError):
        Ray(np.array([1.0, 0.0, 0.0]), [2.0, 1.0])
    with pytest.raises(InvalidParameterError):
        Ray(np.array([1.0, 0.0, 0.0]), [0.0, 1.0])
    r = Ray.from_vector([-1.0, 1.0, 0.0], [1.0, 2.0])
    assert np.allclose(np.linalg.norm(r.points, axis=1), [1.0, 2.0])


def test_geometric_radii_and_sampling():
    r = geometric_radii(1.0, 100.0, 10.0)
    assert np.allclose(r, [1, 10, 100])
    with pytest.raises(InvalidParameterError):
        geometric_radii(2.0, 1.0)
    pts = sample_ray(Ray(np.array([-1.0, 0, 0]), r), 1.0)
    assert [p.s_lambda for p in pts] == [0.0, 0.0, 0.0]
    rays = default_rays(-1.0, r)
    assert np.allclose(rays["wake"].direction, [1, 0, 0])
    assert set(rays) == {"wake", "upstream", "perp", "diag"}
