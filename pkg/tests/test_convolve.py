import numpy as np
import pytest

from oseen_tp.convolve import (
    BoundReport,
    WeightedSource,
    bound_shape,
    check_case,
    convolve_gamma0,
    convolve_gamma_perp,
    gamma_perp_convolution_modes,
    theorem_case,
    verify_aniso_conv,
)
from oseen_tp.exceptions import DomainError, InvalidParameterError
from oseen_tp.periodic import gamma_perp_modes
from oseen_tp.solver import free_space_linear
from oseen_tp.sources import CompactSource
from oseen_tp.steady import gamma0, grad_gamma0
from oseen_tp.torus import Grid


@pytest.mark.parametrize(
    "A, B, deriv, case",
    [(3, 1, 0, "3.1i"), (2.5, 0.8, 0, "3.1i"), (4, 1, 1, "3.1ii"), (2, 1.5, 1, "3.1iii"), (2, 0.5, 1, "3.1iv")],
)
def test_theorem_case(A, B, deriv, case):
    assert theorem_case(A, B, deriv) == case


@pytest.mark.parametrize("A, B, deriv", [(1.5, 1, 0), (2, 1, 0), (3, 0.2, 1), (2, -1, 0)])
def test_theorem_case_rejects(A, B, deriv):
    with pytest.raises(InvalidParameterError):
        theorem_case(A, B, deriv)


def test_check_case_guards():
    with pytest.raises(InvalidParameterError):
        check_case("3.1ii", 2, 0.5)
    with pytest.raises(InvalidParameterError):
        check_case("3.3value", 3, 0)
    with pytest.raises(InvalidParameterError):
        check_case("lemma3.5", 2, 0.5)
    with pytest.raises(InvalidParameterError):
        check_case("nope", 1, 1)


def test_bound_shape_on_wake_and_across():
    x = np.array([[-10.0, 0, 0], [0, 10.0, 0]])
    b = bound_shape("3.1i", 3, 1, x, 1.0)
    assert b[0] == pytest.approx(1 / 11)
    assert b[1] == pytest.approx(1 / (11 * 11))


def test_far_field_approaches_mass_times_kernel():
    # the convolution tends to the kernel times the total force; the gap
    # closes fastest across the wake and slowest inside it
    src = CompactSource(1.0, 1.0, (0.0, 1.0, 0.0), period=1.0)
    M = src.mode_integral(0).real

    def gap(x):
        got = convolve_gamma0(src, x, 1.0, tol=1e-9, max_order=30).values
        ref = gamma0(x, 1.0) @ M
        return np.abs(got - ref).max() / np.abs(ref).max()

    e2 = np.array([0.0, 1.0, 0.0])
    assert gap(6 * e2) < 1e-2
    assert gap(24 * e2) < 1e-2 * gap(6 * e2)
    assert gap(np.array([12.0, 0, 0])) < 1e-4
    assert gap(np.array([-12.0, 0, 0])) < 1e-2
    x = np.array([0.0, 8.0, 2.0])
    g = convolve_gamma0(src, x, 1.0, deriv=1, tol=1e-9, max_order=30).values
    ref = np.einsum("mjl,l->mj", grad_gamma0(x, 1.0), M)
    assert np.abs(g - ref).max() < 1e-2 * np.abs(ref).max()


def test_remainder_route_against_subtraction():
    # an off-centre source is not radial about the origin: the remainder is O(|x|^-2)
    src = CompactSource(1.0, 1.0, (1.0, 0.0, 0.0), center=(0.0, 0.5, 0.0), period=1.0)
    x = np.array([0.0, 8.0, 3.0])
    full = convolve_gamma0(src, x, 1.0, tol=1e-9, max_order=30).values
    lead = gamma0(x, 1.0) @ src.mode_integral(0).real
    rem = convolve_gamma0(src, x, 1.0, tol=1e-6, max_order=30, remainder=True).values
    assert np.allclose(rem, full - lead, rtol=1e-3, atol=1e-7 * np.abs(full).max())
    with pytest.raises(DomainError):
        convolve_gamma0(src, np.array([0.0, 0.5, 0.0]), 1.0, remainder=True)


def test_inside_support_against_grid_convolution():
    g = Grid(period=1.0, n_time=1, n_space=48, box_half_length=6.0)
    src = CompactSource(3.0, 1.0, (0.0, 1.0, 0.0), period=1.0)
    u = free_space_linear(src.sample(g), 1.0).values[0]
    c = g.n_space // 2
    for o in ((0, 0, 0), (4, 0, 0), (0, -6, 4)):
        idx = tuple(c + np.array(o))
        x = g.x[list(idx)]
        ref = convolve_gamma0(src, x, 1.0, tol=1e-5, max_order=30).values
        assert np.allclose(u[idx], ref, rtol=1e-2, atol=1e-2 * np.abs(ref).max())


def test_zero_data_and_weighted_source():
    src = CompactSource(1.0, 0.0, period=1.0)
    assert np.all(convolve_gamma0(src, np.array([3.0, 0, 0]), 1.0).values == 0)
    w = WeightedSource(3.5, 1.0, 1.0)
    v = convolve_gamma0(w, np.array([0.0, 10.0, 0.0]), 1.0, tol=1e-3).values
    assert np.all(np.isfinite(v)) and np.abs(v).max() > 0
    with pytest.raises(InvalidParameterError):
        convolve_gamma0(WeightedSource(1.5, 1.0), np.array([0.0, 10.0, 0.0]), 1.0)


def test_periodic_far_field_approaches_mass_times_mode_kernel():
    src = CompactSource(1.0, 1.0, (0.0, 1.0, 0.0), time_profile="one_plus_cos", period=1.0)
    gaps = []
    for r in (5.0, 10.0):
        x = np.array([0.0, r, 0.0])
        ks, vals, err = gamma_perp_convolution_modes(src, x, 1.0, tol=1e-9, max_refine=4)
        assert list(ks) == [1]
        G, _, _ = gamma_perp_modes(x, 1.0, 1.0, [1], tol=1e-10)
        ref = G[0] @ src.mode_integral(1)
        gaps.append(np.abs(vals[0] - ref).max() / np.abs(ref).max())
    assert gaps[0] < 5e-3 and gaps[1] < 1e-2 * gaps[0]
    t = np.array([0.0, 0.3])
    direct = convolve_gamma_perp(src, t, x, 1.0, tol=1e-8)
    assert direct.shape == (2, 3)
    assert np.allclose(direct[0], 2 * vals[0].real, rtol=1e-6, atol=1e-12)


def test_periodic_convolution_rejects_off_axis_data():
    src = CompactSource(1.0, 1.0, center=(0.0, 1.0, 0.0), time_profile="cos", period=1.0)
    with pytest.raises(InvalidParameterError):
        gamma_perp_convolution_modes(src, np.array([0.0, 6.0, 0.0]), 1.0)


def test_aniso_lemma_report():
    rep = verify_aniso_conv(0.5, 1.5, radii=(10.0, 20.0))
    assert isinstance(rep, BoundReport)
    assert rep.passed
    csv = rep.to_csv().splitlines()
    assert csv[0] == "case,A,B,ray,radius,convolution,bound_shape,ratio,quad_error,doubling_factor,pass"
    assert len(csv) == 1 + 3 * 2
    assert "PASS" in rep.summary()
