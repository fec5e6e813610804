import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oseen_tp.exceptions import DomainError, InvalidParameterError, SingularityError
from oseen_tp.steady import (
    EIN_SWITCH,
    GradNormTable,
    ein,
    gamma0,
    gamma0_norm,
    grad_gamma0,
    grad_gamma0_norm_exact,
    pressure0,
)

# Ein(s) = E1(s) + log s + euler_gamma, evaluated with mpmath at 30 digits
EIN_REF = {
    0.01: 0.009975055451555324,
    0.5: 0.44384207911774837,
    3.0: 1.6888763346638396,
    11.9: 3.053754594205967,
    12.1: 3.070421544086029,
    40.0: 4.2660951190154695,
}

# (delta Laplace - grad grad) Ein(s/2) / (4 pi |lam|) by mpmath numerical
# differentiation at 40 digits
GAMMA0_REF = [
    ((1.0, 2.0, 3.0), 1.0, [[0.00210504054060474, 0.0022235823177145, 0.00333537347657174],
                            [0.0022235823177145, -0.00022520597869032, 0.00278204273251903],
                            [0.00333537347657174, 0.00278204273251903, 0.00209316296507554]]),
    ((-5.0, 0.5, 0.2), 1.0, [[0.01550709148324281, -0.00077086716399768, -0.00030834686559907],
                             [-0.00077086716399768, 0.00791681009958695, 7.001538540601e-05],
                             [-0.00030834686559907, 7.001538540601e-05, 0.00776977779023434]]),
    ((0.3, -0.4, 0.1), -2.0, [[0.08342817021897726, -0.02689380301222404, 0.00672345075305601],
                              [-0.02689380301222404, 0.11010094706690159, -0.01349301133694494],
                              [0.00672345075305601, -0.01349301133694494, 0.05950215455335806]]),
    ((20.0, -7.0, 4.0), 0.5, [[0.0003174409740908, -0.00011108450908797, 6.347686233598e-05],
                              [-0.00011108450908797, -0.00014903847552584, -1.623777136598e-05],
                              [6.347686233598e-05, -1.623777136598e-05, -0.00016817584892145]]),
]

points = st.tuples(*[st.floats(-40, 40, allow_nan=False)] * 3).filter(lambda p: np.linalg.norm(p) > 0.5)
lams = st.sampled_from([1.0, -1.0, 0.3, 2.5])


@pytest.mark.parametrize("s, ref", sorted(EIN_REF.items()))
def test_ein_reference_values(s, ref):
    assert ein(s) == pytest.approx(ref, rel=1e-13)


def test_ein_small_argument_and_seam():
    s = np.array([1e-8, 1e-4])
    assert np.allclose(ein(s), s - s**2 / 4, rtol=1e-12)
    lo, hi = ein(EIN_SWITCH * (1 - 1e-14)), ein(EIN_SWITCH)
    assert abs(hi - lo) < 1e-13
    assert ein(0.0) == 0.0
    with pytest.raises(DomainError):
        ein(-1.0)


@given(st.floats(0.0, 200.0))
def test_ein_monotone_with_derivative(s):
    # Ein' = (1 - e^-s) / s
    h = 1e-6 * max(1.0, s)
    d = (ein(s + h) - ein(max(s - h, 0.0))) / (s + h - max(s - h, 0.0))
    expect = 1.0 if s == 0 else -np.expm1(-s) / s
    assert d == pytest.approx(expect, rel=1e-5, abs=1e-8)


@pytest.mark.parametrize("x, lam, ref", GAMMA0_REF)
def test_gamma0_reference_values(x, lam, ref):
    assert np.allclose(gamma0(np.array(x), lam), ref, rtol=1e-12, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(points, lams)
def test_gamma0_symmetric_and_solenoidal(p, lam):
    x = np.array(p)
    G = gamma0(x, lam)
    assert np.allclose(G, G.T, rtol=1e-12, atol=1e-18)
    div = np.einsum("mmj->j", grad_gamma0(x, lam))
    assert np.max(np.abs(div)) <= 1e-9 * np.max(np.abs(grad_gamma0(x, lam)))


@settings(max_examples=15, deadline=None)
@given(points, lams)
def test_gamma0_solves_the_steady_equation(p, lam):
    # -Laplace Gamma - lam d_1 Gamma + grad P = 0 away from the origin
    x = np.array(p)
    h = 1e-3 * max(1.0, np.linalg.norm(x)) * min(1.0, 1.0 / abs(lam))
    lap = -6 * gamma0(x, lam)
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        lap = lap + gamma0(x + e, lam) + gamma0(x - e, lam)
    lap /= h * h
    d1 = grad_gamma0(x, lam)[0]
    gradp = np.stack([(pressure0(x + h * np.eye(3)[m]) - pressure0(x - h * np.eye(3)[m])) / (2 * h) for m in range(3)])
    res = -lap - lam * d1 + gradp
    scale = np.max(np.abs(lap)) + np.max(np.abs(lam * d1))
    assert np.max(np.abs(res)) <= 2e-4 * scale


def test_grad_gamma0_matches_finite_differences():
    x = np.array([-3.0, 1.2, 0.4])
    h = 1e-5
    fd = np.stack([(gamma0(x + h * e, 1.0) - gamma0(x - h * e, 1.0)) / (2 * h) for e in np.eye(3)])
    assert np.allclose(grad_gamma0(x, 1.0), fd, rtol=1e-7, atol=1e-12)


def test_stokeslet_limit():
    for lam in (1.0, -2.0):
        x = 1e-5 * np.array([0.3, -0.5, 0.8])
        r = np.linalg.norm(x)
        stokes = (np.eye(3) / r + np.outer(x, x) / r**3) / (8 * np.pi)
        assert np.allclose(gamma0(x, lam), stokes, rtol=1e-4)


def test_gamma0_norm_matches_tensor():
    x = np.random.default_rng(0).normal(size=(200, 3)) * 20
    for lam in (1.0, -0.7):
        G = gamma0(x, lam)
        assert np.allclose(gamma0_norm(x, lam), np.sqrt((G**2).sum(axis=(-2, -1))), rtol=1e-10)


def test_grad_norm_table_accuracy():
    tab = GradNormTable(1.0)
    x = np.random.default_rng(1).normal(size=(300, 3)) * 30
    exact = grad_gamma0_norm_exact(x, 1.0)
    assert np.max(np.abs(tab(x) - exact) / exact) < 1e-4


def test_gamma0_errors():
    with pytest.raises(SingularityError):
        gamma0(np.zeros(3), 1.0)
    with pytest.raises(InvalidParameterError):
        gamma0(np.ones(3), 0.0)
    with pytest.raises(InvalidParameterError):
        gamma0(np.ones(2), 1.0)


def test_wake_anisotropy_of_decay():
    # along the wake axis |Gamma0| ~ 1/r, across it ~ 1/r^2
    r = np.array([10.0, 100.0])
    wake_vals = gamma0_norm(np.stack([-r, 0 * r, 0 * r], -1), 1.0)
    perp_vals = gamma0_norm(np.stack([0 * r, r, 0 * r], -1), 1.0)
    assert np.log10(wake_vals[0] / wake_vals[1]) == pytest.approx(1.0, abs=0.05)
    assert np.log10(perp_vals[0] / perp_vals[1]) == pytest.approx(2.0, abs=0.1)
