import numpy as np
import pytest

from oseen_tp import fourier_quad as fq
from oseen_tp._radial import reference_symbol, screened_reference
from oseen_tp.exceptions import DomainError, NyquistError
from oseen_tp.periodic import (
    gamma_perp_modes,
    gamma_perp_point_oracle,
    gamma_tp,
    near_real_poles,
    omega,
    symbol,
    synthesize_gamma_perp,
    time_norm,
)
from oseen_tp.steady import gamma0
from oseen_tp.torus import Grid


def _scalar_oracle(x, lam, om, symbol_fn):
    r = np.linalg.norm(x)
    nodes = fq.windowed_nodes(r, refine=1.5, feature=1.0, flat=near_real_poles(lam, [om], r))
    A = symbol_fn(nodes.rho, nodes.rho * nodes.c)[:, None]
    x1, b, _ = fq.frame_coordinates(x)
    _, I = fq.monomial_integrals(x1, b, nodes, A, max_degree=0)
    return I[0, 0, 0]


@pytest.mark.parametrize("x", [(0.0, 3.0, 0.0), (-4.0, 1.0, 0.0), (5.0, 0.0, 2.0)])
def test_quadrature_engine_scalar_mode_kernel(x):
    # (i w - Laplace - lam d_1) G = delta  =>  G = exp(-lam x_1 / 2 - kappa r) / (4 pi r)
    lam, om = 1.0, omega(1, 1.0)
    x = np.array(x)
    got = _scalar_oracle(x, lam, om, lambda rho, xi1: 1.0 / (rho**2 + 1j * (om - lam * xi1)))
    kappa = np.sqrt(lam**2 / 4 + 1j * om)
    r = np.linalg.norm(x)
    ref = np.exp(-lam * x[0] / 2 - kappa * r) / (4 * np.pi * r)
    assert abs(got - ref) / abs(ref) < 1e-8


def test_quadrature_engine_projected_reference():
    # the screened reference has a closed form; the engine never uses it
    lam, mu = 1.0, np.sqrt(1j * omega(1, 2 * np.pi))
    x = np.array([1.5, -2.0, 0.7])
    r = np.linalg.norm(x)
    nodes = fq.windowed_nodes(r, refine=1.5, feature=1.0)
    A = reference_symbol(nodes.rho**2, nodes.rho * nodes.c, mu, lam)[:, None]
    x1, b, alpha = fq.frame_coordinates(x)
    monos, I = fq.monomial_integrals(x1, b, nodes, A, max_degree=2)
    got = fq.rotate2(fq.rotations(alpha), fq.assemble_projector(monos, I[0]))[0]
    ref = screened_reference(x, mu, lam)
    assert np.max(np.abs(got - ref)) / np.max(np.abs(ref)) < 1e-7


def test_symbol_structure():
    xi = np.array([[0.3, -0.2, 0.5]])
    m = symbol(1, xi, 1.0, 2 * np.pi)
    P = np.eye(3) - np.outer(xi[0], xi[0]) / (xi[0] @ xi[0])
    assert np.allclose(m[0] @ xi[0], 0)
    d = xi[0] @ xi[0] + 1j * (1.0 - xi[0, 0])
    assert np.allclose(m[0], P / d)


def test_modes_are_solenoidal_and_symmetric():
    x = np.array([0.5, 2.5, -1.0])
    v, g, err = gamma_perp_modes(x, 1.0, 1.0, [1, 2], grad=True, tol=1e-8)
    assert err < 1e-8
    assert np.allclose(v, np.swapaxes(v, -1, -2), atol=1e-12 * np.abs(v).max())
    div = np.einsum("kmmj->kj", g)
    assert np.max(np.abs(div)) < 1e-7 * np.abs(g).max()


def test_point_oracle_is_real_with_zero_mean():
    x = np.array([0.0, 3.0, 1.0])
    t = np.linspace(0, 1, 16, endpoint=False)
    vals = gamma_perp_point_oracle(t, x, 1.0, 1.0, K_modes=3)
    assert vals.shape == (16, 3, 3)
    assert np.allclose(vals.mean(axis=0), 0, atol=1e-14)
    full = gamma_tp(0.25, x, 1.0, 1.0, K_modes=3)
    assert np.allclose(full - gamma0(x, 1.0), vals[4], atol=1e-12)


def test_oracle_domain():
    with pytest.raises(DomainError):
        gamma_perp_modes(np.array([0.1, 0, 0]), 1.0, 1.0, [1])
    with pytest.raises(DomainError):
        gamma_perp_modes(np.array([1.0, 0, 0]), 1.0, 1.0, [0])


def test_synthesis_matches_oracle():
    g = Grid(period=1.0, n_time=4, n_space=48, box_half_length=7.5)
    tab = synthesize_gamma_perp(g, 1.0, K_modes=2)
    c = g.n_space // 2
    for o in ((0, 8, 0), (-8, 2, 0), (6, 0, -6)):
        idx = tuple(c + np.array(o))
        x = g.x[list(idx)]
        v, _, _ = gamma_perp_modes(x, 1.0, 1.0, [1, 2])
        assert time_norm(v - tab.modes[(slice(None),) + idx]) / time_norm(v) < 0.01
    assert np.allclose(tab.time_mean(), 0, atol=1e-14)
    with pytest.raises(NyquistError):
        synthesize_gamma_perp(g, 1.0, K_modes=3)
