import numpy as np
import pytest

from oseen_tp.exceptions import DomainError
from oseen_tp.kernel_tables import l1_time_norms
from oseen_tp.periodic import gamma_perp_modes


@pytest.mark.parametrize("z", [(0.3, 3.1, 0.7), (-7.0, 2.0, 1.0), (12.0, -5.0, 3.0), (-30.0, 1.0, 0.5)])
def test_table_against_oracle(table, z):
    z = np.array(z)
    v, g, _ = gamma_perp_modes(z, 1.0, 1.0, np.arange(1, 9), grad=True, tol=1e-8)
    tv = table.mode_tensors(z[None])[0]
    tg = table.mode_tensors(z[None], grad=True)[0]
    assert np.abs(tv - v).max() / np.abs(v).max() < 5e-3
    assert np.abs(tg - g).max() / np.abs(g).max() < 2e-2
    k0, k1 = l1_time_norms(v, g, 1.0)
    assert table(z) == pytest.approx(k0, rel=2e-3)
    assert table(z, grad=True) == pytest.approx(k1, rel=2e-3)


def test_table_mode_subset_and_domain(table):
    z = np.array([[0.0, 5.0, 0.0]])
    all_modes = table.mode_tensors(z)
    assert np.allclose(table.mode_tensors(z, modes=[2, 5])[0], all_modes[0, [1, 4]])
    with pytest.raises(DomainError):
        table.mode_tensors(z, modes=[0])
    with pytest.raises(DomainError):
        table.mode_tensors(np.array([[0.0, 0.1, 0.0]]))


def test_table_extrapolation_powers(table):
    r_hi = table.radii[-1]
    z1, z2 = np.array([0, r_hi * 2, 0.0]), np.array([0, r_hi * 4, 0.0])
    assert table(z1) / table(z2) == pytest.approx(8.0)
    assert table(z1, grad=True) / table(z2, grad=True) == pytest.approx(16.0)
