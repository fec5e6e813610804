"""Closed-form radial kernels and their Cartesian derivatives.

Radial profiles are finite sums ``sum c r^n exp(-a r)`` with complex ``a``,
stored as ``{(n, a): c}``; radial derivatives are exact.  They provide the
screened Stokes references

    P / (|xi|^2 + mu^2)              <->  Y I + dd h1
    i xi_1 P / (|xi|^2 + mu^2)^2     <->  d_1 (Y2 I + dd h2)

whose subtraction leaves a symbol decaying like ``|xi|^-4``.
"""

import numpy as np


class Profile:
    def __init__(self, terms):
        self.terms = {}
        for key, c in terms.items():
            if c != 0:
                self.terms[key] = self.terms.get(key, 0) + c

    def derivative(self):
        out = {}
        for (n, a), c in self.terms.items():
            if n != 0:
                out[(n - 1, a)] = out.get((n - 1, a), 0) + c * n
            if a != 0:
                out[(n, a)] = out.get((n, a), 0) - c * a
        return Profile(out)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        total = np.zeros(r.shape, dtype=complex)
        for (n, a), c in self.terms.items():
            total = total + c * r**n * np.exp(-a * r)
        return total


def radial_derivatives(profile, r, order):
    """``[f, f', f'', ...]`` up to ``order`` at radii ``r``."""
    out = [profile(r)]
    p = profile
    for _ in range(order):
        p = p.derivative()
        out.append(p(r))
    return out


def hessian_of_radial(d, r, xh):
    """``d_j d_l f`` from radial derivatives ``d = [f, f', f'']``."""
    f1, f2 = d[1], d[2]
    eye = np.eye(3)
    A = (f2 - f1 / r)[..., None, None]
    B = (f1 / r)[..., None, None]
    return A * xh[..., :, None] * xh[..., None, :] + B * eye


def third_of_radial(d, r, xh):
    """``d_m d_j d_l f`` from radial derivatives up to order 3."""
    f1, f2, f3 = d[1], d[2], d[3]
    eye = np.eye(3)
    a = (f3 - 3.0 * f2 / r + 3.0 * f1 / r**2)[..., None, None, None]
    b = (f2 / r - f1 / r**2)[..., None, None, None]
    xxx = xh[..., :, None, None] * xh[..., None, :, None] * xh[..., None, None, :]
    sym = (
        eye[None, :, :] * xh[..., :, None, None]
        + eye[:, None, :] * xh[..., None, :, None]
        + eye[:, :, None] * xh[..., None, None, :]
    )
    return a * xxx + b * sym


def _four_pi():
    return 4.0 * np.pi


def screened_profiles(mu):
    """Profiles ``Y, h1, Y2, h2`` for the screening parameter ``mu``."""
    mu = complex(mu)
    fp = _four_pi()
    Y = Profile({(-1, mu): 1.0 / fp})
    h1 = Profile({(-1, 0): 1.0 / (fp * mu**2), (-1, mu): -1.0 / (fp * mu**2)})
    Y2 = Profile({(0, mu): 1.0 / (8.0 * np.pi * mu)})
    h2 = Profile(
        {
            (-1, 0): 1.0 / (fp * mu**4),
            (-1, mu): -1.0 / (fp * mu**4),
            (0, mu): -1.0 / (8.0 * np.pi * mu**3),
        }
    )
    return Y, h1, Y2, h2


def screened_reference(x, mu, lam):
    """Inverse transform of ``P/(|xi|^2+mu^2) + i lam xi_1 P/(|xi|^2+mu^2)^2``.

    ``x`` has shape ``(..., 3)`` and must avoid the origin.
    """
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    xh = x / r[..., None]
    Y, h1, Y2, h2 = screened_profiles(mu)
    eye = np.eye(3)
    dY = radial_derivatives(Y, r, 0)
    dh1 = radial_derivatives(h1, r, 2)
    out = dY[0][..., None, None] * eye + hessian_of_radial(dh1, r, xh)
    # lam d_1 (Y2 I + dd h2)
    dY2 = radial_derivatives(Y2, r, 1)
    dh2 = radial_derivatives(h2, r, 3)
    t3 = third_of_radial(dh2, r, xh)
    out = out + lam * ((dY2[1] * xh[..., 0])[..., None, None] * eye + t3[..., 0, :, :])
    return out


def reference_symbol(rho2, xi1, mu, lam):
    """Scalar factor of the reference symbols (projector omitted)."""
    d = rho2 + mu**2
    return 1.0 / d + 1j * lam * xi1 / d**2
