"""Inverse Fourier integrals of symbols that are axisymmetric about e_1.

For a symbol ``a(|xi|, xi_1/|xi|)`` times a monomial in ``xi/|xi|`` we
compute

    (2 pi)^-3 int a(xi) xi_hat^alpha exp(i xi . x) dxi

in spherical frequency coordinates ``xi = rho (cos th, sin th cos ph,
sin th sin ph)`` with the evaluation point rotated into the frame
``x = (x_1, b, 0)``.  The azimuthal integral is done exactly with Bessel
functions; ``rho`` and ``th`` use composite Gauss-Legendre rules.

Symbols without compact support are multiplied by the smooth radial window
``erfc((rho - rho_mid) / sigma) / 2`` with ``sigma`` proportional to
``1 / |x|``.  The discarded high-frequency part is smooth on the scale
``sigma``, so its inverse transform at ``|x|`` is ``O(exp(-(sigma |x|)^2/4))``.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erfc, j0, j1

FOURIER_NORM = (2.0 * np.pi) ** -3

WINDOW_SCALE = 12.0  # sigma * |x|
WINDOW_MID = 4.0  # rho_mid / sigma
WINDOW_TAIL = 6.0  # integrate up to rho_mid + WINDOW_TAIL * sigma

# (n2, n3) exponents of (cos ph, sin ph) grouped with the admissible n1
_PAIRS = {(0, 0): (0, 1, 2, 3), (1, 0): (0, 1, 2), (2, 0): (0, 1), (0, 2): (0, 1), (3, 0): (0,), (1, 2): (0,)}


def monomials(max_degree):
    """Multi-indices ``(n1, n2, n3)`` with non-vanishing azimuthal integral."""
    out = []
    for (n2, n3), n1s in _PAIRS.items():
        for n1 in n1s:
            if n1 + n2 + n3 <= max_degree:
                out.append((n1, n2, n3))
    return sorted(out, key=lambda m: (sum(m), m))


def phi_moments(pairs, z):
    """``int_0^2pi cos^n2 sin^n3 exp(i z cos ph) dph`` for each ``(n2, n3)``."""
    z = np.asarray(z, dtype=float)
    J0 = j0(z)
    J1 = j1(z)
    small = z < 1e-3
    zs = np.where(small, 1.0, z)
    # J1(z)/z and (z J0 - 2 J1)/z^2 with series near 0
    j1z = np.where(small, 0.5 - z * z / 16.0 + z**4 / 384.0, J1 / zs)
    q = np.where(small, -z / 8.0 + z**3 / 96.0, (zs * J0 - 2.0 * J1) / zs**2)
    two_pi = 2.0 * np.pi
    table = {
        (0, 0): lambda: two_pi * J0,
        (1, 0): lambda: 2j * np.pi * J1,
        (2, 0): lambda: two_pi * (J0 - j1z),
        (0, 2): lambda: two_pi * j1z,
        (3, 0): lambda: 2j * np.pi * (J1 + q),
        (1, 2): lambda: -2j * np.pi * q,
    }
    out = {}
    for pair in pairs:
        if pair not in table:
            raise NotImplementedError(f"azimuthal moment {pair} not tabulated")
        out[pair] = table[pair]()
    return out


def phi_moment(n2, n3, z):
    return phi_moments([(n2, n3)], z)[(n2, n3)]


def gauss_panels(edges, n):
    """Composite Gauss-Legendre rule on consecutive intervals of ``edges``."""
    t, w = leggauss(n)
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    x = (a + b) / 2 + half * t[None, :]
    return x.ravel(), (half * w[None, :]).ravel()


@dataclass(frozen=True)
class NodeSet:
    """Flattened spherical-coordinate nodes; ``w`` holds all Jacobians."""

    rho: np.ndarray
    c: np.ndarray
    s: np.ndarray
    w: np.ndarray

    @property
    def size(self):
        return self.rho.size

    def xi(self):
        """Node directions at azimuth 0, shape ``(n, 3)`` (unit vectors)."""
        return np.stack([self.c, self.s, np.zeros_like(self.c)], axis=-1)


def _theta_rule(n_panels, n_gl):
    th, wt = gauss_panels(np.linspace(0.0, np.pi, n_panels + 1), n_gl)
    return th, wt


def tensor_nodes(rho, w_rho, th, w_th):
    """Tensor product of a radial and a polar rule."""
    R, T = np.meshgrid(rho, th, indexing="ij")
    W = np.outer(w_rho * rho**2, w_th * np.sin(th))
    return NodeSet(R.ravel(), np.cos(T).ravel(), np.sin(T).ravel(), FOURIER_NORM * W.ravel())


def window(rho, r, scale=WINDOW_SCALE, mid=WINDOW_MID, flat=0.0):
    sigma = scale / r
    return 0.5 * erfc((rho - window_mid(r, scale, mid, flat)) / sigma)


def window_mid(r, scale=WINDOW_SCALE, mid=WINDOW_MID, flat=0.0):
    """Window centre: at least ``mid`` widths, and ``mid + 2`` widths past ``flat``."""
    sigma = scale / r
    return max(mid * sigma, flat + (mid + 2.0) * sigma)


def windowed_nodes(r, refine=1.0, scale=WINDOW_SCALE, n_gl=8, panel_phase=2.0, feature=1.0, flat=0.0):
    """Nodes for evaluating a windowed symbol near radius ``|x| = r``.

    Both the radial and the polar rule resolve phases ``rho r`` of up to
    ``(WINDOW_MID + WINDOW_TAIL) * scale``; ``refine`` scales the panel count.
    ``feature`` is the frequency scale on which the symbol varies; the radial
    rule is additionally refined on ``[0, 8 feature]``.  The window stays
    flat up to ``flat``, which should cover the real parts of symbol poles
    close to the real axis.
    """
    sigma = scale / r
    rho_max = window_mid(r, scale, WINDOW_MID, flat) + WINDOW_TAIL * sigma
    phase = rho_max * r
    n_panels = max(4, int(np.ceil(refine * phase / panel_phase)))
    edges = np.linspace(0.0, rho_max, n_panels + 1)
    # symbol features live at rho = O(1); keep panels there narrow as well
    geo = feature / 8.0 * 2.0 ** np.arange(0, 60)
    geo = geo[geo < rho_max]
    edges = np.unique(np.concatenate([edges, geo, feature / 4.0 * np.arange(1, 33)]))
    edges = edges[edges <= rho_max]
    rho, w_rho = gauss_panels(edges, n_gl)
    th, w_th = _theta_rule(n_panels, n_gl)
    nodes = tensor_nodes(rho, w_rho, th, w_th)
    win = window(nodes.rho, r, scale, flat=flat)
    return NodeSet(nodes.rho, nodes.c, nodes.s, nodes.w * win)


def monomial_integrals(x1, b, nodes, A, max_degree=2, chunk=4_000_000):
    """Integrals of ``A[:, q] * xi_hat^alpha`` at frame points ``(x1, b, 0)``.

    ``A`` has shape ``(n_nodes, n_sym)``.  Returns ``(mono_list, I)`` with
    ``I`` of shape ``(n_points, n_sym, n_mono)``.  Work is blocked over
    points and nodes so that no block exceeds ``chunk`` entries.
    """
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    A = np.asarray(A)
    if A.ndim == 1:
        A = A[:, None]
    monos = monomials(max_degree)
    n_pts, n_sym = x1.size, A.shape[1]
    out = np.zeros((n_pts, n_sym, len(monos)), dtype=complex)
    groups = {}
    for j, (n1, n2, n3) in enumerate(monos):
        groups.setdefault((n2, n3), []).append((j, n1))
    node_block = max(1, min(nodes.size, chunk // max(1, 8 * n_sym)))
    pt_block = max(1, chunk // node_block)
    for n0 in range(0, nodes.size, node_block):
        ns = slice(n0, min(n0 + node_block, nodes.size))
        w, c, sn, rho = nodes.w[ns], nodes.c[ns], nodes.s[ns], nodes.rho[ns]
        An = A[ns]
        kr, ks = rho * c, rho * sn
        weighted = {}
        for (n2, n3), items in groups.items():
            cols = [(w * c**n1 * sn ** (n2 + n3))[:, None] * An for _, n1 in items]
            weighted[(n2, n3)] = np.concatenate(cols, axis=1)
        for p0 in range(0, n_pts, pt_block):
            sl = slice(p0, min(p0 + pt_block, n_pts))
            E = np.exp(1j * np.outer(x1[sl], kr))
            moments = phi_moments(list(groups), np.outer(b[sl], ks))
            for (n2, n3), items in groups.items():
                res = (E * moments[(n2, n3)]) @ weighted[(n2, n3)]
                for q, (j, _) in enumerate(items):
                    out[sl, :, j] += res[:, q * n_sym : (q + 1) * n_sym]
    return monos, out


def _mono_of(indices):
    n = [0, 0, 0]
    for i in indices:
        n[i] += 1
    return tuple(n)


def assemble_projector(monos, I):
    """Frame tensor ``int a (delta_jl - xi_hat_j xi_hat_l)``; ``I[..., mono]``."""
    pos = {m: j for j, m in enumerate(monos)}
    shape = I.shape[:-1] + (3, 3)
    T = np.zeros(shape, dtype=complex)
    I0 = I[..., pos[(0, 0, 0)]]
    for j in range(3):
        for l in range(3):
            m = _mono_of((j, l))
            v = -I[..., pos[m]] if m in pos else 0.0
            T[..., j, l] = v + (I0 if j == l else 0.0)
    return T


def assemble_grad_projector(monos, I):
    """Frame tensor ``int a xi_hat_m (delta_jl - xi_hat_j xi_hat_l)``."""
    pos = {m: j for j, m in enumerate(monos)}
    shape = I.shape[:-1] + (3, 3, 3)
    T = np.zeros(shape, dtype=complex)
    for m in range(3):
        m1 = _mono_of((m,))
        first = I[..., pos[m1]] if m1 in pos else 0.0
        for j in range(3):
            for l in range(3):
                m3 = _mono_of((m, j, l))
                v = -I[..., pos[m3]] if m3 in pos else 0.0
                T[..., m, j, l] = v + (first if j == l else 0.0)
    return T


def frame_coordinates(x):
    """Split points into ``(x1, b, alpha)`` with ``x_perp = b (cos a, sin a)``."""
    x = np.asarray(x, dtype=float)
    x1 = x[..., 0]
    b = np.hypot(x[..., 1], x[..., 2])
    alpha = np.arctan2(x[..., 2], x[..., 1])
    return x1, b, alpha


def rotations(alpha):
    """Rotation matrices about e_1, shape ``alpha.shape + (3, 3)``."""
    alpha = np.asarray(alpha, dtype=float)
    c, s = np.cos(alpha), np.sin(alpha)
    R = np.zeros(alpha.shape + (3, 3))
    R[..., 0, 0] = 1.0
    R[..., 1, 1] = c
    R[..., 1, 2] = -s
    R[..., 2, 1] = s
    R[..., 2, 2] = c
    return R


def rotate2(R, T):
    return np.einsum("...ja,...lb,...ab->...jl", R, R, T)


def rotate3(R, T):
    return np.einsum("...ma,...jb,...lc,...abc->...mjl", R, R, R, T)
