"""Lemarié-Meyer wavelet basis of L2(R).

The mother wavelet is defined through its Fourier symbol

    u(s) = 1/(2 pi) * int exp(i xi (s + 1/2)) sgn(xi) b(|xi|) dxi

with a C-infinity bell ``b`` supported on [2pi/3, 8pi/3]. Because the symbol
is odd, ``u`` is purely imaginary:

    u^(i)(s) = c_i / pi * int_{supp b} b(xi) xi^i trig_i(xi (s + 1/2)) dxi

with ``trig_i = sin`` for even ``i``, ``cos`` for odd ``i`` and
``c_i = 1j * (-1)**(i // 2)``. The real integral is evaluated by composite
Gauss-Legendre on the two smooth pieces of the bell.
"""
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import IndexOutOfWindow, OrderExceeded, ToleranceNotMet
from .parallel import thread_map

__all__ = [
    "BellFunction",
    "MotherWavelet",
    "BasisEnumeration",
    "make_bell",
    "smooth_transition",
    "eval_mother",
    "eval_atom",
    "evaluate_atoms",
    "atom_sup_norm",
    "grid_sup_norms",
    "scale_bound",
    "bound_tables",
    "geometric_tail",
    "gram_matrix",
    "fourier_gram",
]

# elements per trig/matmul block
_BLOCK = 1 << 21


def _exp_ramp(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    with np.errstate(over="ignore"):
        out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_transition(x):
    """C-infinity cut ``nu`` with nu = 0 on (-inf, 0], 1 on [1, inf), nu(x) + nu(1-x) = 1."""
    a = _exp_ramp(x)
    b = _exp_ramp(1.0 - np.asarray(x, dtype=float))
    return a / (a + b)


@dataclass(frozen=True)
class BellFunction:
    """Meyer bell ``b`` on the frequency band ``support = (a, 4a)``.

    ``b(xi) = sin(pi/2 nu(xi/a - 1))`` on [a, 2a] and
    ``cos(pi/2 nu(xi/(2a) - 1))`` on [2a, 4a]; zero elsewhere.
    """

    support: tuple = (2 * math.pi / 3, 8 * math.pi / 3)
    profile: str = "exp"

    def __post_init__(self):
        lo, hi = self.support
        if not (lo > 0 and math.isclose(hi, 4 * lo)):
            raise ValueError("bell support must be (a, 4a) with a > 0")
        if self.profile != "exp":
            raise ValueError(f"unknown transition profile {self.profile!r}")

    @property
    def lower(self):
        return self.support[0]

    @property
    def breakpoints(self):
        a = self.lower
        return (a, 2 * a, 4 * a)

    def transition(self, x):
        return smooth_transition(x)

    def __call__(self, xi):
        xi = np.abs(np.asarray(xi, dtype=float))
        a = self.lower
        out = np.zeros_like(xi)
        rise = (xi >= a) & (xi <= 2 * a)
        fall = (xi > 2 * a) & (xi <= 4 * a)
        out[rise] = np.sin(0.5 * np.pi * smooth_transition(xi[rise] / a - 1.0))
        # cos(pi/2 nu) written as sin(pi/2 (1 - nu)) so the outer edge is exactly zero
        out[fall] = np.sin(0.5 * np.pi * (1.0 - smooth_transition(xi[fall] / (2 * a) - 1.0)))
        return out


def make_bell(profile="exp"):
    return BellFunction(profile=profile)


@functools.lru_cache(maxsize=128)
def _panel_rule(bell, order, n_panels):
    """Nodes and bell-weighted weights; the second piece is twice as long, so twice the panels."""
    x, w = np.polynomial.legendre.leggauss(order)
    a = bell.lower
    nodes, weights = [], []
    for lo, hi, n in ((a, 2 * a, n_panels), (2 * a, 4 * a, 2 * n_panels)):
        edges = np.linspace(lo, hi, n + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes.append((mid[:, None] + half[:, None] * x).ravel())
        weights.append((half[:, None] * w).ravel())
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights) * bell(nodes)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


class MotherWavelet:
    """Quadrature-backed evaluator of the mother wavelet and its derivatives.

    Everything expensive (sup-norms, decay radius) is computed in the
    constructor; afterwards the object is read-only.

    Parameters
    ----------
    bell : BellFunction, optional
    m_max : int
        Highest derivative order used by the bound tables. One extra order
        is materialized to back moduli of continuity.
    order : int
        Gauss-Legendre points per panel.
    min_panels, radians_per_panel : float
        Panels on the first bell piece are ``min_panels + ceil(|x| a / radians_per_panel)``
        for argument ``x = s + 1/2``, so the count grows like ``1 + |s|``.
    max_panels : int
        Panel budget; arguments needing more raise ``ToleranceNotMet``.
    decay_tol : float
        Relative level defining ``decay_radius``: beyond it
        ``|u^(i)| <= decay_tol * ||u^(i)||_inf`` for every cached order.
    """

    def __init__(self, bell=None, m_max=3, order=20, min_panels=6, radians_per_panel=8.0,
                 max_panels=1 << 15, decay_tol=1e-10, scan_radius=256.0, scan_step=1 / 32):
        if m_max < 0:
            raise ValueError("m_max must be non-negative")
        self.bell = bell if bell is not None else make_bell()
        self.m_max = int(m_max)
        self.max_order = self.m_max + 1
        self.order = int(order)
        self.min_panels = int(min_panels)
        self.radians_per_panel = float(radians_per_panel)
        self.max_panels = int(max_panels)
        self.decay_tol = float(decay_tol)
        self.scan_radius = float(scan_radius)
        self.scan_step = float(scan_step)
        self.sup_norms, self.argmax, self.decay_radius = self._scan()

    # -- quadrature ------------------------------------------------------
    def panels_for(self, radius):
        n = self.min_panels + int(math.ceil(radius * self.bell.lower / self.radians_per_panel))
        if n > self.max_panels:
            raise ToleranceNotMet(
                f"|x| = {radius:.4g} needs {n} panels, budget is {self.max_panels}")
        return n

    def _integrate(self, x, n_panels, i):
        nodes, weights = _panel_rule(self.bell, self.order, n_panels)
        w = weights * nodes**i
        trig = np.sin if i % 2 == 0 else np.cos
        rows = max(1, _BLOCK // nodes.size)
        starts = range(0, x.size, rows)
        parts = thread_map(lambda a: trig(np.multiply.outer(x[a:a + rows], nodes)) @ w, starts)
        phase = 1j * (-1) ** (i // 2) / math.pi
        return phase * np.concatenate(parts) if parts else np.zeros(0, complex)

    def evaluate(self, x, i=0, with_error=False):
        """u^(i) at wavelet arguments ``x`` (not shifted: ``x`` is ``s``).

        With ``with_error`` an estimate from a doubled panel count is also returned.
        """
        if not 0 <= i <= self.max_order:
            raise OrderExceeded(f"derivative order {i} exceeds {self.max_order}")
        s = np.asarray(x, dtype=float)
        flat = s.ravel() + 0.5
        out = np.empty(flat.shape, dtype=complex)
        err = np.zeros(flat.shape) if with_error else None
        level = np.ceil(np.log2(np.maximum(np.abs(flat), 1.0))).astype(int)
        for lev in np.unique(level):
            idx = np.nonzero(level == lev)[0]
            n = self.panels_for(2.0**lev)
            out[idx] = self._integrate(flat[idx], n, i)
            if with_error:
                fine = self._integrate(flat[idx], 2 * n, i)
                err[idx] = np.abs(fine - out[idx])
        out = out.reshape(s.shape)
        if with_error:
            return out, err.reshape(s.shape)
        return out

    # -- eager caches ----------------------------------------------------
    def _scan(self):
        h = self.scan_step
        grid = np.arange(-self.scan_radius, self.scan_radius + h / 2, h)
        sups, args, radius = [], [], 0.0
        for i in range(self.max_order + 1):
            vals = np.abs(self.evaluate(grid, i))
            sup, arg = self._refine_max(grid, vals, i)
            sups.append(sup)
            args.append(arg)
            big = np.nonzero(vals > self.decay_tol * sup)[0]
            if big[0] == 0 or big[-1] == grid.size - 1:
                raise ToleranceNotMet(
                    f"u^({i}) above decay_tol at the scan edge; increase scan_radius")
            radius = max(radius, abs(grid[big[0]]), abs(grid[big[-1]]))
        return tuple(sups), tuple(args), radius + h

    def _refine_max(self, grid, vals, i, top=5):
        inner = (vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])
        peaks = np.nonzero(inner)[0] + 1
        peaks = peaks[np.argsort(vals[peaks])[::-1][:top]]
        best, best_x = float(vals.max()), float(grid[np.argmax(vals)])
        h = grid[1] - grid[0]
        for p in peaks:
            res = minimize_scalar(lambda t: -abs(self.evaluate(np.array([t]), i)[0]),
                                  bracket=(grid[p] - h, grid[p], grid[p] + h), method="golden",
                                  options={"xtol": 1e-10})
            if -res.fun > best:
                best, best_x = float(-res.fun), float(res.x)
        return best, best_x


def eval_mother(u, s, i=0, tol=None):
    """u^(i)(s); with ``tol`` the quadrature error estimate must stay below ``tol * max(1, ||u^(i)||)``."""
    if tol is None:
        return u.evaluate(s, i)
    val, err = u.evaluate(s, i, with_error=True)
    limit = tol * max(1.0, u.sup_norms[i])
    if np.any(err > limit):
        raise ToleranceNotMet(f"quadrature error {err.max():.2e} exceeds {limit:.2e}")
    return val


@dataclass(frozen=True, eq=False)
class BasisEnumeration:
    """Bijection n <-> (j_n, k_n) over a rectangular window of dyadic atoms.

    The order is a diagonal spiral: by |j| + |k|, then |j|, then j, |k|, k.
    """

    j_range: tuple
    k_range: tuple
    js: np.ndarray
    ks: np.ndarray

    @classmethod
    def from_window(cls, j_range, k_range):
        j0, j1 = (int(v) for v in j_range)
        k0, k1 = (int(v) for v in k_range)
        if j0 > j1 or k0 > k1:
            raise ValueError("empty atom window")
        pairs = sorted(((j, k) for j in range(j0, j1 + 1) for k in range(k0, k1 + 1)),
                       key=lambda p: (abs(p[0]) + abs(p[1]), abs(p[0]), p[0], abs(p[1]), p[1]))
        js = np.array([p[0] for p in pairs], dtype=int)
        ks = np.array([p[1] for p in pairs], dtype=int)
        js.setflags(write=False)
        ks.setflags(write=False)
        return cls((j0, j1), (k0, k1), js, ks)

    def __len__(self):
        return self.js.size

    def _check(self, n):
        n = np.asarray(n)
        if np.any((n < 0) | (n >= len(self))):
            raise IndexOutOfWindow(f"atom index outside window of {len(self)} atoms")
        return n

    def pair(self, n):
        n = int(self._check(n))
        return int(self.js[n]), int(self.ks[n])

    def index(self, j, k):
        try:
            return self._lut[(int(j), int(k))]
        except KeyError:
            raise IndexOutOfWindow(f"(j, k) = ({j}, {k}) not in window") from None

    @functools.cached_property
    def _lut(self):
        return {(int(j), int(k)): n for n, (j, k) in enumerate(zip(self.js, self.ks))}

    @property
    def D(self):
        return scale_bound(self.js)


def scale_bound(j):
    """D for scale j: 2**(j*j) when j > 0, (1/sqrt 2)**|j| otherwise."""
    j = np.asarray(j, dtype=float)
    return np.where(j > 0, 2.0 ** (np.maximum(j, 0) ** 2), 2.0 ** (-np.abs(j) / 2))


def bound_tables(enum, u, m_max=None):
    """Return (D per atom, A per derivative order) with A_i = 2**((i + 1/2)**2) ||u^(i)||."""
    m_max = u.m_max if m_max is None else m_max
    if m_max > u.max_order:
        raise OrderExceeded(f"sup-norms cached only up to order {u.max_order}")
    A = np.array([2.0 ** ((i + 0.5) ** 2) * u.sup_norms[i] for i in range(m_max + 1)])
    return enum.D, A


def geometric_tail(j_next):
    """Sum of D over all scales j <= j_next (one atom per scale)."""
    r = 1 / math.sqrt(2)
    if j_next <= 0:
        return r ** abs(j_next) / (1 - r)
    return sum(2.0 ** (j * j) for j in range(1, j_next + 1)) + 1 / (1 - r)


def _atom_values(enum, u, indices, grids, i, truncate):
    """Atom samples; ``grids`` is one shared array or one array per atom."""
    indices = np.atleast_1d(enum._check(np.asarray(indices, dtype=int)))
    js = enum.js[indices].astype(float)
    ks = enum.ks[indices].astype(float)
    shared = isinstance(grids, np.ndarray)
    args = [2.0**j * (grids if shared else g) - k
            for j, k, g in zip(js, ks, [grids] * len(js) if shared else grids)]
    flat = np.concatenate([a.ravel() for a in args]) if args else np.zeros(0)
    keep = np.abs(flat) <= u.decay_radius if truncate else np.ones(flat.size, bool)
    uniq, inv = np.unique(flat[keep], return_inverse=True)
    vals = np.zeros(flat.size, dtype=complex)
    vals[keep] = u.evaluate(uniq, i)[inv]
    out, pos = [], 0
    for j, a in zip(js, args):
        out.append(2.0 ** (j * (i + 0.5)) * vals[pos:pos + a.size].reshape(a.shape))
        pos += a.size
    return out


def evaluate_atoms(enum, u, indices, s, i=0, truncate=False):
    """Matrix of u_n^(i)(s) = 2^{j(i+1/2)} u^(i)(2^j s - k); rows follow ``indices``.

    ``truncate`` zeroes arguments beyond the mother's decay radius.
    """
    s = np.asarray(s, dtype=float)
    vals = _atom_values(enum, u, indices, s, i, truncate)
    return np.stack(vals) if vals else np.zeros((0,) + s.shape, complex)


def eval_atom(enum, u, n, s, i=0):
    return evaluate_atoms(enum, u, [n], s, i)[0]


def atom_sup_norm(enum, u, n, i=0):
    """||u_n^(i)||_inf from the cached mother sup-norm (dilation covariance)."""
    j = enum.js[enum._check(np.asarray(n, dtype=int))]
    return 2.0 ** (j * (i + 0.5)) * u.sup_norms[i]


def grid_sup_norms(enum, u, indices, i=0, step=2.0**-6):
    """Measured max of |u_n^(i)| over a dense grid covering each atom's decay support.

    The grid is ``s = (x + k) / 2**j`` with ``x`` stepping by ``step`` across
    ``[-R, R]``, R the decay radius, so every atom is sampled at the same
    relative resolution.
    """
    indices = np.atleast_1d(np.asarray(indices, dtype=int))
    R = u.decay_radius
    x = np.arange(-math.ceil(R / step), math.ceil(R / step) + 1) * step
    grids = [(x + enum.ks[n]) / 2.0 ** enum.js[n] for n in indices]
    vals = _atom_values(enum, u, indices, grids, i, truncate=False)
    return np.array([np.abs(v).max() for v in vals])


def _default_step(js):
    # trapezoid is exact for integrands band-limited below 2 pi / h
    omega = 2 * (8 * math.pi / 3) * 2.0 ** int(np.max(js))
    return 2.0 ** math.floor(math.log2(2 * math.pi / omega * 0.999))


def gram_matrix(enum, u, indices, step=None):
    """Spatial Gram matrix of atoms by trapezoid quadrature over their joint decay support.

    Each atom is sampled on the common grid ``step * Z`` where its argument
    lies within the mother's decay radius and is taken as zero elsewhere.
    """
    indices = np.atleast_1d(np.asarray(indices, dtype=int))
    enum._check(indices)
    if indices.size == 0:
        return np.zeros((0, 0), complex)
    js, ks = enum.js[indices], enum.ks[indices]
    h = _default_step(js) if step is None else float(step)
    if h >= _default_step(js) * 2:
        raise ToleranceNotMet(f"grid step {h} aliases the finest atom in the set")
    R = u.decay_radius
    lo = np.ceil((ks - R) / 2.0**js / h).astype(np.int64)
    hi = np.floor((ks + R) / 2.0**js / h).astype(np.int64)
    grids = [np.arange(a, b + 1) * h for a, b in zip(lo, hi)]
    vals = _atom_values(enum, u, indices, grids, 0, truncate=True)
    n = indices.size
    G = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(a, n):
            start, stop = max(lo[a], lo[b]), min(hi[a], hi[b])
            if start > stop:
                continue
            va = vals[a][start - lo[a]:stop - lo[a] + 1]
            vb = vals[b][start - lo[b]:stop - lo[b] + 1]
            G[a, b] = h * np.vdot(vb, va)
            G[b, a] = np.conj(G[a, b])
    return G


def _symbol(bell, eta):
    return np.exp(0.5j * eta) * np.sign(eta) * bell(np.abs(eta))


def fourier_gram(enum, bell, indices, panels=16, order=20):
    """Gram matrix of atoms by Gauss-Legendre quadrature in the frequency domain.

    Uses Parseval: <u_a, u_b> = 1/(2 pi) int hat u_a conj(hat u_b). After the
    substitution xi = 2^{j_a} eta the integrand depends only on j_a - j_b, so
    very coarse scales cost nothing extra. Pairs whose bands overlap only in
    a point (|j_a - j_b| >= 2) vanish exactly.
    """
    indices = np.atleast_1d(np.asarray(indices, dtype=int))
    enum._check(indices)
    x, w = np.polynomial.legendre.leggauss(order)
    a0, _, a4 = bell.breakpoints
    n = indices.size
    G = np.zeros((n, n), dtype=complex)
    js, ks = enum.js[indices], enum.ks[indices]
    for p in range(n):
        for q in range(p, n):
            delta = int(js[p] - js[q])
            if abs(delta) > 1:
                continue
            scale = 2.0**delta
            lo, hi = max(a0, a0 / scale), min(a4, a4 / scale)
            cuts = sorted({lo, hi} | {c for c in (2 * a0, 2 * a0 / scale) if lo < c < hi})
            total = 0j
            for c0, c1 in zip(cuts[:-1], cuts[1:]):
                edges = np.linspace(c0, c1, panels + 1)
                half = 0.5 * np.diff(edges)
                eta = (0.5 * (edges[:-1] + edges[1:])[:, None] + half[:, None] * x).ravel()
                wt = (half[:, None] * w).ravel()
                for sgn in (1.0, -1.0):
                    e = sgn * eta
                    fa = np.exp(-1j * ks[p] * e) * _symbol(bell, e)
                    fb = np.exp(-1j * ks[q] * scale * e) * _symbol(bell, scale * e)
                    total += np.sum(wt * fa * np.conj(fb))
            G[p, q] = 2.0 ** (delta / 2) / (2 * math.pi) * total
            G[q, p] = np.conj(G[p, q])
    return G
