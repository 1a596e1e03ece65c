"""Pairing of the wavelet basis with an orthonormal basis of the section.

The atoms split into ``h`` (one per scale, scales decreasing so that the
D-sum is geometric) and ``g`` (everything else, in enumeration order). The
section basis splits into ``x`` (vectors of the given sequence on which the
family is small) and ``y`` (their orthonormal completion). The unitary built
later sends x_k to g_k and y_k to h_k.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import (BoundViolated, DimensionMismatch, IndexOutOfWindow,
                         InsufficientDecay, RankDeficientPlan, WindowExhausted)
from .wavelet import BasisEnumeration, atom_sup_norm, bound_tables, geometric_tail, scale_bound

__all__ = [
    "PairingPlan",
    "select_h",
    "norm_tables",
    "select_x",
    "complete_y",
    "build_plan",
]


def select_h(enum, count, start_scale=0, translate=0):
    """One atom per scale j = start_scale, start_scale - 1, ... at a fixed translate."""
    out = []
    for m in range(count):
        try:
            out.append(enum.index(start_scale - m, translate))
        except IndexOutOfWindow:
            raise WindowExhausted(
                f"scale {start_scale - m} (h-atom {m + 1} of {count}) is outside the window "
                f"j in {enum.j_range}") from None
    return np.array(out, dtype=int)


def norm_tables(enum, u, g_idx, h_idx, m_max):
    """G[k, i] = ||g_k^(i)||_inf and H[k, i] = ||h_k^(i)||_inf, cross-checked against D_n A_i."""
    _, A = bound_tables(enum, u, m_max)
    tables = []
    for idx in (np.asarray(g_idx, dtype=int), np.asarray(h_idx, dtype=int)):
        t = np.array([[atom_sup_norm(enum, u, n, i) for i in range(m_max + 1)] for n in idx])
        t = t.reshape(len(idx), m_max + 1)
        bound = scale_bound(enum.js[idx])[:, None] * A[None, :]
        if np.any(t > bound * (1 + 1e-8)):
            k, i = np.argwhere(t > bound * (1 + 1e-8))[0]
            raise BoundViolated(f"sup-norm {t[k, i]:.6g} of atom {idx[k]} order {i} "
                                f"exceeds D*A = {bound[k, i]:.6g}")
        tables.append(t)
    return tables[0], tables[1]


def _d_values(image_norms, coimage_norms):
    return 2.0 * (np.asarray(image_norms) ** 0.25 + np.asarray(coimage_norms) ** 0.25)


def select_x(family, G, m_max, n_pairs):
    """Greedy choice of x_1..x_K from the family's sequence.

    e_n becomes x_k when d(e_n) <= 1 and d(e_n) (max_i G[k, i] + 1) <= 2^-k,
    scanning the remaining pool in sequence order. Returns the chosen
    vectors (columns), their positions in the sequence and their d_k.
    """
    G = np.asarray(G, dtype=float)
    if G.shape[0] < n_pairs:
        raise DimensionMismatch(f"G table has {G.shape[0]} rows, need {n_pairs}")
    dvals = _d_values(family.image_norms, family.coimage_norms)
    gmax = G[:, :m_max + 1].max(axis=1) if G.size else np.zeros(0)
    pool = list(range(family.e_seq.shape[1]))
    chosen = []
    for k in range(1, n_pairs + 1):
        thr = 2.0**-k
        for pos, n in enumerate(pool):
            if dvals[n] <= 1 and dvals[n] * (gmax[k - 1] + 1) <= thr:
                chosen.append(pool.pop(pos))
                break
        else:
            raise InsufficientDecay(k, thr / (gmax[k - 1] + 1))
    src = np.array(chosen, dtype=int)
    return family.e_seq[:, src].copy(), src, dvals[src]


def complete_y(x_vecs, dim, drop_tol=1e-6):
    """Orthonormal completion of ``x_vecs`` inside C^dim.

    Coordinate vectors are projected off the span of x and picked greedily
    by largest residual (lowest index on ties), with a second
    orthogonalization pass; candidates with residual below ``drop_tol``
    are dropped.
    """
    x = np.asarray(x_vecs, dtype=complex).reshape(dim, -1)
    resid = np.eye(dim, dtype=complex) - x @ x.conj().T
    ys = []
    for _ in range(dim - x.shape[1]):
        norms = np.linalg.norm(resid, axis=0)
        top = norms.max()
        if top < drop_tol:
            break
        c = int(np.flatnonzero(norms >= top * (1 - 1e-9))[0])
        y = resid[:, c] / norms[c]
        basis = np.hstack([x] + [v[:, None] for v in ys]) if (ys or x.shape[1]) else None
        if basis is not None:
            y = y - basis @ (basis.conj().T @ y)
        y = y / np.linalg.norm(y)
        ys.append(y)
        resid = resid - np.outer(y, y.conj() @ resid)
    return np.array(ys).T.reshape(dim, len(ys))


@dataclass(frozen=True, eq=False)
class PairingPlan:
    """Split {u_n} = {g_k} u {h_k} and {f_n} = {x_k} u {y_k} with their norm tables.

    ``x_vecs`` (N x K) and ``y_vecs`` (N x (N-K)) hold vectors as columns.
    Only the first K g-atoms are images of the section; the rest of
    ``g_idx`` is kept to record the disjoint-union structure of the window.
    """

    j_range: tuple
    k_range: tuple
    start_scale: int
    m_max: int
    h_idx: np.ndarray
    g_idx: np.ndarray
    x_vecs: np.ndarray
    x_source: np.ndarray
    d: np.ndarray
    y_vecs: np.ndarray
    G: np.ndarray
    H: np.ndarray
    A: np.ndarray

    @property
    def enumeration(self):
        return BasisEnumeration.from_window(self.j_range, self.k_range)

    @property
    def dim(self):
        return self.x_vecs.shape[0]

    @property
    def n_pairs(self):
        return self.x_vecs.shape[1]

    @property
    def basis(self):
        """f_1..f_N = x_1..x_K, y_1..y_{N-K} as columns."""
        return np.hstack([self.x_vecs, self.y_vecs])

    @property
    def slot_atoms(self):
        """Atom index of u_n = U f_n for n = 1..N."""
        return np.concatenate([self.g_idx[:self.n_pairs], self.h_idx])

    # budgets -------------------------------------------------------------
    @property
    def budget_g(self):
        """sum_k d_k (G[k, i] + 1) for each i."""
        return (self.d[:, None] * (self.G + 1)).sum(axis=0) if self.n_pairs else np.zeros(self.m_max + 1)

    @property
    def budget_h(self):
        return self.H.sum(axis=0)

    @property
    def declared_g(self):
        return float(sum(2.0**-k for k in range(1, self.n_pairs + 1)))

    @property
    def declared_h(self):
        js = self.enumeration.js[self.h_idx]
        return self.A * float(scale_bound(js).sum())

    @property
    def tail_g(self):
        """Envelope of sum_{k > K} d_k (G + 1) under the 2^-k selection rule."""
        return 2.0**-self.n_pairs

    @property
    def tail_h(self):
        """A_i times the geometric D-tail of the scales below the last h-atom."""
        return self.A * geometric_tail(self.start_scale - len(self.h_idx))

    def validate(self, budget_slack=1e-8):
        enum = self.enumeration
        if set(self.g_idx) & set(self.h_idx):
            raise RankDeficientPlan("g and h atoms overlap")
        if len(set(self.g_idx) | set(self.h_idx)) != len(enum):
            raise RankDeficientPlan("g and h atoms do not cover the window")
        if np.any(self.d > 1):
            raise RankDeficientPlan("some d_k exceeds 1")
        if np.any(self.budget_g > self.declared_g + budget_slack):
            raise RankDeficientPlan("sum d_k (G + 1) exceeds its declared budget")
        if np.any(self.budget_h > self.declared_h * (1 + budget_slack)):
            raise RankDeficientPlan("sum H exceeds its declared budget")
        f = self.basis
        if f.shape[1] != self.dim:
            raise RankDeficientPlan(f"x and y give {f.shape[1]} vectors for dimension {self.dim}")
        err = np.abs(f.conj().T @ f - np.eye(self.dim)).max()
        if err > 1e-10:
            raise RankDeficientPlan(f"x u y is not orthonormal (Gram error {err:.2e})")
        return self


def build_plan(family, enum, u, n_pairs, m_max=None, start_scale=0):
    """Run Step 1 end to end and return a validated :class:`PairingPlan`."""
    m_max = u.m_max if m_max is None else int(m_max)
    N = family.dim
    if not 0 <= n_pairs <= min(N, family.e_seq.shape[1]):
        raise ValueError(f"n_pairs must lie in [0, {min(N, family.e_seq.shape[1])}]")
    h_idx = select_h(enum, N - n_pairs, start_scale)
    taken = set(h_idx.tolist())
    g_idx = np.array([n for n in range(len(enum)) if n not in taken], dtype=int)
    if g_idx.size < n_pairs:
        raise WindowExhausted(f"window leaves {g_idx.size} g-atoms, need {n_pairs}")
    G, H = norm_tables(enum, u, g_idx[:n_pairs], h_idx, m_max)
    x, src, d = select_x(family, G, m_max, n_pairs)
    y = complete_y(x, N)
    _, A = bound_tables(enum, u, m_max)
    plan = PairingPlan(enum.j_range, enum.k_range, int(start_scale), m_max, h_idx, g_idx,
                       x, src, d, y, G, H, A)
    return plan.validate()


def _fmt(v):
    return repr(float(v))


def write_manifest(plan, path, header=()):
    """Pairing manifest: sections [meta] [h] [g] [x] [y] [budgets], comma-delimited, exact floats."""
    lines = ["# pairing-manifest v1"] + [f"# {h}" for h in header]
    lines += ["[meta]",
              f"dim,{plan.dim}", f"n_pairs,{plan.n_pairs}", f"m_max,{plan.m_max}",
              f"start_scale,{plan.start_scale}",
              f"j_range,{plan.j_range[0]},{plan.j_range[1]}",
              f"k_range,{plan.k_range[0]},{plan.k_range[1]}",
              "A," + ",".join(_fmt(a) for a in plan.A)]
    enum = plan.enumeration
    lines.append("[h]")
    lines.append("# k,n,j,k_translate,H_0..H_m")
    for k, n in enumerate(plan.h_idx):
        lines.append(",".join([str(k + 1), str(n), str(enum.js[n]), str(enum.ks[n])]
                              + [_fmt(v) for v in plan.H[k]]))
    lines.append("[g]")
    lines.append("# k,n,j,k_translate,G_0..G_m (G only for the paired atoms)")
    for k, n in enumerate(plan.g_idx):
        row = [str(k + 1), str(n), str(enum.js[n]), str(enum.ks[n])]
        if k < plan.n_pairs:
            row += [_fmt(v) for v in plan.G[k]]
        lines.append(",".join(row))
    lines.append("[x]")
    lines.append("# k,source,d_k,re_1,im_1,...")
    for k in range(plan.n_pairs):
        v = plan.x_vecs[:, k]
        lines.append(",".join([str(k + 1), str(plan.x_source[k]), _fmt(plan.d[k])]
                              + [f"{_fmt(c.real)},{_fmt(c.imag)}" for c in v]))
    lines.append("[y]")
    lines.append("# k,re_1,im_1,...")
    for k in range(plan.y_vecs.shape[1]):
        v = plan.y_vecs[:, k]
        lines.append(",".join([str(k + 1)] + [f"{_fmt(c.real)},{_fmt(c.imag)}" for c in v]))
    lines.append("[budgets]")
    lines.append("# i,sum_d(G+1),declared_g,tail_g,sum_H,declared_h,tail_h")
    for i in range(plan.m_max + 1):
        lines.append(",".join([str(i), _fmt(plan.budget_g[i]), _fmt(plan.declared_g),
                               _fmt(plan.tail_g), _fmt(plan.budget_h[i]),
                               _fmt(plan.declared_h[i]), _fmt(plan.tail_h[i])]))
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text


def _complex_row(fields):
    vals = np.array([float(f) for f in fields])
    return vals[0::2] + 1j * vals[1::2]


def read_manifest(path):
    """Inverse of :func:`write_manifest`; the plan is re-validated on load."""
    sections, current = {}, None
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                sections[current] = []
                continue
            if current is None:
                raise ValueError(f"{path}: data before the first section")
            sections[current].append(line.split(","))
    missing = {"meta", "h", "g", "x", "y", "budgets"} - set(sections)
    if missing:
        raise ValueError(f"{path}: missing sections {sorted(missing)}")
    meta = {row[0]: row[1:] for row in sections["meta"]}
    dim, K, m_max = int(meta["dim"][0]), int(meta["n_pairs"][0]), int(meta["m_max"][0])
    h_rows, g_rows = sections["h"], sections["g"]
    h_idx = np.array([int(r[1]) for r in h_rows], dtype=int)
    H = np.array([[float(v) for v in r[4:]] for r in h_rows]).reshape(len(h_rows), m_max + 1)
    g_idx = np.array([int(r[1]) for r in g_rows], dtype=int)
    G = np.array([[float(v) for v in r[4:]] for r in g_rows[:K]]).reshape(K, m_max + 1)
    x_rows = sections["x"]
    x = np.array([_complex_row(r[3:]) for r in x_rows]).T.reshape(dim, K)
    src = np.array([int(r[1]) for r in x_rows], dtype=int)
    d = np.array([float(r[2]) for r in x_rows])
    y = np.array([_complex_row(r[1:]) for r in sections["y"]]).T.reshape(dim, dim - K)
    plan = PairingPlan((int(meta["j_range"][0]), int(meta["j_range"][1])),
                       (int(meta["k_range"][0]), int(meta["k_range"][1])),
                       int(meta["start_scale"][0]), m_max, h_idx, g_idx, x, src, d, y, G, H,
                       np.array([float(a) for a in meta["A"]]))
    return plan.validate()
