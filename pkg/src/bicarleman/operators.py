"""Finite-section operator model: family, projections and Schmidt machinery.

The Hilbert space is represented by C^N with its standard inner product
<a, b> = sum a * conj(b). Vectors of a set are stored as matrix columns.
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._validation import check_operator_matrix, check_orthonormal_columns, check_vector
from .exceptions import DimensionMismatch, InequalityViolated

__all__ = [
    "OperatorSpec",
    "OperatorFamily",
    "SchmidtSystem",
    "Split",
    "apply",
    "adjoint_apply",
    "family_decay",
    "project_E",
    "split",
    "schmidt",
    "quarter_power",
    "gram_power",
    "schwarz_chain",
    "nuclear_budget",
]

SVD_CUTOFF = 1e-12


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """A bounded operator on the section, stored as a dense N x N matrix."""

    matrix: np.ndarray
    label: str = ""
    norm_bound: float = None

    def __post_init__(self):
        m = check_operator_matrix(self.matrix)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        norm = self.norm
        if self.norm_bound is None:
            object.__setattr__(self, "norm_bound", norm)
        elif norm > self.norm_bound * (1 + 1e-8):
            raise ValueError(f"{self.label!r}: spectral norm {norm:.6g} exceeds declared "
                             f"bound {self.norm_bound:.6g}")

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def norm(self):
        if not self.matrix.any():
            return 0.0
        return float(np.linalg.norm(self.matrix, 2))

    @property
    def H(self):
        return OperatorSpec(self.matrix.conj().T, self.label + "*", self.norm_bound)

    def __matmul__(self, other):
        if isinstance(other, OperatorSpec):
            return OperatorSpec(self.matrix @ other.matrix)
        return apply(self, other)


def apply(op, v):
    v = check_vector(v, op.dim)
    return op.matrix @ v


def adjoint_apply(op, v):
    v = check_vector(v, op.dim)
    return op.matrix.conj().T @ v


def family_decay(family):
    """d(e_n) = max over members of max(||S e_n||, ||S* e_n||)."""
    return np.maximum(family.image_norms, family.coimage_norms)


def _image_norms(members, vecs):
    if not members:
        raise ValueError("operator family is empty")
    img = np.max([np.linalg.norm(m.matrix @ vecs, axis=0) for m in members], axis=0)
    coimg = np.max([np.linalg.norm(m.matrix.conj().T @ vecs, axis=0) for m in members], axis=0)
    return img, coimg


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    """Members S_alpha sharing the section, plus the orthonormal sequence e_1..e_M.

    ``e_seq`` holds the vectors as columns (shape N x M). Decay values are
    always computed here, never taken from the caller.
    """

    members: tuple
    e_seq: np.ndarray
    image_norms: np.ndarray = field(init=False)
    coimage_norms: np.ndarray = field(init=False)

    def __post_init__(self):
        members = tuple(m if isinstance(m, OperatorSpec) else OperatorSpec(m) for m in self.members)
        if not members:
            raise ValueError("operator family is empty")
        dims = {m.dim for m in members}
        if len(dims) != 1:
            raise DimensionMismatch(f"family members have different dimensions {sorted(dims)}")
        (n,) = dims
        e = check_orthonormal_columns(self.e_seq, n, tol=1e-10)
        e.setflags(write=False)
        img, coimg = _image_norms(members, e)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "e_seq", e)
        object.__setattr__(self, "image_norms", img)
        object.__setattr__(self, "coimage_norms", coimg)

    @property
    def dim(self):
        return self.members[0].dim

    @property
    def labels(self):
        return [m.label for m in self.members]

    @property
    def decay(self):
        return family_decay(self)

    def member(self, label):
        for m in self.members:
            if m.label == label:
                return m
        raise KeyError(f"no family member labelled {label!r}")


class Split(NamedTuple):
    """The four pieces of S = (1-E)S + ES and S* = (1-E)S* + ES*."""

    Qt: OperatorSpec  # (1 - E) S
    Jt: OperatorSpec  # S* E
    Q: OperatorSpec   # (1 - E) S*
    J: OperatorSpec   # S E


def project_E(x_vecs, dim=None):
    """Orthogonal projection onto the span of the columns of ``x_vecs``."""
    x = np.asarray(x_vecs, dtype=complex)
    if x.ndim != 2:
        raise ValueError("x_vecs must be a 2-D array of column vectors")
    x = check_orthonormal_columns(x, dim if dim is not None else x.shape[0], tol=1e-10)
    return OperatorSpec(x @ x.conj().T, "E")


def split(S, E):
    if S.dim != E.dim:
        raise DimensionMismatch("S and E live on different sections")
    s, e = S.matrix, E.matrix
    sh = s.conj().T
    one_minus_e = np.eye(S.dim) - e
    return Split(
        Qt=OperatorSpec(one_minus_e @ s, "Qt"),
        Jt=OperatorSpec(sh @ e, "Jt"),
        Q=OperatorSpec(one_minus_e @ sh, "Q"),
        J=OperatorSpec(s @ e, "J"),
    )


@dataclass(frozen=True, eq=False)
class SchmidtSystem:
    """op = sum_n s_n <., p_n> q_n with p (right) and q (left) vectors as columns."""

    s: np.ndarray
    p: np.ndarray
    q: np.ndarray

    @property
    def rank(self):
        return self.s.size

    @property
    def dim(self):
        return self.p.shape[0]

    def reconstruct(self):
        return (self.q * self.s) @ self.p.conj().T


def schmidt(op, cutoff=SVD_CUTOFF):
    """SVD truncated to singular values above ``cutoff * s_1``."""
    m = op.matrix if isinstance(op, OperatorSpec) else np.asarray(op, dtype=complex)
    n = m.shape[0]
    if not m.any():
        return SchmidtSystem(np.zeros(0), np.zeros((n, 0), complex), np.zeros((n, 0), complex))
    w, s, vh = np.linalg.svd(m)
    r = int(np.count_nonzero(s > cutoff * s[0]))
    return SchmidtSystem(s[:r].copy(), vh[:r].conj().T.copy(), w[:, :r].copy())


def quarter_power(ss, power=0.25):
    """B = sum_n s_n^power <., p_n> q_n (power 1/4 gives the auxiliary operators)."""
    if ss.rank == 0:
        return OperatorSpec(np.zeros((ss.dim, ss.dim), complex), "B")
    return OperatorSpec((ss.q * ss.s**power) @ ss.p.conj().T, "B")


def gram_power(op, power, cutoff=1e-10):
    """(op op*)^power by a Hermitian eigendecomposition.

    Eigenvalues below ``cutoff`` times the largest are treated as zero;
    round-off in them would otherwise be amplified by small powers.
    """
    m = op.matrix if isinstance(op, OperatorSpec) else np.asarray(op, dtype=complex)
    g = m @ m.conj().T
    lam, vec = np.linalg.eigh(0.5 * (g + g.conj().T))
    if lam.size == 0 or lam[-1] <= 0:
        return np.zeros_like(g)
    lam = np.where(lam > cutoff * lam[-1], lam, 0.0)
    return (vec * lam**power) @ vec.conj().T


@dataclass(frozen=True)
class ChainRecord:
    k: int
    b_norms: float        # ||B* x|| + ||B x|| + ||Bt* x|| + ||Bt x||
    b_norms_alt: float    # same, via (J J*)^(1/8) etc.
    quarter_norms: float  # ||J* x||^(1/4) + ||J x||^(1/4) + ...
    d: float

    def slack(self):
        return min(self.quarter_norms - self.b_norms, self.d - self.quarter_norms)


def schwarz_chain(S, x_vecs, d, slack=1e-10, strict=True):
    """Check ||B*x||+||Bx||+||Bt*x||+||Bt x|| <= sum of quarter powers <= d_k for every x_k.

    Returns one :class:`ChainRecord` per column of ``x_vecs``. With
    ``strict`` a violation beyond ``slack`` raises ``InequalityViolated``.
    """
    x = np.asarray(x_vecs, dtype=complex)
    d = np.asarray(d, dtype=float)
    if x.shape[1] != d.size:
        raise DimensionMismatch("need one d_k per x_k")
    pieces = split(S, project_E(x, S.dim))
    J, Jt = pieces.J.matrix, pieces.Jt.matrix
    B = quarter_power(schmidt(J)).matrix
    Bt = quarter_power(schmidt(Jt)).matrix
    # (J J*)^(1/8), (J* J)^(1/8) and the same for Jt
    fr = [gram_power(J, 0.125), gram_power(J.conj().T, 0.125),
          gram_power(Jt, 0.125), gram_power(Jt.conj().T, 0.125)]
    nrm = lambda a: np.linalg.norm(a, axis=0)
    lhs = nrm(B.conj().T @ x) + nrm(B @ x) + nrm(Bt.conj().T @ x) + nrm(Bt @ x)
    alt = sum(nrm(f @ x) for f in fr)
    mid = (nrm(J.conj().T @ x) ** 0.25 + nrm(J @ x) ** 0.25
           + nrm(Jt.conj().T @ x) ** 0.25 + nrm(Jt @ x) ** 0.25)
    records = [ChainRecord(k + 1, float(lhs[k]), float(alt[k]), float(mid[k]), float(d[k]))
               for k in range(d.size)]
    if strict:
        bad = [r for r in records if r.slack() < -slack]
        if bad:
            r = bad[0]
            raise InequalityViolated(
                f"x_{r.k}: {r.b_norms:.3e} <= {r.quarter_norms:.3e} <= {r.d:.3e} fails")
    return records


def nuclear_budget(ss, ss_t):
    """(sum s_n^(1/2), sum st_n^(1/2))."""
    return float(np.sum(np.sqrt(ss.s))), float(np.sum(np.sqrt(ss_t.s)))
