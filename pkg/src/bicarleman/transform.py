"""Smoothing unitary and separable synthesis of the transformed kernels.

With U f_n = u_n, an operator S on the section becomes T = U S U^-1 and
its kernel is stored as a finite list of separable terms

    K(s, t) = sum_r c_r phi_r(s) conj(psi_r(t)),

where phi_r and psi_r are coefficient vectors over the N paired atoms
(the "slots" u_1..u_N). The terms come in two groups: the h-rows
(``Pt``, one term per y_k with T* h_k != 0) and the Schmidt terms of S* E (``Ft``).
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InconsistentPlan, OrderExceeded, RankDeficientPlan
from .operators import OperatorSpec, quarter_power, schmidt
from .wavelet import atom_sup_norm, evaluate_atoms

__all__ = [
    "SlotBasis",
    "UnitaryMap",
    "SmoothKernel",
    "TruncationReport",
    "build_unitary",
    "conjugate",
    "expand_image",
    "image_coefficients",
    "synthesize_kernel",
    "eval_kernel",
    "carleman_section",
]

EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class SlotBasis:
    """The atoms u_1..u_N paired with the section basis, as callables on R."""

    enum: object
    mother: object
    atoms: np.ndarray

    def __len__(self):
        return self.atoms.size

    def evaluate(self, s, i=0):
        """(N, len(s)) matrix of u_n^(i)(s)."""
        return evaluate_atoms(self.enum, self.mother, self.atoms, np.atleast_1d(s), i)

    def sup_norms(self, i=0):
        return np.array([atom_sup_norm(self.enum, self.mother, n, i) for n in self.atoms])


@dataclass(frozen=True, eq=False)
class UnitaryMap:
    """U: C^N -> span{u_1..u_N}; the coefficient of Uv on u_n is <v, f_n>."""

    plan: object
    f: np.ndarray

    @property
    def dim(self):
        return self.f.shape[0]

    @property
    def matrix(self):
        return self.f.conj().T

    def forward(self, v):
        return self.f.conj().T @ np.asarray(v, dtype=complex)

    def inverse(self, c):
        return self.f @ np.asarray(c, dtype=complex)

    def slots(self, mother):
        plan = self.plan
        return SlotBasis(plan.enumeration, mother, plan.slot_atoms)


def build_unitary(plan):
    f = plan.basis
    if f.shape != (plan.dim, plan.dim):
        raise RankDeficientPlan(f"x u y has {f.shape[1]} vectors in dimension {plan.dim}")
    err = np.abs(f.conj().T @ f - np.eye(plan.dim)).max()
    if err > 1e-10:
        raise RankDeficientPlan(f"x u y is not an orthonormal basis (error {err:.2e})")
    f = f.copy()
    f.setflags(write=False)
    return UnitaryMap(plan, f)


def _check_dim(S, U):
    if S.dim != U.dim:
        raise InconsistentPlan(f"operator of dimension {S.dim} against a plan of dimension {U.dim}")


def conjugate(op, U):
    """T = U S U^-1 in slot coordinates."""
    _check_dim(op, U)
    return OperatorSpec(U.f.conj().T @ op.matrix @ U.f, f"U {op.label} U^-1".strip())


def expand_image(U, v):
    return U.forward(v)


def image_coefficients(S, U, k, adjoint=False):
    """Slot coefficients of T* h_k, i.e. <y_k, S f_n>; with ``adjoint`` those of T h_k."""
    _check_dim(S, U)
    K = U.plan.n_pairs
    y = U.f[:, K + k - 1]
    m = S.matrix.conj().T if adjoint else S.matrix
    return (m @ U.f).conj().T @ y


@dataclass(frozen=True)
class TruncationReport:
    """Upper bounds for what a truncated term list leaves out.

    ``uniform[i, j]`` bounds sup |d_s^i d_t^j (K_full - K)|, ``order_bound[i]``
    is its running maximum over max(i, j) <= i. ``action_l2`` bounds
    ||(T - K) f|| / ||f|| and ``action_sup`` bounds sup_s |((T - K) f)(s)| / ||f||.
    The ``dominant_*`` and ``tail_*`` entries are the in-section dominant
    series for T*h_k expansions and their envelopes beyond the section.
    """

    dominant_g: np.ndarray
    dominant_h: np.ndarray
    tail_g: np.ndarray
    tail_h: np.ndarray
    svd_half_tail: float
    dropped_pairs: int
    dropped_schmidt: int
    uniform: np.ndarray
    order_bound: np.ndarray
    action_l2: float
    action_sup: float
    roundoff: float
    two_form_gap: float
    two_form_scale: float
    d_operator: np.ndarray
    within_plan: bool

    def as_dict(self):
        out = {}
        for k, v in self.__dict__.items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return out


@dataclass(frozen=True, eq=False)
class SmoothKernel:
    coef: np.ndarray
    left: np.ndarray
    right: np.ndarray
    parts: tuple
    basis: SlotBasis
    m_max: int
    report: TruncationReport = field(default=None, repr=False)

    @property
    def n_terms(self):
        return self.coef.size

    def part_count(self, tag):
        return sum(1 for p in self.parts if p == tag)

    def coefficient_matrix(self):
        """C with K(s, t) = sum_ab C_ab u_a(s) conj(u_b(t))."""
        return (self.left * self.coef[:, None]).T @ self.right.conj()

    def apply(self, f):
        """K acting on slot coefficients: sum_r c_r <f, psi_r> phi_r."""
        f = np.asarray(f, dtype=complex)
        return self.left.T @ (self.coef * (self.right.conj() @ f))

    def evaluate(self, s, t, i=0, j=0):
        return eval_kernel(self, s, t, (i, j))

    def section(self, s, i=0):
        return carleman_section(self, s, i)


def eval_kernel(K, s, t, orders=(0, 0), atoms_s=None, atoms_t=None):
    """d_s^i d_t^j K on the grid s x t (scalars give a scalar).

    ``atoms_s``/``atoms_t`` may pass precomputed slot samples of the right order.
    """
    i, j = orders
    if i > K.m_max or j > K.m_max or i < 0 or j < 0:
        raise OrderExceeded(f"orders {orders} exceed m_max = {K.m_max}")
    scalar = np.ndim(s) == 0 and np.ndim(t) == 0
    s, t = np.atleast_1d(s), np.atleast_1d(t)
    if K.n_terms == 0:
        out = np.zeros((s.size, t.size), complex)
    else:
        phi = K.left @ (K.basis.evaluate(s, i) if atoms_s is None else atoms_s)
        psi = K.right @ (K.basis.evaluate(t, j) if atoms_t is None else atoms_t)
        out = (phi * K.coef[:, None]).T @ psi.conj()
    return out[0, 0] if scalar else out


def carleman_section(K, s, i=0, atoms_s=None):
    """Slot coefficients of k^(i)(s) = conj(d_s^i K(s, .)); one row per s.

    The l2 norm of a row is the L2 norm of the section (Parseval).
    """
    if i > K.m_max or i < 0:
        raise OrderExceeded(f"order {i} exceeds m_max = {K.m_max}")
    s = np.atleast_1d(s)
    if K.n_terms == 0:
        return np.zeros((s.size, len(K.basis)), complex)
    phi = K.left @ (K.basis.evaluate(s, i) if atoms_s is None else atoms_s)
    return (phi * K.coef[:, None]).conj().T @ K.right


def _norms(m, x):
    return np.linalg.norm(m @ x, axis=0)


def _half_kernel(S, U, basis, rank_cap, pair_cap, m_max, tags=("Pt", "Ft")):
    """Terms and report for the kernel of U S U^-1 (the tilde group of the construction)."""
    plan = U.plan
    N, K = plan.dim, plan.n_pairs
    x = U.f[:, :K]
    s = S.matrix
    sh = s.conj().T
    E = x @ x.conj().T
    Jt = sh @ E            # S* E
    n_h = N - K
    n_pairs = n_h if pair_cap is None else min(int(pair_cap), n_h)

    coef, left, right, parts = [], [], [], []
    T_star_h = (s @ U.f).conj().T @ U.f[:, K:]        # columns: coefficients of T* h_k
    for k in range(n_pairs):
        if not T_star_h[:, k].any():
            continue  # exactly zero row, nothing to represent
        e = np.zeros(N, complex)
        e[K + k] = 1.0
        coef.append(1.0)
        left.append(e)
        right.append(T_star_h[:, k])
        parts.append(tags[0])

    full_s = np.linalg.svd(Jt, compute_uv=False) if Jt.any() else np.zeros(0)
    ss = schmidt(Jt)
    n_svd = ss.rank if rank_cap is None else min(int(rank_cap), ss.rank)
    Bt = quarter_power(ss).matrix
    gap, scale = 0.0, 0.0
    fh = U.f.conj().T
    for n in range(n_svd):
        p, q, sv = ss.p[:, n], ss.q[:, n], ss.s[n]
        coef.append(sv)
        left.append(fh @ p)
        right.append(fh @ q)
        parts.append(tags[1])
        direct = sv * np.outer(fh @ p, (fh @ q).conj())
        bform = np.sqrt(sv) * np.outer(fh @ (Bt.conj().T @ q), (fh @ (Bt @ p)).conj())
        gap = max(gap, float(np.abs(direct - bform).max()))
        scale = max(scale, float(np.abs(direct).max()))

    # dominant series and truncation bounds
    norm_s = S.norm
    img, coimg = _norms(s, x), _norms(sh, x)
    d_op = 2 * (img**0.25 + coimg**0.25)
    cx = np.maximum(d_op, img + coimg)
    G, H = plan.G[:, :m_max + 1], plan.H[:, :m_max + 1]
    dom = cx @ G + 2 * norm_s * H.sum(axis=0)

    dropped_h = np.arange(n_pairs, n_h)
    yk_norms = np.linalg.norm(T_star_h, axis=0)  # ||T* h_k|| = ||S* y_k||
    dropped_sv = np.concatenate([ss.s[n_svd:], full_s[ss.rank:]])
    uniform = (np.einsum("k,ki,j->ij", np.ones(dropped_h.size), H[dropped_h], dom)
               if dropped_h.size else np.zeros((m_max + 1, m_max + 1)))
    # a unit coefficient vector c has sup |sum c_n u_n^(i)| <= quad_sup[i]
    sup_slots = np.array([basis.sup_norms(i) for i in range(m_max + 1)])  # (m+1, N)
    quad_sup = np.sqrt((sup_slots**2).sum(axis=1))
    roundoff = 16 * N * EPS * np.linalg.norm(s)
    uniform = uniform + (dropped_sv.sum() + roundoff) * np.outer(quad_sup, quad_sup)
    order_bound = np.array([uniform[:i + 1, :i + 1].max() for i in range(m_max + 1)])

    action_l2 = float(yk_norms[dropped_h].sum() + dropped_sv.sum() + roundoff)
    action_sup = float(np.sum(H[dropped_h, 0] * yk_norms[dropped_h])
                       + (dropped_sv.sum() + roundoff) * quad_sup[0])

    report = TruncationReport(
        dominant_g=cx @ G,
        dominant_h=2 * norm_s * H.sum(axis=0),
        tail_g=np.full(m_max + 1, plan.tail_g if s.any() else 0.0),  # the zero operator has no tail
        tail_h=2 * norm_s * plan.tail_h[:m_max + 1],
        svd_half_tail=float(np.sum(np.sqrt(dropped_sv))),
        dropped_pairs=int(dropped_h.size),
        dropped_schmidt=int(dropped_sv.size),
        uniform=uniform,
        order_bound=order_bound,
        action_l2=action_l2,
        action_sup=action_sup,
        roundoff=float(roundoff),
        two_form_gap=gap,
        two_form_scale=scale,
        d_operator=d_op,
        within_plan=bool(np.all(d_op <= plan.d * (1 + 1e-9) + 1e-300)),
    )
    R = len(coef)
    kernel = SmoothKernel(
        coef=np.asarray(coef, dtype=complex).reshape(R),
        left=np.asarray(left, dtype=complex).reshape(R, N),
        right=np.asarray(right, dtype=complex).reshape(R, N),
        parts=tuple(parts),
        basis=basis,
        m_max=m_max,
        report=report,
    )
    return kernel


def synthesize_kernel(S, U, mother, rank_cap=None, pair_cap=None, m_max=None):
    """Kernels K of T = U S U^-1 and Kt of T*, with the truncation report of K.

    ``pair_cap`` keeps the first h-row terms, ``rank_cap`` the leading
    Schmidt terms; ``None`` keeps everything.
    """
    _check_dim(S, U)
    if U.plan.dim != U.dim:
        raise InconsistentPlan("unitary map and plan disagree on the dimension")
    m_max = U.plan.m_max if m_max is None else int(m_max)
    if m_max > U.plan.m_max:
        raise OrderExceeded(f"plan tables only reach order {U.plan.m_max}")
    basis = U.slots(mother)
    K = _half_kernel(S, U, basis, rank_cap, pair_cap, m_max)
    Kt = _half_kernel(S.H, U, basis, rank_cap, pair_cap, m_max, tags=("P", "F"))
    return K, Kt, K.report
