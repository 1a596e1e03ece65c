"""Estimator front end: fit a pairing to a family, transform operators into kernels."""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .operators import OperatorFamily, OperatorSpec
from .pairing import build_plan
from .transform import build_unitary, conjugate, synthesize_kernel
from .wavelet import BasisEnumeration, MotherWavelet

__all__ = ["CarlemanSmoother"]


class CarlemanSmoother(TransformerMixin, BaseEstimator):
    """Build the smoothing unitary from a family and synthesize smooth kernels.

    Parameters
    ----------
    n_pairs : int
        Number of (x_k, g_k) pairs selected from the sequence.
    j_range, k_range : tuple of int
        Scale and translate window of the wavelet atoms. The window must
        reach ``dim - n_pairs`` scales below ``start_scale``.
    m_max : int
        Highest derivative order certified by the tables.
    start_scale : int
        Scale of the first h-atom.
    rank_cap, pair_cap : int or None
        Truncation of the Schmidt terms and of the h-row terms.
    mother : MotherWavelet or None
        Reuse an existing mother wavelet (it is expensive to build).

    Attributes
    ----------
    mother_ : MotherWavelet
    enumeration_ : BasisEnumeration
    plan_ : PairingPlan
    unitary_ : UnitaryMap
    """

    def __init__(self, n_pairs=12, j_range=(-120, 3), k_range=(-4, 4), m_max=3, start_scale=0,
                 rank_cap=None, pair_cap=None, mother=None):
        self.n_pairs = n_pairs
        self.j_range = j_range
        self.k_range = k_range
        self.m_max = m_max
        self.start_scale = start_scale
        self.rank_cap = rank_cap
        self.pair_cap = pair_cap
        self.mother = mother

    def _family(self, X, e_seq):
        if isinstance(X, OperatorFamily):
            return X
        ops = tuple(m if isinstance(m, OperatorSpec) else OperatorSpec(m, f"S{a + 1}")
                    for a, m in enumerate(X))
        if not ops:
            raise ValueError("need at least one operator")
        if e_seq is None:
            e_seq = np.eye(ops[0].dim, dtype=complex)
        return OperatorFamily(ops, e_seq)

    def fit(self, X, y=None, e_seq=None):
        """Select the pairing for the family ``X``.

        ``X`` is an :class:`OperatorFamily` or a sequence of square matrices;
        in the latter case ``e_seq`` (columns) defaults to coordinate vectors.
        """
        if self.m_max < 0:
            raise ValueError("m_max must be non-negative")
        family = self._family(X, e_seq)
        mother = self.mother
        if mother is None or mother.m_max < self.m_max:
            mother = MotherWavelet(m_max=self.m_max)
        self.mother_ = mother
        self.family_ = family
        self.enumeration_ = BasisEnumeration.from_window(tuple(self.j_range), tuple(self.k_range))
        self.plan_ = build_plan(family, self.enumeration_, mother, self.n_pairs, self.m_max,
                                self.start_scale)
        self.unitary_ = build_unitary(self.plan_)
        return self

    def _as_op(self, op):
        return op if isinstance(op, OperatorSpec) else OperatorSpec(op)

    def conjugate(self, op):
        check_is_fitted(self, "unitary_")
        return conjugate(self._as_op(op), self.unitary_)

    def kernels(self, op):
        """(K, Kt, report) for one operator."""
        check_is_fitted(self, "unitary_")
        return synthesize_kernel(self._as_op(op), self.unitary_, self.mother_,
                                 rank_cap=self.rank_cap, pair_cap=self.pair_cap, m_max=self.m_max)

    def transform(self, X):
        """Kernel K of U S U^-1 for every operator in ``X`` (a family or a sequence)."""
        ops = X.members if isinstance(X, OperatorFamily) else X
        return [self.kernels(op)[0] for op in ops]
