"""Synthetic operator families used by the demo, the CLI and the tests."""
import numpy as np

from .operators import OperatorFamily, OperatorSpec

__all__ = ["graded_member", "make_family", "rank_one", "FAMILY_KINDS"]

FAMILY_KINDS = ("graded", "zero", "constant")


def rank_one(a, b, label=""):
    """The operator v -> <v, a> b."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return OperatorSpec(np.outer(b, a.conj()), label)


def graded_member(dim, rank, rng, base=4.0, label=""):
    """D M D with D = diag(base^-n), M random complex of the given rank and norm 1.

    Entries are formed elementwise, so ||S e_n|| <= base^-n exactly in
    floating point rather than up to round-off of a dense product.
    """
    left = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    right = rng.standard_normal((rank, dim)) + 1j * rng.standard_normal((rank, dim))
    m = left @ right
    m /= np.linalg.norm(m, 2)
    d = base ** -np.arange(1.0, dim + 1)
    return OperatorSpec(d[:, None] * m * d[None, :], label)


def make_family(kind="graded", dim=128, members=3, rank=20, seed=0, base=4.0, level=0.5):
    """Family of ``members`` operators on C^dim with coordinate e_seq.

    ``graded`` members have decay at most base^-n, ``zero`` members vanish
    and ``constant`` members are ``level`` times the identity.
    """
    if kind not in FAMILY_KINDS:
        raise ValueError(f"unknown family kind {kind!r}; expected one of {FAMILY_KINDS}")
    rng = np.random.default_rng(seed)
    ops = []
    for a in range(members):
        label = f"S{a + 1}"
        if kind == "graded":
            ops.append(graded_member(dim, min(rank, dim), rng, base, label))
        elif kind == "zero":
            ops.append(OperatorSpec(np.zeros((dim, dim), complex), label))
        else:
            ops.append(OperatorSpec(level * np.eye(dim, dtype=complex), label))
    return OperatorFamily(tuple(ops), np.eye(dim, dtype=complex))
