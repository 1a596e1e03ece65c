import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bicarleman.exceptions import DimensionMismatch, InconsistentPlan, OrderExceeded
from bicarleman.families import make_family, rank_one
from bicarleman.operators import OperatorSpec
from bicarleman.pairing import build_plan
from bicarleman.transform import (SlotBasis, SmoothKernel, build_unitary, carleman_section,
                                  conjugate, eval_kernel, expand_image, image_coefficients,
                                  synthesize_kernel)
from bicarleman.wavelet import BasisEnumeration, eval_atom

S_GRID = np.linspace(-6, 6, 25)


def _slot(U, mother, m, s, i=0):
    """Sample of the m-th slot atom (0-based) straight from the enumeration."""
    plan = U.plan
    return eval_atom(plan.enumeration, mother, plan.slot_atoms[m], s, i)


def _single_term(enum, mother, n, coef=1.0):
    basis = SlotBasis(enum, mother, np.array([n]))
    one = np.ones((1, 1), complex)
    return SmoothKernel(np.array([coef], complex), one, one, ("Pt",), basis, 3)


# unitary ---------------------------------------------------------------------
def test_unitary_maps_pairs(small_setup):
    _, plan, U = small_setup
    K = plan.n_pairs
    gx = U.forward(plan.x_vecs[:, 0])
    hy = U.forward(plan.y_vecs[:, 0])
    np.testing.assert_allclose(gx, np.eye(plan.dim)[0], atol=1e-14)
    np.testing.assert_allclose(hy, np.eye(plan.dim)[K], atol=1e-14)
    np.testing.assert_allclose(U.inverse(gx), plan.x_vecs[:, 0], atol=1e-14)


@given(st.integers(0, 1000), st.sampled_from([32, 40, 48, 64]), st.integers(1, 3))
@settings(max_examples=8, deadline=None)
def test_unitary_random_plans(mother, seed, dim, K):
    fam = make_family("graded", dim=dim, members=2, rank=4, seed=seed)
    enum = BasisEnumeration.from_window((-dim, 2), (-2, 2))
    U = build_unitary(build_plan(fam, enum, mother, K))
    assert np.abs(U.matrix.conj().T @ U.matrix - np.eye(dim)).max() <= 1e-10


# conjugation -------------------------------------------------------------------
def test_conjugate_identity_and_zero(small_setup):
    _, plan, U = small_setup
    n = plan.dim
    np.testing.assert_allclose(conjugate(OperatorSpec(np.eye(n)), U).matrix, np.eye(n),
                               atol=1e-14)
    assert not conjugate(OperatorSpec(np.zeros((n, n))), U).matrix.any()


def test_conjugate_preserves_spectrum(small_setup, rng):
    _, plan, U = small_setup
    n = plan.dim
    q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    lam = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    S = OperatorSpec((q * lam) @ q.conj().T)
    ev = np.linalg.eigvals(conjugate(S, U).matrix)
    dist = np.abs(ev[:, None] - lam[None, :]).min(axis=1)
    assert dist.max() <= 1e-8


def test_conjugate_dimension_mismatch(small_setup):
    _, _, U = small_setup
    with pytest.raises(InconsistentPlan):
        conjugate(OperatorSpec(np.eye(3)), U)


# image expansions -------------------------------------------------------------
def test_expand_x1(small_setup):
    _, plan, U = small_setup
    np.testing.assert_allclose(expand_image(U, plan.x_vecs[:, 0]), np.eye(plan.dim)[0],
                               atol=1e-14)


def test_image_of_h1_rank_one(small_setup):
    _, plan, U = small_setup
    y = plan.y_vecs
    S = rank_one(y[:, 0], y[:, 1])
    coeff = image_coefficients(S, U, 1, adjoint=True)
    np.testing.assert_allclose(coeff, np.eye(plan.dim)[plan.n_pairs + 1], atol=1e-14)


def test_image_coefficients_dominated(small_setup, rng):
    _, plan, U = small_setup
    n = plan.dim
    S = OperatorSpec(rng.standard_normal((n, n)))
    for k in (1, 5, n - plan.n_pairs):
        assert np.abs(image_coefficients(S, U, k)).max() <= S.norm * (1 + 1e-12)


# synthesis -------------------------------------------------------------------
def test_zero_operator_gives_empty_kernels(small_setup, mother):
    _, plan, U = small_setup
    K, Kt, rep = synthesize_kernel(OperatorSpec(np.zeros((plan.dim, plan.dim))), U, mother)
    assert K.n_terms == 0 and Kt.n_terms == 0
    assert not rep.uniform.any() and rep.action_l2 == 0 and rep.action_sup == 0
    assert eval_kernel(K, 0.3, -1.0) == 0


def test_y_supported_rank_one(small_setup, mother):
    _, plan, U = small_setup
    y = plan.y_vecs
    K, _, _ = synthesize_kernel(rank_one(y[:, 0], y[:, 1]), U, mother)
    assert K.part_count("Ft") == 0 and K.n_terms == 1
    kpos = plan.n_pairs
    expect = np.outer(_slot(U, mother, kpos + 1, S_GRID),
                      _slot(U, mother, kpos, S_GRID).conj())
    assert np.abs(K.evaluate(S_GRID, S_GRID) - expect).max() <= 1e-12


def test_x_supported_rank_one(small_setup, mother):
    _, plan, U = small_setup
    x = plan.x_vecs
    K, _, rep = synthesize_kernel(rank_one(x[:, 0], x[:, 1]), U, mother)
    assert K.part_count("Pt") == 0 and K.part_count("Ft") == 1
    expect = np.outer(_slot(U, mother, 1, S_GRID), _slot(U, mother, 0, S_GRID).conj())
    assert np.abs(K.evaluate(S_GRID, S_GRID) - expect).max() <= 1e-12
    # this operator is not small on x, so the plan's d_k do not cover it
    assert not rep.within_plan


def test_kernel_coefficients_equal_T(small_setup, mother):
    fam, plan, U = small_setup
    S = fam.members[0]
    K, Kt, rep = synthesize_kernel(S, U, mother)
    T = conjugate(S, U).matrix
    assert np.abs(K.coefficient_matrix() - T).max() <= 1e-14
    assert np.abs(Kt.coefficient_matrix() - T.conj().T).max() <= 1e-14
    assert rep.two_form_gap <= 1e-10
    assert rep.within_plan


def test_adjoint_symmetry_small(small_setup, mother):
    fam, _, U = small_setup
    K, Kt, _ = synthesize_kernel(fam.members[1], U, mother)
    a = K.evaluate(S_GRID, S_GRID)
    b = Kt.evaluate(S_GRID, S_GRID)
    assert np.abs(b.T - a.conj()).max() <= 1e-12


def test_report_shape_and_monotone(small_setup, mother):
    fam, _, U = small_setup
    _, _, rep = synthesize_kernel(fam.members[0], U, mother, rank_cap=1, pair_cap=5)
    assert np.all(rep.uniform >= 0) and np.all(rep.tail_h >= 0) and rep.svd_half_tail >= 0
    assert np.all(np.diff(rep.order_bound) >= 0)
    assert rep.dropped_pairs == fam.dim - 4 - 5
    d = rep.as_dict()
    assert isinstance(d["uniform"], list)


@given(st.integers(0, 2**32 - 1), st.integers(0, 36), st.integers(0, 4))
@settings(max_examples=25, deadline=None)
def test_truncation_bounds_certified(small_setup, mother, seed, pair_cap, rank_cap):
    fam, plan, U = small_setup
    rng = np.random.default_rng(seed)
    n = plan.dim
    S = fam.members[seed % 2]
    K, _, rep = synthesize_kernel(S, U, mother, rank_cap=rank_cap, pair_cap=pair_cap)
    T = conjugate(S, U).matrix
    f = rng.standard_normal((n, 10)) + 1j * rng.standard_normal((n, 10))
    f /= np.linalg.norm(f, axis=0)
    res = np.linalg.norm(T @ f - np.stack([K.apply(c) for c in f.T], axis=1), axis=0)
    assert res.max() <= rep.action_l2
    full = T - K.coefficient_matrix()
    s = np.linspace(-8, 8, 33)
    basis = K.basis
    for i in range(3):
        for j in range(3 - i):
            vals = basis.evaluate(s, i).T @ full @ basis.evaluate(s, j).conj()
            assert np.abs(vals).max() <= rep.uniform[i, j]


def test_synthesis_errors(small_setup, mother):
    _, plan, U = small_setup
    with pytest.raises(InconsistentPlan):
        synthesize_kernel(OperatorSpec(np.eye(plan.dim + 1)), U, mother)
    with pytest.raises(OrderExceeded):
        synthesize_kernel(OperatorSpec(np.eye(plan.dim)), U, mother, m_max=5)


# evaluation --------------------------------------------------------------------
def test_single_term_kernel(small_enum, mother):
    n = small_enum.index(0, 0)
    K = _single_term(small_enum, mother, n)
    a = 0.37
    u = mother.evaluate(a)
    assert eval_kernel(K, a, a) == pytest.approx(abs(u) ** 2, rel=1e-14)
    s, t = 0.2, -1.1
    expect = mother.evaluate(s, 1) * np.conj(mother.evaluate(t, 1))
    assert eval_kernel(K, s, t, (1, 1)) == pytest.approx(expect, rel=1e-14)


def test_eval_order_exceeded(small_enum, mother):
    K = _single_term(small_enum, mother, 0)
    with pytest.raises(OrderExceeded):
        eval_kernel(K, 0.0, 0.0, (4, 0))
    with pytest.raises(OrderExceeded):
        carleman_section(K, 0.0, 5)


def test_finite_difference_consistency(small_setup, mother):
    fam, _, U = small_setup
    K, _, _ = synthesize_kernel(fam.members[0], U, mother)
    s = np.linspace(-5, 5, 41)
    t = np.linspace(-3, 3, 7)
    h = 1e-3
    fd = (K.evaluate(s + h, t) - K.evaluate(s - h, t)) / (2 * h)
    d1 = K.evaluate(s, t, 1, 0)
    # Taylor remainder h^2/6 sup|d_s^3 K| plus rounding of the difference quotient
    d3 = np.abs(K.evaluate(np.linspace(-6, 6, 1201), t, 3, 0)).max() * 1.1
    limit = h**2 / 6 * d3 + 1e-12 / h
    assert np.abs(fd - d1).max() <= limit


def test_sections(small_setup, mother):
    _, plan, U = small_setup
    y = plan.y_vecs
    K, _, _ = synthesize_kernel(rank_one(y[:, 0], y[:, 1]), U, mother)
    s = np.array([-1.0, 0.0, 2.5])
    sec = K.section(s)
    h2 = _slot(U, mother, plan.n_pairs + 1, s)
    expect = np.zeros((3, plan.dim), complex)
    expect[:, plan.n_pairs] = h2.conj()
    assert np.abs(sec - expect).max() <= 1e-15
    # Parseval: the l2 norm of a row is |h_2(s)|
    np.testing.assert_allclose(np.linalg.norm(sec, axis=1), np.abs(h2), rtol=1e-14)


def test_empty_section(small_setup, mother):
    _, plan, U = small_setup
    K, _, _ = synthesize_kernel(OperatorSpec(np.zeros((plan.dim, plan.dim))), U, mother)
    assert not K.section(np.array([0.0, 1.0])).any()


def test_section_continuity(small_setup, mother):
    fam, _, U = small_setup
    K, _, _ = synthesize_kernel(fam.members[0], U, mother)
    s = np.linspace(-10, 10, 2001)
    norms = np.linalg.norm(K.section(s), axis=1)
    slope = np.linalg.norm(K.section(s, 1), axis=1).max()
    # a sampled Lipschitz constant from the derivative's sections, with room for sampling
    assert np.abs(np.diff(norms)).max() <= 1.05 * slope * (s[1] - s[0])


def test_slot_basis_zero_combination(small_setup, mother):
    _, plan, U = small_setup
    vals = np.zeros(plan.dim) @ U.slots(mother).evaluate(S_GRID)
    assert np.abs(vals).max() == 0.0


def test_dimension_checks_on_vectors(small_setup):
    from bicarleman.operators import apply
    with pytest.raises(DimensionMismatch):
        apply(OperatorSpec(np.eye(small_setup[1].dim)), np.ones(3))
