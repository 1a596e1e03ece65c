import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from bicarleman.exceptions import IndexOutOfWindow, OrderExceeded, ToleranceNotMet
from bicarleman.wavelet import (BasisEnumeration, MotherWavelet, bound_tables, eval_atom,
                                eval_mother, evaluate_atoms, fourier_gram, geometric_tail,
                                gram_matrix, grid_sup_norms, make_bell, scale_bound,
                                smooth_transition)

A = 2 * math.pi / 3


@pytest.fixture(scope="module")
def bell():
    return make_bell()


# bell -----------------------------------------------------------------------
def test_bell_vanishes_at_support_boundary(bell):
    assert bell(A) == 0.0
    assert bell(4 * A) == 0.0
    assert bell(np.array([0.1, 0.5 * A, 4.5 * A, 100.0])).max() == 0.0


def test_bell_at_pi_is_sin_quarter_pi(bell):
    assert smooth_transition(0.5) == 0.5
    assert bell(math.pi) == pytest.approx(math.sqrt(2) / 2, abs=1e-15)


def test_bell_pieces_are_complementary(bell):
    assert bell(math.pi) ** 2 + bell(2 * math.pi) ** 2 == pytest.approx(1.0, abs=1e-15)


@given(st.floats(0.0, 1.0))
def test_transition_symmetry(x):
    assert smooth_transition(x) + smooth_transition(1 - x) == pytest.approx(1.0, abs=1e-15)


@given(st.floats(-50.0, 50.0))
def test_bell_range(xi):
    b = make_bell()(xi)
    assert 0.0 <= b <= 1.0


def test_partition_identity(bell):
    rng = np.random.default_rng(7)
    xi = rng.uniform(0.0, 8 * math.pi / 3 * 8, 100)
    xi = xi[xi > 0]
    total = sum(bell(2.0**j * xi) ** 2 for j in range(-12, 12))
    assert np.abs(total - 1).max() <= 1e-10


def test_bell_rejects_bad_support():
    from bicarleman.wavelet import BellFunction
    with pytest.raises(ValueError):
        BellFunction(support=(1.0, 3.0))
    with pytest.raises(ValueError):
        make_bell("linear")


# mother ---------------------------------------------------------------------
def _quad_oracle(s, i):
    """u^(i)(s) straight from the symbol with adaptive quadrature."""
    b = make_bell()
    x = s + 0.5
    trig = math.sin if i % 2 == 0 else math.cos
    f = lambda xi: float(b(xi)) * xi**i * trig(xi * x)
    val = sum(quad(f, lo, hi, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
              for lo, hi in ((A, 2 * A), (2 * A, 4 * A)))
    return 1j * (-1) ** (i // 2) / math.pi * val


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("s", [-7.3, -0.5, 0.0, 0.25, 3.0, 18.5])
@pytest.mark.parametrize("i", [0, 1, 3])
def test_mother_matches_adaptive_quadrature(mother, s, i):
    ref = _quad_oracle(s, i)
    assert abs(mother.evaluate(s, i) - ref) <= 1e-11 * max(1.0, mother.sup_norms[i])


def test_mother_is_purely_imaginary(mother):
    s = np.linspace(-30, 30, 601)
    for i in range(4):
        assert np.abs(mother.evaluate(s, i).real).max() == 0.0


def test_mother_unit_norm(mother):
    # |u|^2 is band-limited to 16 pi / 3, so the trapezoid rule with h = 1/8 is exact
    h = 1 / 8
    R = math.ceil(mother.decay_radius) + 1
    s = np.arange(-R, R + h / 2, h)
    assert h * np.sum(np.abs(mother.evaluate(s)) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_mother_decays(mother):
    assert abs(mother.evaluate(50.0)) < 1e-6
    assert abs(mother.evaluate(-50.0)) < 1e-6
    far = np.linspace(mother.decay_radius, mother.decay_radius + 20, 200)
    for i in range(mother.max_order + 1):
        assert np.abs(mother.evaluate(far, i)).max() <= 1e-10 * mother.sup_norms[i] * 1.01


def test_mother_error_estimate(mother):
    val, err = mother.evaluate(np.array([0.3, 40.0]), 2, with_error=True)
    assert err.max() < 1e-12 * mother.sup_norms[2]
    assert eval_mother(mother, 40.0, 2, tol=1e-10) == val[1]


def test_panel_budget_raises():
    u = MotherWavelet(m_max=0, max_panels=40, scan_radius=120.0)
    with pytest.raises(ToleranceNotMet):
        u.evaluate(1e4)
    with pytest.raises(OrderExceeded):
        u.evaluate(0.0, 2)


def test_sup_norm_refinement_beats_grid(mother):
    s = np.arange(-20, 20, 1 / 64)
    for i in range(4):
        grid_max = np.abs(mother.evaluate(s, i)).max()
        assert grid_max <= mother.sup_norms[i] * (1 + 1e-12)
        assert mother.sup_norms[i] - grid_max < 1e-3 * mother.sup_norms[i]


# enumeration and bounds -------------------------------------------------------
def test_enumeration_is_bijection(small_enum):
    pairs = {small_enum.pair(n) for n in range(len(small_enum))}
    assert len(pairs) == len(small_enum) == 72
    assert pairs == {(j, k) for j in range(-4, 4) for k in range(-4, 5)}
    for n in range(len(small_enum)):
        assert small_enum.index(*small_enum.pair(n)) == n


def test_enumeration_order_starts_at_origin(small_enum):
    assert small_enum.pair(0) == (0, 0)
    assert [small_enum.pair(n) for n in range(1, 5)] == [(0, -1), (0, 1), (-1, 0), (1, 0)]


def test_enumeration_window_errors(small_enum):
    with pytest.raises(IndexOutOfWindow):
        small_enum.pair(72)
    with pytest.raises(IndexOutOfWindow):
        small_enum.index(5, 0)
    with pytest.raises(ValueError):
        BasisEnumeration.from_window((2, 1), (0, 0))


def test_scale_bounds():
    assert scale_bound(2) == 16
    assert scale_bound(0) == 1
    assert scale_bound(-4) == pytest.approx(0.25, rel=1e-15)


def test_bound_tables(small_enum, mother):
    D, A_ = bound_tables(small_enum, mother)
    assert A_[0] == pytest.approx(2**0.25 * mother.sup_norms[0], rel=1e-15)
    assert A_.size == 4
    js = small_enum.js
    expect = np.where(js > 0, 2.0 ** (js.astype(float) ** 2), 2.0 ** (-np.abs(js) / 2))
    np.testing.assert_allclose(D, expect, rtol=1e-15)
    with pytest.raises(OrderExceeded):
        bound_tables(small_enum, mother, m_max=9)


def test_geometric_tail():
    r = 1 / math.sqrt(2)
    assert geometric_tail(-3) == pytest.approx(r**3 / (1 - r))
    ds = scale_bound(np.arange(-3, -200, -1)).sum()
    assert ds == pytest.approx(geometric_tail(-3), rel=1e-12)


# atoms -----------------------------------------------------------------------
def test_atom_identity_dilation(small_enum, mother):
    n = small_enum.index(0, 0)
    s = np.linspace(-5, 5, 41)
    np.testing.assert_array_equal(eval_atom(small_enum, mother, n, s), mother.evaluate(s))


@given(st.integers(0, 71), st.floats(-30, 30), st.integers(0, 3))
@settings(max_examples=40, deadline=None)
def test_dilation_covariance(small_enum, mother, n, s, i):
    j, k = small_enum.pair(n)
    lhs = eval_atom(small_enum, mother, n, s, i)
    rhs = 2.0 ** (j * (i + 0.5)) * eval_mother(mother, 2.0**j * s - k, i)
    assert lhs == rhs


def test_dilated_atom_has_unit_norm(small_enum, mother):
    n = small_enum.index(1, 0)
    h = 1 / 16
    s = np.arange(-60, 60, h)
    v = eval_atom(small_enum, mother, n, s)
    assert h * np.sum(np.abs(v) ** 2) == pytest.approx(1.0, abs=1e-10)


def test_atom_sup_within_bound(small_enum, mother):
    D, A_ = bound_tables(small_enum, mother)
    for i in range(4):
        sup = grid_sup_norms(small_enum, mother, np.arange(len(small_enum)), i)
        assert np.all(sup <= D * A_[i])


def test_evaluate_atoms_shape(small_enum, mother):
    out = evaluate_atoms(small_enum, mother, [0, 3, 5], np.zeros((2, 4)))
    assert out.shape == (3, 2, 4)


# Gram matrices ----------------------------------------------------------------
def test_gram_single_atom(small_enum, mother):
    G = gram_matrix(small_enum, mother, [0])
    assert G.shape == (1, 1)
    assert abs(G[0, 0] - 1) <= 1e-10


def test_gram_translates_orthogonal(mother):
    enum = BasisEnumeration.from_window((0, 0), (0, 5))
    G = gram_matrix(enum, mother, [enum.index(0, 0), enum.index(0, 5)])
    assert abs(G[0, 1]) <= 1e-10
    assert np.abs(np.diag(G) - 1).max() <= 1e-10


def test_gram_rejects_aliasing_step(small_enum, mother):
    with pytest.raises(ToleranceNotMet):
        gram_matrix(small_enum, mother, [0, 1], step=0.5)


def test_fourier_gram_agrees_with_spatial(small_enum, mother):
    idx = np.arange(0, len(small_enum), 3)
    Gs = gram_matrix(small_enum, mother, idx)
    Gf = fourier_gram(small_enum, mother.bell, idx)
    assert np.abs(Gf - np.eye(idx.size)).max() <= 1e-13
    assert np.abs(Gs - Gf).max() <= 1e-10


def test_fourier_gram_coarse_scales(plan_enum, mother):
    idx = [plan_enum.index(j, k) for j in (-119, -118, -60) for k in (-1, 0, 2)]
    G = fourier_gram(plan_enum, mother.bell, idx)
    assert np.abs(G - np.eye(len(idx))).max() <= 1e-13
