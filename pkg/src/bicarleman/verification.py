"""Numerical checks on synthesized kernels and the closing closure arguments.

Every check returns :class:`CheckRecord` objects and never raises on a
failed comparison; the suite always runs to the end and the report
aggregates the flags.
"""
import functools
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import CoefficientBudgetExceeded, SampleConstructionFailure
from .operators import OperatorSpec
from .transform import conjugate, synthesize_kernel
from .wavelet import fourier_gram

__all__ = [
    "CheckRecord",
    "VerificationReport",
    "SuiteSettings",
    "SampleGrid",
    "check_vanish_at_infinity",
    "check_carleman",
    "check_action",
    "check_adjoint_symmetry",
    "check_two_form",
    "check_c_observed",
    "check_mercer_closure",
    "check_linear_combination",
    "mercer_samples",
    "run_kernel_suite",
]


@dataclass(frozen=True)
class CheckRecord:
    name: str
    measured: float
    bound: float
    passed: bool
    runtime: float = 0.0
    note: str = ""

    def renamed(self, prefix):
        return replace(self, name=f"{prefix}/{self.name}")


@dataclass
class VerificationReport:
    records: list = field(default_factory=list)
    header: tuple = ()

    @property
    def verdict(self):
        return all(r.passed for r in self.records)

    def extend(self, records):
        self.records.extend(records)
        return self

    def failed(self):
        return [r for r in self.records if not r.passed]

    def to_text(self):
        lines = ["# verification-report v1"] + [f"# {h}" for h in self.header]
        lines.append(f"# verdict: {'PASS' if self.verdict else 'FAIL'}")
        for r in self.records:
            lines += ["[check]", f"name={r.name}", f"measured={r.measured!r}",
                      f"bound={r.bound!r}", f"passed={'true' if r.passed else 'false'}",
                      f"runtime={r.runtime!r}", f"note={r.note}"]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        header, records, cur = [], [], None
        for line in text.splitlines():
            if line.startswith("#"):
                body = line[1:].strip()
                if body != "verification-report v1" and not body.startswith("verdict:"):
                    header.append(body)
                continue
            if line == "[check]":
                cur = {}
                records.append(cur)
                continue
            if cur is None or "=" not in line:
                continue
            key, value = line.split("=", 1)
            cur[key] = value
        out = [CheckRecord(d["name"], float(d["measured"]), float(d["bound"]),
                           d["passed"] == "true", float(d["runtime"]), d.get("note", ""))
               for d in records]
        return cls(out, tuple(header))

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def read(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())


@dataclass(frozen=True)
class SuiteSettings:
    """Tolerances and grids of the kernel suite."""

    eps_decay: float = 1e-4
    boxes: tuple = (10.0, 20.0, 40.0)
    decay_range: float = 100.0
    decay_step: float = 0.5
    decay_order: int = 2
    grid_range: float = 50.0
    grid_points: int = 101
    action_tol: float = 1e-6
    quad_tol: float = 1e-6
    symmetry_tol: float = 1e-10
    two_form_tol: float = 1e-10
    carleman_delta: float = 1.0 / 64
    n_test: int = 20
    monotone_slack: float = 1e-12


class SampleGrid:
    """Points on R with lazily cached slot-atom samples per derivative order."""

    def __init__(self, basis, s):
        self.basis = basis
        self.s = np.asarray(s, dtype=float)
        self.s.setflags(write=False)

    @functools.lru_cache(maxsize=None)
    def atoms(self, i):
        a = self.basis.evaluate(self.s, i)
        a.setflags(write=False)
        return a


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        recs = fn(*args, **kwargs)
        dt = time.perf_counter() - t0
        if isinstance(recs, CheckRecord):
            return replace(recs, runtime=dt)
        return [replace(r, runtime=dt / max(1, len(recs))) for r in recs]
    return wrapper


def _kernel_values(K, grid, i, j):
    if K.n_terms == 0:
        return np.zeros((grid.s.size, grid.s.size), complex)
    phi = K.left @ grid.atoms(i)
    psi = K.right @ grid.atoms(j)
    return (phi * K.coef[:, None]).T @ psi.conj()


@_timed
def check_vanish_at_infinity(K, grid, boxes=(10.0, 20.0, 40.0), order=2, eps=1e-4,
                             slack=1e-12, name="vanish"):
    """sup |d^(i,j) K| outside each box, for i + j <= order, must be non-increasing and end below eps."""
    s = grid.s
    far = [np.abs(s) > R for R in boxes]
    worst, monotone, worst_order = 0.0, True, (0, 0)
    for i in range(min(order, K.m_max) + 1):
        for j in range(min(order - i, K.m_max) + 1):
            V = np.abs(_kernel_values(K, grid, i, j))
            sups = [float(V[f[:, None] | f[None, :]].max()) if f.any() else 0.0 for f in far]
            if any(b > a + slack for a, b in zip(sups, sups[1:])):
                monotone = False
            if sups[-1] >= worst:
                worst, worst_order = sups[-1], (i, j)
    ok = monotone and worst <= eps
    note = f"R={boxes[-1]:g} worst order {worst_order}" + ("" if monotone else "; not monotone")
    return CheckRecord(name, worst, eps, ok, note=note)


def _sections(K, atoms):
    """Rows of slot coefficients of conj(d_s^i K(s, .)), given order-i atom samples."""
    if K.n_terms == 0:
        return np.zeros((atoms.shape[1], len(K.basis)), complex)
    phi = K.left @ atoms
    return (phi * K.coef[:, None]).conj().T @ K.right


def _lipschitz(K, i):
    """Certified sup_s ||k^(i+1)(s)|| from slot sup-norms (drives the modulus of continuity)."""
    if K.n_terms == 0:
        return 0.0
    sup = K.basis.sup_norms(i + 1)
    return float(np.sum(np.abs(K.coef) * (np.abs(K.left) @ sup) * np.linalg.norm(K.right, axis=1)))


@_timed
def check_carleman(K, grid, order=None, r_max=40.0, eps=1e-4, delta=1.0 / 64, name="carleman"):
    """Continuity and vanishing of the section map s -> k^(i)(s) in L2, i <= order.

    Pairs (s, s + delta) must satisfy ||k(s) - k(s')|| <= L |s - s'| with L a
    certified bound on the next derivative; beyond ``r_max`` the section
    norm must stay below ``eps``.
    """
    order = K.m_max if order is None else min(order, K.m_max)
    s = grid.s
    shifted = SampleGrid(K.basis, s + delta)
    far = np.abs(s) >= r_max
    worst_ratio, worst_far, slopes = 0.0, 0.0, []
    for i in range(order + 1):
        a = _sections(K, grid.atoms(i))
        b = _sections(K, shifted.atoms(i))
        diff = np.linalg.norm(a - b, axis=1)
        L = _lipschitz(K, i)
        slopes.append(L)
        if L > 0:
            worst_ratio = max(worst_ratio, float(diff.max()) / (L * delta))
        elif diff.max() > 0:
            worst_ratio = np.inf
        if far.any():
            worst_far = max(worst_far, float(np.linalg.norm(a[far], axis=1).max()))
    ok = worst_ratio <= 1 + 1e-9 and worst_far <= eps
    note = ("omega slopes " + " ".join(f"{v:.3e}" for v in slopes)
            + f"; modulus ratio {worst_ratio:.3e}")
    return CheckRecord(name, worst_far, eps, ok, note=note)


@_timed
def check_adjoint_symmetry(K, Kt, grid, tol=1e-10, name="adjoint_symmetry"):
    """max |Kt(t, s) - conj K(s, t)| on the grid."""
    a = _kernel_values(K, grid, 0, 0)
    b = _kernel_values(Kt, grid, 0, 0)
    gap = float(np.abs(b.T - a.conj()).max())
    return CheckRecord(name, gap, tol, gap <= tol)


@_timed
def check_two_form(report, tol=1e-10, name="two_form"):
    """Direct Schmidt form against the quarter-power form, termwise."""
    return CheckRecord(name, report.two_form_gap, tol, report.two_form_gap <= tol,
                       note=f"term scale {report.two_form_scale:.3e}")


@_timed
def check_action(K, T, grid, gram, n_test=20, rng=None, action_tol=1e-6, quad_tol=1e-6,
                 name="action"):
    """Compare the kernel's action with T on random finite expansions f.

    Coefficient space: ||T f - K f|| against ``report.action_l2``. On the
    grid, int K(s, t) f(t) dt is formed with the slot Gram matrix ``gram``
    (frequency-domain quadrature) and compared with (T f)(s) against
    ``report.action_sup + quad_tol``. The report bound itself must not
    exceed ``action_tol``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    rep = K.report
    N = T.dim
    f = rng.standard_normal((N, n_test)) + 1j * rng.standard_normal((N, n_test))
    f /= np.linalg.norm(f, axis=0)
    Tf = T.matrix @ f
    if K.n_terms:
        Kf = K.left.T @ (K.coef[:, None] * (K.right.conj() @ f))
        Kq = K.left.T @ (K.coef[:, None] * (K.right.conj() @ (gram @ f)))
    else:
        Kf = Kq = np.zeros_like(f)
    coef_res = float(np.linalg.norm(Tf - Kf, axis=0).max())
    atoms = grid.atoms(0)
    grid_res = float(np.abs(atoms.T @ (Tf - Kq)).max())
    bound = rep.action_l2
    ok = coef_res <= bound and grid_res <= rep.action_sup + quad_tol and bound <= action_tol
    note = (f"grid residual {grid_res:.3e} <= {rep.action_sup + quad_tol:.3e}; "
            f"report bound {bound:.3e} vs action_tol {action_tol:.1e}")
    return CheckRecord(name, coef_res, bound, ok, note=note)


@_timed
def check_c_observed(Kt, grid, norm_s, m=None, name="c_observed"):
    """Observed max_k sup_s |[T h_k]^(i)(s)| against the Cauchy-Schwarz ceiling."""
    m = Kt.m_max if m is None else m
    rows = np.array([p == "P" for p in Kt.parts])
    if not rows.any():
        return CheckRecord(name, 0.0, 0.0, True, note="no h rows")
    vecs = Kt.right[rows]
    ratio, obs = 0.0, []
    for i in range(m + 1):
        val = float(np.abs(vecs @ grid.atoms(i)).max())
        ceiling = norm_s * float(np.sqrt((Kt.basis.sup_norms(i) ** 2).sum()))
        obs.append(val)
        if ceiling > 0:
            ratio = max(ratio, val / ceiling)
        elif val > 0:
            ratio = np.inf
    note = "C_i observed " + " ".join(f"{v:.3e}" for v in obs)
    return CheckRecord(name, ratio, 1.0, ratio <= 1.0 + 1e-9, note=note)


def run_kernel_suite(S, U, mother, settings=None, rank_cap=None, pair_cap=None, rng=None,
                     cache=None):
    """Synthesize the kernels of S under U and run every kernel check.

    ``cache`` may carry grids and the slot Gram matrix between calls that
    share the same U (a dict is filled in place).
    """
    settings = SuiteSettings() if settings is None else settings
    rng = np.random.default_rng(0) if rng is None else rng
    cache = {} if cache is None else cache
    t0 = time.perf_counter()
    K, Kt, report = synthesize_kernel(S, U, mother, rank_cap=rank_cap, pair_cap=pair_cap)
    synth = CheckRecord("synthesis", float(K.n_terms), float(K.n_terms), True,
                        time.perf_counter() - t0,
                        note=f"{K.part_count('Pt')} h rows, {K.part_count('Ft')} Schmidt terms")
    basis = K.basis
    if "decay" not in cache:
        h, R = settings.decay_step, settings.decay_range
        cache["decay"] = SampleGrid(basis, np.arange(-R, R + h / 2, h))
        cache["grid"] = SampleGrid(basis, np.linspace(-settings.grid_range, settings.grid_range,
                                                      settings.grid_points))
        cache["gram"] = fourier_gram(basis.enum, basis.mother.bell, basis.atoms)
    decay, grid = cache["decay"], cache["grid"]
    T = conjugate(S, U)
    recs = [
        synth,
        check_two_form(report, settings.two_form_tol),
        check_adjoint_symmetry(K, Kt, grid, settings.symmetry_tol),
        check_vanish_at_infinity(K, decay, settings.boxes, settings.decay_order,
                                 settings.eps_decay, settings.monotone_slack, name="vanish_K"),
        check_vanish_at_infinity(Kt, decay, settings.boxes, settings.decay_order,
                                 settings.eps_decay, settings.monotone_slack, name="vanish_Kt"),
        check_carleman(K, decay, None, settings.boxes[-1], settings.eps_decay,
                       settings.carleman_delta, name="carleman_K"),
        check_carleman(Kt, decay, None, settings.boxes[-1], settings.eps_decay,
                       settings.carleman_delta, name="carleman_Kt"),
        check_action(K, T, grid, cache["gram"], settings.n_test, rng, settings.action_tol,
                     settings.quad_tol, name="action"),
        check_c_observed(Kt, grid, S.norm),
    ]
    return recs, (K, Kt, report)


def _fourth_roots(m, x):
    return np.linalg.norm(m @ x, axis=0) ** 0.25


def mercer_samples(S, n_samples=5, degree=2, rng=None):
    """Operators A = S p(S*S) with random real polynomials p, scaled so ||V||, ||W|| <= 1.

    Returns a list of (A, V, W) as OperatorSpecs.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    s = S.matrix
    ss = s.conj().T @ s
    tt = s @ s.conj().T
    scale = max(np.linalg.norm(ss, 2), 1e-300)
    out = []
    for _ in range(n_samples):
        a = rng.standard_normal(degree + 1)
        target = rng.uniform(0.25, 1.0)
        V = _polyval(ss / scale, a)
        W = _polyval(tt / scale, a)
        c = max(np.linalg.norm(V, 2), np.linalg.norm(W, 2))
        if c > 0:
            V, W = V * target / c, W * target / c
        out.append((OperatorSpec(s @ V, "A"), OperatorSpec(V, "V"), OperatorSpec(W, "W")))
    return out


def _polyval(m, coeffs):
    out = np.zeros_like(m)
    for a in coeffs[::-1]:
        out = out @ m + a * np.eye(m.shape[0])
    return out


def check_mercer_closure(S, U, mother, samples, settings=None, rng=None, cache=None,
                         slack=1e-10):
    """Closure inequality and full kernel suite for each sample (A, V, W).

    For every selected x_k: ||A x_k||^(1/4) + ||A* x_k||^(1/4) <= c d_k with
    c^4 = max(||V||, ||W||).
    """
    plan = U.plan
    x = U.f[:, :plan.n_pairs]
    records = []
    for n, (A, V, W) in enumerate(samples):
        t0 = time.perf_counter()
        nv, nw = V.norm, W.norm
        if max(nv, nw) > 1 + 1e-12:
            raise SampleConstructionFailure(f"sample {n}: max(||V||, ||W||) = {max(nv, nw):.6g} > 1")
        inter = float(np.abs(A.matrix - W.matrix @ S.matrix).max())
        c = max(nv, nw) ** 0.25
        lhs = _fourth_roots(A.matrix, x) + _fourth_roots(A.matrix.conj().T, x)
        rhs = c * plan.d
        ratio = float(np.max(lhs / np.where(rhs > 0, rhs, 1.0))) if lhs.size else 0.0
        ok = bool(np.all(lhs <= rhs + slack)) and inter <= 1e-10 * max(1.0, S.norm)
        records.append(CheckRecord(f"mercer[{n}]/inequality", ratio, 1.0, ok,
                                   time.perf_counter() - t0,
                                   note=f"c={c:.4f}; |A - W S| = {inter:.2e}"))
        recs, _ = run_kernel_suite(A, U, mother, settings, rng=rng, cache=cache)
        records += [r.renamed(f"mercer[{n}]") for r in recs]
    return records


def check_linear_combination(family, z, U, mother, settings=None, rng=None, cache=None,
                             slack=1e-12):
    """G = sum z_a S_a under the same U: image inequalities at every x_k and the kernel suite."""
    z = np.asarray(z, dtype=complex)
    if z.size != len(family.members):
        raise ValueError(f"{z.size} coefficients for {len(family.members)} members")
    if np.abs(z).sum() > 1 + 1e-12:
        raise CoefficientBudgetExceeded(f"sum |z| = {np.abs(z).sum():.6g} exceeds 1")
    t0 = time.perf_counter()
    G = OperatorSpec(sum(zz * m.matrix for zz, m in zip(z, family.members)), "G")
    x = U.f[:, :U.plan.n_pairs]
    sup_img = np.max([np.linalg.norm(m.matrix @ x, axis=0) for m in family.members], axis=0)
    sup_co = np.max([np.linalg.norm(m.matrix.conj().T @ x, axis=0) for m in family.members], axis=0)
    g_img = np.linalg.norm(G.matrix @ x, axis=0)
    g_co = np.linalg.norm(G.matrix.conj().T @ x, axis=0)
    ok = bool(np.all(g_img <= sup_img * (1 + slack) + 1e-300)
              and np.all(g_co <= sup_co * (1 + slack) + 1e-300))
    ratio = float(max(np.max(g_img / np.where(sup_img > 0, sup_img, 1.0)),
                      np.max(g_co / np.where(sup_co > 0, sup_co, 1.0)))) if x.shape[1] else 0.0
    records = [CheckRecord("combination/inequality", ratio, 1.0, ok, time.perf_counter() - t0,
                           note="z = " + " ".join(f"{v:.6g}" for v in z))]
    recs, _ = run_kernel_suite(G, U, mother, settings, rng=rng, cache=cache)
    return records + [r.renamed("combination") for r in recs]
