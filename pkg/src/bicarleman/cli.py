"""Command line driver: basis | pair | kernel | verify | demo.

Subcommands communicate only through files in the output directory.
Exit codes: 0 ok, 1 verification failure, 2 config error, 3 tolerance
failure, 4 insufficient decay, 5 inconsistent manifest.
"""
import argparse
import functools
import logging
import os
import sys

import numpy as np

from . import io as fio
from .config import load_config
from .exceptions import (ConfigError, InconsistentPlan, InsufficientDecay, RankDeficientPlan,
                         ToleranceNotMet, WindowExhausted)
from .families import make_family
from .operators import OperatorSpec
from .pairing import build_plan, read_manifest, write_manifest
from .parallel import set_threads
from .transform import build_unitary, synthesize_kernel
from .verification import (VerificationReport, check_linear_combination, check_mercer_closure,
                           mercer_samples, run_kernel_suite)
from .wavelet import BasisEnumeration, MotherWavelet, bound_tables, evaluate_atoms, gram_matrix

log = logging.getLogger("bicarleman")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_TOL, EXIT_DECAY, EXIT_MANIFEST = range(6)

PAIRING_FILE = "pairing.txt"
FAMILY_DIR = "family"
FAMILY_FILE = "family.txt"


@functools.lru_cache(maxsize=4)
def _mother(m_max):
    return MotherWavelet(m_max=m_max)


def _headers(cfg, extra=()):
    return (f"config_hash={cfg.config_hash()}", f"seed={cfg.seed}") + tuple(extra)


def _family_path(cfg, out):
    if cfg.family_manifest:
        return cfg.family_manifest
    return os.path.join(out, FAMILY_DIR, FAMILY_FILE)


# subcommands ---------------------------------------------------------------
def cmd_basis(cfg, out):
    u = _mother(cfg.m_max)
    enum = BasisEnumeration.from_window(cfg.basis_j_range, cfg.basis_k_range)
    D, A = bound_tables(enum, u, cfg.m_max)
    G = gram_matrix(enum, u, np.arange(len(enum)))
    err = float(np.abs(G - np.eye(len(enum))).max())
    head = _headers(cfg, (f"atoms={len(enum)}", f"gram_error={err!r}",
                          f"decay_radius={u.decay_radius!r}"))
    fio.write_bound_table(os.path.join(out, "bound_table.txt"), enum, D, A, head)
    s = np.linspace(-cfg.sample_range, cfg.sample_range, cfg.sample_points)
    atoms = range(min(cfg.sample_atoms, len(enum)))
    samples = {(n, i): evaluate_atoms(enum, u, [n], s, i)[0]
               for n in atoms for i in range(cfg.m_max + 1)}
    fio.write_atom_samples(os.path.join(out, "atom_samples.txt"), s, samples, head)
    log.info("basis: %d atoms, Gram error %.3e", len(enum), err)
    if err > cfg.gram_tol:
        raise ToleranceNotMet(f"Gram error {err:.3e} exceeds gram_tol {cfg.gram_tol:.1e}")
    return EXIT_OK


def cmd_pair(cfg, out):
    if cfg.family_manifest:
        family = fio.read_family_manifest(cfg.family_manifest)
    else:
        family = make_family(cfg.family_kind, cfg.dim, cfg.family_members, cfg.family_rank,
                             cfg.seed, cfg.family_base, cfg.family_level)
        fdir = os.path.join(out, FAMILY_DIR)
        os.makedirs(fdir, exist_ok=True)
        names = []
        for op in family.members:
            names.append(f"{op.label}.txt")
            fio.write_operator(os.path.join(fdir, names[-1]), op, _headers(cfg))
        fio.write_family_manifest(os.path.join(fdir, FAMILY_FILE), family, names, _headers(cfg))
    u = _mother(cfg.m_max)
    enum = BasisEnumeration.from_window(cfg.j_range, cfg.k_range)
    plan = build_plan(family, enum, u, cfg.n_pairs, cfg.m_max, cfg.start_scale)
    write_manifest(plan, os.path.join(out, PAIRING_FILE), _headers(cfg))
    log.info("pair: %d pairs from sources %s", plan.n_pairs, plan.x_source.tolist())
    return EXIT_OK


def _load(cfg, out):
    """Family and plan from files, checked against each other."""
    try:
        plan = read_manifest(os.path.join(out, PAIRING_FILE))
    except (OSError, ValueError, KeyError, IndexError, RankDeficientPlan) as exc:
        raise InconsistentPlan(f"cannot load the pairing manifest: {exc}") from exc
    try:
        family = fio.read_family_manifest(_family_path(cfg, out))
    except (OSError, ValueError) as exc:
        raise InconsistentPlan(f"cannot load the family manifest: {exc}") from exc
    if family.dim != plan.dim:
        raise InconsistentPlan(f"family dimension {family.dim} but plan dimension {plan.dim}")
    if plan.m_max < cfg.m_max:
        raise InconsistentPlan(f"plan certifies orders up to {plan.m_max}, config asks {cfg.m_max}")
    x = plan.x_vecs
    img = np.max([np.linalg.norm(m.matrix @ x, axis=0) for m in family.members], axis=0)
    co = np.max([np.linalg.norm(m.matrix.conj().T @ x, axis=0) for m in family.members], axis=0)
    d = 2 * (img**0.25 + co**0.25)
    if plan.n_pairs and not np.allclose(d, plan.d, rtol=1e-9, atol=0):
        raise InconsistentPlan("selected d_k do not match the family in the manifest")
    return family, plan


def _target(args, cfg, family):
    """(tag, operator, z) for --member, --z or --operator (default: first member)."""
    if args.operator:
        try:
            op = fio.read_operator(args.operator)
        except (OSError, ValueError) as exc:
            raise InconsistentPlan(f"cannot read operator {args.operator}: {exc}") from exc
        if op.dim != family.dim:
            raise InconsistentPlan(f"operator dimension {op.dim} but plan dimension {family.dim}")
        return os.path.splitext(os.path.basename(args.operator))[0], op, None
    if args.z:
        z = np.array([float(v) for v in args.z.split(",")])
        if z.size != len(family.members):
            raise InconsistentPlan(f"{z.size} coefficients for {len(family.members)} members")
        op = OperatorSpec(sum(a * m.matrix for a, m in zip(z, family.members)), "G")
        return "combination", op, z
    label = args.member or family.members[0].label
    try:
        return label, family.member(label), None
    except KeyError as exc:
        raise InconsistentPlan(str(exc)) from exc


def cmd_kernel(cfg, out, args):
    family, plan = _load(cfg, out)
    tag, op, _ = _target(args, cfg, family)
    U = build_unitary(plan)
    K, _, rep = synthesize_kernel(op, U, _mother(cfg.m_max), cfg.rank_cap, cfg.pair_cap,
                                  cfg.m_max)
    s = np.linspace(-cfg.grid_range, cfg.grid_range, cfg.grid_points)
    blocks = {(0, 0): K.evaluate(s, s)}
    for i, j in cfg.derivatives:
        blocks[(i, j)] = K.evaluate(s, s, i, j)
    head = _headers(cfg, (f"target={tag}", f"m_max={K.m_max}",
                          f"terms={K.n_terms} h_rows={K.part_count('Pt')} "
                          f"schmidt={K.part_count('Ft')}",
                          "order_bound=" + " ".join(repr(float(b)) for b in rep.order_bound),
                          f"within_plan={rep.within_plan}"))
    fio.write_kernel_grid(os.path.join(out, f"kernel_{tag}.txt"), blocks, s, s, head)
    fio.write_truncation_report(os.path.join(out, f"truncation_{tag}.txt"), rep, head[:3])
    log.info("kernel %s: %d terms", tag, K.n_terms)
    return EXIT_OK


def cmd_verify(cfg, out, args):
    family, plan = _load(cfg, out)
    tag, op, z = _target(args, cfg, family)
    U = build_unitary(plan)
    u = _mother(cfg.m_max)
    settings = cfg.suite_settings()
    rng = np.random.default_rng(cfg.seed)
    cache = {}
    report = VerificationReport(header=_headers(cfg, (f"target={tag}",)))
    if z is not None:
        report.extend(check_linear_combination(family, z, U, u, settings, rng, cache))
    else:
        recs, _ = run_kernel_suite(op, U, u, settings, cfg.rank_cap, cfg.pair_cap, rng, cache)
        report.extend(recs)
        if not args.operator and cfg.mercer_samples:
            samples = mercer_samples(op, cfg.mercer_samples, cfg.mercer_degree, rng)
            report.extend(check_mercer_closure(op, U, u, samples, settings, rng, cache))
    report.write(os.path.join(out, f"report_{tag}.txt"))
    for r in report.records:
        log.info("%-32s %s measured=%.3e bound=%.3e", r.name, "pass" if r.passed else "FAIL",
                 r.measured, r.bound)
    return EXIT_OK if report.verdict else EXIT_VERIFY


def cmd_demo(cfg, out, args):
    code = cmd_basis(cfg, out)
    code = code or cmd_pair(cfg, out)
    args.member, args.z, args.operator = None, None, None
    code = code or cmd_kernel(cfg, out, args)
    verdicts = [cmd_verify(cfg, out, args)]
    if len(cfg.combination) == cfg.family_members:
        args.z = ",".join(repr(v) for v in cfg.combination)
        verdicts.append(cmd_verify(cfg, out, args))
    return code or max(verdicts)


# entry point -----------------------------------------------------------------
def build_parser():
    p = argparse.ArgumentParser(prog="bicarleman", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, help="worker threads for grid evaluation")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("-v", "--verbose", action="store_true")
    target = argparse.ArgumentParser(add_help=False)
    group = target.add_mutually_exclusive_group()
    group.add_argument("--member", help="family member label")
    group.add_argument("--z", help="comma-separated coefficients of a linear combination")
    group.add_argument("--operator", help="operator file outside the family")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("basis", parents=[common], help="bound tables and atom samples")
    sub.add_parser("pair", parents=[common], help="pairing manifest")
    sub.add_parser("kernel", parents=[common, target], help="kernel grid and truncation report")
    sub.add_parser("verify", parents=[common, target], help="verification report")
    sub.add_parser("demo", parents=[common], help="run every stage")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        if args.threads is not None:
            cfg = cfg.replace(threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    set_threads(cfg.threads)
    os.makedirs(args.out, exist_ok=True)
    try:
        if args.command == "basis":
            return cmd_basis(cfg, args.out)
        if args.command == "pair":
            return cmd_pair(cfg, args.out)
        if args.command == "kernel":
            return cmd_kernel(cfg, args.out, args)
        if args.command == "verify":
            return cmd_verify(cfg, args.out, args)
        return cmd_demo(cfg, args.out, args)
    except (ConfigError, WindowExhausted) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ToleranceNotMet as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOL
    except InsufficientDecay as exc:
        print(f"insufficient decay: {exc}", file=sys.stderr)
        return EXIT_DECAY
    except InconsistentPlan as exc:
        print(f"inconsistent manifest: {exc}", file=sys.stderr)
        return EXIT_MANIFEST


if __name__ == "__main__":
    sys.exit(main())
