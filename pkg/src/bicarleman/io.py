"""Delimited-text file formats. Every file starts with '#'-prefixed header lines."""
import os

import numpy as np

from .exceptions import InconsistentPlan
from .operators import OperatorFamily, OperatorSpec

__all__ = [
    "write_operator",
    "read_operator",
    "write_family_manifest",
    "read_family_manifest",
    "write_bound_table",
    "write_atom_samples",
    "write_kernel_grid",
    "read_kernel_grid",
    "write_truncation_report",
]


def _f(v):
    return repr(float(v))


def _cplx(row):
    return ",".join(f"{_f(c.real)},{_f(c.imag)}" for c in row)


def _parse_cplx(fields):
    vals = np.array([float(x) for x in fields])
    if vals.size % 2:
        raise ValueError("odd number of fields in a complex row")
    return vals[0::2] + 1j * vals[1::2]


def _header(kind, header):
    return [f"# {kind}"] + [f"# {h}" for h in header]


def _write(path, lines):
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text


def _data_lines(path):
    with open(path) as fh:
        return [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]


# operators ---------------------------------------------------------------
def write_operator(path, op, header=()):
    """Dimension line, then one row per matrix row as re,im pairs."""
    m = op.matrix
    lines = _header("operator v1", header) + [f"label,{op.label}", f"dim,{m.shape[0]}"]
    lines += [_cplx(row) for row in m]
    return _write(path, lines)


def read_operator(path):
    rows = _data_lines(path)
    meta = {}
    while rows and rows[0].split(",", 1)[0] in ("label", "dim"):
        key, val = rows.pop(0).split(",", 1)
        meta[key] = val
    if "dim" not in meta:
        raise ValueError(f"{path}: missing dim line")
    n = int(meta["dim"])
    if len(rows) != n:
        raise ValueError(f"{path}: expected {n} rows, found {len(rows)}")
    m = np.array([_parse_cplx(r.split(",")) for r in rows])
    if m.shape != (n, n):
        raise ValueError(f"{path}: expected a {n}x{n} matrix")
    return OperatorSpec(m, meta.get("label", ""))


def write_family_manifest(path, family, member_files, header=()):
    """[members] label,file lines (files relative to the manifest) and [e_seq] vectors."""
    lines = _header("family-manifest v1", header)
    lines.append(f"dim,{family.dim}")
    lines.append("[members]")
    for op, fname in zip(family.members, member_files):
        lines.append(f"{op.label},{fname}")
    lines.append("[e_seq]")
    lines += [_cplx(v) for v in family.e_seq.T]
    return _write(path, lines)


def read_family_manifest(path):
    base = os.path.dirname(os.path.abspath(path))
    rows = _data_lines(path)
    if not rows or not rows[0].startswith("dim,"):
        raise ValueError(f"{path}: missing dim line")
    dim = int(rows[0].split(",")[1])
    try:
        i_mem, i_seq = rows.index("[members]"), rows.index("[e_seq]")
    except ValueError:
        raise ValueError(f"{path}: needs [members] and [e_seq] sections") from None
    members = []
    for line in rows[i_mem + 1:i_seq]:
        label, fname = line.split(",", 1)
        op = read_operator(os.path.join(base, fname))
        if op.dim != dim:
            raise InconsistentPlan(f"{fname}: dimension {op.dim}, manifest says {dim}")
        members.append(OperatorSpec(op.matrix, label))
    e = np.array([_parse_cplx(r.split(",")) for r in rows[i_seq + 1:]]).T
    return OperatorFamily(tuple(members), e.reshape(dim, -1))


# wavelet tables ------------------------------------------------------------
def write_bound_table(path, enum, D, A, header=()):
    lines = _header("bound-table v1", header)
    lines += ["[atoms]", "# n,j,k,D"]
    lines += [f"{n},{j},{k},{_f(d)}" for n, (j, k, d) in enumerate(zip(enum.js, enum.ks, D))]
    lines += ["[orders]", "# i,A"]
    lines += [f"{i},{_f(a)}" for i, a in enumerate(A)]
    return _write(path, lines)


def write_atom_samples(path, s, samples, header=()):
    """``samples`` maps (n, i) to values on ``s``; rows n,i,s,re,im."""
    lines = _header("atom-samples v1", header) + ["# n,i,s,re,im"]
    for (n, i), vals in samples.items():
        lines += [f"{n},{i},{_f(x)},{_f(v.real)},{_f(v.imag)}" for x, v in zip(s, vals)]
    return _write(path, lines)


# kernels -------------------------------------------------------------------
def write_kernel_grid(path, blocks, s, t, header=()):
    """``blocks`` maps derivative orders (i, j) to len(s) x len(t) arrays."""
    lines = _header("kernel-grid v1", header)
    lines.append(f"# grid s {_f(s[0])} {_f(s[-1])} {len(s)}; t {_f(t[0])} {_f(t[-1])} {len(t)}")
    for (i, j), vals in blocks.items():
        lines.append(f"[order {i},{j}]")
        lines.append("# s,t,re,im")
        for a, x in enumerate(s):
            for b, y in enumerate(t):
                v = vals[a, b]
                lines.append(f"{_f(x)},{_f(y)},{_f(v.real)},{_f(v.imag)}")
    return _write(path, lines)


def read_kernel_grid(path):
    """Inverse of :func:`write_kernel_grid`: {(i, j): (s, t, values)}."""
    blocks, cur = {}, None
    for line in _data_lines(path):
        if line.startswith("[order"):
            i, j = (int(v) for v in line[7:-1].split(","))
            cur = []
            blocks[(i, j)] = cur
            continue
        cur.append([float(v) for v in line.split(",")])
    out = {}
    for key, rows in blocks.items():
        a = np.array(rows)
        s, t = np.unique(a[:, 0]), np.unique(a[:, 1])
        out[key] = (s, t, (a[:, 2] + 1j * a[:, 3]).reshape(s.size, t.size))
    return out


def write_truncation_report(path, report, header=()):
    lines = _header("truncation-report v1", header)
    for key, val in report.as_dict().items():
        if isinstance(val, list):
            flat = np.ravel(val)
            val = " ".join(_f(v) for v in flat)
        lines.append(f"{key}={val}")
    return _write(path, lines)
