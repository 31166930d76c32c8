"""Command-line interface and the JSON file formats of vessel-lab.

Every file is a JSON document with ``"format_version": "vessel-lab/1"`` and a
``"kind"`` naming its contents.  Matrix functions are stored as one list per
grid node of row-major ``[re, im]`` pairs, written with round-trip float
formatting so that save followed by load is bit-exact.

Exit codes: 0 success or pass, 1 numeric failure or failed check, 2 usage
or parse error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import fixtures
from .errors import FormatError, VesselError, VesselWarning
from .numgrid import MatFn, TimeGrid
from .realize import PoleChain, realize_chains
from .simulate2d import default_grids, pde_residuals, separated_trajectory
from .structure import equivalent, kalman_decompose
from .vesselcore import DiffVessel, Signature, transfer, verify_vessel
from .vesselops import adjoint, cascade, gauge_transform, invert

__all__ = [
    "FORMAT_VERSION",
    "load_vessel",
    "save_vessel",
    "load_signature",
    "save_signature",
    "load_matrix",
    "save_matrix",
    "load_vector",
    "save_vector",
    "load_poles",
    "save_poles",
    "run_command",
    "main",
]

FORMAT_VERSION = "vessel-lab/1"
THREADS_ENV = "VESSEL_LAB_THREADS"

_SIG_KEYS = ("sigma1", "sigma2", "gamma", "sigma1s", "sigma2s", "gammas")
_VESSEL_KEYS = ("A1", "A2", "B", "C", "D", "Dt") + _SIG_KEYS


class UsageError(Exception):
    """Invalid command-line usage (exit code 2)."""


def _fmt(x: float) -> str:
    return f"{x:.16e}"


# -- encoding ------------------------------------------------------------------


def _pairs(values: np.ndarray) -> list:
    values = np.asarray(values, dtype=complex)
    return np.stack([values.real, values.imag], axis=-1).tolist()


def _node_lines(f: MatFn) -> list:
    flat = f.samples.reshape(f.grid.points, -1)
    return [json.dumps(_pairs(row), allow_nan=False) for row in flat]


def _grid_doc(grid: TimeGrid) -> dict:
    return {"t_start": grid.t_start, "t_end": grid.t_end, "points": grid.points}


def _render(header: dict, blocks: dict, block_key: str = "matrices") -> str:
    """JSON text with one line per node sample of every block."""
    out = ["{"]
    for key, value in header.items():
        out.append(f"  {json.dumps(key)}: {json.dumps(value, allow_nan=False)},")
    out.append(f"  {json.dumps(block_key)}: {{")
    names = list(blocks)
    for k, name in enumerate(names):
        lines = _node_lines(blocks[name])
        out.append(f"    {json.dumps(name)}: [")
        out.extend(f"      {ln}," for ln in lines[:-1])
        out.append(f"      {lines[-1]}")
        out.append("    ]" + ("," if k < len(names) - 1 else ""))
    out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"


def _write(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def save_vessel(v: DiffVessel, path) -> None:
    """Write ``v`` as a ``vessel`` document."""
    sig = v.sig
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "vessel",
        "dims": {"state": v.n, "input": sig.e, "output": sig.es,
                 "aux_in": sig.e, "aux_out": sig.es},
        "grid": _grid_doc(v.grid),
    }
    blocks = dict(A1=v.A1, A2=v.A2, B=v.Bt, C=v.C, D=v.D, Dt=v.Dt)
    blocks.update({k: getattr(sig, k) for k in _SIG_KEYS})
    _write(path, _render(header, blocks))


def save_signature(sig: Signature, path) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "signature",
        "dims": {"aux_in": sig.e, "aux_out": sig.es},
        "grid": _grid_doc(sig.grid),
    }
    _write(path, _render(header, {k: getattr(sig, k) for k in _SIG_KEYS}))


def save_matrix(f: MatFn, path, name: str = "M") -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "matrix",
        "shape": list(f.shape),
        "grid": _grid_doc(f.grid),
    }
    _write(path, _render(header, {name: f}))


def save_vector(vec, path) -> None:
    doc = {"format_version": FORMAT_VERSION, "kind": "vector",
           "entries": _pairs(np.asarray(vec, dtype=complex).reshape(-1))}
    _write(path, json.dumps(doc, allow_nan=False) + "\n")


def save_poles(chains, path) -> None:
    """Write pole chains as a ``poles`` document."""
    chains = list(chains)
    if not chains:
        raise VesselError("a pole file needs at least one pole")
    grid = chains[0].out_chain[0].grid
    poles = []
    for ch in chains:
        poles.append({
            "z": [ch.z.real, ch.z.imag],
            "order": ch.order,
            "out_chain": [[_pairs(s) for s in c.samples.reshape(grid.points, -1)]
                          for c in ch.out_chain],
            "in_chain": [[_pairs(s) for s in b.samples.reshape(grid.points, -1)]
                         for b in ch.in_chain],
        })
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "poles",
        "dims": {"aux_in": chains[0].in_chain[0].rows, "aux_out": chains[0].out_chain[0].rows},
        "grid": _grid_doc(grid),
        "poles": poles,
    }
    _write(path, json.dumps(doc, allow_nan=False) + "\n")


# -- decoding ------------------------------------------------------------------


def _read_doc(path, kind: str) -> dict:
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: invalid UTF-8 at byte offset {exc.start}",
                          offset=exc.start) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise FormatError(f"{path}: {exc.msg} at byte offset {offset}", offset=offset) from None
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: top level must be a JSON object", offset=0)
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unrecognized format_version {version!r}")
    if doc.get("kind") != kind:
        raise FormatError(f"{path}: expected a {kind!r} document, found {doc.get('kind')!r}")
    return doc


def _field(doc: dict, key: str, path):
    if key not in doc:
        raise FormatError(f"{path}: missing field {key!r}")
    return doc[key]


def _int_field(doc: dict, key: str, path) -> int:
    value = _field(doc, key, path)
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise FormatError(f"{path}: field {key!r} must be a non-negative integer")
    return value


def _parse_grid(doc: dict, path) -> TimeGrid:
    g = _field(doc, "grid", path)
    if not isinstance(g, dict):
        raise FormatError(f"{path}: grid must be an object")
    try:
        t_start, t_end = float(_field(g, "t_start", path)), float(_field(g, "t_end", path))
        grid = TimeGrid(t_start, t_end, _int_field(g, "points", path))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: invalid grid: {exc}") from None
    return grid


def _complex_array(data, shape: tuple, what: str, path) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise FormatError(f"{path}: {what} must hold [re, im] number pairs") from None
    if arr.size == 0 and 0 in shape:
        return np.zeros(shape, dtype=complex)
    if arr.shape != shape + (2,):
        raise FormatError(f"{path}: {what} has layout {arr.shape[:-1]}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{path}: {what} contains non-finite values")
    # component-wise assignment keeps signed zeros
    out = np.empty(shape, dtype=complex)
    out.real = arr[..., 0]
    out.imag = arr[..., 1]
    return out


def _parse_block(name: str, data, grid: TimeGrid, shape: tuple, path) -> MatFn:
    if not isinstance(data, list):
        raise FormatError(f"{path}: block {name} must be a list of node samples")
    if len(data) != grid.points:
        raise FormatError(
            f"{path}: block {name} has {len(data)} node samples, expected {grid.points}"
        )
    rows, cols = shape
    for k, node in enumerate(data):
        if not isinstance(node, list) or len(node) != rows * cols:
            got = len(node) if isinstance(node, list) else "no"
            raise FormatError(
                f"{path}: block {name} node {k} has {got} entries, expected {rows * cols} "
                f"for shape {rows}x{cols}"
            )
    arr = _complex_array(data, (grid.points, rows * cols), f"block {name}", path)
    return MatFn(grid, arr.reshape(grid.points, rows, cols))


def _blocks(doc: dict, shapes: dict, grid: TimeGrid, path, key: str = "matrices") -> dict:
    mats = _field(doc, key, path)
    if not isinstance(mats, dict):
        raise FormatError(f"{path}: {key!r} must be an object")
    out = {}
    for name, shape in shapes.items():
        if name not in mats:
            raise FormatError(f"{path}: missing block {name}")
        out[name] = _parse_block(name, mats[name], grid, shape, path)
    return out


def _sig_shapes(e: int, es: int) -> dict:
    return {"sigma1": (e, e), "sigma2": (e, e), "gamma": (e, e),
            "sigma1s": (es, es), "sigma2s": (es, es), "gammas": (es, es)}


def _aux_dims(doc: dict, path) -> tuple:
    dims = _field(doc, "dims", path)
    if not isinstance(dims, dict):
        raise FormatError(f"{path}: dims must be an object")
    return _int_field(dims, "aux_in", path), _int_field(dims, "aux_out", path)


def _warn_singular(sig: Signature, path) -> None:
    for name in ("sigma1", "sigma1s"):
        f = getattr(sig, name)
        conds = np.linalg.cond(f.samples) if f.rows else np.ones(f.grid.points)
        bad = np.flatnonzero(~np.isfinite(conds) | (conds > 1e12))
        if bad.size:
            nodes = ", ".join(str(int(k)) for k in bad[:8])
            warnings.warn(f"{path}: {name} is singular at node {nodes}", VesselWarning,
                          stacklevel=3)


def load_signature(path) -> Signature:
    doc = _read_doc(path, "signature")
    grid = _parse_grid(doc, path)
    e, es = _aux_dims(doc, path)
    sig = Signature(**_blocks(doc, _sig_shapes(e, es), grid, path))
    _warn_singular(sig, path)
    return sig


def load_vessel(path, tol: float | None = None, check: bool = True) -> DiffVessel:
    """Read a ``vessel`` document.

    Unless ``check`` is false the vessel is verified, and a
    :class:`VesselWarning` is issued for every axiom residual above ``tol``
    and for every node where ``sigma1`` or ``sigma1s`` is singular.

    Raises
    ------
    FormatError
        On malformed JSON (with the byte offset), an unknown version, missing
        or misshapen blocks, or an invalid grid.
    """
    doc = _read_doc(path, "vessel")
    grid = _parse_grid(doc, path)
    n = _int_field(_field(doc, "dims", path), "state", path)
    e, es = _aux_dims(doc, path)
    dims = doc["dims"]
    if _int_field(dims, "input", path) != e or _int_field(dims, "output", path) != es:
        raise FormatError(f"{path}: input/output dims must equal aux_in/aux_out")
    shapes = {"A1": (n, n), "A2": (n, n), "B": (n, e), "C": (es, n), "D": (es, e),
              "Dt": (es, e)}
    shapes.update(_sig_shapes(e, es))
    b = _blocks(doc, shapes, grid, path)
    sig = Signature(*(b[k] for k in _SIG_KEYS))
    kwargs = {} if tol is None else {"tol": tol}
    v = DiffVessel(b["A1"], b["A2"], b["B"], b["C"], b["D"], b["Dt"], sig, **kwargs)
    if check:
        _warn_singular(sig, path)
        try:
            report = verify_vessel(v)
        except VesselError as exc:
            warnings.warn(f"{path}: verification failed: {exc}", VesselWarning, stacklevel=2)
        else:
            for name, value in report.items():
                if value > report.tol:
                    warnings.warn(
                        f"{path}: {name} residual {_fmt(value)} exceeds tolerance "
                        f"{_fmt(report.tol)} (worst node {report.worst_node(name)})",
                        VesselWarning, stacklevel=2)
    return v


def load_matrix(path) -> MatFn:
    doc = _read_doc(path, "matrix")
    grid = _parse_grid(doc, path)
    shape = _field(doc, "shape", path)
    if (not isinstance(shape, list) or len(shape) != 2
            or not all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in shape)):
        raise FormatError(f"{path}: shape must be a pair of non-negative integers")
    mats = _field(doc, "matrices", path)
    if not isinstance(mats, dict) or len(mats) != 1:
        raise FormatError(f"{path}: a matrix document holds exactly one block")
    (name,) = mats
    return _blocks(doc, {name: tuple(shape)}, grid, path)[name]


def load_vector(path) -> np.ndarray:
    doc = _read_doc(path, "vector")
    entries = _field(doc, "entries", path)
    if not isinstance(entries, list):
        raise FormatError(f"{path}: entries must be a list of [re, im] pairs")
    return _complex_array(entries, (len(entries),), "entries", path)


def load_poles(path) -> list:
    """Read a ``poles`` document into a list of :class:`PoleChain`."""
    doc = _read_doc(path, "poles")
    grid = _parse_grid(doc, path)
    e, es = _aux_dims(doc, path)
    poles = _field(doc, "poles", path)
    if not isinstance(poles, list) or not poles:
        raise FormatError(f"{path}: poles must be a non-empty list")
    chains = []
    for k, p in enumerate(poles):
        if not isinstance(p, dict):
            raise FormatError(f"{path}: pole {k} must be an object")
        z = _complex_array(_field(p, "z", path), (), f"pole {k} z", path)
        order = _int_field(p, "order", path)
        members = {}
        for side, dim in (("out_chain", es), ("in_chain", e)):
            data = _field(p, side, path)
            if not isinstance(data, list) or len(data) != order or order == 0:
                raise FormatError(f"{path}: pole {k} {side} must hold {order} members "
                                  "(order must be positive)")
            members[side] = tuple(
                MatFn(grid, _complex_array(m, (grid.points, dim), f"pole {k} {side}[{i}]",
                                           path)[:, :, None])
                for i, m in enumerate(data)
            )
        chains.append(PoleChain(complex(z), members["out_chain"], members["in_chain"]))
    return chains


# -- commands ------------------------------------------------------------------


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def _ordered_map(fn, items) -> list:
    """``[fn(x) for x in items]`` on a thread pool; results keep input order."""
    items = list(items)
    workers = min(_threads(), max(len(items), 1))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _emit_csv(header: list, rows, target: str, stdout) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    if target in ("csv", "-"):
        stdout.write(buf.getvalue())
    else:
        _write(target, buf.getvalue())


def _entry_columns(prefix: str, rows: int, cols: int | None = None) -> list:
    names = []
    if cols is None:
        for i in range(rows):
            names += [f"{prefix}_{i + 1}_re", f"{prefix}_{i + 1}_im"]
    else:
        for i in range(rows):
            for j in range(cols):
                names += [f"{prefix}_{i + 1}_{j + 1}_re", f"{prefix}_{i + 1}_{j + 1}_im"]
    return names


def _interleave(values) -> list:
    flat = np.asarray(values, dtype=complex).reshape(-1)
    return np.stack([flat.real, flat.imag], axis=-1).reshape(-1).tolist()


def _cmd_verify(args, out) -> int:
    v = load_vessel(args.vessel, check=False)
    report = verify_vessel(v, args.tol)
    for name, value in report.items():
        out.write(f"{name}: {_fmt(value)}\n")
    out.write(f"max: {_fmt(report.max_over_grid)}\n")
    out.write(f"tol: {_fmt(report.tol)}\n")
    out.write(f"status: {'pass' if report.passed else 'fail'}\n")
    return 0 if report.passed else 1


def _parse_lambda_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    try:
        if len(parts) != 3:
            raise ValueError
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError
    except ValueError:
        raise UsageError(f"--lambda-grid expects RE0:RE1:N with N >= 1, got {text!r}") from None
    return np.linspace(lo, hi, count)


def _cmd_transfer(args, out) -> int:
    v = load_vessel(args.vessel)
    res = _parse_lambda_grid(args.lambda_grid)
    if args.t2_samples < 1:
        raise UsageError("--t2-samples must be positive")
    t2s = v.grid.sample(args.t2_samples)
    jobs = [(t2, complex(re, args.im)) for t2 in t2s for re in res]
    values = _ordered_map(lambda job: transfer(v, job[1], job[0]), jobs)
    header = ["t2", "re_lambda", "im_lambda"] + _entry_columns("S", v.sig.es, v.sig.e)
    rows = ([t2, lam.real, lam.imag] + _interleave(S) for (t2, lam), S in zip(jobs, values))
    _emit_csv(header, rows, args.out, out)
    return 0


def _cmd_unary(op):
    def run(args, out) -> int:
        result = op(load_vessel(args.vessel))
        save_vessel(result, args.out)
        out.write(f"wrote {args.out} (state dimension {result.n})\n")
        return 0

    return run


def _cmd_cascade(args, out) -> int:
    result = cascade(load_vessel(args.first), load_vessel(args.second))
    save_vessel(result, args.out)
    out.write(f"wrote {args.out} (state dimension {result.n})\n")
    return 0


def _cmd_gauge(args, out) -> int:
    v = load_vessel(args.vessel)
    T = load_matrix(args.T)
    if T.grid != v.grid:
        raise FormatError(f"{args.T}: grid differs from the vessel grid")
    result = gauge_transform(v, T)
    save_vessel(result, args.out)
    out.write(f"wrote {args.out} (state dimension {result.n})\n")
    return 0


def _cmd_kalman(args, out) -> int:
    v = load_vessel(args.vessel)
    t2 = v.grid.t_start if args.t2 is None else args.t2
    kd = kalman_decompose(v, t2)
    names = ("c_obar", "co", "cbar_o", "cbar_obar")
    out.write(f"t2: {_fmt(kd.t2)}\n")
    for name, dim in zip(names, kd.dims):
        out.write(f"{name}: {dim}\n")
    out.write(f"minimal_state: {kd.minimal.n}\n")
    if args.out:
        save_vessel(kd.minimal, args.out)
        out.write(f"wrote {args.out}\n")
    return 0


def _cmd_equiv(args, out) -> int:
    v1, v2 = load_vessel(args.first), load_vessel(args.second)
    try:
        same = equivalent(v1, v2, tol=args.tol)
    except VesselError as exc:
        out.write(f"not equivalent: {exc}\n")
        return 1
    out.write("equivalent\n" if same else "not equivalent\n")
    return 0 if same else 1


def _cmd_realize(args, out) -> int:
    chains = load_poles(args.poles)
    sig = load_signature(args.sig)
    D = load_matrix(args.D)
    for what, grid in (("pole data", chains[0].out_chain[0].grid), ("feedthrough", D.grid)):
        if grid != sig.grid:
            raise FormatError(f"{what} grid differs from the signature grid")
    result = realize_chains(chains, D, sig)
    save_vessel(result, args.out)
    out.write(f"wrote {args.out} (state dimension {result.n})\n")
    return 0


def _parse_complex(text: str) -> complex:
    try:
        parts = [float(p) for p in text.split(",")]
        if len(parts) not in (1, 2):
            raise ValueError
    except ValueError:
        raise UsageError(f"expected RE,IM, got {text!r}") from None
    return complex(parts[0], parts[1] if len(parts) == 2 else 0.0)


def _cmd_simulate(args, out) -> int:
    v = load_vessel(args.vessel)
    lam = _parse_complex(args.lam)
    u0 = load_vector(args.u0)
    if args.grid_points < 5:
        raise UsageError("--grid-points must be at least 5")
    traj = separated_trajectory(v, lam, u0, default_grids(v, args.grid_points))
    report = pde_residuals(v, traj, tol=args.tol)
    e, es = v.sig.e, v.sig.es
    header = (["t1", "t2"] + _entry_columns("u", e) + _entry_columns("x", v.n)
              + _entry_columns("y", es))
    rows = ([t1, t2] + _interleave(u) + _interleave(x) + _interleave(y)
            for t1, t2, u, x, y in traj.rows())
    _emit_csv(header, rows, args.out, out)
    stream = sys.stderr if args.out in ("csv", "-") else out
    for name, value in report.items():
        stream.write(f"{name}: {_fmt(value)}\n")
    stream.write(f"status: {'pass' if report.passed else 'fail'}\n")
    return 0 if report.passed else 1


_FIXTURES = {
    "v0": lambda p: fixtures.v0(),
    "va": lambda p: fixtures.va(1.0 if p is None else p),
    "vg": lambda p: fixtures.vg(1.0 if p is None else p),
    "vc2": lambda p: fixtures.vc2(),
    "shifted-v0": lambda p: fixtures.shifted_v0(1.0 if p is None else p),
}


def _cmd_fixture(args, out) -> int:
    v = _FIXTURES[args.name](args.param)
    save_vessel(v, args.out)
    out.write(f"wrote {args.out} (state dimension {v.n})\n")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vessel-lab", description="Differential vessels of 2D systems.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("verify", help="report vessel axiom residuals")
    s.add_argument("vessel")
    s.add_argument("--tol", type=float, default=None)
    s.set_defaults(func=_cmd_verify)

    s = sub.add_parser("transfer", help="tabulate the transfer function")
    s.add_argument("vessel")
    s.add_argument("--lambda-grid", required=True, metavar="RE0:RE1:N")
    s.add_argument("--im", type=float, default=0.0)
    s.add_argument("--t2-samples", type=int, default=1)
    s.add_argument("--out", default="csv", help="'csv' or '-' for stdout, else a path")
    s.set_defaults(func=_cmd_transfer)

    s = sub.add_parser("cascade", help="cascade connection of two vessels")
    s.add_argument("first")
    s.add_argument("second")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_cascade)

    for name, op in (("invert", invert), ("adjoint", adjoint)):
        s = sub.add_parser(name, help=f"{name} vessel")
        s.add_argument("vessel")
        s.add_argument("--out", required=True)
        s.set_defaults(func=_cmd_unary(op))

    s = sub.add_parser("gauge", help="apply a gauge transformation")
    s.add_argument("vessel")
    s.add_argument("--T", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_gauge)

    s = sub.add_parser("kalman", help="Kalman decomposition and minimal part")
    s.add_argument("vessel")
    s.add_argument("--t2", type=float, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=_cmd_kalman)

    s = sub.add_parser("equiv", help="test equality of transfer functions")
    s.add_argument("first")
    s.add_argument("second")
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=_cmd_equiv)

    s = sub.add_parser("realize", help="realize pole data")
    s.add_argument("--poles", required=True)
    s.add_argument("--sig", required=True)
    s.add_argument("--D", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_realize)

    s = sub.add_parser("simulate", help="separated trajectory and PDE residuals")
    s.add_argument("vessel")
    s.add_argument("--lambda", dest="lam", required=True, metavar="RE,IM")
    s.add_argument("--u0", required=True)
    s.add_argument("--grid-points", type=int, default=33)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--out", default="csv", help="'csv' or '-' for stdout, else a path")
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("fixture", help="write a reference vessel")
    s.add_argument("name", choices=sorted(_FIXTURES))
    s.add_argument("--param", type=float, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_fixture)
    return p


def run_command(argv, stdout=None, stderr=None) -> int:
    """Run one CLI invocation and return its exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", VesselWarning)
        try:
            args = build_parser().parse_args(list(argv))
            code = args.func(args, stdout)
        except UsageError as exc:
            stderr.write(f"vessel-lab: error: {exc}\n")
            code = 2
        except (FormatError, OSError) as exc:
            stderr.write(f"vessel-lab: input error: {exc}\n")
            code = 2
        except VesselError as exc:
            stderr.write(f"vessel-lab: {type(exc).__name__}: {exc}\n")
            code = 1
    for w in caught:
        if issubclass(w.category, VesselWarning):
            stderr.write(f"vessel-lab: warning: {w.message}\n")
    return code


def main(argv=None) -> int:
    code = run_command(sys.argv[1:] if argv is None else argv)
    sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
