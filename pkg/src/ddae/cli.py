"""Command-line front end: system-description files and report formats.

The description language is line oriented; '#' starts a comment.

    system n=<int> m=<int> r=<float>
    matrix <name> = [[a,b],[c,d]]          # row-major, complex as a+bi
    kernel <A|B|C|D>:
      atom <tau> <matrixname|literal>
      poly [<a>,<b>] <M0> <M1> ...         # density sum_k Mk theta^k
      exp  [<a>,<b>] <K1> <S> <K2>         # density K1 e^{theta S} K2
    init phi=<vector> chi=<samplesfile|vector> psi=<samplesfile|vector> h=<float>

Vector-valued init entries denote constant memory functions; a bare token is
read as a file of comma-separated samples, one grid node per line.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import graph, measures, model, sim, spectrum
from .fsa import FsaPlant, build_fsa, place_poles

__all__ = [
    "DslError",
    "DslSyntaxError",
    "UndefinedMatrix",
    "DimensionMismatch",
    "SupportOutOfRange",
    "SystemDescription",
    "parse",
    "emit",
    "build_system",
    "build_initial_state",
    "main",
]

log = logging.getLogger("ddae")

KERNEL_NAMES = ("A", "B", "C", "D")


class DslError(Exception):
    def __init__(self, line, col, message):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message


class DslSyntaxError(DslError):
    pass


class UndefinedMatrix(DslError):
    pass


class DimensionMismatch(DslError):
    pass


class SupportOutOfRange(DslError):
    pass


@dataclass(frozen=True, eq=False)
class AtomTerm:
    tau: float
    weight: np.ndarray


@dataclass(frozen=True, eq=False)
class PolyTerm:
    a: float
    b: float
    coeffs: tuple


@dataclass(frozen=True, eq=False)
class ExpTerm:
    a: float
    b: float
    left: np.ndarray
    gen: np.ndarray
    right: np.ndarray


@dataclass(frozen=True, eq=False)
class InitSpec:
    phi: np.ndarray
    chi: tuple  # ("const", vector) or ("file", path)
    psi: tuple
    h: float


@dataclass(eq=False)
class SystemDescription:
    """Fully resolved content of a description file."""

    n: int
    m: int
    r: float
    kernels: dict
    init: InitSpec | None

    def __eq__(self, other):
        if not isinstance(other, SystemDescription):
            return NotImplemented
        if (self.n, self.m, self.r) != (other.n, other.m, other.r):
            return False
        for name in KERNEL_NAMES:
            mine, theirs = self.kernels[name], other.kernels[name]
            if len(mine) != len(theirs):
                return False
            for t1, t2 in zip(mine, theirs):
                if not _terms_equal(t1, t2):
                    return False
        return _init_equal(self.init, other.init)


def _terms_equal(t1, t2):
    if type(t1) is not type(t2):
        return False
    if isinstance(t1, AtomTerm):
        return t1.tau == t2.tau and np.array_equal(t1.weight, t2.weight)
    if isinstance(t1, PolyTerm):
        return (
            (t1.a, t1.b) == (t2.a, t2.b)
            and len(t1.coeffs) == len(t2.coeffs)
            and all(np.array_equal(c1, c2) for c1, c2 in zip(t1.coeffs, t2.coeffs))
        )
    return (
        (t1.a, t1.b) == (t2.a, t2.b)
        and np.array_equal(t1.left, t2.left)
        and np.array_equal(t1.gen, t2.gen)
        and np.array_equal(t1.right, t2.right)
    )


def _init_equal(i1, i2):
    if i1 is None or i2 is None:
        return i1 is i2
    if i1.h != i2.h or not np.array_equal(i1.phi, i2.phi):
        return False
    for s1, s2 in ((i1.chi, i2.chi), (i1.psi, i2.psi)):
        if s1[0] != s2[0]:
            return False
        if s1[0] == "const" and not np.array_equal(s1[1], s2[1]):
            return False
        if s1[0] == "file" and s1[1] != s2[1]:
            return False
    return True


# ---------------------------------------------------------------------------
# tokens and literals

_TOKEN_RE = re.compile(r"\S+")
_FLOAT_BODY = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(
    rf"^(?P<re>[+-]?{_FLOAT_BODY})?(?P<im>[+-]?{_FLOAT_BODY}|[+-])?(?P<i>i)?$"
)


def _tokens(line):
    return [(m.group(0), m.start() + 1) for m in _TOKEN_RE.finditer(line)]


def _parse_scalar(tok, line, col):
    m = _COMPLEX_RE.match(tok)
    if not m or not tok:
        raise DslSyntaxError(line, col, f"expected a number, got {tok!r}")
    re_part, im_part, has_i = m.group("re"), m.group("im"), m.group("i")
    if has_i:
        if im_part is None:
            # pure imaginary written without a separate real part, e.g. "2i"
            im_part, re_part = re_part, None
        if im_part in ("+", "", None):
            im_part = "1"
        elif im_part == "-":
            im_part = "-1"
        return complex(float(re_part) if re_part else 0.0, float(im_part))
    if re_part is None or im_part is not None:
        raise DslSyntaxError(line, col, f"expected a number, got {tok!r}")
    return complex(float(re_part), 0.0)


def _parse_real(tok, line, col):
    value = _parse_scalar(tok, line, col)
    if value.imag != 0:
        raise DslSyntaxError(line, col, f"expected a real number, got {tok!r}")
    if not np.isfinite(value.real):
        raise DslSyntaxError(line, col, f"number {tok!r} is not finite")
    return value.real


def _parse_matrix(tok, line, col):
    if not (tok.startswith("[[") and tok.endswith("]]")):
        raise DslSyntaxError(line, col, f"expected a matrix literal [[...]], got {tok!r}")
    rows = tok[2:-2].split("],[")
    data = []
    for row in rows:
        if not row:
            raise DslSyntaxError(line, col, "empty matrix row")
        data.append([_parse_scalar(entry, line, col) for entry in row.split(",")])
    if any(len(row) != len(data[0]) for row in data):
        raise DslSyntaxError(line, col, "matrix rows differ in length")
    out = np.array(data, dtype=complex)
    if not np.all(np.isfinite(out)):
        raise DslSyntaxError(line, col, "matrix entries must be finite")
    return out


def _parse_vector(tok, line, col):
    if not (tok.startswith("[") and tok.endswith("]")) or tok.startswith("[["):
        raise DslSyntaxError(line, col, f"expected a vector literal [...], got {tok!r}")
    body = tok[1:-1]
    if not body:
        return np.zeros(0, dtype=complex)
    return np.array([_parse_scalar(entry, line, col) for entry in body.split(",")], dtype=complex)


def _parse_interval(tok, line, col):
    if not (tok.startswith("[") and tok.endswith("]")):
        raise DslSyntaxError(line, col, f"expected an interval [a,b], got {tok!r}")
    parts = tok[1:-1].split(",")
    if len(parts) != 2:
        raise DslSyntaxError(line, col, f"expected an interval [a,b], got {tok!r}")
    return _parse_real(parts[0], line, col), _parse_real(parts[1], line, col)


def _keyvalue(tok, line, col):
    if "=" not in tok:
        raise DslSyntaxError(line, col, f"expected key=value, got {tok!r}")
    key, _, value = tok.partition("=")
    if not value:
        raise DslSyntaxError(line, col, f"missing value in {tok!r}")
    return key, value


# ---------------------------------------------------------------------------
# parser

def parse(text):
    """Parse a description document into a SystemDescription."""
    dims = None
    dims_line = 0
    matrices = {}
    kernels = {name: [] for name in KERNEL_NAMES}
    current = None
    init = None

    def resolve_matrix(tok, line, col):
        if tok.startswith("[["):
            return _parse_matrix(tok, line, col)
        if tok not in matrices:
            raise UndefinedMatrix(line, col, f"matrix {tok!r} is not defined")
        return matrices[tok]

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        toks = _tokens(line)
        indented = line[0] in " \t"

        if indented:
            if current is None:
                raise DslSyntaxError(lineno, toks[0][1], "term outside of a kernel block")
            word, col = toks[0]
            if word == "atom":
                if len(toks) != 3:
                    raise DslSyntaxError(lineno, col, "expected: atom <tau> <matrix>")
                tau = _parse_real(toks[1][0], lineno, toks[1][1])
                weight = resolve_matrix(toks[2][0], lineno, toks[2][1])
                if not 0 <= tau <= dims[2]:
                    raise SupportOutOfRange(lineno, toks[1][1], f"atom at {tau} outside [0, {dims[2]}]")
                kernels[current].append((lineno, toks[0][1], AtomTerm(tau, weight)))
            elif word == "poly":
                if len(toks) < 3:
                    raise DslSyntaxError(lineno, col, "expected: poly [a,b] <M0> [<M1> ...]")
                a, b = _parse_interval(toks[1][0], lineno, toks[1][1])
                _check_interval(a, b, dims[2], lineno, toks[1][1])
                coeffs = tuple(resolve_matrix(t, lineno, c) for t, c in toks[2:])
                kernels[current].append((lineno, toks[0][1], PolyTerm(a, b, coeffs)))
            elif word == "exp":
                if len(toks) != 5:
                    raise DslSyntaxError(lineno, col, "expected: exp [a,b] <K1> <S> <K2>")
                a, b = _parse_interval(toks[1][0], lineno, toks[1][1])
                _check_interval(a, b, dims[2], lineno, toks[1][1])
                k1 = resolve_matrix(toks[2][0], lineno, toks[2][1])
                gen = resolve_matrix(toks[3][0], lineno, toks[3][1])
                k2 = resolve_matrix(toks[4][0], lineno, toks[4][1])
                kernels[current].append((lineno, toks[0][1], ExpTerm(a, b, k1, gen, k2)))
            else:
                raise DslSyntaxError(lineno, col, f"unknown term {word!r} (atom/poly/exp)")
            continue

        current = None
        word, col = toks[0]
        if word == "system":
            if dims is not None:
                raise DslSyntaxError(lineno, col, "duplicate system line")
            fields = {}
            for tok, tcol in toks[1:]:
                key, value = _keyvalue(tok, lineno, tcol)
                fields[key] = (value, tcol)
            missing = {"n", "m", "r"} - set(fields)
            if missing:
                raise DslSyntaxError(lineno, col, f"system line is missing {sorted(missing)}")
            n = int(_parse_real(*_with_pos(fields["n"], lineno)))
            m = int(_parse_real(*_with_pos(fields["m"], lineno)))
            r = _parse_real(*_with_pos(fields["r"], lineno))
            if n < 1 or m < 0 or r < 0:
                raise DslSyntaxError(lineno, col, "need n >= 1, m >= 0, r >= 0")
            dims = (n, m, r)
            dims_line = lineno
        elif word == "matrix":
            if len(toks) != 4 or toks[2][0] != "=":
                raise DslSyntaxError(lineno, col, "expected: matrix <name> = [[...]]")
            name = toks[1][0]
            matrices[name] = _parse_matrix(toks[3][0], lineno, toks[3][1])
        elif word == "kernel":
            if dims is None:
                raise DslSyntaxError(lineno, col, "kernel block before the system line")
            if len(toks) != 2 or not toks[1][0].endswith(":"):
                raise DslSyntaxError(lineno, col, "expected: kernel <A|B|C|D>:")
            name = toks[1][0][:-1]
            if name not in KERNEL_NAMES:
                raise DslSyntaxError(lineno, toks[1][1], f"unknown kernel {name!r}")
            current = name
        elif word == "init":
            if dims is None:
                raise DslSyntaxError(lineno, col, "init line before the system line")
            fields = {}
            for tok, tcol in toks[1:]:
                key, value = _keyvalue(tok, lineno, tcol)
                fields[key] = (value, tcol)
            missing = {"phi", "chi", "psi", "h"} - set(fields)
            if missing:
                raise DslSyntaxError(lineno, col, f"init line is missing {sorted(missing)}")
            phi = _parse_vector(*_with_pos(fields["phi"], lineno))
            h = _parse_real(*_with_pos(fields["h"], lineno))
            if h <= 0:
                raise DslSyntaxError(lineno, fields["h"][1], "step h must be positive")
            init = InitSpec(phi, _memory_spec(fields["chi"], lineno),
                            _memory_spec(fields["psi"], lineno), h)
        else:
            raise DslSyntaxError(lineno, col, f"unknown directive {word!r}")

    if dims is None:
        raise DslSyntaxError(1, 1, "missing system line")

    n, m, r = dims
    resolved = {}
    for name in KERNEL_NAMES:
        rows, cols = {"A": (n, n), "B": (n, m), "C": (m, n), "D": (m, m)}[name]
        terms = []
        for lineno, col, term in kernels[name]:
            if m == 0 and name != "A":
                raise DimensionMismatch(lineno, col, f"kernel {name} must be empty when m=0")
            shape = _term_shape(term)
            if shape != (rows, cols):
                raise DimensionMismatch(
                    lineno, col,
                    f"kernel {name} term has shape {shape[0]}x{shape[1]}, expected {rows}x{cols}",
                )
            terms.append(term)
        resolved[name] = tuple(terms)

    if init is not None:
        if init.phi.shape != (n,):
            raise DimensionMismatch(dims_line, 1, f"phi must have {n} entries")
        for spec, dim, label in ((init.chi, n, "chi"), (init.psi, m, "psi")):
            if spec[0] == "const" and spec[1].shape != (dim,):
                raise DimensionMismatch(dims_line, 1, f"{label} must have {dim} entries")

    return SystemDescription(n, m, r, resolved, init)


def _with_pos(field, lineno):
    value, col = field
    return value, lineno, col


def _memory_spec(field, lineno):
    value, col = field
    if value.startswith("["):
        return ("const", _parse_vector(value, lineno, col))
    return ("file", value)


def _check_interval(a, b, memory, lineno, col):
    if not 0 <= a < b:
        raise SupportOutOfRange(lineno, col, f"invalid interval [{a}, {b}]")
    if b > memory:
        raise SupportOutOfRange(lineno, col, f"interval [{a}, {b}] outside [0, {memory}]")


def _term_shape(term):
    if isinstance(term, AtomTerm):
        return term.weight.shape
    if isinstance(term, PolyTerm):
        return term.coeffs[0].shape
    return (term.left.shape[0], term.right.shape[1])


# ---------------------------------------------------------------------------
# building and emitting

def build_system(desc):
    """Assemble the DdaeSystem described by a parsed document."""
    def kernel(name, rows, cols):
        atoms = []
        pieces = []
        for term in desc.kernels[name]:
            if isinstance(term, AtomTerm):
                atoms.append(measures.Atom(term.tau, term.weight))
            elif isinstance(term, PolyTerm):
                pieces.append(measures.PolyDensity(term.a, term.b, term.coeffs))
            else:
                pieces.append(measures.ExpDensity(term.a, term.b, term.left, term.gen, term.right))
        return measures.DelayKernel(rows, cols, desc.r, atoms=tuple(atoms), pieces=tuple(pieces))

    n, m = desc.n, desc.m
    if m == 0:
        return model.DdaeSystem.differential(n, desc.r, kernel("A", n, n))
    return model.DdaeSystem(
        n, m, desc.r, kernel("A", n, n), kernel("B", n, m), kernel("C", m, n), kernel("D", m, m)
    )


def build_initial_state(desc, base_dir=".", step=None):
    """Materialize the init block; const entries may be resampled at `step`."""
    if desc.init is None:
        raise ValueError("description has no init block")
    h = step if step is not None else desc.init.h
    nodes = int(round(desc.r / h))
    if abs(desc.r - nodes * h) > 1e-9 * max(desc.r, 1.0):
        raise ValueError(f"step {h} does not divide the memory {desc.r}")

    def samples(spec, dim, label):
        kind, payload = spec
        if kind == "const":
            return np.tile(payload, (nodes + 1, 1)) if dim else np.zeros((nodes + 1, 0), complex)
        if step is not None and step != desc.init.h:
            raise ValueError(f"{label} comes from a samples file; cannot resample it")
        path = Path(base_dir) / payload
        rows = []
        for line in path.read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            rows.append([_parse_scalar(tok.strip(), 0, 0) for tok in line.split(",")])
        arr = np.array(rows, dtype=complex)
        if arr.shape != (nodes + 1, dim):
            raise ValueError(
                f"{label} file {payload!r} has shape {arr.shape}, expected {(nodes + 1, dim)}"
            )
        return arr

    chi = samples(desc.init.chi, desc.n, "chi")
    psi = samples(desc.init.psi, desc.m, "psi")
    return model.InitialState(desc.init.phi, h, chi, psi)


def _fmt_real(value):
    return repr(float(value))


def _fmt_scalar(value):
    value = complex(value)
    if value.imag == 0:
        return _fmt_real(value.real)
    sign = "+" if value.imag >= 0 else "-"
    return f"{_fmt_real(value.real)}{sign}{_fmt_real(abs(value.imag))}i"


def _fmt_matrix(mat):
    rows = ",".join("[" + ",".join(_fmt_scalar(v) for v in row) + "]" for row in np.atleast_2d(mat))
    return "[" + rows + "]"


def _fmt_vector(vec):
    return "[" + ",".join(_fmt_scalar(v) for v in vec) + "]"


def emit(desc):
    """Canonical text for a description; emit(parse(t)) reparses identically."""
    lines = [f"system n={desc.n} m={desc.m} r={_fmt_real(desc.r)}"]
    for name in KERNEL_NAMES:
        terms = desc.kernels[name]
        if not terms:
            continue
        lines.append(f"kernel {name}:")
        for term in terms:
            if isinstance(term, AtomTerm):
                lines.append(f"  atom {_fmt_real(term.tau)} {_fmt_matrix(term.weight)}")
            elif isinstance(term, PolyTerm):
                mats = " ".join(_fmt_matrix(c) for c in term.coeffs)
                lines.append(f"  poly [{_fmt_real(term.a)},{_fmt_real(term.b)}] {mats}")
            else:
                lines.append(
                    f"  exp [{_fmt_real(term.a)},{_fmt_real(term.b)}] "
                    f"{_fmt_matrix(term.left)} {_fmt_matrix(term.gen)} {_fmt_matrix(term.right)}"
                )
    if desc.init is not None:
        chi = _fmt_vector(desc.init.chi[1]) if desc.init.chi[0] == "const" else desc.init.chi[1]
        psi = _fmt_vector(desc.init.psi[1]) if desc.init.psi[0] == "const" else desc.init.psi[1]
        lines.append(
            f"init phi={_fmt_vector(desc.init.phi)} chi={chi} psi={psi} h={_fmt_real(desc.init.h)}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands

def _load(path):
    desc = parse(Path(path).read_text())
    log.info("parsed %s: n=%d m=%d r=%g", path, desc.n, desc.m, desc.r)
    return desc


def _write_output(text, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        Path(out_path).write_text(text)


def cmd_check(args):
    desc = _load(args.file)
    system = build_system(desc)
    wp = model.classify(system)
    print(f"classification: {wp.kind.value}")
    print(f"D0: {_fmt_matrix(wp.instantaneous) if system.m else '[[]]'}")
    print(f"J smallest singular value: {_fmt_real(wp.sigma_min)}")
    if system.r > 0:
        diagram = graph.canonical_diagram(system)
        report = graph.causality_check(diagram)
        if report.acyclic:
            print(f"causality: acyclic, nilpotency index {report.nilpotency_index}")
        else:
            names = " -> ".join(diagram.tags[v] for v in report.loop)
            print(f"causality: loop {names}")
    else:
        print("causality: not applicable (r = 0)")
    if desc.init is not None:
        init = build_initial_state(desc, base_dir=Path(args.file).parent)
        residual = model.consistency_residual(system, init)
        print(f"consistency residual: {_fmt_real(residual)}")
    return 1 if wp.kind is model.Posedness.SINGULAR else 0


def cmd_graph(args):
    desc = _load(args.file)
    system = build_system(desc)
    _write_output(graph.to_dot(graph.canonical_diagram(system)), args.dot)
    return 0


def _csv_value(value):
    value = complex(value)
    if value.imag == 0:
        return f"{value.real:.17g}"
    sign = "+" if value.imag >= 0 else "-"
    return f"{value.real:.17g}{sign}{abs(value.imag):.17g}i"


def trajectory_csv(traj, n, m):
    """CSV text: header, memory rows from -r, then the computed rows."""
    header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(m)]
    lines = [",".join(header)]
    lag = traj.memory_chi.shape[0] - 1
    for idx in range(lag):
        t = (idx - lag) * traj.step
        row = [f"{t:.17g}"] + [_csv_value(v) for v in traj.memory_chi[idx]] \
            + [_csv_value(v) for v in traj.memory_psi[idx]]
        lines.append(",".join(row))
    for k in range(traj.x.shape[0]):
        t = k * traj.step
        row = [f"{t:.17g}"] + [_csv_value(v) for v in traj.x[k]] \
            + [_csv_value(v) for v in traj.y[k]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _suggest_step(system):
    """Greatest common divisor of the discrete delays and the memory length."""
    import math

    locations = [system.r]
    for kernel in (system.A, system.B, system.C, system.D):
        if kernel is None:
            continue
        locations.extend(at.location for at in kernel.atoms if at.location > 0)
    scale = 10**9
    common = 0
    for loc in locations:
        common = math.gcd(common, int(round(loc * scale)))
    return common / scale if common else None


def cmd_simulate(args):
    desc = _load(args.file)
    system = build_system(desc)
    if desc.init is None:
        print("error: simulate needs an init block in the description", file=sys.stderr)
        return 2
    init = build_initial_state(desc, base_dir=Path(args.file).parent, step=args.step)
    try:
        traj = sim.simulate(system, init, init.step, args.horizon)
    except measures.AtomOffGrid as exc:
        hint = _suggest_step(system)
        extra = f"; try --step {hint:g} or a divisor of it" if hint else ""
        print(f"error: {exc}{extra}", file=sys.stderr)
        return 2
    _write_output(trajectory_csv(traj, system.n, system.m), args.out)
    return 0


def report_json(report):
    """Spectrum report as JSON with a fixed key order."""
    re_min, re_max, im_max = report.window

    def root_obj(root):
        return {
            "re": root.location.real,
            "im": root.location.imag,
            "mult": root.multiplicity,
            "residual": root.residual,
        }

    growth = report.growth_bound_in_window
    obj = {
        "window": {"re_min": re_min, "re_max": re_max, "im_max": im_max},
        "roots": [root_obj(r) for r in report.roots],
        "growth_bound": growth if growth != float("-inf") else None,
        "delta0_roots": [root_obj(r) for r in report.delta0_roots],
        "warnings": list(report.warnings),
    }
    return json.dumps(obj, indent=2) + "\n"


def cmd_spectrum(args):
    desc = _load(args.file)
    system = build_system(desc)
    wp = model.classify(system)
    if wp.kind is model.Posedness.SINGULAR:
        print("error: system is not well-posed (SingularJ); no spectrum report", file=sys.stderr)
        return 1
    re_min, re_max, im_max = args.window
    report = spectrum.find_roots(system, (re_min, re_max, im_max), max_roots=args.max_roots)
    _write_output(report_json(report), args.out)
    return 0


def cmd_fsa(args):
    plant = FsaPlant(_parse_matrix(args.E, 0, 0).real, _parse_matrix(args.F, 0, 0).real, args.T)
    if args.poles is not None:
        desired = [_parse_scalar(tok, 0, 0) for tok in args.poles]
        gain = place_poles(plant, desired)
    else:
        gain = np.atleast_2d(_parse_matrix(args.G, 0, 0).real)
    build_fsa(plant, gain)  # validates dimensions
    from scipy.linalg import expm

    n = plant.n
    fg = plant.F @ gain
    desc = SystemDescription(
        n, n, plant.T,
        {
            "A": (AtomTerm(0.0, plant.E.astype(complex)),),
            "B": (AtomTerm(0.0, (-fg).astype(complex)),),
            "C": (AtomTerm(plant.T, expm(plant.T * plant.E).astype(complex)),),
            "D": (ExpTerm(0.0, plant.T, -np.eye(n, dtype=complex),
                          plant.E.astype(complex), fg.astype(complex)),),
        },
        None,
    )
    _write_output(emit(desc), args.out)
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ddae",
        description="Delay-differential algebraic systems: check, graph, simulate, spectrum, fsa",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="classify well-posedness and causality")
    p.add_argument("file")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("graph", help="emit the canonical block diagram as DOT")
    p.add_argument("file")
    p.add_argument("--dot", default=None, help="output path (default stdout)")
    p.set_defaults(fn=cmd_graph)

    p = sub.add_parser("simulate", help="method-of-steps simulation to CSV")
    p.add_argument("file")
    p.add_argument("--step", type=float, default=None, help="grid step (default: init block h)")
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("spectrum", help="characteristic roots in a window to JSON")
    p.add_argument("file")
    p.add_argument("--window", type=float, nargs=3, required=True,
                   metavar=("RE_MIN", "RE_MAX", "IM_MAX"))
    p.add_argument("--max-roots", type=int, default=64)
    p.add_argument("--out", default=None, help="JSON output path (default stdout)")
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("fsa", help="emit the predictor-feedback closed loop as a system file")
    p.add_argument("--E", required=True, help="drift matrix literal")
    p.add_argument("--F", required=True, help="input column literal")
    p.add_argument("--T", type=float, required=True, help="dead time")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--poles", nargs="+", help="desired closed-loop poles")
    group.add_argument("--G", help="gain row literal")
    p.add_argument("--out", default=None, help="system file output path (default stdout)")
    p.set_defaults(fn=cmd_fsa)

    return parser


def _configure_logging():
    level = os.environ.get("DDAE_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(stream=sys.stderr, level=levels.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _configure_logging()
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except DslError as exc:
        name = getattr(args, "file", "<input>")
        print(f"{name}:{exc.line}:{exc.col}: {exc.message}", file=sys.stderr)
        return 2
    except (model.NotWellPosed, sim.HorizonNotMultipleOfStep, spectrum.WindowTooLarge,
            spectrum.RootOnBoundary, measures.AtomOffGrid, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
