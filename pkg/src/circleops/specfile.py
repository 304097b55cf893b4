"""Line-oriented batch spec files: symbols, diffeos, weights, jobs.

The format is deliberately plain so runs diff cleanly and tests can
generate specs directly:

    [symbols]
    symbol absDinv rank 1 order -1
    c -1 0 + 0 1 0
    endsymbol

    [diffeos]
    diffeo wobble based
    u 1 0 0.15
    enddiffeo

    [weights]
    weight Q laplace 2 0 1.0

    [jobs]
    job r1 res absDinv
    job t1 trq absDinv Q depth=8

Component lines read "c DEG LOGPOW BRANCH MODE RE IM [ROW COL]" with BRANCH
one of +, -, both.  Displacement lines "u MODE RE IM" are mirrored to keep
u real.  Parsing is strict: unknown sections, malformed lines, non-finite
numbers, and references to undefined names all raise with the offending
line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diffeo import Diffeo
from .symbols import FormalSymbol
from .trigpoly import TrigPoly
from .zetatrace import Weight, abs_weight, laplace_weight


class SpecError(Exception):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class Job:
    job_id: str
    op: str
    args: list[str]
    knobs: dict[str, str]
    line: int


@dataclass
class SpecFile:
    symbols: dict[str, FormalSymbol] = field(default_factory=dict)
    diffeos: dict[str, Diffeo] = field(default_factory=dict)
    weights: dict[str, Weight] = field(default_factory=dict)
    jobs: list[Job] = field(default_factory=list)


_SECTIONS = ("symbols", "diffeos", "weights", "jobs")

# argument kinds per operation: s = symbol, d = diffeo, w = weight, * = token
JOB_SIGNATURES = {
    "res": "s",
    "parity": "s",
    "trq": "sw",
    "zeta": "sw",
    "kv": "s",
    "bracket": "ssw",
    "schwinger": "ss*",
    "cocycle": "sss*",
    "glres": "d",
    "decay": "s",
    "heat": "sw",
    "tracepower": "s*w",
    "roundtrip": "d",
}

KNOWN_KNOBS = {"depth", "modes", "quadrature", "tolerance", "seed", "s_re", "s_im"}


def _number(tok: str, lineno: int) -> float:
    try:
        v = float(tok)
    except ValueError as exc:
        raise SpecError(f"bad numeric literal '{tok}'", lineno) from exc
    if not math.isfinite(v):
        raise SpecError(f"non-finite numeric literal '{tok}'", lineno)
    return v


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError as exc:
        raise SpecError(f"bad integer literal '{tok}'", lineno) from exc


class _SymbolBuilder:
    def __init__(self, name: str, rank: int, order: int, lineno: int):
        if rank < 1:
            raise SpecError("rank must be positive", lineno)
        self.name, self.rank, self.order = name, rank, order
        self.comps: dict[tuple[int, int], tuple[dict, dict]] = {}

    def add_line(self, toks: list[str], lineno: int):
        if len(toks) not in (7, 9):
            raise SpecError("expected: c DEG LOGPOW BRANCH MODE RE IM [ROW COL]", lineno)
        deg = _int(toks[1], lineno)
        logpow = _int(toks[2], lineno)
        branch = toks[3]
        if branch not in ("+", "-", "both"):
            raise SpecError(f"branch must be +, - or both, got '{branch}'", lineno)
        mode = _int(toks[4], lineno)
        val = complex(_number(toks[5], lineno), _number(toks[6], lineno))
        row = _int(toks[7], lineno) if len(toks) == 9 else 0
        col = _int(toks[8], lineno) if len(toks) == 9 else 0
        if not (0 <= row < self.rank and 0 <= col < self.rank):
            raise SpecError("matrix indices out of range", lineno)
        if logpow < 0:
            raise SpecError("logpow must be >= 0", lineno)
        if deg > self.order:
            raise SpecError(f"component degree {deg} above declared order {self.order}", lineno)
        plus, minus = self.comps.setdefault((deg, logpow), ({}, {}))
        for target in (plus,) if branch == "+" else (minus,) if branch == "-" else (plus, minus):
            mat = target.setdefault(mode, np.zeros((self.rank, self.rank), dtype=complex))
            mat[row, col] += val

    def build(self, lineno: int) -> FormalSymbol:
        comps = {k: (TrigPoly(self.rank, p), TrigPoly(self.rank, m))
                 for k, (p, m) in self.comps.items()}
        try:
            return FormalSymbol(self.order, self.rank, comps)
        except ValueError as exc:
            raise SpecError(str(exc), lineno) from exc


def parse_spec(text: str) -> SpecFile:
    spec = SpecFile()
    section = None
    sym: _SymbolBuilder | None = None
    dif: tuple[str, bool, dict] | None = None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()

        if line.startswith("["):
            if sym is not None or dif is not None:
                raise SpecError("unterminated block before new section", lineno)
            name = line.strip("[]").strip()
            if name not in _SECTIONS:
                raise SpecError(f"unknown section '{name}'", lineno)
            section = name
            continue
        if section is None:
            raise SpecError("content before any section header", lineno)

        if section == "symbols":
            if toks[0] == "symbol":
                if sym is not None:
                    raise SpecError("nested symbol block", lineno)
                if len(toks) != 6 or toks[2] != "rank" or toks[4] != "order":
                    raise SpecError("expected: symbol NAME rank R order M", lineno)
                if toks[1] in spec.symbols:
                    raise SpecError(f"duplicate symbol '{toks[1]}'", lineno)
                sym = _SymbolBuilder(toks[1], _int(toks[3], lineno), _int(toks[5], lineno), lineno)
            elif toks[0] == "c":
                if sym is None:
                    raise SpecError("component line outside a symbol block", lineno)
                sym.add_line(toks, lineno)
            elif toks[0] == "endsymbol":
                if sym is None:
                    raise SpecError("endsymbol without symbol", lineno)
                spec.symbols[sym.name] = sym.build(lineno)
                sym = None
            else:
                raise SpecError(f"unknown key '{toks[0]}' in [symbols]", lineno)

        elif section == "diffeos":
            if toks[0] == "diffeo":
                if dif is not None:
                    raise SpecError("nested diffeo block", lineno)
                if len(toks) not in (2, 3) or (len(toks) == 3 and toks[2] != "based"):
                    raise SpecError("expected: diffeo NAME [based]", lineno)
                if toks[1] in spec.diffeos:
                    raise SpecError(f"duplicate diffeo '{toks[1]}'", lineno)
                dif = (toks[1], len(toks) == 3, {})
            elif toks[0] == "u":
                if dif is None:
                    raise SpecError("displacement line outside a diffeo block", lineno)
                if len(toks) != 4:
                    raise SpecError("expected: u MODE RE IM", lineno)
                mode = _int(toks[1], lineno)
                dif[2][mode] = dif[2].get(mode, 0.0) + complex(
                    _number(toks[2], lineno), _number(toks[3], lineno))
            elif toks[0] == "enddiffeo":
                if dif is None:
                    raise SpecError("enddiffeo without diffeo", lineno)
                try:
                    spec.diffeos[dif[0]] = Diffeo.from_modes(dif[2], based=dif[1])
                except ValueError as exc:
                    raise SpecError(str(exc), lineno) from exc
                dif = None
            else:
                raise SpecError(f"unknown key '{toks[0]}' in [diffeos]", lineno)

        elif section == "weights":
            if toks[0] != "weight" or len(toks) not in (5, 6):
                raise SpecError("expected: weight NAME KIND ORDER THETA [SHIFT]", lineno)
            name, kind = toks[1], toks[2]
            order = _int(toks[3], lineno)
            theta = _number(toks[4], lineno)
            if name in spec.weights:
                raise SpecError(f"duplicate weight '{name}'", lineno)
            try:
                if kind == "laplace":
                    shift = _number(toks[5], lineno) if len(toks) == 6 else 1.0
                    if order != 2:
                        raise SpecError("laplace weights have order 2", lineno)
                    spec.weights[name] = laplace_weight(shift, theta, name)
                elif kind == "abs":
                    if order != 1:
                        raise SpecError("abs weights have order 1", lineno)
                    if len(toks) == 6:
                        raise SpecError("abs weights take no shift", lineno)
                    spec.weights[name] = abs_weight(theta, name)
                else:
                    raise SpecError(f"unknown weight kind '{kind}'", lineno)
            except ValueError as exc:
                raise SpecError(str(exc), lineno) from exc

        elif section == "jobs":
            if toks[0] != "job" or len(toks) < 3:
                raise SpecError("expected: job ID OP ARGS... [key=value...]", lineno)
            job_id, op = toks[1], toks[2]
            if op not in JOB_SIGNATURES:
                raise SpecError(f"unknown operation '{op}'", lineno)
            if any(j.job_id == job_id for j in spec.jobs):
                raise SpecError(f"duplicate job id '{job_id}'", lineno)
            args, knobs = [], {}
            for tok in toks[3:]:
                if "=" in tok:
                    key, val = tok.split("=", 1)
                    if key not in KNOWN_KNOBS:
                        raise SpecError(f"unknown knob '{key}'", lineno)
                    _number(val, lineno)
                    knobs[key] = val
                else:
                    if knobs:
                        raise SpecError("positional argument after knobs", lineno)
                    args.append(tok)
            sig = JOB_SIGNATURES[op]
            if len(args) != len(sig):
                raise SpecError(f"operation '{op}' takes {len(sig)} arguments, got {len(args)}", lineno)
            spec.jobs.append(Job(job_id, op, args, knobs, lineno))

    if sym is not None or dif is not None:
        raise SpecError("unterminated block at end of file", lineno)
    resolve_references(spec)
    return spec


def resolve_references(spec: SpecFile):
    """Every name a job mentions must exist, checked before anything runs."""
    for job in spec.jobs:
        for kind, arg in zip(JOB_SIGNATURES[job.op], job.args):
            pool = {"s": spec.symbols, "d": spec.diffeos, "w": spec.weights}.get(kind)
            if pool is not None and arg not in pool:
                kind_name = {"s": "symbol", "d": "diffeo", "w": "weight"}[kind]
                raise SpecError(f"job '{job.job_id}' references undefined {kind_name} '{arg}'",
                                job.line)


def load_spec(path: str) -> SpecFile:
    with open(path) as fh:
        return parse_spec(fh.read())
