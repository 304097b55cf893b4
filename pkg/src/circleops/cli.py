"""Batch front-end: run residue/trace/cocycle/group checks from a spec file.

Each job appends one row to results.csv (fixed column order, repr-formatted
floats, no timestamps) so two runs of the same spec produce byte-identical
results; wall times go to the separate timings.csv.  A failing job writes
an error row and the run continues; the exit code is 0 only if every job
succeeded, 1 on job failures, 2 on a parse failure.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time

import numpy as np

from . import cocycle as ccl
from . import fiogroup, quantize, zetatrace
from .specfile import Job, SpecError, SpecFile, load_spec
from .symbols import parity_class, wodzicki_res
from .zetatrace import TraceOperand

COLUMNS = ("job_id", "op", "inputs_hash", "value_re", "value_im",
           "aux_re", "aux_im", "delta", "tag", "status", "message")


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _serialize_symbol(sym) -> str:
    lines = [f"order {sym.order} rank {sym.rank} vd {sym.valid_down}"]
    for (d, j) in sorted(sym.components):
        p, m = sym.components[(d, j)]
        for label, tp in (("+", p), ("-", m)):
            for mode in sorted(tp.coeffs):
                mat = tp.coeffs[mode]
                for r in range(sym.rank):
                    for c in range(sym.rank):
                        z = mat[r, c]
                        if z != 0:
                            lines.append(f"{d} {j} {label} {mode} {r} {c} {z.real!r} {z.imag!r}")
    return "\n".join(lines)


def _serialize_arg(kind: str, name: str, spec: SpecFile) -> str:
    if kind == "s":
        return _serialize_symbol(spec.symbols[name])
    if kind == "d":
        g = spec.diffeos[name]
        parts = [f"based {g.based}"]
        for mode in sorted(g.u.coeffs):
            z = g.u.coeffs[mode][0, 0]
            parts.append(f"{mode} {z.real!r} {z.imag!r}")
        return "\n".join(parts)
    if kind == "w":
        w = spec.weights[name]
        return f"{w.kind} {w.order} {w.offset!r} {w.shift!r}"
    return name


def _inputs_hash(job: Job, spec: SpecFile, knobs: dict) -> str:
    from .specfile import JOB_SIGNATURES

    payload = [job.op]
    for kind, arg in zip(JOB_SIGNATURES[job.op], job.args):
        payload.append(_serialize_arg(kind, arg, spec))
    payload.append(";".join(f"{k}={v!r}" for k, v in sorted(knobs.items())))
    return hashlib.sha256("\n#\n".join(payload).encode()).hexdigest()[:16]


def _run_job(job: Job, spec: SpecFile, defaults: dict) -> dict:
    knobs = dict(defaults)
    knobs.update({k: float(v) for k, v in job.knobs.items()})
    depth = int(knobs["depth"])
    modes = int(knobs["modes"])
    row = {"job_id": job.job_id, "op": job.op,
           "inputs_hash": _inputs_hash(job, spec, knobs),
           "value_re": "", "value_im": "", "aux_re": "", "aux_im": "",
           "delta": "", "tag": "", "status": "ok", "message": ""}

    def set_value(z, aux=None, delta=None, tag=None):
        z = complex(z)
        row["value_re"], row["value_im"] = _fmt(z.real), _fmt(z.imag)
        if aux is not None:
            aux = complex(aux)
            row["aux_re"], row["aux_im"] = _fmt(aux.real), _fmt(aux.imag)
        if delta is not None:
            row["delta"] = _fmt(float(delta))
        if tag is not None:
            row["tag"] = tag

    op, args = job.op, job.args
    if op == "res":
        set_value(wodzicki_res(spec.symbols[args[0]]))
    elif op == "parity":
        row["tag"] = parity_class(spec.symbols[args[0]])
    elif op == "trq":
        a, w = spec.symbols[args[0]], spec.weights[args[1]]
        lau = zetatrace.zeta_laurent(a, w)
        res = wodzicki_res(a)
        set_value(lau.c0, aux=lau.cm1, delta=abs(lau.cm1 * w.order - res), tag=w.name)
    elif op == "zeta":
        a, w = spec.symbols[args[0]], spec.weights[args[1]]
        s = complex(knobs.get("s_re", 3.0), knobs.get("s_im", 0.0))
        set_value(zetatrace.zeta_direct(a, w, s), tag=w.name)
    elif op == "kv":
        a = spec.symbols[args[0]]
        weights = (zetatrace.laplace_weight(1.0), zetatrace.laplace_weight(4.0))
        laus = [zetatrace.zeta_laurent(a, w) for w in weights]
        value = zetatrace.kontsevich_vishik_trace(a, weights)
        set_value(value, aux=laus[0].cm1, delta=abs(laus[0].c0 - laus[1].c0), tag="kv")
    elif op == "bracket":
        a, b, w = spec.symbols[args[0]], spec.symbols[args[1]], spec.weights[args[2]]
        lhs, rhs, delta = zetatrace.bracket_trace_check(a, b, w, depth=depth)
        set_value(lhs, aux=rhs, delta=delta, tag=w.name)
    elif op == "schwinger":
        grid = quantize.ModeGrid(modes, 0.5 if args[2] == "twisted" else 0.0, 1)
        eps = ccl.EpsilonSpec(args[2], grid)
        set_value(ccl.schwinger(spec.symbols[args[0]], spec.symbols[args[1]], eps),
                  tag=args[2])
    elif op == "cocycle":
        grid = quantize.ModeGrid(modes, 0.5 if args[3] == "twisted" else 0.0, 1)
        eps = ccl.EpsilonSpec(args[3], grid)
        rep = ccl.cocycle_identity_check(spec.symbols[args[0]], spec.symbols[args[1]],
                                         spec.symbols[args[2]], eps)
        set_value(rep.jacobi_defect, aux=rep.antisymmetry_defect, tag=args[3])
    elif op == "glres":
        g = spec.diffeos[args[0]]
        mats = [quantize.diffeo_matrix(g, quantize.ModeGrid(n, 0.0, 1))
                for n in (max(8, modes // 4), max(16, modes // 2), modes)]
        rep = quantize.gl_res_witness(mats)
        set_value(rep.hs_norms[-1], aux=rep.growth_rate or 0.0,
                  delta=rep.cauchy_defect, tag=rep.verdict)
    elif op == "decay":
        mat = quantize.realize(spec.symbols[args[0]], quantize.ModeGrid(modes, 0.0, 1))
        rep = quantize.smoothing_decay_profile(mat)
        set_value(rep.fitted_exponent if np.isfinite(rep.fitted_exponent) else -1.0,
                  aux=float(rep.band_support if rep.band_support is not None else -1),
                  tag="finite-support" if rep.finite_support else "decay")
    elif op == "heat":
        a, w = spec.symbols[args[0]], spec.weights[args[1]]
        rep = zetatrace.heat_trace_oracle(a, w)
        lau = zetatrace.zeta_laurent(a, w)
        set_value(rep.finite_part, aux=lau.c0,
                  delta=abs(rep.finite_part - lau.c0.real), tag=rep.verdict)
    elif op == "tracepower":
        a, w = spec.symbols[args[0]], spec.weights[args[2]]
        k = int(args[1])
        set_value(zetatrace.trace_power(a, k, w, depth=depth), tag=w.name)
    elif op == "roundtrip":
        set_value(spec.diffeos[args[0]].roundtrip_defect())
    else:
        raise ValueError(f"unhandled operation '{op}'")
    return row


def run(spec_path: str, out_dir: str, defaults: dict) -> int:
    try:
        spec = load_spec(spec_path)
    except SpecError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(out_dir, exist_ok=True)
    rows, timings, failed = [], [], 0
    for job in spec.jobs:
        t0 = time.perf_counter()
        try:
            row = _run_job(job, spec, defaults)
        except Exception as exc:                         # noqa: BLE001 - jobs isolate
            row = {c: "" for c in COLUMNS}
            row.update({"job_id": job.job_id, "op": job.op, "status": "error",
                        "message": f"{type(exc).__name__}: {exc}"})
            failed += 1
        timings.append((job.job_id, (time.perf_counter() - t0) * 1000.0))
        rows.append(row)

    header = (f"# circleops seed={int(defaults['seed'])} modes={int(defaults['modes'])} "
              f"depth={int(defaults['depth'])} quadrature={int(defaults['quadrature'])} "
              f"tolerance={defaults['tolerance']!r}\n")
    with open(os.path.join(out_dir, "results.csv"), "w") as fh:
        fh.write(header)
        fh.write(",".join(COLUMNS) + "\n")
        for row in rows:
            cells = [str(row[c]).replace(",", ";") for c in COLUMNS]
            fh.write(",".join(cells) + "\n")
    with open(os.path.join(out_dir, "timings.csv"), "w") as fh:
        fh.write("job_id,wall_ms\n")
        for job_id, ms in timings:
            fh.write(f"{job_id},{ms:.3f}\n")
    for row in rows:
        status = row["status"]
        print(f"{row['job_id']}: {status}" + (f" ({row['message']})" if status != "ok" else ""))
    return 1 if failed else 0


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="circleops",
                                 description="batch operator-calculus checks on the circle")
    ap.add_argument("--spec", required=True, help="path to the job spec file")
    ap.add_argument("--out", required=True, help="output directory for CSV reports")
    ap.add_argument("--modes", type=int, default=64, help="default grid cutoff N")
    ap.add_argument("--depth", type=int, default=8, help="default composition depth")
    ap.add_argument("--quadrature", type=int, default=0, help="quadrature override (0 = auto)")
    ap.add_argument("--tolerance", type=float, default=1e-8, help="default tolerance knob")
    ap.add_argument("--seed", type=int, default=0, help="seed recorded in the output")
    ns = ap.parse_args(argv)
    defaults = {"modes": ns.modes, "depth": ns.depth, "quadrature": ns.quadrature,
                "tolerance": ns.tolerance, "seed": ns.seed}
    return run(ns.spec, ns.out, defaults)


if __name__ == "__main__":
    sys.exit(main())
