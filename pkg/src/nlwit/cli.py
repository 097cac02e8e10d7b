"""Command-line interface: ``nlwit <command> [options]``.

Exit codes
----------
0  nothing detected / self-test passed / certificate valid
1  entanglement detected / self-test mismatch / containment violation / invalid certificate
2  input error (unreadable or malformed file, violated state invariant, bad flag)

CSV columns
-----------
``sweep-werner``::

    p,linear,F1,F2,F2_printed,f1_lhs,f1_rhs,f2_lhs,f2_rhs,cov_opt,det_linear,det_F1,det_F2

``linear`` is ``Tr(W rho_p)`` for ``W = (|phi+><phi+|)^{T_B}``; ``F1`` uses the partner
``(|01>+|10>)/sqrt(2)``; ``F2`` is the machine-built Bell-basis witness and
``F2_printed`` the hard-coded published form.  ``f1_*``/``f2_*`` are the two
detection inequalities ``lhs < rhs``; ``cov_opt`` is the best covariance
functional found by ``optimize_q`` for ``P = |phi+><phi+|``.

``benchmark``::

    samples,seed,dA,dB,witness,npt,linear,F2,F1,covariance,violations

Floats are written with 17 significant digits, so identical seeds give
byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import matcore, serialization
from .covariance import (
    DEFAULT_BUDGET,
    DEFAULT_REFINE,
    default_basis,
    default_target,
    optimize_q,
    rank_one_optimum,
    validate_certificate,
)
from .matcore import PSD_TOL
from .nonlinear import (
    BELL_BASIS_FORM,
    BELL_PAIR_FORM,
    DETECT_MARGIN,
    compare_forms,
    detect_condition_f1,
    detect_condition_f2,
    format_form,
    improve,
    improve_f1,
    improve_f2,
    optimal_f1_partner,
    pauli_form,
)
from .states import (
    DensityOperator,
    PureState,
    bell_states,
    maximally_mixed,
    random_density,
    random_separable,
    singlet,
    werner,
)
from .witness import evaluate, format_pauli, pauli_decompose, witness_from_npt, witness_from_phi

DEFAULT_SEED = 0
DEFAULT_SAMPLES = 10_000

SWEEP_COLUMNS = (
    "p", "linear", "F1", "F2", "F2_printed", "f1_lhs", "f1_rhs",
    "f2_lhs", "f2_rhs", "cov_opt", "det_linear", "det_F1", "det_F2",
)
BENCH_COLUMNS = (
    "samples", "seed", "dA", "dB", "witness", "npt", "linear", "F2", "F1", "covariance", "violations",
)


class InputError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_state(path) -> DensityOperator:
    if not path:
        raise InputError("--state is required")
    try:
        return serialization.state_from_json(serialization.load_json(path))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _witness_text(W, dims) -> str:
    if all(d == 2 for d in dims):
        return format_pauli(pauli_decompose(W))
    return np.array2string(np.asarray(W), precision=6, suppress_small=True)


# detect


def detect_report(rho: DensityOperator, tol: float = DETECT_MARGIN, seed: int = DEFAULT_SEED,
                  budget: int = DEFAULT_BUDGET, refine: int = DEFAULT_REFINE) -> dict:
    """Run every implemented criterion on a bipartite state."""
    rho.pair
    lam = matcore.min_eig(rho.pt)[0]
    rep = {"dims": list(rho.dims), "ppt": bool(lam >= -PSD_TOL), "min_pt_eigenvalue": lam}
    detected = False
    if not rep["ppt"]:
        wit, lam, phi = witness_from_npt(rho, PSD_TOL)
        psi = optimal_f1_partner(rho, phi)
        F1 = improve(wit, "F1", psi=psi)(rho)
        F2 = improve(wit, "F2")(rho)
        c1 = detect_condition_f1(rho, phi)
        c2 = detect_condition_f2(rho, phi)
        cert, cov = optimize_q(rho, default_target(rho), seed=seed, budget=budget, refine=refine)
        rep.update(
            linear=evaluate(wit, rho),
            F1=F1,
            F2=F2,
            condition_f1={"detected": c1[1] < c1[2] - tol, "lhs": c1[1], "rhs": c1[2]},
            condition_f2={"detected": c2[1] < c2[2] - tol, "lhs": c2[1], "rhs": c2[2]},
            covariance=cov,
            witness=_witness_text(wit.W, rho.dims),
        )
        detected = min(rep["linear"], F1, F2, cov) < -tol or c1[1] < c1[2] - tol or c2[1] < c2[2] - tol
    else:
        # no partial-transpose witness; the covariance functional is nonnegative here
        cert, cov = optimize_q(rho, default_target(rho), seed=seed, budget=budget, refine=refine)
        rep["covariance"] = cov
        detected = cov < -tol
    rep["verdict"] = "entangled" if detected else "separable-consistent"
    return rep


def _detect_text(rep: dict) -> str:
    lines = [f"dims: {rep['dims']}", f"PPT: {rep['ppt']} (min eigenvalue of partial transpose {rep['min_pt_eigenvalue']:.12g})"]
    if not rep["ppt"]:
        lines += [
            "linear witness:", "  " + rep["witness"],
            f"linear value: {rep['linear']:.12g}",
            f"F1 value: {rep['F1']:.12g}",
            f"F2 value: {rep['F2']:.12g}",
        ]
        for k in ("condition_f1", "condition_f2"):
            c = rep[k]
            lines.append(f"{k}: lhs {c['lhs']:.12g} < rhs {c['rhs']:.12g} -> {c['detected']}")
    lines.append(f"covariance optimum: {rep['covariance']:.12g}")
    lines.append(f"verdict: {rep['verdict']}")
    return "\n".join(lines) + "\n"


def cmd_detect(args) -> int:
    rho = _load_state(args.state)
    try:
        rep = detect_report(rho, args.tol, args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.format == "json":
        text = json.dumps(_jsonable(rep), indent=2) + "\n"
    elif args.format == "csv":
        flat = {k: v for k, v in rep.items() if not isinstance(v, (dict, list, str))}
        for k in ("condition_f1", "condition_f2"):
            if k in rep:
                flat[k + "_lhs"], flat[k + "_rhs"] = rep[k]["lhs"], rep[k]["rhs"]
        flat["verdict"] = rep["verdict"]
        text = _csv(tuple(flat), [flat])
    else:
        text = _detect_text(rep)
    _emit(text, args.out)
    return 1 if rep["verdict"] == "entangled" else 0


# sweep-werner


def default_grid() -> list[float]:
    """``0, 0.05, ..., 1`` plus the threshold ``1/3``."""
    return sorted([k / 20 for k in range(21)] + [1 / 3])


def werner_row(p: float, tol: float = DETECT_MARGIN, seed: int = DEFAULT_SEED) -> dict:
    phi_plus, _, psi_plus, _ = bell_states()
    rho = werner(p)
    F1 = improve_f1(phi_plus, psi_plus)
    F2 = improve_f2(phi_plus, bell_states())
    c1 = detect_condition_f1(rho, phi_plus)
    c2 = detect_condition_f2(rho, phi_plus)
    _, cov = optimize_q(rho, phi_plus.projector(), seed=seed)
    lin = evaluate(F2.linear, rho)
    return {
        "p": p, "linear": lin, "F1": F1(rho), "F2": F2(rho), "F2_printed": BELL_BASIS_FORM.evaluate(rho),
        "f1_lhs": c1[1], "f1_rhs": c1[2], "f2_lhs": c2[1], "f2_rhs": c2[2], "cov_opt": cov,
        "det_linear": lin < -tol, "det_F1": c1[1] < c1[2] - tol, "det_F2": c2[1] < c2[2] - tol,
    }


def cmd_sweep_werner(args) -> int:
    grid = default_grid() if args.grid is None else args.grid
    if any(not 0 <= p <= 1 for p in grid):
        raise InputError("grid values must lie in [0, 1]")
    rows = [werner_row(p, args.tol, args.seed) for p in grid]
    if args.format == "json":
        text = json.dumps(_jsonable(rows), indent=2) + "\n"
    elif args.format == "text":
        text = "\n".join(" ".join(f"{c}={_fmt(r[c])}" for c in SWEEP_COLUMNS) for r in rows) + "\n"
    else:
        text = _csv(SWEEP_COLUMNS, rows)
    _emit(text, args.out)
    return 0


# example


def example_forms(name: str):
    """``(machine-built form, published form)`` for ``eq12`` or ``eq13``."""
    phi_plus, _, psi_plus, _ = bell_states()
    if name == "eq12":
        return pauli_form(improve_f1(phi_plus, psi_plus)), BELL_PAIR_FORM
    if name == "eq13":
        return pauli_form(improve_f2(phi_plus, bell_states())), BELL_BASIS_FORM
    raise ValueError(f"unknown example {name!r}")


def cmd_example(args) -> int:
    built, ref = example_forms(args.name)
    cmp = compare_forms(built, ref, tol=args.tol if args.tol_set else 1e-12)
    if args.format == "json":
        text = json.dumps(_jsonable(cmp), indent=2) + "\n"
    else:
        lines = ["machine-built:", format_form(built), "published:", format_form(ref),
                 f"max coefficient error: {cmp['max_error']:.3g}"]
        for kind, words, b, r in cmp["mismatches"]:
            lines.append(f"mismatch {kind} {words}: built {b:.12g}, published {r:.12g}")
        lines.append("MATCH" if cmp["match"] else "MISMATCH")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 0 if cmp["match"] else 1


# benchmark


def _fixed_phi(dims) -> PureState:
    """``sum_{i<m} |ii>/sqrt(m)`` with ``m = min(dA, dB)``."""
    dA, dB = dims
    m = min(dA, dB)
    v = np.zeros(dA * dB, dtype=complex)
    for i in range(m):
        v[i * dB + i] = 1
    return PureState(v / np.sqrt(m), dims)


def classify(rho: DensityOperator, phi: PureState | None, tol: float = DETECT_MARGIN) -> dict:
    """Detection flags for one state; ``phi=None`` uses the state's own NPT eigenvector."""
    lam, vec = matcore.min_eig(rho.pt)
    npt = lam < -PSD_TOL
    if phi is None:
        phi = PureState.normalized(vec, rho.pair)
    lin = evaluate(witness_from_phi(phi), rho)
    c1 = detect_condition_f1(rho, phi)
    c2 = detect_condition_f2(rho, phi)
    cov = rank_one_optimum(rho, phi.projector())
    return {
        "npt": bool(npt), "linear": bool(lin < -tol), "F2": bool(c2[1] < c2[2] - tol),
        "F1": bool(c1[1] < c1[2] - tol), "covariance": bool(cov < -tol), "linear_value": lin,
    }


def containment_violations(flags: dict) -> list[str]:
    """Broken links of ``linear, covariance <= F2 <= F1 <= NPT``."""
    chain = [("linear", "F2"), ("covariance", "F2"), ("F2", "F1"), ("F1", "npt")]
    return [f"{a} without {b}" for a, b in chain if flags[a] and not flags[b]]


def _bench_chunk(args):
    seed, start, stop, dims, mode, tol = args
    counts = dict.fromkeys(("npt", "linear", "F2", "F1", "covariance"), 0)
    bad = []
    phi = _fixed_phi(dims) if mode == "fixed" else None
    for k in range(start, stop):
        rho = random_density(dims, np.random.default_rng([seed, k]))
        flags = classify(rho, phi, tol)
        for c in counts:
            counts[c] += flags[c]
        v = containment_violations(flags)
        if v:
            bad.append((k, v))
    return counts, bad


def run_benchmark(samples: int, dims=(2, 2), seed: int = DEFAULT_SEED, witness: str = "fixed",
                  tol: float = DETECT_MARGIN, jobs: int = 1) -> dict:
    """Count detections over Hilbert-Schmidt random states.

    Sample ``k`` is drawn from ``default_rng([seed, k])``, so the result does
    not depend on ``jobs``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    jobs = max(1, min(jobs, samples))
    edges = np.linspace(0, samples, jobs + 1).astype(int)
    tasks = [(seed, int(a), int(b), tuple(dims), witness, tol) for a, b in zip(edges[:-1], edges[1:])]
    if jobs == 1:
        parts = [_bench_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(jobs) as ex:
            parts = list(ex.map(_bench_chunk, tasks))
    counts = dict.fromkeys(("npt", "linear", "F2", "F1", "covariance"), 0)
    bad = []
    for c, b in parts:
        for key in counts:
            counts[key] += c[key]
        bad.extend(b)
    return {"samples": samples, "seed": seed, "dA": dims[0], "dB": dims[1], "witness": witness,
            **counts, "violations": len(bad), "offending": bad}


def cmd_benchmark(args) -> int:
    if len(args.dims) != 2:
        raise InputError("--dims takes two integers")
    try:
        res = run_benchmark(args.samples, tuple(args.dims), args.seed, args.witness, args.tol, args.jobs)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.format == "json":
        text = json.dumps(_jsonable(res), indent=2) + "\n"
    elif args.format == "text":
        text = "\n".join(f"{c}: {_fmt(res[c])}" for c in BENCH_COLUMNS) + "\n"
    else:
        text = _csv(BENCH_COLUMNS, [res])
    _emit(text, args.out)
    for k, why in res["offending"]:
        print(f"containment violation: seed=[{args.seed}, {k}]: {', '.join(why)}", file=sys.stderr)
    return 1 if res["violations"] else 0


# validate-cert and state


def cmd_validate_cert(args) -> int:
    try:
        obj = serialization.load_json(args.cert)
        cert = serialization.certificate_from_json(obj, validate=False)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    problems = validate_certificate(cert, default_basis(tuple(obj["dims"])))
    _emit(("valid\n" if not problems else "invalid: " + "; ".join(problems) + "\n"), args.out)
    return 1 if problems else 0


STATE_KINDS = ("singlet", "werner", "mixed", "random", "separable")


def cmd_state(args) -> int:
    dims = tuple(args.dims)
    if args.kind == "singlet":
        rho = singlet()
    elif args.kind == "werner":
        try:
            rho = werner(args.p)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    elif args.kind == "mixed":
        rho = maximally_mixed(dims)
    elif args.kind == "random":
        rho = random_density(dims, args.seed)
    else:
        rho = random_separable(dims, None, args.seed)
    _emit(serialization.dump_json(serialization.state_to_json(rho)) + "\n", args.out)
    return 0


# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED})")
    common.add_argument("--tol", type=float, default=None,
                        help=f"detection margin for strict inequalities (default {DETECT_MARGIN:g})")
    common.add_argument("--out", help="write output to this path instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "text"), default=None)

    p = argparse.ArgumentParser(prog="nlwit", description="Linear and nonlinear entanglement witnesses.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", parents=[common], help="run all criteria on a state file")
    d.add_argument("--state", help="state JSON file")
    d.set_defaults(func=cmd_detect, default_format="text")

    s = sub.add_parser("sweep-werner", parents=[common], help="werner-family table")
    s.add_argument("--grid", type=lambda t: [float(x) for x in t.split(",")],
                   help="comma-separated p values (default 0,0.05,...,1 plus 1/3)")
    s.set_defaults(func=cmd_sweep_werner, default_format="csv")

    e = sub.add_parser("example", parents=[common], help="rebuild a published two-qubit form and compare")
    e.add_argument("name", choices=("eq12", "eq13"))
    e.set_defaults(func=cmd_example, default_format="text")

    b = sub.add_parser("benchmark", parents=[common], help="detection counts over random states")
    b.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    b.add_argument("--dims", type=int, nargs="+", default=[2, 2])
    b.add_argument("--witness", choices=("fixed", "npt"), default="fixed",
                   help="fixed: maximally entangled phi; npt: each state's own eigenvector")
    b.add_argument("--jobs", type=int, default=1, help="worker processes")
    b.set_defaults(func=cmd_benchmark, default_format="csv")

    v = sub.add_parser("validate-cert", parents=[common], help="re-check a stored certificate")
    v.add_argument("--cert", required=True, help="certificate JSON file")
    v.set_defaults(func=cmd_validate_cert, default_format="text")

    st = sub.add_parser("state", parents=[common], help="write a state JSON file")
    st.add_argument("kind", choices=STATE_KINDS)
    st.add_argument("--p", type=float, default=1.0, help="werner weight")
    st.add_argument("--dims", type=int, nargs="+", default=[2, 2])
    st.set_defaults(func=cmd_state, default_format="json")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.tol_set = args.tol is not None
    if args.tol is None:
        args.tol = DETECT_MARGIN
    if args.format is None:
        args.format = args.default_format
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
