"""Command-line front end.

Exit codes: 0 pass, 1 malformed input or validation error, 2 check failed
beyond tolerance, 3 I/O failure.  JSON reports go to --out or stdout, short
human-readable lines to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace

from . import io
from .field import spectrum_analysis
from .geodesic import GeodesicState, conserved_quantities, integrate
from .killing import best_constants, cubic_analysis, shift_test, system_residual
from .reconstruct import ConsistencyError, compute_vw, hessian_residual, integrate_u, residual_checks
from .search import minimize, problem_from_json, shift_experiment, verify
from .trilinear import (
    apply_symmetry, extend_and_classify, growth_recursion, moduli_relations, residual,
)

EXIT_OK, EXIT_INVALID, EXIT_FAILED, EXIT_IO = 0, 1, 2, 3


@dataclass
class CommandOutcome:
    exit_code: int
    report: dict


def _pair(text: str, n: int, name: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ValueError(f"--{name} expects {n} comma-separated numbers") from None
    if len(vals) != n:
        raise ValueError(f"--{name} expects {n} comma-separated numbers")
    return vals


def _status(ok: bool) -> int:
    return EXIT_OK if ok else EXIT_FAILED


# -- subcommands -------------------------------------------------------------------


def cmd_check_killing(a) -> CommandOutcome:
    f = io.load_field(a.field)
    inputs = [a.field]
    if a.fit:
        k, _ = best_constants(f)
    elif a.constants:
        k = io.constants_from_json(io.read_json(a.constants))
        inputs.append(a.constants)
    else:
        raise ValueError("check-killing needs --constants or --fit")
    rep = system_residual(f, k)
    ok = rep.norm <= a.tol
    report = {"constants": k.to_json(), "residual": rep.to_json(a.per_equation), "tol": a.tol, "pass": ok}
    print(f"residual norm {rep.norm:.3e} (tol {a.tol:.1e}): {'pass' if ok else 'FAIL'}", file=sys.stderr)
    return CommandOutcome(_status(ok), io.envelope(report, inputs))


def cmd_check_cubic(a) -> CommandOutcome:
    f = io.load_field(a.field)
    sp = spectrum_analysis(f)
    nodes = f.dual.nodes(sp.nodes)
    c = _pair(a.c, 2, "c") if a.c else None
    rep = cubic_analysis(nodes, c)
    ok = rep.satisfied if c is not None else bool(rep.admissible_directions)
    report = {
        "admissibleDirections": [list(map(float, d)) for d in rep.admissible_directions],
        "threeLines": None if rep.three_lines is None else list(rep.three_lines),
        "satisfied": rep.satisfied,
        "maxRelative": rep.max_relative,
        "pass": ok,
    }
    print(f"cubic constraint: {'admissible' if ok else 'not admissible'}", file=sys.stderr)
    return CommandOutcome(_status(ok), io.envelope(report, [a.field]))


def cmd_reconstruct(a) -> CommandOutcome:
    f = io.load_field(a.field)
    k = io.constants_from_json(io.read_json(a.constants))
    vw = compute_vw(f, k)
    checks = residual_checks(f, k, vw)
    try:
        u = integrate_u(f, vw, a.tol)
    except ConsistencyError as e:
        report = {"checks": checks, "error": str(e), "worstNode": list(e.node), "pass": False}
        print(str(e), file=sys.stderr)
        return CommandOutcome(EXIT_FAILED, io.envelope(report, [a.field, a.constants]))
    hres = hessian_residual(f, k, u)
    if a.potential_out:
        io.write_json(io.potential_to_json(u), a.potential_out)
    ok = checks["crNorm"] <= 1e-12 and checks["consistencyNorm"] <= a.tol and hres <= a.hessian_tol
    report = {"checks": checks, "hessianResidual": hres, "potential": io.potential_to_json(u), "pass": ok}
    print(f"cr {checks['crNorm']:.2e} consistency {checks['consistencyNorm']:.2e} hessian {hres:.2e}", file=sys.stderr)
    return CommandOutcome(_status(ok), io.envelope(report, [a.field, a.constants]))


def cmd_geodesic(a) -> CommandOutcome:
    f = io.load_field(a.field)
    init = GeodesicState(*_pair(a.init, 4, "init"))
    traj = integrate(f, init, a.T, a.h)
    which = [w for w in a.check.split(",") if w]
    cq = conserved_quantities(f, traj, which, check=not a.no_check)
    if a.csv:
        io.write_trajectory_csv(traj, a.csv)
    drifts = {k: v["maxDrift"] for k, v in cq.items()}
    ok = all(v <= a.tol for v in drifts.values())
    report = {"steps": len(traj.t) - 1, "final": traj.states[-1].tolist(), "maxDrift": drifts, "tol": a.tol, "pass": ok}
    print("drifts " + ", ".join(f"{k}={v:.2e}" for k, v in drifts.items()), file=sys.stderr)
    return CommandOutcome(_status(ok), io.envelope(report, [a.field]))


def cmd_trilinear(a) -> CommandOutcome:
    action = a.action
    inputs = []
    seq = None
    if action != "growth":
        if not a.seq:
            raise ValueError("--seq is required for this action")
        seq = io.load_sequence(a.seq)
        inputs.append(a.seq)
    if action == "residual":
        r = residual(seq)
        ok = r.max_abs <= a.tol
        report = {"residual": r.to_json(), "pass": ok}
    elif action.startswith("symmetry="):
        out = apply_symmetry(seq, int(action.split("=", 1)[1]))
        before, after = residual(seq).max_abs, residual(out).max_abs
        ok = abs(before - after) <= 1e-15 * max(1.0, before)
        report = {"sequence": io.sequence_to_json(out), "residualBefore": before, "residualAfter": after, "pass": ok}
    elif action == "moduli":
        rel = moduli_relations(seq, tol=a.tol, precondition_tol=a.precondition_tol)
        ok = not rel["violations"]
        report = {"violations": [list(v) for v in rel["violations"]], "maxAbs": rel["maxAbs"], "pass": ok}
    elif action.startswith("extend="):
        ext = extend_and_classify(seq, int(action.split("=", 1)[1]), tol=a.tol)
        ok = ext.status != "Overdetermined-Inconsistent"
        report = {"extension": ext.to_json(), "pass": ok}
    elif action == "growth":
        g = growth_recursion(a.r0, a.phase, a.steps)
        ok = g.ratio_bound_ok and g.product_bound_ok
        report = {"growth": g.to_json(), "pass": ok}
    else:
        raise ValueError(f"unknown action {action!r}")
    print(f"trilinear {action}: {'pass' if ok else 'FAIL'}", file=sys.stderr)
    return CommandOutcome(_status(ok), io.envelope(report, inputs))


def _search_report(res) -> dict:
    rep = res.to_json()
    rep["verificationDiscrepancy"] = verify(res)
    return rep


def cmd_search(a) -> CommandOutcome:
    prob = problem_from_json(io.read_json(a.problem))
    if a.seed is not None:
        prob = replace(prob, seed=a.seed)
    res = minimize(prob)
    rep = _search_report(res)
    ok = rep["verificationDiscrepancy"] <= 1e-12
    print(f"search residual {res.residual_norm:.3e} ({res.classification}, observational)", file=sys.stderr)
    return CommandOutcome(_status(ok), io.envelope(rep, [a.problem]))


def cmd_shift(a) -> CommandOutcome:
    prob = problem_from_json(io.read_json(a.problem))
    if a.seed is not None:
        prob = replace(prob, seed=a.seed)
    out = shift_experiment(prob, a.lam0)
    res = out["result"]
    shifted = shift_test(res.field, a.lam0, res.constants)
    rep = {
        "jointResidual": out["jointResidual"],
        "classification": out["classification"],
        "shiftTest": shifted.__dict__,
        "search": _search_report(res),
        "observational": True,
    }
    print(f"joint residual {out['jointResidual']:.3e} ({out['classification']}, observational)", file=sys.stderr)
    return CommandOutcome(EXIT_OK, io.envelope(rep, [a.problem]))


# -- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="torus-killing", description=__doc__.splitlines()[0])
    p.add_argument("--json", action="store_true", help="also print the JSON report to stdout")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, report_flag="--out", **kw):
        sp = sub.add_parser(name, **kw)
        sp.set_defaults(fn=fn)
        sp.add_argument(report_flag, dest="report_out", help="write the JSON report here instead of stdout")
        return sp

    sp = add("check-killing", cmd_check_killing, help="residual of the quadratic system")
    sp.add_argument("--field", required=True)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--constants")
    g.add_argument("--fit", action="store_true", help="use best-fitting constants")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--per-equation", action="store_true")

    sp = add("check-cubic", cmd_check_cubic, help="cubic spectrum constraint and line triple")
    sp.add_argument("--field", required=True)
    sp.add_argument("--c", help="c1,c2")

    sp = add("reconstruct", cmd_reconstruct, report_flag="--report", help="v, w, u and the second-order system")
    sp.add_argument("--field", required=True)
    sp.add_argument("--constants", required=True)
    sp.add_argument("--out", dest="potential_out", help="write the potential JSON here")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--hessian-tol", type=float, default=1e-9)

    sp = add("geodesic", cmd_geodesic, help="RK4 geodesics and first integrals")
    sp.add_argument("--field", required=True)
    sp.add_argument("--init", required=True, help="x,y,vx,vy")
    sp.add_argument("--T", type=float, required=True)
    sp.add_argument("--h", type=float, required=True)
    sp.add_argument("--check", default="energy")
    sp.add_argument("--no-check", action="store_true", help="allow Clairaut for non-x-axis spectra")
    sp.add_argument("--csv", help="trajectory CSV path")
    sp.add_argument("--tol", type=float, default=1e-8)

    sp = add("trilinear", cmd_trilinear, help="trilinear sequence tools")
    sp.add_argument("--seq")
    sp.add_argument("--action", required=True, help="residual | symmetry=K | moduli | extend=N | growth")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--precondition-tol", type=float, default=1e-12)
    sp.add_argument("--r0", type=float, default=0.5)
    sp.add_argument("--phase", type=float, default=0.0)
    sp.add_argument("--steps", type=int, default=100)

    for name, fn, text in (("search", cmd_search, "residual minimization (observational)"),
                           ("shift", cmd_shift, "minimize, shift the zero mode, re-solve (observational)")):
        sp = add(name, fn, help=text)
        sp.add_argument("--problem", required=True)
        sp.add_argument("--seed", type=int)
        if name == "shift":
            sp.add_argument("--lam0", type=float, required=True)
    return p


def run(argv=None) -> CommandOutcome:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return CommandOutcome(EXIT_INVALID if e.code else EXIT_OK, {"error": "bad arguments"})
    try:
        out = a.fn(a)
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return CommandOutcome(EXIT_IO, {"error": str(e)})
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return CommandOutcome(EXIT_INVALID, {"error": str(e)})
    text = io.write_json(out.report, None)
    try:
        if a.report_out:
            io.write_json(out.report, a.report_out)
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return CommandOutcome(EXIT_IO, {"error": str(e)})
    if not a.report_out or a.json:
        print(text)
    return out


def main(argv=None) -> int:
    return run(argv).exit_code


if __name__ == "__main__":
    sys.exit(main())
