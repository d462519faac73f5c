"""Command-line front end.

Exit codes: 0 when every check in the run passed, 1 when a check failed,
2 on input or evaluation errors.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time
import warnings
from pathlib import Path

from . import __version__
from .calculus import elsgolts_derivative, local_extremal
from .expr import EvaluationError, Expr, LevelOverflowError
from .noether import (
    HypothesisError,
    InvarianceError,
    build_noether_package,
    check_elsgolts_invariance_criterion,
    first_order_part,
    verify_lemma2,
    verify_master_identity,
)
from .parsing import ParseError, parse
from .problem import Problem, ProblemError, load_problem
from .steps import (
    History,
    integrate,
    monitor_difference,
    monitor_differential,
    normalize,
    solution_error,
    verify_closed_relation,
    fit_constants,
    write_trajectory,
)
from .symmetry import RegularityWarning, check_regularity, dode_invariance, lagrangian_invariance

SEED_ENV = "NOETHER_DODE_SEED"


class CommandError(Exception):
    pass


class Report:
    def __init__(self, command: str, path: str | None = None, data: bytes | None = None):
        self.lines = [f"noether-dode {__version__}", f"command: {command}"]
        if path is not None:
            self.lines.append(f"input: {path} sha256={hashlib.sha256(data).hexdigest()}")
        self.ok = True

    def add(self, key: str, value) -> None:
        self.lines.append(f"{key}: {value}")

    def check(self, label: str, passed: bool) -> None:
        self.ok = self.ok and bool(passed)
        self.add(label, "pass" if passed else "FAIL")

    def text(self) -> str:
        return "\n".join(self.lines + [f"status: {'pass' if self.ok else 'FAIL'}"]) + "\n"


def _load(path: str) -> tuple[Problem, bytes]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CommandError(f"cannot read {path}: {exc.strerror}") from exc
    prob = load_problem(path, data.decode("utf-8"))
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            prob.seed = int(env)
        except ValueError:
            raise CommandError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return prob, data


def _lagrangian(prob: Problem) -> Expr:
    if prob.lagrangian is None:
        raise CommandError(f"{prob.path}: [problem] has no lagrangian")
    return prob.lagrangian


def _equation(prob: Problem) -> Expr:
    if prob.equation is not None:
        return prob.equation
    return elsgolts_derivative(_lagrangian(prob))


def cmd_elsgolts(args) -> Report:
    prob, data = _load(args.file)
    rep = Report("elsgolts", args.file, data)
    rep.add("lagrangian", _lagrangian(prob))
    rep.add("elsgolts", f"{elsgolts_derivative(prob.lagrangian)} = 0")
    return rep


def cmd_extremal(args) -> Report:
    prob, data = _load(args.file)
    rep = Report("extremal", args.file, data)
    g = prob.generator(args.generator)
    rep.add("generator", g)
    E = local_extremal(_lagrangian(prob), g)
    rep.add("local_extremal", f"{E} = 0")
    if any(v.kind == "ddu" for v in E.variables):
        P, R = first_order_part(E, Expr.const(1))
        if not any(v.kind == "ddu" for v in R.variables):
            rep.add("first_order_form", f"Dbar({P}) + ({R}) = 0")
    return rep


def cmd_invariance(args) -> Report:
    prob, data = _load(args.file)
    rep = Report("invariance", args.file, data)
    g = prob.generator(args.generator)
    rep.add("generator", g)
    rep.add("target", args.target)
    regular, residual = check_regularity(g)
    rep.add("regularity", "ok" if regular else f"violated, residual {residual}")
    zt = prob.zero_test
    if args.target == "lagrangian":
        r = lagrangian_invariance(_lagrangian(prob), g, **zt)
        rep.add("criterion", r.criterion_value)
        verdict = r.verdict
        if r.divergence_witness is not None:
            verdict += f", A = {r.divergence_witness}"
        rep.add("verdict", verdict)
        for c in r.certificate:
            rep.add("certificate", c)
        rep.check("invariant", r.invariant)
    elif args.target == "equation":
        ok, cert = dode_invariance(_equation(prob), g, **zt)
        rep.add("equation", f"{_equation(prob)} = 0")
        rep.add("verdict", "invariant" if ok else "not invariant")
        rep.add("certificate", cert)
        rep.check("invariant", ok)
    else:
        ok, cert = check_elsgolts_invariance_criterion(_lagrangian(prob), g, **zt)
        rep.add("elsgolts", f"{elsgolts_derivative(prob.lagrangian)} = 0")
        rep.add("verdict", "elsgolts equation invariant" if ok else "elsgolts equation not invariant")
        rep.add("certificate", cert)
        rep.check("invariant", ok)
    return rep


def cmd_noether(args) -> Report:
    prob, data = _load(args.file)
    rep = Report("noether", args.file, data)
    g = prob.generator(args.generator)
    rep.add("generator", g)
    pkg = build_noether_package(_lagrangian(prob), g, absorb=args.absorb, **prob.zero_test)
    rep.add("verdict", pkg.report.verdict)
    for c in pkg.report.certificate:
        rep.add("invariance_certificate", c)
    rep.add("A", "none" if pkg.divergence_correction_A is None else pkg.divergence_correction_A)
    rep.add("integral", pkg.integral)
    lhs, rhs = pkg.difference_relation
    rep.add("relation", f"{lhs} = {rhs}")
    rep.add("relation_residual", pkg.relation_residual)
    rep.add("C", "none" if pkg.difference_correction_C is None else pkg.difference_correction_C)
    rep.add("restriction_free", str(pkg.restriction_free).lower())
    rep.add("local_extremal", f"{pkg.extremal} = 0")
    if any(v.kind == "ddu" for v in pkg.extremal.variables):
        P, R = first_order_part(pkg.extremal, Expr.const(1))
        if not any(v.kind == "ddu" for v in R.variables):
            rep.add("first_order_form", f"Dbar({P}) + ({R}) = 0")
    for note in pkg.notes:
        rep.add("note", note)
    rep.add("reduction", pkg.reduction)
    rep.add("certificate", pkg.certificate)
    rep.check("reduction_zero", pkg.certificate.zero)
    return rep


def cmd_identity(args) -> Report:
    prob, data = _load(args.file)
    rep = Report("identity", args.file, data)
    g = prob.generator(args.generator)
    rep.add("generator", g)
    rep.add("which", args.which)
    L = _lagrangian(prob)
    if args.which == "master":
        res, cert = verify_master_identity(L, g, **prob.zero_test)
    else:
        res, cert = verify_lemma2(L, g, **prob.zero_test)
    rep.add("residual", res)
    rep.add("certificate", cert)
    rep.check("identity", cert.zero)
    return rep


def cmd_simulate(args) -> Report:
    prob, data = _load(args.file)
    rep = Report("simulate", args.file, data)
    if prob.phi is None:
        raise CommandError(f"{prob.path}: [history] section is required for simulate")
    if prob.t_end is None:
        raise CommandError(f"{prob.path}: [simulate] t_end is required")
    m = args.steps if args.steps is not None else prob.steps_per_delay
    p = normalize(_equation(prob), prob.tau, prob.constant_values)
    rep.add("dode", p)
    rep.add("history", f"phi = {prob.phi}, t0 = {prob.t0}")
    rep.add("grid", f"tau = {prob.tau}, m = {m}, t_end = {prob.t_end}")
    start = time.perf_counter()
    traj = integrate(p, History(prob.phi, prob.t0, prob.constant_values), prob.t_end, m)
    elapsed = time.perf_counter() - start
    out = args.output or prob.output or Path(args.file).with_suffix(".traj").name
    write_trajectory(traj, out)
    rep.add("trajectory", f"{out} nodes={len(traj.u)}")
    if args.timing:
        rep.add("integration_seconds", f"{elapsed:.3f}")
    for mon in prob.monitors:
        consts = dict(mon.bindings)
        if mon.fit:
            target = (mon.lhs, mon.rhs) if mon.lhs is not None else mon.expr
            fitted = fit_constants(traj, target, mon.fit, consts)
            consts.update(fitted)
            rep.add(f"monitor {mon.name} fitted", ", ".join(f"{k}={v:.17g}" for k, v in fitted.items()))
        if mon.kind == "differential":
            rel = (mon.lhs, mon.rhs) if mon.lhs is not None else None
            r = monitor_differential(traj, mon.expr, rel, consts, mon.tolerance, mon.expect, mon.name)
        elif mon.kind == "difference":
            r = monitor_difference(traj, mon.expr, consts, mon.tolerance, mon.name)
        elif mon.kind == "relation":
            target = (mon.lhs, mon.rhs) if mon.lhs is not None else mon.expr
            r = verify_closed_relation(traj, target, consts, mon.tolerance, mon.name)
        else:
            r = solution_error(traj, mon.expr, consts, mon.tolerance, mon.name)
        rep.lines.append(r.to_text())
        rep.ok = rep.ok and r.passed
    return rep


def cmd_parse(args) -> Report:
    rep = Report("parse")
    consts = [c for c in (args.constants or "").replace(",", " ").split() if c]
    e = parse(args.expression, consts)
    rep.add("expr", e)
    rep.add("variables", " ".join(sorted(v.name for v in e.free_symbols)) or "none")
    return rep


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="noether-dode",
                                 description="Symmetries, first integrals and method-of-steps checks "
                                             "for delay Lagrangians.")
    ap.add_argument("--version", action="version", version=f"noether-dode {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_file(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("file", help="problem file")
        return p

    with_file("elsgolts", "print the Elsgolts equation").set_defaults(func=cmd_elsgolts)
    p = with_file("extremal", "print the local extremal equation of a generator")
    p.add_argument("--generator", "-g", required=True)
    p.set_defaults(func=cmd_extremal)
    p = with_file("invariance", "check invariance under a generator")
    p.add_argument("--generator", "-g", required=True)
    p.add_argument("--target", choices=("lagrangian", "equation", "elsgolts"), default="lagrangian")
    p.set_defaults(func=cmd_invariance)
    p = with_file("noether", "build the first integral and difference relation")
    p.add_argument("--generator", "-g", required=True)
    p.add_argument("--absorb", action="store_true",
                   help="absorb a divergent difference relation into the integral")
    p.set_defaults(func=cmd_noether)
    p = with_file("simulate", "integrate by the method of steps and run monitors")
    p.add_argument("--output", "-o", help="trajectory file (default: <problem>.traj)")
    p.add_argument("--steps", type=int, help="override steps_per_delay")
    p.add_argument("--timing", action="store_true", help="report integration time (not reproducible)")
    p.set_defaults(func=cmd_simulate)
    p = with_file("identity", "verify the master identity or the Elsgolts lemma identity")
    p.add_argument("--generator", "-g", required=True)
    p.add_argument("--which", choices=("master", "lemma2"), default="master")
    p.set_defaults(func=cmd_identity)
    p = sub.add_parser("parse", help="parse an expression and print its canonical form")
    p.add_argument("expression")
    p.add_argument("--constants", help="comma-separated constant names")
    p.set_defaults(func=cmd_parse)
    return ap


_USER_ERRORS = (CommandError, ProblemError, ParseError, HypothesisError, InvarianceError, EvaluationError,
                LevelOverflowError, ArithmeticError, ValueError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RegularityWarning)
            rep = args.func(args)
    except _USER_ERRORS as exc:
        print(f"noether-dode: error: {exc}", file=sys.stderr)
        return 2
    for w in caught:
        rep.add("warning", w.message)
    sys.stdout.write(rep.text())
    return 0 if rep.ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
