"""Problem files: a small sectioned ``key = value`` format.

    # comment
    [problem]
    tau = 1
    lagrangian = u*u_m - du*du_m
    constants = A, B

    [generator X1]
    xi = 0
    eta = cos(t)

    [generator X13]
    combine = X1 + X3

    [constants]
    A = 2*cos(tau)

    [history]
    phi = sin(t)
    t0 = 0

    [simulate]
    t_end = 10
    steps_per_delay = 100
    seed = 0

    [monitor integral]
    kind = differential
    expr = cos(t)*(du_p + du_m) + sin(t)*(u_m + u_p)
    expect = 2*cos(tau)

    [tolerances]
    symbolic = 1e-9
    points = 50
    monitor = 1e-6

Expression values use the expression grammar verbatim.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .expr import EvaluationError, Expr, eval_numeric
from .parsing import RESERVED, ParseError, parse
from .symmetry import Generator

SECTIONS = ("problem", "generator", "constants", "history", "simulate", "monitor", "tolerances")
NAMED = ("generator", "monitor")
MONITOR_KINDS = ("differential", "difference", "relation", "solution")
_MONITOR_KEYS = {"kind", "expr", "lhs", "rhs", "expect", "tolerance", "fit"}
_HEADER = re.compile(r"\[\s*([A-Za-z_]+)(?:\s+([A-Za-z_][A-Za-z_0-9+]*))?\s*\]$")
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*$")

DEFAULT_TOLERANCES = {"symbolic": 1e-9, "points": 50, "monitor": 1e-6}


class ProblemError(ValueError):
    def __init__(self, message: str, section: str | None = None, line: int | None = None, path: str = ""):
        self.section = section
        self.line = line
        where = path or "<problem>"
        if line is not None:
            where += f":{line}"
        if section:
            where += f": [{section}]"
        super().__init__(f"{where}: {message}")


@dataclass
class _Entry:
    value: str
    line: int


@dataclass
class _Section:
    kind: str
    name: str | None
    line: int
    entries: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        return f"{self.kind} {self.name}" if self.name else self.kind


@dataclass
class Monitor:
    name: str
    kind: str
    expr: Expr | None
    lhs: Expr | None
    rhs: Expr | None
    expect: float | None
    tolerance: float
    bindings: dict
    fit: list


@dataclass
class Problem:
    path: str
    tau: Fraction
    lagrangian: Expr | None
    equation: Expr | None
    constants: tuple
    constant_values: dict
    generators: dict
    phi: Expr | None = None
    t0: Fraction = Fraction(0)
    t_end: Fraction | None = None
    steps_per_delay: int = 100
    seed: int = 0
    output: str | None = None
    monitors: list = field(default_factory=list)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def generator(self, name: str) -> Generator:
        try:
            return self.generators[name]
        except KeyError:
            known = ", ".join(self.generators) or "none"
            raise ProblemError(f"unknown generator {name!r} (defined: {known})", path=self.path) from None

    @property
    def zero_test(self) -> dict:
        return dict(n_points=int(self.tolerances["points"]), tol=float(self.tolerances["symbolic"]),
                    seed=self.seed)


def _read_sections(text: str, path: str) -> list[_Section]:
    sections: list[_Section] = []
    current = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            m = _HEADER.match(line)
            if not m:
                raise ProblemError(f"malformed section header {raw.strip()!r}", line=n, path=path)
            kind, name = m.group(1), m.group(2)
            if kind not in SECTIONS:
                raise ProblemError(f"unknown section {kind!r}; expected one of {', '.join(SECTIONS)}",
                                   kind, n, path)
            if (kind in NAMED) != (name is not None):
                need = "requires a name" if kind in NAMED else "takes no name"
                raise ProblemError(f"section {kind} {need}", kind, n, path)
            current = _Section(kind, name, n)
            sections.append(current)
            continue
        if current is None:
            raise ProblemError("key outside of any section", line=n, path=path)
        if "=" not in line:
            raise ProblemError(f"expected 'key = value', got {line!r}", current.label, n, path)
        key, value = (s.strip() for s in line.split("=", 1))
        if not _NAME.match(key):
            raise ProblemError(f"invalid key {key!r}", current.label, n, path)
        if key in current.entries:
            raise ProblemError(f"duplicate key {key!r}", current.label, n, path)
        current.entries[key] = _Entry(value, n)
    return sections


class _Ctx:
    def __init__(self, path):
        self.path = path

    def expr(self, sec: _Section, key: str, constants, required=False) -> Expr | None:
        ent = sec.entries.get(key)
        if ent is None:
            if required:
                raise ProblemError(f"missing key {key!r}", sec.label, sec.line, self.path)
            return None
        try:
            return parse(ent.value, constants)
        except ParseError as exc:
            raise ProblemError(f"{key}: {exc}", sec.label, ent.line, self.path) from exc

    def number(self, sec: _Section, key: str, default=None, constants=(), values=None):
        ent = sec.entries.get(key)
        if ent is None:
            return default
        e = self.expr(sec, key, constants)
        if e.is_rational:
            return e.rational_value()
        try:
            return eval_numeric(e, values or {})
        except EvaluationError as exc:
            raise ProblemError(f"{key}: {exc}", sec.label, ent.line, self.path) from exc

    def unknown(self, sec: _Section, allowed):
        for k, ent in sec.entries.items():
            if k not in allowed:
                raise ProblemError(f"unknown key {k!r}; allowed: {', '.join(sorted(allowed))}",
                                   sec.label, ent.line, self.path)


def _names(value: str) -> list[str]:
    return [s.strip() for s in value.replace(",", " ").split() if s.strip()]


def load_problem(path: str, text: str | None = None) -> Problem:
    if text is None:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_problem(text, path)


def parse_problem(text: str, path: str = "<problem>") -> Problem:
    sections = _read_sections(text, path)
    ctx = _Ctx(path)
    by_kind: dict[str, list[_Section]] = {}
    for s in sections:
        by_kind.setdefault(s.kind, []).append(s)
    for single in ("problem", "constants", "history", "simulate", "tolerances"):
        if len(by_kind.get(single, [])) > 1:
            dup = by_kind[single][1]
            raise ProblemError(f"section {single} appears more than once", single, dup.line, path)
    if "problem" not in by_kind:
        raise ProblemError("missing [problem] section", path=path)
    prob = by_kind["problem"][0]
    ctx.unknown(prob, {"tau", "lagrangian", "equation", "constants"})

    declared = list(_names(prob.entries["constants"].value)) if "constants" in prob.entries else []
    csec = by_kind.get("constants", [None])[0]
    if csec is not None:
        declared += [k for k in csec.entries if k not in declared]
    for c in declared:
        if c in RESERVED or not _NAME.match(c):
            raise ProblemError(f"constant name {c!r} is reserved or invalid", "problem", prob.line, path)

    tau = ctx.number(prob, "tau")
    if tau is None:
        raise ProblemError("missing key 'tau'", "problem", prob.line, path)
    if not isinstance(tau, Fraction):
        tau = Fraction(str(tau))
    if tau <= 0:
        raise ProblemError("tau must be positive", "problem", prob.entries["tau"].line, path)
    lag = ctx.expr(prob, "lagrangian", declared)
    eq = ctx.expr(prob, "equation", declared)
    if lag is None and eq is None:
        raise ProblemError("at least one of 'lagrangian' or 'equation' is required", "problem", prob.line, path)

    values = {"tau": float(tau)}
    if csec is not None:
        for k in csec.entries:
            v = ctx.number(csec, k, constants=declared, values=values)
            values[k] = float(v)

    gens: dict[str, Generator] = {}
    combos = []
    for s in by_kind.get("generator", []):
        if s.name in gens or any(c[0] == s.name for c in combos):
            raise ProblemError(f"duplicate generator {s.name!r}", s.label, s.line, path)
        if "combine" in s.entries:
            ctx.unknown(s, {"combine"})
            parts = [p.strip() for p in s.entries["combine"].value.split("+")]
            if len(parts) < 2 or not all(_NAME.match(p) for p in parts):
                raise ProblemError("combine expects 'NAME + NAME [+ ...]'", s.label, s.entries["combine"].line, path)
            combos.append((s.name, parts, s))
            continue
        ctx.unknown(s, {"xi", "eta"})
        xi = ctx.expr(s, "xi", declared) or Expr()
        eta = ctx.expr(s, "eta", declared) or Expr()
        try:
            gens[s.name] = Generator(xi, eta, s.name)
        except ValueError as exc:
            raise ProblemError(str(exc), s.label, s.line, path) from exc
    for name, parts, s in combos:
        missing = [p for p in parts if p not in gens]
        if missing:
            raise ProblemError(f"combine refers to undefined generator(s) {', '.join(missing)}",
                               s.label, s.entries["combine"].line, path)
        g = gens[parts[0]]
        for p in parts[1:]:
            g = g + gens[p]
        gens[name] = Generator(g.xi, g.eta, name)

    out = Problem(path, tau, lag, eq, tuple(declared), values, gens)

    hist = by_kind.get("history", [None])[0]
    if hist is not None:
        ctx.unknown(hist, {"phi", "t0"})
        out.phi = ctx.expr(hist, "phi", declared, required=True)
        t0 = ctx.number(hist, "t0", Fraction(0))
        out.t0 = t0 if isinstance(t0, Fraction) else Fraction(str(t0))

    sim = by_kind.get("simulate", [None])[0]
    if sim is not None:
        ctx.unknown(sim, {"t_end", "steps_per_delay", "seed", "output"})
        t_end = ctx.number(sim, "t_end")
        out.t_end = None if t_end is None else (t_end if isinstance(t_end, Fraction) else Fraction(str(t_end)))
        out.steps_per_delay = _integer(ctx, sim, "steps_per_delay", 100)
        out.seed = _integer(ctx, sim, "seed", 0)
        if "output" in sim.entries:
            out.output = sim.entries["output"].value

    tol = by_kind.get("tolerances", [None])[0]
    if tol is not None:
        ctx.unknown(tol, set(DEFAULT_TOLERANCES))
        for k in tol.entries:
            out.tolerances[k] = float(ctx.number(tol, k))

    seen = set()
    for s in by_kind.get("monitor", []):
        if s.name in seen:
            raise ProblemError(f"duplicate monitor {s.name!r}", s.label, s.line, path)
        seen.add(s.name)
        out.monitors.append(_monitor(ctx, s, declared, values, out.tolerances["monitor"]))
    return out


def _integer(ctx, sec, key, default):
    v = ctx.number(sec, key, default)
    if not isinstance(v, (int, Fraction)) or Fraction(v).denominator != 1:
        raise ProblemError(f"{key} must be an integer", sec.label, sec.entries[key].line, ctx.path)
    return int(v)


def _monitor(ctx: _Ctx, s: _Section, declared, values, default_tol) -> Monitor:
    local = [k for k in s.entries if k not in _MONITOR_KEYS]
    consts = list(declared) + [k for k in local if k not in declared]
    for k in local:
        if k in RESERVED:
            raise ProblemError(f"binding {k!r} shadows a reserved name", s.label, s.entries[k].line, ctx.path)
    kind = s.entries["kind"].value if "kind" in s.entries else "differential"
    if kind not in MONITOR_KINDS:
        raise ProblemError(f"unknown monitor kind {kind!r}; expected one of {', '.join(MONITOR_KINDS)}",
                           s.label, s.entries["kind"].line, ctx.path)
    expr = ctx.expr(s, "expr", consts)
    lhs = ctx.expr(s, "lhs", consts)
    rhs = ctx.expr(s, "rhs", consts)
    if (lhs is None) != (rhs is None):
        raise ProblemError("lhs and rhs must be given together", s.label, s.line, ctx.path)
    if kind in ("differential", "difference", "solution") and expr is None:
        raise ProblemError(f"{kind} monitor needs 'expr'", s.label, s.line, ctx.path)
    if kind == "relation" and expr is None and lhs is None:
        raise ProblemError("relation monitor needs 'expr' or 'lhs'/'rhs'", s.label, s.line, ctx.path)
    fit = _names(s.entries["fit"].value) if "fit" in s.entries else []
    for f in fit:
        if f not in consts:
            raise ProblemError(f"fit names undeclared constant {f!r}", s.label, s.entries["fit"].line, ctx.path)
    bindings = dict(values)
    for k in local:
        bindings[k] = float(ctx.number(s, k, constants=consts, values=bindings))
    expect = ctx.number(s, "expect", constants=consts, values=bindings)
    tol = ctx.number(s, "tolerance", default_tol)
    return Monitor(s.name, kind, expr, lhs, rhs, None if expect is None else float(expect), float(tol),
                   bindings, fit)
