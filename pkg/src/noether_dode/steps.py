"""Method of steps for second-order DODEs with delays tau and 2*tau.

The equation is brought to the explicit form

    ddu = F(t, t_m, t_mm, u, u_m, u_mm, du, du_m, du_mm, ddu_m, ddu_mm)

and integrated with classical RK4 on (u, du) over a grid with h = tau/m, so
every delayed node lookup hits a stored node. Stage midpoints read delayed
values from a quintic Hermite interpolant of the completed step (or from the
history function itself when the delayed time precedes t0).

Second derivatives may jump at t0 + n*tau. Every node therefore carries a
left and a right limit of ddu; RK stages at the start of a step read right
limits, stages at its end read left limits.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .calculus import NotAffineError, affine_parts, shift
from .expr import Const, EvaluationError, Expr, LevelOverflowError, Var, compile_expr

RHS_NAMES = ("t", "t_m", "t_mm", "u", "u_m", "u_mm", "du", "du_m", "du_mm", "ddu_m", "ddu_mm")
_DDU = Var("ddu")


class DegenerateDelayWarning(UserWarning):
    """F does not depend on any level -2 variable (single-delay equation)."""


class SingularityError(ArithmeticError):
    def __init__(self, message: str, t: float):
        self.t = t
        super().__init__(f"{message} at t = {t:.17g}")


class WindowError(ValueError):
    pass


def as_fraction(x) -> Fraction:
    """Exact value of an int, Fraction, decimal string or float (via repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, Expr):
        if not x.is_rational:
            raise ValueError(f"{x} is not a rational number")
        return x.rational_value()
    return Fraction(str(x))


def _bind_constants(e: Expr, tau, constants: Mapping[str, float] | None) -> dict:
    values = {"tau": float(tau)}
    for k, v in (constants or {}).items():
        values[k] = float(v)
    missing = [c.name for c in e.free_symbols if isinstance(c, Const) and c.name not in values]
    if missing:
        raise EvaluationError(f"unbound constants: {', '.join(sorted(missing))}")
    return values


@dataclass(frozen=True)
class ExplicitDODE:
    """ddu = rhs, with rhs over levels -2..0 and no ddu at level 0."""

    rhs: Expr
    tau: Fraction
    constants: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "tau", as_fraction(self.tau))
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        bad = sorted(v.name for v in self.rhs.variables if v.name not in RHS_NAMES)
        if bad:
            raise ValueError(f"explicit right-hand side may not contain {', '.join(bad)}")

    @property
    def degenerate(self) -> bool:
        return all(self.rhs.diff(Var(k, -2)).is_zero for k in ("u", "du", "ddu"))

    def __str__(self):
        return f"ddu = {self.rhs}"


def normalize(equation: Expr, tau, constants: Mapping[str, float] | None = None) -> ExplicitDODE:
    """Turn a vanishing-form equation on levels [-1, 1] or [-2, 0] into ddu = F."""
    levels = equation.levels
    if not levels:
        raise NotAffineError("equation contains no jet variables")
    top = max(levels)
    if top > 0:
        try:
            equation = shift(equation, -top)
        except LevelOverflowError as exc:
            raise LevelOverflowError(f"equation spans more than levels [-2, 0] after shifting: {exc}") from exc
    if any(v.kind == "dddu" or (v.kind == "ddu" and v.level > 0) for v in equation.variables):
        raise NotAffineError("equation involves third derivatives")
    a, b = affine_parts(equation, _DDU)
    p = ExplicitDODE(-b / a, tau, dict(constants or {}))
    if p.degenerate:
        warnings.warn(f"{p} does not involve level -2 variables; it is a single-delay equation",
                      DegenerateDelayWarning, stacklevel=2)
    return p


@dataclass(frozen=True)
class History:
    """Initial function phi(t) on [t0 - 2*tau, t0]."""

    phi: Expr
    t0: Fraction = Fraction(0)
    constants: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "t0", as_fraction(self.t0))
        bad = sorted(v.name for v in self.phi.variables if v != Var("t"))
        if bad:
            raise ValueError(f"history may depend on t only, found {', '.join(bad)}")

    @property
    def phi_dot(self) -> Expr:
        return self.phi.diff(Var("t"))

    @property
    def phi_ddot(self) -> Expr:
        return self.phi_dot.diff(Var("t"))

    def evaluator(self, tau, backend: str = "math"):
        """Function s -> (phi, phi_dot, phi_ddot) at time s."""
        fns = []
        for e in (self.phi, self.phi_dot, self.phi_ddot):
            vals = _bind_constants(e, tau, self.constants)
            names = list(vals)
            f = compile_expr(e, ["t"] + names, backend)
            fns.append((f, [vals[n] for n in names]))

        def ev(s):
            return tuple(f(s, *c) for f, c in fns)

        return ev


def hermite_coefficients(y0, d0, a0, y1, d1, a1, h):
    """Polynomial coefficients in theta = (s - s0)/h of the quintic matching
    value, first and second derivative at both ends."""
    c0, c1, c2 = y0, h * d0, h * h * a0 / 2
    Y = y1 - (c0 + c1 + c2)
    D = h * d1 - (c1 + 2 * c2)
    S = h * h * a1 - 2 * c2
    return np.array([c0, c1, c2, 10 * Y - 4 * D + S / 2, -15 * Y + 7 * D - S, 6 * Y - 3 * D + S / 2])


def hermite_eval(c, theta: float, h: float):
    """(y, dy/ds, d2y/ds2) of a quintic at theta."""
    y = ((((c[5] * theta + c[4]) * theta + c[3]) * theta + c[2]) * theta + c[1]) * theta + c[0]
    dy = (((5 * c[5] * theta + 4 * c[4]) * theta + 3 * c[3]) * theta + 2 * c[2]) * theta + c[1]
    ddy = ((20 * c[5] * theta + 12 * c[4]) * theta + 6 * c[3]) * theta + 2 * c[2]
    return y, dy / h, ddy / (h * h)


@dataclass(frozen=True)
class Trajectory:
    """Nodes t0 + i*h for i = -2m..N; array position p = i + 2m."""

    tau: Fraction
    m: int
    t0: Fraction
    n_steps: int
    u: np.ndarray
    du: np.ndarray
    ddu_left: np.ndarray
    ddu_right: np.ndarray
    coefficients: np.ndarray  # (n_steps, 6) dense output of u on each solved step
    history: History | None = None

    def __post_init__(self):
        for name in ("u", "du", "ddu_left", "ddu_right", "coefficients"):
            getattr(self, name).setflags(write=False)

    @property
    def h(self) -> Fraction:
        return self.tau / self.m

    @property
    def offset(self) -> int:
        return 2 * self.m

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-2 * self.m, self.n_steps + 1)

    def time(self, i: int) -> Fraction:
        return self.t0 + i * self.h

    def times(self, idx=None) -> np.ndarray:
        idx = self.indices if idx is None else idx
        return np.array([float(self.time(int(i))) for i in idx])

    @property
    def t(self) -> np.ndarray:
        return self.times()

    @property
    def t_end(self) -> Fraction:
        return self.time(self.n_steps)

    def junctions(self) -> list[int]:
        """Node indices t0 + n*tau inside the solved range."""
        return list(range(0, self.n_steps + 1, self.m))

    def node(self, i: int, side: str = "right"):
        p = i + self.offset
        dd = self.ddu_right[p] if side == "right" else self.ddu_left[p]
        return self.u[p], self.du[p], dd

    def dense(self, s: float):
        """(u, du, ddu) at time s from the step containing it (right-continuous)."""
        h = float(self.h)
        x = (s - float(self.t0)) / h
        i = math.floor(x)
        if i < 0:
            if self.history is None:
                raise WindowError(f"t = {s} precedes t0 and no history is attached")
            return self.history.evaluator(self.tau)(s)
        if i >= self.n_steps:
            if i == self.n_steps and x == i:
                return self.node(i, "left")
            raise WindowError(f"t = {s} lies beyond the integrated range")
        return hermite_eval(self.coefficients[i], x - i, h)

    def with_scaled_u(self, factor: float) -> "Trajectory":
        """Copy with only the u column scaled (monitor sensitivity checks)."""
        return Trajectory(self.tau, self.m, self.t0, self.n_steps, self.u * factor, self.du.copy(),
                          self.ddu_left.copy(), self.ddu_right.copy(), self.coefficients.copy(), self.history)


def integrate(p: ExplicitDODE, hist: History, t_end, m: int = 100) -> Trajectory:
    """Classical RK4 method of steps from t0 to t_end (rounded up to the grid)."""
    if m < 4:
        raise ValueError("steps per delay m must be at least 4")
    tau = p.tau
    t0 = hist.t0
    t_end = as_fraction(t_end)
    if t_end < t0:
        raise ValueError("t_end must not precede t0")
    h = tau / m
    n = math.ceil((t_end - t0) / h)
    off = 2 * m
    size = off + n + 1
    hf = float(h)
    tauf = float(tau)
    ev_hist = hist.evaluator(tau)

    u = np.empty(size)
    du = np.empty(size)
    ddl = np.empty(size)
    ddr = np.empty(size)
    for i in range(-off, 1):
        u[i + off], du[i + off], ddl[i + off] = ev_hist(float(t0 + i * h))
        ddr[i + off] = ddl[i + off]
    coeffs = np.zeros((n, 6))

    consts = _bind_constants(p.rhs, tau, p.constants)
    cnames = list(consts)
    F = compile_expr(p.rhs, list(RHS_NAMES) + cnames)
    cvals = [consts[c] for c in cnames]

    def delayed(j: int, pos: int):
        """(u, du, ddu) at t0 + (j + pos/2)*h, pos in {0, 1, 2}."""
        if pos == 0:
            q = j + off
            return u[q], du[q], ddr[q]
        if pos == 2:
            q = j + 1 + off
            return u[q], du[q], ddl[q]
        if j < 0:
            return ev_hist(float(t0 + (j + Fraction(1, 2)) * h))
        return hermite_eval(coeffs[j], 0.5, hf)

    def rhs(i: int, pos: int, s: float, y: float, dy: float) -> float:
        u1, du1, dd1 = delayed(i - m, pos)
        u2, du2, dd2 = delayed(i - 2 * m, pos)
        try:
            val = F(s, s - tauf, s - 2 * tauf, y, u1, u2, dy, du1, du2, dd1, dd2, *cvals)
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise SingularityError(f"right-hand side not evaluable ({exc})", s) from exc
        if isinstance(val, complex) or not math.isfinite(val):
            raise SingularityError("right-hand side not finite", s)
        return val

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        q = off
        ddr[q] = rhs(0, 0, float(t0), u[q], du[q])
        for i in range(n):
            q = i + off
            sm = float(t0 + (i + Fraction(1, 2)) * h)
            s1 = float(t0 + (i + 1) * h)
            y, dy = u[q], du[q]
            k1u, k1v = dy, ddr[q]
            k2u, k2v = dy + hf / 2 * k1v, rhs(i, 1, sm, y + hf / 2 * k1u, dy + hf / 2 * k1v)
            k3u, k3v = dy + hf / 2 * k2v, rhs(i, 1, sm, y + hf / 2 * k2u, dy + hf / 2 * k2v)
            k4u, k4v = dy + hf * k3v, rhs(i, 2, s1, y + hf * k3u, dy + hf * k3v)
            u[q + 1] = y + hf / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
            du[q + 1] = dy + hf / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
            ddl[q + 1] = rhs(i, 2, s1, u[q + 1], du[q + 1])
            ddr[q + 1] = rhs(i + 1, 0, s1, u[q + 1], du[q + 1])
            coeffs[i] = hermite_coefficients(y, dy, ddr[q], u[q + 1], du[q + 1], ddl[q + 1], hf)
    return Trajectory(tau, m, t0, n, u, du, ddl, ddr, coeffs, hist)


# ---------------------------------------------------------------- monitors


@dataclass
class MonitorReport:
    name: str
    kind: str
    window: tuple[float, float]
    nodes: int
    max_drift: float
    tolerance: float
    reference: float | None = None
    expected: float | None = None
    relation_residual: float | None = None
    values: np.ndarray | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        checks = [self.max_drift]
        if self.relation_residual is not None:
            checks.append(self.relation_residual)
        if self.expected is not None:
            checks.append(abs(self.reference - self.expected))
        return all(math.isfinite(c) and c <= self.tolerance for c in checks)

    def to_text(self) -> str:
        lines = [f"monitor {self.name} ({self.kind})",
                 f"window=[{self.window[0]:.17g},{self.window[1]:.17g}]",
                 f"nodes={self.nodes}"]
        if self.reference is not None:
            lines.append(f"reference={self.reference:.17g}")
        if self.expected is not None:
            lines.append(f"expected={self.expected:.17g}")
        lines.append(f"max_drift={self.max_drift:.6e}")
        if self.relation_residual is not None:
            lines.append(f"relation_residual={self.relation_residual:.6e}")
        lines.append(f"tolerance={self.tolerance:g}")
        lines.append(f"status={'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)

    __str__ = to_text


def _level_span(*exprs: Expr) -> tuple[int, int]:
    levels = set()
    for e in exprs:
        levels |= e.levels
    if not levels:
        return 0, 0
    return min(levels), max(levels)


def _window(traj: Trajectory, lo: int, hi: int, extra: int = 0) -> np.ndarray:
    """Nodes i where every level in [lo, hi] (and i + extra) is stored and the
    top level lies in the solved range."""
    m = traj.m
    start = max(-2 * m - lo * m, -hi * m)
    stop = traj.n_steps - hi * m - extra
    if stop < start:
        raise WindowError(f"evaluation window is empty (levels [{lo}, {hi}], {traj.n_steps} steps)")
    return np.arange(start, stop + 1)


def evaluate_on_nodes(traj: Trajectory, e: Expr, idx: np.ndarray,
                      constants: Mapping[str, float] | None = None) -> np.ndarray:
    """Values of ``e`` at nodes ``idx``; ddu uses right limits."""
    consts = _bind_constants(e, traj.tau, constants)
    cols = {"ddu": traj.ddu_right, "du": traj.du, "u": traj.u}
    names, args = [], []
    for s in sorted(e.free_symbols, key=lambda s: s.name):
        names.append(s.name)
        if isinstance(s, Const):
            args.append(consts[s.name])
        elif s.is_time:
            args.append(traj.times(idx + s.level * traj.m))
        elif s.kind in cols:
            args.append(cols[s.kind][idx + s.level * traj.m + traj.offset])
        else:
            raise ValueError(f"{s.name} is not stored on trajectories")
    fn = compile_expr(e, names, "numpy")
    with np.errstate(all="ignore"):
        vals = np.asarray(fn(*args), dtype=float) if names else np.full(len(idx), float(fn()))
    if vals.ndim == 0:
        vals = np.full(len(idx), float(vals))
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(idx[np.argmax(bad)])
        raise SingularityError(f"{e} not finite", float(traj.time(i)))
    return vals


def _span(traj, idx):
    return float(traj.time(int(idx[0]))), float(traj.time(int(idx[-1])))


def monitor_differential(traj: Trajectory, I: Expr, relation: tuple[Expr, Expr] | None = None,
                         constants: Mapping[str, float] | None = None, tol: float = 1e-6,
                         expected: float | None = None, name: str = "I") -> MonitorReport:
    """Drift max|I(t) - I(t_ref)| over the window, t_ref its first node."""
    exprs = [I] + (list(relation) if relation else [])
    idx = _window(traj, *_level_span(*exprs))
    vals = evaluate_on_nodes(traj, I, idx, constants)
    drift = float(np.max(np.abs(vals - vals[0])))
    res = None
    if relation:
        res = float(np.max(np.abs(evaluate_on_nodes(traj, relation[1] - relation[0], idx, constants))))
    return MonitorReport(name, "differential", _span(traj, idx), len(idx), drift, tol,
                         float(vals[0]), expected, res, vals)


def monitor_difference(traj: Trajectory, J: Expr, constants: Mapping[str, float] | None = None,
                       tol: float = 1e-6, name: str = "J") -> MonitorReport:
    """max|J(t + tau) - J(t)| over the window."""
    lo, hi = _level_span(J)
    idx = _window(traj, lo, hi, traj.m)
    now = evaluate_on_nodes(traj, J, idx, constants)
    later = evaluate_on_nodes(traj, J, idx + traj.m, constants)
    dev = float(np.max(np.abs(later - now)))
    return MonitorReport(name, "difference", _span(traj, idx), len(idx), dev, tol, float(now[0]),
                         values=later - now)


def _relation_residual(relation) -> Expr:
    if isinstance(relation, tuple):
        return relation[1] - relation[0]
    return relation


def verify_closed_relation(traj: Trajectory, relation, constants: Mapping[str, float] | None = None,
                           tol: float = 1e-6, name: str = "R") -> MonitorReport:
    """max|RHS - LHS| of a relation (pair, or a single vanishing Expr)."""
    r = _relation_residual(relation)
    idx = _window(traj, *_level_span(r))
    vals = evaluate_on_nodes(traj, r, idx, constants)
    return MonitorReport(name, "relation", _span(traj, idx), len(idx), float(np.max(np.abs(vals))), tol,
                         values=vals)


def solution_error(traj: Trajectory, exact: Expr, constants: Mapping[str, float] | None = None,
                   tol: float = 1e-6, name: str = "u") -> MonitorReport:
    """max|u(t) - exact(t)| over the solved nodes t0..t_end."""
    idx = np.arange(0, traj.n_steps + 1)
    ref = evaluate_on_nodes(traj, exact, idx, constants)
    err = np.abs(traj.u[idx + traj.offset] - ref)
    return MonitorReport(name, "solution", _span(traj, idx), len(idx), float(np.max(err)), tol, values=err)


def fit_constants(traj: Trajectory, relation, names, constants: Mapping[str, float] | None = None
                  ) -> dict[str, float]:
    """Fit constants entering ``relation`` linearly, from len(names) window nodes
    spread evenly over the window."""
    r = _relation_residual(relation)
    names = list(names)
    base = dict(constants or {})
    idx = _window(traj, *_level_span(r))
    picks = idx[np.linspace(0, len(idx) - 1, len(names) + 2).astype(int)[1:-1]]
    zero = {**base, **{n: 0.0 for n in names}}
    r0 = evaluate_on_nodes(traj, r, picks, zero)
    cols = []
    for n in names:
        cols.append(evaluate_on_nodes(traj, r, picks, {**zero, n: 1.0}) - r0)
    sol = np.linalg.solve(np.column_stack(cols), -r0)
    return {n: float(v) for n, v in zip(names, sol)}


# ---------------------------------------------------------------- files


def write_trajectory(traj: Trajectory, path) -> None:
    """Header ``# t u du ddu`` then one row per node (ddu: right limit)."""
    t = traj.t
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# t u du ddu\n")
        for row in zip(t, traj.u, traj.du, traj.ddu_right):
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def read_trajectory(path) -> np.ndarray:
    """Columns (t, u, du, ddu) as an (n, 4) array."""
    with open(path, encoding="ascii") as fh:
        header = fh.readline().split()
        if header != ["#", "t", "u", "du", "ddu"]:
            raise ValueError(f"{path}: not a trajectory file")
        return np.loadtxt(fh, ndmin=2)
