"""Operators on the delay jet space.

Per-point total derivatives D^(k), the full derivative D-bar (sum over all
levels, with dt^(k)/dt = 1), shifts, prolongation of point generators, and
the Elsgolts / horizontal variational derivatives of delay Lagrangians.
"""

from __future__ import annotations

from .expr import ZERO, Expr, LevelOverflowError, Var, var

LAGRANGIAN_VARS = frozenset({Var("t"), Var("t", -1), Var("u"), Var("u", -1), Var("du"), Var("du", -1)})
STATE_KINDS = ("u", "du", "ddu", "dddu")


class OrderOverflowError(ValueError):
    """Differentiation would need a jet variable above third order."""


class ArgumentDomainError(ValueError):
    """A delay Lagrangian references variables outside (t, t-, u, u-, du, du-)."""


class NotAffineError(ValueError):
    pass


def _state(order: int, level: int) -> Expr:
    return var(STATE_KINDS[order], level)


def total_derivative_at(e: Expr, level: int) -> Expr:
    """D at one shift level: d/dt^(k) + du^(k) d/du^(k) + ddu^(k) d/ddu^(k) + ..."""
    out = e.diff(Var("t", level))
    for order, kind in enumerate(STATE_KINDS):
        d = e.diff(Var(kind, level))
        if d.is_zero:
            continue
        if order == len(STATE_KINDS) - 1:
            raise OrderOverflowError(f"{Var(kind, level).name} would need a fourth-order jet variable")
        out = out + _state(order + 1, level) * d
    return out


def full_derivative(e: Expr) -> Expr:
    """D-bar: the sum of total_derivative_at over every level present in ``e``."""
    out = ZERO
    for k in sorted(e.levels):
        out = out + total_derivative_at(e, k)
    return out


def shift(e: Expr, k: int) -> Expr:
    """Move every jet variable ``k`` levels (S+ for k = 1, S- for k = -1)."""
    if k == 0:
        return e
    b = {}
    for v in e.variables:
        if v.level + k not in (-2, -1, 0, 1, 2):
            raise LevelOverflowError(f"shifting {v.name} by {k} leaves levels [-2, 2]")
        b[v] = var(v.kind, v.level + k)
    return e.subs(b)


def resolve_time_binding(levels) -> dict:
    from .expr import TAU

    t = var("t")
    return {Var("t", k): t + k * Expr.atom(TAU) for k in levels if k}


def prolongation_coefficients(g, level: int, order: int = 2) -> list:
    """[xi, eta, zeta1, zeta2] of the generator shifted to ``level``."""
    xi = shift(g.xi, level)
    eta = shift(g.eta, level)
    dxi = total_derivative_at(xi, level)
    coeffs = [xi, eta]
    zeta = eta
    for n in range(1, order + 1):
        zeta = total_derivative_at(zeta, level) - _state(n, level) * dxi
        coeffs.append(zeta)
    return coeffs


def prolong(g, e: Expr) -> Expr:
    """Apply the prolonged generator to ``e`` at every level ``e`` touches.

    Prolongation stops at second derivatives; third-order variables are
    never prolonged over.
    """
    out = ZERO
    for k in sorted(e.levels):
        slots = [Var("t", k)] + [Var(kind, k) for kind in STATE_KINDS]
        partials = [e.diff(v) for v in slots]
        if not partials[4].is_zero:
            raise OrderOverflowError(f"cannot prolong over {slots[4].name}")
        need = 2 if not partials[3].is_zero else (1 if not partials[2].is_zero else 0)
        coeffs = prolongation_coefficients(g, k, need)
        for c, d in zip(coeffs, partials):
            if not d.is_zero:
                out = out + c * d
    return out


def tau_component(g) -> Expr:
    """Coefficient xi - xi^- of d/dtau; only the regularity check consumes it."""
    return g.xi - shift(g.xi, -1)


def _check_lagrangian(L: Expr):
    bad = L.variables - LAGRANGIAN_VARS
    if bad:
        names = ", ".join(sorted(v.name for v in bad))
        raise ArgumentDomainError(f"delay Lagrangian may only use t, t_m, u, u_m, du, du_m; found {names}")


def elsgolts_derivative(L: Expr) -> Expr:
    """dL/du - Dbar(dL/d du) + S+(dL/du^- - Dbar(dL/d du^-))."""
    _check_lagrangian(L)
    u, du = Var("u"), Var("du")
    um, dum = Var("u", -1), Var("du", -1)
    here = L.diff(u) - full_derivative(L.diff(du))
    delayed = L.diff(um) - full_derivative(L.diff(dum))
    return here + shift(delayed, 1)


def horizontal_derivative(L: Expr) -> Expr:
    """dL/dt + Dbar(du dL/d du) + S+(dL/dt^- + Dbar(du^- dL/d du^-)) - Dbar(L)."""
    _check_lagrangian(L)
    t, du = Var("t"), Var("du")
    tm, dum = Var("t", -1), Var("du", -1)
    here = L.diff(t) + full_derivative(var("du") * L.diff(du))
    delayed = L.diff(tm) + full_derivative(var("du", -1) * L.diff(dum))
    return here + shift(delayed, 1) - full_derivative(L)


def local_extremal(L: Expr, g) -> Expr:
    """xi * horizontal_derivative(L) + eta * elsgolts_derivative(L)."""
    out = ZERO
    if not g.xi.is_zero:
        out = out + g.xi * horizontal_derivative(L)
    if not g.eta.is_zero:
        out = out + g.eta * elsgolts_derivative(L)
    return out


def delay_euler_operator(f: Expr) -> Expr | None:
    """Sum over levels k of S_{-k} applied to the Euler operator at level k.

    Annihilates every full derivative Dbar(A), so a nonzero value proves
    ``f`` is not a divergence. Returns None if a shift would leave the jet.
    """
    out = ZERO
    try:
        for k in sorted(f.levels):
            part = ZERO
            sign = 1
            for order, kind in enumerate(STATE_KINDS[:3]):
                d = f.diff(Var(kind, k))
                for _ in range(order):
                    d = full_derivative(d)
                part = part + sign * d
                sign = -sign
            out = out + shift(part, -k)
    except (LevelOverflowError, OrderOverflowError):
        return None
    return out


# ---------------------------------------------------------------- elimination


def leading_variable(eq: Expr) -> Var:
    """Highest-level, then highest-order state variable present in ``eq``."""
    cands = [v for v in eq.variables if not v.is_time]
    if not cands:
        raise NotAffineError(f"{eq} contains no state variable to solve for")
    return max(cands, key=lambda v: (v.level, v.order))


def relation_variable(eq: Expr) -> Var:
    """Variable to solve a difference relation for: highest level, then lowest
    order, preferring variables in which ``eq`` is affine."""
    cands = sorted((v for v in eq.variables if not v.is_time), key=lambda v: (-v.level, v.order))
    if not cands:
        raise NotAffineError(f"{eq} contains no state variable to solve for")
    for v in cands:
        try:
            affine_parts(eq, v)
            return v
        except NotAffineError:
            continue
    for v in cands:
        try:
            eq.coefficients(v)
            return v
        except ValueError:
            continue
    return cands[0]


def affine_parts(eq: Expr, v: Var) -> tuple[Expr, Expr]:
    """Split ``eq = a*v + b`` with ``a``, ``b`` free of ``v``."""
    try:
        cs = eq.coefficients(v)
    except ValueError as exc:
        raise NotAffineError(str(exc)) from exc
    if any(d > 1 for d in cs):
        raise NotAffineError(f"equation is not affine in {v.name}")
    a = cs.get(1, ZERO)
    if a.is_zero:
        raise NotAffineError(f"leading coefficient of {v.name} vanishes identically")
    return a, cs.get(0, ZERO)


def eliminate(e: Expr, eq: Expr, v: Var | None = None) -> Expr:
    """Restrict ``e`` to the manifold ``eq = 0`` solved for ``v``.

    With a monomial coefficient the substitution v = -b/a is exact. Otherwise
    the result is a^n * e(-b/a), n the degree of ``e`` in ``v``; this has the
    same zero set and keeps the expression free of opaque quotients.
    """
    if v is None:
        v = leading_variable(eq)
    a, b = affine_parts(eq, v)
    if a.is_monomial:
        return e.subs({v: -b / a})
    try:
        cs = e.coefficients(v)
    except ValueError as exc:
        raise NotAffineError(str(exc)) from exc
    if not cs:
        return ZERO
    n = max(cs)
    out = ZERO
    for d, r in cs.items():
        out = out + r * (-b) ** d * a ** (n - d)
    return out


def vanishes_on(e: Expr, eq: Expr, v: Var, n_points: int = 50, tol: float = 1e-9, seed: int = 0):
    """Probabilistic test that ``e`` vanishes wherever ``eq`` does.

    ``eq`` must be polynomial in ``v``. Other symbols are sampled from
    [-2, 2]; ``v`` is set to each real root of ``eq`` in turn.
    """
    import math
    import random

    import numpy as np

    from .expr import EvaluationError, ZeroCertificate, compile_expr

    try:
        cs = eq.coefficients(v)
    except ValueError as exc:
        raise NotAffineError(str(exc)) from exc
    deg = max(cs)
    others = sorted((s for s in (eq.free_symbols | e.free_symbols) if s != v), key=lambda s: s.name)
    names = [s.name for s in others]
    coeff_fns = [compile_expr(cs.get(d, ZERO), names) for d in range(deg, -1, -1)]
    e_fn = compile_expr(e, names + [v.name])
    scale_fns = [compile_expr(Expr({m: c}), names + [v.name]) for m, c in e.terms.items()]
    rng = random.Random(seed)
    worst, checked, attempts = 0.0, 0, 0
    while checked < n_points:
        attempts += 1
        if attempts > 100 * n_points:
            raise EvaluationError("could not sample real points of the relation")
        args = [rng.uniform(-2.0, 2.0) for _ in names]
        try:
            poly = [f(*args) for f in coeff_fns]
        except (ZeroDivisionError, ValueError, OverflowError):
            continue
        roots = [r.real for r in np.roots(poly) if abs(r.imag) < 1e-9] if deg > 0 else []
        for r in roots:
            try:
                val = e_fn(*args, r)
                scale = sum(abs(f(*args, r)) for f in scale_fns)
            except (ZeroDivisionError, ValueError, OverflowError):
                continue
            if not (math.isfinite(val) and math.isfinite(scale)):
                continue
            worst = max(worst, abs(val) / max(1.0, scale))
            checked += 1
    return ZeroCertificate("probabilistic-on-relation", worst <= tol * 1e3, n_points, tol * 1e3, seed, worst)
