"""Point symmetries: generators, regularity, invariance criteria, divergences."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .calculus import (
    eliminate,
    full_derivative,
    leading_variable,
    prolong,
    resolve_time_binding,
    shift,
    total_derivative_at,
    delay_euler_operator,
)
from .expr import ONE, ZERO, Expr, Var, ZeroCertificate, cos, is_zero, sin, var
from .parsing import parse

STRICT = "strictly-invariant"
DIVERGENCE = "divergence-invariant"
NOT_INVARIANT = "not-invariant"
UNDETERMINED = "undetermined"

_POINT_VARS = frozenset({Var("t"), Var("u")})


class RegularityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Generator:
    """X = xi(t, u) d/dt + eta(t, u) d/du."""

    xi: Expr
    eta: Expr
    name: str = "X"

    def __post_init__(self):
        for label, c in (("xi", self.xi), ("eta", self.eta)):
            extra = c.variables - _POINT_VARS
            if extra:
                names = ", ".join(sorted(v.name for v in extra))
                raise ValueError(f"{self.name}: {label} may depend on t and u only, found {names}")

    @classmethod
    def from_strings(cls, xi: str, eta: str, name: str = "X", constants=()) -> "Generator":
        return cls(parse(xi, constants), parse(eta, constants), name)

    def __add__(self, other: "Generator") -> "Generator":
        return Generator(self.xi + other.xi, self.eta + other.eta, f"{self.name}+{other.name}")

    def __str__(self):
        return f"{self.name} = ({self.xi})*d/dt + ({self.eta})*d/du"


@dataclass
class InvarianceReport:
    criterion_value: Expr
    verdict: str
    divergence_witness: Expr | None = None
    certificate: list = field(default_factory=list)
    regular: bool = True

    @property
    def invariant(self) -> bool:
        return self.verdict in (STRICT, DIVERGENCE)


def check_regularity(g: Generator) -> tuple[bool, Expr]:
    """xi^+ - 2 xi + xi^- with times resolved to t + k*tau; regular iff zero."""
    residual = shift(g.xi, 1) - 2 * g.xi + shift(g.xi, -1)
    residual = residual.subs(resolve_time_binding((-1, 1)))
    return residual.is_zero, residual


def _warn_irregular(g: Generator):
    ok, res = check_regularity(g)
    if not ok:
        warnings.warn(f"{g.name} violates the regularity condition (residual {res})", RegularityWarning,
                      stacklevel=3)
    return ok


def invariance_criterion(L: Expr, g: Generator) -> Expr:
    """prolong(g, L) + L * D(xi): zero iff the delay functional is invariant."""
    return prolong(g, L) + L * total_derivative_at(g.xi, 0)


def default_basis() -> list[Expr]:
    """Products of one factor from {1, u, u^-, u^+, du, du^-, du^+} and one
    from {1, sin t, cos t, sin t^-, cos t^-, t}."""
    left = [ONE] + [var(k, lv) for k in ("u", "du") for lv in (0, -1, 1)]
    t, tm = var("t"), var("t", -1)
    right = [ONE, sin(t), cos(t), sin(tm), cos(tm), t]
    return [a * b for a in left for b in right]


def _solve_rational(columns: list[dict], target: dict) -> list[Fraction] | None:
    """Exact solve of sum_i x_i * columns[i] = target over the rationals."""
    rows = sorted(set(target).union(*columns), key=repr)
    n = len(columns)
    mat = [[col.get(r, Fraction(0)) for col in columns] + [target.get(r, Fraction(0))] for r in rows]
    pivots = []
    row = 0
    for c in range(n):
        p = next((i for i in range(row, len(mat)) if mat[i][c] != 0), None)
        if p is None:
            continue
        mat[row], mat[p] = mat[p], mat[row]
        inv = 1 / mat[row][c]
        mat[row] = [x * inv for x in mat[row]]
        for i in range(len(mat)):
            if i != row and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[row])]
        pivots.append(c)
        row += 1
    if any(all(x == 0 for x in r[:n]) and r[n] != 0 for r in mat):
        return None
    x = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        x[c] = mat[i][n]
    return x


def find_divergence_witness(target: Expr, basis: Sequence[Expr] | None = None) -> Expr | None:
    """Find A = sum c_i b_i with Dbar(A) == target exactly, or None."""
    if target.is_zero:
        return ZERO
    basis = list(default_basis() if basis is None else basis)
    images = []
    kept = []
    for b in basis:
        d = full_derivative(b)
        if not d.is_zero:
            images.append(dict(d.terms))
            kept.append(b)
    if not kept:
        return None
    coeffs = _solve_rational(images, dict(target.terms))
    if coeffs is None:
        return None
    A = ZERO
    for c, b in zip(coeffs, kept):
        if c:
            A = A + c * b
    if not (target - full_derivative(A)).is_zero:  # pragma: no cover - exact by construction
        return None
    return A


def lagrangian_invariance(L: Expr, g: Generator, basis: Sequence[Expr] | None = None, *,
                          n_points: int = 50, tol: float = 1e-9, seed: int = 0) -> InvarianceReport:
    """Classify the delay functional with density ``L`` under ``g``.

    ``not-invariant`` is reported only when the criterion provably is not a
    full derivative (its delay Euler operator is nonzero at sampled points);
    otherwise a failed basis search is ``undetermined``.
    """
    regular = _warn_irregular(g)
    crit = invariance_criterion(L, g)
    cert = is_zero(crit, n_points=n_points, tol=tol, seed=seed)
    if cert.zero:
        return InvarianceReport(crit, STRICT, None, [cert], regular)
    A = find_divergence_witness(crit, basis)
    if A is not None:
        wcert = ZeroCertificate("canonical", (crit - full_derivative(A)).is_zero)
        return InvarianceReport(crit, DIVERGENCE, A, [cert, wcert], regular)
    euler = delay_euler_operator(crit)
    if euler is not None:
        ecert = is_zero(euler, n_points=n_points, tol=tol, seed=seed)
        if not ecert.zero:
            return InvarianceReport(crit, NOT_INVARIANT, None, [cert, ecert], regular)
        return InvarianceReport(crit, UNDETERMINED, None, [cert, ecert], regular)
    return InvarianceReport(crit, UNDETERMINED, None, [cert], regular)


def dode_invariance(E: Expr, g: Generator, *, n_points: int = 50, tol: float = 1e-9,
                    seed: int = 0) -> tuple[bool, ZeroCertificate]:
    """Does ``g`` map solutions of E = 0 to solutions?

    The prolonged criterion is restricted to the equation solved for its
    leading derivative before the zero test.
    """
    _warn_irregular(g)
    crit = prolong(g, E)
    restricted = eliminate(crit, E, leading_variable(E))
    cert = is_zero(restricted, n_points=n_points, tol=tol, seed=seed)
    return cert.zero, cert


def check_invariant_function(I: Expr, algebra: Sequence[Generator], **kw) -> dict[str, bool]:
    """True per generator when prolong(g, I) vanishes."""
    return {g.name: is_zero(prolong(g, I), **kw).zero for g in algebra}
