"""Noether-type identities and construction of first integrals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .calculus import (
    NotAffineError,
    elsgolts_derivative,
    eliminate,
    full_derivative,
    horizontal_derivative,
    leading_variable,
    local_extremal,
    prolong,
    prolongation_coefficients,
    relation_variable,
    shift,
    vanishes_on,
)
from .expr import ZERO, Expr, Var, ZeroCertificate, is_zero, var
from .symmetry import (
    DIVERGENCE,
    STRICT,
    Generator,
    InvarianceReport,
    _warn_irregular,
    check_regularity,
    find_divergence_witness,
    invariance_criterion,
    lagrangian_invariance,
)

T, TM = Var("t"), Var("t", -1)
U, UM = Var("u"), Var("u", -1)
DU, DUM = Var("du"), Var("du", -1)


class HypothesisError(ValueError):
    """The generator violates the hypotheses of the Elsgolts-invariance lemma."""


class InvarianceError(ValueError):
    def __init__(self, report: InvarianceReport):
        self.report = report
        super().__init__(f"Lagrangian is {report.verdict}; criterion = {report.criterion_value}")


def noether_density(L: Expr, g: Generator) -> Expr:
    """xi*L + (eta - du*xi) * (dL/d du + dL^+/d du)."""
    Lp = shift(L, 1)
    return g.xi * L + (g.eta - var("du") * g.xi) * (L.diff(DU) + Lp.diff(DU))


def difference_sides(L: Expr, g: Generator) -> tuple[Expr, Expr]:
    """(LHS at level -1, RHS at level 0) of the difference relation; RHS = S+(LHS)."""
    xim, etam, z1m = prolongation_coefficients(g, -1, 1)
    lhs = xim * L.diff(TM) + etam * L.diff(UM) + z1m * L.diff(DUM)
    xi, eta, z1 = prolongation_coefficients(g, 0, 1)
    Lp = shift(L, 1)
    rhs = xi * Lp.diff(T) + eta * Lp.diff(U) + z1 * Lp.diff(DU)
    return lhs, rhs


def master_identity_residual(L: Expr, g: Generator) -> Expr:
    """Invariance criterion minus the decomposition
    eta*E(L) + xi*H(L) + Dbar[density] + (1 - S+)(delayed part)."""
    lhs = invariance_criterion(L, g)
    lhs_d, rhs_d = difference_sides(L, g)
    rhs = ZERO
    if not g.eta.is_zero:
        rhs = rhs + g.eta * elsgolts_derivative(L)
    if not g.xi.is_zero:
        rhs = rhs + g.xi * horizontal_derivative(L)
    rhs = rhs + full_derivative(noether_density(L, g)) + (lhs_d - rhs_d)
    return lhs - rhs


def verify_master_identity(L: Expr, g: Generator, **kw) -> tuple[Expr, ZeroCertificate]:
    res = master_identity_residual(L, g)
    return res, is_zero(res, **kw)


def _check_lemma_hypotheses(g: Generator):
    regular, residual = check_regularity(g)
    tail = "" if regular else f"; regularity fails with residual {residual}"
    if not g.xi.diff(U).is_zero:
        raise HypothesisError(f"{g.name}: xi must not depend on u{tail}")
    if not g.xi.diff(T).diff(T).is_zero:
        raise HypothesisError(f"{g.name}: xi must be affine in t (got {g.xi}){tail}")


def verify_lemma2(L: Expr, g: Generator, **kw) -> tuple[Expr, ZeroCertificate]:
    """Residual of E(XL + L Dbar xi) - X(E L) - (eta_u + Dbar xi - du xi_u) E L."""
    _check_lemma_hypotheses(g)
    dxi = full_derivative(g.xi)
    EL = elsgolts_derivative(L)
    lhs = elsgolts_derivative(prolong(g, L) + L * dxi)
    factor = g.eta.diff(U) + dxi - var("du") * g.xi.diff(U)
    res = lhs - prolong(g, EL) - factor * EL
    return res, is_zero(res, **kw)


def check_elsgolts_invariance_criterion(L: Expr, g: Generator, **kw) -> tuple[bool, ZeroCertificate]:
    """E(XL + L Dbar xi) restricted to the Elsgolts equation vanishes."""
    _check_lemma_hypotheses(g)
    _warn_irregular(g)
    EL = elsgolts_derivative(L)
    W = elsgolts_derivative(prolong(g, L) + L * full_derivative(g.xi))
    restricted = eliminate(W, EL, leading_variable(EL))
    cert = is_zero(restricted, **kw)
    return cert.zero, cert


def reduce_modulo(e: Expr, relations: Sequence[tuple[Expr, Var | None]]) -> Expr:
    """Eliminate each relation (vanishing form, solve-for variable) in order.

    A ``None`` variable picks the leading derivative. When a solve
    coefficient is not a monomial the result is scaled by a power of it
    (see :func:`calculus.eliminate`).
    """
    for rel, v in relations:
        if e.is_zero:
            break
        e = eliminate(e, rel, v)
    return e


@dataclass
class NoetherPackage:
    integral: Expr
    difference_relation: tuple[Expr, Expr]
    extremal: Expr
    divergence_correction_A: Expr | None = None
    difference_correction_C: Expr | None = None
    restriction_free: bool = False
    report: InvarianceReport | None = None
    reduction: Expr | None = None
    certificate: ZeroCertificate | None = None
    notes: list = field(default_factory=list)

    @property
    def relation_residual(self) -> Expr:
        """RHS - LHS of the difference relation."""
        lhs, rhs = self.difference_relation
        return rhs - lhs


def build_noether_package(L: Expr, g: Generator, basis: Sequence[Expr] | None = None, *,
                          absorb: bool = False, n_points: int = 50, tol: float = 1e-9,
                          seed: int = 0) -> NoetherPackage:
    """First integral and difference relation from an invariant Lagrangian.

    integral = density - A - C where Dbar(A) is the invariance criterion and,
    when ``absorb`` is set and RHS - LHS of the relation equals Dbar(C), C is
    absorbed so that no difference relation restricts the solutions.
    """
    zkw = dict(n_points=n_points, tol=tol, seed=seed)
    report = lagrangian_invariance(L, g, basis, **zkw)
    if report.verdict not in (STRICT, DIVERGENCE):
        raise InvarianceError(report)
    integral = noether_density(L, g)
    A = report.divergence_witness
    if A is not None:
        integral = integral - A
    lhs, rhs = difference_sides(L, g)
    extremal = local_extremal(L, g)
    pkg = NoetherPackage(integral, (lhs, rhs), extremal, A, None, False, report)
    gap = rhs - lhs
    if is_zero(gap, **zkw).zero:
        pkg.restriction_free = True
        pkg.difference_correction_C = ZERO
        pkg.notes.append("difference relation vanishes identically")
    elif absorb:
        C = find_divergence_witness(gap, basis)
        if C is None:
            pkg.notes.append("difference relation is not a divergence over the basis; kept")
        else:
            pkg.difference_correction_C = C
            pkg.integral = integral - C
            pkg.restriction_free = True
    reduced = full_derivative(pkg.integral)
    if not extremal.is_zero:
        reduced = eliminate(reduced, extremal, leading_variable(extremal))
    if pkg.restriction_free:
        pkg.reduction = reduced
        pkg.certificate = is_zero(reduced, **zkw)
        return pkg
    v = relation_variable(gap)
    try:
        pkg.reduction = eliminate(reduced, gap, v)
        pkg.certificate = is_zero(pkg.reduction, **zkw)
    except NotAffineError:
        pkg.reduction = reduced
        pkg.certificate = vanishes_on(reduced, gap, v, **zkw)
        pkg.notes.append(f"difference relation is not affine in {v.name}; certified on its real zero set")
    return pkg


def first_order_part(E: Expr, multiplier: Expr) -> tuple[Expr, Expr]:
    """Split multiplier*E into Dbar(P) + R with R free of second derivatives.

    Used to display local extremal equations of linear Lagrangians as
    first-order relations; returns (P, R).
    """
    P = ZERO
    R = multiplier * E
    for k in sorted(R.levels, reverse=True):
        ddu = Var("ddu", k)
        c = R.diff(ddu)
        if c.is_zero or not c.diff(ddu).is_zero:
            continue
        p = c * var("du", k)
        P = P + p
        R = R - full_derivative(p)
    return P, R
