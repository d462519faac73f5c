import random
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from noether_dode.expr import Expr, Var, cos, sin, var
from noether_dode.parsing import parse
from noether_dode.symmetry import Generator

OSC1_L = "u*u_m - du*du_m"
OSC2_L = "(du + du_m)^2/2 - (u + u_m)^2/2"
QUOTIENT_L = "(u - u_m)^2/(du*du_m)"

ARGS = ("t", "t_m", "u", "u_m", "du", "du_m")


def P(text, constants=()):
    return parse(text, constants)


def G(xi, eta, name="X"):
    return Generator.from_strings(xi, eta, name)


@pytest.fixture
def osc1():
    return P(OSC1_L)


@pytest.fixture
def osc2():
    return P(OSC2_L)


@pytest.fixture
def quotient():
    return P(QUOTIENT_L)


OSC1_GENERATORS = {"X1": ("0", "cos(t)"), "X2": ("0", "sin(t)"), "X3": ("1", "0")}
QUOTIENT_GENERATORS = {"X1": ("0", "1"), "X2": ("0", "u"), "X3": ("0", "u^2"), "X4": ("1", "0")}


def random_polynomial(rng, names=ARGS, degree=3, terms=5):
    """Random polynomial with small integer coefficients."""
    e = Expr()
    for _ in range(terms):
        mono = Expr.const(rng.randint(-3, 3) or 1)
        for _ in range(rng.randint(0, degree)):
            mono = mono * P(rng.choice(names))
        e = e + mono
    return e


def random_triple(seed):
    """(L, xi, eta): L of degree <= 3 in the six Lagrangian arguments,
    xi affine in t, eta polynomial in (t, u) plus a trigonometric term."""
    rng = random.Random(seed)
    L = random_polynomial(rng)
    xi = Expr.const(Fraction(rng.randint(-3, 3), rng.randint(1, 3))) + rng.randint(-2, 2) * var("t")
    eta = random_polynomial(rng, ("t", "u"), 2, 3) + rng.randint(-2, 2) * cos(var("t"))
    return L, Generator(xi, eta, f"R{seed}")


_leaf = st.sampled_from(ARGS).map(P) | st.integers(-4, 4).map(Expr.const) | st.fractions(
    min_value=-3, max_value=3, max_denominator=4).map(Expr.const)


def _extend(children):
    return (
        st.tuples(children, children).map(lambda p: p[0] + p[1])
        | st.tuples(children, children).map(lambda p: p[0] * p[1])
        | st.tuples(children, children).map(lambda p: p[0] - p[1])
        | st.tuples(children, st.integers(0, 3)).map(lambda p: p[0] ** p[1])
        | children.map(lambda c: sin(c))
        | children.map(lambda c: cos(c))
    )


exprs = st.recursive(_leaf, _extend, max_leaves=8)
polys = st.recursive(st.sampled_from(ARGS).map(P) | st.integers(-3, 3).map(Expr.const),
                     lambda c: st.tuples(c, c).map(lambda p: p[0] + p[1])
                     | st.tuples(c, c).map(lambda p: p[0] * p[1]), max_leaves=6)
state_vars = st.sampled_from([Var(k, lv) for k in ("t", "u", "du") for lv in (-1, 0)])


def proportional(a, b):
    """Constant c with a == c*b canonically, or None."""
    if b.is_zero:
        return None if not a.is_zero else 1
    mono, cb = next(iter(b.terms.items()))
    c = a.terms.get(mono, Fraction(0)) / cb
    if c == 0 or not (a - c * b).is_zero:
        return None
    return c


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
