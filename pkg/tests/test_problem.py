import math
from fractions import Fraction
from pathlib import Path

import pytest

from conftest import P
from noether_dode.problem import ProblemError, load_problem, parse_problem

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


@pytest.mark.parametrize("path", sorted(PROBLEMS.glob("*.prob")), ids=lambda p: p.name)
def test_shipped_problems_load(path):
    prob = load_problem(str(path))
    assert prob.tau > 0
    assert prob.lagrangian is not None or prob.equation is not None


def test_lag1_contents():
    prob = load_problem(str(PROBLEMS / "oscillator1_symmetries.prob"))
    assert prob.tau == 1
    assert prob.lagrangian == P("u*u_m - du*du_m")
    g = prob.generator("X13")
    assert g.xi == P("1") and g.eta == P("cos(t)")
    with pytest.raises(ProblemError, match="unknown generator 'nope'"):
        prob.generator("nope")


def test_constants_are_evaluated():
    prob = load_problem(str(PROBLEMS / "oscillator2.prob"))
    c = math.cos(1)
    assert prob.constant_values["A"] == pytest.approx((1 + c) ** 2)
    assert prob.constant_values["B"] == pytest.approx(math.sin(1) * (1 + c))


def test_simulate_and_tolerances():
    prob = load_problem(str(PROBLEMS / "steps.prob"))
    assert prob.t_end == 5 and prob.steps_per_delay == 100 and prob.t0 == 0
    assert [m.name for m in prob.monitors] == ["I", "J", "solution"]
    assert all(m.tolerance == 1e-10 for m in prob.monitors)
    assert prob.monitors[0].expect == pytest.approx(4)


def test_defaults():
    prob = parse_problem("[problem]\ntau = 1/2\nequation = ddu - u_mm\n")
    assert prob.tau == Fraction(1, 2)
    assert prob.zero_test == {"n_points": 50, "tol": 1e-9, "seed": 0}
    assert prob.steps_per_delay == 100 and prob.monitors == []


def test_comments_and_blank_lines():
    text = "# header\n\n[problem]  # trailing\ntau = 1\nlagrangian = du^2/2\n"
    assert parse_problem(text).lagrangian == P("du^2/2")


@pytest.mark.parametrize("text,line,section,message", [
    ("[problem]\ntau = 1\n", 1, "problem", "lagrangian"),
    ("[problem]\ntau=1\nlagrangian=u\n[generator X]\neta=1\n[generator X]\neta=2\n", 6, "generator X", "duplicate"),
    ("[problem]\ntau=1\nlagrangian = u*q\n", 3, "problem", "unknown identifier 'q'"),
    ("[problem]\ntau=1\nlagrangian=u\nfoo=1\n", 4, "problem", "unknown key 'foo'"),
    ("[problem]\ntau=1\nlagrangian=u\n[problem]\ntau=2\n", 4, "problem", "more than once"),
    ("[problem]\ntau=-1\nlagrangian=u\n", 2, "problem", "positive"),
    ("[problem]\ntau=1\nlagrangian=u\n[monitor a]\nkind=weird\nexpr=u\n", 5, "monitor a", "kind"),
    ("[problem]\ntau=1\nlagrangian=u\n[generator Y]\ncombine = X + Z\n", 5, "generator Y", "undefined"),
    ("[problem]\ntau = 1\nlagrangian = u\n[bogus]\n", 4, "bogus", "unknown section"),
])
def test_errors_carry_section_and_line(text, line, section, message):
    with pytest.raises(ProblemError, match=message) as info:
        parse_problem(text, "f.prob")
    assert str(info.value).startswith(f"f.prob:{line}: [{section}]")


def test_key_outside_section():
    with pytest.raises(ProblemError, match="f.prob:1:"):
        parse_problem("tau = 1\n", "f.prob")
