import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import P
from noether_dode.calculus import NotAffineError
from noether_dode.expr import is_zero
from noether_dode.steps import (
    DegenerateDelayWarning,
    History,
    SingularityError,
    WindowError,
    fit_constants,
    hermite_coefficients,
    hermite_eval,
    integrate,
    monitor_difference,
    monitor_differential,
    normalize,
    read_trajectory,
    solution_error,
    verify_closed_relation,
    write_trajectory,
)

OSC1_EQ = "ddu_p + ddu_m + u_p + u_m"


def _run(eq, phi, t_end, m=100, tau=1, **kw):
    return integrate(normalize(P(eq), tau), History(P(phi), **kw), t_end, m)


@pytest.fixture(scope="module")
def osc():
    return _run(OSC1_EQ, "sin(t)", 10)


@pytest.fixture(scope="module")
def quad():
    return _run("ddu_p - ddu_m", "t^2", 5)


# ---------------------------------------------------------------- normalize


def test_normalize_examples():
    assert normalize(P(OSC1_EQ), 1).rhs == P("-ddu_mm - u - u_mm")
    assert normalize(P("ddu_p - ddu_m"), 1).rhs == P("ddu_mm")
    p = normalize(P("ddu*du_p + ddu_p*du + du*u_m + du_m*u"), 1)
    want = P("-(ddu_m*du + du_m*u_mm + du_mm*u_m)/du_m")
    assert is_zero(p.rhs - want).zero


def test_normalize_keeps_lower_window():
    p = normalize(P("ddu - u_mm"), 2)
    assert p.rhs == P("u_mm") and p.tau == 2


def test_normalize_errors():
    with pytest.raises(NotAffineError, match="vanishes"):
        normalize(P("u - u_m"), 1)
    with pytest.raises(NotAffineError, match="affine"):
        normalize(P("ddu^2 - u_mm"), 1)
    with pytest.raises(NotAffineError, match="third"):
        normalize(P("dddu_m + u_mm"), 1)
    with pytest.raises(ValueError):
        normalize(P(OSC1_EQ), 0)


def test_single_delay_warns():
    with pytest.warns(DegenerateDelayWarning):
        normalize(P("ddu + u_m"), 1)


# ---------------------------------------------------------------- integrate


def test_quadratic_history_is_reproduced(quad):
    t = quad.t
    assert np.max(np.abs(quad.u - t ** 2)) < 1e-12
    assert np.max(np.abs(quad.du - 2 * t)) < 1e-12
    assert np.all(quad.ddu_right == 2.0)


def test_oscillator_solution_error(osc):
    rep = solution_error(osc, P("sin(t)"))
    assert rep.max_drift < 1e-6 and rep.passed
    assert osc.t_end == 10 and len(osc.u) == 1201


def test_empty_integration():
    tr = _run(OSC1_EQ, "sin(t)", 0)
    assert tr.n_steps == 0 and len(tr.u) == 201
    assert np.allclose(tr.u, np.sin(tr.t), atol=1e-15)


def test_t_end_before_t0_rejected():
    with pytest.raises(ValueError):
        _run(OSC1_EQ, "sin(t)", -1)


def test_too_few_steps_rejected():
    with pytest.raises(ValueError, match="at least 4"):
        _run(OSC1_EQ, "sin(t)", 1, m=3)


def test_singularity_reports_location():
    with pytest.raises(SingularityError) as info:
        _run("ddu - 1/u_mm", "t + 1", 5, m=10)
    assert info.value.t == pytest.approx(1.0)


def test_convergence_order(osc):
    fine = _run(OSC1_EQ, "sin(t)", 10, m=200)
    coarse_err = solution_error(osc, P("sin(t)")).max_drift
    fine_err = solution_error(fine, P("sin(t)")).max_drift
    assert coarse_err / fine_err >= 8


def test_rational_delay_and_start():
    tr = _run(OSC1_EQ, "sin(t)", Fraction(7, 2), m=20, tau=Fraction(1, 2), t0=Fraction(1, 3))
    # t_end is rounded up to the grid
    assert tr.time(0) == Fraction(1, 3) and 0 <= tr.t_end - Fraction(7, 2) < tr.h
    assert solution_error(tr, P("sin(t)")).max_drift < 1e-5


@settings(max_examples=30, deadline=None)
@given(st.fractions(Fraction(1, 4), 3, max_denominator=8), st.integers(4, 40), st.integers(-50, 200))
def test_grid_alignment(tau, m, i):
    tr = _run("ddu - u_mm", "1", 0, m=m, tau=tau)
    assert tr.h * m == tau
    assert tr.time(i) - tau == tr.time(i - m)
    assert tr.time(i) - 2 * tau == tr.time(i - 2 * m)


def test_continuity_at_joints(osc):
    h = float(osc.h)
    for i in range(osc.n_steps):
        y, dy, _ = hermite_eval(osc.coefficients[i], 1.0, h)
        p = i + 1 + osc.offset
        assert y == pytest.approx(osc.u[p], abs=1e-15)
        assert dy == pytest.approx(osc.du[p], abs=1e-13)


def test_second_derivative_jumps_only_at_junctions():
    # ddu = ddu_mm + 1 from rest: the jump at t0 reappears at t0 + 2*tau
    tr = _run("ddu - ddu_mm - 1", "0", 5, m=10)
    jump = tr.ddu_right - tr.ddu_left
    nodes = np.flatnonzero(np.abs(jump) > 1e-12) - tr.offset
    assert list(nodes) == [0, 20, 40]
    assert all(i % tr.m == 0 for i in nodes)
    assert tr.node(0, "left")[2] == 0 and tr.node(0, "right")[2] == 1


def test_hermite_reproduces_quintic():
    c_true = np.array([0.3, -1.1, 0.7, 2.0, -0.4, 0.25])
    h = 0.3

    def at(theta):
        return hermite_eval(c_true, theta, h)

    c = hermite_coefficients(*at(0.0), *at(1.0), h)
    assert np.allclose(c, c_true, atol=1e-12)


def test_dense_output(osc):
    for s in (0.123, 3.3333, 9.99):
        u, du, ddu = osc.dense(s)
        assert u == pytest.approx(math.sin(s), abs=1e-8)
        assert du == pytest.approx(math.cos(s), abs=1e-6)
    assert osc.dense(-0.5)[0] == pytest.approx(math.sin(-0.5), abs=1e-15)
    with pytest.raises(WindowError):
        osc.dense(11)


def test_trajectory_is_immutable(osc):
    with pytest.raises(ValueError):
        osc.u[0] = 1.0


# ---------------------------------------------------------------- monitors


def test_differential_monitor_examples(osc, quad):
    rep = monitor_differential(quad, P("du_p - du_m"), tol=1e-10, expected=4)
    assert rep.max_drift < 1e-10 and rep.reference == pytest.approx(4, abs=1e-10) and rep.passed
    assert monitor_differential(osc, P("7")).max_drift == 0
    rep = monitor_differential(osc, P("cos(t)*(du_p + du_m) + sin(t)*(u_m + u_p)"),
                               expected=2 * math.cos(1))
    assert rep.passed


def test_window_bounds(osc):
    rep = monitor_differential(osc, P("du_p - du_m"))
    assert rep.window == (-1.0, 9.0) and rep.nodes == 1001
    rep = monitor_difference(osc, P("u - u_m"))
    assert rep.window == (0.0, 9.0) and rep.nodes == 901


def test_difference_monitor_examples(quad, osc):
    assert monitor_difference(quad, P("ddu - ddu_m"), tol=1e-10).max_drift == 0
    assert monitor_difference(osc, P("t")).max_drift == pytest.approx(1.0, abs=1e-12)


def test_closed_relations(osc):
    c = math.cos(1)
    rep = verify_closed_relation(osc, (P("u_p + u_m"), P("A*sin(t) + B*cos(t)", ["A", "B"])), {"A": 2 * c, "B": 0})
    assert rep.passed
    # u*cos(tau) + u_m = sin(t)*(2 cos(tau)) - cos(t)*sin(tau) for u = sin(t)
    rel = (P("u*cos(tau) + u_m"), P("A*sin(t) + B*cos(t)", ["A", "B"]))
    assert verify_closed_relation(osc, rel, {"A": 2 * c, "B": -math.sin(1)}).passed
    fitted = fit_constants(osc, rel, ["A", "B"])
    assert fitted["A"] == pytest.approx(2 * c, abs=1e-7)
    assert fitted["B"] == pytest.approx(-math.sin(1), abs=1e-7)


def test_second_oscillator_relation():
    tr = _run("ddu_p + 2*ddu + ddu_m + u_p + 2*u + u_m", "sin(t)", 10)
    tau = 1.0
    A = (1 + math.cos(tau)) ** 2
    B = math.sin(tau) * (1 + math.cos(tau))
    rel = (P("(u + u_m)*(1 + cos(tau))"), P("A*sin(t) - B*cos(t)", ["A", "B"]))
    assert verify_closed_relation(tr, rel, {"A": A, "B": B}).passed
    assert solution_error(tr, P("sin(t)")).passed


def test_monitor_soundness(osc):
    I = P("cos(t)*(du_p + du_m) + sin(t)*(u_m + u_p)")
    base = monitor_differential(osc, I).max_drift
    bumped = monitor_differential(osc.with_scaled_u(1 + 1e-3), I).max_drift
    assert bumped > 10 * max(base, 1e-300)


def test_empty_window_raises():
    tr = _run(OSC1_EQ, "sin(t)", 0)
    with pytest.raises(WindowError):
        monitor_differential(tr, P("u_p - u_mm"))
    with pytest.raises(WindowError):
        monitor_difference(tr, P("u"))


def test_unbound_constant_is_reported(osc):
    with pytest.raises(Exception, match="A"):
        verify_closed_relation(osc, P("u - A", ["A"]))


def test_report_text(quad):
    text = monitor_differential(quad, P("du_p - du_m"), tol=1e-10, expected=4, name="I").to_text()
    assert text.splitlines()[0] == "monitor I (differential)"
    assert "window=[-1,4]" in text and "nodes=501" in text and text.endswith("status=pass")


# ---------------------------------------------------------------- files


def test_trajectory_file_round_trip(tmp_path, osc):
    path = tmp_path / "osc.traj"
    write_trajectory(osc, path)
    assert path.read_text().splitlines()[0] == "# t u du ddu"
    data = read_trajectory(path)
    assert data.shape == (len(osc.u), 4)
    assert np.array_equal(data[:, 1], osc.u)
    assert np.array_equal(data[:, 3], osc.ddu_right)


def test_read_rejects_foreign_file(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("1 2 3\n")
    with pytest.raises(ValueError):
        read_trajectory(path)
