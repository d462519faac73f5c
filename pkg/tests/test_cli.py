import hashlib
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from noether_dode import __version__
from noether_dode.cli import main
from noether_dode.steps import read_trajectory

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


@pytest.fixture
def run(capsys, monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("NOETHER_DODE_SEED", raising=False)

    def _run(*argv):
        code = main([str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err

    return _run


def prob(name):
    return PROBLEMS / f"{name}.prob"


def field(out, key):
    return [line.split(": ", 1)[1] for line in out.splitlines() if line.startswith(key + ": ")]


def test_header_and_hash(run):
    code, out, _ = run("elsgolts", prob("oscillator1_symmetries"))
    lines = out.splitlines()
    assert lines[0] == f"noether-dode {__version__}"
    assert lines[1] == "command: elsgolts"
    digest = hashlib.sha256(prob("oscillator1_symmetries").read_bytes()).hexdigest()
    assert lines[2].endswith(f"sha256={digest}")
    assert lines[-1] == "status: pass" and code == 0


@pytest.mark.parametrize("name,want", [
    ("oscillator1_symmetries", "ddu_p + ddu_m + u_p + u_m = 0"),
    ("oscillator2_symmetries", "-ddu_p - 2*ddu - ddu_m - u_p - 2*u - u_m = 0"),
    ("free_particle", "-ddu = 0"),
])
def test_elsgolts(run, name, want):
    code, out, _ = run("elsgolts", prob(name))
    assert field(out, "elsgolts") == [want] and code == 0


@pytest.mark.parametrize("name,gen,verdict", [
    ("oscillator1_symmetries", "X1", "divergence-invariant, A = u*sin(t_m) + u_m*sin(t)"),
    ("oscillator1_symmetries", "X3", "strictly-invariant"),
    ("quotient", "X4", "strictly-invariant"),
])
def test_invariance(run, name, gen, verdict):
    code, out, _ = run("invariance", prob(name), "-g", gen)
    assert field(out, "verdict") == [verdict] and code == 0
    assert field(out, "certificate")


def test_invariance_failure_exits_one(run):
    code, out, _ = run("invariance", prob("invariants"), "-g", "Xscale")
    assert field(out, "verdict") == ["not-invariant"] and code == 1
    code, out, _ = run("invariance", prob("invariants"), "-g", "Xscale", "--target", "elsgolts")
    assert code == 0 and field(out, "verdict") == ["elsgolts equation invariant"]


def test_equation_target(run):
    code, out, _ = run("invariance", prob("oscillator1_symmetries"), "-g", "X2", "--target", "equation")
    assert code == 0 and field(out, "verdict") == ["invariant"]


def test_noether_lag1(run):
    code, out, _ = run("noether", prob("oscillator1_symmetries"), "-g", "X1")
    assert code == 0
    assert field(out, "relation") == ["du*sin(t_m) + u*cos(t_m) = du_p*sin(t) + u_p*cos(t)"]
    assert field(out, "integral") == ["-du_p*cos(t) - du_m*cos(t) - u*sin(t_m) - u_m*sin(t)"]
    assert field(out, "certificate") == ["canonical zero=True"]


def test_noether_absorb(run):
    code, out, _ = run("noether", prob("oscillator1_symmetries"), "-g", "X1", "--absorb")
    assert code == 0 and field(out, "restriction_free") == ["true"]
    assert field(out, "C") == ["u_p*sin(t) - u*sin(t_m)"]


def test_noether_lag3_x4(run):
    code, out, _ = run("noether", prob("quotient"), "-g", "X4")
    assert code == 0 and field(out, "relation") == ["0 = 0"]


def test_noether_generator_sum(run):
    code, out, _ = run("noether", prob("oscillator1_symmetries"), "-g", "X13")
    assert code == 0 and field(out, "first_order_form")


def test_extremal(run):
    code, out, _ = run("extremal", prob("oscillator1_symmetries"), "-g", "X3")
    assert field(out, "local_extremal") == ["-ddu_p*du - ddu*du_p - du*u_m - du_m*u = 0"]
    assert code == 0


def test_identity(run):
    code, out, _ = run("identity", prob("oscillator1_symmetries"), "-g", "X1")
    assert code == 0 and field(out, "residual") == ["0"]
    assert field(out, "certificate") == ["canonical zero=True"]
    code, out, _ = run("identity", prob("quotient"), "-g", "X2", "--which", "lemma2")
    assert code == 0 and field(out, "residual") == ["0"]


def test_identity_hypothesis_violation(run):
    code, out, err = run("identity", prob("oscillator1_symmetries"), "-g", "Xsq", "--which", "lemma2")
    assert code == 2 and out == ""
    assert "regularity fails with residual 2*tau^2" in err


def test_simulate_steps(run, tmp_path):
    code, out, _ = run("simulate", prob("steps"))
    assert code == 0
    traj = tmp_path / "steps.traj"
    data = read_trajectory(traj)
    assert data.shape == (701, 4)
    assert out.count("status=pass") == 3


def test_simulate_output_flag_and_steps(run, tmp_path):
    code, out, _ = run("simulate", prob("steps"), "-o", tmp_path / "x.traj", "--steps", "20")
    assert code == 0 and "m = 20" in out
    assert read_trajectory(tmp_path / "x.traj").shape == (141, 4)


def test_simulate_oscillator(run):
    code, out, _ = run("simulate", prob("oscillator1"))
    assert code == 0 and "status=FAIL" not in out
    assert field(out, "monitor closed_fitted fitted")


def test_simulate_perturbed_history_fails(run):
    code, out, _ = run("simulate", prob("oscillator1_perturbed"))
    assert code == 1 and "status=FAIL" in out


def test_simulate_requires_history(run):
    code, _, err = run("simulate", prob("oscillator1_symmetries"))
    assert code == 2 and "[history]" in err


def test_parse(run):
    code, out, _ = run("parse", "(u - u_m)^2/(du*du_m)")
    assert code == 0 and field(out, "variables") == ["du du_m u u_m"]
    code, out, _ = run("parse", "A*sin(t)", "--constants", "A,B")
    assert field(out, "expr") == ["A*sin(t)"]


def test_parse_error_reports_offset(run):
    code, out, err = run("parse", "u + * 2")
    assert code == 2 and "offset 4" in err and out == ""
    code, _, err = run("parse", "u + q")
    assert code == 2 and "unknown identifier 'q'" in err


def test_problem_error_has_location(run, tmp_path):
    bad = tmp_path / "bad.prob"
    bad.write_text("[problem]\ntau = 1\nlagrangian = u*\n")
    code, _, err = run("elsgolts", bad)
    assert code == 2 and "bad.prob:3: [problem]" in err


def test_unknown_generator(run):
    code, _, err = run("noether", prob("oscillator1_symmetries"), "-g", "Nope")
    assert code == 2 and "Nope" in err


def test_missing_file(run):
    code, _, err = run("elsgolts", "does-not-exist.prob")
    assert code == 2 and "cannot read" in err


def test_reports_are_deterministic(run):
    for argv in (("noether", prob("quotient"), "-g", "X3"), ("simulate", prob("oscillator1"))):
        first = run(*argv)
        assert run(*argv) == first


def test_seed_environment_override(run, monkeypatch):
    _, out, _ = run("noether", prob("quotient"), "-g", "X2")
    assert "seed=0" in field(out, "certificate")[0]
    monkeypatch.setenv("NOETHER_DODE_SEED", "7")
    _, out, _ = run("noether", prob("quotient"), "-g", "X2")
    assert "seed=7" in field(out, "certificate")[0]
    monkeypatch.setenv("NOETHER_DODE_SEED", "x")
    code, _, err = run("noether", prob("quotient"), "-g", "X2")
    assert code == 2 and "NOETHER_DODE_SEED" in err


def test_warnings_are_reported(run):
    code, out, _ = run("invariance", prob("oscillator1_symmetries"), "-g", "Xsq")
    assert any("regularity" in w for w in field(out, "warning"))
    assert field(out, "regularity") == ["violated, residual 2*tau^2"]


@pytest.mark.skipif(shutil.which("noether-dode") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["noether-dode", "elsgolts", str(prob("oscillator1_symmetries"))], capture_output=True, text=True,
                         cwd=tmp_path)
    assert res.returncode == 0 and "ddu_p + ddu_m + u_p + u_m = 0" in res.stdout


def test_module_entry(tmp_path):
    res = subprocess.run([sys.executable, "-m", "noether_dode.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
