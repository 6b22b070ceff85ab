import math

import pytest

import declab


def test_version_and_commands():
    assert declab.__version__ == "1.0.0"
    names = declab.command_names()
    assert {"gen-ppwave", "check-constraints", "adm", "deform", "kernel", "spacetime"} <= set(names)
    assert "dataset" in declab.command_keys("adm")


def test_parse_config():
    command, out, values = declab.parse_config("command = adm\nout = res\n[grid]\nh = 0.1\n")
    assert (command, out) == ("adm", "res")
    assert values == {"grid.h": "0.1"}
    with pytest.raises(declab.ConfigError):
        declab.parse_config("broken line\n")


def test_flat_adm_report(tmp_path):
    rep = declab.run("adm", {"dataset": "flat", "timing": False}, tmp_path / "adm", "json")
    assert rep["schema"] == declab.REPORT_SCHEMA
    assert declab.passed(rep)
    assert (tmp_path / "adm" / "report.json").exists()


def test_flat_constraints_deterministic(tmp_path):
    values = {"dataset": "flat", "n": 3, "grid.h": 0.2, "grid.half_points": 4, "timing": False}
    a = declab.run_json("check-constraints", {k: str(v) for k, v in values.items()}, str(tmp_path))
    rep = declab.run("check-constraints", values, tmp_path)
    assert declab.passed(rep)
    assert declab.run_json("check-constraints", {k: str(v) for k, v in values.items()}, str(tmp_path)) == a


def test_bad_input_raises(tmp_path):
    with pytest.raises(declab.ConfigError):
        declab.run("adm", {"nonsense": 1}, tmp_path / "x")
    with pytest.raises(declab.ConfigError):
        declab.run("adm", {"dataset": "nowhere"}, tmp_path / "x")
    assert not (tmp_path / "x").exists()


def test_ppwave_closed_forms():
    pp = declab.PPWave(n=4, amplitude=1.0, radius=1.0, halfwidth=1.0)
    x = [0.3, -0.2, 0.1, 0.4]
    assert pp.S(x) > 1.0
    g = pp.metric(x)
    assert g.shape == (4, 4)
    assert math.isclose(g[3, 3], pp.S(x), rel_tol=1e-14)
    mu, J = pp.constraints(x)
    norm_J = math.sqrt(sum(J[i] * J[j] * g[i, j] for i in range(4) for j in range(4)))
    assert mu > 0
    assert math.isclose(mu, norm_J, rel_tol=1e-12)
    with pytest.raises(declab.DeclabError):
        declab.PPWave(n=4, amplitude=-1.0)
    assert issubclass(declab.ConfigError, declab.DeclabError)
