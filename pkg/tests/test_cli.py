import json
from pathlib import Path

import numpy as np
import pytest

from mfglab.cli import main
from mfglab.config import load_spec
from mfglab.errors import ConfigurationError, FormatError
from mfglab.solution_io import load_solution, save_solution

SMALL_SOLVE = """
dim = 1
rprime = 2.0
c_h = 1.0
alpha = critical
mass = 0.001
domain_l = 8.0
grid_n = 257
potential.kind = polynomial
potential.b = 2.0
seed = 3
"""

SMALL_GAMMA = """
dim = 1
rprime = 2.0
alpha = critical
mass = 1.0
domain_l = 8.0
grid_n = 257
potential.kind = zero
"""

SMALL_SWEEP = """
dim = 1
rprime = 2.0
alpha = critical
mass = 1.0
domain_l = 8.0
grid_n = 257
potential.kind = polynomial
potential.b = 2.0
sweep.fractions = 0.90,0.93,0.95,0.97,0.98
"""

SMALL_REGPROBE = """
dim = 2
rprime = 2.0
alpha = critical
mass = 1.0
domain_l = 1.0
grid_n = 65
potential.kind = zero
regprobe.count = 3
seed = 11
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_config_parsing_roundtrip(tmp_path):
    spec = load_spec(_write(tmp_path, "s.cfg", SMALL_SWEEP))
    assert spec.grid_n == 257
    assert spec.alpha == "critical"
    assert spec.sweep_fractions == (0.90, 0.93, 0.95, 0.97, 0.98)
    assert spec.potential.kind == "polynomial"


def test_config_rejects_unknown_and_duplicate_keys(tmp_path):
    with pytest.raises(ConfigurationError):
        load_spec(_write(tmp_path, "a.cfg", "bogus = 1\n"))
    with pytest.raises(ConfigurationError):
        load_spec(_write(tmp_path, "b.cfg", "dim = 1\ndim = 2\n"))
    with pytest.raises(ConfigurationError):
        load_spec(_write(tmp_path, "c.cfg", "dim\n"))


def test_malformed_config_exits_3_without_outputs(tmp_path, capsys):
    cfg = _write(tmp_path, "bad.cfg", "nonsense = true\n")
    out = tmp_path / "out"
    code = main(["solve", "--config", cfg, "--out", str(out)])
    assert code == 3
    record = json.loads((out / "error.json").read_text())
    assert record["exit_code"] == 3
    data_files = [p for p in out.iterdir() if p.name != "error.json"]
    assert data_files == []


def test_solve_writes_artifacts_and_container_roundtrip(tmp_path):
    cfg = _write(tmp_path, "solve.cfg", SMALL_SOLVE)
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "solve.csv").exists()
    assert (out / "profile.csv").exists()
    assert (out / "profile.svg").exists()

    sol_path = out / "solution.mfgsol"
    sol = load_solution(sol_path)
    again = tmp_path / "again.mfgsol"
    save_solution(again, sol)
    assert again.read_bytes() == sol_path.read_bytes()


def test_container_rejects_corruption(tmp_path):
    cfg = _write(tmp_path, "solve.cfg", SMALL_SOLVE)
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    raw = (out / "solution.mfgsol").read_bytes()
    bad = tmp_path / "bad.mfgsol"
    bad.write_bytes(raw[:-16])  # truncated payload: header count mismatch
    with pytest.raises(FormatError):
        load_solution(bad)
    bad2 = tmp_path / "bad2.mfgsol"
    bad2.write_bytes(b"NOPE" + raw[4:])
    with pytest.raises(FormatError):
        load_solution(bad2)


def test_gamma_prints_identity_line(tmp_path, capsys):
    cfg = _write(tmp_path, "g.cfg", SMALL_GAMMA)
    out = tmp_path / "out"
    assert main(["gamma", "--config", cfg, "--out", str(out)]) == 0
    captured = capsys.readouterr().out
    assert "gamma =" in captured
    assert "m_star =" in captured
    assert "identity check" in captured
    rows = (out / "gamma.csv").read_text().splitlines()
    header = rows[1].split(",")
    vals = dict(zip(header, rows[2].split(",")))
    assert abs(float(vals["gamma"]) - float(vals["identity_check"])) <= 1e-10


def test_warm_start_from_saved_solution_reproduces_sweep(tmp_path):
    from mfglab.diagnostics import gamma_and_mstar
    from mfglab.ground_state import continuation_sweep, solve_mfg

    spec = load_spec(_write(tmp_path, "s.cfg", SMALL_SWEEP))
    res = gamma_and_mstar(spec.potential_free())
    masses = [f * res.m_star for f in (0.90, 0.93)]
    full = continuation_sweep(spec, masses, m_star=res.m_star)

    first = solve_mfg(spec, mass=masses[0])
    path = tmp_path / "warm.mfgsol"
    save_solution(path, first)
    restored = load_solution(path)
    resumed = continuation_sweep(spec, masses[1:], init=restored.pair, m_star=res.m_star)

    a, b = full[1][1], resumed[0][1]
    assert a.epsilon == pytest.approx(b.epsilon, abs=1e-12)
    assert a.energy == pytest.approx(b.energy, abs=1e-12)
    assert a.ergodic_constant == pytest.approx(b.ergodic_constant, abs=1e-12)


def test_nls_oracle_subcommand(tmp_path, capsys):
    cfg = _write(tmp_path, "g.cfg", SMALL_GAMMA)
    out = tmp_path / "out"
    assert main(["nls-oracle", "--config", cfg, "--out", str(out)]) == 0
    text = (out / "nls.csv").read_text().splitlines()
    header = text[1].split(",")
    vals = dict(zip(header, text[2].split(",")))
    assert float(vals["l1_gap"]) <= 0.05
    assert float(vals["lambda_rel_gap"]) <= 0.05


def test_blowup_subcommand_ratio_columns(tmp_path):
    cfg = _write(tmp_path, "b.cfg", SMALL_SWEEP)
    out = tmp_path / "out"
    assert main(["blowup", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "fit.csv").read_text().splitlines()
    header = rows[1].split(",")
    assert header == ["mass_frac", "epsilon", "energy", "eps_ratio", "energy_ratio"]
    data = [dict(zip(header, row.split(","))) for row in rows[2:]]
    for entry in data:
        assert abs(float(entry["eps_ratio"]) - 1.0) <= 0.25
        assert abs(float(entry["energy_ratio"]) - 1.0) <= 0.25
    assert (out / "eps_fit.svg").exists()
    assert (out / "energy_fit.svg").exists()
    assert (out / "fit_summary.csv").exists()


def test_regprobe_subcommand(tmp_path):
    cfg = _write(tmp_path, "r.cfg", SMALL_REGPROBE)
    out = tmp_path / "out"
    assert main(["regprobe", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "regprobe.csv").read_text().splitlines()
    assert len(rows) == 2 + 3
    summary = (out / "regprobe_summary.csv").read_text()
    assert "harnack" in summary and "weighted" in summary


def test_env_var_default_out_dir(tmp_path, monkeypatch):
    cfg = _write(tmp_path, "solve.cfg", SMALL_SOLVE)
    envdir = tmp_path / "envout"
    monkeypatch.setenv("MFGLAB_OUT", str(envdir))
    monkeypatch.chdir(tmp_path)
    assert main(["solve", "--config", cfg]) == 0
    assert (envdir / "solve.csv").exists()
