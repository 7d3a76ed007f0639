import json

import pytest
from click.testing import CliRunner

from smd import __version__
from smd.cli import main

BASE = {
    "observable": {"name": "second_moment_1d"},
    "driver": {"name": "bessel", "delta": 3.0},
    "sim": {"n_particles": 50, "dt": 0.01, "t_final": 0.2, "record_stride": 5},
}


def _write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def _invoke(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


def test_run_writes_csv_and_metadata(tmp_path):
    cfg = _write(tmp_path, BASE)
    r = _invoke("run", cfg, "--out", str(tmp_path / "o"))
    assert r.exit_code == 0, r.output
    csv = (tmp_path / "o" / "run.csv").read_text().splitlines()
    assert csv[0] == "t,z_1,mean,m2,var,detG,margin,m_alpha"
    assert len(csv) == 1 + 5
    meta = json.loads((tmp_path / "o" / "run.json").read_text())
    assert set(meta) == {"config", "exploded", "explosion_time", "explosion_cause", "wall_time_s", "library_version"}
    assert meta["exploded"] is False and meta["library_version"] == __version__


def test_round_trip_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, BASE)
    assert _invoke("run", cfg, "--out", str(tmp_path / "a"), "--seed-common", "7").exit_code == 0
    meta = str(tmp_path / "a" / "run.json")
    assert _invoke("run", meta, "--out", str(tmp_path / "b")).exit_code == 0
    assert (tmp_path / "a" / "run.csv").read_bytes() == (tmp_path / "b" / "run.csv").read_bytes()
    assert json.loads((tmp_path / "b" / "run.json").read_text())["config"]["sim"]["seed_common"] == 7


def test_missing_dt_names_field(tmp_path):
    data = json.loads(json.dumps(BASE))
    del data["sim"]["dt"]
    r = CliRunner().invoke(main, ["run", _write(tmp_path, data)])
    assert r.exit_code == 2
    assert "sim.dt" in r.output


@pytest.mark.parametrize(
    "patch,field",
    [({"driver": {"name": "bessel"}}, "driver"), ({"sim": {**BASE["sim"], "eta": -1}}, "sim.eta"),
     ({"bogus": 1}, "bogus")],
)
def test_invalid_configs(tmp_path, patch, field):
    r = CliRunner().invoke(main, ["run", _write(tmp_path, {**BASE, **patch})])
    assert r.exit_code == 2 and field in r.output


def test_missing_config_file(tmp_path):
    r = CliRunner().invoke(main, ["run", str(tmp_path / "nope.json")])
    assert r.exit_code == 2


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    r = CliRunner().invoke(main, ["run", _write(tmp_path, BASE), "--out", str(blocker / "sub")])
    assert r.exit_code == 3


def _sweep(tmp_path, sweep, threads="1"):
    data = {**BASE, "sweep": sweep}
    data["sim"] = {**BASE["sim"], "t_final": 0.05, "n_particles": 20}
    r = CliRunner().invoke(main, ["--threads", threads, "sweep", _write(tmp_path, data), "--out", str(tmp_path)])
    return r, tmp_path / "run_sweep.csv"


def test_sweep_rows(tmp_path):
    r, path = _sweep(tmp_path, {"seeds": {"start": 0, "stop": 10}, "delta": [1.0, 3.0]}, threads="2")
    assert r.exit_code == 0, r.output
    rows = path.read_text().splitlines()
    assert rows[0].startswith("seed,gamma,delta,eta,exploded,explosion_time,transitions,z_1")
    assert len(rows) == 1 + 20


def test_sweep_gamma_rows(tmp_path):
    r, path = _sweep(tmp_path, {"seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9], "gamma": [0.0, 0.4, 0.8]})
    assert r.exit_code == 0 and len(path.read_text().splitlines()) == 31


def test_sweep_empty_seeds(tmp_path):
    r, _ = _sweep(tmp_path, {"seeds": {"start": 5, "stop": 5}})
    assert r.exit_code == 2 and "sweep.seeds" in r.output


def _chaos(tmp_path, ns, seeds=None):
    data = {**BASE, "sweep": {"n_particles": ns, **({"seeds": seeds} if seeds else {})}}
    data["sim"] = {**BASE["sim"], "snapshot_stride": 5}
    r = CliRunner().invoke(main, ["chaos", _write(tmp_path, data), "--out", str(tmp_path)])
    path = tmp_path / "run_chaos.csv"
    return r, (path.read_text().splitlines() if path.exists() else [])


def test_chaos_rows(tmp_path):
    r, rows = _chaos(tmp_path, [25, 50, 100], seeds=[0, 1])
    assert r.exit_code == 0, r.output
    assert len(rows) == 3 and rows[1].startswith("25,100,2,")


def test_chaos_single_n(tmp_path):
    r, _ = _chaos(tmp_path, [100])
    assert r.exit_code == 2


def test_chaos_repeated_n_is_zero(tmp_path):
    r, rows = _chaos(tmp_path, [40, 40])
    assert r.exit_code == 0
    assert [float(v) for v in rows[1].split(",")[3:]] == [0.0, 0.0, 0.0]


def test_lyapunov(tmp_path):
    data = {**BASE, "lyapunov": {"q": 0.5}}
    r = CliRunner().invoke(main, ["lyapunov", _write(tmp_path, data), "--out", str(tmp_path)])
    assert r.exit_code == 0
    rep = json.loads((tmp_path / "run_lyapunov.json").read_text())
    assert rep["bounded"] is True and rep["q"] == 0.5
    data = {**BASE, "driver": {"name": "bessel", "delta": 1.5}, "lyapunov": {"q": 1.0}}
    r = CliRunner().invoke(main, ["lyapunov", _write(tmp_path, data), "--out", str(tmp_path)])
    assert json.loads((tmp_path / "run_lyapunov.json").read_text())["bounded"] is False


def test_lyapunov_needs_q_below_two(tmp_path):
    data = {**BASE, "driver": {"name": "bessel", "delta": 1.5}}
    r = CliRunner().invoke(main, ["lyapunov", _write(tmp_path, data), "--out", str(tmp_path)])
    assert r.exit_code == 2 and "lyapunov.q" in r.output


def test_version():
    assert __version__ in _invoke("--version").output
