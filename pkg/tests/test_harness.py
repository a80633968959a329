import csv
import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from zosaddle.exceptions import ConfigError
from zosaddle.harness.cli import main
from zosaddle.harness.config import (CellSpec, ExperimentConfig, NoiseConfig, ProblemConfig, apply_overrides,
                                     load_config)
from zosaddle.harness.diagnostics import verify_estimator_bounds
from zosaddle.harness.experiment import TRACE_HEADER, derive_seed, figure3_config, run_experiment
from zosaddle.harness.plotting import render_plot

SVG_NS = "{http://www.w3.org/2000/svg}"

CONFIG_TOML = """
name = "demo"
trials = 2
base_seed = 5
iterations = 30
trace_every = 10

[problem]
kind = "matrix_game"
n = 6
matrix_seed = 1

[[cells]]
algorithm = "zoesvia"
estimator = "random_direction"
gamma = 0.01
tau = 1e-4

[[cells]]
algorithm = "zosc_esvia"
estimator = "full_coordinate"
gamma = 0.01
tau = 1e-4
"""


def small_config(**kw):
    base = dict(
        problem=ProblemConfig(kind="matrix_game", n=5, matrix_seed=0),
        cells=[CellSpec("zovia", "random_direction", 0.01, 1e-4)],
        trials=1, iterations=10, trace_every=1,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def strip_wall(path):
    return [line.rsplit(",", 1)[0] for line in open(path).read().splitlines()]


# -- configuration -----------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError):
        small_config(cells=[]).validate()
    with pytest.raises(ConfigError):
        small_config(trials=0).validate()
    with pytest.raises(ConfigError):
        small_config(iterations=None).validate()
    with pytest.raises(ConfigError):
        small_config(oracle_budget=0).validate()
    with pytest.raises(ConfigError):
        small_config(cells=[CellSpec("zovia", "random_direction", 0.01, 1e-4)] * 2).validate()
    with pytest.raises(ConfigError):
        small_config(cells=[CellSpec("zovia", "random_direction", -1.0, 1e-4)]).validate()
    with pytest.raises(ConfigError):
        small_config(noise=NoiseConfig(delta_kind="custom")).validate()


def test_load_config_with_overrides(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(CONFIG_TOML)
    cfg = load_config(path, ["problem.n=8", "cells.1.gamma=0.5", "trials=3", "name=other"])
    assert cfg.problem.n == 8 and cfg.cells[1].gamma == 0.5 and cfg.trials == 3 and cfg.name == "other"
    assert cfg.cells[0].cell_id == "zoesvia/random_direction"
    with pytest.raises(ConfigError):
        apply_overrides({}, ["no_equals_sign"])
    path.write_text(CONFIG_TOML + "\nbogus_field = 1\n")
    with pytest.raises(ConfigError):
        load_config(path)


# -- seeds and traces -----------------------------------------------------------------------

def test_derive_seed_contract():
    assert derive_seed(0, "a/b", 0) == derive_seed(0, "a/b", 0)
    assert derive_seed(0, "a/b", 0) != derive_seed(0, "c/d", 0)
    assert derive_seed(0, "a/b", 0) != derive_seed(0, "a/b", 1)
    assert 0 <= derive_seed(3, "x", 2) < 2**63


def test_row_count_and_header(tmp_path):
    m = run_experiment(small_config(), tmp_path)
    path = m.traces["zovia/random_direction"]
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRACE_HEADER)
    assert len(lines) - 1 == 11
    rows = read_rows(path)
    assert [int(r["k"]) for r in rows] == list(range(11))
    assert all(r["residual_F"] == "" for r in rows)  # no known solution for a generated game
    assert float(rows[-1]["eps_sad"]) >= 0


def test_rerun_is_identical_modulo_wall_time(tmp_path):
    cfg = small_config(trials=2, noise=NoiseConfig(sigma=0.1))
    a = run_experiment(cfg, tmp_path / "a")
    b = run_experiment(cfg, tmp_path / "b")
    for cell in a.traces:
        assert strip_wall(a.traces[cell]) == strip_wall(b.traces[cell])
    assert a.metadata.read_text() == b.metadata.read_text()


def test_cells_sharing_base_seed_get_different_streams(tmp_path):
    cells = [CellSpec("zovia", "random_direction", 0.01, 1e-4, label="one"),
             CellSpec("zovia", "random_direction", 0.01, 1e-4, label="two")]
    m = run_experiment(small_config(cells=cells), tmp_path)
    meta = json.loads(m.metadata.read_text())
    assert meta["derived_seeds"]["one"] != meta["derived_seeds"]["two"]
    assert strip_wall(m.traces["one"])[2:] != [line.replace("two", "one") for line in strip_wall(m.traces["two"])][2:]


def test_metadata_contents_and_rerun_from_metadata(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(CONFIG_TOML)
    m = run_experiment(load_config(path), tmp_path / "first")
    meta = json.loads(m.metadata.read_text())
    from zosaddle import __version__
    assert meta["library_version"] == __version__
    assert any("Euclidean" in note for note in meta["notes"])
    assert set(meta["derived_seeds"]) == {"zoesvia/random_direction", "zosc_esvia/full_coordinate"}
    again = run_experiment(ExperimentConfig.from_dict(meta["config"]), tmp_path / "second")
    for cell in m.traces:
        assert strip_wall(m.traces[cell]) == strip_wall(again.traces[cell])


def test_unwritable_output_fails_before_compute(tmp_path, monkeypatch):
    blocker = tmp_path / "blocker"
    blocker.write_text("a regular file cannot hold an output directory")
    calls = []
    import zosaddle.harness.experiment as ex
    monkeypatch.setattr(ex, "build_problem", lambda pc: calls.append(pc))
    with pytest.raises(OSError):
        run_experiment(small_config(), blocker / "out")
    assert calls == []


def test_failed_cell_is_recorded_and_others_continue(tmp_path):
    cells = [CellSpec("zovia", "random_direction", 0.01, 1e-4),
             CellSpec("zovia", "mixed", 0.01, 1e-4)]  # mirror descent rejects the mixed oracle
    m = run_experiment(small_config(cells=cells), tmp_path)
    assert "zovia/random_direction" in m.traces
    assert "zovia/mixed" in m.failures and not m.ok
    meta = json.loads(m.metadata.read_text())
    assert "zovia/mixed" in meta["failures"]


def test_env_var_overrides_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("ZOSADDLE_OUTPUT_DIR", str(tmp_path / "from_env"))
    m = run_experiment(small_config(output_dir=str(tmp_path / "from_config")))
    assert m.output_dir == tmp_path / "from_env"
    assert (tmp_path / "from_env" / "metadata.json").exists()


def test_budget_mode_and_trace_points(tmp_path):
    cfg = small_config(iterations=None, oracle_budget=300, trace_points=10)
    m = run_experiment(cfg, tmp_path)
    rows = read_rows(m.traces["zovia/random_direction"])
    assert 300 <= int(rows[-1]["oracle_calls"]) < 303
    assert 10 <= len(rows) <= 12


def test_parallel_jobs_match_serial(tmp_path):
    cells = [CellSpec("zovia", "random_direction", 0.01, 1e-4), CellSpec("zoesvia", "full_coordinate", 0.05, 1e-4)]
    serial = run_experiment(small_config(cells=cells, trials=2), tmp_path / "s")
    parallel = run_experiment(small_config(cells=cells, trials=2, jobs=2), tmp_path / "p")
    for cell in serial.traces:
        assert strip_wall(serial.traces[cell]) == strip_wall(parallel.traces[cell])


def test_other_problem_kinds(tmp_path):
    q = small_config(problem=ProblemConfig(kind="sc_quadratic", n_x=2, n_y=2),
                     cells=[CellSpec("zosc_esvia", "full_coordinate", 0.1, 1e-6)])
    rows = read_rows(run_experiment(q, tmp_path / "q").traces["zosc_esvia/full_coordinate"])
    # the default start is the ball center, which is the solution
    assert rows[0]["eps_sad"] == "" and float(rows[-1]["euclid_sq"]) < 1e-10
    lag = small_config(problem=ProblemConfig(kind="lagrangian_toy"),
                       cells=[CellSpec("zoesvia", "mixed", 0.2, 1e-4)])
    assert run_experiment(lag, tmp_path / "l").ok


def test_csv_matrix_source(tmp_path):
    from zosaddle.problems import save_matrix_csv
    save_matrix_csv(tmp_path / "m.csv", np.eye(3))
    cfg = small_config(problem=ProblemConfig(kind="matrix_game", matrix_source="csv",
                                             csv_path=str(tmp_path / "m.csv")))
    assert run_experiment(cfg, tmp_path / "o").ok


# -- plotting ---------------------------------------------------------------------------------

def _polylines(svg_path):
    root = ET.parse(svg_path).getroot()
    return [g for g in root.iter(f"{SVG_NS}g") if (g.get("id") or "").startswith("series-")]


def test_single_series_one_polyline(tmp_path):
    path = render_plot({"zovia/random_direction": ([1, 2], [1.0, 0.5])}, tmp_path / "p.svg")
    lines = _polylines(path)
    assert len(lines) == 1
    assert len(lines[0].findall(f"{SVG_NS}path")) == 1
    assert "zovia/random_direction" in path.read_text()


def test_log_ticks_at_decades(tmp_path):
    ys = np.logspace(-4, 0, 20)
    path = render_plot({"a/b": (np.arange(20), ys)}, tmp_path / "p.svg")
    text = path.read_text()
    for exp in ("-4", "-3", "-2", "-1", "0"):
        assert f"10^{{{exp}}}" in text or f"10^{{{exp.replace('-', '−')}}}" in text


def test_nan_values_dropped_with_warning(tmp_path):
    with pytest.warns(RuntimeWarning, match="dropped 1"):
        render_plot({"a/b": ([1, 2, 3], [1.0, float("nan"), 0.1])}, tmp_path / "p.svg")


def test_empty_traces_rejected(tmp_path):
    with pytest.raises(ValueError):
        render_plot({}, tmp_path / "p.svg")


# -- diagnostics and CLI ----------------------------------------------------------------------

def test_verify_bounds_small_grid_passes():
    checks = verify_estimator_bounds("small")
    assert checks and all(c.passed for c in checks)


def test_cli_run_and_plot(tmp_path, capsys):
    path = tmp_path / "c.toml"
    path.write_text(CONFIG_TOML)
    out = tmp_path / "out"
    assert main(["run", str(path), "--output-dir", str(out), "--trials", "1", "--iterations", "5"]) == 0
    traces = sorted(out.glob("trace_*.csv"))
    assert len(traces) == 2
    assert main(["plot", *map(str, traces), "-o", str(tmp_path / "p.svg")]) == 0
    assert len(_polylines(tmp_path / "p.svg")) == 2


def test_cli_error_is_machine_readable(tmp_path, capsys):
    code = main(["run", str(tmp_path / "missing.toml")])
    assert code != 0
    err = capsys.readouterr().err.strip().splitlines()[-1]
    payload = json.loads(err)
    assert payload["error"] == "FileNotFoundError" and payload["message"]


def test_cli_partial_failure_exit_code(tmp_path, capsys):
    path = tmp_path / "c.toml"
    path.write_text(CONFIG_TOML.replace('algorithm = "zoesvia"\nestimator = "random_direction"',
                                        'algorithm = "zovia"\nestimator = "mixed"'))
    assert main(["run", str(path), "--output-dir", str(tmp_path / "o")]) == 3
    assert json.loads(capsys.readouterr().err.strip())["error"] == "PartialFailure"


def test_cli_verify_lemma1(capsys):
    assert main(["verify-lemma1", "--grid", "small"]) == 0
    assert "checks passed" in capsys.readouterr().out


def test_figure3_config_cells():
    cfg = figure3_config(seed=0, n=20, budget=1000)
    cfg.validate()
    assert len(cfg.cells) == 8
    assert {c.estimator for c in cfg.cells} == {"random_direction", "full_coordinate"}
    assert {c.algorithm for c in cfg.cells} == {"zovia", "zoesvia", "zosc_esvia", "zoesvia_same_direction"}


def test_figure3_small_run(tmp_path):
    assert main(["reproduce-fig3", "--n", "10", "--budget", "3000", "--output-dir", str(tmp_path)]) == 0
    traces = sorted(tmp_path.glob("trace_*.csv"))
    assert len(traces) == 8
    assert len(_polylines(tmp_path / "figure3.svg")) == 8
    per_iter = {"zovia_random_direction": 3, "zoesvia_random_direction": 6,
                "zoesvia_same_direction_random_direction": 6, "zosc_esvia_random_direction": 3,
                "zovia_full_coordinate": 21, "zoesvia_full_coordinate": 42}
    for name, step in per_iter.items():
        rows = read_rows(tmp_path / f"trace_{name}.csv")
        ks = np.array([int(r["k"]) for r in rows])
        calls = np.array([int(r["oracle_calls"]) for r in rows])
        np.testing.assert_array_equal(np.diff(calls), step * np.diff(ks))


def test_shipped_example_config_validates():
    cfg = load_config(Path(__file__).parent.parent / "configs" / "matrix_game.toml")
    assert len(cfg.cells) == 2 and cfg.problem.kind == "matrix_game"
