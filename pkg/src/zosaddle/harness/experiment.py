"""Seeded multi-trial execution with CSV traces and a JSON metadata file."""
from __future__ import annotations

import hashlib
import json
import math
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__, kernels
from ..algorithms import RunConfig, run
from ..exceptions import ConfigError
from ..geometry import GeometrySetup
from ..metrics import TraceRecord
from ..oracles import EstimatorConfig, NoiseModel, calls_per_estimate
from ..problems import (ProblemSpec, generate_paper_matrix, lagrangian_toy, load_matrix_csv,
                        make_matrix_game, make_sc_quadratic, save_matrix_csv)
from .config import OUTPUT_DIR_ENV, CellSpec, ExperimentConfig, NoiseConfig, ProblemConfig
from .plotting import render_plot

__all__ = ["TRACE_HEADER", "Manifest", "derive_seed", "build_problem", "build_setup", "run_experiment",
           "figure3_config", "reproduce_figure3", "resolve_output_dir"]

TRACE_HEADER = ("cell_id", "trial", "k", "oracle_calls", "eps_sad", "residual_F", "bregman",
                "euclid_sq", "wall_ms")
EUCLIDEAN_SIMPLEX_NOTE = ("zosc_esvia cells use squared-Euclidean projection onto the simplex "
                          "instead of the entropy prox")


@dataclass
class Manifest:
    """Files written by one experiment plus any per-cell failures."""

    output_dir: Path
    traces: dict[str, Path] = field(default_factory=dict)
    metadata: Path | None = None
    plot: Path | None = None
    failures: dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def derive_seed(base_seed: int, cell_id: str, trial: int) -> int:
    """Stable 63-bit seed from ``(base_seed, cell_id, trial)``."""
    digest = hashlib.sha256(f"{base_seed}|{cell_id}|{trial}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def build_problem(pc: ProblemConfig) -> ProblemSpec:
    if pc.kind == "matrix_game":
        if pc.matrix_source == "csv":
            C = load_matrix_csv(pc.csv_path)
        else:
            C = generate_paper_matrix(pc.n, pc.matrix_seed)
        return make_matrix_game(C)
    if pc.kind == "sc_quadratic":
        return make_sc_quadratic(pc.n_x, pc.n_y, pc.mu, radius=pc.radius, seed=pc.quadratic_seed)
    if pc.kind == "lagrangian_toy":
        return lagrangian_toy(lambda_upper=pc.lambda_upper)
    raise ConfigError(f"unknown problem kind {pc.kind!r}")


def build_setup(problem: ProblemSpec, cell: CellSpec) -> GeometrySetup:
    """Geometry for a cell; ``zosc_esvia`` always gets the Euclidean prox."""
    geometry = cell.geometry
    if cell.algorithm == "zosc_esvia":
        geometry = "euclidean"
    if geometry == "entropy":
        return GeometrySetup.entropy(problem.feasible_set)
    if geometry == "euclidean":
        return GeometrySetup.euclidean(problem.feasible_set)
    return problem.default_setup


def _noise_model(nc: NoiseConfig) -> NoiseModel:
    return NoiseModel(sigma=nc.sigma, delta_cap=nc.delta_cap, delta_kind=nc.delta_kind,
                      delta_seed=nc.delta_seed)


def _cell_trace_every(cfg: ExperimentConfig, problem: ProblemSpec, cell: CellSpec) -> int:
    if cfg.trace_points is None:
        return cfg.trace_every
    f_calls, g_calls = calls_per_estimate(cell.estimator, problem.n_x, problem.n_y)
    per_iter = (f_calls + g_calls) * (1 if cell.algorithm in ("zovia", "zosc_esvia") else 2)
    n_iter = math.inf
    if cfg.oracle_budget is not None:
        n_iter = math.ceil(cfg.oracle_budget / per_iter)
    if cfg.iterations is not None:
        n_iter = min(n_iter, cfg.iterations + 1)
    return max(1, int(n_iter) // cfg.trace_points)


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def _rows(cell_id: str, trial: int, trace: list[TraceRecord]) -> list[str]:
    return [",".join([cell_id, str(trial), str(r.k), str(r.oracle_calls), _fmt(r.eps_sad),
                      _fmt(r.residual_F), _fmt(r.bregman_to_solution),
                      _fmt(r.euclid_sq_to_solution), f"{r.wall_ms:.3f}"])
            for r in trace]


def _run_one(cfg: ExperimentConfig, cell_index: int, trial: int, problem: ProblemSpec | None = None):
    """Run one (cell, trial); returns ``(cell_id, trial, csv_rows)``."""
    cell = cfg.cells[cell_index]
    problem = build_problem(cfg.problem) if problem is None else problem
    setup = build_setup(problem, cell)
    iterations = cfg.iterations if cfg.iterations is not None else 2**62
    rc = RunConfig(
        algorithm=cell.algorithm,
        estimator=EstimatorConfig(kind=cell.estimator, tau=cell.tau, direction_mode=cell.direction_mode),
        gamma=cell.gamma,
        iterations=iterations,
        seed=derive_seed(cfg.base_seed, cell.cell_id, trial),
        output_mode=cell.output_mode,
        noise=_noise_model(cfg.noise),
        trace_every=_cell_trace_every(cfg, problem, cell),
        oracle_budget=cfg.oracle_budget,
    )
    result = run(problem, setup, rc)
    return cell.cell_id, trial, _rows(cell.cell_id, trial, result.trace)


def _run_one_safe(cfg, cell_index, trial, problem=None):
    try:
        return _run_one(cfg, cell_index, trial, problem), None
    except Exception as exc:  # noqa: BLE001 - failures are recorded per cell
        cell_id = cfg.cells[cell_index].cell_id
        return (cell_id, trial, None), f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"


def resolve_output_dir(cfg: ExperimentConfig, override=None) -> Path:
    """Explicit override, then the environment variable, then the config value."""
    if override is not None:
        return Path(override)
    env = os.environ.get(OUTPUT_DIR_ENV)
    return Path(env) if env else Path(cfg.output_dir)


def _probe_writable(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write_probe"
    with open(probe, "w") as fh:
        fh.write("ok")
    probe.unlink()


def _slug(cell_id: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in cell_id)


def _metadata(cfg: ExperimentConfig, problem: ProblemSpec, seeds: dict, failures: dict) -> dict:
    config = cfg.to_dict()
    config.pop("output_dir", None)
    notes = list(cfg.notes)
    if any(c.algorithm == "zosc_esvia" for c in cfg.cells) and problem.default_setup.prox_kind != "squared_euclidean":
        notes.append(EUCLIDEAN_SIMPLEX_NOTE)
    meta = {
        "name": cfg.name,
        "library_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "numpy_version": np.__version__,
        "config": config,
        "derived_seeds": seeds,
        "problem": {"name": problem.name, "n_x": problem.n_x, "n_y": problem.n_y,
                    "L": problem.L, "mu": problem.mu},
        "notes": notes,
        "failures": failures,
    }
    if problem.payoff is not None:
        meta["problem"]["payoff_sha256"] = hashlib.sha256(
            np.ascontiguousarray(problem.payoff, dtype="<f8").tobytes()).hexdigest()
    return meta


def run_experiment(cfg: ExperimentConfig, output_dir=None) -> Manifest:
    """Run every (cell, trial), write one CSV per cell plus ``metadata.json``.

    The output directory is checked for writability before any computation.
    A failing cell is recorded in the manifest and metadata; the other cells
    still run.
    """
    cfg.validate()
    out = resolve_output_dir(cfg, output_dir)
    _probe_writable(out)
    problem = build_problem(cfg.problem)
    manifest = Manifest(output_dir=out)

    tasks = [(i, t) for i in range(len(cfg.cells)) for t in range(cfg.trials)]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_run_one_safe, cfg, i, t) for i, t in tasks]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [_run_one_safe(cfg, i, t, problem) for i, t in tasks]

    by_cell: dict[str, dict[int, list[str]]] = {}
    for (cell_id, trial, rows), err in outcomes:
        if err is not None:
            manifest.failures.setdefault(cell_id, err)
            continue
        by_cell.setdefault(cell_id, {})[trial] = rows

    for cell_id in sorted(by_cell):
        if cell_id in manifest.failures:
            continue
        path = out / f"trace_{_slug(cell_id)}.csv"
        with open(path, "w", newline="") as fh:
            fh.write(",".join(TRACE_HEADER) + "\n")
            for trial in sorted(by_cell[cell_id]):
                for line in by_cell[cell_id][trial]:
                    fh.write(line + "\n")
        manifest.traces[cell_id] = path

    if problem.payoff is not None:
        save_matrix_csv(out / "payoff_matrix.csv", problem.payoff)
    seeds = {c.cell_id: [derive_seed(cfg.base_seed, c.cell_id, t) for t in range(cfg.trials)]
             for c in cfg.cells}
    meta_path = out / "metadata.json"
    with open(meta_path, "w") as fh:
        json.dump(_metadata(cfg, problem, seeds, manifest.failures), fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest.metadata = meta_path
    return manifest


# step sizes for the 200x200 game at a 2e5-call budget; entropy prox unless noted
_FIG3_CELLS = (
    ("zovia", "random_direction", "rd"),
    ("zoesvia", "random_direction", "rd"),
    ("zosc_esvia", "random_direction", "rd_euclid"),
    ("zoesvia_same_direction", "random_direction", "rd"),
    ("zovia", "full_coordinate", "fc"),
    ("zoesvia", "full_coordinate", "fc"),
    ("zosc_esvia", "full_coordinate", "fc_euclid"),
    ("zoesvia_same_direction", "full_coordinate", "fc"),
)


def figure3_config(seed: int = 0, n: int = 200, budget: int = 200_000, tau: float = 1e-4,
                   trace_points: int = 400, output_dir: str = "fig3") -> ExperimentConfig:
    """Eight cells (four algorithms x two oracles) on the generated ``n x n`` game.

    Step sizes: random-direction with entropy prox uses ``1e-3``;
    full-coordinate with entropy prox uses ``1 / (2 max|C|)``; the Euclidean
    single-call cells use ``1e-5`` (random-direction) and ``1 / (6 ||C||_2)``
    (full-coordinate).
    """
    C = generate_paper_matrix(n, seed)
    L_max = float(np.max(np.abs(C)))
    L_spectral = make_matrix_game(C).L
    gammas = {"rd": 1e-3, "fc": 1.0 / (2.0 * L_max), "rd_euclid": 1e-5, "fc_euclid": 1.0 / (6.0 * L_spectral)}
    cells = [CellSpec(algorithm=a, estimator=e, gamma=gammas[g], tau=tau) for a, e, g in _FIG3_CELLS]
    return ExperimentConfig(
        problem=ProblemConfig(kind="matrix_game", matrix_source="paper_generator", n=n, matrix_seed=seed),
        cells=cells, trials=1, base_seed=seed, oracle_budget=budget, trace_points=trace_points,
        output_dir=output_dir, name=f"figure3-n{n}-seed{seed}",
    )


def reproduce_figure3(seed: int = 0, n: int = 200, budget: int = 200_000, output_dir=None,
                      jobs: int = 1) -> Manifest:
    """Run the eight-cell matrix-game comparison and draw ``figure3.svg``."""
    cfg = figure3_config(seed=seed, n=n, budget=budget)
    cfg.jobs = jobs
    manifest = run_experiment(cfg, output_dir)
    from .plotting import read_trace_csv, series_from_traces

    rows = []
    for path in manifest.traces.values():
        rows.extend(read_trace_csv(path))
    if rows:
        manifest.plot = render_plot(
            series_from_traces(rows, "eps_sad"), manifest.output_dir / "figure3.svg",
            xlabel="oracle calls", ylabel="eps_sad of averaged iterate",
            title=f"{n}x{n} matrix game, seed {seed}", note=EUCLIDEAN_SIMPLEX_NOTE,
        )
    return manifest
