"""Command-line interface: ``zosaddle {run, reproduce-fig3, verify-lemma1, plot}``.

Exit status is 0 on success. On failure a single JSON object with keys
``error`` and ``message`` is printed to stderr and the status is nonzero
(2 for bad input, 3 when some cells failed, 1 otherwise).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..exceptions import ConfigError
from .config import OUTPUT_DIR_ENV, load_config

EXIT_INPUT = 2
EXIT_PARTIAL = 3


class _PartialFailure(RuntimeError):
    pass


def _report_manifest(manifest) -> None:
    for cell_id, path in sorted(manifest.traces.items()):
        print(f"{cell_id}\t{path}")
    if manifest.plot is not None:
        print(f"plot\t{manifest.plot}")
    print(f"metadata\t{manifest.metadata}")
    if manifest.failures:
        raise _PartialFailure("failed cells: " + ", ".join(sorted(manifest.failures)))


def _cmd_run(args) -> int:
    from .experiment import run_experiment

    overrides = list(args.set or [])
    for flag, key in (("trials", "trials"), ("base_seed", "base_seed"), ("iterations", "iterations"),
                      ("budget", "oracle_budget"), ("trace_every", "trace_every"), ("jobs", "jobs")):
        value = getattr(args, flag)
        if value is not None:
            overrides.append(f"{key}={value}")
    cfg = load_config(args.config, overrides)
    _report_manifest(run_experiment(cfg, args.output_dir))
    return 0


def _cmd_fig3(args) -> int:
    from .experiment import reproduce_figure3

    out = args.output_dir
    if out is None:
        import os
        out = os.environ.get(OUTPUT_DIR_ENV) or f"fig3_seed{args.seed}"
    _report_manifest(reproduce_figure3(seed=args.seed, n=args.n, budget=args.budget, output_dir=out,
                                       jobs=args.jobs))
    return 0


def _cmd_lemma(args) -> int:
    from .diagnostics import verify_estimator_bounds

    checks = verify_estimator_bounds(args.grid, sigma=args.sigma, seed=args.seed)
    print("estimator\tquantity\tn\tq\ttau\tdelta\tpoint\tmeasured\tstderr\tbound\tpassed")
    for c in checks:
        d = c.as_dict()
        print("\t".join(str(d[k]) for k in ("estimator", "quantity", "n", "q", "tau", "delta", "point"))
              + f"\t{c.measured:.6g}\t{c.stderr:.3g}\t{c.bound:.6g}\t{c.passed}")
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    if failed:
        raise _PartialFailure(f"{len(failed)} bound check(s) failed")
    return 0


def _cmd_plot(args) -> int:
    from .plotting import plot_trace_files

    path = plot_trace_files(args.traces, args.output, metric=args.metric, logx=args.logx, title=args.title)
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zosaddle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment described by a TOML file")
    p.add_argument("config", type=Path)
    p.add_argument("--output-dir", default=None, help=f"overrides ${OUTPUT_DIR_ENV} and the config value")
    p.add_argument("--trials", type=int)
    p.add_argument("--base-seed", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--budget", type=int, help="oracle-call budget per run")
    p.add_argument("--trace-every", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config field, e.g. problem.n=50 or cells.0.gamma=0.01")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("reproduce-fig3", help="four algorithms x two oracles on a generated matrix game")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--budget", type=int, default=200_000)
    p.add_argument("--output-dir", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_fig3)

    p = sub.add_parser("verify-lemma1", help="Monte-Carlo check of the estimator bias and moment bounds")
    p.add_argument("--grid", choices=("small", "full"), default="small")
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_lemma)

    p = sub.add_parser("plot", help="draw an SVG from trace CSV files")
    p.add_argument("traces", nargs="+", type=Path)
    p.add_argument("--output", "-o", default="plot.svg")
    p.add_argument("--metric", default="eps_sad",
                   choices=("eps_sad", "residual_F", "bregman", "euclid_sq"))
    p.add_argument("--logx", action="store_true")
    p.add_argument("--title", default=None)
    p.set_defaults(func=_cmd_plot)
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _PartialFailure as exc:
        return _fail("PartialFailure", str(exc), EXIT_PARTIAL)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_INPUT)
    except Exception as exc:  # noqa: BLE001 - top-level error reporting
        return _fail(type(exc).__name__, str(exc), 1)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
