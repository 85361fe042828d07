"""Command-line experiment runner.

    dispersive-lab verify
    dispersive-lab scaling --phase schrodinger --dim 1 --mode local --R 4,8,16,32,64 --seed 7
    dispersive-lab --config experiment.yaml

Settings come from built-in defaults, then the ``--config`` file (YAML or
JSON), then explicit flags.  Each run writes ``<experiment>.csv`` and
``<experiment>.json`` into ``--output``, ``$DLAB_OUTPUT_DIR`` or
``./dlab_output``.

Exit codes: 0 all checks pass, 1 a check failed, 2 invalid configuration,
3 aliasing budget violated, 4 file I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from . import __version__
from .experiments import DEFAULTS, EXPERIMENTS
from .phase import PhaseError, parse_phase
from .propagator import AliasingBudgetError

log = logging.getLogger("dispersive_lab")

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_BUDGET, EXIT_IO = 0, 1, 2, 3, 4
ENV_OUTPUT = "DLAB_OUTPUT_DIR"

__all__ = ["main", "run", "load_config", "ConfigError", "load_schema"]


class ConfigError(ValueError):
    pass


def load_schema(name: str) -> dict:
    return json.loads(resources.files("dispersive_lab").joinpath("schema", name).read_text())


def load_config(path: str | os.PathLike) -> dict:
    """Parse a YAML or JSON file (JSON is a YAML subset)."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping")
    return data


def _validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, load_schema("config.schema.json"))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid configuration at {where}: {exc.message}") from exc
    try:
        parse_phase(cfg["phase"], int(cfg.get("dim", 1)))
    except PhaseError as exc:
        raise ConfigError(str(exc)) from exc


def _csv_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else format(v, ".12e")
    return str(v)


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_csv_value(r[c]) for c in columns])
    return buf.getvalue()


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, numpy scalars become Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _versions() -> dict:
    import numpy
    import scipy

    out = {"dispersive_lab": __version__, "numpy": numpy.__version__, "scipy": scipy.__version__, "python": sys.version.split()[0]}
    try:
        import finufft

        out["finufft"] = getattr(finufft, "__version__", "unknown")
    except ImportError:
        pass
    return out


def run(cfg: dict, output_dir: str | os.PathLike | None = None) -> tuple[int, dict | None]:
    """Validate, execute and write outputs.  Returns (exit code, report or None)."""
    try:
        _validate(cfg)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_SCHEMA, None
    full = {**DEFAULTS, **cfg}
    out = Path(output_dir or full.get("output") or os.environ.get(ENV_OUTPUT) or "dlab_output")
    experiment = full["experiment"]
    log.info("running %s with phase %s", experiment, full["phase"])
    t0 = time.perf_counter()
    try:
        outcome = EXPERIMENTS[experiment](full)
    except AliasingBudgetError as exc:
        log.error("%s (required L = %.6g; pass --force to override)", exc, exc.required_L)
        return EXIT_BUDGET, None
    runtime = time.perf_counter() - t0
    csv_name = f"{experiment}.csv"
    report = _clean(
        {
            "experiment": experiment,
            "config": {k: v for k, v in full.items() if k != "output"},
            "results": outcome.results,
            "checks": [c.as_dict() for c in outcome.checks],
            "passed": outcome.passed,
            "runtime_seconds": runtime,
            "versions": _versions(),
            "csv": csv_name,
        }
    )
    jsonschema.validate(report, load_schema("report.schema.json"))
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / csv_name).write_text(render_csv(outcome.columns, outcome.rows))
        (out / f"{experiment}.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        log.error("cannot write outputs to %s: %s", out, exc)
        return EXIT_IO, report
    for c in outcome.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<26} value={c.value:.6g} threshold={c.threshold:.6g}")
    print(f"{experiment}: {'passed' if outcome.passed else 'FAILED'} ({runtime:.1f} s) -> {out}")
    return (EXIT_OK if outcome.passed else EXIT_FAIL), report


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _auto_int(text: str):
    return text if text == "auto" else int(text)


def _auto_float(text: str):
    return text if text == "auto" else float(text)


# flag name -> config key
_FLAG_KEYS = {
    "phase": "phase", "dim": "dim", "N": "N", "L": "L", "R": "R_list", "T_max": "T_max", "Nt": "Nt",
    "restarts": "restarts", "rounds": "rounds", "seed": "seed", "mode": "mode", "margin": "margin",
    "budget": "budget", "force": "force", "s": "s", "eps": "eps", "k_max": "k_max", "t": "t", "k": "k",
    "sigma": "sigma", "output": "output",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="YAML or JSON file with experiment settings")
    common.add_argument("--phase", help="wave | schrodinger | airy | fractional:a=<a>")
    common.add_argument("--dim", type=int, choices=(1, 2))
    common.add_argument("--N", type=_auto_int, help="points per axis or 'auto'")
    common.add_argument("--L", type=_auto_float, help="torus side or 'auto'")
    common.add_argument("--R", type=_floats, help="comma-separated dyadic R values")
    common.add_argument("--T-max", dest="T_max", type=float)
    common.add_argument("--Nt", type=_auto_int, help="time nodes or 'auto'")
    common.add_argument("--restarts", type=int)
    common.add_argument("--rounds", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--mode", choices=("local", "global"))
    common.add_argument("--margin", type=float)
    common.add_argument("--budget", type=float, help="largest N^dim * Nt for torus global runs")
    common.add_argument("--force", action="store_true", help="continue despite a violated aliasing budget")
    common.add_argument("--s", type=float)
    common.add_argument("--eps", type=float)
    common.add_argument("--k-max", dest="k_max", type=int)
    common.add_argument("--t", type=float)
    common.add_argument("--k", type=int)
    common.add_argument("--sigma", type=float)
    common.add_argument("--output", help=f"output directory (default ${ENV_OUTPUT} or ./dlab_output)")
    common.add_argument("--log-level", help="logging level (default INFO)")

    parser = argparse.ArgumentParser(prog="dispersive-lab", description=__doc__.split("\n")[0], parents=[common])
    sub = parser.add_subparsers(dest="experiment")
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = str(getattr(args, "log_level", "INFO")).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format="%(levelname)s %(name)s: %(message)s")
    cfg: dict = {}
    if getattr(args, "config", None):
        try:
            cfg = load_config(args.config)
        except ConfigError as exc:
            log.error("%s", exc)
            return EXIT_SCHEMA
        except OSError as exc:
            log.error("cannot read %s: %s", args.config, exc)
            return EXIT_IO
        try:
            _validate(cfg)
        except ConfigError as exc:
            log.error("%s", exc)
            return EXIT_SCHEMA
    experiment = getattr(args, "experiment", None)
    if experiment:
        if "experiment" in cfg and cfg["experiment"] != experiment:
            log.error("config names experiment %r but the command is %r", cfg["experiment"], experiment)
            return EXIT_SCHEMA
        cfg["experiment"] = experiment
    if "experiment" not in cfg:
        parser.print_usage(sys.stderr)
        log.error("no experiment given")
        return EXIT_SCHEMA
    cfg.setdefault("phase", DEFAULTS["phase"])
    for flag, key in _FLAG_KEYS.items():
        val = getattr(args, flag, None)
        if val is not None:
            cfg[key] = val
    code, _ = run(cfg)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
