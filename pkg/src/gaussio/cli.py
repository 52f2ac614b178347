"""Command-line front end: ``gaussio run|validate <cfg>`` and ``gaussio presets list``.

Exit codes: 0 success, 2 configuration error, 3 physics validation error,
4 numerical failure. Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .errors import ConfigError, GaussioError
from .scenarios import load_preset, preset_names
from .sweep import run_sweep, validate_report
from .system import SCHEMA

log = logging.getLogger("gaussio")

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_NUMERICAL = 0, 2, 3, 4
_EXIT = {"config": EXIT_CONFIG, "physics": EXIT_PHYSICS, "numerical": EXIT_NUMERICAL}


def render_csv(cfg, columns, rows, warnings, generated: str | None = None) -> str:
    """Result table with its ``#`` header block; only the first line carries the timestamp."""
    if generated is None:
        generated = datetime.now(timezone.utc).isoformat(timespec="seconds")
    buf = io.StringIO()
    buf.write(f"# generated: {generated}\n")
    buf.write(f"# config_sha256: {cfg.sha256}\n")
    buf.write(f"# spec_version: {SCHEMA}\n")
    buf.write(f"# gaussio_version: {__version__}\n")
    buf.write(f"# channel: {cfg.channel}\n")
    if cfg.sweep is not None:
        unit = f" [{cfg.sweep.unit}]" if cfg.sweep.unit else ""
        buf.write(f"# sweep_variable: {cfg.sweep.variable}{unit}\n")
    for w in warnings:
        buf.write(f"# warning: {w}\n")
    buf.write(f"# columns: {','.join(columns)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the target directory and rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _plain(x):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        x = x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    return x


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out_path = Path(args.output) if args.output else cfg.output_path
    if out_path is None:
        raise ConfigError("no output_path in the configuration and no --output given")
    columns, rows, warnings = run_sweep(cfg)
    for w in warnings:
        log.warning("%s", w)
    write_atomic(out_path, render_csv(cfg, columns, rows, warnings))
    log.info("wrote %d rows to %s", len(rows), out_path)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    report = validate_report(cfg)
    for w in report["warnings"]:
        log.warning("%s", w)
    json.dump(_plain(report), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in preset_names():
        desc = load_preset(name).get("description", "")
        print(f"{name}\t{desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gaussio", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"gaussio {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate a configuration and write its result table")
    run.add_argument("config", help="JSON run configuration")
    run.add_argument("-o", "--output", help="override output_path")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="print derived quantities without running the sweep")
    val.add_argument("config")
    val.set_defaults(func=cmd_validate)

    pre = sub.add_parser("presets", help="scenario presets")
    pre_sub = pre.add_subparsers(dest="presets_command", required=True)
    pre_sub.add_parser("list", help="list shipped presets").set_defaults(func=cmd_presets)
    return ap


def _report(category: str, exc: BaseException) -> None:
    doc = {"error": category, "type": type(exc).__name__, "message": str(exc)}
    sys.stderr.write(json.dumps(doc) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="gaussio: %(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except GaussioError as exc:
        _report(exc.category, exc)
        return _EXIT.get(exc.category, EXIT_NUMERICAL)
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        _report("config", exc)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        _report("numerical", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
