"""Command line harness: ``varqte <experiment> --config <path> [--seed N] [--out DIR]``."""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import subprocess
import sys
from pathlib import Path

from . import __version__
from .evolution import RunRecord
from .experiments import EXPERIMENTS, ConfigError, resolve_config, run

OUT_ENV = "VARQTE_OUT"
EXIT_CONFIG = 2
EXIT_OUTPUT = 3


def _build_id() -> str:
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).parent, timeout=5)
        if rev.returncode == 0:
            return f"{__version__}+g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def rows_to_csv(rows: list[dict]) -> str:
    cols: list[str] = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in (r.get(c, "") for c in cols)])
    return buf.getvalue()


def _summary_line(exp: str, summary: dict) -> str:
    parts = [f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in summary.items()]
    return f"{exp}: " + " ".join(parts)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="varqte", description="Variational time-evolution experiments.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", type=Path, help="JSON configuration (fields override defaults)")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--out", type=Path, help=f"output directory (default: ${OUT_ENV} or ./results)")
    args = parser.parse_args(argv)

    raw: dict = {}
    if args.config is not None:
        try:
            raw = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: config: cannot read {args.config}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if not isinstance(raw, dict):
            print("error: config: top level must be a JSON object", file=sys.stderr)
            return EXIT_CONFIG
        if raw.get("experiment", args.experiment) != args.experiment:
            print(f"error: experiment: config is for {raw['experiment']!r}, not {args.experiment!r}", file=sys.stderr)
            return EXIT_CONFIG
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        cfg = resolve_config(args.experiment, raw)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = args.out or (Path(cfg["out"]) if cfg.get("out") else None) or Path(os.environ.get(OUT_ENV, "results"))
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: out: directory {out} is not writable: {exc}", file=sys.stderr)
        return EXIT_OUTPUT

    result, summary = run(cfg)
    stem = f"{args.experiment}_seed{cfg['seed']}"
    config_text = json.dumps(cfg, sort_keys=True, default=str)
    meta = {"config": cfg, "seed": cfg["seed"], "build": _build_id(),
            "config_hash": hashlib.sha256(config_text.encode()).hexdigest(), "summary": summary}
    if isinstance(result, RunRecord):
        text = result.to_csv()
        meta["run"] = {k: v for k, v in result.meta.items()}
        meta["wall_seconds"] = [r.get("wall") for r in result.rows]
    else:
        text = rows_to_csv(result)
    (out / f"{stem}.csv").write_text(text)
    (out / f"{stem}.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=str))
    print(_summary_line(args.experiment, summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
