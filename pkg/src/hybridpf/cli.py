"""Command line interface: ``hybridpf {run,sweep,oracle,effort,validate}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness as H
from .config import ExperimentConfig, load_config
from .diagnostics import fmt
from .errors import ConfigError, HybridPFError
from .sharp_oracle import SharpState1D, bar_closed_form, evolve_sharp_1d, shrinking_circle

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("hybridpf")


def _need_config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError(f"'{args.command}' needs --config")
    return load_config(args.config)


def cmd_run(args) -> int:
    cfg = _need_config(args)
    result = H.simulate(cfg)
    path = H.write_records(Path(args.out) / "records.csv", result.records)
    last = result.records[-1]
    print(f"{len(result.records)} records -> {path}")
    print(f"final t={fmt(last.t)} width={fmt(last.width)} error_max={fmt(last.error_max)} "
          f"steps={result.final.step_count}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _need_config(args)
    if not cfg.sweep.values:
        raise ConfigError("[sweep] values: missing required key", cfg.path, "sweep.values")
    result = H.run_sweep(cfg)
    out = Path(args.out)
    H.write_sweep(out / "sweep.csv", result)
    H.write_fits(out / "fits.csv", result.fits())
    for r in result.rows:
        print(f"{r.parameter}={fmt(r.value)} error={fmt(r.error_max)} width={fmt(r.width)} {r.status}")
    for name, f in result.fits().items():
        print(f"{name} slope {f.slope:.4f}")
    failed = [r for r in result.rows if not r.ok]
    return EXIT_NUMERIC if len(failed) == len(result.rows) else EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _need_config(args)
    material = H.build_material(cfg)
    op = H.oracle_params(cfg, material)
    times = H.schedule_of(cfg).times
    out = Path(args.out) / "oracle.csv"
    if cfg.geometry == "bar1d":
        s0 = SharpState1D(cfg.bar.z0, cfg.bar.phase2_on_left, cfg.bar.U1, cfg.grid.extent[0])
        t, z = evolve_sharp_1d(s0, op, (times[0], times[-1]), t_eval=times)
        closed = bar_closed_form(s0, op, t)
        header, rows = ("t", "z", "z_closed_form"), zip(t, z, closed)
    else:
        header, rows = ("t", "R"), zip(times, shrinking_circle(cfg.circle.R0, op, times))
    rows = [[fmt(v) for v in row] for row in rows]
    H._write(out, header, rows)
    print(",".join(header))
    for row in rows:
        print(",".join(row))
    return EXIT_OK


def cmd_effort(args) -> int:
    cfg = _need_config(args)
    result = H.effort_study(cfg)
    out = Path(args.out)
    H.write_effort(out / "effort.csv", result)
    H.write_fits(out / "effort_fits.csv", result.fits())
    for name, f in result.fits().items():
        print(f"{name} exponent {f.slope:.4f}")
    print(f"exponent ratio ac/hybrid {result.exponent_ratio:.3f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_checks

    results = run_checks()
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'}  {r.name}: {r.detail}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_NUMERIC


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "oracle": cmd_oracle, "effort": cmd_effort, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hybridpf", description="Allen-Cahn and hybrid phase-field experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "run": "single simulation, writes records.csv",
        "sweep": "parameter sweep, writes sweep.csv and fits.csv",
        "oracle": "sharp-interface reference trajectory, writes oracle.csv",
        "effort": "effort versus accuracy study, writes effort.csv",
        "validate": "run the built-in self-checks",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="experiment configuration file")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return ap


def cli_main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}" + (f" (key: {exc.key})" if exc.key else ""), file=sys.stderr)
        return EXIT_CONFIG
    except HybridPFError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
