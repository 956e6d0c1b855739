"""Command-line interface.

Subcommands: ``run`` (integrate a scenario and emit CSV output), ``oracle``
(short-horizon fixed-point solve plus cross-validation against the stepper),
``window`` (contraction-window estimate), ``validate`` (configuration check).

Exit codes: 0 success, 1 validation failure, 2 numerical failure,
64 usage error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import configio
from .errors import Biofilm1dError, ConfigError, IoFailure
from .model import validate_config
from .oracle import (box_from_run, estimate_contraction, map_run_to_char_grid,
                     picard_solve)
from .output import emit
from .presets import DEFAULT_T1, PRESET_IDS, build_preset
from .stepper import run as run_scenario

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="biofilm1d",
                     description="1D free-boundary multispecies biofilm simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a scenario and write CSV output")
    p_run.add_argument("--preset", choices=PRESET_IDS)
    p_run.add_argument("--config", help="scenario file (overrides --preset)")
    p_run.add_argument("--t1", type=float, default=DEFAULT_T1,
                       help="arrival time of the third bulk species (presets)")
    p_run.add_argument("--ramp", choices=("printed", "corrected"),
                       default="printed", help="arrival-ramp denominator variant")
    p_run.add_argument("--out", required=True, help="output directory")

    p_or = sub.add_parser("oracle", help="fixed-point solve and cross-validation")
    p_or.add_argument("--preset", choices=PRESET_IDS, required=True)
    p_or.add_argument("--horizon", type=float, required=True,
                      help="oracle horizon (day)")
    p_or.add_argument("--grid", type=int, required=True,
                      help="triangular grid intervals")
    p_or.add_argument("--t1", type=float, default=DEFAULT_T1)
    p_or.add_argument("--ramp", choices=("printed", "corrected"), default="printed")

    p_w = sub.add_parser("window", help="contraction-window estimate")
    p_w.add_argument("--preset", choices=PRESET_IDS, required=True)
    p_w.add_argument("--t1", type=float, default=DEFAULT_T1)
    p_w.add_argument("--ramp", choices=("printed", "corrected"), default="printed")
    p_w.add_argument("--span", type=float, default=0.05,
                     help="observation run horizon for the sampling box (day)")

    p_v = sub.add_parser("validate", help="check a scenario file")
    p_v.add_argument("--config", required=True)

    return parser


def _load_cfg(args):
    if args.config:
        cfg = configio.load(args.config)
        notes = (f"configuration loaded from file {args.config}",)
        return cfg, notes
    if not args.preset:
        raise ConfigError("either --preset or --config is required")
    preset = build_preset(args.preset, t1=args.t1, variant=args.ramp)
    return preset.cfg, preset.notes


def _cmd_run(args) -> int:
    cfg, notes = _load_cfg(args)
    report = validate_config(cfg)
    if not report.ok:
        print(report, file=sys.stderr)
        return EXIT_VALIDATION
    result = run_scenario(cfg)
    bundle = emit(result, args.out, notes=notes)
    print(f"wrote {bundle.directory} (content sha256 {bundle.sha256})")
    return EXIT_OK


def _short_numerics(cfg, horizon):
    nm = replace(cfg.numerics, dt_max=min(cfg.numerics.dt_max, horizon / 50.0))
    return replace(cfg, numerics=nm, horizon=horizon, snapshot_times=())


def _cmd_oracle(args) -> int:
    preset = build_preset(args.preset, t1=args.t1, variant=args.ramp)
    cfg = preset.cfg
    fields, history = picard_solve(cfg, args.horizon, args.grid)
    print(f"fixed point reached after {len(history)} iteration(s)")
    print("iterate distances:")
    for k, d in enumerate(history, start=1):
        print(f"  {k:3d}  {d:.6e}")
    ratios = [history[k + 1] / history[k] for k in range(len(history) - 1)
              if history[k] > 0]
    if ratios:
        print(f"max late contraction ratio: {max(ratios[2:] or ratios):.4f}")

    run_cfg = _short_numerics(cfg, args.horizon)
    result = run_scenario(run_cfg, record_profiles=True)
    x_fd, c_fd, L_fd = map_run_to_char_grid(result, fields.times)
    wedge = fields.wedge
    err_x = max(float(np.max(np.abs((fields.x[i] - x_fd[i])[wedge])))
                / max(float(np.max(np.abs(fields.x[i][wedge]))), 1e-300)
                for i in range(cfg.n))
    err_c = (float(np.max(np.abs((fields.c - c_fd)[wedge])))
             / max(float(np.max(np.abs(fields.c[wedge]))), 1e-300))
    err_L = (float(np.max(np.abs(fields.L - L_fd)))
             / max(float(np.max(np.abs(fields.L))), 1e-300))
    print("cross-validation against the stepper (relative sup norms):")
    print(f"  sessile concentrations: {err_x:.3e}")
    print(f"  characteristic paths:   {err_c:.3e}")
    print(f"  interface position:     {err_L:.3e}")
    return EXIT_OK


def _cmd_window(args) -> int:
    preset = build_preset(args.preset, t1=args.t1, variant=args.ramp)
    run_cfg = _short_numerics(preset.cfg, args.span)
    result = run_scenario(run_cfg, record_profiles=True)
    box = box_from_run(result)
    est = estimate_contraction(preset.cfg, box, t_max=args.span)
    print(f"a = {est.a:.6e}  b = {est.b:.6e}")
    print(f"T_star = {est.T_star:.6e} d "
          f"(contraction factor there: {est.contraction_factor(est.T_star):.4f})")
    for name, cap in sorted(est.caps.items()):
        print(f"  cap {name:>12s}: {cap:.6e}")
    print(f"kernel bounds: |F_x| <= {np.max(est.M_x):.4e}, "
          f"|F_s| <= {np.max(est.M_s):.4e}, |F_psi| <= {np.max(est.M_psi):.4e}, "
          f"|F_geo| <= {est.M_L:.4e}  ({est.samples} samples)")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = configio.load(args.config)
    report = validate_config(cfg)
    print(report)
    return EXIT_OK if report.ok else EXIT_VALIDATION


def cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {"run": _cmd_run, "oracle": _cmd_oracle,
                "window": _cmd_window, "validate": _cmd_validate}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except IoFailure as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Biofilm1dError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
