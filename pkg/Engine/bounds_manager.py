#!/usr/bin/env python3
"""
Bounds Engine Management Script
Runs density scans of the energy bounds and writes the result tables.
"""

import sys
import logging
import argparse
from pathlib import Path
from typing import Any, Dict, List, Optional
sys.path.append(str(Path(__file__).parent))

from pydantic import ValidationError

from core.config import config
from core.exceptions import BoundsError
from core.models import BoundReport, RunConfig
from api.reporting import emit, read_run_config_data, run_scan

BOUND_CHOICES = ["lower", "upper_first", "upper_second"]


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge the optional YAML file with the flags; flags that were set win."""
    data: Dict[str, Any] = {}
    if args.config:
        data = read_run_config_data(args.config)

    if args.dim is not None:
        data["n"] = args.dim
    if args.potential is not None:
        data["potential"] = args.potential
    if args.bounds is not None:
        data["bounds"] = args.bounds

    grid = dict(data.get("rho_grid") or {})
    for key, value in (("min", args.rho_min), ("max", args.rho_max), ("points", args.rho_points)):
        if value is not None:
            grid[key] = value
    if args.rho_log is not None:
        grid["spacing"] = "log" if args.rho_log else "linear"
    if "min" in grid and "max" not in grid:
        grid["max"] = grid["min"]
    data["rho_grid"] = grid

    outputs = dict(data.get("outputs") or {})
    if args.out is not None:
        outputs["path"] = args.out
    if args.format is not None:
        outputs["format"] = args.format
    data["outputs"] = outputs
    return RunConfig(**data)


def print_summary(rows: List[BoundReport]):
    """Print the scan rows as ratios to the leading term."""
    print(f"\n📊 Scan summary ({len(rows)} rows)")
    print("=" * 50)

    def ratio(value: Optional[float], leading: float) -> str:
        if value is None or leading == 0:
            return "      -"
        return f"{value / leading:.6f}"

    print(f"{'rho':>12} {'Y':>12} {'lower':>9} {'upper_1':>9} {'upper_2':>9}")
    for row in rows:
        print(f"{row.rho:12.4e} {row.Y:12.4e} {ratio(row.lower, row.leading):>9} "
              f"{ratio(row.upper_first, row.leading):>9} {ratio(row.upper_second, row.leading):>9}")
        for flag in row.flags:
            print(f"   ⚠️  {flag}")


def scan(cfg: RunConfig) -> int:
    """Run a scan and emit its table."""
    print(f"\n🔍 Scanning {cfg.potential} in n={cfg.n}")
    print(f"   rho in [{cfg.rho_grid.min:g}, {cfg.rho_grid.max:g}], {cfg.rho_grid.points} points "
          f"({cfg.rho_grid.spacing}), bounds: {', '.join(cfg.bounds)}")

    try:
        rows = run_scan(cfg)
        text = emit(rows, cfg.outputs.format, cfg.outputs.path)
    except (BoundsError, OSError) as e:
        print(f"❌ Scan failed: {e}")
        return 1

    print_summary(rows)
    if cfg.outputs.path:
        print(f"\n✅ Wrote {len(rows)} rows to {cfg.outputs.path}")
    else:
        print()
        sys.stdout.write(text)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Dilute Bose gas energy bounds")
    parser.add_argument('--config', '-c', help='YAML run configuration')
    parser.add_argument('--dim', '-n', type=int, help='Spatial dimension (n >= 3)')
    parser.add_argument('--potential', '-p', help="Potential, e.g. 'soft_sphere:V0=1,R0=1'")
    parser.add_argument('--rho-min', type=float, help='Smallest density')
    parser.add_argument('--rho-max', type=float, help='Largest density')
    parser.add_argument('--rho-points', type=int, help='Number of densities')
    parser.add_argument('--rho-log', action=argparse.BooleanOptionalAction, default=None,
                        help='Logarithmic density spacing (default) or linear with --no-rho-log')
    parser.add_argument('--bounds', nargs='+', choices=BOUND_CHOICES, help='Bounds to evaluate')
    parser.add_argument('--out', '-o', help='Output file (stdout when omitted)')
    parser.add_argument('--format', '-f', choices=['csv', 'json'], help='Output format')

    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, config.LOG_LEVEL.upper(), logging.INFO))

    if not args.config and not (args.potential and args.rho_min):
        parser.print_help()
        print("\n💡 Quick start: python bounds_manager.py --potential soft_sphere:V0=1,R0=1 "
              "--rho-min 1e-12 --rho-max 1e-8 --rho-points 5")
        return 0

    try:
        cfg = build_run_config(args)
    except (ValidationError, BoundsError, OSError) as e:
        print(f"❌ Invalid run configuration: {e}")
        return 2
    return scan(cfg)


if __name__ == "__main__":
    sys.exit(main())
