"""
Density scans and table emission.

A scan parses the potential, solves the scattering problem once and then
evaluates the requested bounds row by row. Rows run on a thread pool; a
BoundsError inside one row becomes a flag on that row instead of ending the scan.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import yaml
from joblib import Parallel, delayed
from tqdm import tqdm

from core.config import config
from core.exceptions import BoundsError, ReportError
from core.models import BoundReport, PotentialKind, RunConfig, ScatteringSolution
from services.bogoliubov_upper import reference_energy, second_order_upper
from services.first_order_bounds import dyson_upper, ly_lower
from services.potentials import parse_potential
from services.scattering import hat_table, solve_zero_energy, truncated_scattering_bound

logger = logging.getLogger(__name__)

COLUMNS = ["n", "rho", "Y", "leading", "lower", "upper_first", "Q", "Q_tilde",
           "Omega", "upper_second", "reference", "flags"]


def read_run_config_data(path: str) -> Dict[str, Any]:
    """Raw keys of a YAML run configuration, before validation."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle) or {}
    except OSError as e:
        logger.error(f"Error reading run config {path}: {e}")
        raise
    if not isinstance(data, dict):
        raise ReportError(f"run config {path} must be a mapping")
    return data


def load_run_config(path: str) -> RunConfig:
    """Read a YAML run configuration into a RunConfig."""
    return RunConfig(**read_run_config_data(path))


def _flag(column: str, error: BoundsError) -> str:
    return f"{column}:{type(error).__name__}:{error}"


def _lower_inputs(sol: ScatteringSolution) -> Dict[str, float]:
    """Scattering length and core radius fed to the cell bound.

    Compactly supported potentials use their support radius. Decaying ones are
    cut at the matching radius with the certified tail correction on a^{n-2}.
    """
    support = sol.potential.support_radius
    if support is not None:
        return {"a_pow": sol.a_pow, "R0": support}
    R0 = sol.r_match
    return {"a_pow": truncated_scattering_bound(sol, R0), "R0": R0}


def _evaluate_row(sol: ScatteringSolution, rho: float, bounds: List[str]) -> BoundReport:
    n = sol.n
    row = BoundReport(n=n, rho=rho, Y=sol.a ** n * rho, leading=sol.s_n * sol.a_pow * rho)

    if "lower" in bounds:
        try:
            inputs = _lower_inputs(sol)
            row.lower = ly_lower(inputs["a_pow"], inputs["R0"], rho, n).value
        except BoundsError as e:
            row.flags.append(_flag("lower", e))

    if "upper_first" in bounds:
        try:
            upper = dyson_upper(sol, rho)
            row.upper_first = upper.value
            if upper.near_divergence:
                row.flags.append(f"upper_first:near_divergence:{upper.ytilde_beta:.3g}")
        except BoundsError as e:
            row.flags.append(_flag("upper_first", e))

    if "upper_second" in bounds:
        try:
            report = second_order_upper(sol, rho, n)
            row.Q, row.Q_tilde, row.Omega = report.Q, report.Q_tilde, report.Omega
            row.upper_second = report.E_total
            row.reference = report.reference
        except BoundsError as e:
            row.flags.append(_flag("upper_second", e))

    if row.reference is None:
        row.reference = reference_energy(n, sol.a, rho)
    if not row.is_consistent:
        row.flags.append("lower:exceeds_upper_first")
    return row


def run_scan(cfg: RunConfig) -> List[BoundReport]:
    """Evaluate every requested bound on the density grid of cfg.

    Args:
        cfg: Run configuration

    Returns:
        One BoundReport per density, in increasing rho
    """
    potential = parse_potential(cfg.potential)
    logger.info(f"Scanning {potential.label()} in n={cfg.n} over {cfg.rho_grid.points} densities")
    try:
        sol = solve_zero_energy(potential, cfg.n)
    except BoundsError as e:
        logger.error(f"Error solving the scattering problem: {e}")
        raise

    # Build the shared momentum table before the rows fan out over threads.
    if "upper_second" in cfg.bounds and potential.kind != PotentialKind.HARD_CORE and not potential.is_zero:
        hat_table(sol)

    densities = sorted(float(rho) for rho in cfg.rho_grid.values())
    rows = Parallel(n_jobs=config.MAX_WORKERS, prefer="threads")(
        delayed(_evaluate_row)(sol, rho, list(cfg.bounds))
        for rho in tqdm(densities, desc="Densities", disable=len(densities) < 2)
    )
    flagged = sum(1 for row in rows if row.flags)
    logger.info(f"Scan finished: {len(rows)} rows, {flagged} flagged")
    return rows


def _format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, list):
        return ";".join(value)
    return str(value)


def row_record(row: BoundReport) -> Dict[str, Any]:
    """Row as a plain dict in column order."""
    data = row.model_dump()
    return {column: data[column] for column in COLUMNS}


def _render_csv(rows: Iterable[BoundReport]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        record = row_record(row)
        writer.writerow([_format_value(record[column]) for column in COLUMNS])
    return buffer.getvalue()


def _render_json(rows: Iterable[BoundReport]) -> str:
    return json.dumps([row_record(row) for row in rows], indent=2, sort_keys=True) + "\n"


def emit(rows: List[BoundReport], format: str = "csv", path: Optional[str] = None) -> str:
    """Render rows as CSV or JSON and write them to path when one is given.

    Args:
        rows: Scan rows
        format: "csv" or "json"
        path: Output file; None only renders

    Returns:
        The rendered text
    """
    if not rows:
        raise ReportError("no rows to emit")
    if format == "csv":
        text = _render_csv(rows)
    elif format == "json":
        text = _render_json(rows)
    else:
        raise ReportError(f"unknown output format '{format}'")

    if path is not None:
        try:
            with open(Path(path), "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)
        except OSError as e:
            logger.error(f"Error writing {format} report to {path}: {e}")
            raise
        logger.info(f"Wrote {len(rows)} rows to {path}")
    return text
