"""Tests for density scans and report emission."""

import json
from pathlib import Path

import pytest
import yaml

from api.reporting import COLUMNS, emit, load_run_config, read_run_config_data, row_record, run_scan
from core.config import config
from core.exceptions import DomainError, ReportError
from core.models import BoundReport, RunConfig
from services.first_order_bounds import lower_regime_threshold

SOFT = "soft_sphere:V0=1,R0=1"


def scan_config(**overrides):
    data = {
        "n": 3,
        "potential": SOFT,
        "rho_grid": {"min": 1e-8, "max": 1e-6, "points": 3},
        "bounds": ["lower", "upper_first"],
    }
    data.update(overrides)
    return RunConfig(**data)


@pytest.fixture(scope="module")
def first_order_rows():
    return run_scan(scan_config())


def test_scan_rows_are_ordered(first_order_rows):
    assert len(first_order_rows) == 3
    rhos = [row.rho for row in first_order_rows]
    assert rhos == sorted(rhos)
    assert rhos[0] == pytest.approx(1e-8) and rhos[-1] == pytest.approx(1e-6)
    for row in first_order_rows:
        assert row.upper_first >= row.leading
        assert row.reference > row.leading
        assert row.Q is None and row.upper_second is None


def test_lower_outside_regime_is_flagged(first_order_rows):
    for row in first_order_rows:
        assert row.lower is None
        assert any(flag.startswith("lower:RegimeError:") for flag in row.flags)


def test_lower_inside_regime(soft3):
    threshold = lower_regime_threshold(soft3.a_pow, 1.0, 3)
    rho = threshold * 1e-4 / soft3.a ** 3
    rows = run_scan(scan_config(rho_grid={"min": rho, "max": rho, "points": 1}))
    row = rows[0]
    assert row.flags == []
    assert row.lower <= row.leading <= row.upper_first


def test_second_order_columns_in_four_dimensions():
    rows = run_scan(scan_config(n=4, rho_grid={"min": 1e-6, "max": 1e-6, "points": 1},
                                bounds=["upper_second"]))
    row = rows[0]
    assert row.upper_second == pytest.approx(row.leading + row.Q + row.Q_tilde + row.Omega)
    assert row.Q > 0
    assert row.lower is None and row.upper_first is None


def test_hard_core_second_order_is_flagged():
    rows = run_scan(scan_config(potential="hard_core:R0=1", rho_grid={"min": 1e-6, "max": 1e-6},
                                bounds=["upper_first", "upper_second"]))
    row = rows[0]
    assert row.upper_first is not None
    assert row.upper_second is None
    assert any(flag.startswith("upper_second:NonIntegrableError:") for flag in row.flags)


def test_unknown_potential_stops_the_scan():
    with pytest.raises(DomainError):
        run_scan(scan_config(potential="morse:D=1"))


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def test_csv_emission(tmp_path):
    row = BoundReport(n=3, rho=0.1, Y=1e-3, leading=1.0, upper_first=1.25, flags=["a", "b"])
    path = tmp_path / "out.csv"
    text = emit([row], "csv", str(path))
    assert path.read_text() == text
    lines = text.splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert lines[1] == "3,0.10000000000000001,0.001,1,,1.25,,,,,,a;b"
    assert len(lines) == 2


def test_json_emission():
    row = BoundReport(n=3, rho=0.1, Y=1e-3, leading=1.0)
    text = emit([row], "json")
    data = json.loads(text)
    assert data == [row_record(row)]
    assert list(data[0]) == sorted(data[0])
    assert text.endswith("\n")


def test_emission_errors(tmp_path):
    row = BoundReport(n=3, rho=0.1, Y=1e-3, leading=1.0)
    with pytest.raises(ReportError):
        emit([], "csv")
    with pytest.raises(ReportError):
        emit([row], "xml")
    with pytest.raises(OSError):
        emit([row], "csv", str(tmp_path / "missing" / "out.csv"))


def test_repeated_scans_emit_identical_bytes(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "MAX_WORKERS", 3)
    cfg = scan_config(n=4, rho_grid={"min": 1e-8, "max": 1e-6, "points": 3},
                      bounds=["upper_first", "upper_second"])
    outputs = {}
    for attempt in (1, 2):
        rows = run_scan(cfg)
        for fmt in ("csv", "json"):
            path = tmp_path / f"run{attempt}.{fmt}"
            emit(rows, fmt, str(path))
            outputs[attempt, fmt] = path.read_bytes()
    for fmt in ("csv", "json"):
        assert outputs[1, fmt] == outputs[2, fmt]
        assert b"\r" not in outputs[1, fmt]
        assert outputs[1, fmt].endswith(b"\n")


def test_inconsistent_row_is_detected():
    row = BoundReport(n=3, rho=0.1, Y=1e-3, leading=1.0, lower=2.0, upper_first=1.5)
    assert not row.is_consistent


# ---------------------------------------------------------------------------
# Run configuration files
# ---------------------------------------------------------------------------

def test_load_run_config(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump({"n": 4, "potential": SOFT,
                                    "rho_grid": {"min": 1e-9, "max": 1e-7, "points": 4}}))
    cfg = load_run_config(str(path))
    assert cfg.n == 4
    assert cfg.bounds == ["lower", "upper_first", "upper_second"]
    assert cfg.outputs.format == "csv"
    assert len(cfg.rho_grid.values()) == 4


def test_run_config_must_be_a_mapping(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ReportError):
        read_run_config_data(str(path))
    with pytest.raises(OSError):
        read_run_config_data(str(tmp_path / "absent.yaml"))


def test_sample_configs_are_valid():
    configs = sorted((Path(__file__).resolve().parents[2] / "configs").glob("*.yaml"))
    assert configs
    for path in configs:
        cfg = load_run_config(str(path))
        assert cfg.rho_grid.values().min() > 0
