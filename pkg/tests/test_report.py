import json
from datetime import datetime
from pathlib import Path

from edrsim.cli.config import parse_config
from edrsim.edr.relations import Method
from edrsim.records.report import ReportJSONEncoder, SweepReport, render_report, write_report
from edrsim.runners.sweep_runner import run_sweep
from tests.mock_states import point_with_defaults


def test_written_report_keeps_config_rows_and_repetitions(tmp_path: Path):
    cfg = parse_config(grid=[0.5], methods=["weak_probe"], mode="mc", total=10_000, reps=2)
    rows = run_sweep(cfg)
    report = SweepReport(config=cfg, rows=rows, created=datetime(2024, 5, 21, 12, 0))
    path = tmp_path / "report.json"
    write_report(report, path)

    data = json.loads(path.read_text())
    assert parse_config(**data["config"]) == cfg
    assert data["created"] == "2024-05-21T12:00:00"
    (row,) = data["rows"]
    assert row["method"] == "weak_probe"
    assert row["eps"] == rows[0].eps
    assert [point["eps"] for point in row["repetitions"]] == [p.eps for p in rows[0].repetitions]
    assert row["repetitions"][0]["method"] == "weak_probe"


def test_rendered_report_is_plain_json():
    cfg = parse_config(grid=[0.5], methods=["direct"])
    data = json.loads(render_report(SweepReport(config=cfg, rows=run_sweep(cfg))))
    assert data["config"]["mode"] == "exact"
    assert data["config"]["apparatus"] == "ideal"
    row = data["rows"][0]
    assert row["method"] == "direct"
    assert row["eps_err"] is None
    assert row["repetitions"] == []


def test_encoder_writes_points_as_tables():
    point = point_with_defaults(method=Method.THREE_STATE)
    data = json.loads(json.dumps(point, cls=ReportJSONEncoder))
    assert data["method"] == "three_state"
    assert data["eps"] == point.eps
