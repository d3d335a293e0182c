import math
from pathlib import Path

import pytest

from edrsim.cli.config import parse_config
from edrsim.edr.relations import Method, RelationKind
from edrsim.runners.sweep_runner import (
    BOUND_COLUMNS,
    FIGURE_COLUMNS,
    build_chains,
    emit_bounds_curve,
    evaluate_point,
    format_cell,
    render_csv,
    run_sweep,
    write_bounds_csv,
    write_figure_csv,
)
from edrsim.simulation.circuit import Basis, Quantity
from tests.mock_states import POST_WP_C


def test_format_cell():
    assert format_cell(None) == ""
    assert format_cell(math.inf) == ""
    assert format_cell(True) == "true"
    assert format_cell(False) == "false"
    assert format_cell(Method.THREE_STATE) == "three_state"
    assert format_cell(0.1) == "0.1"
    assert format_cell(1) == "1.0"


def test_build_chains_for_ideal_and_imperfect_apparatus():
    error_cfg, disturbance_cfg = build_chains(parse_config(), 0.5)
    assert error_cfg.quantity == Quantity.ERROR
    assert disturbance_cfg.wp.basis == Basis.X
    assert error_cfg.ma.ideal

    imperfect = build_chains(parse_config(apparatus={}), 0.5)
    assert all(not chain.ma.ideal for chain in imperfect)
    assert len(imperfect[0].ma.kraus.operators) == 4


def test_direct_sweep_on_small_grid():
    rows = run_sweep(parse_config(grid=[0.0, 0.5, 1.0], methods=["direct"]), max_workers=2)
    assert [row.strength for row in rows] == [0.0, 0.5, 1.0]
    assert [row.eps for row in rows] == pytest.approx([math.sqrt(2), 1.0, 0.0], abs=1e-10)
    assert [row.eta for row in rows] == pytest.approx(
        [0.0, math.sqrt(2 - math.sqrt(3)), math.sqrt(2)], abs=1e-10
    )
    for row in rows:
        assert row.c_bound == pytest.approx(POST_WP_C, abs=1e-12)
        assert row.eps_err is None
        assert row.ozawa_ok and row.branciard_ok


def test_heisenberg_violated_at_intermediate_strength():
    (row,) = run_sweep(parse_config(grid=[0.7071], methods=["direct"]))
    assert row.c_bound == pytest.approx(0.99458, abs=1e-5)
    assert row.lhs_heisenberg == pytest.approx(0.5858, abs=1e-3)
    assert not row.heisenberg_ok
    assert row.ozawa_ok
    assert row.branciard_ok
    assert row.branciard_tight_ok


def test_all_methods_agree_in_exact_mode():
    rows = run_sweep(parse_config(grid=[0.25, 0.8]))
    assert [(row.strength, row.method) for row in rows] == [
        (0.25, Method.DIRECT),
        (0.25, Method.THREE_STATE),
        (0.25, Method.WEAK_PROBE),
        (0.8, Method.DIRECT),
        (0.8, Method.THREE_STATE),
        (0.8, Method.WEAK_PROBE),
    ]
    for start in (0, 3):
        direct, *others = rows[start : start + 3]
        for other in others:
            assert other.eps == pytest.approx(direct.eps, abs=1e-9)
            assert other.eta == pytest.approx(direct.eta, abs=1e-9)


def test_rows_are_sorted_regardless_of_grid_order():
    rows = run_sweep(parse_config(grid=[1.0, 0.0, 0.5], methods=["weak_probe", "direct"]))
    assert [(row.strength, row.method.value) for row in rows] == [
        (0.0, "direct"),
        (0.0, "weak_probe"),
        (0.5, "direct"),
        (0.5, "weak_probe"),
        (1.0, "direct"),
        (1.0, "weak_probe"),
    ]


def test_empty_grid_gives_header_only(figure_rows_header_path: Path):
    rows = run_sweep(parse_config(grid=[]))
    assert rows == []
    assert render_csv(FIGURE_COLUMNS, rows) == figure_rows_header_path.read_text()


def test_figure_csv_header_matches_golden_file(tmp_path: Path, figure_rows_header_path: Path):
    rows = run_sweep(parse_config(grid=[0.5], methods=["direct"]))
    path = tmp_path / "figure.csv"
    write_figure_csv(rows, path)
    header, line = path.read_text().splitlines()
    assert header == figure_rows_header_path.read_text().strip()
    cells = dict(zip(FIGURE_COLUMNS, line.split(",")))
    assert cells["method"] == "direct"
    assert cells["eps_err"] == ""
    assert cells["ozawa_ok"] == "true"
    assert float(cells["eps"]) == pytest.approx(1.0, abs=1e-10)


def test_invalid_worker_count():
    with pytest.raises(ValueError):
        run_sweep(parse_config(grid=[0.5]), max_workers=0)


def test_monte_carlo_sweep_is_deterministic():
    cfg = parse_config(
        grid=[0.3, 0.6], methods=["weak_probe"], mode="mc", total=20_000, reps=2, seed=5
    )
    first = run_sweep(cfg, max_workers=2)
    second = run_sweep(cfg, max_workers=1)
    assert [(row.eps, row.eta) for row in first] == [(row.eps, row.eta) for row in second]
    for row in first:
        assert row.method == Method.WEAK_PROBE
        assert row.eps_err is not None and row.eta_err is not None
        assert len(row.repetitions) == 2


def test_monte_carlo_point_uses_grid_index_stream():
    cfg = parse_config(methods=["weak_probe"], mode="mc", total=20_000, reps=1, seed=5)
    (at_zero,) = evaluate_point(cfg, 0, 0.5)
    (at_one,) = evaluate_point(cfg, 1, 0.5)
    assert at_zero.eps != at_one.eps
    assert at_zero.eps_err is None


def test_imperfect_apparatus_lifts_projective_error():
    (row,) = run_sweep(parse_config(grid=[1.0], methods=["direct"], apparatus={}))
    assert row.eps > 0.1
    assert row.ozawa_ok


def test_run_log_records_config_and_rows(tmp_path: Path):
    run_log = tmp_path / "logs" / "run.log"
    run_sweep(parse_config(grid=[0.5], methods=["direct"]), run_log=run_log)
    text = run_log.read_text()
    assert "Config:" in text
    assert "strength=0.5 method=direct" in text


def test_bounds_curve_marks_infinite_bound_as_empty(tmp_path: Path):
    rows = emit_bounds_curve(RelationKind.HEISENBERG, 1.0, [0.0, 0.5, 2.0])
    assert [row.min_eta for row in rows] == [math.inf, 2.0, 0.5]
    path = tmp_path / "bounds.csv"
    write_bounds_csv(rows, path)
    assert path.read_text() == "eps,min_eta\n0.0,\n0.5,2.0\n2.0,0.5\n"


def test_ozawa_bounds_curve():
    rows = emit_bounds_curve("ozawa", 1.0, [0.0, 0.5, 1.0, 1.5])
    assert [row.min_eta for row in rows] == pytest.approx([1.0, 1 / 3, 0.0, 0.0])
    assert render_csv(BOUND_COLUMNS, rows).startswith("eps,min_eta\n")
