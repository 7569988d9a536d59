import csv
import io
from dataclasses import replace

import numpy as np
import pytest

from ofqueue.sweep import (
    PRESETS,
    UNSTABLE,
    ReportError,
    SweepSpec,
    SweepTable,
    emit_report,
    preset,
    render_csv,
    render_plot_data,
    run_sweep,
)


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture(scope="module")
def fig5():
    return run_sweep(PRESETS["fig5"])


def test_fig5_header(fig5):
    assert render_csv(fig5).splitlines()[0] == "p,lambda,E_T_si_s,utilization,stable"


def test_fig5_endpoints(fig5):
    rows = [r for r in fig5.rows if r.series_lambda == 30000]
    assert rows[0].x == 0.0 and rows[-1].x == 1.0
    assert rows[0].E_T_si == pytest.approx(1 / 34000, rel=1e-12)
    assert rows[-1].E_T_si == pytest.approx(5e-4, rel=1e-12)
    assert len(rows) == 21


def test_fig6_difference():
    table = run_sweep(PRESETS["fig6"])
    t = {r.x: r.E_T_c for r in table.rows if r.series_lambda == 30000}
    assert t[50] - t[1] == pytest.approx(5.48139309e-6, abs=1e-13)
    assert [r.x for r in table.rows[:3]] == [1, 2, 3]


def test_fig8_all_stable():
    table = run_sweep(PRESETS["fig8"])
    assert len(table.rows) == 63
    assert all(r.stable for r in table.rows)
    assert {r.series_lambda for r in table.rows} == {10000.0, 15000.0, 20000.0}
    assert all(r.n_switches == 10 for r in table.rows)


def test_plot_data_series():
    text = render_plot_data(run_sweep(PRESETS["fig6"]))
    lines = text.splitlines()
    assert lines[0] == "n,E_T_c_s@lambda=20000,E_T_c_s@lambda=25000,E_T_c_s@lambda=30000"
    assert len(lines) == 51
    assert lines[1].startswith("1,3.937007874015748e-06,")


def test_ms_unit(fig5):
    s = rows_of(render_csv(fig5, "s"))
    ms = rows_of(render_csv(fig5, "ms"))
    assert "E_T_si_ms" in ms[0]
    for a, b in zip(s, ms):
        assert float(b["E_T_si_ms"]) == pytest.approx(1e3 * float(a["E_T_si_s"]), rel=1e-15)
        assert a["utilization"] == b["utilization"]


def test_bad_unit(fig5):
    with pytest.raises(ReportError):
        render_csv(fig5, "us")


def test_unstable_marker():
    spec = replace(PRESETS["fig5"], series_lambdas=(40000.0,))
    table = run_sweep(spec)
    rows = rows_of(render_csv(table))
    # utilization is 40000 * (1 + p) / 64000, reaching 1 at p = 0.6
    assert rows[11]["stable"] == "yes" and rows[12]["stable"] == "no"
    assert rows[12]["E_T_si_s"] == UNSTABLE
    assert all(r["E_T_si_s"] == UNSTABLE for r in rows[12:])
    assert float(rows[12]["utilization"]) == pytest.approx(1.0)
    assert UNSTABLE in render_plot_data(table)


def test_empty_table():
    with pytest.raises(ReportError, match="empty sweep"):
        render_csv(SweepTable(PRESETS["fig5"]))
    with pytest.raises(ReportError, match="empty sweep"):
        render_plot_data(SweepTable(PRESETS["fig5"]))


def test_emit_unwritable(tmp_path, fig5):
    with pytest.raises(ReportError):
        emit_report(fig5, "csv", tmp_path / "missing" / "out.csv")
    with pytest.raises(ReportError, match="format"):
        emit_report(fig5, "xlsx", tmp_path / "out.x")


def test_emit_writes(tmp_path, fig5):
    path = emit_report(fig5, "plot-data", tmp_path / "f5.dat")
    assert path.read_text() == render_plot_data(fig5)


def test_deterministic_with_simulation():
    spec = replace(preset("fig5", series_lambdas=(20000.0,)), outputs="both", sim_packets=5000)
    first = render_csv(run_sweep(spec))
    assert first == render_csv(run_sweep(spec))
    assert first.splitlines()[0].endswith("sim_E_T_si_s,sim_E_T_si_hw_s")
    other = render_csv(run_sweep(replace(spec, seed=43)))
    assert other != first


def test_custom_columns():
    spec = SweepSpec(
        preset="custom",
        swept_variable="lambda",
        start=10000.0,
        stop=20000.0,
        step=5000.0,
        fixed=PRESETS["fig8"].fixed,
    )
    rows = rows_of(render_csv(run_sweep(spec)))
    assert list(rows[0]) == [
        "lambda", "n", "p", "E_T_si_s", "E_T_s_s", "E_T_c_s", "E_T_sum_s",
        "utilization", "controller_utilization", "stable",
    ]
    assert [float(r["lambda"]) for r in rows] == [10000.0, 15000.0, 20000.0]
    for r in rows:
        total = float(r["E_T_sum_s"])
        assert total == pytest.approx(float(r["E_T_si_s"]) + float(r["E_T_c_s"]), rel=1e-15)


def test_points_are_clean():
    pts = PRESETS["fig5"].points()
    assert pts[3] == 0.15
    np.testing.assert_allclose(np.diff(pts), 0.05, rtol=1e-9)
