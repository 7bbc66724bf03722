import csv

import pytest

from ppplot import KINDS, PlotJob, SchemaError, render
from ppplot.cli import main as cli_main
from conftest import write_csv


@pytest.mark.parametrize("kind", KINDS)
def test_every_kind_renders_png(kind, fixture_csv, tmp_path):
    out = tmp_path / f"{kind}.png"
    got = render(PlotJob(kind=kind, inputs=(fixture_csv(kind),), out=out))
    assert got == out
    assert out.stat().st_size > 1000


def test_svg_output(fixture_csv, tmp_path):
    out = tmp_path / "sweep.svg"
    render(PlotJob(kind="sweep", inputs=(fixture_csv("sweep"),), out=out))
    assert out.read_bytes().lstrip().startswith(b"<?xml")


@pytest.mark.parametrize("kind", KINDS)
def test_missing_column_raises_and_writes_nothing(kind, fixture_csv, tmp_path):
    src = fixture_csv(kind)
    rows = list(csv.reader(open(src)))
    drop = 0  # strip the first required column
    broken = write_csv(
        tmp_path / "broken.csv",
        [c for i, c in enumerate(rows[0]) if i != drop],
        [[c for i, c in enumerate(r) if i != drop] for r in rows[1:]],
    )
    out = tmp_path / "broken.png"
    with pytest.raises(SchemaError) as err:
        render(PlotJob(kind=kind, inputs=(broken,), out=out))
    assert rows[0][drop] in str(err.value)  # offending column is named
    assert not out.exists()


def test_empty_csv_rejected(fixture_csv, tmp_path):
    src = fixture_csv("sweep")
    header = open(src).readline()
    empty = tmp_path / "empty.csv"
    empty.write_text(header)
    out = tmp_path / "empty.png"
    with pytest.raises(SchemaError, match="no data rows"):
        render(PlotJob(kind="sweep", inputs=(empty,), out=out))
    assert not out.exists()


def test_unknown_kind_rejected(fixture_csv, tmp_path):
    with pytest.raises(SchemaError):
        render(PlotJob(kind="nope", inputs=(fixture_csv("sweep"),), out=tmp_path / "x.png"))


def test_timeseries_delta_with_baseline(fixture_csv, tmp_path):
    main = fixture_csv("timeseries-delta", "main.csv")
    rows = [[96 * k, 10 * k, 0.003 * k] for k in range(40)]
    base = write_csv(tmp_path / "base.csv", ["time_s", "completed", "mean_density"], rows)
    out = tmp_path / "delta.png"
    render(PlotJob(kind="timeseries-delta", inputs=(main, base), out=out))
    assert out.exists()
    short = write_csv(tmp_path / "short.csv", ["time_s", "completed", "mean_density"],
                      rows[:10])
    with pytest.raises(SchemaError, match="length"):
        render(PlotJob(kind="timeseries-delta", inputs=(main, short), out=tmp_path / "n.png"))


def test_pressure_profile_cycle_selection(fixture_csv, tmp_path):
    src = fixture_csv("pressure-profile")
    out = tmp_path / "p.png"
    render(PlotJob(kind="pressure-profile", inputs=(src,), out=out, options={"cycle": 2}))
    assert out.exists()
    with pytest.raises(SchemaError, match="cycle 9"):
        render(PlotJob(kind="pressure-profile", inputs=(src,), out=tmp_path / "q.png",
                       options={"cycle": 9}))


def test_rendering_is_deterministic(fixture_csv, tmp_path):
    src = fixture_csv("heatmap")
    a = render(PlotJob(kind="heatmap", inputs=(src,), out=tmp_path / "a.png"))
    b = render(PlotJob(kind="heatmap", inputs=(src,), out=tmp_path / "b.png"))
    assert a.read_bytes() == b.read_bytes()


def test_inputs_never_mutated(fixture_csv, tmp_path):
    src = fixture_csv("robustness")
    before = src.read_bytes()
    render(PlotJob(kind="robustness", inputs=(src,), out=tmp_path / "r.png"))
    assert src.read_bytes() == before


def test_cli_roundtrip_and_exit_codes(fixture_csv, tmp_path, capsys):
    src = fixture_csv("sweep")
    out = tmp_path / "cli.png"
    assert cli_main(["sweep", "--in", str(src), "--out", str(out)]) == 0
    assert out.exists()
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    rc = cli_main(["sweep", "--in", str(bad), "--out", str(tmp_path / "bad.png")])
    assert rc != 0
    assert "missing column" in capsys.readouterr().err
    assert not (tmp_path / "bad.png").exists()
