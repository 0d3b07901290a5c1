"""Rendering tests over committed fixture CSVs.

The fixtures were produced by the benchmark CLI once and are checked in;
nothing here imports or reruns the simulation package.
"""

import sys
from pathlib import Path

import pytest

from dqcplots.reader import SchemaMismatchError, read_table
from dqcplots.render import KINDS, main, render

FIXTURES = Path(__file__).parent / "fixtures"

FIXTURE_FOR_KIND = {
    "error-fidelity": "error_sweep.csv",
    "calibration-fit": "error_sweep.csv",
    "hop-lxe": "error_sweep.csv",
    "size-hop": "size_sweep.csv",
    "ent-robustness": "ent_sweep.csv",
    "approx-band": "predict.csv",
}


def test_no_simulation_package_imported():
    assert "dqcbench" not in sys.modules


class TestReader:
    def test_happy_path(self):
        table = read_table(FIXTURES / "error_sweep.csv")
        assert table.command == "error-sweep"
        assert "agf_sim" in table.columns
        assert len(table.rows) > 0

    def test_version_mismatch_names_both_versions(self, tmp_path):
        lines = (FIXTURES / "error_sweep.csv").read_text().splitlines()
        lines[0] = "# dqcbench-csv v99 error-sweep"
        bad = tmp_path / "v99.csv"
        bad.write_text("\n".join(lines))
        with pytest.raises(SchemaMismatchError, match="expected v1.*found v99"):
            read_table(bad)

    def test_foreign_file_rejected(self, tmp_path):
        bad = tmp_path / "foreign.csv"
        bad.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(SchemaMismatchError, match="header"):
            read_table(bad)

    def test_empty_data_rejected(self, tmp_path):
        lines = (FIXTURES / "error_sweep.csv").read_text().splitlines()
        bad = tmp_path / "empty.csv"
        bad.write_text("\n".join(lines[:2]) + "\n")
        with pytest.raises(ValueError, match="no data rows"):
            read_table(bad)

    def test_missing_column_named_in_error(self):
        table = read_table(FIXTURES / "predict.csv")
        with pytest.raises(SchemaMismatchError, match="'hop'"):
            table.column("hop")


@pytest.mark.parametrize("kind", sorted(KINDS))
class TestEveryKind:
    def test_renders_both_formats(self, kind, tmp_path):
        written = render(kind, FIXTURES / FIXTURE_FOR_KIND[kind],
                         tmp_path / "fig.png")
        assert [p.suffix for p in written] == [".png", ".svg"]
        for path in written:
            assert path.stat().st_size > 1000

    def test_pixel_deterministic_across_runs(self, kind, tmp_path):
        src = FIXTURES / FIXTURE_FOR_KIND[kind]
        first = render(kind, src, tmp_path / "a")
        second = render(kind, src, tmp_path / "b")
        for one, two in zip(first, second):
            assert one.read_bytes() == two.read_bytes(), one.suffix


class TestCli:
    def test_render_success(self, tmp_path, capsys):
        out = tmp_path / "fig.svg"
        code = main(["render", "--kind", "hop-lxe",
                     "--in", str(FIXTURES / "error_sweep.csv"),
                     "--out", str(out)])
        assert code == 0
        assert (tmp_path / "fig.png").exists() and out.exists()
        assert "fig.png" in capsys.readouterr().out

    def test_wrong_schema_exits_nonzero(self, tmp_path, capsys):
        bad = tmp_path / "v0.csv"
        bad.write_text("# dqcbench-csv v0 error-sweep\na\n1\n")
        code = main(["render", "--kind", "hop-lxe", "--in", str(bad),
                     "--out", str(tmp_path / "fig.png")])
        assert code != 0
        err = capsys.readouterr().err
        assert "expected v1" in err and "found v0" in err
        assert not (tmp_path / "fig.png").exists()

    def test_empty_csv_writes_no_image(self, tmp_path, capsys):
        lines = (FIXTURES / "ent_sweep.csv").read_text().splitlines()
        empty = tmp_path / "empty.csv"
        empty.write_text("\n".join(lines[:2]) + "\n")
        code = main(["render", "--kind", "ent-robustness", "--in", str(empty),
                     "--out", str(tmp_path / "fig.png")])
        assert code != 0
        assert "no data rows" in capsys.readouterr().err
        assert not list(tmp_path.glob("fig.*"))

    def test_kind_column_mismatch_reports_missing(self, tmp_path, capsys):
        code = main(["render", "--kind", "size-hop",
                     "--in", str(FIXTURES / "predict.csv"),
                     "--out", str(tmp_path / "fig.png")])
        assert code != 0
        assert "missing" in capsys.readouterr().err
