import subprocess
import sys

import pytest

from figrender import FigureSpec, SchemaError, load_sweep_csv, render
from figrender.cli import main as cli_main
from figrender.renderer import SWEEP_SCHEMA


def sweep_via_simulator(tmp_path, name, *args):
    """Produce a sweep CSV through the simulator's public CLI."""
    out = tmp_path / name
    cmd = [sys.executable, "-m", "scrambling_recovery.cli", *args, "--out", str(out)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture(scope="module")
def ico_csv(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("sweeps")
    return sweep_via_simulator(
        tmp, "ico.csv",
        "scheme-sweep", "--scheme", "ico", "--backend", "clifford",
        "--theta-points", "50",
    )


@pytest.fixture(scope="module")
def emulated_csv(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("sweeps")
    return sweep_via_simulator(
        tmp, "emu.csv",
        "emulate", "--scheme", "ico", "--shots", "400",
        "--theta-points", "12", "--seed", "4",
    )


def write_fixture_csv(path, header=SWEEP_SCHEMA, n_rows=5):
    lines = [",".join(header)]
    for i in range(n_rows):
        theta = i * 0.5
        lines.append(
            f"mdd,clifford,{theta},0.1,0.33,,0.25,0.6,0.9,0.92,,,0,1"
        )
    path.write_text("\n".join(lines) + "\n")
    return path


class TestLoadSweepCsv:
    def test_loads_simulator_output(self, ico_csv):
        rows = load_sweep_csv(ico_csv)
        assert len(rows) == 50
        assert rows[0]["scheme"] == "ico"
        assert rows[0]["sigma_a_x"] is None

    def test_renamed_column_fails_loudly(self, tmp_path):
        bad_header = list(SWEEP_SCHEMA)
        bad_header[5] = "sigma_x"
        path = write_fixture_csv(tmp_path / "bad.csv", header=bad_header)
        with pytest.raises(SchemaError, match="column 5.*sigma_x.*sigma_c_x"):
            load_sweep_csv(path)

    def test_missing_column_fails(self, tmp_path):
        header = list(SWEEP_SCHEMA)[:-1]
        path = tmp_path / "short.csv"
        path.write_text(",".join(header) + "\n" + ",".join(["x"] * len(header)) + "\n")
        with pytest.raises(SchemaError):
            load_sweep_csv(path)

    def test_empty_file_fails(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(SchemaError, match="empty"):
            load_sweep_csv(path)


class TestRenderStructure:
    def test_ico_sigma_panel_is_flat_two_thirds(self, ico_csv, tmp_path):
        spec = FigureSpec(
            inputs=(ico_csv,), panels=("sigma_c_x",), out=tmp_path / "sigma.svg"
        )
        result = render(spec)
        (panel,) = result.panels
        assert panel.image_path.exists()
        data = [s for s in panel.series if s.kind == "data"]
        assert len(data) == 1
        assert data[0].n_points == 50
        assert all(abs(y - 2 / 3) < 1e-9 for y in data[0].y)

    def test_fidelity_series_matches_overlay_pointwise(self, ico_csv, tmp_path):
        spec = FigureSpec(
            inputs=(ico_csv,), panels=("fidelity",), out=tmp_path / "fid.svg"
        )
        result = render(spec)
        (panel,) = result.panels
        data = next(s for s in panel.series if s.kind == "data")
        overlay = next(s for s in panel.series if s.kind == "overlay")
        assert data.n_points == overlay.n_points == 50
        assert data.x == overlay.x
        for a, b in zip(data.y, overlay.y):
            assert abs(a - b) < 1e-9  # exact backend: curve sits on the overlay

    def test_emulated_fidelity_panel_has_error_bars(self, emulated_csv, tmp_path):
        spec = FigureSpec(
            inputs=(emulated_csv,), panels=("fidelity",), out=tmp_path / "emu.svg"
        )
        (panel,) = render(spec).panels
        data = next(s for s in panel.series if s.kind == "data")
        assert data.has_error_bars

    def test_interval_endpoint_dust_is_tolerated(self, tmp_path):
        # A Wilson interval can land a float-epsilon past the estimate at
        # the boundary; the renderer must not reject such rows.
        path = tmp_path / "edge.csv"
        lines = [",".join(SWEEP_SCHEMA)]
        lines.append("ico,clifford,0.0,0.0,0.33,0.66,,0.83,1.0,1.0,0.98,0.9999999999999999,100,1")
        lines.append("ico,clifford,0.5,0.2,0.33,0.66,,0.83,0.9,0.91,0.85,0.95,100,1")
        path.write_text("\n".join(lines) + "\n")
        spec = FigureSpec(inputs=(path,), panels=("fidelity",), out=tmp_path / "e.svg")
        (panel,) = render(spec).panels
        data = next(s for s in panel.series if s.kind == "data")
        assert data.has_error_bars and data.n_points == 2

    def test_exact_sweep_renders_without_error_bars(self, ico_csv, tmp_path):
        spec = FigureSpec(
            inputs=(ico_csv,), panels=("fidelity",), out=tmp_path / "noerr.svg"
        )
        (panel,) = render(spec).panels
        data = next(s for s in panel.series if s.kind == "data")
        assert not data.has_error_bars

    def test_same_csv_same_structure(self, ico_csv, tmp_path):
        spec_a = FigureSpec(
            inputs=(ico_csv,), panels=("fidelity", "sigma_c_x"), out=tmp_path / "a"
        )
        spec_b = FigureSpec(
            inputs=(ico_csv,), panels=("fidelity", "sigma_c_x"), out=tmp_path / "b"
        )
        ra, rb = render(spec_a), render(spec_b)
        for pa, pb in zip(ra.panels, rb.panels):
            assert pa.xlim == pb.xlim and pa.ylim == pb.ylim
            assert len(pa.series) == len(pb.series)
            for sa, sb in zip(pa.series, pb.series):
                assert sa.n_points == sb.n_points
                assert sa.x == sb.x and sa.y == sb.y

    def test_multi_panel_names_files_per_panel(self, ico_csv, tmp_path):
        spec = FigureSpec(
            inputs=(ico_csv,),
            panels=("fidelity", "p_succ"),
            out=tmp_path / "panels",
            format="png",
        )
        result = render(spec)
        names = {p.image_path.name for p in result.panels}
        assert names == {"panels_fidelity.png", "panels_p_succ.png"}
        for p in result.panels:
            assert p.image_path.exists()

    def test_overlay_can_be_disabled(self, ico_csv, tmp_path):
        spec = FigureSpec(
            inputs=(ico_csv,), panels=("fidelity",), out=tmp_path / "x.svg",
            overlay=False,
        )
        (panel,) = render(spec).panels
        assert all(s.kind == "data" for s in panel.series)

    def test_unknown_panel_rejected(self, ico_csv, tmp_path):
        with pytest.raises(SchemaError, match="plottable"):
            FigureSpec(inputs=(ico_csv,), panels=("seed",), out=tmp_path / "x.svg")


class TestCli:
    def test_renders_and_reports(self, ico_csv, tmp_path, capsys):
        out = tmp_path / "fig.svg"
        code = cli_main(
            ["--input", str(ico_csv), "--panel", "fidelity", "--out", str(out)]
        )
        assert code == 0
        assert out.exists()
        assert "wrote" in capsys.readouterr().out

    def test_schema_error_exit_nonzero_naming_column(self, tmp_path, capsys):
        bad_header = list(SWEEP_SCHEMA)
        bad_header[8] = "fidelityy"
        path = write_fixture_csv(tmp_path / "bad.csv", header=bad_header)
        code = cli_main(
            ["--input", str(path), "--panel", "fidelity", "--out", str(tmp_path / "o.svg")]
        )
        assert code == 2
        err = capsys.readouterr().err
        assert "fidelityy" in err and "fidelity" in err
