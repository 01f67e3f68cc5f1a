"""End-to-end command line tests, run in process through cli.main."""

import csv
import io
import json
import shutil
from importlib import resources

import pytest

import ionmodes
from ionmodes import experiments
from ionmodes.cli import UsageError, main, parse_int_range
from ionmodes.numerics import NumericalError


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


class TestParseIntRange:
    def test_single(self):
        assert parse_int_range("5") == [5]

    def test_inclusive_range(self):
        assert parse_int_range("2:5") == [2, 3, 4, 5]

    def test_stepped_range(self):
        assert parse_int_range("0:10:2") == [0, 2, 4, 6, 8, 10]

    def test_comma_list(self):
        assert parse_int_range("1,4,9") == [1, 4, 9]

    @pytest.mark.parametrize("bad", ["nope", "3:1", "1:9:0", "1:2:3:4", ""])
    def test_rejects(self, bad):
        with pytest.raises(UsageError):
            parse_int_range(bad)


class TestChain:
    def test_text_report(self, capsys):
        code, out, err = run_cli(capsys, ["chain", "3"])
        assert code == 0
        assert "N = 3" in out
        assert "equilibrium positions" in out
        manifest = json.loads(err)
        assert manifest["command"] == "chain"
        assert manifest["params"]["n_ions"] == 3

    def test_csv_positions(self, capsys):
        code, out, err = run_cli(capsys, ["chain", "3", "--format", "csv"])
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["ion", "position", "frequency"]
        assert len(rows) == 3
        edge = (5.0 / 4.0) ** (1.0 / 3.0)
        positions = [float(r[1]) for r in rows]
        # CSV carries 9 significant digits
        assert abs(positions[0] + edge) < 1e-7
        assert abs(positions[1]) < 1e-12
        assert abs(positions[2] - edge) < 1e-7


class TestNegativity:
    def test_ion_csv(self, capsys):
        code, out, err = run_cli(capsys, [
            "negativity", "--system", "ion", "--chain-size", "30",
            "--region-size", "1", "--separations", "0,1",
            "--treatment", "trace"])
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["system", "chain_size", "region_size", "separation",
                          "treatment", "log_negativity"]
        assert [r[:5] for r in rows] == [
            ["ion", "30", "1", "0", "trace"],
            ["ion", "30", "1", "1", "trace"]]
        values = [float(r[5]) for r in rows]
        assert values[0] > values[1] > 0.0

    def test_scalar_rows_report_chain_size_zero(self, capsys):
        code, out, err = run_cli(capsys, [
            "negativity", "--system", "scalar", "--chain-size", "150",
            "--region-size", "1", "--separations", "1",
            "--treatment", "phi"])
        assert code == 0
        header, rows = parse_csv(out)
        assert rows[0][0] == "scalar"
        assert rows[0][1] == "0"
        assert float(rows[0][5]) > 0.0

    def test_infeasible_separation_left_empty(self, capsys):
        code, out, err = run_cli(capsys, [
            "negativity", "--system", "ion", "--chain-size", "10",
            "--region-size", "4", "--separations", "1,3",
            "--treatment", "trace"])
        assert code == 0
        header, rows = parse_csv(out)
        by_sep = {r[3]: r for r in rows}
        assert by_sep["1"][5] != ""
        assert by_sep["3"][5] == ""
        assert "warning: separation 3 does not fit" in err
        manifest = json.loads(err[err.index("{"):])
        assert manifest["metadata"]["skipped_separations"] == [3]

    def test_json_embeds_manifest_and_rows(self, capsys):
        code, out, err = run_cli(capsys, [
            "negativity", "--system", "ion", "--chain-size", "20",
            "--region-size", "1", "--separations", "1",
            "--treatment", "pi", "--format", "json"])
        assert code == 0
        assert err == ""
        payload = json.loads(out)
        assert payload["manifest"]["command"] == "negativity"
        assert payload["manifest"]["version"] == ionmodes.__version__
        (row,) = payload["rows"]
        assert row["system"] == "ion"
        assert row["separation"] == 1
        assert row["treatment"] == "pi"
        assert row["log_negativity"] > 0.0

    def test_threads_do_not_change_output(self, capsys):
        argv = ["negativity", "--system", "ion", "--chain-size", "30",
                "--region-size", "2", "--separations", "0:3"]
        code1, out1, _ = run_cli(capsys, argv + ["--threads", "1"])
        code4, out4, _ = run_cli(capsys, argv + ["--threads", "4"])
        assert code1 == code4 == 0
        assert out1 == out4


class TestFidelity:
    def test_self_test_csv(self, capsys):
        code, out, err = run_cli(capsys, [
            "fidelity", "--chain-size", "30", "--region-sizes", "2",
            "--self-test"])
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["chain_size", "region_size", "squeeze_z",
                          "fidelity_raw", "fidelity_squeezed"]
        (row,) = rows
        assert row[0] == "30" and row[1] == "2"
        assert abs(float(row[2]) - 1.0) < 1e-3
        assert float(row[3]) > 1.0 - 1e-9
        assert float(row[4]) > 1.0 - 1e-9


class TestFock:
    def test_deficit_csv(self, capsys):
        code, out, err = run_cli(capsys, ["fock", "--dims", "2:3"])
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["qudit_dim", "p_out_raw", "p_out_squeezed"]
        assert [r[0] for r in rows] == ["2", "3"]
        raw = float(rows[0][1])
        assert abs(raw - 1.93e-2) < 1e-4
        assert float(rows[0][2]) < raw


class TestGoldenCheck:
    def test_fock_table_passes(self, capsys):
        code, out, err = run_cli(capsys, ["golden-check", "--table", "7"])
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["table", "row", "column", "golden", "computed",
                          "tolerance", "status"]
        assert rows and all(r[6] == "pass" for r in rows)
        assert "table 7:" in err and "pass" in err

    def test_perturbed_golden_fails(self, capsys, tmp_path):
        src = resources.files("ionmodes.data").joinpath("table7.csv")
        lines = src.read_text().splitlines()
        parts = lines[1].split(",")
        parts[1] = "2.9e-2"  # true value 1.93e-2
        lines[1] = ",".join(parts)
        (tmp_path / "table7.csv").write_text("\n".join(lines) + "\n")
        code, out, err = run_cli(capsys, [
            "golden-check", "--table", "7", "--golden-dir", str(tmp_path)])
        assert code == 3
        header, rows = parse_csv(out)
        failing = [r for r in rows if r[6] == "FAIL"]
        assert len(failing) == 1
        assert failing[0][2] == "p_out_raw"
        assert "FAIL table 7" in err and "p_out_raw" in err


class TestExitCodes:
    def test_missing_subcommand_is_usage_error(self, capsys):
        code, out, err = run_cli(capsys, [])
        assert code == 1
        assert "error:" in err

    def test_missing_required_flag_is_usage_error(self, capsys):
        code, out, err = run_cli(capsys, [
            "negativity", "--region-size", "1", "--separations", "1"])
        assert code == 1

    def test_bad_range_is_usage_error(self, capsys):
        code, out, err = run_cli(capsys, [
            "negativity", "--system", "ion", "--region-size", "1",
            "--separations", "one"])
        assert code == 1
        assert "cannot parse integer range" in err

    def test_numerical_failure_exit(self, capsys, monkeypatch):
        def boom(*args, **kwargs):
            raise NumericalError("synthetic failure")

        monkeypatch.setattr(experiments, "negativity_rows", boom)
        code, out, err = run_cli(capsys, [
            "negativity", "--system", "ion", "--chain-size", "10",
            "--region-size", "1", "--separations", "1"])
        assert code == 2
        assert "numerical failure: synthetic failure" in err


class TestManifestFile:
    def test_out_writes_manifest_sibling(self, capsys, tmp_path):
        out_path = tmp_path / "rows.csv"
        code, out, err = run_cli(capsys, [
            "fock", "--dims", "2", "--out", str(out_path)])
        assert code == 0
        assert out == ""
        header, rows = parse_csv(out_path.read_text())
        assert header == ["qudit_dim", "p_out_raw", "p_out_squeezed"]
        manifest = json.loads((tmp_path / "rows.csv.manifest.json").read_text())
        assert manifest["command"] == "fock"
        assert manifest["version"] == ionmodes.__version__
        assert manifest["wall_ms"] > 0.0
        assert manifest["tolerances"]["golden_slack_default"] == 0.6
        assert manifest["params"]["dims"] == "2"
