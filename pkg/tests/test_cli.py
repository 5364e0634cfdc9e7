"""CLI contract tests: flags, exit codes, output determinism."""

import json

import pytest

from xsdof import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestRegionCommand:
    def test_sdof_corners_json(self, capsys):
        code, out, _ = run_cli(
            capsys, "region", "--M", "2", "--N", "3", "--model", "asym-fb-dcsit"
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["labels"]["symmetric"] == {
            "x": {"num": 3, "den": 4},
            "y": {"num": 3, "den": 4},
        }
        assert doc["labels"]["axis_rx1"]["x"] == {"num": 12, "den": 13}

    def test_dof_region(self, capsys):
        code, out, _ = run_cli(capsys, "region", "--M", "2", "--N", "3", "--model", "dof")
        assert code == 0
        doc = json.loads(out)
        assert doc["labels"]["symmetric"]["x"] == {"num": 12, "den": 7}

    def test_degenerate_region_is_origin(self, capsys):
        code, out, _ = run_cli(capsys, "region", "--M", "1", "--N", "3", "--model", "sym-fb")
        assert code == 0
        doc = json.loads(out)
        assert doc["vertices"] == [{"x": {"num": 0, "den": 1}, "y": {"num": 0, "den": 1}}]

    def test_csv_carries_exact_columns(self, capsys):
        code, out, _ = run_cli(
            capsys, "region", "--M", "2", "--N", "3", "--format", "csv"
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "point,x_exact,y_exact,x,y"
        assert any(line.startswith("symmetric,3/4,3/4,") for line in lines)

    def test_usage_error_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["region", "--M", "2"])  # missing --N
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            cli.main(["region", "--M", "2", "--N", "3", "--model", "bogus"])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            cli.main(["region", "--M", "0", "--N", "3"])  # domain misuse
        assert exc.value.code == 2


class TestSimulateCommand:
    def test_scheme_b_summary(self, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "--scheme", "B", "--M", "1", "--N", "1",
            "--trials", "3", "--seed", "7",
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 4  # three trials + summary
        summary = json.loads(lines[-1])["summary"]
        assert summary["decode_success_rate"] == 1.0
        assert summary["max_leak_defect"] == 0
        assert summary["empirical_dof"]["rx1"] == {"num": 1, "den": 2}

    def test_regime_refusal_exit_3(self, capsys):
        code, _, err = run_cli(
            capsys, "simulate", "--scheme", "A", "--M", "1", "--N", "3", "--trials", "1"
        )
        assert code == 3
        assert "2m <= n" in err

    def test_byte_identical_for_same_flags_and_seed(self, capsys):
        argv = ["simulate", "--scheme", "A", "--M", "2", "--N", "3",
                "--trials", "2", "--seed", "11"]
        _, first, _ = run_cli(capsys, *argv)
        _, second, _ = run_cli(capsys, *argv)
        assert first == second

    def test_scheme_c_emits_discrepancy(self, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "--scheme", "C", "--M", "2", "--N", "3",
            "--trials", "1", "--seed", "0",
        )
        assert code == 0
        summary = json.loads(out.strip().splitlines()[-1])["summary"]
        flag = summary["inner_bound_discrepancy"]
        assert flag["flagged"] is True
        assert flag["scheme_point"] == {"num": 4, "den": 7}
        assert flag["intersection_point"] == {"num": 16, "den": 31}

    def test_env_seed_default(self, capsys, monkeypatch):
        monkeypatch.setenv("XSDOF_SEED", "5")
        code, out, _ = run_cli(
            capsys, "simulate", "--scheme", "B", "--M", "1", "--N", "1", "--trials", "1"
        )
        assert code == 0
        assert json.loads(out.splitlines()[0])["seed"] == 5

    def test_csv_format(self, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "--scheme", "B", "--M", "1", "--N", "1",
            "--trials", "1", "--format", "csv",
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("seed,decode_ok")
        assert lines[1].split(",")[-2] == "1/2"  # exact fraction sibling column


class TestTableCommand:
    def test_values(self, capsys):
        code, out, _ = run_cli(capsys, "table", "--N", "4", "--M-max", "8")
        assert code == 0
        rows = json.loads(out)["rows"]
        row4 = rows[3]
        assert row4["total_sdof"] == {"num": 4, "den": 1}
        assert row4["total_dof_fb_dcsit"] == {"num": 16, "den": 3}
        assert row4["total_dof_no_fb_no_csit"] == {"num": 4, "den": 1}
        row3 = rows[2]
        assert row3["total_sdof"] == {"num": 8, "den": 3}
        assert row3["total_dof_fb_dcsit"] == {"num": 24, "den": 5}

    def test_csv(self, capsys):
        code, out, _ = run_cli(capsys, "table", "--N", "1", "--M-max", "1", "--format", "csv")
        assert code == 0
        assert out.strip().splitlines()[1] == "1,1,1,4/3,1.33333333333,1,1"


class TestVerifyCommand:
    def test_nesting_suite_passes(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--suite", "nesting")
        assert code == 0
        assert "PASS region nesting 1..6" in out

    def test_unknown_suite_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["verify", "--suite", "everything"])
        assert exc.value.code == 2

    def test_mutants_suite(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--suite", "mutants", "--seed", "3")
        assert code == 0
        assert out.count("PASS mutant") == 3
