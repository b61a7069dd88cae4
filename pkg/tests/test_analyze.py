"""Tests for scripts/analyze.py: result tables, exit codes and metadata."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import pandas as pd

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from tests.conftest import TWELVE_UNITS  # noqa: E402

WATE_LABELS = ["overall", "treated", "control", "overlap", "matching", "entropy"]


def _args(csv_path, out_dir, *extra):
    return ["--input", csv_path, "--covariate-cols", "X1,X2,X3", "--out", str(out_dir), *extra]


def _stderr_error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


class TestPointEstimates:
    """Default run without bootstrap."""

    def test_default_wate_table(self, analysis_csv, tmp_path):
        from scripts.analyze import main

        out = tmp_path / "res"
        assert main(_args(analysis_csv, out)) == 0
        text = (out / "wate.csv").read_text()
        assert text.splitlines()[0].startswith("label,Est,Std.Err,Upr,Lwr")
        table = pd.read_csv(out / "wate.csv")
        assert list(table["label"]) == WATE_LABELS
        assert table["Std.Err"].isna().all()
        assert table["Upr"].isna().all()
        assert (table["status"] == "ok").all()

    def test_metadata_describes_fit(self, analysis_csv, tmp_path):
        from scripts.analyze import main

        out = tmp_path / "res"
        assert main(_args(analysis_csv, out)) == 0
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["dataset"]["N"] == 300
        assert meta["ps"]["source"] == "fitted"
        assert meta["ps"]["converged"] is True
        assert list(meta["ps"]["coefficients"]) == ["(intercept)", "X1", "X2", "X3"]
        assert meta["bootstrap"] is None

    def test_classes_and_variants(self, analysis_csv, tmp_path):
        from scripts.analyze import main

        out = tmp_path / "res"
        code = main(_args(analysis_csv, out, "--class", "wate,watt,watc", "--trim-alpha", "0.1"))
        assert code == 0
        wate = pd.read_csv(out / "wate.csv")
        watt = pd.read_csv(out / "watt.csv")
        assert list(wate["label"])[-1] == "trimming (alpha=0.1)"
        assert list(watt["estimand"])[:4] == ["ATT", "OWATT", "MWATT", "EWATT"]
        assert (out / "watc.csv").exists()

    def test_json_format(self, analysis_csv, tmp_path):
        from scripts.analyze import RESULT_COLUMNS, main

        out = tmp_path / "res"
        assert main(_args(analysis_csv, out, "--format", "json")) == 0
        payload = json.loads((out / "wate.json").read_text())
        assert payload["columns"] == RESULT_COLUMNS
        assert [r["label"] for r in payload["rows"]] == WATE_LABELS
        assert payload["rows"][0]["Std.Err"] is None

    def test_config_file_with_flag_override(self, analysis_csv, tmp_path):
        from scripts.analyze import main

        cfg = tmp_path / "analyze.json"
        cfg.write_text(
            json.dumps(
                {"input": analysis_csv, "covariate_cols": ["X1", "X2", "X3"], "schemes": ["ow"]}
            )
        )
        out = tmp_path / "res"
        assert main(["--config", str(cfg), "--out", str(out), "--schemes", "ow,ipw"]) == 0
        assert list(pd.read_csv(out / "wate.csv")["label"]) == ["overlap", "overall"]


class TestBootstrap:
    """Bootstrap columns and replicate dumps."""

    def test_boot_fills_interval(self, analysis_csv, tmp_path):
        from scripts.analyze import main

        out = tmp_path / "res"
        dump = tmp_path / "reps.csv"
        code = main(
            _args(
                analysis_csv, out, "--schemes", "ow,ipw", "--boot", "--n-boot", "20",
                "--seed", "4399", "--dump-replicates", str(dump),
            )
        )
        assert code == 0
        table = pd.read_csv(out / "wate.csv")
        assert (table["Std.Err"] > 0).all()
        assert (table["Lwr"] < table["Est"]).all()
        assert (table["Est"] < table["Upr"]).all()
        assert (table["ci_method"] == "normal").all()
        reps = pd.read_csv(dump)
        assert len(reps) == 2 * 20
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["bootstrap"]["B"] == 20
        assert meta["bootstrap"]["ps_uncertainty_ignored"] is False

    def test_same_seed_reproduces_table(self, analysis_csv, tmp_path):
        from scripts.analyze import main

        extra = ("--schemes", "ow", "--boot", "--n-boot", "15", "--seed", "7")
        assert main(_args(analysis_csv, tmp_path / "a", *extra)) == 0
        assert main(_args(analysis_csv, tmp_path / "b", *extra)) == 0
        assert (tmp_path / "a" / "wate.csv").read_text() == (tmp_path / "b" / "wate.csv").read_text()

    def test_binary_ratio_measures_lognormal(self, binary_csv, tmp_path):
        from scripts.analyze import main

        out = tmp_path / "res"
        code = main(
            _args(
                binary_csv, out, "--outcome-kind", "binary", "--measures", "RR,OR",
                "--schemes", "ow", "--boot", "--n-boot", "20", "--ci-method", "lognormal",
            )
        )
        assert code == 0
        table = pd.read_csv(out / "wate.csv")
        assert list(table["measure"]) == ["RR", "OR"]
        assert (table["Lwr"] > 0).all()

    def test_provided_ps_marks_uncertainty_ignored(self, write_dataset_csv, tmp_path):
        from scripts.analyze import main

        path = write_dataset_csv(
            {
                "A": [u[0] for u in TWELVE_UNITS],
                "Y": [u[1] for u in TWELVE_UNITS],
                "ps": [u[2] for u in TWELVE_UNITS],
            },
            name="twelve.csv",
        )
        out = tmp_path / "res"
        code = main(
            ["--input", path, "--ps-col", "ps", "--schemes", "ow", "--boot", "--n-boot", "10",
             "--out", str(out)]
        )
        assert code == 0
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["ps"]["source"] == "provided"
        assert meta["bootstrap"]["ps_uncertainty_ignored"] is True


class TestExitCodes:
    """User errors exit 1, computational failures exit 2."""

    def test_bad_flag_value(self, analysis_csv, tmp_path, capsys):
        from scripts.analyze import main

        assert main(_args(analysis_csv, tmp_path, "--n-boot", "many")) == 1
        err = _stderr_error(capsys)
        assert err["kind"] == "user"
        assert err["error"] == "UsageError"

    def test_lognormal_with_difference_rejected(self, analysis_csv, tmp_path, capsys):
        from scripts.analyze import main

        assert main(_args(analysis_csv, tmp_path, "--boot", "--ci-method", "lognormal")) == 1
        assert "lognormal" in _stderr_error(capsys)["message"]

    def test_missing_input_file(self, tmp_path, capsys):
        from scripts.analyze import main

        assert main(_args(str(tmp_path / "absent.csv"), tmp_path)) == 1
        assert "not found" in _stderr_error(capsys)["message"]

    def test_missing_column(self, analysis_csv, tmp_path, capsys):
        from scripts.analyze import main

        assert main(_args(analysis_csv, tmp_path, "--treatment-col", "T")) == 1
        assert "missing column 'T'" in _stderr_error(capsys)["message"]

    def test_all_rows_failing_is_computation_error(self, write_dataset_csv, tmp_path, capsys):
        from scripts.analyze import main

        path = write_dataset_csv(
            {
                "A": [u[0] for u in TWELVE_UNITS],
                "Y": [u[1] for u in TWELVE_UNITS],
                "ps": [u[2] for u in TWELVE_UNITS],
            },
        )
        out = tmp_path / "res"
        assert main(["--input", path, "--ps-col", "ps", "--schemes", "trim:0.45", "--out", str(out)]) == 2
        assert _stderr_error(capsys)["kind"] == "computation"
        table = pd.read_csv(out / "wate.csv")
        assert table["status"].iloc[0].startswith("error: degenerate weighted arm")
