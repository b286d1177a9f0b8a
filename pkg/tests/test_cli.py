import json

import numpy as np
import pytest

from scrambling_recovery.cli import (
    ITERATE_COLUMNS,
    PREDICT_COLUMNS,
    SWEEP_COLUMNS,
    main,
    read_rows,
)
from scrambling_recovery.calibration import save_calibration, synthesize_calibration


def run(*argv):
    return main(list(argv))


class TestSchemeSweep:
    def test_mdd_clifford_sweep_pole_value(self, tmp_path):
        out = tmp_path / "mdd.csv"
        assert run(
            "scheme-sweep", "--scheme", "mdd", "--backend", "clifford",
            "--theta-points", "50", "--out", str(out),
        ) == 0
        header, rows = read_rows(out)
        assert header == list(SWEEP_COLUMNS)
        assert len(rows) == 50
        assert float(rows[0]["fidelity_analytic"]) == pytest.approx(1.0, abs=1e-15)
        assert float(rows[0]["fidelity"]) == pytest.approx(1.0, abs=1e-12)

    def test_ico_sigma_column_constant(self, tmp_path):
        out = tmp_path / "ico.csv"
        assert run(
            "scheme-sweep", "--scheme", "ico", "--backend", "clifford",
            "--theta-points", "25", "--out", str(out),
        ) == 0
        _, rows = read_rows(out)
        for row in rows:
            assert float(row["sigma_c_x"]) == pytest.approx(2 / 3, abs=1e-12)
            assert row["ci_low"] == "" and row["ci_high"] == ""

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["scheme-sweep", "--scheme", "combined", "--backend", "clifford",
                "--theta-points", "11", "--seed", "7"]
        assert run(*args, "--out", str(a)) == 0
        assert run(*args, "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_haar_backend_requires_seed(self, tmp_path):
        code = run(
            "scheme-sweep", "--scheme", "ico", "--backend", "haar:100",
            "--theta-points", "3", "--out", str(tmp_path / "x.csv"),
        )
        assert code == 2

    def test_haar_backend_with_seed_runs(self, tmp_path):
        out = tmp_path / "haar.csv"
        assert run(
            "scheme-sweep", "--scheme", "ico", "--backend", "haar:2000",
            "--theta-points", "3", "--seed", "11", "--out", str(out),
        ) == 0
        _, rows = read_rows(out)
        for row in rows:
            assert abs(float(row["sigma_c_x"]) - 2 / 3) < 0.1

    def test_json_format_mirrors_csv(self, tmp_path):
        out = tmp_path / "sweep.json"
        assert run(
            "scheme-sweep", "--scheme", "ico", "--backend", "clifford",
            "--theta-points", "4", "--out", str(out), "--format", "json",
        ) == 0
        payload = json.loads(out.read_text())
        assert payload["columns"] == list(SWEEP_COLUMNS)
        assert len(payload["rows"]) == 4
        assert payload["rows"][0]["fidelity_analytic"] == pytest.approx(0.8)


class TestIterate:
    def test_ico_five_steps(self, tmp_path):
        out = tmp_path / "it.csv"
        assert run(
            "iterate", "--variant", "ico", "--p0", repr(1 / 3), "--steps", "5",
            "--out", str(out),
        ) == 0
        header, rows = read_rows(out)
        assert header == list(ITERATE_COLUMNS)
        assert float(rows[-1]["p"]) == pytest.approx(16 / 17, abs=1e-14)

    def test_eico_noisy_columns(self, tmp_path):
        out = tmp_path / "noisy.csv"
        assert run(
            "iterate", "--variant", "eico-noisy", "--p0", "0.5", "--x", "0.9",
            "--steps", "3", "--dtb", "2", "--out", str(out),
        ) == 0
        _, rows = read_rows(out)
        assert float(rows[0]["discriminant"]) == pytest.approx(73 * 0.81 - 54 + 36)
        assert rows[1]["p_success"] != ""

    def test_invalid_spec_exits_2(self, tmp_path):
        assert run(
            "iterate", "--variant", "plain", "--p0", "2.0", "--steps", "3",
            "--out", str(tmp_path / "x.csv"),
        ) == 2


class TestPredictNoisy:
    def test_perfect_calibration_matches_noiseless_column(self, tmp_path):
        cal_path = tmp_path / "cal.txt"
        save_calibration(synthesize_calibration("ico"), cal_path)
        out = tmp_path / "pred.csv"
        assert run(
            "predict-noisy", "--scheme", "ico", "--calibration", str(cal_path),
            "--theta-points", "20", "--out", str(out),
        ) == 0
        header, rows = read_rows(out)
        assert header == list(PREDICT_COLUMNS)
        for row in rows:
            assert float(row["fidelity"]) == pytest.approx(
                float(row["fidelity_noiseless"]), abs=1e-12
            )

    def test_scheme_mismatch_rejected(self, tmp_path):
        cal_path = tmp_path / "cal.txt"
        save_calibration(synthesize_calibration("mdd"), cal_path)
        assert run(
            "predict-noisy", "--scheme", "ico", "--calibration", str(cal_path),
            "--out", str(tmp_path / "x.csv"),
        ) == 2

    def test_noisy_calibration_lowers_fidelity(self, tmp_path):
        cal_path = tmp_path / "cal.txt"
        save_calibration(
            synthesize_calibration("combined", control_error=0.1, target_error=0.1),
            cal_path,
        )
        out = tmp_path / "pred.csv"
        assert run(
            "predict-noisy", "--scheme", "combined", "--calibration", str(cal_path),
            "--theta-points", "10", "--out", str(out),
        ) == 0
        _, rows = read_rows(out)
        for row in rows:
            assert float(row["fidelity"]) < float(row["fidelity_noiseless"])


class TestEmulate:
    def test_protocol_scale_run(self, tmp_path):
        out = tmp_path / "emu.csv"
        assert run(
            "emulate", "--scheme", "ico", "--shots", "1000",
            "--theta-points", "10", "--seed", "5", "--out", str(out),
        ) == 0
        _, rows = read_rows(out)
        widths = [float(r["ci_high"]) - float(r["ci_low"]) for r in rows]
        assert all(0.005 < w < 0.05 for w in widths)
        assert all(r["shots"] == "1000" for r in rows)

    def test_seed_required(self, tmp_path):
        assert run(
            "emulate", "--scheme", "ico", "--shots", "100",
            "--theta-points", "3", "--out", str(tmp_path / "x.csv"),
        ) == 2

    def test_reruns_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["emulate", "--scheme", "combined", "--shots", "200",
                "--theta-points", "6", "--seed", "99"]
        assert run(*args, "--out", str(a)) == 0
        assert run(*args, "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()


class TestVerify:
    def test_default_suite_passes(self, tmp_path):
        out = tmp_path / "verify.json"
        assert run("verify", "--out", str(out), "--haar-samples", "20000") == 0
        payload = json.loads(out.read_text())
        assert all(c["status"] == "pass" for c in payload["checks"])

    def test_pauli_ensemble_fails(self, tmp_path):
        out = tmp_path / "verify.json"
        assert run(
            "verify", "--ensemble", "pauli", "--out", str(out),
            "--haar-samples", "20000",
        ) == 3
        payload = json.loads(out.read_text())
        status = {c["check"]: c["status"] for c in payload["checks"]}
        assert status["2design-exactness[pauli]"] == "fail"

    def test_tiny_sample_count_is_inconclusive_not_fail(self, tmp_path):
        out = tmp_path / "verify.json"
        assert run("verify", "--out", str(out), "--haar-samples", "10") == 0
        payload = json.loads(out.read_text())
        status = {c["check"]: c["status"] for c in payload["checks"]}
        assert status["haar-second-moment-mc"] == "inconclusive"


class TestConfigFile:
    def test_config_provides_defaults_and_flags_win(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "scheme = ico\nbackend = clifford\ntheta-points = 7\nformat = csv\n"
        )
        out = tmp_path / "out.csv"
        assert run(
            "scheme-sweep", "--config", str(cfg), "--theta-points", "4",
            "--out", str(out),
        ) == 0
        _, rows = read_rows(out)
        assert len(rows) == 4  # flag beat the config file's 7

    def test_usage_error_is_exit_1(self):
        assert run("scheme-sweep", "--bogus-flag") == 1

    def test_missing_required_is_exit_2(self, tmp_path):
        assert run("scheme-sweep", "--out", str(tmp_path / "x.csv")) == 2

    def test_no_partial_file_on_failure(self, tmp_path):
        out = tmp_path / "x.csv"
        assert run(
            "predict-noisy", "--scheme", "ico", "--calibration",
            str(tmp_path / "missing.txt"), "--out", str(out),
        ) == 2
        assert not out.exists()


class TestRoundTrip:
    def test_every_csv_parses_through_own_reader(self, tmp_path):
        cal_path = tmp_path / "cal.txt"
        save_calibration(synthesize_calibration("mdd"), cal_path)
        outputs = []
        run("scheme-sweep", "--scheme", "mdd", "--backend", "analytic",
            "--theta-points", "5", "--out", str(tmp_path / "s.csv"))
        outputs.append((tmp_path / "s.csv", SWEEP_COLUMNS))
        run("iterate", "--variant", "plain", "--p0", "0.4", "--dt", "2",
            "--dtb", "4", "--steps", "4", "--out", str(tmp_path / "i.csv"))
        outputs.append((tmp_path / "i.csv", ITERATE_COLUMNS))
        run("predict-noisy", "--scheme", "mdd", "--calibration", str(cal_path),
            "--theta-points", "5", "--out", str(tmp_path / "p.csv"))
        outputs.append((tmp_path / "p.csv", PREDICT_COLUMNS))
        run("emulate", "--scheme", "mdd", "--shots", "50", "--theta-points", "4",
            "--seed", "3", "--out", str(tmp_path / "e.csv"))
        outputs.append((tmp_path / "e.csv", SWEEP_COLUMNS))
        for path, columns in outputs:
            header, rows = read_rows(path)
            assert header == list(columns)
            assert rows

    def test_twirl_json_report(self, tmp_path):
        out = tmp_path / "twirl.json"
        assert run(
            "twirl", "--dtb", "4", "--theta", "0.9", "--backend", "analytic",
            "--out", str(out),
        ) == 0
        payload = json.loads(out.read_text())
        assert payload["recovery_rate"] == pytest.approx(7 / 15, abs=1e-12)
        state = np.array(
            [[complex(re, im) for re, im in row] for row in payload["output_state"]]
        )
        assert abs(np.trace(state) - 1) < 1e-10
