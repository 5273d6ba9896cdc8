import json
import os

import numpy as np
import pytest

from gsqg import cli
from gsqg.config import RunConfig, regime, validate
from gsqg.errors import ParameterError


def run_cli(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestRunConfig:
    def test_precedence(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text('[solver]\nalpha = 0.2\nbeta = 1.4\n[grid]\nn = 32\n')
        c = RunConfig.build(p, {"solver": {"beta": 1.7}})
        assert c.solver["alpha"] == 0.2 and c.solver["beta"] == 1.7
        assert c.grid["n"] == 32 and c.solver["nu"] == 1.0

    def test_json_file(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"seed": 4}))
        assert RunConfig.build(p).seed == 4

    def test_missing_file_and_unknown_key(self, tmp_path):
        with pytest.raises(ParameterError):
            RunConfig.build(tmp_path / "none.toml")
        with pytest.raises(ParameterError):
            RunConfig.build(overrides={"colour": "red"})

    def test_hash_ignores_output_location(self):
        a = RunConfig.build(overrides={"output": {"dir": "/tmp/a"}})
        b = RunConfig.build(overrides={"output": {"dir": "/tmp/b"}, "threads": 4})
        c = RunConfig.build(overrides={"seed": 1})
        assert a.hash == b.hash != c.hash
        assert len(a.hash) == 64


class TestValidate:
    def test_regimes(self):
        assert regime(0.3, 1.6) == "subcritical"
        assert regime(0.5, 1.5) == "critical"
        assert regime(0.2, 0.5) == "supercritical"

    def test_certify_eventual_boundary(self):
        c = RunConfig.build(overrides={"mode": "certify-eventual",
                                       "solver": {"alpha": 0.5, "beta": 0.9}})
        v = validate(c)
        assert "regime" not in v
        assert any("2 alpha" in x for x in v["violations"])

    def test_total(self):
        for a, b, mode in [(0.3, 1.6, "certify"), (0.3, 1.0, "certify"), (1.2, 1.0, "simulate"),
                           (0.5, 0.9, "simulate"), (0.2, 0.3, "certify-eventual")]:
            v = validate(RunConfig.build(overrides={"mode": mode,
                                                    "solver": {"alpha": a, "beta": b}}))
            assert ("regime" in v) != ("violations" in v)
            assert v.get("violations", ["x"])


class TestCli:
    def test_certify_half_threshold_pass(self, tmp_path, capsys):
        code, out, _ = run_cli(["certify", "--family", "kisel-nv", "--alpha", "0.3", "--beta",
                                "1.6", "--delta", "half-threshold", "--gamma", "half-threshold",
                                "--output-dir", str(tmp_path)], capsys)
        assert code == 0 and "PASS" in out
        cert = json.loads((tmp_path / "certificate.json").read_text())
        assert cert["verdict"] == "PASS" and cert["config_hash"]
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["validation"] == {"regime": "subcritical"}
        assert set(man["artifacts"]) == {"certificate.json", "margins.csv"}
        margins = np.loadtxt(tmp_path / "margins.csv", delimiter=",", skiprows=3)
        assert margins.shape[1] == 5 and np.all(margins[:, 3] < 0)

    def test_certificate_byte_identical(self, tmp_path, capsys):
        args = ["certify", "--alpha", "0.5", "--beta", "1.8", "--per-decade", "40"]
        run_cli(args + ["--output-dir", str(tmp_path / "a")], capsys)
        run_cli(args + ["--output-dir", str(tmp_path / "b")], capsys)
        a = (tmp_path / "a" / "certificate.json").read_bytes()
        b = (tmp_path / "b" / "certificate.json").read_bytes()
        assert a == b

    def test_certify_eventual(self, tmp_path, capsys):
        code, out, _ = run_cli(["certify", "--kind", "eventual", "--alpha", "0.3", "--beta",
                                "0.9", "--gamma", "0.8", "--output-dir", str(tmp_path)], capsys)
        assert code == 0 and "PASS" in out

    def test_ladder(self, tmp_path, capsys):
        code, out, _ = run_cli(["ladder", "--alpha", "0.5", "--beta", "1.2", "--sigma1", "0.4",
                                "--p", "40", "--output-dir", str(tmp_path)], capsys)
        assert code == 0
        assert "N0=4" in out and "sigma_5=1.15\n" in out

    def test_ladder_stall_message(self, tmp_path, capsys):
        code, out, _ = run_cli(["ladder", "--alpha", "0.5", "--beta", "1.2", "--sigma1", "0.4",
                                "--p", "20", "--output-dir", str(tmp_path)], capsys)
        assert code == 0 and "stalled" in out

    def test_simulate_t_end_zero(self, tmp_path, capsys):
        code, out, _ = run_cli(["simulate", "--t-end", "0", "--n", "16",
                                "--output-dir", str(tmp_path)], capsys)
        assert code == 0
        rows = [ln for ln in (tmp_path / "series.csv").read_text().splitlines()
                if not ln.startswith("#")]
        assert len(rows) == 2

    def test_simulate_then_diagnose_and_decay_fit(self, tmp_path, capsys):
        code, _, _ = run_cli(["simulate", "--t-end", "0.05", "--dt", "1e-3", "--n", "16",
                              "--sample-every", "5", "--holder-gamma", "0.5",
                              "--output-dir", str(tmp_path)], capsys)
        assert code == 0
        code, out, _ = run_cli(["diagnose", str(tmp_path / "final.field"), "--moc-family",
                                "linear", "--moc-param", "slope=100",
                                "--output-dir", str(tmp_path)], capsys)
        assert code == 0
        d = json.loads((tmp_path / "diagnose.json").read_text())
        assert d["obedience"]["obeys"]
        code, out, _ = run_cli(["decay-fit", str(tmp_path / "series.csv"), "--beta", "1.5",
                                "--t-fit", "0.02", "--output-dir", str(tmp_path)], capsys)
        assert code == 0 and "C=" in out

    def test_env_output_dir(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("GSQG_OUTPUT_DIR", str(tmp_path / "env"))
        code, _, _ = run_cli(["ladder", "--alpha", "0.5", "--beta", "1.2", "--sigma1", "0.4",
                              "--p", "40"], capsys)
        assert code == 0 and (tmp_path / "env" / "ladder.json").exists()

    def test_unknown_flag_exit_one(self, capsys):
        code, _, err = run_cli(["ladder", "--bogus"], capsys)
        assert code == 1 and "usage" in err
        assert json.loads(err.strip().splitlines()[-1])["exit_code"] == 1

    def test_domain_error_exit_one(self, tmp_path, capsys):
        code, _, err = run_cli(["certify", "--alpha", "0.5", "--beta", "1.4",
                                "--output-dir", str(tmp_path)], capsys)
        assert code == 1
        assert json.loads(err)["error"] == "ParameterError"

    def test_numerical_error_exit_two(self, tmp_path, capsys):
        code, _, err = run_cli(["simulate", "--n", "32", "--dt", "0.5", "--t-end", "1",
                                "--nu", "0", "--output-dir", str(tmp_path)], capsys)
        assert code == 2
        rec = json.loads(err.strip().splitlines()[-1])
        assert rec["error"] == "CFLViolation" and rec["exit_code"] == 2
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["summary"]["truncated"]
