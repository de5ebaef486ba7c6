import json
import math

import pytest

from stablebox.cli import main
from stablebox.experiments import (
    DEFAULT_TOLERANCES,
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    Metric,
    parse_csv,
    parse_overrides,
    run_experiment,
)

SMALL = {
    "finite_variance": dict(n=100, reps=300, num_envs=8, num_perms=100, spread_ns=[50, 100]),
    "lepage_stability": dict(reps=500, k_truncation=50),
    "bridge_crossval": dict(n=100, reps=300, averaging_reps=500, k_truncation=50, ts=[0.3, 0.5]),
    "permutation_randomness": dict(num_envs=6, draws_per_env=50, num_perms=50, spread_ns=[20, 40], k_truncation=50, reps=100),
    "covariance_identity": dict(n=4, reps=5),
    "averaging_check": dict(n=50, reps=500, ts=[0.5]),
}


def small(exp, seed=11, **kw):
    return ExperimentConfig.defaults(exp, seed, **{**SMALL[exp], **kw})


class TestConfig:
    def test_defaults_filled(self):
        cfg = ExperimentConfig.defaults("bridge_crossval", 1)
        assert cfg.n == 5000 and cfg.reps == 10_000 and cfg.k_truncation == 10_000

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"experiment": "averaging_check", "seed": 1, "colour": "red"})

    def test_seed_mandatory(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"experiment": "averaging_check"})

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.defaults("nope", 1)

    @pytest.mark.parametrize("key,value", [("n", 0), ("reps", -1), ("num_perms", 1.5), ("format", "xml"), ("alpha", 3.0)])
    def test_invalid_values(self, key, value):
        with pytest.raises(ConfigError):
            ExperimentConfig.defaults("averaging_check", 1, **{key: value})

    def test_tolerance_override(self):
        cfg = ExperimentConfig.defaults("averaging_check", 1, tolerances={"ks_averaging": 0.5})
        assert cfg.tolerance("ks_averaging") == 0.5
        assert cfg.tolerance("endpoint_abs_max") == DEFAULT_TOLERANCES["averaging_check"]["endpoint_abs_max"]
        with pytest.raises(ConfigError):
            ExperimentConfig.defaults("averaging_check", 1, tolerances={"other": 0.5})

    def test_exact_times(self):
        cfg = ExperimentConfig.defaults("averaging_check", 1, ts=["1/3"])
        assert str(cfg.ts[0]) == "1/3"
        assert cfg.to_dict()["ts"] == ["1/3"]

    def test_overrides(self):
        assert parse_overrides(["n=200", "ts=[0.25, 0.5]", "format=json"]) == {"n": 200, "ts": [0.25, 0.5], "format": "json"}
        with pytest.raises(ConfigError):
            parse_overrides(["n"])
        with pytest.raises(ConfigError):
            parse_overrides(["zzz=1"])

    def test_load(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"experiment": "covariance_identity", "seed": 4, "n": 3}))
        cfg = ExperimentConfig.load(path, seed=9, overrides=["reps=2"])
        assert (cfg.seed, cfg.n, cfg.reps) == (9, 3, 2)
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            ExperimentConfig.load(path)

    def test_wrong_runner(self):
        from stablebox.experiments import run_averaging_check

        with pytest.raises(ConfigError):
            run_averaging_check(small("covariance_identity"))


class TestMetric:
    def test_ops(self):
        assert Metric("a", 0.1, 0.2, "lt").passed is True
        assert Metric("a", 0.2, 0.2, "lt").passed is False
        assert Metric("a", 0.2, 0.2, "le").passed is True
        assert Metric("a", 0.3, 0.2, "gt").passed is True
        assert Metric("a", 0.3).passed is None


@pytest.mark.parametrize("exp", EXPERIMENTS)
def test_runs_and_is_byte_reproducible(exp):
    a = run_experiment(small(exp))
    b = run_experiment(small(exp))
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().encode() == b.to_csv().encode()
    assert a.passed == all(m.passed is not False for m in a.metrics)
    assert all(math.isfinite(m.value) for m in a.metrics)


@pytest.mark.parametrize("exp", ["averaging_check", "permutation_randomness"])
def test_seed_changes_output(exp):
    assert run_experiment(small(exp, seed=1)).to_csv() != run_experiment(small(exp, seed=2)).to_csv()


def test_csv_round_trip():
    report = run_experiment(small("finite_variance"))
    parsed = parse_csv(report.to_csv())
    assert [r["metric"] for r in parsed] == [m.name for m in report.metrics]
    for row, m in zip(parsed, report.metrics):
        assert row["value"] == m.value
        assert row["tolerance"] == m.tolerance
        assert row["pass"] == m.passed


def test_failed_ks_metrics_carry_detail():
    report = run_experiment(small("lepage_stability", tolerances={"ks_stability": 0.0}))
    failed = [m for m in report.failures() if m.name.startswith("ks_stability")]
    assert failed
    for m in failed:
        assert {"ks", "n", "m", "critical_5pct"} <= set(m.detail)


def test_covariance_identity_rejects_large_n():
    with pytest.raises(ConfigError):
        run_experiment(small("covariance_identity", n=8))


def test_finite_variance_rejects_heavy_override():
    with pytest.raises(ConfigError):
        run_experiment(small("finite_variance", tail_index_override=1.5))
    report = run_experiment(small("finite_variance", tail_index_override=5.0))
    assert report.metric("ks_sup_zn").value < 1


def test_averaging_endpoint_degenerate():
    report = run_experiment(small("averaging_check", ts=[0.5, 1]))
    assert report.metric("endpoint_abs_max").value == 0.0


def test_write_outputs(tmp_path):
    report = run_experiment(small("covariance_identity", output_path=str(tmp_path / "r.csv")))
    csv_path, sidecar = report.write()
    assert csv_path.read_text() == report.to_csv()
    meta = json.loads(sidecar.read_text())
    assert meta["seed"] == 11 and meta["version"] and meta["config"]["experiment"] == "covariance_identity"
    json_report = run_experiment(small("covariance_identity", format="json"))
    (path,) = json_report.write(tmp_path / "r.json")
    assert json.loads(path.read_text())["passed"] is True


class TestCli:
    def test_run_exit_codes(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"experiment": "covariance_identity", "seed": 2, "n": 4, "reps": 3, "output_path": str(tmp_path / "o.csv")}))
        assert main(["run", "--config", str(cfg)]) == 0
        assert (tmp_path / "o.csv").exists() and (tmp_path / "o.csv.json").exists()
        assert main(["run", "--config", str(cfg), "--override", "tolerances={\"moment_mismatches\": -1}"]) == 2
        assert main(["run", "--config", str(cfg), "--override", "n=9"]) == 1
        assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1

    def test_usage_error(self):
        with pytest.raises(SystemExit) as err:
            main(["run"])
        assert err.value.code == 1

    @pytest.mark.parametrize("kind,header", [("stable", "x"), ("eta", "eta,z"), ("bridge", "path,t,w,b,z"), ("r-limit", "R(0.5)")])
    def test_sample(self, tmp_path, kind, header):
        out = tmp_path / f"{kind}.csv"
        args = ["sample", kind, "--alpha", "1.2", "--p", "0.7", "--count", "4", "--seed", "5", "--k", "50", "--out", str(out)]
        assert main(args) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == header
        first = out.read_text()
        assert main(args) == 0
        assert out.read_text() == first

    def test_sample_invalid(self, capsys):
        assert main(["sample", "eta", "--alpha", "1", "--p", "0.7", "--count", "2", "--seed", "1"]) == 1
