import json
import math
import os

import numpy as np
import pytest

from hetbai import load_instance, read_records, save_instance
from hetbai.cli import dispatch, load_sweep_config

from helpers import make_instance, symmetric_two_arm

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
MINI_RATINGS = os.path.join(DATA_DIR, "mini_ratings.csv")


@pytest.fixture
def instance_file(tmp_path):
    path = tmp_path / "instance.json"
    save_instance(symmetric_two_arm(), str(path))
    return str(path)


@pytest.fixture
def tie_file(tmp_path):
    path = tmp_path / "tie.json"
    save_instance(make_instance([(0, 1)], {(0, 0): 1.0, (0, 1): 1.0}), str(path))
    return str(path)


class TestUsageErrors:
    def test_unknown_subcommand(self, capsys):
        assert dispatch(["frobnicate"]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert dispatch(["validate", "--frob", "x.json"]) == 1

    def test_missing_required_flag(self, capsys):
        assert dispatch(["run", "--delta", "0.1"]) == 1


class TestValidate:
    def test_admissible_exits_zero(self, instance_file, capsys):
        assert dispatch(["validate", instance_file]) == 0
        assert "admissible" in capsys.readouterr().out

    def test_tie_exits_two_with_message(self, tie_file, capsys):
        assert dispatch(["validate", tie_file]) == 2
        out = capsys.readouterr().out
        assert "tied best arm" in out
        assert "inadmissible" in out

    def test_missing_file_exits_two(self, tmp_path, capsys):
        assert dispatch(["validate", str(tmp_path / "nope.json")]) == 2

    def test_bad_json_exits_two(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"K": 2}')
        assert dispatch(["validate", str(path)]) == 2


class TestSolve:
    def test_symmetric_fixture(self, instance_file, capsys):
        assert dispatch(["solve", instance_file]) == 0
        doc = json.loads(capsys.readouterr().out)
        np.testing.assert_allclose(doc["G"], [0.7071067811865475] * 2, atol=1e-8)
        np.testing.assert_allclose(doc["omega"], [[0.5, 0.5], [0.5, 0.5]], atol=1e-10)
        assert math.isclose(doc["g_tilde_star"], 0.5, rel_tol=1e-10)
        np.testing.assert_allclose(doc["c_star_interval"], [2.0, 4.0], rtol=1e-10)

    def test_inadmissible_rejected(self, tie_file):
        assert dispatch(["solve", tie_file]) == 2


class TestRun:
    def test_identical_output_for_identical_flags(self, instance_file, capsys):
        args = ["run", "--instance", instance_file, "--delta", "0.1",
                "--lambda", "0.5", "--seed", "7"]
        assert dispatch(args) == 0
        first = capsys.readouterr().out
        assert dispatch(args) == 0
        assert capsys.readouterr().out == first
        lines = first.strip().splitlines()
        assert lines[0] == "policy,lambda,delta,seed,tau,rounds,correct,recommendation"
        assert len(lines) == 2

    def test_uniform_policy_flag(self, instance_file, capsys):
        args = ["run", "--instance", instance_file, "--delta", "0.1",
                "--lambda", "0.5", "--seed", "7", "--policy", "uniform"]
        assert dispatch(args) == 0
        assert capsys.readouterr().out.splitlines()[1].startswith("uniform,")


class TestSweepCommand:
    def write_config(self, tmp_path, instance_file, **overrides):
        doc = {"instance": os.path.basename(instance_file), "deltas": [0.1],
               "lambda": 0.5, "repetitions": 2}
        doc.update(overrides)
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps(doc))
        return str(path)

    def test_end_to_end(self, tmp_path, instance_file, capsys):
        config = self.write_config(tmp_path, instance_file)
        out = tmp_path / "records.csv"
        assert dispatch(["sweep", "--config", config, "--out", str(out)]) == 0
        records = read_records(str(out))
        assert len(records) == 2
        assert [r.seed for r in records] == [0, 1]

    def test_env_seed_override(self, tmp_path, instance_file, monkeypatch):
        config = self.write_config(tmp_path, instance_file)
        out = tmp_path / "records.csv"
        monkeypatch.setenv("HETBAI_SEED", "500")
        assert dispatch(["sweep", "--config", config, "--out", str(out)]) == 0
        assert [r.seed for r in read_records(str(out))] == [500, 501]

    def test_bad_env_seed_is_domain_error(self, tmp_path, instance_file, monkeypatch):
        config = self.write_config(tmp_path, instance_file)
        monkeypatch.setenv("HETBAI_SEED", "soup")
        assert dispatch(["sweep", "--config", config, "--out", str(tmp_path / "r.csv")]) == 2

    def test_workers_flag(self, tmp_path, instance_file):
        config = self.write_config(tmp_path, instance_file)
        out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        assert dispatch(["sweep", "--config", config, "--out", str(out1)]) == 0
        assert dispatch(["sweep", "--config", config, "--out", str(out2), "--workers", "2"]) == 0
        assert read_records(str(out1)) == read_records(str(out2))


class TestLoadSweepConfig:
    def write(self, tmp_path, doc):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(doc))
        return str(path)

    def test_minimal_config_gets_defaults(self, tmp_path, instance_file):
        path = self.write(tmp_path, {"instance": instance_file, "deltas": [0.1, 0.2]})
        config = load_sweep_config(path)
        assert config.policy == "het-ts"
        assert config.lam == 0.01
        assert config.repetitions == 4
        assert config.base_seed == 0
        assert config.workers == 1
        assert config.deltas == (0.1, 0.2)

    def test_relative_instance_path_resolves_against_config(self, tmp_path):
        save_instance(symmetric_two_arm(), str(tmp_path / "v.json"))
        path = self.write(tmp_path, {"instance": "v.json", "deltas": [0.1]})
        assert load_sweep_config(path).instance == symmetric_two_arm()

    def test_delta_out_of_range_rejected(self, tmp_path, instance_file):
        path = self.write(tmp_path, {"instance": instance_file, "deltas": [1.5]})
        with pytest.raises(ValueError, match="outside"):
            load_sweep_config(path)

    def test_zero_lambda_rejected(self, tmp_path, instance_file):
        path = self.write(tmp_path, {"instance": instance_file, "deltas": [0.1], "lambda": 0})
        with pytest.raises(ValueError, match="lambda"):
            load_sweep_config(path)

    def test_violations_listed_exhaustively(self, tmp_path, instance_file):
        path = self.write(
            tmp_path,
            {"instance": instance_file, "deltas": [2.0], "lambda": -1,
             "repetitions": 0, "mystery": True},
        )
        with pytest.raises(ValueError) as exc:
            load_sweep_config(path)
        message = str(exc.value)
        for needle in ("mystery", "delta", "lambda", "repetitions"):
            assert needle in message

    def test_unknown_policy_rejected(self, tmp_path, instance_file):
        path = self.write(
            tmp_path, {"instance": instance_file, "deltas": [0.1], "policy": "greedy"}
        )
        with pytest.raises(ValueError, match="policy"):
            load_sweep_config(path)


class TestIngestCommand:
    def test_writes_instance_and_labels_sidecar(self, tmp_path, capsys):
        out = tmp_path / "movie.json"
        assert dispatch(["ingest", "--ratings", MINI_RATINGS, "--out", str(out)]) == 0
        instance = load_instance(str(out))
        assert instance.means == ((50.0, 20.0), (90.0, 50.0))
        labels = json.loads((tmp_path / "movie.labels.json").read_text())
        assert labels["clients"] == ["north", "south"]
        assert labels["arms"] == ["alpha", "beta"]
        assert any("gamma" in msg for msg in labels["dropped"])

    def test_min_samples_flag(self, tmp_path):
        out = tmp_path / "movie.json"
        assert dispatch(
            ["ingest", "--ratings", MINI_RATINGS, "--out", str(out), "--min-samples", "9"]
        ) == 0
        instance = load_instance(str(out))
        assert instance.num_arms == 3  # gamma survives at the lower threshold


class TestReportCommand:
    def test_aggregates_records(self, tmp_path, instance_file):
        config = tmp_path / "sweep.json"
        config.write_text(json.dumps({
            "instance": instance_file, "deltas": [0.1, 0.2],
            "lambda": 0.5, "repetitions": 2,
        }))
        records = tmp_path / "records.csv"
        summary = tmp_path / "summary.csv"
        assert dispatch(["sweep", "--config", str(config), "--out", str(records)]) == 0
        assert dispatch(["report", "--records", str(records), "--out", str(summary)]) == 0
        lines = summary.read_text().strip().splitlines()
        assert lines[0] == "policy,lambda,delta,n,mean_tau,std_tau,mean_rounds,error_rate"
        assert len(lines) == 3
