"""End-to-end tests for the command-line interface."""
import json
from pathlib import Path

import pytest

from geopix.cli import run
from geopix.dataset import read_shard, shard_dirs


def _gen(tmp_path, task="maxap", count=4, points="5..6", seed=17):
    rc = run(["gen", "--task", task, "--count", str(count),
              "--points", points, "--seed", str(seed),
              "--out", str(tmp_path)])
    assert rc == 0
    return tmp_path


class TestGen:
    def test_count_contract(self, tmp_path):
        _gen(tmp_path, count=5)
        shards = shard_dirs(tmp_path, "maxap", "train")
        assert len(shards) == 1
        assert len(read_shard(shards[0])) == 5

    def test_determinism_checksums(self, tmp_path):
        _gen(tmp_path / "a", task="steiner", points="4..6")
        _gen(tmp_path / "b", task="steiner", points="4..6")
        sa = (tmp_path / "a/steiner/train/shard_00000/SHA256SUMS").read_text()
        sb = (tmp_path / "b/steiner/train/shard_00000/SHA256SUMS").read_text()
        assert sa == sb

    def test_bad_flag_usage_error(self, tmp_path):
        with pytest.raises(SystemExit):
            run(["gen", "--task", "nonsense", "--out", str(tmp_path)])


class TestSolve:
    def test_solve_writes_results(self, tmp_path):
        _gen(tmp_path, task="steiner", points="4..6")
        rc = run(["solve", "--task", "steiner", "--mode", "exact",
                  "--out", str(tmp_path)])
        assert rc == 0
        rows = [json.loads(l) for l in
                (tmp_path / "steiner_train_solve_exact.jsonl").read_text().splitlines()]
        assert len(rows) == 4
        assert all(r["value"] > 0 for r in rows)

    def test_exact_size_limit_nonzero_exit(self, tmp_path):
        _gen(tmp_path, task="steiner", points="9..9", count=2)
        rc = run(["solve", "--task", "steiner", "--mode", "exact",
                  "--out", str(tmp_path)])
        assert rc != 0

    def test_heuristic_on_large_instances(self, tmp_path):
        _gen(tmp_path, task="steiner", points="9..10", count=2)
        rc = run(["solve", "--task", "steiner", "--mode", "heuristic",
                  "--out", str(tmp_path)])
        assert rc == 0


class TestExtractEval:
    def test_extract_self_consistency(self, tmp_path):
        _gen(tmp_path)
        rc = run(["extract", "--task", "maxap", "--out", str(tmp_path)])
        assert rc == 0
        rows = [json.loads(l) for l in
                (tmp_path / "maxap_train_extract.jsonl").read_text().splitlines()]
        assert len(rows) == 4
        assert all(r["valid"] for r in rows)

    def test_eval_self_consistency(self, tmp_path):
        _gen(tmp_path)
        rc = run(["eval", "--task", "maxap", "--out", str(tmp_path),
                  "--buckets", "3..15"])
        assert rc == 0
        report = json.loads((tmp_path / "maxap_train_report.json").read_text())
        assert report[0]["valid_rate"] == 1.0
        assert abs(report[0]["ratio_mean"] - 1.0) < 1e-3

    def test_eval_with_samples_manifest(self, tmp_path):
        _gen(tmp_path)
        # oracle rasters re-exported as if they were model samples
        shard = shard_dirs(tmp_path, "maxap", "train")[0]
        samples_path = tmp_path / "samples.jsonl"
        with open(samples_path, "w") as fh:
            for man in read_shard(shard):
                rel = Path("maxap/train/shard_00000") / man.sol_path
                fh.write(json.dumps({"instance_id": man.instance_id,
                                     "seed": 0, "file": str(rel)}) + "\n")
        rc = run(["eval", "--task", "maxap", "--out", str(tmp_path),
                  "--samples", str(samples_path), "--best-of", "1"])
        assert rc == 0
        report = json.loads((tmp_path / "maxap_train_report.json").read_text())
        assert report[0]["valid_rate"] == 1.0


class TestRender:
    def test_render_writes_figures(self, tmp_path):
        _gen(tmp_path, count=2)
        rc = run(["render", "--task", "maxap", "--out", str(tmp_path),
                  "--limit", "2"])
        assert rc == 0
        figs = list((tmp_path / "figures").glob("*_compare.png"))
        assert len(figs) == 2


class TestConfigPrecedence:
    def test_flags_override_config_file(self, tmp_path):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"count": 99, "seed": 1}))
        rc = run(["gen", "--task", "maxap", "--config", str(cfg_file),
                  "--count", "3", "--points", "5..6",
                  "--out", str(tmp_path)])
        assert rc == 0
        shards = shard_dirs(tmp_path, "maxap", "train")
        assert len(read_shard(shards[0])) == 3
