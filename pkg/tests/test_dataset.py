"""Unit tests for sharded dataset IO."""
import numpy as np
import pytest

from geopix.dataset import (
    DatasetError,
    InstanceManifest,
    load_png,
    read_shard,
    save_png,
    write_shard,
)


def _triple(i, rng):
    man = InstanceManifest(
        task="maxap",
        instance_id=f"maxap_train_{i:08d}",
        seed=1000 + i,
        resolution=128,
        world_to_pixel=(58.18, 0.0, 64.5, 0.0, -58.18, 64.5),
        cond_path=f"maxap_train_{i:08d}_cond.png",
        sol_path=f"maxap_train_{i:08d}_sol.png",
        points=[[0.1 * i, -0.2], [0.3, 0.4], [-0.5, 0.6]],
        geometry={"cycle": [0, 1, 2]},
    )
    cond = rng.integers(0, 256, size=(128, 128), dtype=np.uint8)
    sol = rng.integers(0, 256, size=(128, 128), dtype=np.uint8)
    return man, cond, sol


class TestPngRoundtrip:
    def test_byte_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        p = tmp_path / "x.png"
        save_png(img, p)
        np.testing.assert_array_equal(load_png(p), img)


class TestWriteShard:
    def test_counts_and_files(self, tmp_path):
        rng = np.random.default_rng(1)
        triples = [_triple(i, rng) for i in range(10)]
        summary = write_shard(triples, tmp_path)
        assert summary["count"] == 10
        assert len(list(tmp_path.glob("*.png"))) == 20
        lines = (tmp_path / "manifest.jsonl").read_text().splitlines()
        assert len(lines) == 10

    def test_empty_shard(self, tmp_path):
        summary = write_shard([], tmp_path)
        assert summary["count"] == 0
        assert read_shard(tmp_path) == []

    def test_deterministic_checksum(self, tmp_path):
        rng1, rng2 = np.random.default_rng(2), np.random.default_rng(2)
        s1 = write_shard([_triple(i, rng1) for i in range(5)], tmp_path / "a")
        s2 = write_shard([_triple(i, rng2) for i in range(5)], tmp_path / "b")
        assert s1["checksum"] == s2["checksum"]


class TestReadShard:
    def test_roundtrip_equal(self, tmp_path):
        rng = np.random.default_rng(3)
        triples = [_triple(i, rng) for i in range(4)]
        write_shard(triples, tmp_path)
        got = read_shard(tmp_path)
        assert got == [t[0] for t in triples]

    def test_missing_png_named(self, tmp_path):
        rng = np.random.default_rng(4)
        triples = [_triple(i, rng) for i in range(3)]
        write_shard(triples, tmp_path)
        victim = triples[1][0].sol_path
        (tmp_path / victim).unlink()
        with pytest.raises(DatasetError, match=victim):
            read_shard(tmp_path)

    def test_truncated_line_reports_lineno(self, tmp_path):
        rng = np.random.default_rng(5)
        write_shard([_triple(i, rng) for i in range(3)], tmp_path)
        mp = tmp_path / "manifest.jsonl"
        lines = mp.read_text().splitlines()
        lines[1] = lines[1][: len(lines[1]) // 2]
        mp.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetError, match="line 2"):
            read_shard(tmp_path, verify=False)

    def test_corrupt_png_checksum(self, tmp_path):
        rng = np.random.default_rng(6)
        triples = [_triple(i, rng) for i in range(2)]
        write_shard(triples, tmp_path)
        victim = tmp_path / triples[0][0].cond_path
        save_png(np.zeros((128, 128), dtype=np.uint8), victim)
        with pytest.raises(DatasetError, match="checksum"):
            read_shard(tmp_path)
