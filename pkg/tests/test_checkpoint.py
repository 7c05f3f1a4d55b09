import numpy as np
import pytest

from gflowlab import checkpoint as ckpt
from gflowlab import config as config_mod
from gflowlab.errors import ConfigError
from gflowlab.experiment import train_one_seed


def tiny_run(**extra):
    pairs = {
        "grid.objectives": "2", "grid.side": "8", "grid.dimensions": "2",
        "landscape.preset": "concave", "mode": "goal", "goal_source": "tabular",
        "goal_source.points_per_axis": "4",
        "net.hidden_sizes": "16", "train.n_steps": "60", "train.batch_size": "8",
        "train.buffer_capacity": "64", "train.warmup_trajectories": "8",
        "train.log_every": "10", "train.beta": "4", "seeds": "0",
    }
    pairs.update(extra)
    return config_mod.from_pairs(pairs)


def params_blob(trainer):
    return b"".join(p.tobytes() for p in
                    trainer.model.policy.params() + trainer.model.logz.params()
                    + trainer.sampler.policy.params())


class TestRoundTrip:
    def test_loaded_state_matches(self, tmp_path):
        run = tiny_run()
        trainer = train_one_seed(run, 0)
        trainer.run(n_steps=20)
        path = tmp_path / "ck.gfl"
        ckpt.save(path, trainer, run)
        loaded = ckpt.load(path)
        assert loaded.step == 20
        assert loaded.mode == "goal"
        for a, b in zip(loaded.policy.params(), trainer.model.policy.params()):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(loaded.sampler_policy.params(), trainer.sampler.policy.params()):
            np.testing.assert_array_equal(a, b)
        assert len(loaded.buffer) == len(trainer.buffer)
        for ra, rb in zip(loaded.buffer.records(), trainer.buffer.records()):
            np.testing.assert_array_equal(ra.actions, rb.actions)
            np.testing.assert_array_equal(ra.payload, rb.payload)
            np.testing.assert_array_equal(ra.reward_vec, rb.reward_vec)

    def test_resume_is_bit_transparent(self, tmp_path):
        # save at step 20, continue to 60; must equal the uninterrupted run
        run = tiny_run()
        straight = train_one_seed(run, 0)
        log_straight = straight.run()

        split = train_one_seed(run, 0)
        log_a = split.run(n_steps=20)
        path = tmp_path / "mid.gfl"
        ckpt.save(path, split, run)
        resumed = ckpt.load(path).restore_trainer()
        log_b = resumed.run()

        assert params_blob(resumed) == params_blob(straight)
        assert log_a + log_b == log_straight
        assert resumed.rng.bit_generator.state == straight.rng.bit_generator.state

    def test_resume_preserves_tabgs(self, tmp_path):
        run = tiny_run()
        trainer = train_one_seed(run, 0)
        trainer.run(n_steps=30)
        path = tmp_path / "t.gfl"
        ckpt.save(path, trainer, run)
        resumed = ckpt.load(path).restore_trainer()
        np.testing.assert_array_equal(resumed.goal_source.hit_counts,
                                      trainer.goal_source.hit_counts)
        np.testing.assert_array_equal(resumed.goal_source.drawn,
                                      trainer.goal_source.drawn)

    def test_tabulated_landscape_embedded(self, tmp_path):
        rng = np.random.default_rng(0)
        table = rng.random((64, 2))
        table_path = tmp_path / "table.txt"
        from gflowlab.env import all_coords, GridSpec
        lines = [" ".join(str(int(v)) for v in c) + " " +
                 " ".join(f"{x!r}" for x in row.tolist())
                 for c, row in zip(all_coords(GridSpec(2, 8, 2)), table)]
        table_path.write_text("\n".join(lines) + "\n")
        run = tiny_run(**{"landscape.source": "tabulated",
                          "landscape.preset": "unrestrained",
                          "landscape.table_path": str(table_path)})
        trainer = train_one_seed(run, 0)
        trainer.run(n_steps=5)
        path = tmp_path / "tab.gfl"
        ckpt.save(path, trainer, run)
        table_path.unlink()  # checkpoint must be self-contained
        loaded = ckpt.load(path)
        np.testing.assert_array_equal(loaded.run.landscape.table, table)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.gfl"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(ConfigError, match="magic"):
            ckpt.load(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            ckpt.load(tmp_path / "absent.gfl")

    def test_version_check(self, tmp_path):
        run = tiny_run()
        trainer = train_one_seed(run, 0)
        path = tmp_path / "v.gfl"
        ckpt.save(path, trainer, run)
        blob = bytearray(path.read_bytes())
        blob[4] = 99
        path.write_bytes(bytes(blob))
        with pytest.raises(ConfigError, match="version"):
            ckpt.load(path)
