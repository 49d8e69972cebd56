import csv
import json
import logging
import os
import tempfile
import unittest

from coauthor import DrlParams, RandomSource, SimulationConfig
from coauthor.config import apply_profile
from policy import Trainer, conversion_batch, epsilon_at, load_checkpoint, run_training
from policy.trainer import CURVES_CSV, FINAL_CHECKPOINT, TRAINING_SUMMARY_JSON, is_conversion_episode

TINY = {
    "population": {"n": 30, "horizon_T": 40, "paper_spawn_rate_per_agent": 0.05},
    "collab": {"duration_min": 4, "duration_max": 12},
    "greedy": {"raise_hazard": 0.2},
    "drl": {
        "episodes": 3,
        "batch_size": 8,
        "learning_starts": 8,
        "replay_capacity": 500,
        "encoder_dim": 4,
        "hidden_dim": 8,
        "checkpoint_every": 2,
        "conversion_every": 1,
        "target_update_every": 5,
    },
    "metrics": {"network_every": 20, "path_length_sources": 10},
}


def tiny_config():
    return SimulationConfig().override(TINY).validate()


class TestScheduleCase(unittest.TestCase):
    def setUp(self):
        logging.basicConfig(level=logging.WARNING)

    def test_epsilon_decay(self):
        drl = DrlParams()
        self.assertEqual(epsilon_at(0, drl), 1.0)
        self.assertAlmostEqual(epsilon_at(100, drl), 0.171, delta=0.001)
        self.assertEqual(epsilon_at(400, drl), 0.01)
        values = [epsilon_at(e, drl) for e in range(500)]
        self.assertEqual(values, sorted(values, reverse=True))

    def test_conversion_batch(self):
        desk = apply_profile(SimulationConfig(), "desk-train").drl
        self.assertEqual(conversion_batch(200, desk), 40)
        self.assertEqual(conversion_batch(1000, DrlParams()), 20)
        self.assertEqual(conversion_batch(1, DrlParams(conversion_target=0.0)), 0)

    def test_conversion_episodes(self):
        drl = DrlParams()
        self.assertFalse(is_conversion_episode(0, drl))
        self.assertFalse(is_conversion_episode(15, drl))
        self.assertTrue(is_conversion_episode(10, drl))

    def test_strategic_share_grows_to_target(self):
        config = SimulationConfig().override({
            "population": {"n": 200},
            "drl": {"episodes": 50, "conversion_every": 10, "replay_capacity": 1000},
        })
        trainer = Trainer(config, RandomSource(0))
        shares = []
        for episode in range(50):
            trainer.convert(episode)
            shares.append(len(trainer.strategic) / 200)
        self.assertEqual(shares, sorted(shares))
        self.assertEqual(shares[9], 0.0)
        self.assertAlmostEqual(shares[40], 0.8)
        self.assertAlmostEqual(shares[-1], 0.8)
        self.assertEqual(len(set(trainer.strategic)), len(trainer.strategic))


class TestTrainerCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_training_outputs(self):
        config = tiny_config()
        result = run_training(config, self.tmp.name)
        self.assertEqual(len(result.curves), 3)
        self.assertEqual(result.checkpoint, os.path.join(self.tmp.name, FINAL_CHECKPOINT))
        qnet = load_checkpoint(result.checkpoint, config.drl)
        self.assertEqual(qnet.dims.hidden_dim, 8)
        self.assertTrue(os.path.isfile(os.path.join(self.tmp.name, "checkpoint_ep0002.bin")))

        with open(os.path.join(self.tmp.name, CURVES_CSV), newline="") as fd:
            rows = list(csv.DictReader(fd))
        self.assertEqual([int(r["episode"]) for r in rows], [0, 1, 2])
        self.assertEqual(float(rows[0]["epsilon"]), 1.0)
        self.assertEqual(float(rows[0]["strategic_fraction"]), 0.0)
        fractions = [float(r["strategic_fraction"]) for r in rows]
        self.assertEqual(fractions, sorted(fractions))
        self.assertTrue(fractions[-1] > 0.0)
        for r in rows:
            self.assertTrue(0.0 <= float(r["completion_rate"]) <= 1.0)

        with open(os.path.join(self.tmp.name, TRAINING_SUMMARY_JSON)) as fd:
            summary = json.load(fd)
        self.assertEqual(sorted(summary), ["completion_rate", "mean_utility", "papers_completed",
                                           "papers_destroyed"])
        self.assertIn("slope", summary["papers_destroyed"])

    def test_episodes_collect_experience(self):
        trainer = Trainer(tiny_config(), RandomSource(1))
        stats = trainer.run_episode(0)
        self.assertTrue(stats.transitions > 0)
        self.assertEqual(len(trainer.buffer), min(stats.transitions, 500))
        self.assertEqual(stats.loss is None, trainer.learner.updates == 0)

    def test_reproducible(self):
        first = Trainer(tiny_config(), RandomSource(4)).run(2)
        second = Trainer(tiny_config(), RandomSource(4)).run(2)
        self.assertEqual([s.to_row() for s in first.curves], [s.to_row() for s in second.curves])
        self.assertEqual(first.strategic, second.strategic)
        self.assertIsNone(first.checkpoint)


if __name__ == '__main__':
    unittest.main()
