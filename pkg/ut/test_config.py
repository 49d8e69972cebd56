import json
import logging
import os
import tempfile
import unittest

import numpy as np

from coauthor import ConfigError, RandomSource, SimulationConfig, UnknownStreamError, derive_stream, load_config
from coauthor.config import PROFILES, apply_profile


def write_file(directory, name, text):
    path = os.path.join(directory, name)
    with open(path, "w", encoding="utf-8") as fd:
        fd.write(text)
    return path


class TestLoadConfigCase(unittest.TestCase):
    def setUp(self):
        logging.basicConfig(level=logging.WARNING)
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_empty_file_gives_defaults(self):
        config = load_config(write_file(self.tmp.name, "empty.ini", ""))
        self.assertTrue(config.population.n == 10000)
        self.assertTrue(config.population.horizon_T == 1565)
        self.assertTrue(config.network.lambda_friendship == 3.0)
        self.assertTrue(config.reputation.gamma_base == 0.2)
        self.assertTrue(config.drl.eps_decay == 0.9825)
        self.assertEqual(config, SimulationConfig())

    def test_duration_invariant(self):
        path = write_file(self.tmp.name, "bad.ini", "[collab]\nduration_min = 8\nduration_max = 8\n")
        with self.assertRaises(ConfigError) as ctx:
            load_config(path)
        self.assertIn("duration_max > duration_min", str(ctx.exception))

    def test_override_keeps_other_defaults(self):
        config = load_config(write_file(self.tmp.name, "small.ini", "[population]\nn = 500\n"))
        self.assertTrue(config.population.n == 500)
        self.assertTrue(config.population.horizon_T == 1565)
        self.assertTrue(config.collab.K_max == 8)

    def test_unknown_key_and_section(self):
        with self.assertRaises(ConfigError):
            load_config(write_file(self.tmp.name, "a.ini", "[population]\nsize = 5\n"))
        with self.assertRaises(ConfigError):
            load_config(write_file(self.tmp.name, "b.ini", "[colors]\nred = 1\n"))

    def test_bad_value_type(self):
        with self.assertRaises(ConfigError) as ctx:
            load_config(write_file(self.tmp.name, "c.ini", "[population]\nn = many\n"))
        self.assertEqual(ctx.exception.field, "population.n")

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_config(os.path.join(self.tmp.name, "nope.ini"))

    def test_json_round_trip(self):
        config = load_config(profile="desk-train", seed=7)
        path = write_file(self.tmp.name, "config.json", config.to_json())
        self.assertEqual(load_config(path), config)
        with open(path, encoding="utf-8") as fd:
            self.assertEqual(json.load(fd)["seed"], 7)

    def test_seed_resolution_order(self):
        path = write_file(self.tmp.name, "seeded.ini", "[run]\nseed = 3\n[population]\nn = 50\n")
        self.assertEqual(load_config(path).seed, 3)
        self.assertEqual(load_config(path, seed=11).seed, 11)

    def test_profiles(self):
        for name in PROFILES:
            apply_profile(SimulationConfig(), name).validate()
        desk = load_config(profile="desk-train")
        self.assertEqual((desk.population.n, desk.population.horizon_T, desk.drl.episodes), (200, 300, 50))
        self.assertEqual(desk.population.paper_spawn_rate_per_agent, 0.015)
        self.assertEqual(desk.metrics.network_every, 100)
        desk_eval = load_config(profile="desk-eval")
        self.assertEqual((desk_eval.population.n, desk_eval.population.horizon_T), (500, 400))
        self.assertEqual(desk_eval.population.paper_spawn_rate_per_agent, 0.015)
        # every desk component fits under the path-length source cap, so desk path lengths are exact
        self.assertTrue(desk_eval.metrics.path_length_sources >= desk_eval.population.n)
        self.assertEqual(load_config(profile="eval").population.paper_spawn_rate_per_agent, 0.001)
        with self.assertRaises(ConfigError):
            load_config(profile="huge")

    def test_greedy_defaults(self):
        greedy = SimulationConfig().greedy
        self.assertEqual((greedy.raise_hazard, greedy.p_insist, greedy.lambda_loss, greedy.p_commit),
                         (0.012, 0.5, 3.0, 0.22))
        with self.assertRaises(ConfigError):
            SimulationConfig().override({"greedy": {"raise_hazard": 1.5}}).validate()

    def test_validation_ranges(self):
        with self.assertRaises(ConfigError):
            SimulationConfig().override({"utility": {"eta_min": 0.0}}).validate()
        with self.assertRaises(ConfigError):
            SimulationConfig().override({"drl": {"eps_final": 2.0}}).validate()
        with self.assertRaises(ConfigError):
            SimulationConfig().override({"collab": {"K_max": 1}}).validate()


class TestRandomSourceCase(unittest.TestCase):
    def test_same_name_same_sequence(self):
        a = derive_stream(RandomSource(42), "network-init").random(8)
        b = derive_stream(RandomSource(42), "network-init").random(8)
        self.assertTrue(np.array_equal(a, b))

    def test_distinct_names_differ(self):
        a = derive_stream(RandomSource(42), "network-init").random(8)
        b = derive_stream(RandomSource(42), "utilities").random(8)
        self.assertFalse(np.array_equal(a, b))

    def test_seed_sensitivity(self):
        a = derive_stream(RandomSource(1), "clique-formation").random(8)
        b = derive_stream(RandomSource(2), "clique-formation").random(8)
        self.assertFalse(np.array_equal(a, b))

    def test_unknown_stream(self):
        with self.assertRaises(UnknownStreamError):
            derive_stream(RandomSource(1), "weather")

    def test_spawned_sources(self):
        root = RandomSource(5)
        a = root.spawn(0).stream("utilities").random(4)
        b = root.spawn(1).stream("utilities").random(4)
        c = root.stream("utilities").random(4)
        self.assertFalse(np.array_equal(a, b))
        self.assertFalse(np.array_equal(a, c))
        self.assertTrue(np.array_equal(a, RandomSource(5).spawn(0).stream("utilities").random(4)))


if __name__ == '__main__':
    unittest.main()
