import logging
import os
import tempfile
import unittest

import yaml

import metabbo.config
from metabbo.config import derive_seed, load_config, load_settings
from metabbo.config.run import RunConfig
from metabbo.errors import InvalidArgumentError, MetaBBOConfigError, SchemaValidationError


class TestSettings(unittest.TestCase):
    def test_defaults_are_full_scale(self):
        config = RunConfig(load_settings())
        self.assertEqual(config.dim, 10)
        self.assertEqual(config.n_samples, 50000)
        self.assertEqual((config.sls.mse_epochs, config.sls.roa_epochs), (300, 1000))
        self.assertEqual((config.de.population_size, config.de.max_fes), (100, 20000))
        self.assertEqual(config.agent.gamma, 0.99)
        self.assertEqual(config.pls.max_learning_steps, 1500000)
        self.assertEqual(config.evaluation.runs, 51)
        self.assertEqual(len(config.train_specs()), 16)
        self.assertEqual(len(config.test_specs()), 8)

    def test_desk_preset(self):
        config = RunConfig(load_settings(preset="desk"), preset="desk")
        self.assertEqual(config.dim, 2)
        self.assertEqual(config.n_samples, 2000)
        self.assertEqual(config.de.max_fes, 2000)
        self.assertEqual(config.pls.max_learning_steps, 50000)
        # Values the preset does not touch stay at their defaults
        self.assertEqual(config.de.crossover_rate, 0.7)

    def test_unknown_preset(self):
        with self.assertRaises(InvalidArgumentError):
            load_settings(preset="laptop")

    def test_overrides(self):
        settings = load_settings(overrides=["de.population_size=20", "networks.kan.hidden=[10, 10]"])
        self.assertEqual(settings["de"]["population_size"], 20)
        self.assertEqual(settings["networks"]["kan"]["hidden"], [10, 10])

    def test_unknown_key_is_rejected(self):
        with self.assertRaises(SchemaValidationError):
            load_settings(overrides=["de.populaton_size=20"])

    def test_bad_value_is_rejected(self):
        with self.assertRaises(SchemaValidationError):
            load_settings(overrides=["pls.evaluator=oracle"])

    def test_config_files_are_merged(self):
        with tempfile.TemporaryDirectory() as tmp:
            filename = os.path.join(tmp, "small.yaml")
            with open(filename, "w") as f:
                yaml.safe_dump({"de": {"max_fes": 5000}, "run": {"seed": 3}}, f)
            settings = load_settings([tmp], overrides=["run.seed=4"])
        self.assertEqual(settings["de"]["max_fes"], 5000)
        self.assertEqual(settings["de"]["population_size"], 100)
        self.assertEqual(settings["run"]["seed"], 4)

    def test_missing_config_file(self):
        with self.assertRaises(InvalidArgumentError):
            load_settings(["/does/not/exist.yaml"])

    def test_load_config_sets_global_values(self):
        config = load_config(preset="desk", overrides=["run.seed=12"])
        self.assertEqual(config.seed, 12)
        self.assertEqual(metabbo.config.get_config_int("run.seed"), 12)
        self.assertEqual(metabbo.config.get_config_value("preset"), "desk")

    def test_resolved_config_can_be_reloaded(self):
        load_config(preset="desk", overrides=["de.population_size=10"])
        with tempfile.TemporaryDirectory() as tmp:
            filename = metabbo.config.write_resolved_config(tmp)
            reloaded = load_settings([filename])
        self.assertEqual(reloaded, metabbo.config.get_settings())


class TestSeeds(unittest.TestCase):
    def test_derived_seeds_are_stable_and_distinct(self):
        seeds = {derive_seed(1, "evaluation", "sphere-10d", run) for run in range(51)}
        self.assertEqual(len(seeds), 51)
        self.assertEqual(derive_seed(1, "pls"), derive_seed(1, "pls"))
        self.assertNotEqual(derive_seed(1, "pls"), derive_seed(2, "pls"))
        self.assertTrue(all(0 <= seed < 2 ** 32 for seed in seeds))

    def test_negative_root_seed(self):
        with self.assertRaises(MetaBBOConfigError):
            derive_seed(-1, "pls")


class TestLogFile(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.first_log = os.path.join(self.tmp.name, "metabbo.log")
        self.root = logging.getLogger()
        self.saved = (list(self.root.handlers), self.root.level)
        handler = logging.FileHandler(self.first_log, encoding="UTF-8")
        handler.set_name("file")
        self.root.handlers = [handler]
        self.root.setLevel(logging.INFO)

    def tearDown(self):
        for handler in self.root.handlers:
            handler.close()
        self.root.handlers, level = self.saved
        self.root.setLevel(level)
        self.tmp.cleanup()

    def test_log_continues_in_output_dir(self):
        output_dir = os.path.join(self.tmp.name, "run")
        metabbo.config.move_log_file(output_dir)
        logging.getLogger("metabbo.tests").info("after the move")
        self.assertEqual([handler.get_name() for handler in self.root.handlers], ["file"])
        self.root.handlers[0].flush()
        with open(os.path.join(output_dir, "metabbo.log")) as f:
            self.assertIn("after the move", f.read())
        with open(self.first_log) as f:
            content = f.read()
        self.assertIn("Continuing log in", content)
        self.assertNotIn("after the move", content)

    def test_same_directory_keeps_the_handler(self):
        handler = self.root.handlers[0]
        metabbo.config.move_log_file(self.tmp.name)
        self.assertEqual(self.root.handlers, [handler])


if __name__ == "__main__":
    unittest.main()
