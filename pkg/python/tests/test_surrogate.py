import itertools
import os
import tempfile
import unittest

import numpy as np

from metabbo.errors import InvalidArgumentError
from metabbo.networks import NetworkConfig, build_network
from metabbo.problems import EvalCounter, ProblemSpec
from metabbo.sampling import SampleSet, build_dataset, lhs_sample
from metabbo.surrogate import (
    SlsConfig,
    SurrogateEvaluator,
    TrainedSurrogate,
    export_landscape,
    lambda_schedule,
    order_correction,
    pairwise_order_accuracy,
    roa_loss,
    train_surrogate,
)

LONG_TESTS = bool(os.environ.get("METABBO_LONG_TESTS"))

TRUE_VALUES = [9.0, 5.1, 5.0, 3.0, 1.0]
PREDICTIONS = [9.0, 5.0, 5.1, 3.0, 1.0]


def brute_force_accuracy(y_true, y_pred):
    comparable = concordant = 0
    for i, j in itertools.combinations(range(len(y_true)), 2):
        if y_true[i] == y_true[j]:
            continue
        comparable += 1
        if (y_true[i] - y_true[j]) * (y_pred[i] - y_pred[j]) > 0:
            concordant += 1
    return concordant / comparable if comparable else 1.0


def train_on(spec, n, sls, seed, hidden=(5,)):
    dataset = build_dataset(spec, n, seed=seed)
    train, holdout = dataset.split(0.1, seed=seed)
    rng = np.random.default_rng(seed)
    net = build_network(NetworkConfig("kan", kan_hidden=list(hidden)), spec.dim, rng)
    return train_surrogate(train, net, sls, seed, holdout=holdout)


class TestOrderCorrection(unittest.TestCase):
    def test_worked_example(self):
        oc, _ = order_correction(TRUE_VALUES, PREDICTIONS)
        self.assertEqual(float(oc[1]), 2.0)

    def test_lower_bound(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            y_true = np.sort(rng.normal(size=12))[::-1]
            y_pred = y_true + rng.normal(scale=0.5, size=12)
            oc, _ = order_correction(y_true, y_pred)
            bound = 0.5 * (y_true[:-2] - y_true[2:])
            self.assertTrue(np.all(oc[1:-1] >= bound - 1e-12))
            inside = (y_true[2:] <= y_pred[1:-1]) & (y_pred[1:-1] <= y_true[:-2])
            np.testing.assert_allclose(oc[1:-1][inside], bound[inside], atol=1e-12)

    def test_needs_sorted_batch(self):
        with self.assertRaises(InvalidArgumentError):
            order_correction([1.0, 2.0], [1.0, 2.0])

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        y_true = np.sort(rng.normal(size=8))[::-1]
        y_pred = y_true + rng.normal(scale=0.3, size=8)
        _, grad = roa_loss(y_true, y_pred, lam=0.4)
        step = 1e-7
        for i in range(8):
            up, down = y_pred.copy(), y_pred.copy()
            up[i] += step
            down[i] -= step
            numeric = (roa_loss(y_true, up, 0.4)[0] - roa_loss(y_true, down, 0.4)[0]) / (2.0 * step)
            self.assertAlmostEqual(grad[i], numeric, places=5)

    def test_lambda_reaches_zero(self):
        lam = 1.0
        for epoch in range(1, 11):
            lam = lambda_schedule(epoch, 10, lam)
            self.assertGreaterEqual(lam, 0.0)
        self.assertEqual(lam, 0.0)


class TestOrderAccuracy(unittest.TestCase):
    def test_worked_example(self):
        self.assertEqual(pairwise_order_accuracy(TRUE_VALUES, PREDICTIONS), 0.9)
        self.assertEqual(brute_force_accuracy(TRUE_VALUES, PREDICTIONS), 0.9)

    def test_matches_brute_force_with_ties(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            y_true = np.round(rng.normal(size=30), 1)
            y_pred = np.round(y_true + rng.normal(scale=0.3, size=30), 1)
            self.assertAlmostEqual(
                pairwise_order_accuracy(y_true, y_pred), brute_force_accuracy(y_true, y_pred), places=12
            )

    def test_constant_truth(self):
        self.assertEqual(pairwise_order_accuracy([1.0, 1.0, 1.0], [0.0, 1.0, 2.0]), 1.0)


class TestSampling(unittest.TestCase):
    def test_latin_hypercube_strata(self):
        n = 50
        xs = lhs_sample(3, n, (-5.0, 5.0), seed=4)
        for column in xs.T:
            strata = np.floor((column + 5.0) / 10.0 * n).astype(int)
            self.assertEqual(sorted(strata.tolist()), list(range(n)))

    def test_same_seed_same_samples(self):
        np.testing.assert_array_equal(lhs_sample(2, 20, (-5.0, 5.0), 3), lhs_sample(2, 20, (-5.0, 5.0), 3))

    def test_dataset_counts_evaluations(self):
        counter = EvalCounter()
        build_dataset(ProblemSpec("rastrigin", 2), 300, seed=1, counter=counter)
        self.assertEqual(counter.consumed, 300)

    def test_save_and_load(self):
        dataset = build_dataset(ProblemSpec("schwefel", 2), 40, seed=2)
        with tempfile.TemporaryDirectory() as tmp:
            filename = os.path.join(tmp, "schwefel-2d.csv")
            dataset.save(filename)
            restored = SampleSet.load(filename)
        np.testing.assert_array_equal(restored.xs, dataset.xs)
        np.testing.assert_array_equal(restored.ys, dataset.ys)
        self.assertEqual(restored.problem, dataset.problem)
        self.assertEqual((restored.y_min, restored.y_max), (dataset.y_min, dataset.y_max))


class TestTraining(unittest.TestCase):
    def test_short_training_records_curve(self):
        sls = SlsConfig(batch_size=50, mse_epochs=3, roa_epochs=2, eval_period=2)
        surrogate = train_on(ProblemSpec("sphere", 2), 200, sls, seed=1)
        curve = surrogate.metadata["loss_curve"]
        self.assertEqual([row[0] for row in curve], ["mse"] * 3 + ["roa"] * 2)
        self.assertIsNotNone(curve[-1][5])
        self.assertTrue(0.0 <= surrogate.metadata["holdout_order_acc"] <= 1.0)
        self.assertEqual(surrogate.label, "sphere-2d")

    def test_mse_only_skips_second_phase(self):
        sls = SlsConfig(batch_size=50, mse_epochs=2, roa_epochs=5, loss="mse")
        surrogate = train_on(ProblemSpec("sphere", 2), 100, sls, seed=2)
        self.assertEqual(len(surrogate.metadata["loss_curve"]), 2)

    def test_training_is_deterministic(self):
        sls = SlsConfig(batch_size=50, mse_epochs=2, roa_epochs=2)
        first = train_on(ProblemSpec("rastrigin", 2), 100, sls, seed=5)
        second = train_on(ProblemSpec("rastrigin", 2), 100, sls, seed=5)
        for name, value in first.network.parameters().items():
            np.testing.assert_array_equal(second.network.parameters()[name], value)

    def test_save_load_and_evaluate(self):
        sls = SlsConfig(batch_size=50, mse_epochs=1, roa_epochs=1)
        surrogate = train_on(ProblemSpec("sphere", 2), 100, sls, seed=3)
        surrogate.metadata.pop("loss_curve")
        with tempfile.TemporaryDirectory() as tmp:
            filename = os.path.join(tmp, "sphere.ckpt.json")
            surrogate.save(filename)
            restored = TrainedSurrogate.load(filename)
        points = np.random.default_rng(0).uniform(-5.0, 5.0, size=(10, 2))
        np.testing.assert_array_equal(restored.predict(points), surrogate.predict(points))
        evaluator = SurrogateEvaluator(restored)
        self.assertEqual(evaluator(points).shape, (10,))
        self.assertEqual(evaluator.counter.consumed, 10)

    def test_landscape_grid(self):
        sls = SlsConfig(batch_size=50, mse_epochs=1, roa_epochs=0)
        surrogate = train_on(ProblemSpec("schwefel", 2), 100, sls, seed=3)
        rows = export_landscape(ProblemSpec("schwefel", 2).instantiate(), surrogate, resolution=11)
        self.assertEqual(len(rows), 121)
        self.assertEqual(rows[0][:2], (-5.0, -5.0))

    @unittest.skipUnless(LONG_TESTS, "set METABBO_LONG_TESTS to run")
    def test_sphere_order_accuracy(self):
        sls = SlsConfig(batch_size=100, mse_epochs=200, roa_epochs=200, learning_rate=0.01)
        surrogate = train_on(ProblemSpec("sphere", 2), 2000, sls, seed=1)
        self.assertGreaterEqual(surrogate.metadata["holdout_order_acc"], 0.95)

    @unittest.skipUnless(LONG_TESTS, "set METABBO_LONG_TESTS to run")
    def test_order_aware_loss_beats_mse_on_schwefel(self):
        sls = SlsConfig(mse_epochs=50, roa_epochs=50)
        wins = 0
        for seed in range(10):
            roa = train_on(ProblemSpec("schwefel", 2), 10000, sls, seed)
            mse = train_on(ProblemSpec("schwefel", 2), 10000, sls.with_loss("mse"), seed)
            wins += roa.metadata["holdout_order_acc"] > mse.metadata["holdout_order_acc"]
        self.assertGreaterEqual(wins, 8)


if __name__ == "__main__":
    unittest.main()
