import unittest

import numpy as np

from metabbo.de_core import (
    MUTATION_OPERATORS,
    MUTATION_STRENGTHS,
    N_ACTIONS,
    STATIC_DE_ACTION,
    DeConfig,
    DifferentialEvolution,
    MutationConfig,
    Population,
    constant_policy,
    crossover_select,
    decode_action,
    draw_distinct_indices,
    encode_action,
    mutate,
    random_search,
)
from metabbo.errors import InvalidArgumentError, PopulationTooSmallError
from metabbo.problems import EvalCounter, ProblemSpec


class FlatEvaluator:
    """Every point has value zero, so every trial is accepted."""

    dim = 3
    bounds = (-100.0, 100.0)

    def __call__(self, xs):
        return np.zeros(len(xs))


class TestActions(unittest.TestCase):
    def test_all_actions_decode_and_encode(self):
        configs = [decode_action(action) for action in range(N_ACTIONS)]
        self.assertEqual(len(set(configs)), 15)
        self.assertEqual([encode_action(config) for config in configs], list(range(N_ACTIONS)))
        self.assertEqual({c.operator for c in configs}, set(MUTATION_OPERATORS))
        self.assertEqual({c.strength for c in configs}, set(MUTATION_STRENGTHS))

    def test_static_action(self):
        self.assertEqual(decode_action(STATIC_DE_ACTION), MutationConfig("rand1", 0.5))

    def test_invalid_actions(self):
        for action in (-1, 15, 2.5, True):
            with self.subTest(action=action):
                with self.assertRaises(InvalidArgumentError):
                    decode_action(action)


class TestOperators(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(21)
        self.population = Population.from_evaluated(rng.uniform(-5.0, 5.0, (10, 3)), rng.uniform(0.0, 1.0, 10))

    def test_distinct_indices(self):
        rows = draw_distinct_indices(np.random.default_rng(0), 8, 3)
        self.assertEqual(rows.shape, (8, 3))
        for i, row in enumerate(rows.tolist()):
            self.assertEqual(len(set(row)), 3)
            self.assertNotIn(i, row)

    def test_pbest_with_single_top_member_is_current_to_best(self):
        config = DeConfig(10, pbest_fraction=0.1)
        pbest = mutate(
            self.population, MutationConfig("current_to_pbest", 0.5), np.random.default_rng(4), config.pbest_fraction
        )
        best = mutate(self.population, MutationConfig("current_to_best", 0.5), np.random.default_rng(4))
        np.testing.assert_allclose(pbest, best)

    def test_zero_scale_factor_leaves_current_members(self):
        donors = mutate(self.population, MutationConfig("current_to_rand", 0.0), np.random.default_rng(1))
        np.testing.assert_array_equal(donors, self.population.xs)

    def test_too_small_population(self):
        population = Population.from_evaluated(np.zeros((4, 2)), np.zeros(4))
        with self.assertRaises(PopulationTooSmallError):
            mutate(population, MutationConfig("rand1", 0.5), np.random.default_rng(0))

    def test_crossover_takes_at_least_one_donor_coordinate(self):
        donors = self.population.xs + 1.0
        following = crossover_select(self.population, donors, FlatEvaluator(), np.random.default_rng(2), 0.0)
        changed = np.sum(following.xs != self.population.xs, axis=1)
        self.assertEqual(changed.tolist(), [1] * 10)

    def test_trials_are_clamped(self):
        donors = np.full_like(self.population.xs, 1000.0)
        following = crossover_select(self.population, donors, FlatEvaluator(), np.random.default_rng(2), 1.0)
        self.assertTrue(np.all(following.xs == 100.0))


class TestDifferentialEvolution(unittest.TestCase):
    def test_generations_and_budget(self):
        counter = EvalCounter(budget=1050, enforce=True)
        problem = ProblemSpec("rastrigin", 5).instantiate(counter)
        engine = DifferentialEvolution(problem, DeConfig(20, max_fes=1050), seed=8)
        trace = engine.run(constant_policy(STATIC_DE_ACTION))
        self.assertEqual(len(trace), 1050 // 20)
        self.assertEqual(engine.fes, 1040)
        self.assertEqual(counter.consumed, engine.fes)
        self.assertIsNone(trace[0].action)
        self.assertTrue(all(record.action == STATIC_DE_ACTION for record in trace[1:]))

    def test_best_value_never_gets_worse(self):
        problem = ProblemSpec("schwefel", 5).instantiate()
        engine = DifferentialEvolution(problem, DeConfig(20, max_fes=2000), seed=2)
        actions = iter(range(10 ** 6))
        trace = engine.run(lambda state: next(actions) % N_ACTIONS)
        best = [record.best_y for record in trace]
        self.assertTrue(all(later <= earlier for earlier, later in zip(best, best[1:])))
        self.assertLess(best[-1], best[0])

    def test_same_seed_same_run(self):
        def run(seed):
            engine = DifferentialEvolution(ProblemSpec("ellipsoidal", 4).instantiate(), DeConfig(10, max_fes=500), seed)
            return engine.run(constant_policy(encode_action(MutationConfig("best1", 0.9))))

        self.assertEqual(run(5), run(5))
        self.assertNotEqual(run(5), run(6))

    def test_states_are_bounded(self):
        engine = DifferentialEvolution(ProblemSpec("katsuura", 3).instantiate(), DeConfig(10, max_fes=300), seed=1)
        states = [engine.start()]
        while not engine.done:
            states.append(engine.advance(STATIC_DE_ACTION))
        for state in states:
            self.assertEqual(state.shape, (9,))
            self.assertTrue(np.all(np.isfinite(state)))
        budget = [state[6] for state in states]
        self.assertTrue(all(later > earlier for earlier, later in zip(budget, budget[1:])))
        total = [state[8] for state in states]
        self.assertTrue(all(later >= earlier for earlier, later in zip(total, total[1:])))

    def test_cannot_advance_past_budget(self):
        engine = DifferentialEvolution(ProblemSpec("sphere", 2).instantiate(), DeConfig(10, max_fes=20), seed=1)
        engine.start()
        engine.advance(0)
        with self.assertRaises(InvalidArgumentError):
            engine.advance(0)

    def test_random_search_uses_whole_budget(self):
        counter = EvalCounter()
        curve = random_search(ProblemSpec("sphere", 3).instantiate(counter), 1234, seed=0)
        self.assertEqual(curve[-1][0], 1234)
        self.assertEqual(counter.consumed, 1234)
        values = [best for _, best in curve]
        self.assertEqual(values, sorted(values, reverse=True))


if __name__ == "__main__":
    unittest.main()
