import functools
import math
import unittest

import numpy as np

from metabbo.errors import BudgetExhaustedError, DimensionMismatchError, MetaBBOConfigError
from metabbo.problems import (
    FUNCTION_NAMES,
    TEST_FUNCTIONS,
    TRAIN_FUNCTIONS,
    EvalCounter,
    ProblemSpec,
    apply_ood,
    make_split,
    with_random_transforms,
)


def osz(x):
    if x == 0.0:
        return 0.0
    x_hat = math.log(abs(x))
    c_1, c_2 = (10.0, 7.9) if x > 0.0 else (5.5, 3.1)
    return math.copysign(math.exp(x_hat + 0.049 * (math.sin(c_1 * x_hat) + math.sin(c_2 * x_hat))), x)


def asy(x, i, dim, beta):
    if x > 0.0:
        return x ** (1.0 + beta * i / (dim - 1) * math.sqrt(x))
    return x


def penalty(x):
    return sum(max(0.0, abs(v) - 5.0) ** 2 for v in x)


def conditioning(alpha, i, dim):
    return alpha ** (0.5 * i / (dim - 1))


def scalar_sphere(x):
    return sum(v * v for v in x)


def scalar_ellipsoidal(x):
    dim = len(x)
    return sum(1e6 ** (i / (dim - 1)) * osz(v) ** 2 for i, v in enumerate(x))


def rastrigin_sum(z):
    return 10.0 * (len(z) - sum(math.cos(2.0 * math.pi * v) for v in z)) + sum(v * v for v in z)


def scalar_rastrigin(x):
    dim = len(x)
    return rastrigin_sum([conditioning(10.0, i, dim) * asy(osz(v), i, dim, 0.2) for i, v in enumerate(x)])


def scalar_buche_rastrigin(x):
    dim = len(x)
    z = []
    for i, v in enumerate(x):
        s = 10.0 ** (0.5 * i / (dim - 1))
        if osz(v) > 0.0 and i % 2 == 0:
            s *= 10.0
        z.append(s * osz(v))
    return rastrigin_sum(z) + 100.0 * penalty(x)


def scalar_linear_slope(x):
    dim = len(x)
    total = 0.0
    for i, v in enumerate(x):
        s = 10.0 ** (i / (dim - 1))
        z = v if 5.0 * v < 25.0 else 5.0
        total += 5.0 * s - s * z
    return total


def scalar_attractive_sector(x):
    dim = len(x)
    total = 0.0
    for i, v in enumerate(x):
        z = conditioning(10.0, i, dim) * v
        total += ((100.0 if z > 0.0 else 1.0) * z) ** 2
    return osz(total) ** 0.9


def scalar_step_ellipsoidal(x):
    dim = len(x)
    z_hat = [conditioning(10.0, i, dim) * v for i, v in enumerate(x)]
    body = 0.0
    for i, v in enumerate(z_hat):
        rounded = math.floor(0.5 + v) if abs(v) > 0.5 else math.floor(0.5 + 10.0 * v) / 10.0
        body += 100.0 ** (i / (dim - 1)) * rounded ** 2
    return 0.1 * max(abs(z_hat[0]) / 1e4, body) + penalty(x)


def rosenbrock_sum(z):
    return sum(100.0 * (z[i] ** 2 - z[i + 1]) ** 2 + (z[i] - 1.0) ** 2 for i in range(len(z) - 1))


def scalar_rosenbrock(x):
    return rosenbrock_sum([max(1.0, math.sqrt(len(x)) / 8.0) * v + 1.0 for v in x])


def scalar_rosenbrock_rotated(x):
    return rosenbrock_sum([max(1.0, math.sqrt(len(x)) / 8.0) * v + 0.5 for v in x])


def scalar_discus(x):
    return 1e6 * osz(x[0]) ** 2 + sum(osz(v) ** 2 for v in x[1:])


def scalar_bent_cigar(x):
    dim = len(x)
    z = [asy(v, i, dim, 0.5) for i, v in enumerate(x)]
    return z[0] ** 2 + 1e6 * sum(v * v for v in z[1:])


def scalar_different_powers(x):
    dim = len(x)
    return math.sqrt(sum(abs(v) ** (2.0 + 4.0 * i / (dim - 1)) for i, v in enumerate(x)))


def scalar_sharp_ridge(x):
    dim = len(x)
    z = [conditioning(10.0, i, dim) * v for i, v in enumerate(x)]
    return z[0] ** 2 + 100.0 * math.sqrt(sum(v * v for v in z[1:]))


def scalar_schwefel(x):
    dim = len(x)
    opt = 4.2096874633
    x_hat = [2.0 * v for v in x]
    z_hat = [x_hat[0]] + [x_hat[i] + 0.25 * (x_hat[i - 1] - opt) for i in range(1, dim)]
    z = [100.0 * (conditioning(10.0, i, dim) * (v - opt) + opt) for i, v in enumerate(z_hat)]
    body = -sum(v * math.sin(math.sqrt(abs(v))) for v in z) / (100.0 * dim)
    return body + 4.189828872724339 + 100.0 * penalty([v / 100.0 for v in z])


def scalar_weierstrass(x):
    dim = len(x)
    f_0 = sum(0.5 ** k * math.cos(math.pi * 3.0 ** k) for k in range(12))
    total = 0.0
    for i, v in enumerate(x):
        z = conditioning(0.01, i, dim) * osz(v)
        total += sum(0.5 ** k * math.cos(2.0 * math.pi * 3.0 ** k * (z + 0.5)) for k in range(12))
    return 10.0 * (total / dim - f_0) ** 3 + 10.0 / dim * penalty(x)


def schaffers(x, condition):
    dim = len(x)
    z = [conditioning(condition, i, dim) * asy(v, i, dim, 0.5) for i, v in enumerate(x)]
    total = 0.0
    for i in range(dim - 1):
        s = math.sqrt(z[i] ** 2 + z[i + 1] ** 2)
        total += math.sqrt(s) + math.sqrt(s) * math.sin(50.0 * s ** 0.2) ** 2
    return (total / (dim - 1)) ** 2 + 10.0 * penalty(x)


def scalar_schaffers(x):
    return schaffers(x, 10.0)


def scalar_schaffers_high_cond(x):
    return schaffers(x, 1000.0)


def scalar_composite_grie_rosen(x):
    dim = len(x)
    z = [max(1.0, math.sqrt(dim) / 8.0) * v + 0.5 for v in x]
    total = 0.0
    for i in range(dim - 1):
        s = 100.0 * (z[i] ** 2 - z[i + 1]) ** 2 + (z[i] - 1.0) ** 2
        total += s / 4000.0 - math.cos(s)
    return 10.0 / (dim - 1) * total + 10.0


def scalar_gallagher(x, peaks, heights, covariances):
    dim = len(x)
    best = 0.0
    for peak, height, covariance in zip(peaks, heights, covariances):
        quadratic = sum(c * (v - p) ** 2 for v, p, c in zip(x, peak, covariance))
        best = max(best, height * math.exp(-quadratic / (2.0 * dim)))
    return osz(10.0 - best) ** 2 + penalty(x)


def scalar_katsuura(x):
    dim = len(x)
    product = 1.0
    for i, v in enumerate(x):
        z = conditioning(100.0, i, dim) * v
        inner = sum(abs(2.0 ** j * z - round(2.0 ** j * z)) / 2.0 ** j for j in range(1, 33))
        product *= (1.0 + (i + 1) * inner) ** (10.0 / dim ** 1.2)
    scale = 10.0 / dim ** 2
    return scale * product - scale + penalty(x)


def scalar_lunacek_bi_rastrigin(x):
    dim = len(x)
    mu_0 = 2.5
    s = 1.0 - 1.0 / (2.0 * math.sqrt(dim + 20.0) - 8.2)
    mu_1 = -math.sqrt((mu_0 ** 2 - 1.0) / s)
    x_hat = [2.0 * v for v in x]
    sphere_0 = sum((v - mu_0) ** 2 for v in x_hat)
    sphere_1 = dim + s * sum((v - mu_1) ** 2 for v in x_hat)
    ripples = 10.0 * (
        dim - sum(math.cos(2.0 * math.pi * conditioning(100.0, i, dim) * (v - mu_0)) for i, v in enumerate(x_hat))
    )
    return min(sphere_0, sphere_1) + ripples + 1e4 * penalty(x)


SCALAR_FUNCTIONS = {
    "sphere": scalar_sphere,
    "ellipsoidal": scalar_ellipsoidal,
    "rastrigin": scalar_rastrigin,
    "buche_rastrigin": scalar_buche_rastrigin,
    "linear_slope": scalar_linear_slope,
    "attractive_sector": scalar_attractive_sector,
    "step_ellipsoidal": scalar_step_ellipsoidal,
    "rosenbrock_original": scalar_rosenbrock,
    "rosenbrock_rotated": scalar_rosenbrock_rotated,
    "ellipsoidal_high_cond": scalar_ellipsoidal,
    "discus": scalar_discus,
    "bent_cigar": scalar_bent_cigar,
    "sharp_ridge": scalar_sharp_ridge,
    "different_powers": scalar_different_powers,
    "rastrigin_f15": scalar_rastrigin,
    "schwefel": scalar_schwefel,
    "weierstrass": scalar_weierstrass,
    "schaffers": scalar_schaffers,
    "schaffers_high_cond": scalar_schaffers_high_cond,
    "composite_grie_rosen": scalar_composite_grie_rosen,
    "gallagher_101peaks": scalar_gallagher,
    "gallagher_21peaks": scalar_gallagher,
    "katsuura": scalar_katsuura,
    "lunacek_bi_rastrigin": scalar_lunacek_bi_rastrigin,
}


def scalar_gap(problem):
    """Return the scalar definition of an untransformed problem, shifted so that its optimum is at 0."""
    scalar = SCALAR_FUNCTIONS[problem.name]
    if problem.name.startswith("gallagher"):
        function = problem.function
        scalar = functools.partial(
            scalar, peaks=function.peaks, heights=function.heights, covariances=function.covariances
        )
    f_opt = scalar(problem.optimum_location().tolist())
    return lambda x: scalar(x) - f_opt


class TestBenchmarkFunctions(unittest.TestCase):
    def test_optimum_has_zero_gap(self):
        for dim in (2, 10):
            for name in FUNCTION_NAMES:
                with self.subTest(name=name, dim=dim):
                    problem = ProblemSpec(name, dim).instantiate()
                    self.assertLess(abs(problem.evaluate(problem.optimum_location())), 1e-9)

    def test_optimum_moves_with_transforms(self):
        for name in FUNCTION_NAMES:
            with self.subTest(name=name):
                spec = with_random_transforms(ProblemSpec(name, 5), seed=11)
                problem = spec.instantiate()
                self.assertLess(abs(problem.evaluate(problem.optimum_location())), 1e-6)

    def test_matches_scalar_definitions(self):
        self.assertEqual(sorted(SCALAR_FUNCTIONS), sorted(FUNCTION_NAMES))
        rng = np.random.default_rng(2024)
        for name in FUNCTION_NAMES:
            problem = ProblemSpec(name, 10).instantiate()
            scalar = scalar_gap(problem)
            points = rng.uniform(-5.0, 5.0, size=(100, 10))
            values = problem.evaluate(points)
            for point, value in zip(points, values):
                expected = scalar(point.tolist())
                with self.subTest(name=name):
                    self.assertLessEqual(abs(value - expected), 1e-8 * max(1.0, abs(expected)))

    def test_transforms_move_the_whole_landscape(self):
        rng = np.random.default_rng(31)
        for name in FUNCTION_NAMES:
            plain = ProblemSpec(name, 5).instantiate()
            spec = with_random_transforms(ProblemSpec(name, 5), seed=int(rng.integers(2 ** 31)))
            transformed = spec.instantiate()
            zs = rng.uniform(-5.0, 5.0, size=(20, 5))
            # x = R z + shift, one point per row
            xs = zs @ spec.rotation.T + spec.shift
            expected = plain.evaluate(zs)
            values = transformed.evaluate(xs)
            with self.subTest(name=name):
                np.testing.assert_allclose(values, expected, rtol=1e-8, atol=1e-8)

    def test_single_point_and_batch_agree(self):
        problem = ProblemSpec("schwefel", 3).instantiate()
        points = np.random.default_rng(3).uniform(-5.0, 5.0, size=(4, 3))
        batch = problem.evaluate(points)
        for point, value in zip(points, batch):
            self.assertAlmostEqual(problem.evaluate(point), value, places=12)

    def test_dimension_mismatch(self):
        problem = ProblemSpec("sphere", 3).instantiate()
        with self.assertRaises(DimensionMismatchError):
            problem.evaluate(np.zeros(2))

    def test_functions_needing_two_dimensions(self):
        for name in ("rosenbrock_original", "rosenbrock_rotated", "schaffers", "composite_grie_rosen"):
            with self.subTest(name=name):
                with self.assertRaises(MetaBBOConfigError):
                    ProblemSpec(name, 1).instantiate()


class TestEvalCounter(unittest.TestCase):
    def test_batches_count_per_row(self):
        counter = EvalCounter()
        problem = ProblemSpec("sphere", 2).instantiate(counter)
        problem.evaluate(np.zeros((7, 2)))
        problem.evaluate(np.zeros(2))
        self.assertEqual(counter.consumed, 8)

    def test_enforced_budget(self):
        counter = EvalCounter(budget=10, enforce=True)
        problem = ProblemSpec("sphere", 2).instantiate(counter)
        problem.evaluate(np.zeros((10, 2)))
        with self.assertRaises(BudgetExhaustedError):
            problem.evaluate(np.zeros(2))
        self.assertEqual(counter.consumed, 10)


class TestSplit(unittest.TestCase):
    def test_split_sizes(self):
        train, test = make_split()
        self.assertEqual((len(train), len(test)), (16, 8))
        self.assertTrue(all(spec.dim == 10 and not spec.has_transforms for spec in train + test))

    def test_split_members(self):
        train, test = make_split()
        train_names = {spec.name for spec in train}
        test_names = {spec.name for spec in test}
        self.assertIn("sphere", train_names)
        self.assertIn("schwefel", train_names)
        self.assertIn("weierstrass", test_names)
        self.assertIn("katsuura", test_names)
        self.assertFalse(train_names & test_names)
        self.assertEqual(len(TRAIN_FUNCTIONS) + len(TEST_FUNCTIONS), 24)


class TestOutOfDistribution(unittest.TestCase):
    def test_plain_30d(self):
        spec = apply_ood(ProblemSpec("katsuura", 10), "plain_30d", seed=1)
        self.assertEqual(spec.dim, 30)
        self.assertFalse(spec.has_transforms)

    def test_shift_rotate(self):
        spec = apply_ood(ProblemSpec("gallagher_21peaks", 10), "shift_rotate_10d", seed=5)
        self.assertEqual(spec.dim, 10)
        self.assertTrue(np.allclose(spec.rotation.T @ spec.rotation, np.eye(10), atol=1e-10))
        self.assertTrue(np.all(np.abs(spec.shift) <= 4.0))
        self.assertEqual(ProblemSpec.from_dict(spec.to_dict()), spec)

    def test_same_seed_same_transforms(self):
        first = apply_ood(ProblemSpec("schaffers", 10), "shift_rotate_10d", seed=8)
        second = apply_ood(ProblemSpec("schaffers", 10), "shift_rotate_10d", seed=8)
        self.assertEqual(first, second)


if __name__ == "__main__":
    unittest.main()
