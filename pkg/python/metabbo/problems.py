"""
The 24 noiseless BBOB functions with configurable dimension, shift and rotation.

Every function is defined on "inner" coordinates z.  A problem with transforms maps a point x of the
search space to z = R^T (x - shift), so that evaluating the transformed problem at R z + shift gives the
value of the untransformed problem at z.  Any further rotations that the COCO definitions use inside a
function are the identity here: the only rotation is the one applied on entry.

All values are optimality gaps: the function value at the known optimum is subtracted so that the
optimum evaluates to 0.

>>> sphere = ProblemSpec("sphere", 2).instantiate()
>>> float(sphere.evaluate([0.0, 0.0]))
0.0
>>> float(sphere.evaluate([1.0, 2.0]))
5.0
>>> [p.name for p in make_split()[1]][:2]
['weierstrass', 'schaffers']
"""

import logging
import math
import re
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Type, Union

import numpy as np

from metabbo.errors import (
    BudgetExhaustedError,
    DimensionMismatchError,
    InvalidArgumentError,
    MetaBBOConfigError,
    UnknownProblemError,
)

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())

LOWER_BOUND = -5.0
UPPER_BOUND = 5.0

# Shifts for out-of-distribution tests stay inside this box so that optima remain interior.
SHIFT_RANGE = 4.0

ORTHOGONALITY_TOLERANCE = 1e-9

OOD_MODES = ("shift_rotate_10d", "plain_30d")

# Large batches of the Gallagher functions are evaluated in chunks of rows to bound memory.
_GALLAGHER_CHUNK_ROWS = 2048


def normalize_name(name: str) -> str:
    """
    Return the lookup key for a function name, ignoring case and punctuation.

    >>> normalize_name("Rosenbrock_original")
    'rosenbrockoriginal'
    >>> normalize_name("Gallagher 101Peaks")
    'gallagher101peaks'
    """
    return re.sub("[^a-z0-9]", "", name.lower())


# ---- Transformations shared by several functions (all act on the last axis) ----


def _exponents(dim: int) -> np.ndarray:
    """Return (i - 1) / (D - 1) for i = 1..D, which is simply [0] in one dimension."""
    return np.linspace(0.0, 1.0, dim)


def lambda_diagonal(alpha: float, dim: int) -> np.ndarray:
    """
    Return the diagonal of the conditioning matrix with entries alpha^(0.5 (i - 1) / (D - 1)).

    >>> lambda_diagonal(100.0, 3).tolist()
    [1.0, 3.1622776601683795, 10.0]
    """
    return np.power(alpha, 0.5 * _exponents(dim))


def t_osz(x: np.ndarray) -> np.ndarray:
    """
    Oscillation transformation, applied element-wise.  Zero stays zero.

    >>> float(t_osz(np.array(0.0)))
    0.0
    >>> float(t_osz(np.array(1.0)))
    1.0
    """
    x = np.asarray(x, dtype=float)
    abs_x = np.abs(x)
    x_hat = np.where(abs_x > 0.0, np.log(np.where(abs_x > 0.0, abs_x, 1.0)), 0.0)
    c_1 = np.where(x > 0.0, 10.0, 5.5)
    c_2 = np.where(x > 0.0, 7.9, 3.1)
    return np.sign(x) * np.exp(x_hat + 0.049 * (np.sin(c_1 * x_hat) + np.sin(c_2 * x_hat)))


def t_asy(x: np.ndarray, beta: float) -> np.ndarray:
    """
    Asymmetry transformation: positive entries x_i become x_i^(1 + beta (i - 1) / (D - 1) sqrt(x_i)).
    """
    positive = np.maximum(x, 0.0)
    exponent = 1.0 + beta * _exponents(x.shape[-1]) * np.sqrt(positive)
    return np.where(x > 0.0, np.power(positive, exponent), x)


def f_pen(x: np.ndarray) -> np.ndarray:
    """
    Boundary penalty, the squared excess over the box [-5, 5] summed over coordinates.

    >>> f_pen(np.array([[6.0, -7.0, 1.0]])).tolist()
    [5.0]
    """
    return np.sum(np.square(np.maximum(0.0, np.abs(x) - UPPER_BOUND)), axis=-1)


def _rastrigin_sum(z: np.ndarray) -> np.ndarray:
    dim = z.shape[-1]
    return 10.0 * (dim - np.sum(np.cos(2.0 * math.pi * z), axis=-1)) + np.sum(np.square(z), axis=-1)


def _rosenbrock_sum(z: np.ndarray) -> np.ndarray:
    head, tail = z[:, :-1], z[:, 1:]
    return np.sum(100.0 * np.square(np.square(head) - tail) + np.square(head - 1.0), axis=-1)


def _rosenbrock_scale(dim: int) -> float:
    return max(1.0, math.sqrt(dim) / 8.0)


# ---- The functions ----


class BbobFunction:
    """
    Base class of the benchmark functions.

    Sub-classes implement `raw` for a batch of inner coordinates (one point per row) and, unless the
    optimum is at the origin, `optimum`.  The value at the optimum is computed once and subtracted.
    """

    name = ""
    min_dim = 1

    def __init__(self, dim: int) -> None:
        if dim < self.min_dim:
            raise MetaBBOConfigError(
                "function '{}' needs at least {:d} dimension(s), got {:d}".format(self.name, self.min_dim, dim)
            )
        self.dim = dim
        self.f_opt = float(self.raw(self.optimum()[np.newaxis, :])[0])

    def optimum(self) -> np.ndarray:
        """Return the location of the global optimum in inner coordinates."""
        return np.zeros(self.dim)

    def raw(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError("Forgot to implement raw in {}".format(self.__class__.__name__))

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.raw(z) - self.f_opt


_registry = {}  # type: Dict[str, Type[BbobFunction]]


def register(name: str) -> Callable[[Type[BbobFunction]], Type[BbobFunction]]:
    def decorate(cls: Type[BbobFunction]) -> Type[BbobFunction]:
        cls.name = name
        _registry[normalize_name(name)] = cls
        return cls

    return decorate


@register("sphere")
class Sphere(BbobFunction):
    def raw(self, z):
        return np.sum(np.square(z), axis=-1)


@register("ellipsoidal")
class Ellipsoidal(BbobFunction):
    condition = 1e6

    def raw(self, z):
        weights = np.power(self.condition, _exponents(self.dim))
        return np.sum(weights * np.square(t_osz(z)), axis=-1)


@register("rastrigin")
class Rastrigin(BbobFunction):
    def raw(self, z):
        return _rastrigin_sum(lambda_diagonal(10.0, self.dim) * t_asy(t_osz(z), 0.2))


@register("buche_rastrigin")
class BucheRastrigin(BbobFunction):
    def raw(self, z):
        scaled = t_osz(z)
        scales = np.tile(np.power(10.0, 0.5 * _exponents(self.dim)), (z.shape[0], 1))
        # Positive entries at odd positions (counting from one) get an extra factor of ten.
        odd_positions = np.zeros(self.dim, dtype=bool)
        odd_positions[::2] = True
        scales[(scaled > 0.0) & odd_positions] *= 10.0
        return _rastrigin_sum(scales * scaled) + 100.0 * f_pen(z)


@register("linear_slope")
class LinearSlope(BbobFunction):
    """
    The slope points towards the corner (5, ..., 5); beyond that corner the function is flat.
    """

    def optimum(self):
        return np.full(self.dim, UPPER_BOUND)

    def raw(self, z):
        x_opt = self.optimum()
        slopes = np.power(10.0, _exponents(self.dim))
        clipped = np.where(z * x_opt < UPPER_BOUND ** 2, z, x_opt)
        return np.sum(UPPER_BOUND * slopes - slopes * clipped, axis=-1)


@register("attractive_sector")
class AttractiveSector(BbobFunction):
    def raw(self, z):
        scaled = lambda_diagonal(10.0, self.dim) * z
        # The sector in the positive orthant direction is the steep one.
        factors = np.where(scaled > 0.0, 100.0, 1.0)
        return np.power(t_osz(np.sum(np.square(factors * scaled), axis=-1)), 0.9)


@register("step_ellipsoidal")
class StepEllipsoidal(BbobFunction):
    def raw(self, z):
        z_hat = lambda_diagonal(10.0, self.dim) * z
        z_tilde = np.where(np.abs(z_hat) > 0.5, np.floor(0.5 + z_hat), np.floor(0.5 + 10.0 * z_hat) / 10.0)
        weights = np.power(100.0, _exponents(self.dim))
        body = np.sum(weights * np.square(z_tilde), axis=-1)
        return 0.1 * np.maximum(np.abs(z_hat[:, 0]) / 1e4, body) + f_pen(z)


@register("rosenbrock_original")
class RosenbrockOriginal(BbobFunction):
    min_dim = 2

    def raw(self, z):
        return _rosenbrock_sum(_rosenbrock_scale(self.dim) * z + 1.0)


@register("rosenbrock_rotated")
class RosenbrockRotated(BbobFunction):
    min_dim = 2

    def optimum(self):
        return np.full(self.dim, 0.5 / _rosenbrock_scale(self.dim))

    def raw(self, z):
        return _rosenbrock_sum(_rosenbrock_scale(self.dim) * z + 0.5)


@register("ellipsoidal_high_cond")
class EllipsoidalHighCond(Ellipsoidal):
    pass


@register("discus")
class Discus(BbobFunction):
    def raw(self, z):
        squares = np.square(t_osz(z))
        return 1e6 * squares[:, 0] + np.sum(squares[:, 1:], axis=-1)


@register("bent_cigar")
class BentCigar(BbobFunction):
    def raw(self, z):
        squares = np.square(t_asy(z, 0.5))
        return squares[:, 0] + 1e6 * np.sum(squares[:, 1:], axis=-1)


@register("sharp_ridge")
class SharpRidge(BbobFunction):
    def raw(self, z):
        scaled = lambda_diagonal(10.0, self.dim) * z
        return np.square(scaled[:, 0]) + 100.0 * np.sqrt(np.sum(np.square(scaled[:, 1:]), axis=-1))


@register("different_powers")
class DifferentPowers(BbobFunction):
    def raw(self, z):
        return np.sqrt(np.sum(np.power(np.abs(z), 2.0 + 4.0 * _exponents(self.dim)), axis=-1))


@register("rastrigin_f15")
class RastriginF15(Rastrigin):
    pass


@register("schwefel")
class Schwefel(BbobFunction):
    """
    Schwefel x*sin(x) with the optimum at 4.2096874633 / 2 in every coordinate.
    """

    half_optimum = 4.2096874633 / 2.0

    def optimum(self):
        return np.full(self.dim, self.half_optimum)

    def raw(self, z):
        twice_opt = 2.0 * self.half_optimum
        x_hat = 2.0 * z
        z_hat = x_hat.copy()
        z_hat[:, 1:] += 0.25 * (x_hat[:, :-1] - twice_opt)
        zz = 100.0 * (lambda_diagonal(10.0, self.dim) * (z_hat - twice_opt) + twice_opt)
        body = -np.sum(zz * np.sin(np.sqrt(np.abs(zz))), axis=-1) / (100.0 * self.dim)
        return body + 4.189828872724339 + 100.0 * f_pen(zz / 100.0)


@register("weierstrass")
class Weierstrass(BbobFunction):
    n_terms = 12

    def raw(self, z):
        scaled = lambda_diagonal(0.01, self.dim) * t_osz(z)
        k = np.arange(self.n_terms)
        amplitudes = np.power(0.5, k)
        frequencies = np.power(3.0, k)
        f_0 = np.sum(amplitudes * np.cos(math.pi * frequencies))
        terms = amplitudes * np.cos(2.0 * math.pi * frequencies * (scaled[..., np.newaxis] + 0.5))
        inner = np.sum(terms, axis=-1)
        return 10.0 * np.power(np.mean(inner, axis=-1) - f_0, 3) + 10.0 / self.dim * f_pen(z)


@register("schaffers")
class Schaffers(BbobFunction):
    min_dim = 2
    condition = 10.0

    def raw(self, z):
        scaled = lambda_diagonal(self.condition, self.dim) * t_asy(z, 0.5)
        s = np.sqrt(np.square(scaled[:, :-1]) + np.square(scaled[:, 1:]))
        root_s = np.sqrt(s)
        body = np.mean(root_s + root_s * np.square(np.sin(50.0 * np.power(s, 0.2))), axis=-1)
        return np.square(body) + 10.0 * f_pen(z)


@register("schaffers_high_cond")
class SchaffersHighCond(Schaffers):
    condition = 1000.0


@register("composite_grie_rosen")
class CompositeGrieRosen(BbobFunction):
    min_dim = 2

    def optimum(self):
        return np.full(self.dim, 0.5 / _rosenbrock_scale(self.dim))

    def raw(self, z):
        shifted = _rosenbrock_scale(self.dim) * z + 0.5
        head, tail = shifted[:, :-1], shifted[:, 1:]
        s = 100.0 * np.square(np.square(head) - tail) + np.square(head - 1.0)
        return 10.0 / (self.dim - 1) * np.sum(s / 4000.0 - np.cos(s), axis=-1) + 10.0


class Gallagher(BbobFunction):
    """
    Gallagher's Gaussian peaks.  The first peak (height 10) sits at the origin, the other peak locations,
    heights and conditionings are drawn once from a generator seeded by the number of peaks and the dimension.
    """

    n_peaks = 0
    first_condition = 0.0
    peak_range = 0.0

    def __init__(self, dim: int) -> None:
        rng = np.random.default_rng([self.n_peaks, dim])
        others = self.n_peaks - 1
        self.heights = np.concatenate([[10.0], 1.1 + 8.0 * np.arange(others) / (others - 1)])
        conditions = np.concatenate(
            [[self.first_condition], np.power(1000.0, 2.0 * rng.permutation(others) / (others - 1))]
        )
        self.covariances = np.empty((self.n_peaks, dim))
        for i, alpha in enumerate(conditions):
            self.covariances[i] = rng.permutation(lambda_diagonal(alpha, dim)) / math.pow(alpha, 0.25)
        self.peaks = np.vstack(
            [np.zeros(dim), rng.uniform(-self.peak_range, self.peak_range, size=(others, dim))]
        )
        super().__init__(dim)

    def raw(self, z):
        values = []
        for start in range(0, z.shape[0], _GALLAGHER_CHUNK_ROWS):
            rows = z[start : start + _GALLAGHER_CHUNK_ROWS]
            diff = rows[:, np.newaxis, :] - self.peaks[np.newaxis, :, :]
            quadratic = np.sum(self.covariances * np.square(diff), axis=-1)
            best = np.max(self.heights * np.exp(-quadratic / (2.0 * self.dim)), axis=-1)
            values.append(np.square(t_osz(10.0 - best)) + f_pen(rows))
        return np.concatenate(values) if values else np.zeros(0)


@register("gallagher_101peaks")
class Gallagher101Peaks(Gallagher):
    n_peaks = 101
    first_condition = 1000.0
    peak_range = 5.0


@register("gallagher_21peaks")
class Gallagher21Peaks(Gallagher):
    n_peaks = 21
    first_condition = 1000.0 ** 2
    peak_range = 4.9


@register("katsuura")
class Katsuura(BbobFunction):
    n_terms = 32

    def raw(self, z):
        scaled = lambda_diagonal(100.0, self.dim) * z
        powers = np.power(2.0, np.arange(1, self.n_terms + 1))
        stretched = scaled[..., np.newaxis] * powers
        inner = np.sum(np.abs(stretched - np.round(stretched)) / powers, axis=-1)
        factors = np.power(1.0 + np.arange(1, self.dim + 1) * inner, 10.0 / math.pow(self.dim, 1.2))
        scale = 10.0 / self.dim ** 2
        return scale * np.prod(factors, axis=-1) - scale + f_pen(z)


@register("lunacek_bi_rastrigin")
class LunacekBiRastrigin(BbobFunction):
    mu_0 = 2.5

    def optimum(self):
        return np.full(self.dim, self.mu_0 / 2.0)

    def raw(self, z):
        s = 1.0 - 1.0 / (2.0 * math.sqrt(self.dim + 20.0) - 8.2)
        mu_1 = -math.sqrt((self.mu_0 ** 2 - 1.0) / s)
        x_hat = 2.0 * z
        sphere_0 = np.sum(np.square(x_hat - self.mu_0), axis=-1)
        sphere_1 = self.dim + s * np.sum(np.square(x_hat - mu_1), axis=-1)
        scaled = lambda_diagonal(100.0, self.dim) * (x_hat - self.mu_0)
        ripples = 10.0 * (self.dim - np.sum(np.cos(2.0 * math.pi * scaled), axis=-1))
        return np.minimum(sphere_0, sphere_1) + ripples + 1e4 * f_pen(z)


FUNCTION_NAMES = (
    "sphere",
    "ellipsoidal",
    "rastrigin",
    "buche_rastrigin",
    "linear_slope",
    "attractive_sector",
    "step_ellipsoidal",
    "rosenbrock_original",
    "rosenbrock_rotated",
    "ellipsoidal_high_cond",
    "discus",
    "bent_cigar",
    "sharp_ridge",
    "different_powers",
    "rastrigin_f15",
    "schwefel",
    "weierstrass",
    "schaffers",
    "schaffers_high_cond",
    "composite_grie_rosen",
    "gallagher_101peaks",
    "gallagher_21peaks",
    "katsuura",
    "lunacek_bi_rastrigin",
)

TRAIN_FUNCTIONS = FUNCTION_NAMES[:16]
TEST_FUNCTIONS = FUNCTION_NAMES[16:]


def canonical_name(name: str) -> str:
    """
    Return the registered name of a function or raise UnknownProblemError.

    >>> canonical_name("Gallagher101Peaks")
    'gallagher_101peaks'
    """
    try:
        return _registry[normalize_name(name)].name
    except KeyError:
        raise UnknownProblemError("unknown benchmark function: '{}'".format(name)) from None


def get_function(name: str, dim: int) -> BbobFunction:
    return _registry[normalize_name(canonical_name(name))](dim)


# ---- Problem descriptions, materialized problems and evaluation budgets ----


class EvalCounter:
    """
    Count function evaluations, optionally enforcing a budget.

    >>> counter = EvalCounter(budget=2, enforce=True)
    >>> counter.charge(2)
    >>> counter.remaining
    0
    >>> counter.charge(1)
    Traceback (most recent call last):
    metabbo.errors.BudgetExhaustedError: evaluation budget of 2 exhausted (consumed 2, requested 1)
    """

    def __init__(self, budget: Optional[int] = None, enforce: bool = False) -> None:
        if budget is not None and budget <= 0:
            raise InvalidArgumentError("budget must be positive, got {}".format(budget))
        if enforce and budget is None:
            raise InvalidArgumentError("cannot enforce a budget without a budget")
        self.consumed = 0
        self.budget = budget
        self.enforce = enforce

    @property
    def remaining(self) -> Optional[int]:
        if self.budget is None:
            return None
        return self.budget - self.consumed

    def charge(self, n: int = 1) -> None:
        if self.enforce and self.consumed + n > self.budget:
            raise BudgetExhaustedError(
                "evaluation budget of {:d} exhausted (consumed {:d}, requested {:d})".format(
                    self.budget, self.consumed, n
                )
            )
        self.consumed += n


class ProblemSpec:
    """
    Description of one benchmark problem: function, dimension, optional shift and rotation, and bounds.

    The seed records where a random shift or rotation came from so that the spec can be written out as
    structured text and rebuilt (see `to_dict` and `from_dict`).

    >>> spec = ProblemSpec("Sphere", 3)
    >>> spec.name, spec.dim, spec.has_transforms
    ('sphere', 3, False)
    >>> ProblemSpec.from_dict(spec.to_dict()) == spec
    True
    >>> ProblemSpec("sphere", 0)
    Traceback (most recent call last):
    metabbo.errors.InvalidArgumentError: dimension must be at least 1, got 0
    """

    def __init__(
        self,
        name: str,
        dim: int,
        shift: Optional[Sequence[float]] = None,
        rotation: Optional[np.ndarray] = None,
        lower: float = LOWER_BOUND,
        upper: float = UPPER_BOUND,
        seed: Optional[int] = None,
    ) -> None:
        self.name = canonical_name(name)
        if dim < 1:
            raise InvalidArgumentError("dimension must be at least 1, got {}".format(dim))
        if not lower < upper:
            raise InvalidArgumentError("invalid bounds [{}, {}]".format(lower, upper))
        self.dim = int(dim)
        self.lower = float(lower)
        self.upper = float(upper)
        self.seed = seed
        self.shift = None if shift is None else np.array(shift, dtype=float)
        self.rotation = None if rotation is None else np.array(rotation, dtype=float)
        if self.shift is not None:
            if self.shift.shape != (self.dim,):
                raise DimensionMismatchError("shift must have shape ({:d},)".format(self.dim))
            if np.any(self.shift < self.lower) or np.any(self.shift > self.upper):
                raise InvalidArgumentError("shift must lie inside the bounds")
        if self.rotation is not None:
            if self.rotation.shape != (self.dim, self.dim):
                raise DimensionMismatchError("rotation must have shape ({0:d}, {0:d})".format(self.dim))
            deviation = np.max(np.abs(self.rotation.T @ self.rotation - np.eye(self.dim)))
            if deviation > ORTHOGONALITY_TOLERANCE:
                raise InvalidArgumentError("rotation is not orthogonal (max deviation {:.3g})".format(deviation))

    @property
    def has_transforms(self) -> bool:
        return self.shift is not None or self.rotation is not None

    @property
    def bounds(self) -> Tuple[float, float]:
        return self.lower, self.upper

    @property
    def label(self) -> str:
        """
        Short description used in logs and output files, like 'sphere-10d' or 'sphere-10d-sr'.
        """
        suffix = "-sr" if self.has_transforms else ""
        return "{0.name}-{0.dim:d}d{1}".format(self, suffix)

    def __eq__(self, other):
        if not isinstance(other, ProblemSpec):
            return NotImplemented
        return (
            (self.name, self.dim, self.lower, self.upper) == (other.name, other.dim, other.lower, other.upper)
            and _same_optional_array(self.shift, other.shift)
            and _same_optional_array(self.rotation, other.rotation)
        )

    def __repr__(self):
        return "ProblemSpec('{0.name}', {0.dim:d}, transforms={0.has_transforms})".format(self)

    def to_dict(self) -> Dict[str, Union[str, int, float, bool, None]]:
        return {
            "function": self.name,
            "dim": self.dim,
            "lower": self.lower,
            "upper": self.upper,
            "seed": self.seed,
            "shift": self.shift is not None,
            "rotate": self.rotation is not None,
        }

    @classmethod
    def from_dict(cls, info: dict) -> "ProblemSpec":
        lower, upper = info.get("lower", LOWER_BOUND), info.get("upper", UPPER_BOUND)
        spec = cls(info["function"], info["dim"], lower=lower, upper=upper)
        if info.get("shift") or info.get("rotate"):
            if info.get("seed") is None:
                raise InvalidArgumentError("a transformed problem needs the seed of its transforms")
            spec = with_random_transforms(
                spec, info["seed"], shift=bool(info.get("shift")), rotate=bool(info.get("rotate"))
            )
        return spec

    def instantiate(self, counter: Optional[EvalCounter] = None) -> "Problem":
        return Problem(self, counter)


def _same_optional_array(a: Optional[np.ndarray], b: Optional[np.ndarray]) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return np.array_equal(a, b)


class Problem:
    """
    A problem ready for evaluation: the spec, the function with its constants, and an optional counter.

    A problem with its counter is meant to be used by one worker only.
    """

    def __init__(self, spec: ProblemSpec, counter: Optional[EvalCounter] = None) -> None:
        self.spec = spec
        self.function = get_function(spec.name, spec.dim)
        self.counter = counter

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def bounds(self) -> Tuple[float, float]:
        return self.spec.bounds

    def to_inner(self, x: np.ndarray) -> np.ndarray:
        z = x
        if self.spec.shift is not None:
            z = z - self.spec.shift
        if self.spec.rotation is not None:
            # Row-vector form of R^T (x - shift)
            z = z @ self.spec.rotation
        return z

    def optimum_location(self) -> np.ndarray:
        """Return the location of the global optimum in search-space coordinates."""
        x = self.function.optimum()
        if self.spec.rotation is not None:
            x = self.spec.rotation @ x
        if self.spec.shift is not None:
            x = x + self.spec.shift
        return x

    def evaluate(self, x) -> Union[float, np.ndarray]:
        """
        Evaluate a single point (returns a float) or a batch with one point per row (returns an array).

        Points outside the bounds may be evaluated; keeping within the bounds is up to the optimizer.
        Each point counts as one evaluation on the attached counter.
        """
        points = np.asarray(x, dtype=float)
        single = points.ndim == 1
        if single:
            points = points[np.newaxis, :]
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise DimensionMismatchError(
                "expected point(s) of dimension {:d} for '{}', got shape {}".format(
                    self.dim, self.name, np.shape(x)
                )
            )
        if self.counter is not None:
            self.counter.charge(points.shape[0])
        values = self.function(self.to_inner(points))
        return float(values[0]) if single else values

    __call__ = evaluate


def evaluate(problem: Problem, x) -> Union[float, np.ndarray]:
    return problem.evaluate(x)


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """
    Return a Haar-uniform random orthogonal matrix: QR decomposition of a Gaussian matrix with the signs of
    R's diagonal moved into Q.

    >>> q = random_rotation(4, np.random.default_rng(7))
    >>> bool(np.allclose(q.T @ q, np.eye(4), atol=1e-12))
    True
    """
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs


def with_random_transforms(spec: ProblemSpec, seed: int, shift: bool = True, rotate: bool = True) -> ProblemSpec:
    """
    Return a copy of an untransformed spec with random shift (uniform in [-4, 4]^D) and/or random rotation.
    """
    if spec.has_transforms:
        raise InvalidArgumentError("problem '{}' already has transforms".format(spec.label))
    rng = np.random.default_rng(seed)
    shift_vector = rng.uniform(-SHIFT_RANGE, SHIFT_RANGE, size=spec.dim) if shift else None
    rotation = random_rotation(spec.dim, rng) if rotate else None
    return ProblemSpec(spec.name, spec.dim, shift_vector, rotation, spec.lower, spec.upper, seed=seed)


def make_split(dim: int = 10) -> Tuple[List[ProblemSpec], List[ProblemSpec]]:
    """
    Return the fixed split of 16 training and 8 test functions, untransformed.

    >>> train, test = make_split()
    >>> len(train), len(test), train[0].dim
    (16, 8, 10)
    """
    train = [ProblemSpec(name, dim) for name in TRAIN_FUNCTIONS]
    test = [ProblemSpec(name, dim) for name in TEST_FUNCTIONS]
    return train, test


def apply_ood(spec: ProblemSpec, mode: str, seed: int) -> ProblemSpec:
    """
    Turn an untransformed test problem into an out-of-distribution variant.

    >>> apply_ood(ProblemSpec("weierstrass", 10), "plain_30d", seed=1)
    ProblemSpec('weierstrass', 30, transforms=False)
    >>> apply_ood(ProblemSpec("weierstrass", 10), "shift_rotate_10d", seed=1).has_transforms
    True
    """
    if spec.has_transforms:
        raise InvalidArgumentError("OOD variants start from untransformed problems, got '{}'".format(spec.label))
    if mode == "shift_rotate_10d":
        return with_random_transforms(spec, seed)
    elif mode == "plain_30d":
        return ProblemSpec(spec.name, 30, lower=spec.lower, upper=spec.upper)
    raise InvalidArgumentError("unknown OOD mode '{}' (expected one of {})".format(mode, ", ".join(OOD_MODES)))
