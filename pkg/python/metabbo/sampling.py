"""
Training data for surrogates: Latin hypercube samples of a problem together with the affine maps
that normalize inputs to [-1, 1] and objective values to [0, 1].

The samples drawn here are the only evaluations of the true functions made while learning surrogates.
"""

import logging
import os
from typing import Optional, Tuple

import numpy as np
import simplejson as json
from scipy.stats import qmc

from metabbo.errors import InvalidArgumentError, MetaBBORuntimeError
from metabbo.json_encoder import dumps_line
from metabbo.problems import EvalCounter, ProblemSpec

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())

DEFAULT_HOLDOUT_FRACTION = 0.1


def lhs_sample(dim: int, n: int, bounds: Tuple[float, float], seed) -> np.ndarray:
    """
    Return n points of a Latin hypercube in the box [lower, upper]^dim (one point per row).

    Every column has exactly one value in each of the n equal strata of [lower, upper].

    >>> xs = lhs_sample(1, 4, (0.0, 4.0), seed=11)
    >>> sorted(np.floor(xs[:, 0]).astype(int).tolist())
    [0, 1, 2, 3]
    >>> bool(np.array_equal(xs, lhs_sample(1, 4, (0.0, 4.0), seed=11)))
    True
    """
    lower, upper = bounds
    if n < 1:
        raise InvalidArgumentError("number of samples must be positive, got {}".format(n))
    if dim < 1:
        raise InvalidArgumentError("dimension must be positive, got {}".format(dim))
    if not lower < upper:
        raise InvalidArgumentError("invalid bounds [{}, {}]".format(lower, upper))
    sampler = qmc.LatinHypercube(d=dim, seed=np.random.default_rng(seed))
    unit_samples = sampler.random(n=n)
    return qmc.scale(unit_samples, np.full(dim, float(lower)), np.full(dim, float(upper)))


class Normalizer:
    """
    Affine maps of inputs from [lower, upper] to [-1, 1] and of objective values from [y_min, y_max] to [0, 1].

    >>> normalizer = Normalizer(-5.0, 5.0, 10.0, 30.0)
    >>> normalizer.normalize_y(np.array([10.0, 15.0])).tolist()
    [0.0, 0.25]
    >>> Normalizer.from_dict(normalizer.to_dict()).denormalize_y(np.array([1.0])).tolist()
    [30.0]
    """

    def __init__(self, lower: float, upper: float, y_min: float, y_max: float) -> None:
        self.lower = float(lower)
        self.upper = float(upper)
        self.y_min = float(y_min)
        self.y_max = float(y_max)
        self.is_constant = not self.y_max > self.y_min

    def normalize_x(self, xs: np.ndarray) -> np.ndarray:
        return 2.0 * (np.asarray(xs, dtype=float) - self.lower) / (self.upper - self.lower) - 1.0

    def normalize_y(self, ys: np.ndarray) -> np.ndarray:
        if self.is_constant:
            return np.asarray(ys, dtype=float)
        return (np.asarray(ys, dtype=float) - self.y_min) / (self.y_max - self.y_min)

    def denormalize_y(self, values: np.ndarray) -> np.ndarray:
        if self.is_constant:
            return np.asarray(values, dtype=float)
        return np.asarray(values, dtype=float) * (self.y_max - self.y_min) + self.y_min

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "y_min": self.y_min,
            "y_max": self.y_max,
            "is_constant": self.is_constant,
        }

    @classmethod
    def from_dict(cls, info: dict) -> "Normalizer":
        return cls(info["lower"], info["upper"], info["y_min"], info["y_max"])


class SampleSet:
    """
    Samples (xs, ys) of one problem and the normalization constants fitted on the full dataset.

    Inputs map affinely from [lower, upper] to [-1, 1], objective values from [y_min, y_max] to [0, 1].
    When all objective values are equal, the value normalization is the identity and `is_constant` is set.

    >>> samples = SampleSet(np.array([[-5.0], [0.0], [5.0]]), np.array([3.0, 1.0, 2.0]), (-5.0, 5.0))
    >>> samples.normalize_x(samples.xs)[:, 0].tolist()
    [-1.0, 0.0, 1.0]
    >>> samples.normalize_y(samples.ys).tolist()
    [1.0, 0.0, 0.5]
    >>> samples.denormalize_y(np.array([0.5])).tolist()
    [2.0]
    """

    def __init__(
        self,
        xs: np.ndarray,
        ys: np.ndarray,
        bounds: Tuple[float, float],
        seed: Optional[int] = None,
        problem: Optional[dict] = None,
        y_range: Optional[Tuple[float, float]] = None,
    ) -> None:
        self.xs = np.array(xs, dtype=float)
        self.ys = np.array(ys, dtype=float)
        if self.xs.ndim != 2 or self.ys.shape != (self.xs.shape[0],):
            raise InvalidArgumentError("samples need shapes (N, dim) and (N,)")
        if len(self.ys) < 2:
            raise InvalidArgumentError("need at least two samples, got {:d}".format(len(self.ys)))
        if not np.all(np.isfinite(self.ys)):
            raise MetaBBORuntimeError("objective values of samples must be finite")
        self.lower, self.upper = float(bounds[0]), float(bounds[1])
        self.seed = seed
        self.problem = problem
        if y_range is None:
            y_range = (float(np.min(self.ys)), float(np.max(self.ys)))
        self.y_min, self.y_max = float(y_range[0]), float(y_range[1])
        self.normalizer = Normalizer(self.lower, self.upper, self.y_min, self.y_max)
        if self.normalizer.is_constant:
            logger.warning("Objective values are constant on the samples, normalization is the identity")
        # Read-only after construction
        self.xs.setflags(write=False)
        self.ys.setflags(write=False)

    def __len__(self):
        return len(self.ys)

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    @property
    def bounds(self) -> Tuple[float, float]:
        return self.lower, self.upper

    @property
    def is_constant(self) -> bool:
        return self.normalizer.is_constant

    def normalize_x(self, xs: np.ndarray) -> np.ndarray:
        return self.normalizer.normalize_x(xs)

    def normalize_y(self, ys: np.ndarray) -> np.ndarray:
        return self.normalizer.normalize_y(ys)

    def denormalize_y(self, values: np.ndarray) -> np.ndarray:
        return self.normalizer.denormalize_y(values)

    def subset(self, indices: np.ndarray) -> "SampleSet":
        """Return the samples at the given indices, keeping the normalization of this set."""
        return SampleSet(
            self.xs[indices],
            self.ys[indices],
            self.bounds,
            seed=self.seed,
            problem=self.problem,
            y_range=(self.y_min, self.y_max),
        )

    def split(self, holdout_fraction: float = DEFAULT_HOLDOUT_FRACTION, seed=None) -> Tuple["SampleSet", "SampleSet"]:
        """
        Split randomly into training and holdout samples (both keep the normalization of the full set).

        >>> full = SampleSet(np.arange(20.0).reshape(10, 2), np.arange(10.0), (0.0, 20.0))
        >>> train, holdout = full.split(0.2, seed=3)
        >>> len(train), len(holdout)
        (8, 2)
        >>> holdout.y_max
        9.0
        """
        if not 0.0 < holdout_fraction < 1.0:
            raise InvalidArgumentError("holdout fraction must be in (0, 1), got {}".format(holdout_fraction))
        n_holdout = int(round(holdout_fraction * len(self)))
        if n_holdout < 2 or len(self) - n_holdout < 2:
            raise InvalidArgumentError(
                "cannot split {:d} samples with holdout fraction {}".format(len(self), holdout_fraction)
            )
        order = np.random.default_rng(seed).permutation(len(self))
        return self.subset(np.sort(order[n_holdout:])), self.subset(np.sort(order[:n_holdout]))

    def header(self) -> dict:
        return {
            "dim": self.dim,
            "n": len(self),
            "bounds": [self.lower, self.upper],
            "y_min": self.y_min,
            "y_max": self.y_max,
            "seed": self.seed,
            "problem": self.problem,
        }

    def save(self, filename: str) -> None:
        """
        Write samples as CSV: one '#'-prefixed line of JSON with the header, one column name line, then rows.
        """
        column_names = ",".join(["x{:d}".format(i + 1) for i in range(self.dim)] + ["y"])
        rows = np.column_stack([self.xs, self.ys])
        logger.info("Writing %d samples to '%s'", len(self), filename)
        np.savetxt(
            filename, rows, fmt="%.17g", delimiter=",", header=dumps_line(self.header()) + "\n" + column_names
        )

    @classmethod
    def load(cls, filename: str) -> "SampleSet":
        logger.info("Reading samples from '%s'", filename)
        with open(filename) as f:
            first_line = f.readline()
        if not first_line.startswith("# "):
            raise InvalidArgumentError("file '{}' does not start with a sample header".format(filename))
        header = json.loads(first_line[2:])
        rows = np.loadtxt(filename, delimiter=",", ndmin=2)
        if rows.shape != (header["n"], header["dim"] + 1):
            raise InvalidArgumentError(
                "file '{}' should hold {:d} rows, found shape {}".format(filename, header["n"], rows.shape)
            )
        return cls(
            rows[:, :-1],
            rows[:, -1],
            tuple(header["bounds"]),
            seed=header["seed"],
            problem=header["problem"],
            y_range=(header["y_min"], header["y_max"]),
        )


def build_dataset(spec: ProblemSpec, n: int, seed: int, counter: Optional[EvalCounter] = None) -> SampleSet:
    """
    Evaluate the problem at n Latin hypercube points of its box and fit the normalization.

    >>> counter = EvalCounter()
    >>> samples = build_dataset(ProblemSpec("sphere", 2), 100, seed=5, counter=counter)
    >>> counter.consumed, len(samples), samples.y_min >= 0.0
    (100, 100, True)
    """
    problem = spec.instantiate(counter)
    xs = lhs_sample(spec.dim, n, spec.bounds, seed)
    ys = problem.evaluate(xs)
    logger.debug("Sampled '%s' at %d points, values in [%g, %g]", spec.label, n, np.min(ys), np.max(ys))
    return SampleSet(xs, ys, spec.bounds, seed=seed, problem=spec.to_dict())


def dataset_filename(output_dir: str, spec: ProblemSpec) -> str:
    return os.path.join(output_dir, "samples", "{}.csv".format(spec.label))
