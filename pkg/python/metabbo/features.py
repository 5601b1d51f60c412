"""
The optimization state seen by the policy: nine numbers computed from the population and the run's progress.

    s1  mean pairwise distance of members / diameter of the box
    s2  std of values / (max - min of values)
    s3  distance of the centroid from the best member / diameter
    s4  correlation of values with the distance from the best member
    s5  correlation of values with the distance from the best point so far
    s6  relative improvement of the best value in the last generation, clipped to [-1, 1]
    s7  consumed evaluations / budget
    s8  generations without improvement / generations in the run
    s9  improvement over the best initial value, squashed to [0, 1)

The features do not depend on the dimension or the scale of values, so a policy trained in one
dimension applies to others.  Correlations are zero when either side has no spread.
"""

from typing import TYPE_CHECKING, NamedTuple, Tuple

import numpy as np
from scipy.spatial.distance import pdist
from scipy.stats import pearsonr

if TYPE_CHECKING:
    from metabbo.de_core import Population

EPSILON = 1e-12

FEATURE_NAMES = (
    "dispersion",
    "value_spread",
    "centroid_offset",
    "fdc_best",
    "fdc_best_so_far",
    "recent_improvement",
    "budget_used",
    "stagnation",
    "total_improvement",
)

N_FEATURES = len(FEATURE_NAMES)


class Progress(NamedTuple):
    fes: int
    max_fes: int
    stagnation_gens: int
    total_generations: int
    y_init: float
    y_prev: float
    y_now: float


def _has_spread(values: np.ndarray) -> bool:
    return float(np.ptp(values)) > EPSILON * max(1.0, float(np.max(np.abs(values))))


def correlation(a: np.ndarray, b: np.ndarray) -> float:
    """
    Return the Pearson correlation coefficient, or 0 when either input is constant.

    >>> correlation(np.array([1.0, 2.0, 3.0]), np.array([2.0, 4.0, 7.0])) > 0.9
    True
    >>> correlation(np.array([1.0, 1.0, 1.0]), np.array([2.0, 4.0, 7.0]))
    0.0
    """
    if len(a) < 2 or not (_has_spread(a) and _has_spread(b)):
        return 0.0
    coefficient = float(pearsonr(a, b)[0])
    if not np.isfinite(coefficient):
        return 0.0
    return float(np.clip(coefficient, -1.0, 1.0))


def extract_state(population: "Population", progress: Progress, bounds: Tuple[float, float]) -> np.ndarray:
    """
    Return the nine features of the state.

    >>> from metabbo.de_core import Population
    >>> pop = Population.from_evaluated(np.zeros((5, 3)), np.ones(5))
    >>> state = extract_state(pop, Progress(500, 1000, 0, 9, 1.0, 1.0, 1.0), (-5.0, 5.0))
    >>> state.tolist()
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0]
    """
    lower, upper = bounds
    xs, ys = population.xs, population.ys
    diameter = (upper - lower) * np.sqrt(population.dim)
    best = xs[population.best_idx]

    dispersion = float(np.mean(pdist(xs))) / diameter if population.size > 1 else 0.0
    value_range = float(np.max(ys) - np.min(ys))
    value_spread = float(np.std(ys)) / (value_range + EPSILON) if value_range > 0.0 else 0.0
    centroid_offset = float(np.linalg.norm(np.mean(xs, axis=0) - best)) / diameter
    fdc_best = correlation(ys, np.linalg.norm(xs - best, axis=1))
    fdc_best_so_far = correlation(ys, np.linalg.norm(xs - population.best_x, axis=1))

    y_prev, y_now, y_init = progress.y_prev, progress.y_now, progress.y_init
    recent_improvement = float(np.clip((y_prev - y_now) / (abs(y_prev) + EPSILON), -1.0, 1.0))
    budget_used = min(1.0, progress.fes / progress.max_fes)
    stagnation = min(1.0, progress.stagnation_gens / max(1, progress.total_generations))
    gain = max(0.0, y_init - y_now)
    total_improvement = gain / (gain + EPSILON) if gain > 0.0 else 0.0

    state = np.array(
        [
            dispersion,
            value_spread,
            centroid_offset,
            fdc_best,
            fdc_best_so_far,
            recent_improvement,
            budget_used,
            stagnation,
            total_improvement,
        ]
    )
    return np.nan_to_num(state, nan=0.0, posinf=1.0, neginf=-1.0)
