"""
B-spline bases on uniform knot grids.

A grid with G intervals over [lo, hi] is extended by k knots on either side, giving G + 2k + 1 knots and
G + k basis functions of degree k.  On [lo, hi] the basis functions sum to one.

>>> knots = uniform_knots(5, 3)
>>> len(knots), float(knots[3]), float(knots[8])
(12, -1.0, 1.0)
>>> basis = spline_basis(np.array([0.3]), knots, 3)
>>> basis.shape, round(float(basis.sum()), 12)
((1, 8), 1.0)
"""

from typing import Tuple, Union

import numpy as np

from metabbo.errors import InvalidArgumentError


def uniform_knots(grid_size: int, order: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """
    Return the knot vector of a uniform grid with `grid_size` intervals extended by `order` knots per side.
    """
    if grid_size < 1:
        raise InvalidArgumentError("grid size must be positive, got {}".format(grid_size))
    if order < 0:
        raise InvalidArgumentError("spline order must not be negative, got {}".format(order))
    h = (hi - lo) / grid_size
    return np.arange(-order, grid_size + order + 1) * h + lo


def grid_range(knots: np.ndarray, order: int) -> Tuple[float, float]:
    """Return the interval on which the bases form a partition of unity."""
    return float(knots[order]), float(knots[len(knots) - order - 1])


def clamp_to_grid(x: np.ndarray, knots: np.ndarray, order: int) -> np.ndarray:
    """
    Clamp values into the grid.  The upper end is moved just inside since the intervals are half-open.
    """
    lo, hi = grid_range(knots, order)
    return np.clip(x, lo, np.nextafter(hi, lo))


def spline_basis(
    x: np.ndarray, knots: np.ndarray, order: int, derivative: bool = False
) -> Union[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
    """
    Evaluate all basis functions at x (any shape) with the Cox-de Boor recursion.

    The result has an additional last axis of length len(knots) - order - 1.  Values outside the grid
    are clamped to its edge, where the derivative is then zero.  With derivative=True, return the pair
    of values and derivatives.

    >>> knots = uniform_knots(4, 1)
    >>> spline_basis(np.array(0.0), knots, 1).tolist()
    [0.0, 0.0, 1.0, 0.0, 0.0]
    >>> spline_basis(np.array(0.25), uniform_knots(4, 0), 0).tolist()
    [0.0, 0.0, 1.0, 0.0]
    """
    if len(knots) < 2 * order + 2:
        raise InvalidArgumentError("need at least {:d} knots for order {:d}".format(2 * order + 2, order))
    raw = np.asarray(x, dtype=float)
    clamped = clamp_to_grid(raw, knots, order)
    inside = clamped == raw
    t = knots
    xe = clamped[..., np.newaxis]
    bases = ((xe >= t[:-1]) & (xe < t[1:])).astype(float)
    previous = bases
    for p in range(1, order + 1):
        previous = bases
        left = (xe - t[: -(p + 1)]) / (t[p:-1] - t[: -(p + 1)]) * bases[..., :-1]
        right = (t[p + 1 :] - xe) / (t[p + 1 :] - t[1:-p]) * bases[..., 1:]
        bases = left + right
    if not derivative:
        return bases
    if order == 0:
        return bases, np.zeros_like(bases)
    p = order
    slopes = p * (
        previous[..., :-1] / (t[p:-1] - t[: -(p + 1)]) - previous[..., 1:] / (t[p + 1 :] - t[1:-p])
    )
    return bases, np.where(inside[..., np.newaxis], slopes, 0.0)


def partition_of_unity_error(knots: np.ndarray, order: int, n_points: int = 1001) -> float:
    """
    Return the largest deviation of the basis sum from one on a dense set of points inside the grid.

    >>> partition_of_unity_error(uniform_knots(5, 5), 5) < 1e-9
    True
    """
    lo, hi = grid_range(knots, order)
    points = np.linspace(lo, hi, n_points)
    return float(np.max(np.abs(spline_basis(points, knots, order).sum(axis=-1) - 1.0)))
