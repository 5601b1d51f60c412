"""
Kolmogorov-Arnold networks: every edge of a layer is a learnable univariate function

    phi(x) = w_b * silu(x) + w_s * sum_i c_i B_i(x)

and every node sums its incoming edges.  The knot grid is fixed (uniform over [-1, 1]); only c, w_b and
w_s are trained.  The spline term sees its input clamped to the grid while silu sees the raw input.
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from metabbo.errors import InvalidArgumentError, MetaBBOSystemError
from metabbo.networks.base import Network, Tape
from metabbo.networks.splines import partition_of_unity_error, spline_basis, uniform_knots

PARTITION_TOLERANCE = 1e-9


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def silu(x: np.ndarray) -> np.ndarray:
    """
    >>> round(float(silu(np.array(1.0))), 4)
    0.7311
    """
    return x * sigmoid(x)


def silu_derivative(x: np.ndarray) -> np.ndarray:
    s = sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


def kan_edge(x: float, w_b: float, w_s: float, coeffs: np.ndarray, knots: np.ndarray, order: int) -> float:
    """
    Evaluate a single edge function.

    >>> knots = uniform_knots(5, 5)
    >>> kan_edge(0.0, 1.0, 0.0, np.zeros(10), knots, 5)
    0.0
    >>> round(kan_edge(0.3, 0.0, 1.0, np.ones(10), knots, 5), 9)
    1.0
    """
    basis = spline_basis(np.asarray(x, dtype=float), knots, order)
    return float(w_b * silu(np.asarray(x, dtype=float)) + w_s * np.dot(basis, coeffs))


class KanNetwork(Network):
    """
    Stack of KAN layers with shape like [2, 5, 1]: two inputs, one hidden layer of five nodes, one output.

    >>> net = KanNetwork([2, 3, 1], grid_size=5, order=3, rng=np.random.default_rng(0))
    >>> list(net.parameters())
    ['layers.0.coeffs', 'layers.0.w_b', 'layers.0.w_s', 'layers.1.coeffs', 'layers.1.w_b', 'layers.1.w_s']
    >>> net.parameters()["layers.0.coeffs"].shape
    (3, 2, 8)
    >>> net.set_parameters({name: np.zeros_like(value) for name, value in net.parameters().items()})
    >>> net.predict(np.array([0.2, -0.7])).tolist()
    [0.0]
    """

    arch = "kan"

    def __init__(
        self,
        layers: Sequence[int],
        grid_size: int = 5,
        order: int = 5,
        coeff_std: float = 0.1,
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        if len(layers) < 2 or any(size < 1 for size in layers):
            raise InvalidArgumentError("invalid KAN layer sizes: {}".format(list(layers)))
        super().__init__(layers[0], layers[-1])
        self.layers = list(layers)
        self.grid_size = grid_size
        self.order = order
        self.knots = uniform_knots(grid_size, order)
        n_basis = grid_size + order
        if rng is None:
            rng = np.random.default_rng()
        for i, (n_in, n_out) in enumerate(zip(self.layers, self.layers[1:])):
            self._params["layers.{:d}.coeffs".format(i)] = rng.normal(0.0, coeff_std, size=(n_out, n_in, n_basis))
            self._params["layers.{:d}.w_b".format(i)] = np.ones((n_out, n_in))
            self._params["layers.{:d}.w_s".format(i)] = np.ones((n_out, n_in))
        self.check_grid()

    def descriptor(self) -> dict:
        return {"arch": self.arch, "layers": list(self.layers), "grid_size": self.grid_size, "order": self.order}

    def check_grid(self) -> None:
        """Make sure the knot grid is nondecreasing and its bases sum to one (every edge shares the grid)."""
        if np.any(np.diff(self.knots) < 0.0):
            raise MetaBBOSystemError("knot vector is not nondecreasing")
        error = partition_of_unity_error(self.knots, self.order)
        if error > PARTITION_TOLERANCE:
            raise MetaBBOSystemError("spline bases violate partition of unity (error {:.3g})".format(error))

    def _layer_params(self, i: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            self._params["layers.{:d}.coeffs".format(i)],
            self._params["layers.{:d}.w_b".format(i)],
            self._params["layers.{:d}.w_s".format(i)],
        )

    def _forward(self, inputs: np.ndarray, tape: Tape) -> np.ndarray:
        h = inputs
        for i in range(len(self.layers) - 1):
            coeffs, w_b, w_s = self._layer_params(i)
            basis, basis_slope = spline_basis(h, self.knots, self.order, derivative=True)
            base = silu(h)
            # Spline value of every edge: (batch, out, in)
            splines = np.einsum("nib,oib->noi", basis, coeffs)
            tape.layers.append((h, base, basis, basis_slope, splines))
            h = base @ w_b.T + np.einsum("oi,noi->no", w_s, splines)
        return h

    def _backward(self, tape: Tape, grad_y: np.ndarray) -> Tuple[Dict[str, np.ndarray], Optional[np.ndarray]]:
        grads = {}  # type: Dict[str, np.ndarray]
        upstream = grad_y
        for i in reversed(range(len(self.layers) - 1)):
            coeffs, w_b, w_s = self._layer_params(i)
            h, base, basis, basis_slope, splines = tape.layers[i]
            grads["layers.{:d}.w_b".format(i)] = upstream.T @ base
            grads["layers.{:d}.w_s".format(i)] = np.einsum("no,noi->oi", upstream, splines)
            grads["layers.{:d}.coeffs".format(i)] = w_s[:, :, np.newaxis] * np.einsum("no,nib->oib", upstream, basis)
            spline_slopes = np.einsum("nib,oib->noi", basis_slope, coeffs)
            upstream = silu_derivative(h) * (upstream @ w_b) + np.einsum("no,oi,noi->ni", upstream, w_s, spline_slopes)
        return grads, upstream

    @classmethod
    def from_descriptor(cls, descriptor: dict) -> "KanNetwork":
        return cls(descriptor["layers"], grid_size=descriptor["grid_size"], order=descriptor["order"], coeff_std=0.0)


def kan_layers(in_dim: int, hidden: List[int]) -> List[int]:
    """
    >>> kan_layers(10, [10])
    [10, 10, 1]
    """
    return [in_dim] + list(hidden) + [1]
