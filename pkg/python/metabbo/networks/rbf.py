"""
Gaussian radial basis function network with one output:

    y(x) = sum_c w_c exp(-|x - mu_c|^2 / (2 sigma_c^2)) + b
"""

from typing import Dict, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from metabbo.errors import InvalidArgumentError
from metabbo.networks.base import Network, Tape

# Widths are kept at or above this value when parameters are set (e.g. by an optimizer step).
MIN_WIDTH = 1e-6


class RbfNetwork(Network):
    """
    >>> net = RbfNetwork(2, 1)
    >>> net.set_parameters({"centers": [[0.5, -0.5]], "widths": [1.0], "weights": [2.0], "bias": [0.25]})
    >>> net.predict(np.array([0.5, -0.5])).tolist()
    [2.25]
    """

    arch = "rbf"

    def __init__(self, in_dim: int, n_centers: int) -> None:
        if in_dim < 1 or n_centers < 1:
            raise InvalidArgumentError("invalid RBF shape: {:d} inputs, {:d} centers".format(in_dim, n_centers))
        super().__init__(in_dim, 1)
        self.n_centers = n_centers
        self._params["centers"] = np.zeros((n_centers, in_dim))
        self._params["widths"] = np.ones(n_centers)
        self._params["weights"] = np.zeros(n_centers)
        self._params["bias"] = np.zeros(1)

    @classmethod
    def from_data(cls, xs: np.ndarray, n_centers: int, rng: np.random.Generator) -> "RbfNetwork":
        """
        Place centers on a random subset of the inputs with widths equal to the median distance between
        a center and its nearest neighbor among the other centers.
        """
        xs = np.asarray(xs, dtype=float)
        net = cls(xs.shape[1], n_centers)
        chosen = rng.choice(len(xs), size=n_centers, replace=n_centers > len(xs))
        centers = xs[chosen]
        if n_centers > 1:
            distances = cdist(centers, centers)
            np.fill_diagonal(distances, np.inf)
            width = float(np.median(np.min(distances, axis=1)))
        else:
            width = 1.0
        net.set_parameters(
            {
                "centers": centers,
                "widths": np.full(n_centers, max(width, MIN_WIDTH)),
                "weights": rng.normal(0.0, 0.1, size=n_centers),
                "bias": np.zeros(1),
            }
        )
        return net

    def descriptor(self) -> dict:
        return {"arch": self.arch, "in_dim": self.in_dim, "centers": self.n_centers}

    def set_parameters(self, params: Dict[str, np.ndarray]) -> None:
        if "widths" in params:
            params = dict(params, widths=np.maximum(np.asarray(params["widths"], dtype=float), MIN_WIDTH))
        super().set_parameters(params)

    def _forward(self, inputs: np.ndarray, tape: Tape) -> np.ndarray:
        centers, widths = self._params["centers"], self._params["widths"]
        diff = inputs[:, np.newaxis, :] - centers[np.newaxis, :, :]
        squared = np.sum(np.square(diff), axis=-1)
        kernels = np.exp(-squared / (2.0 * np.square(widths)))
        tape.layers.append((diff, squared, kernels))
        return (kernels @ self._params["weights"] + self._params["bias"][0])[:, np.newaxis]

    def _backward(self, tape: Tape, grad_y: np.ndarray) -> Tuple[Dict[str, np.ndarray], Optional[np.ndarray]]:
        diff, squared, kernels = tape.layers[0]
        widths, weights = self._params["widths"], self._params["weights"]
        upstream = grad_y[:, 0]
        # d loss / d kernel_c for every sample
        d_kernels = upstream[:, np.newaxis] * weights[np.newaxis, :]
        d_squared = -d_kernels * kernels / (2.0 * np.square(widths))
        grads = {
            "centers": -2.0 * np.einsum("nc,ncd->cd", d_squared, diff),
            "widths": np.sum(d_kernels * kernels * squared, axis=0) / np.power(widths, 3),
            "weights": upstream @ kernels,
            "bias": np.array([upstream.sum()]),
        }
        grad_x = 2.0 * np.einsum("nc,ncd->nd", d_squared, diff)
        return grads, grad_x

    @classmethod
    def from_descriptor(cls, descriptor: dict) -> "RbfNetwork":
        return cls(descriptor["in_dim"], descriptor["centers"])
