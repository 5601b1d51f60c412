"""
Multi-layer perceptron with ReLU hidden layers and a linear output layer.
"""

from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from metabbo.errors import InvalidArgumentError
from metabbo.networks.base import Network, Tape


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_derivative(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0.0, 1.0, 0.0)


class MlpNetwork(Network):
    """
    Fully connected network, weights are (out, in) matrices with He initialization and zero biases.

    >>> net = MlpNetwork([3, 4, 2], rng=np.random.default_rng(1))
    >>> [(name, value.shape) for name, value in net.parameters().items()]
    [('layers.0.weight', (4, 3)), ('layers.0.bias', (4,)), ('layers.1.weight', (2, 4)), ('layers.1.bias', (2,))]
    >>> net.set_parameters({"layers.1.weight": np.zeros((2, 4)), "layers.1.bias": np.array([0.5, -1.5])})
    >>> net.predict(np.ones(3)).tolist()
    [0.5, -1.5]
    """

    arch = "mlp"

    def __init__(self, layers: Sequence[int], rng: Optional[np.random.Generator] = None) -> None:
        if len(layers) < 2 or any(size < 1 for size in layers):
            raise InvalidArgumentError("invalid MLP layer sizes: {}".format(list(layers)))
        super().__init__(layers[0], layers[-1])
        self.layers = list(layers)
        if rng is None:
            rng = np.random.default_rng()
        for i, (n_in, n_out) in enumerate(zip(self.layers, self.layers[1:])):
            self._params["layers.{:d}.weight".format(i)] = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_out, n_in))
            self._params["layers.{:d}.bias".format(i)] = np.zeros(n_out)

    def descriptor(self) -> dict:
        return {"arch": self.arch, "layers": list(self.layers)}

    @property
    def n_layers(self) -> int:
        return len(self.layers) - 1

    def _forward(self, inputs: np.ndarray, tape: Tape) -> np.ndarray:
        a = inputs
        for i in range(self.n_layers):
            z = a @ self._params["layers.{:d}.weight".format(i)].T + self._params["layers.{:d}.bias".format(i)]
            tape.layers.append((a, z))
            a = relu(z) if i < self.n_layers - 1 else z
        return a

    def _backward(self, tape: Tape, grad_y: np.ndarray) -> Tuple[Dict[str, np.ndarray], Optional[np.ndarray]]:
        grads = {}  # type: Dict[str, np.ndarray]
        dz = grad_y
        for i in reversed(range(self.n_layers)):
            a, z = tape.layers[i]
            if i < self.n_layers - 1:
                dz = relu_derivative(z) * dz
            weight = self._params["layers.{:d}.weight".format(i)]
            grads["layers.{:d}.weight".format(i)] = dz.T @ a
            grads["layers.{:d}.bias".format(i)] = dz.sum(axis=0)
            dz = dz @ weight
        return grads, dz

    @classmethod
    def from_descriptor(cls, descriptor: dict) -> "MlpNetwork":
        return cls(descriptor["layers"])
