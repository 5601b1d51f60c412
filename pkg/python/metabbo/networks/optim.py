"""
First-order optimizers for network parameters.

The update functions are pure (they return new arrays); the optimizer objects keep state between steps
and write the updated values back into a network.
"""

from collections import OrderedDict
from typing import Dict, Optional

import numpy as np

from metabbo.errors import DimensionMismatchError, UnknownArchitectureError
from metabbo.networks.base import Network


class AdamState:
    """
    Moment accumulators per parameter plus the step count.

    >>> state = AdamState({"w": np.zeros(2)})
    >>> state.step, state.m["w"].tolist()
    (0, [0.0, 0.0])
    """

    def __init__(self, params: Dict[str, np.ndarray], beta1=0.9, beta2=0.999, eps=1e-8) -> None:
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m = OrderedDict((name, np.zeros_like(value)) for name, value in params.items())
        self.v = OrderedDict((name, np.zeros_like(value)) for name, value in params.items())

    def to_arrays(self) -> Dict[str, np.ndarray]:
        arrays = OrderedDict([("step", np.array([self.step], dtype=float))])
        for name in self.m:
            arrays["m." + name] = self.m[name]
            arrays["v." + name] = self.v[name]
        return arrays

    def load_arrays(self, arrays: Dict[str, np.ndarray]) -> None:
        self.step = int(arrays["step"][0])
        for name in self.m:
            self.m[name] = np.array(arrays["m." + name], dtype=float).reshape(self.m[name].shape)
            self.v[name] = np.array(arrays["v." + name], dtype=float).reshape(self.v[name].shape)


def adam_step(
    params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], state: AdamState, lr: float
) -> "OrderedDict[str, np.ndarray]":
    """
    Return parameters after one Adam step with bias correction (and advance the state).

    >>> params = {"w": np.array([1.0, -1.0, 0.5])}
    >>> state = AdamState(params)
    >>> updated = adam_step(params, {"w": np.array([0.2, -3.0, 0.0])}, state, lr=0.01)
    >>> np.round(updated["w"] - params["w"], 6).tolist()
    [-0.01, 0.01, 0.0]
    """
    state.step += 1
    updated = OrderedDict()  # type: OrderedDict
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for name, value in params.items():
        grad = grads[name]
        if grad.shape != value.shape:
            raise DimensionMismatchError(
                "gradient of '{}' has shape {}, expected {}".format(name, grad.shape, value.shape)
            )
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * grad
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * np.square(grad)
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        updated[name] = value - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return updated


def sgd_step(params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], lr: float) -> "OrderedDict[str, np.ndarray]":
    return OrderedDict((name, value - lr * grads[name]) for name, value in params.items())


class Optimizer:

    name = ""

    def __init__(self, lr: float) -> None:
        self.lr = lr

    def step(self, network: Network, grads: Dict[str, np.ndarray]) -> None:
        raise NotImplementedError("Forgot to implement step in {}".format(self.__class__.__name__))

    def state_arrays(self) -> Dict[str, np.ndarray]:
        return {}

    def load_state_arrays(self, network: Network, arrays: Dict[str, np.ndarray]) -> None:
        pass


class Adam(Optimizer):

    name = "adam"

    def __init__(self, lr: float, beta1=0.9, beta2=0.999, eps=1e-8) -> None:
        super().__init__(lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = None  # type: Optional[AdamState]

    def _ensure_state(self, network: Network) -> AdamState:
        if self.state is None:
            self.state = AdamState(network.parameters(), self.beta1, self.beta2, self.eps)
        return self.state

    def step(self, network: Network, grads: Dict[str, np.ndarray]) -> None:
        state = self._ensure_state(network)
        network.set_parameters(adam_step(network.parameters(), grads, state, self.lr))

    def state_arrays(self) -> Dict[str, np.ndarray]:
        return {} if self.state is None else self.state.to_arrays()

    def load_state_arrays(self, network: Network, arrays: Dict[str, np.ndarray]) -> None:
        if arrays:
            self._ensure_state(network).load_arrays(arrays)


class Sgd(Optimizer):

    name = "sgd"

    def step(self, network: Network, grads: Dict[str, np.ndarray]) -> None:
        network.set_parameters(sgd_step(network.parameters(), grads, self.lr))


def build_optimizer(name: str, lr: float) -> Optimizer:
    """
    >>> build_optimizer("adam", 0.01).name
    'adam'
    """
    if name == "adam":
        return Adam(lr)
    elif name == "sgd":
        return Sgd(lr)
    raise UnknownArchitectureError("unknown optimizer '{}'".format(name))
