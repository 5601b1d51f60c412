"""
Base class of the hand-written feed-forward networks.

A network is a container of named parameter arrays.  The forward pass over a batch (one input per row)
returns the outputs together with a tape that retains what the backward pass needs.  A tape belongs to
the network and the parameter values it was recorded with: once parameters change, the tape is stale.
"""

import copy
from collections import OrderedDict
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from metabbo.errors import DimensionMismatchError, MetaBBOSystemError, StaleTapeError


class Tape:
    """
    Record of a forward pass: the owner, the owner's parameter version, the input, and per-layer values.
    """

    def __init__(self, owner: "Network", inputs: np.ndarray, single: bool) -> None:
        self.owner_id = id(owner)
        self.version = owner.version
        self.inputs = inputs
        self.single = single
        self.layers = []  # type: list


class Network:

    arch = ""

    def __init__(self, in_dim: int, out_dim: int) -> None:
        self.in_dim = in_dim
        self.out_dim = out_dim
        self._params = OrderedDict()  # type: OrderedDict
        self._version = 0

    @property
    def version(self) -> int:
        return self._version

    def descriptor(self) -> dict:
        """Return the architecture descriptor (all that is needed to build an identically shaped network)."""
        raise NotImplementedError("Forgot to implement descriptor in {}".format(self.__class__.__name__))

    def parameters(self) -> "OrderedDict[str, np.ndarray]":
        """Return the parameters by name (in a fixed order).  Treat the arrays as read-only."""
        return OrderedDict(self._params)

    def parameter_count(self) -> int:
        return sum(p.size for p in self._params.values())

    def set_parameters(self, params: Dict[str, np.ndarray]) -> None:
        """Replace parameter values (all or some of them).  Shapes must match; recorded tapes become stale."""
        for name, value in params.items():
            if name not in self._params:
                raise MetaBBOSystemError("unknown parameter '{}' for {} network".format(name, self.arch))
            value = np.array(value, dtype=float)
            if value.shape != self._params[name].shape:
                raise DimensionMismatchError(
                    "parameter '{}' has shape {}, expected {}".format(name, value.shape, self._params[name].shape)
                )
            self._params[name] = value
        self._version += 1

    def copy(self) -> "Network":
        return copy.deepcopy(self)

    def _check_input(self, x) -> Tuple[np.ndarray, bool]:
        inputs = np.asarray(x, dtype=float)
        single = inputs.ndim == 1
        if single:
            inputs = inputs[np.newaxis, :]
        if inputs.ndim != 2 or inputs.shape[1] != self.in_dim:
            raise DimensionMismatchError(
                "{} network expects inputs of dimension {:d}, got shape {}".format(self.arch, self.in_dim, np.shape(x))
            )
        return inputs, single

    def _check_tape(self, tape: Tape) -> None:
        if tape.owner_id != id(self):
            raise StaleTapeError("tape was recorded by a different network")
        if tape.version != self._version:
            raise StaleTapeError(
                "tape was recorded with parameter version {:d}, network is at version {:d}".format(
                    tape.version, self._version
                )
            )

    def forward(self, x) -> Tuple[np.ndarray, Tape]:
        """
        Run the network on one input (returns a vector of out_dim values) or a batch (returns a matrix).
        """
        inputs, single = self._check_input(x)
        tape = Tape(self, inputs, single)
        outputs = self._forward(inputs, tape)
        return (outputs[0] if single else outputs), tape

    def predict(self, x) -> np.ndarray:
        return self.forward(x)[0]

    def backward(
        self, tape: Tape, grad_y, frozen: Iterable[str] = (), input_grad: bool = False
    ) -> "OrderedDict[str, np.ndarray]":
        """
        Return the gradients of all parameters given the gradient of the loss wrt. the outputs.

        Gradients of parameters named in `frozen` are zero.  With input_grad=True, the gradient wrt. the
        inputs is added under the name "input".
        """
        self._check_tape(tape)
        grad_y = np.asarray(grad_y, dtype=float)
        if tape.single:
            grad_y = grad_y[np.newaxis, ...]
        grad_y = grad_y.reshape(tape.inputs.shape[0], self.out_dim)
        grads, grad_x = self._backward(tape, grad_y)
        frozen = frozenset(frozen)
        unknown = frozen.difference(self._params)
        if unknown:
            raise MetaBBOSystemError("cannot freeze unknown parameter(s): {}".format(sorted(unknown)))
        result = OrderedDict(
            (name, np.zeros_like(grads[name]) if name in frozen else grads[name]) for name in self._params
        )
        if input_grad:
            result["input"] = grad_x[0] if tape.single else grad_x
        return result

    def _forward(self, inputs: np.ndarray, tape: Tape) -> np.ndarray:
        raise NotImplementedError("Forgot to implement _forward in {}".format(self.__class__.__name__))

    def _backward(self, tape: Tape, grad_y: np.ndarray) -> Tuple[Dict[str, np.ndarray], Optional[np.ndarray]]:
        raise NotImplementedError("Forgot to implement _backward in {}".format(self.__class__.__name__))
