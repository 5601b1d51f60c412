"""
Hand-written differentiable networks (KAN, MLP, RBF) with a common interface:

    y, tape = net.forward(x)
    grads = net.backward(tape, dloss_dy)
    optimizer.step(net, grads)

The surrogates use any of the three architectures, the policy uses an MLP.
"""

from typing import List, Optional

import numpy as np

from metabbo.errors import UnknownArchitectureError
from metabbo.networks.base import Network, Tape
from metabbo.networks.kan import KanNetwork, kan_layers
from metabbo.networks.mlp import MlpNetwork
from metabbo.networks.rbf import RbfNetwork

ARCHITECTURES = ("kan", "mlp", "rbf")

__all__ = ["ARCHITECTURES", "Network", "NetworkConfig", "Tape", "build_network", "network_from_descriptor"]


class NetworkConfig:
    """
    Settings for building a surrogate network of the chosen architecture.
    """

    def __init__(
        self,
        arch: str = "kan",
        kan_hidden: Optional[List[int]] = None,
        grid_size: int = 5,
        spline_order: int = 5,
        coeff_std: float = 0.1,
        mlp_hidden: Optional[List[int]] = None,
        rbf_centers: int = 64,
    ) -> None:
        if arch not in ARCHITECTURES:
            raise UnknownArchitectureError("unknown network architecture '{}'".format(arch))
        self.arch = arch
        self.kan_hidden = [10] if kan_hidden is None else list(kan_hidden)
        self.grid_size = grid_size
        self.spline_order = spline_order
        self.coeff_std = coeff_std
        self.mlp_hidden = [32, 64, 32] if mlp_hidden is None else list(mlp_hidden)
        self.rbf_centers = rbf_centers

    def with_arch(self, arch: str) -> "NetworkConfig":
        return NetworkConfig(
            arch,
            self.kan_hidden,
            self.grid_size,
            self.spline_order,
            self.coeff_std,
            self.mlp_hidden,
            self.rbf_centers,
        )


def build_network(
    config: NetworkConfig, in_dim: int, rng: np.random.Generator, xs: Optional[np.ndarray] = None
) -> Network:
    """
    Build a freshly initialized surrogate network (one output) for inputs of the given dimension.

    RBF networks place their centers on the (normalized) training inputs `xs`.

    >>> net = build_network(NetworkConfig("kan", kan_hidden=[5]), 2, np.random.default_rng(0))
    >>> net.descriptor()
    {'arch': 'kan', 'layers': [2, 5, 1], 'grid_size': 5, 'order': 5}
    """
    if config.arch == "kan":
        return KanNetwork(
            kan_layers(in_dim, config.kan_hidden),
            grid_size=config.grid_size,
            order=config.spline_order,
            coeff_std=config.coeff_std,
            rng=rng,
        )
    elif config.arch == "mlp":
        return MlpNetwork([in_dim] + config.mlp_hidden + [1], rng=rng)
    elif config.arch == "rbf":
        if xs is None:
            xs = rng.uniform(-1.0, 1.0, size=(config.rbf_centers, in_dim))
        return RbfNetwork.from_data(xs, config.rbf_centers, rng)
    raise UnknownArchitectureError("unknown network architecture '{}'".format(config.arch))


def network_from_descriptor(descriptor: dict) -> Network:
    """
    Build a network with the shape given by the descriptor (parameter values are to be set afterwards).

    >>> network_from_descriptor({"arch": "mlp", "layers": [9, 4, 15]}).out_dim
    15
    """
    builders = {"kan": KanNetwork, "mlp": MlpNetwork, "rbf": RbfNetwork}
    try:
        builder = builders[descriptor["arch"]]
    except KeyError:
        raise UnknownArchitectureError("unknown network architecture in {}".format(descriptor)) from None
    return builder.from_descriptor(descriptor)  # type: ignore
