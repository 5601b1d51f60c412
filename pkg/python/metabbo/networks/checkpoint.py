"""
Checkpoints of networks as self-describing JSON text.

A checkpoint holds a format version, one or more named networks (architecture descriptor, parameter names
and shapes, and the flat parameter values), optional named arrays (like optimizer state), the normalization
constants of the training data and free-form metadata.  Floats are written with repr precision so that
values round-trip exactly.
"""

import logging
import os
from collections import OrderedDict
from typing import Dict, Optional

import numpy as np
import simplejson as json

from metabbo.errors import CheckpointError, MetaBBOError
from metabbo.json_encoder import FancyJsonEncoder
from metabbo.networks import Network, network_from_descriptor

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())

CHECKPOINT_FORMAT = "metabbo-checkpoint"
CHECKPOINT_VERSION = 1
CHECKPOINT_SUFFIX = ".ckpt.json"


class Checkpoint:
    def __init__(
        self,
        networks: Dict[str, Network],
        arrays: Optional[Dict[str, np.ndarray]] = None,
        normalization: Optional[dict] = None,
        metadata: Optional[dict] = None,
    ) -> None:
        self.networks = OrderedDict(networks)
        self.arrays = OrderedDict(arrays or {})
        self.normalization = normalization
        self.metadata = dict(metadata or {})


def _pack_arrays(arrays: Dict[str, np.ndarray]) -> dict:
    names = list(arrays)
    flat = [np.asarray(arrays[name], dtype=float).ravel() for name in names]
    return {
        "names": names,
        "shapes": [list(np.shape(arrays[name])) for name in names],
        "values": np.concatenate(flat).tolist() if flat else [],
    }


def _unpack_arrays(packed: dict) -> "OrderedDict[str, np.ndarray]":
    values = np.array(packed["values"], dtype=float)
    sizes = [int(np.prod(shape)) for shape in packed["shapes"]]
    if sum(sizes) != len(values):
        raise CheckpointError("expected {:d} parameter values, found {:d}".format(sum(sizes), len(values)))
    arrays = OrderedDict()  # type: OrderedDict
    offset = 0
    for name, shape, size in zip(packed["names"], packed["shapes"], sizes):
        arrays[name] = values[offset : offset + size].reshape(shape)
        offset += size
    return arrays


def save_checkpoint(filename: str, checkpoint: Checkpoint) -> None:
    document = OrderedDict(
        [
            ("format", CHECKPOINT_FORMAT),
            ("version", CHECKPOINT_VERSION),
            (
                "networks",
                OrderedDict(
                    (name, {"architecture": net.descriptor(), "parameters": _pack_arrays(net.parameters())})
                    for name, net in checkpoint.networks.items()
                ),
            ),
            ("arrays", _pack_arrays(checkpoint.arrays)),
            ("normalization", checkpoint.normalization),
            ("metadata", checkpoint.metadata),
        ]
    )
    os.makedirs(os.path.dirname(os.path.abspath(filename)), exist_ok=True)
    tmp_name = filename + ".tmp"
    with open(tmp_name, "w") as f:
        json.dump(document, f, cls=FancyJsonEncoder, sort_keys=True)
        f.write("\n")
    os.replace(tmp_name, filename)
    logger.info("Wrote checkpoint to '%s'", filename)


def load_checkpoint(filename: str) -> Checkpoint:
    logger.info("Reading checkpoint from '%s'", filename)
    try:
        with open(filename) as f:
            document = json.load(f)
    except (OSError, ValueError) as exc:
        raise CheckpointError("cannot read checkpoint '{}': {}".format(filename, exc)) from exc
    if document.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError("file '{}' is not a checkpoint".format(filename))
    if document.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            "checkpoint '{}' has version {}, expected {:d}".format(
                filename, document.get("version"), CHECKPOINT_VERSION
            )
        )
    networks = OrderedDict()  # type: OrderedDict
    for name, info in document["networks"].items():
        try:
            net = network_from_descriptor(info["architecture"])
            params = _unpack_arrays(info["parameters"])
            if set(params) != set(net.parameters()):
                raise CheckpointError("network '{}' in '{}' has the wrong parameter names".format(name, filename))
            net.set_parameters(params)
        except (MetaBBOError, KeyError, ValueError) as exc:
            if isinstance(exc, CheckpointError):
                raise
            raise CheckpointError("network '{}' in '{}' does not match its descriptor".format(name, filename)) from exc
        networks[name] = net
    return Checkpoint(
        networks,
        arrays=_unpack_arrays(document["arrays"]),
        normalization=document.get("normalization"),
        metadata=document.get("metadata"),
    )
