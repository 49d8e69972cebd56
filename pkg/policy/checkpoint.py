import logging
import os
from dataclasses import dataclass
from struct import calcsize, pack, unpack_from
from typing import Optional

import numpy as np

from coauthor import DrlParams
from coauthor.exceptions import (
    CheckpointDimensionError,
    CheckpointError,
    CheckpointNotFoundError,
    CheckpointVersionError,
)

from .qnet import NetworkDims, QNetwork

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"CAQN"
CHECKPOINT_VERSION = 1
HEADER_FORMAT = "<4sHHIIIII"
HEADER_LENGTH = calcsize(HEADER_FORMAT)


@dataclass
class CheckpointHeader:
    version: int
    dims: NetworkDims

    def __bytes__(self) -> bytes:
        d = self.dims
        return pack(HEADER_FORMAT, CHECKPOINT_MAGIC, self.version, 0, d.paper_dim, d.agent_dim,
                    d.network_dim, d.encoder_dim, d.hidden_dim)

    @classmethod
    def parse(cls, data: bytes) -> "CheckpointHeader":
        if len(data) < HEADER_LENGTH:
            raise CheckpointVersionError("checkpoint header is truncated")
        magic, version, _, paper, agent, network, encoder, hidden = unpack_from(HEADER_FORMAT, data)
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointVersionError(f"bad magic {magic!r}")
        if version != CHECKPOINT_VERSION:
            raise CheckpointVersionError(f"unsupported checkpoint version {version}")
        return cls(version=version, dims=NetworkDims(paper, agent, network, encoder, hidden))


def save_checkpoint(qnet: QNetwork, path: str) -> None:
    """
    Header, then every parameter as little-endian float64 in layer order.
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as fd:
        fd.write(bytes(CheckpointHeader(CHECKPOINT_VERSION, qnet.dims)))
        for name, _ in qnet.dims.shapes():
            fd.write(np.ascontiguousarray(qnet.params[name], dtype="<f8").tobytes())
    logger.info("saved checkpoint %s", path)


def load_checkpoint(path: str, drl: Optional[DrlParams] = None) -> QNetwork:
    if not os.path.isfile(path):
        raise CheckpointNotFoundError(f"no checkpoint at {path}")
    with open(path, "rb") as fd:
        data = fd.read()
    header = CheckpointHeader.parse(data)
    if drl is not None and header.dims != NetworkDims.from_params(drl):
        raise CheckpointDimensionError(
            f"checkpoint layout {header.dims} does not match configured {NetworkDims.from_params(drl)}")

    qnet = QNetwork(header.dims)
    offset = HEADER_LENGTH
    for name, shape in header.dims.shapes():
        count = int(np.prod(shape))
        if offset + 8 * count > len(data):
            raise CheckpointError(f"checkpoint {path} is truncated at {name}")
        qnet.params[name] = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        offset += 8 * count
    if offset != len(data):
        raise CheckpointError(f"checkpoint {path} has {len(data) - offset} trailing bytes")
    return qnet
