# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Final, List, Mapping, Optional, Tuple, final

import numpy as np

from mocopy.decorators import immutable
from mocopy.errors import CheckpointFormatError
from mocopy.numerics import AdamState, Params, Tensor

from .config import MoCoPnetCfg

__all__ = [
    'Checkpoint',
    'load_checkpoint',
    'save_checkpoint',
    'CHECKPOINT_MAGIC',
    'CHECKPOINT_VERSION',
]

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC: Final[bytes] = b'MOCOPY\x00\x01'
CHECKPOINT_VERSION: Final[int] = 1

# magic, then version (uint32) and header length (uint64), little endian.
_PREAMBLE: Final[struct.Struct] = struct.Struct('<IQ')

_ADAM_M: Final[str] = 'adam.m/'
_ADAM_V: Final[str] = 'adam.v/'


@final
@immutable
@dataclass(frozen=True, eq=False)
class Checkpoint:
    """
    Everything needed to run or resume a network.

    Attributes:
        cfg: the network configuration.
        params: the named parameter tensors.
        adam: the optimizer state, when training can be resumed.
        metadata: training metadata such as iteration, seed and last loss.
    """
    cfg: MoCoPnetCfg
    params: Dict[str, Tensor]
    adam: Optional[AdamState] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def iteration(self) -> int:
        return int(self.metadata.get('iteration', 0))


def save_checkpoint(path: Path,
                    cfg: MoCoPnetCfg,
                    params: Params,
                    adam: Optional[AdamState] = None,
                    metadata: Optional[Mapping[str, Any]] = None) -> None:
    """
    Write a self-describing checkpoint: magic, version, a JSON header with the configuration,
    the metadata and the tensor index, then the raw little-endian tensor data.
    """
    tensors: List[Tuple[str, np.ndarray]] = [(name, np.asarray(p.data)) for name, p in params.items()]
    header: Dict[str, Any] = {'cfg': cfg.to_dict(), 'metadata': dict(metadata or {}), 'tensors': []}
    if adam is not None:
        header['adam'] = {'step': adam.step, 'beta1': adam.beta1, 'beta2': adam.beta2, 'eps': adam.eps}
        tensors += [(_ADAM_M + name, m) for name, m in adam.m.items()]
        tensors += [(_ADAM_V + name, v) for name, v in adam.v.items()]

    offset = 0
    blobs = []
    for name, arr in tensors:
        data = np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder('<')).tobytes()
        header['tensors'].append({'name': name, 'shape': list(arr.shape), 'dtype': arr.dtype.newbyteorder('<').str,
                                  'offset': offset, 'nbytes': len(data)})
        blobs.append(data)
        offset += len(data)

    encoded = json.dumps(header).encode('utf-8')
    with open(path, 'wb') as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(_PREAMBLE.pack(CHECKPOINT_VERSION, len(encoded)))
        f.write(encoded)
        for blob in blobs:
            f.write(blob)
    logger.info('Saved checkpoint with %d tensors to %s.', len(tensors), path)


def load_checkpoint(path: Path) -> Checkpoint:
    """
    Raises:
        CheckpointFormatError: the magic, version, header or data section is invalid.
    """
    with open(path, 'rb') as f:
        raw = f.read()
    if not raw.startswith(CHECKPOINT_MAGIC):
        raise CheckpointFormatError(f'{path} is not a mocopy checkpoint.')
    start = len(CHECKPOINT_MAGIC)
    if len(raw) < start + _PREAMBLE.size:
        raise CheckpointFormatError(f'{path} is truncated.')
    version, header_len = _PREAMBLE.unpack_from(raw, start)
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(f'{path} has unsupported version {version}.')
    start += _PREAMBLE.size
    try:
        header = json.loads(raw[start:start + header_len].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(f'{path} has a corrupt header: {e}') from e
    data = memoryview(raw)[start + header_len:]

    arrays: Dict[str, np.ndarray] = {}
    for entry in header['tensors']:
        end = entry['offset'] + entry['nbytes']
        if end > len(data):
            raise CheckpointFormatError(f'{path}: tensor {entry["name"]} runs past the end of the file.')
        arr = np.frombuffer(data[entry['offset']:end], dtype=np.dtype(entry['dtype']))
        arrays[entry['name']] = arr.reshape(entry['shape']).astype(np.dtype(entry['dtype']).newbyteorder('='))

    params = {name: Tensor(arr) for name, arr in arrays.items() if not name.startswith((_ADAM_M, _ADAM_V))}
    adam = None
    if 'adam' in header:
        adam = AdamState(m={n[len(_ADAM_M):]: a for n, a in arrays.items() if n.startswith(_ADAM_M)},
                         v={n[len(_ADAM_V):]: a for n, a in arrays.items() if n.startswith(_ADAM_V)},
                         **header['adam'])
    return Checkpoint(cfg=MoCoPnetCfg.from_dict(header['cfg']), params=params, adam=adam,
                      metadata=header.get('metadata', {}))
