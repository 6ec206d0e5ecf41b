# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Final, List, Optional, Sequence, Tuple, final

import numpy as np
from PIL import Image, UnidentifiedImageError

from mocopy.decorators import immutable
from mocopy.errors import (MalformedSidecarError, MixedFrameSizeError,
                           UnreadableFrameError)
from mocopy.helpers import natural_key
from mocopy.types import FloatArray

from .sequence import FrameSequence, TargetAnnotation

__all__ = [
    'DatasetManifest',
    'ManifestEntry',
    'list_frames',
    'load_frame',
    'load_sequence',
    'read_manifest',
    'read_sidecar',
    'save_frame',
    'save_sequence',
    'write_manifest',
    'write_sidecar',
    'IMAGE_SUFFIXES',
    'SIDECAR_NAME',
]

logger = logging.getLogger(__name__)

SIDECAR_NAME: Final[str] = 'annotations.txt'
IMAGE_SUFFIXES: Final[Tuple[str, ...]] = ('.pgm', '.png')

# Maximum code value by Pillow mode.
_MAX_CODE: Final[Dict[str, int]] = {'L': 255, 'I;16': 65535, 'I;16B': 65535, 'I;16L': 65535, 'I': 65535}


def load_frame(path: Path) -> FloatArray:
    """
    Read an 8-bit or 16-bit grayscale image and normalise it to [0, 1] by the maximum code value.

    Raises:
        UnreadableFrameError: the file cannot be decoded or is not grayscale.
    """
    try:
        with Image.open(path) as im:
            mode = im.mode
            if mode not in _MAX_CODE:
                raise UnreadableFrameError(str(path), f'unsupported image mode {mode}.')
            arr = np.asarray(im, dtype=np.float64)
    except (OSError, UnidentifiedImageError) as e:
        if isinstance(e, UnreadableFrameError):
            raise
        raise UnreadableFrameError(str(path), str(e)) from e
    return np.clip(arr / _MAX_CODE[mode], 0.0, 1.0)


def save_frame(arr: FloatArray, path: Path, bit_depth: int = 16) -> None:
    """
    Quantise a [0, 1] image to 8 or 16 bits and write it; the format follows the file suffix.
    """
    if bit_depth not in (8, 16):
        raise ValueError(f'Bit depth must be 8 or 16, received {bit_depth}.')
    max_code = 255 if bit_depth == 8 else 65535
    codes = np.rint(np.clip(np.asarray(arr, dtype=np.float64), 0.0, 1.0) * max_code)
    codes = codes.astype(np.uint8 if bit_depth == 8 else np.uint16)
    Image.fromarray(codes).save(path)


def list_frames(directory: Path) -> List[Path]:
    """
    Image files of a directory in natural order, so that frame_2 precedes frame_10.
    """
    files = [p for p in Path(directory).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES]
    return sorted(files, key=lambda p: natural_key(p.name))


def read_sidecar(path: Path, n_frames: int) -> Tuple[Optional[TargetAnnotation], ...]:
    """
    Parse an annotation sidecar with one "frame_index x y a b" line per annotated frame.
    Blank lines and lines starting with # are ignored.

    Raises:
        MalformedSidecarError: a line does not have five fields, has non-numeric fields, or
            names a frame that does not exist.
    """
    annotations: List[Optional[TargetAnnotation]] = [None] * n_frames
    with open(path) as f:
        for line_number, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith('#'):
                continue
            tokens = stripped.split()
            try:
                if len(tokens) != 5:
                    raise ValueError
                index = int(tokens[0])
                x, y, a, b = (float(t) for t in tokens[1:])
                if not 0 <= index < n_frames:
                    raise ValueError
                annotations[index] = TargetAnnotation(x=x, y=y, a=a, b=b)
            except ValueError:
                raise MalformedSidecarError(str(path), line_number, line)
    return tuple(annotations)


def write_sidecar(annotations: Sequence[Optional[TargetAnnotation]], path: Path) -> None:
    with open(path, 'w') as f:
        for i, ann in enumerate(annotations):
            if ann is not None:
                f.write(f'{i} {float(ann.x)!r} {float(ann.y)!r} {float(ann.a)!r} {float(ann.b)!r}\n')


def load_sequence(directory: Path, threads: int = 1) -> FrameSequence:
    """
    Load a directory of numerically ordered grayscale frames plus the optional annotation sidecar.

    Args:
        directory: the sequence directory.
        threads: frames are decoded by this many worker threads; the frame order does not depend on it.

    Raises:
        MixedFrameSizeError: the frames do not all have the same size.
        UnreadableFrameError: a frame cannot be decoded, or the directory holds no frames.
        MalformedSidecarError: the sidecar cannot be parsed.
    """
    directory = Path(directory)
    paths = list_frames(directory)
    if not paths:
        raise UnreadableFrameError(str(directory), 'no .pgm or .png frames found.')

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        arrays = list(pool.map(load_frame, paths))
    for path, arr in zip(paths, arrays):
        if arr.shape != arrays[0].shape:
            raise MixedFrameSizeError(str(path), arrays[0].shape, arr.shape)

    sidecar = directory / SIDECAR_NAME
    annotations = read_sidecar(sidecar, len(arrays)) if sidecar.exists() else None
    logger.debug('Loaded %d frames of size %s from %s.', len(arrays), arrays[0].shape, directory)
    return FrameSequence.from_arrays(arrays, annotations)


def save_sequence(seq: FrameSequence, directory: Path, bit_depth: int = 16, suffix: str = '.png') -> List[Path]:
    """
    Write frames as frame_0000.png, frame_0001.png, ... and the annotation sidecar when present.

    Returns:
        The written frame paths.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(len(seq)):
        path = directory / f'frame_{i:04d}{suffix}'
        save_frame(seq.array(i), path, bit_depth)
        paths.append(path)
    if seq.annotations is not None:
        write_sidecar(seq.annotations, directory / SIDECAR_NAME)
    logger.info('Wrote %d frames to %s.', len(paths), directory)
    return paths


@final
@immutable
@dataclass(frozen=True)
class ManifestEntry:
    split: str
    path: Path


@final
@immutable
@dataclass(frozen=True)
class DatasetManifest:
    """
    A list of sequence directories tagged with a split name such as train or test.
    """
    entries: Tuple[ManifestEntry, ...]

    def split(self, name: str) -> Tuple[Path, ...]:
        return tuple(e.path for e in self.entries if e.split == name)


def read_manifest(path: Path) -> DatasetManifest:
    """
    Read "split path" lines; relative paths are resolved against the manifest's directory.

    Raises:
        MalformedSidecarError: a line does not have exactly two fields.
    """
    path = Path(path)
    entries = []
    with open(path) as f:
        for line_number, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith('#'):
                continue
            tokens = stripped.split(maxsplit=1)
            if len(tokens) != 2:
                raise MalformedSidecarError(str(path), line_number, line)
            split, target = tokens
            target_path = Path(target)
            if not target_path.is_absolute():
                target_path = path.parent / target_path
            entries.append(ManifestEntry(split=split, path=target_path))
    return DatasetManifest(entries=tuple(entries))


def write_manifest(manifest: DatasetManifest, path: Path) -> None:
    with open(path, 'w') as f:
        for entry in manifest.entries:
            f.write(f'{entry.split} {entry.path}\n')
