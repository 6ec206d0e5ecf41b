# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from typing import Optional, Sequence, Tuple

__all__ = [
    'MocopyError',
    'AnnotationOutsideImageError',
    'CheckpointFormatError',
    'ConfigError',
    'DegenerateSizeError',
    'DivisibilityError',
    'EmptyDatasetError',
    'FrameCountError',
    'ImageTooSmallError',
    'MalformedSidecarError',
    'MixedFrameSizeError',
    'ShapeMismatchError',
    'SvdConvergenceError',
    'TargetOutOfBoundsError',
    'UnreadableFrameError',
]


class MocopyError(Exception):
    """
    Mixin shared by every structured error raised by the package.
    The CLI maps anything deriving from it to a non-zero exit status.
    """


class ShapeMismatchError(MocopyError, ValueError):
    """
    Raised when two operands do not have compatible shapes.

    Attributes:
        operation (str): the operation that detected the mismatch.
        expected (Tuple[int, ...]): the shape (or partial shape) that was required.
        actual (Tuple[int, ...]): the shape that was received.
    """
    def __init__(self, operation: str, expected: Sequence[int], actual: Sequence[int]):
        self.operation = operation
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(f'{operation}: expected shape {self.expected}, received {self.actual}.')


class ConfigError(MocopyError, ValueError):
    """
    Raised for unknown or malformed configuration keys.
    """
    def __init__(self, key: str, msg: str):
        self.key = key
        super().__init__(f'Configuration key "{key}": {msg}')


class SvdConvergenceError(MocopyError, ArithmeticError):
    """
    Raised when the singular value decomposition fails to converge.

    Attributes:
        residual (float): the relative reconstruction residual at the point of failure (NaN if unknown).
    """
    def __init__(self, residual: float, msg: str = 'SVD did not converge'):
        self.residual = residual
        super().__init__(f'{msg} (residual={residual}).')


class TargetOutOfBoundsError(MocopyError, ValueError):
    """
    Raised before generating a synthetic sequence whose target would leave the image.
    """
    def __init__(self, frame: int, centroid: Tuple[float, float], size: Tuple[int, int]):
        self.frame = frame
        self.centroid = centroid
        self.size = size
        super().__init__(f'Target at frame {frame} with centroid (x, y)={centroid} leaves an image of size {size}.')


class DegenerateSizeError(MocopyError, ValueError):
    """
    Raised when a resize would produce an output with an extent smaller than 1.
    """


class DivisibilityError(MocopyError, ValueError):
    """
    Raised when an image extent is not divisible by the degradation scale.
    """
    def __init__(self, extent: int, scale: int):
        self.extent = extent
        self.scale = scale
        super().__init__(f'Image extent {extent} is not divisible by scale {scale}.')


class MixedFrameSizeError(MocopyError, ValueError):
    """
    Raised when the frames of a sequence do not share the same size.
    """
    def __init__(self, path: str, expected: Tuple[int, int], actual: Tuple[int, int]):
        self.path = path
        self.expected = expected
        self.actual = actual
        super().__init__(f'Frame {path} has size {actual}, the sequence uses {expected}.')


class UnreadableFrameError(MocopyError, OSError):
    """
    Raised when an image file cannot be decoded.
    """
    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f'Cannot read frame {path}: {reason}')


class MalformedSidecarError(MocopyError, ValueError):
    """
    Raised when an annotation sidecar line does not follow "frame_index x y a b".
    """
    def __init__(self, path: str, line_number: int, line: str):
        self.path = path
        self.line_number = line_number
        super().__init__(f'{path}:{line_number}: malformed annotation line "{line.strip()}".')


class ImageTooSmallError(MocopyError, ValueError):
    """
    Raised when an image is smaller than the window an operation requires.
    """
    def __init__(self, operation: str, required: int, shape: Tuple[int, ...]):
        self.operation = operation
        self.required = required
        self.shape = tuple(shape)
        super().__init__(f'{operation} requires an image of at least {required}x{required}, received {self.shape}.')


class AnnotationOutsideImageError(MocopyError, ValueError):
    """
    Raised when an annotation centroid does not lie inside the image.
    """
    def __init__(self, centroid: Tuple[float, float], shape: Tuple[int, ...]):
        self.centroid = centroid
        self.shape = tuple(shape)
        super().__init__(f'Annotation centroid (x, y)={centroid} lies outside image of shape {self.shape}.')


class CheckpointFormatError(MocopyError, ValueError):
    """
    Raised when a checkpoint file has a wrong magic header, version or layout.
    """


class EmptyDatasetError(MocopyError, ValueError):
    """
    Raised when the trainer receives no usable clips.
    """


class FrameCountError(MocopyError, ValueError):
    """
    Raised when a clip has the wrong number of frames for the network.
    """
    def __init__(self, expected: int, actual: int, detail: Optional[str] = None):
        self.expected = expected
        self.actual = actual
        msg = f'Expected {expected} frames, received {actual}.'
        if detail:
            msg = f'{msg} {detail}'
        super().__init__(msg)
