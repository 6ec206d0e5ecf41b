# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from dataclasses import dataclass, fields, replace
from enum import Enum
from pathlib import Path
from typing import Dict, Final, Mapping, final

from gelidum import freeze

from mocopy.decorators import immutable
from mocopy.errors import ConfigError
from mocopy.helpers import read_key_values, write_key_values

__all__ = [
    'DetectorName',
    'DetectorParams',
    'ResolutionClass',
    'read_detector_params',
    'write_detector_params',
    'IALM_MAX_ITER',
    'IALM_MU_SCALE',
    'IALM_RHO',
]

IALM_RHO: Final[float] = 1.5
IALM_MU_SCALE: Final[float] = 1.25
IALM_MAX_ITER: Final[int] = 500


class ResolutionClass(str, Enum):
    """
    The resolution at which an image is analysed.

    HR: original high-resolution imagery.
    SR4: images super-resolved by 4; window sizes are four times the HR ones.
    LR4: images downsampled by 4.
    """
    HR = 'hr'
    SR4 = 'sr4'
    LR4 = 'lr4'

    def true_detection_radius(self) -> float:
        """
        The largest centroid distance, in pixels, at which a candidate still matches a target.
        """
        return _TAU[self]


class DetectorName(str, Enum):
    TOPHAT = 'tophat'
    ILCM = 'ilcm'
    IPI = 'ipi'


_TAU: Dict[ResolutionClass, float] = freeze({
    ResolutionClass.HR: 10.0,
    ResolutionClass.SR4: 40.0,
    ResolutionClass.LR4: 3.0,
})


@final
@immutable
@dataclass(frozen=True)
class DetectorParams:
    """
    Parameters of the three classical detectors.

    Attributes:
        tophat_se: side of the square flat structuring element.
        ilcm_cell: side of the ILCM cells.
        ipi_block: side B of the IPI sliding window.
        ipi_stride: step S between IPI windows.
        ipi_weight: L in the sparsity weight lambda = L / sqrt(min(n1, n2)) of the B*B x n patch matrix.
        ipi_tol: relative feasibility residual at which IALM stops.
        ipi_max_iter: IALM iteration cap.
    """
    tophat_se: int = 5
    ilcm_cell: int = 5
    ipi_block: int = 50
    ipi_stride: int = 10
    ipi_weight: float = 1.0
    ipi_tol: float = 1e-7
    ipi_max_iter: int = IALM_MAX_ITER

    def __post_init__(self):
        if self.tophat_se < 3:
            raise ConfigError('tophat_se', f'must be at least 3, received {self.tophat_se}.')
        if self.ilcm_cell < 3:
            raise ConfigError('ilcm_cell', f'must be at least 3, received {self.ilcm_cell}.')
        if self.ipi_block < 1 or self.ipi_stride < 1:
            raise ConfigError('ipi_block/ipi_stride', f'must be positive, received {self.ipi_block}/{self.ipi_stride}.')
        if self.ipi_weight <= 0 or self.ipi_tol <= 0 or self.ipi_max_iter < 1:
            raise ConfigError('ipi_weight/ipi_tol/ipi_max_iter', 'must be positive.')

    @staticmethod
    def for_resolution(resolution: ResolutionClass) -> 'DetectorParams':
        return DetectorParams(**dict(_PRESETS[resolution]))

    def override(self, values: Mapping[str, str]) -> 'DetectorParams':
        """
        Raises:
            ConfigError: a key is unknown or a value cannot be converted.
        """
        kinds = {f.name: type(getattr(self, f.name)) for f in fields(self)}
        changes = {}
        for key, raw in values.items():
            if key not in kinds:
                raise ConfigError(key, 'unknown detector parameter.')
            try:
                changes[key] = kinds[key](raw)
            except ValueError as e:
                raise ConfigError(key, str(e)) from e
        return replace(self, **changes)

    def to_config(self) -> Dict[str, str]:
        return {f.name: str(getattr(self, f.name)) for f in fields(self)}


# Window sizes by resolution class: HR values, four times larger after 4x SR, 3x3 / 15x15 / stride 3 after 4x downsampling.
_PRESETS: Dict[ResolutionClass, Dict[str, int]] = freeze({
    ResolutionClass.HR: {'tophat_se': 5, 'ilcm_cell': 5, 'ipi_block': 50, 'ipi_stride': 10},
    ResolutionClass.SR4: {'tophat_se': 20, 'ilcm_cell': 20, 'ipi_block': 200, 'ipi_stride': 40},
    ResolutionClass.LR4: {'tophat_se': 3, 'ilcm_cell': 3, 'ipi_block': 15, 'ipi_stride': 3},
})


def read_detector_params(path: Path, base: DetectorParams = DetectorParams()) -> DetectorParams:
    return base.override(read_key_values(path))


def write_detector_params(params: DetectorParams, path: Path) -> None:
    write_key_values(params.to_config(), path)
