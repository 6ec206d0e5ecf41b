# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from dataclasses import dataclass, fields, replace
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Mapping, Optional, Tuple, final

from mocopy.decorators import immutable
from mocopy.errors import ConfigError
from mocopy.helpers import str_to_bool
from mocopy.numerics import LrSchedule
from mocopy.prior_ops import Activation, LstaCfg, ResidualGroupCfg

__all__ = [
    'AlignmentMode',
    'MoCoPnetCfg',
    'TrainCfg',
    'TrainPreset',
]


class AlignmentMode(str, Enum):
    """
    How neighbour features are aligned to the reference before fusion.

    CASCADE: a coarse LSTA (lsta1) followed by a fine LSTA (lsta2).
    SINGLE: one LSTA with the lsta2 geometry.
    PARALLEL: three LSTAs with dilations 1, 3 and 5, averaged.
    NONE: neighbours are fused without alignment.
    """
    CASCADE = 'cascade'
    SINGLE = 'single'
    PARALLEL = 'parallel'
    NONE = 'none'


def _group_to_dict(cfg: ResidualGroupCfg) -> Dict[str, Any]:
    return {'blocks': cfg.blocks, 'convs': cfg.convs, 'growth': cfg.growth, 'channels': cfg.channels,
            'use_central_difference': cfg.use_central_difference, 'theta': cfg.theta,
            'activation': cfg.activation.value, 'kernel': cfg.kernel}


def _group_from_dict(d: Mapping[str, Any]) -> ResidualGroupCfg:
    return ResidualGroupCfg(**{**d, 'activation': Activation(d['activation'])})


def _lsta_to_dict(cfg: LstaCfg) -> Dict[str, Any]:
    return {'kern': cfg.kern, 'dila': str(cfg.dilation), 'cr': cfg.cr}


def _lsta_from_dict(d: Mapping[str, Any]) -> LstaCfg:
    dila = Fraction(d['dila'])
    return LstaCfg(kern=d['kern'], dila=int(dila) if dila.denominator == 1 else dila, cr=d['cr'])


@final
@immutable
@dataclass(frozen=True)
class MoCoPnetCfg:
    """
    Architecture of the network.

    Attributes:
        frames: T, the odd number of input frames; the reference is the middle one.
        scale: the upsampling factor.
        channels: C, the base feature width.
        cdrg: the feature extraction group (central difference variant).
        rg_coarse: the group of the coarse fusion branches, shared by all of them.
        rg_fine: the fine fusion group.
        rg_recon: the reconstruction group.
        lsta1: the coarse alignment module.
        lsta2: the fine alignment module.
        alignment: the alignment variant.
    """
    frames: int
    scale: int
    channels: int
    cdrg: ResidualGroupCfg
    rg_coarse: ResidualGroupCfg
    rg_fine: ResidualGroupCfg
    rg_recon: ResidualGroupCfg
    lsta1: LstaCfg = LstaCfg(kern=3, dila=3, cr=8)
    lsta2: LstaCfg = LstaCfg(kern=3, dila=1, cr=8)
    alignment: AlignmentMode = AlignmentMode.CASCADE

    def __post_init__(self):
        if self.frames < 3 or self.frames % 2 == 0:
            raise ConfigError('frames', f'must be odd and at least 3, received {self.frames}.')
        if self.scale < 1:
            raise ConfigError('scale', f'must be at least 1, received {self.scale}.')
        for name in ('cdrg', 'rg_coarse', 'rg_fine', 'rg_recon'):
            if getattr(self, name).channels != self.channels:
                raise ConfigError(name, f'has {getattr(self, name).channels} channels, the network uses {self.channels}.')
        for name in ('lsta1', 'lsta2'):
            getattr(self, name).projected_channels(self.channels)

    @property
    def center(self) -> int:
        return self.frames // 2

    @property
    def branches(self) -> int:
        return (self.frames - 1) // 2

    @staticmethod
    def full(frames: int = 7, scale: int = 4, channels: int = 64,
             activation: Activation = Activation.RELU) -> 'MoCoPnetCfg':
        """
        The full-size network: CD-RG(D=4, K=6, G=32), RG1,2(D=1, K=4, G=64), RG3(D=8, K=6, G=32),
        LSTA1(kern=3, dila=3), LSTA2(kern=3, dila=1).
        """
        return MoCoPnetCfg(
            frames=frames, scale=scale, channels=channels,
            cdrg=ResidualGroupCfg(4, 6, 32, channels, use_central_difference=True, activation=activation),
            rg_coarse=ResidualGroupCfg(1, 4, 64, channels, activation=activation),
            rg_fine=ResidualGroupCfg(1, 4, 64, channels, activation=activation),
            rg_recon=ResidualGroupCfg(8, 6, 32, channels, activation=activation),
        )

    @staticmethod
    def toy(frames: int = 5, scale: int = 4, channels: int = 16,
            activation: Activation = Activation.RELU,
            alignment: AlignmentMode = AlignmentMode.CASCADE) -> 'MoCoPnetCfg':
        """
        A desk-scale network with every group reduced to D=1, K=2, G=8.
        """
        def group(cd: bool = False) -> ResidualGroupCfg:
            return ResidualGroupCfg(1, 2, 8, channels, use_central_difference=cd, activation=activation)

        return MoCoPnetCfg(frames=frames, scale=scale, channels=channels,
                           cdrg=group(cd=True), rg_coarse=group(), rg_fine=group(), rg_recon=group(),
                           alignment=alignment)

    def to_dict(self) -> Dict[str, Any]:
        return {'frames': self.frames, 'scale': self.scale, 'channels': self.channels,
                'cdrg': _group_to_dict(self.cdrg), 'rg_coarse': _group_to_dict(self.rg_coarse),
                'rg_fine': _group_to_dict(self.rg_fine), 'rg_recon': _group_to_dict(self.rg_recon),
                'lsta1': _lsta_to_dict(self.lsta1), 'lsta2': _lsta_to_dict(self.lsta2),
                'alignment': self.alignment.value}

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> 'MoCoPnetCfg':
        try:
            return MoCoPnetCfg(frames=d['frames'], scale=d['scale'], channels=d['channels'],
                               cdrg=_group_from_dict(d['cdrg']), rg_coarse=_group_from_dict(d['rg_coarse']),
                               rg_fine=_group_from_dict(d['rg_fine']), rg_recon=_group_from_dict(d['rg_recon']),
                               lsta1=_lsta_from_dict(d['lsta1']), lsta2=_lsta_from_dict(d['lsta2']),
                               alignment=AlignmentMode(d['alignment']))
        except KeyError as e:
            raise ConfigError(str(e), 'missing from the network configuration.') from e


@final
@immutable
@dataclass(frozen=True)
class TrainCfg:
    """
    Training protocol.

    Attributes:
        patch: side of the low-resolution crop; the high-resolution crop is patch * scale.
        batch: clips per iteration.
        iterations: total number of iterations.
        lr: the initial learning rate.
        lr_marks: iterations at which the learning rate halves; None scales the
            10k / 20k / 60k marks of a 100k run to the run length.
        flip: random horizontal and vertical flips.
        rotate: random rotations by multiples of 90 degrees.
        seed: seeds the initialisation and every sampling decision.
        log_every: a loss row is logged every this many iterations.
        dtype: 'float64' or 'float32'.
    """
    patch: int = 64
    batch: int = 12
    iterations: int = 100_000
    lr: float = 1e-3
    lr_marks: Optional[Tuple[int, ...]] = None
    flip: bool = True
    rotate: bool = True
    seed: int = 0
    log_every: int = 100
    dtype: str = 'float64'

    def __post_init__(self):
        if self.patch < 1 or self.batch < 1 or self.iterations < 0:
            raise ConfigError('patch/batch/iterations', f'invalid values {self.patch}/{self.batch}/{self.iterations}.')
        if self.lr <= 0:
            raise ConfigError('lr', f'must be positive, received {self.lr}.')
        if self.log_every < 1:
            raise ConfigError('log_every', f'must be at least 1, received {self.log_every}.')
        if self.dtype not in ('float64', 'float32'):
            raise ConfigError('dtype', f'must be float64 or float32, received {self.dtype}.')

    @property
    def schedule(self) -> LrSchedule:
        if self.lr_marks is None:
            return LrSchedule.scaled(self.iterations, initial=self.lr)
        return LrSchedule(initial=self.lr, marks=tuple(self.lr_marks))

    def override(self, values: Mapping[str, str]) -> 'TrainCfg':
        """
        Replace fields from string values, as read from a config file or the command line.

        Raises:
            ConfigError: a key is unknown or a value cannot be converted.
        """
        names = {f.name for f in fields(self)}
        changes: Dict[str, Any] = {}
        for key, raw in values.items():
            if key not in names:
                raise ConfigError(key, 'unknown training parameter.')
            try:
                current = getattr(self, key)
                if key == 'lr_marks':
                    changes[key] = tuple(int(v) for v in raw.replace(',', ' ').split())
                elif isinstance(current, bool):
                    changes[key] = str_to_bool(raw)
                elif isinstance(current, int):
                    changes[key] = int(raw)
                elif isinstance(current, float):
                    changes[key] = float(raw)
                else:
                    changes[key] = raw.strip()
            except ValueError as e:
                raise ConfigError(key, str(e)) from e
        return replace(self, **changes)


class TrainPreset(str, Enum):
    """
    Named training protocols.

    DEFAULT: the TrainCfg defaults with the network given by net.* values.
    TOY_OVERFIT: memorise one whole noise-free 7-frame clip (synth preset clean-moving-target)
        with the 7-frame toy network. No crop or augmentation, so every iteration sees the same
        sample, and the rate halves four times in the second half of the 2000 iterations.
    """
    DEFAULT = 'default'
    TOY_OVERFIT = 'toy-overfit'

    def train_cfg(self) -> TrainCfg:
        match self:
            case TrainPreset.DEFAULT:
                return TrainCfg()
            case TrainPreset.TOY_OVERFIT:
                return TrainCfg(patch=16, batch=1, iterations=2000, lr=1e-3, lr_marks=(1000, 1400, 1700, 1900),
                                flip=False, rotate=False, seed=0, log_every=100)

    def network_values(self) -> Dict[str, str]:
        """net.* defaults that net.* values given by the user replace."""
        match self:
            case TrainPreset.DEFAULT:
                return {}
            case TrainPreset.TOY_OVERFIT:
                return {'preset': 'toy', 'frames': '7'}
