# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, FrozenSet, Final, Mapping, Optional, Sequence, Tuple, final

from gelidum import freeze

from mocopy.data import SynthSpec
from mocopy.decorators import immutable
from mocopy.detectors import DetectorParams, ResolutionClass, read_detector_params
from mocopy.errors import ConfigError
from mocopy.helpers import read_key_values
from mocopy.network import AlignmentMode, MoCoPnetCfg, TrainCfg, TrainPreset
from mocopy.prior_ops import Activation

__all__ = [
    'RunConfig',
    'default_threads',
    'network_cfg',
    'CONFIG_SECTIONS',
    'THREADS_ENV',
]

THREADS_ENV: Final[str] = 'MOCOPY_THREADS'

# Config keys are written section.key, e.g. train.iterations = 200.
CONFIG_SECTIONS: Final[Tuple[str, ...]] = ('net', 'train', 'detector', 'synth')

_NET_KEYS: Final[Tuple[str, ...]] = ('preset', 'frames', 'scale', 'channels', 'alignment', 'activation')

# The names each section accepts.
_SECTION_KEYS: Final[Mapping[str, FrozenSet[str]]] = freeze({
    'net': frozenset(_NET_KEYS),
    'train': frozenset({'preset'} | {f.name for f in fields(TrainCfg)}),
    'detector': frozenset(f.name for f in fields(DetectorParams)),
    'synth': frozenset(f.name for f in fields(SynthSpec)),
})


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or not raw.strip():
        return 1
    try:
        threads = int(raw)
    except ValueError as e:
        raise ConfigError(THREADS_ENV, f'must be an integer, received {raw!r}.') from e
    if threads < 1:
        raise ConfigError(THREADS_ENV, f'must be at least 1, received {threads}.')
    return threads


def network_cfg(values: Mapping[str, str]) -> MoCoPnetCfg:
    """
    Network configuration from net.* values: a preset (toy or full) plus frames, scale,
    channels, alignment and activation.
    """
    unknown = set(values) - set(_NET_KEYS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], 'unknown network parameter.')
    try:
        kwargs = {k: int(values[k]) for k in ('frames', 'scale', 'channels') if k in values}
        if 'activation' in values:
            kwargs['activation'] = Activation(values['activation'].strip())
        preset = values.get('preset', 'toy').strip()
        match preset:
            case 'toy':
                if 'alignment' in values:
                    kwargs['alignment'] = AlignmentMode(values['alignment'].strip())
                return MoCoPnetCfg.toy(**kwargs)
            case 'full':
                if 'alignment' in values:
                    raise ConfigError('alignment', 'the full preset always uses the cascaded alignment.')
                return MoCoPnetCfg.full(**kwargs)
            case _:
                raise ConfigError('preset', f'must be toy or full, received {preset!r}.')
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError('net', str(e)) from e


@final
@immutable
@dataclass(frozen=True)
class RunConfig:
    """
    Everything a subcommand needs, resolved and validated before any computation starts.

    Values come from built-in defaults, then the --config file, then --set flags, later sources winning.

    Attributes:
        command: the subcommand.
        inputs: paths that must exist.
        output: where results go.
        seed: the random seed.
        threads: worker threads for per-frame work.
        values: raw section.key values.
    """
    command: str
    inputs: Tuple[Path, ...] = ()
    output: Optional[Path] = None
    seed: int = 0
    threads: int = 1
    values: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for key in self.values:
            section, sep, name = key.partition('.')
            if not sep or not name or section not in CONFIG_SECTIONS:
                raise ConfigError(key, f'keys must look like <section>.<name> with a section in {CONFIG_SECTIONS}.')
            if name not in _SECTION_KEYS[section]:
                raise ConfigError(key, f'unknown {section} parameter.')
        for path in self.inputs:
            if not path.exists():
                raise ConfigError(str(path), 'input path does not exist.')
        if self.threads < 1:
            raise ConfigError('threads', f'must be at least 1, received {self.threads}.')

    @staticmethod
    def resolve(command: str,
                inputs: Sequence[Path] = (),
                output: Optional[Path] = None,
                seed: int = 0,
                threads: Optional[int] = None,
                config: Optional[Path] = None,
                assignments: Sequence[str] = ()) -> 'RunConfig':
        """
        Merge the config file and key=value assignments into a RunConfig.

        Raises:
            ConfigError: an assignment is malformed, a key is unknown or an input is missing.
        """
        values: Dict[str, str] = {}
        if config is not None:
            if not Path(config).exists():
                raise ConfigError(str(config), 'config file does not exist.')
            values.update(read_key_values(Path(config)))
        for item in assignments:
            key, sep, raw = item.partition('=')
            if not sep or not key.strip():
                raise ConfigError(item, 'assignments must look like section.key=value.')
            values[key.strip().lower()] = raw.strip()
        return RunConfig(command=command, inputs=tuple(Path(p) for p in inputs),
                         output=Path(output) if output is not None else None, seed=seed,
                         threads=threads if threads is not None else default_threads(), values=values)

    def section(self, name: str) -> Dict[str, str]:
        prefix = f'{name}.'
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}

    @property
    def train_preset(self) -> TrainPreset:
        raw = self.section('train').get('preset', TrainPreset.DEFAULT.value).strip()
        try:
            return TrainPreset(raw)
        except ValueError as e:
            choices = [p.value for p in TrainPreset]
            raise ConfigError('train.preset', f'must be one of {choices}, received {raw!r}.') from e

    @property
    def network(self) -> MoCoPnetCfg:
        return network_cfg({**self.train_preset.network_values(), **self.section('net')})

    @property
    def training(self) -> TrainCfg:
        values = {k: v for k, v in self.section('train').items() if k != 'preset'}
        return self.train_preset.train_cfg().override({'seed': str(self.seed), **values})

    def detector(self, resolution: ResolutionClass, params_file: Optional[Path] = None) -> DetectorParams:
        """
        Detector parameters: the resolution preset, then the params file, then detector.* values.
        """
        params = DetectorParams.for_resolution(resolution)
        if params_file is not None:
            params = read_detector_params(params_file, params)
        return params.override(self.section('detector'))
