# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, final

import numpy as np

from mocopy.data import FrameSequence, degrade
from mocopy.decorators import logged_stage
from mocopy.errors import EmptyDatasetError
from mocopy.numerics import AdamState, Params, Tape, Tensor, adam_step
from mocopy.types import FloatArray

from .config import MoCoPnetCfg, TrainCfg
from .model import forward, init_params, loss

__all__ = [
    'ClipDataset',
    'LogRow',
    'TrainResult',
    'train',
]

logger = logging.getLogger(__name__)


@final
class ClipDataset:
    """
    Training pairs cut from high-resolution sequences.

    Each sample is a random window of T consecutive low-resolution frames (obtained with degrade),
    a random patch x patch crop of it, and the matching crop of the high-resolution middle frame,
    with random flips and rotations applied to both.
    """
    def __init__(self, sequences: Sequence[FrameSequence], cfg: MoCoPnetCfg, tcfg: TrainCfg):
        self.cfg = cfg
        self.tcfg = tcfg
        self._pairs: List[Tuple[FloatArray, FloatArray]] = []
        for seq in sequences:
            if len(seq) < cfg.frames:
                logger.warning('Skipping a sequence of %d frames, %d are needed.', len(seq), cfg.frames)
                continue
            lr = degrade(seq, cfg.scale)
            self._pairs.append((lr.stack(), seq.stack()))
        if not self._pairs:
            raise EmptyDatasetError(f'No sequence has the {cfg.frames} frames needed for training.')

    def __len__(self) -> int:
        return len(self._pairs)

    def sample(self, rng: np.random.Generator) -> Tuple[FloatArray, FloatArray]:
        """
        Returns:
            A [T, p, p] low-resolution clip and the [1, p * scale, p * scale] high-resolution target.
        """
        lr, hr = self._pairs[int(rng.integers(len(self._pairs)))]
        n, h, w = lr.shape
        s, t = self.cfg.scale, self.cfg.frames
        start = int(rng.integers(n - t + 1))
        ph, pw = min(self.tcfg.patch, h), min(self.tcfg.patch, w)
        y = int(rng.integers(h - ph + 1))
        x = int(rng.integers(w - pw + 1))

        clip = lr[start:start + t, y:y + ph, x:x + pw]
        target = hr[start + t // 2, y * s:(y + ph) * s, x * s:(x + pw) * s][None]
        if self.tcfg.flip:
            if rng.random() < 0.5:
                clip, target = clip[..., ::-1], target[..., ::-1]
            if rng.random() < 0.5:
                clip, target = clip[..., ::-1, :], target[..., ::-1, :]
        if self.tcfg.rotate and ph == pw:
            k = int(rng.integers(4))
            clip, target = np.rot90(clip, k, axes=(-2, -1)), np.rot90(target, k, axes=(-2, -1))
        return np.ascontiguousarray(clip), np.ascontiguousarray(target)

    def batch(self, rng: np.random.Generator, size: int, dtype: str = 'float64') -> Tuple[Tensor, Tensor]:
        samples = [self.sample(rng) for _ in range(size)]
        clips = np.stack([c for c, _ in samples]).astype(dtype)
        targets = np.stack([t for _, t in samples]).astype(dtype)
        return Tensor(clips), Tensor(targets)


@final
@dataclass(frozen=True)
class LogRow:
    iteration: int
    loss: float
    lr: float


@final
@dataclass(frozen=True, eq=False)
class TrainResult:
    """
    Attributes:
        params: the final parameters.
        adam: the final optimizer state.
        losses: the loss of every iteration run by this call, in order.
        log: one row per logging interval.
        iteration: the iteration counter after the last step.
    """
    params: Dict[str, Tensor]
    adam: AdamState
    losses: Tuple[float, ...]
    log: Tuple[LogRow, ...]
    iteration: int

    @property
    def best_so_far(self) -> Tuple[float, ...]:
        return tuple(np.minimum.accumulate(self.losses)) if self.losses else ()


@logged_stage('train')
def train(dataset: ClipDataset,
          cfg: MoCoPnetCfg,
          tcfg: TrainCfg,
          params: Optional[Params] = None,
          adam: Optional[AdamState] = None,
          start_iteration: int = 0,
          on_log: Optional[Callable[[LogRow], None]] = None) -> TrainResult:
    """
    Minimise the MSE loss with Adam and the step learning rate schedule.

    Every random decision of iteration i is drawn from a generator seeded with (seed, i), so a run
    is fully determined by its seed, and a resumed run continues exactly where it stopped.

    Args:
        dataset: the training pairs.
        cfg: the network configuration.
        tcfg: the training protocol.
        params: parameters to start from; a seeded initialisation when omitted.
        adam: optimizer state to resume; fresh when omitted.
        start_iteration: the iteration counter to resume from.
        on_log: called with every log row.

    Returns:
        The trained parameters, optimizer state and loss history.
    """
    dtype = np.dtype(tcfg.dtype)
    current = {k: Tensor(np.asarray(p.data, dtype=dtype)) for k, p in (params or init_params(cfg, tcfg.seed)).items()}
    adam = adam or AdamState.init(current)
    schedule = tcfg.schedule
    names = list(current)

    losses: List[float] = []
    rows: List[LogRow] = []
    for it in range(start_iteration, tcfg.iterations):
        rng = np.random.default_rng([tcfg.seed, it])
        clip, hr = dataset.batch(rng, tcfg.batch, tcfg.dtype)
        with Tape() as tape:
            leaves = [current[k] for k in names]
            tape.watch(*leaves)
            value = loss(forward(clip, cfg, current), hr)
            grads = tape.gradient(value, leaves)
        lr = schedule.lr_at(it)
        current = adam_step(adam, current, dict(zip(names, grads)), lr)
        losses.append(value.item())

        if (it + 1) % tcfg.log_every == 0:
            row = LogRow(iteration=it + 1, loss=losses[-1], lr=lr)
            rows.append(row)
            logger.info('iteration %d: loss %.6e, lr %.3e', row.iteration, row.loss, row.lr)
            if on_log is not None:
                on_log(row)

    return TrainResult(params=current, adam=adam, losses=tuple(losses), log=tuple(rows),
                       iteration=max(start_iteration, tcfg.iterations))
