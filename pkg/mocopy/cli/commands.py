# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from mocopy.data import (SIDECAR_NAME, FrameSequence, SynthPreset, SynthSpec, TargetAnnotation, degrade,
                         list_frames, load_frame, load_sequence, read_manifest, read_sidecar, save_frame,
                         save_sequence, synth_sequence, write_sidecar)
from mocopy.decorators import logged_stage
from mocopy.detectors import DetectorName, ResolutionClass, detect, write_detector_params
from mocopy.errors import ConfigError, EmptyDatasetError, FrameCountError
from mocopy.helpers import natural_key, threshold_sweep, to_gray_levels, write_key_values
from mocopy.metrics import (DatasetProfile, detection_gains, local_cr, local_snr, metric_report,
                            neighborhood_stats, psnr, read_rows_csv, roc, roc_auc, ssim, write_json_report,
                            write_roc_csv, write_rows_csv)
from mocopy.network import ClipDataset, TrainResult, forward, load_checkpoint, save_checkpoint, train
from mocopy.numerics import GradCheckReport
from mocopy.plot import roc_figure, save_gray
from mocopy.types import FloatArray

from .config import RunConfig
from .gradcheck import GradcheckTarget, run_gradcheck

__all__ = [
    'cmd_degrade',
    'cmd_detect',
    'cmd_eval_detect',
    'cmd_eval_sr',
    'cmd_gradcheck',
    'cmd_sr',
    'cmd_synth',
    'cmd_train',
    'CANDIDATES_NAME',
    'TARGET_PREFIX',
]

logger = logging.getLogger(__name__)

CANDIDATES_NAME = 'candidates.csv'
TARGET_PREFIX = 'target_'

_T = TypeVar('_T')
_R = TypeVar('_R')


def _parallel_map(fn: Callable[[_T], _R], items: Iterable[_T], threads: int) -> List[_R]:
    """Map in a thread pool; the results keep the order of items."""
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _output(run: RunConfig) -> Path:
    if run.output is None:
        raise ConfigError('output', f'{run.command} needs an output path.')
    return run.output


def _annotations_by_stem(directory: Path, paths: Sequence[Path],
                         sidecar: Optional[Path] = None) -> Dict[str, TargetAnnotation]:
    sidecar = sidecar if sidecar is not None else directory / SIDECAR_NAME
    if not sidecar.exists():
        return {}
    annotations = read_sidecar(sidecar, len(paths))
    return {p.stem: a for p, a in zip(paths, annotations) if a is not None}


@logged_stage('synth')
def cmd_synth(run: RunConfig, preset: SynthPreset = SynthPreset.MOVING_TARGET) -> FrameSequence:
    """
    Write a synthetic sequence, its annotation sidecar and the generating parameters (synth.cfg).
    """
    out = _output(run)
    spec = SynthSpec.from_config(run.section('synth'), base=SynthPreset(preset).spec(run.seed))
    seq = synth_sequence(spec)
    save_sequence(seq, out)
    write_key_values(spec.to_config(), out / 'synth.cfg')
    return seq


@logged_stage('degrade')
def cmd_degrade(run: RunConfig, scale: int = 4) -> FrameSequence:
    """
    Write the bicubic low-resolution version of a high-resolution sequence.
    """
    lr = degrade(load_sequence(run.inputs[0], run.threads), scale)
    save_sequence(lr, _output(run))
    return lr


def _training_sequences(run: RunConfig, split: str) -> List[FrameSequence]:
    source = run.inputs[0]
    directories: Tuple[Path, ...] = read_manifest(source).split(split) if source.is_file() else (source,)
    if not directories:
        raise EmptyDatasetError(f'The manifest {source} has no {split!r} sequences.')
    return _parallel_map(load_sequence, directories, run.threads)


@logged_stage('train')
def cmd_train(run: RunConfig,
              split: str = 'train',
              resume: Optional[Path] = None,
              loss_csv: Optional[Path] = None) -> TrainResult:
    """
    Train on the sequences of a manifest split (or on a single sequence directory) and write a
    checkpoint plus a loss CSV with one row per logging interval.

    With resume, the network configuration, parameters, optimizer state and iteration counter come
    from the checkpoint and the loss CSV is extended.
    """
    out = _output(run)
    loss_csv = loss_csv if loss_csv is not None else out.with_suffix('.loss.csv')
    tcfg = run.training
    sequences = _training_sequences(run, split)

    rows: List[Dict[str, Any]] = []
    if resume is not None:
        checkpoint = load_checkpoint(resume)
        cfg, params, adam, start = checkpoint.cfg, checkpoint.params, checkpoint.adam, checkpoint.iteration
        if run.section('net'):
            logger.warning('Ignoring net.* values; the network configuration comes from %s.', resume)
        if loss_csv.exists():
            rows = [dict(zip(row.colnames, row)) for row in read_rows_csv(loss_csv)]
        logger.info('Resuming from iteration %d of %s.', start, resume)
    else:
        cfg, params, adam, start = run.network, None, None, 0

    result = train(ClipDataset(sequences, cfg, tcfg), cfg, tcfg, params=params, adam=adam, start_iteration=start)
    metadata = {'iteration': result.iteration, 'seed': tcfg.seed,
                'loss': result.losses[-1] if result.losses else None}
    save_checkpoint(out, cfg, result.params, result.adam, metadata)
    rows += [asdict(row) for row in result.log]
    write_rows_csv(rows, loss_csv, ('iteration', 'loss', 'lr'))
    return result


def _dump_internals(directory: Path, name: str, internals: Dict[str, FloatArray]) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for key, value in internals.items():
        if key == 'features.ref':
            save_gray(value[0], directory / f'{name}_features.png')
            continue
        module = key.removeprefix('attention.').replace('.', '_')
        # Rows are neighbours, channels are offsets.
        for nbr in range(value.shape[0]):
            for offset in range(value.shape[1]):
                save_gray(value[nbr, offset], directory / f'{name}_{module}_nbr{nbr}_off{offset}.png')


@logged_stage('sr')
def cmd_sr(run: RunConfig, dump_internals: Optional[Path] = None) -> List[Path]:
    """
    Super-resolve every frame of a low-resolution sequence that has a full temporal window.

    Output frames keep the names of their source frames; the first and last (T - 1) / 2 frames
    are skipped. Annotations, when present, are scaled and written to the output sidecar.
    """
    checkpoint_path, directory = run.inputs[:2]
    out = _output(run)
    checkpoint = load_checkpoint(checkpoint_path)
    cfg = checkpoint.cfg
    seq = load_sequence(directory, run.threads)
    names = [p.stem for p in list_frames(directory)]
    if len(seq) < cfg.frames:
        raise FrameCountError(cfg.frames, len(seq), f'{directory} is shorter than one temporal window.')

    centres = range(cfg.center, len(seq) - cfg.center)

    def super_resolve(index: int) -> Tuple[FloatArray, Dict[str, FloatArray]]:
        internals: Dict[str, FloatArray] = {}
        sr = forward(seq.window(index - cfg.center, cfg.frames), cfg, checkpoint.params,
                     internals if dump_internals is not None else None)
        return sr.numpy()[0, 0], internals

    outputs = _parallel_map(super_resolve, centres, run.threads)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for index, (frame, internals) in zip(centres, outputs):
        path = out / f'{names[index]}.png'
        save_frame(frame, path)
        paths.append(path)
        if dump_internals is not None:
            _dump_internals(dump_internals, names[index], internals)
    if seq.annotations is not None:
        write_sidecar([None if (a := seq.annotation(i)) is None else a.scaled(cfg.scale) for i in centres],
                      out / SIDECAR_NAME)
    logger.info('Super-resolved %d of %d frames into %s.', len(paths), len(seq), out)
    return paths


@logged_stage('eval-sr')
def cmd_eval_sr(run: RunConfig,
                profile: DatasetProfile = DatasetProfile.SAITD,
                resolution: ResolutionClass = ResolutionClass.HR,
                peak: float = 1.0) -> Dict[str, Any]:
    """
    PSNR and SSIM of every super-resolved frame against the ground-truth frame of the same name,
    plus local SNR and CR around the annotated target on the [0, 255] scale.
    """
    sr_dir, gt_dir = run.inputs[:2]
    gt_paths = list_frames(gt_dir)
    gt_by_stem = {p.stem: p for p in gt_paths}
    annotations = _annotations_by_stem(gt_dir, gt_paths)
    spec = DatasetProfile(profile).neighborhood(resolution)

    pairs = []
    for path in list_frames(sr_dir):
        if path.stem in gt_by_stem:
            pairs.append((path, gt_by_stem[path.stem]))
        else:
            logger.warning('No ground truth for %s.', path.name)
    if not pairs:
        raise EmptyDatasetError(f'No frame of {sr_dir} has a ground truth in {gt_dir}.')

    def evaluate(pair: Tuple[Path, Path]) -> Dict[str, float]:
        sr, gt = load_frame(pair[0]), load_frame(pair[1])
        row = {'psnr': psnr(sr, gt, peak), 'ssim': ssim(sr, gt, peak)}
        annotation = annotations.get(pair[1].stem)
        if annotation is not None:
            stats = neighborhood_stats(to_gray_levels(sr), annotation, spec)
            row.update(snr=local_snr(stats), cr=local_cr(stats))
        return row

    rows = _parallel_map(evaluate, pairs, run.threads)
    report = metric_report({sr.stem: row for (sr, _), row in zip(pairs, rows)})
    write_json_report(report, _output(run))
    return report


def _detect_inputs(source: Path) -> List[Path]:
    paths = list_frames(source) if source.is_dir() else [source]
    if not paths:
        raise EmptyDatasetError(f'{source} holds no frames.')
    return paths


@logged_stage('detect')
def cmd_detect(run: RunConfig,
               detector: DetectorName,
               resolution: ResolutionClass = ResolutionClass.HR,
               params_file: Optional[Path] = None,
               threshold: Optional[float] = None,
               min_area: int = 1,
               png: bool = False) -> List[Dict[str, Any]]:
    """
    Run one detector on every frame. Writes target_<frame>.npy target images on the [0, 255] scale,
    a candidates CSV and the detector parameters used.
    """
    out = _output(run)
    params = run.detector(resolution, params_file)
    paths = _detect_inputs(run.inputs[0])
    results = _parallel_map(lambda p: detect(load_frame(p), detector, params, threshold, min_area), paths,
                            run.threads)

    out.mkdir(parents=True, exist_ok=True)
    rows: List[Dict[str, Any]] = []
    for path, result in zip(paths, results):
        np.save(out / f'{TARGET_PREFIX}{path.stem}.npy', result.target_image)
        if png:
            save_gray(result.target_image, out / f'{TARGET_PREFIX}{path.stem}.png')
        if not result.converged:
            logger.warning('%s did not converge on %s.', result.detector.value, path.name)
        rows += [{'frame': path.stem, 'rank': rank, 'x': c.x, 'y': c.y, 'score': c.score, 'area': c.area,
                  'threshold': result.threshold, 'converged': int(result.converged)}
                 for rank, c in enumerate(result.candidates)]
    write_rows_csv(rows, out / CANDIDATES_NAME,
                   ('frame', 'rank', 'x', 'y', 'score', 'area', 'threshold', 'converged'))
    write_detector_params(params, out / 'detector.cfg')
    return rows


@logged_stage('eval-detect')
def cmd_eval_detect(run: RunConfig,
                    roc_csv: Path,
                    profile: DatasetProfile = DatasetProfile.SAITD,
                    lr_resolution: ResolutionClass = ResolutionClass.LR4,
                    target_resolution: ResolutionClass = ResolutionClass.HR,
                    scale: int = 4,
                    tau: Optional[float] = None,
                    sweep: int = 50,
                    annotations: Optional[Path] = None,
                    figure: Optional[Path] = None) -> Dict[str, Any]:
    """
    Detection gains of every target image against its low-resolution input frame, plus the ROC
    over all target images.

    "In" statistics are measured on the low-resolution frame and "out" statistics on the target
    image, each with the neighborhood of its resolution class, both on the [0, 255] scale.
    The low-resolution annotation is scaled by scale for the target image.
    """
    lr_dir, target_dir = run.inputs[:2]
    lr_paths = list_frames(lr_dir)
    lr_by_stem = {p.stem: p for p in lr_paths}
    truth = _annotations_by_stem(lr_dir, lr_paths, annotations)
    if not truth:
        raise ConfigError('annotations', f'no annotations found for {lr_dir}.')
    lr_spec = DatasetProfile(profile).neighborhood(lr_resolution)
    hr_spec = DatasetProfile(profile).neighborhood(target_resolution)

    targets = sorted(target_dir.glob(f'{TARGET_PREFIX}*.npy'), key=lambda p: natural_key(p.name))
    if not targets:
        raise EmptyDatasetError(f'{target_dir} holds no target images.')
    stems = [p.stem.removeprefix(TARGET_PREFIX) for p in targets]
    for stem in stems:
        if stem not in lr_by_stem:
            raise ConfigError(stem, f'no matching low-resolution frame in {lr_dir}.')
    images = [np.load(p) for p in targets]

    def gains(item: Tuple[str, FloatArray]) -> Optional[Dict[str, float]]:
        stem, image = item
        annotation = truth.get(stem)
        if annotation is None:
            return None
        lr = to_gray_levels(load_frame(lr_by_stem[stem]))
        g = detection_gains(lr, annotation, lr_spec, image, annotation.scaled(scale), hr_spec)
        return {'snrg': g.snrg, 'bsf': g.bsf, 'scrg': g.scrg, 'cg': g.cg}

    rows = _parallel_map(gains, list(zip(stems, images)), run.threads)
    report = metric_report({stem: row for stem, row in zip(stems, rows) if row is not None})

    tau = tau if tau is not None else ResolutionClass(target_resolution).true_detection_radius()
    low = min(float(img.min()) for img in images)
    high = max(float(img.max()) for img in images)
    truths = [[truth[s].scaled(scale)] if s in truth else [] for s in stems]
    curve = roc(images, truths, tau, threshold_sweep(low, high, sweep))
    write_roc_csv(curve, roc_csv)
    if figure is not None:
        roc_figure(curve, figure)
    report['roc'] = {'auc': roc_auc(curve), 'tau': tau, 'thresholds': len(curve.thresholds)}
    write_json_report(report, _output(run))
    return report


def cmd_gradcheck(target: GradcheckTarget, seed: int = 0) -> GradCheckReport:
    report = run_gradcheck(GradcheckTarget(target), seed)
    for line in report.lines():
        logger.info('%s', line)
    return report
