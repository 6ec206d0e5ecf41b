# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from mocopy.data import SynthPreset
from mocopy.detectors import DetectorName, ResolutionClass
from mocopy.errors import MocopyError
from mocopy.metrics import DatasetProfile

from .commands import (cmd_degrade, cmd_detect, cmd_eval_detect, cmd_eval_sr, cmd_gradcheck, cmd_sr, cmd_synth,
                       cmd_train)
from .config import THREADS_ENV, RunConfig
from .gradcheck import GradcheckTarget

__all__ = [
    'build_parser',
    'main',
    'EXIT_CHECK_FAILED',
    'EXIT_ERROR',
    'EXIT_OK',
]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2


def _choices(enum) -> List[str]:
    return [e.value for e in enum]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='log debug messages')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='log warnings and errors only')
    common.add_argument('--threads', type=int, default=None,
                        help=f'worker threads for per-frame work (default: ${THREADS_ENV} or 1)')
    common.add_argument('--config', type=Path, default=None, help='key = value file of section.key settings')
    common.add_argument('--set', dest='assignments', action='append', default=[], metavar='SECTION.KEY=VALUE',
                        help='override one setting; repeatable and applied after --config')
    common.add_argument('--seed', type=int, default=0)

    parser = argparse.ArgumentParser(prog='mocopy', description='Infrared small-target video super-resolution '
                                     'and detection evaluation.')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('synth', parents=[common], help='generate a synthetic annotated sequence')
    p.add_argument('output', type=Path)
    p.add_argument('--preset', choices=_choices(SynthPreset), default=SynthPreset.MOVING_TARGET.value)

    p = sub.add_parser('degrade', parents=[common], help='bicubic downsampling of a sequence')
    p.add_argument('input', type=Path)
    p.add_argument('output', type=Path)
    p.add_argument('--scale', type=int, default=4)

    p = sub.add_parser('train', parents=[common], help='train a network')
    p.add_argument('input', type=Path, help='a manifest file or a single sequence directory')
    p.add_argument('--out', dest='output', type=Path, required=True, help='checkpoint to write')
    p.add_argument('--split', default='train')
    p.add_argument('--resume', type=Path, default=None)
    p.add_argument('--loss-csv', type=Path, default=None)

    p = sub.add_parser('sr', parents=[common], help='super-resolve a sequence')
    p.add_argument('checkpoint', type=Path)
    p.add_argument('input', type=Path)
    p.add_argument('--out', dest='output', type=Path, required=True)
    p.add_argument('--dump-internals', type=Path, default=None, metavar='DIR',
                   help='save feature L2-norm and attention maps as grayscale images')

    p = sub.add_parser('eval-sr', parents=[common], help='PSNR, SSIM, local SNR and CR of SR frames')
    p.add_argument('sr', type=Path)
    p.add_argument('gt', type=Path)
    p.add_argument('--out', dest='output', type=Path, required=True, help='JSON report')
    p.add_argument('--profile', choices=_choices(DatasetProfile), default=DatasetProfile.SAITD.value)
    p.add_argument('--resolution', choices=_choices(ResolutionClass), default=ResolutionClass.HR.value)
    p.add_argument('--peak', type=float, default=1.0)

    p = sub.add_parser('detect', parents=[common], help='run a classical small-target detector')
    p.add_argument('input', type=Path, help='a frame or a directory of frames')
    p.add_argument('--detector', choices=_choices(DetectorName), required=True)
    p.add_argument('--out', dest='output', type=Path, required=True)
    p.add_argument('--resolution', choices=_choices(ResolutionClass), default=ResolutionClass.HR.value)
    p.add_argument('--params', type=Path, default=None, help='key = value detector parameter file')
    p.add_argument('--threshold', type=float, default=None)
    p.add_argument('--min-area', type=int, default=1)
    p.add_argument('--png', action='store_true', help='also save stretched target images')

    p = sub.add_parser('eval-detect', parents=[common], help='detection gains and ROC')
    p.add_argument('lr', type=Path)
    p.add_argument('targets', type=Path)
    p.add_argument('--out', dest='output', type=Path, required=True, help='JSON report')
    p.add_argument('--roc', type=Path, required=True, help='ROC CSV')
    p.add_argument('--roc-figure', type=Path, default=None)
    p.add_argument('--annotations', type=Path, default=None)
    p.add_argument('--profile', choices=_choices(DatasetProfile), default=DatasetProfile.SAITD.value)
    p.add_argument('--lr-resolution', choices=_choices(ResolutionClass), default=ResolutionClass.LR4.value)
    p.add_argument('--target-resolution', choices=_choices(ResolutionClass), default=ResolutionClass.HR.value)
    p.add_argument('--scale', type=int, default=4)
    p.add_argument('--tau', type=float, default=None)
    p.add_argument('--sweep', type=int, default=50, help='number of thresholds')

    p = sub.add_parser('gradcheck', parents=[common], help='finite-difference gradient check')
    p.add_argument('target', choices=_choices(GradcheckTarget))
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    logging.getLogger().setLevel(level)


def _inputs(args: argparse.Namespace) -> List[Path]:
    names = ('checkpoint', 'input', 'sr', 'gt', 'lr', 'targets', 'resume', 'params', 'annotations')
    return [getattr(args, n) for n in names if getattr(args, n, None) is not None]


def _run(args: argparse.Namespace) -> int:
    if args.command == 'gradcheck':
        report = cmd_gradcheck(GradcheckTarget(args.target), args.seed)
        print('\n'.join(report.lines()))
        print(f'{args.target}: {"PASS" if report.passed else "FAIL"} (max rel. err {report.max_rel_error:.3e})')
        return EXIT_OK if report.passed else EXIT_CHECK_FAILED

    run = RunConfig.resolve(args.command, inputs=_inputs(args), output=args.output, seed=args.seed,
                            threads=args.threads, config=args.config, assignments=args.assignments)
    match args.command:
        case 'synth':
            cmd_synth(run, SynthPreset(args.preset))
        case 'degrade':
            cmd_degrade(run, args.scale)
        case 'train':
            cmd_train(run, args.split, args.resume, args.loss_csv)
        case 'sr':
            cmd_sr(run, args.dump_internals)
        case 'eval-sr':
            cmd_eval_sr(run, DatasetProfile(args.profile), ResolutionClass(args.resolution), args.peak)
        case 'detect':
            cmd_detect(run, DetectorName(args.detector), ResolutionClass(args.resolution), args.params,
                       args.threshold, args.min_area, args.png)
        case 'eval-detect':
            cmd_eval_detect(run, args.roc, DatasetProfile(args.profile), ResolutionClass(args.lr_resolution),
                            ResolutionClass(args.target_resolution), args.scale, args.tau, args.sweep,
                            args.annotations, args.roc_figure)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point of the mocopy command.

    Returns:
        0 on success, 1 when a gradient check fails, 2 on a structured error. Usage errors exit with 2 from argparse.
    """
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        return _run(args)
    except MocopyError as e:
        logger.error('%s', e)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
