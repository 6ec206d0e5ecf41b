# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import importlib
import math
from pathlib import Path

import numpy as np
import pytest

from mocopy.cli import (EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK, THREADS_ENV, GradcheckTarget, RunConfig,
                        build_parser, default_threads, main, network_cfg)
from mocopy.data import SIDECAR_NAME, bicubic_upsample, list_frames, load_frame, load_sequence, read_sidecar
from mocopy.detectors import ResolutionClass, read_detector_params
from mocopy.errors import ConfigError
from mocopy.helpers import read_key_values
from mocopy.metrics import read_json_report, read_rows_csv
from mocopy.network import (AlignmentMode, MoCoPnetCfg, TrainCfg, TrainPreset, load_checkpoint, save_checkpoint,
                            zero_params)
from mocopy.numerics import GradCheckReport


def _main(*args) -> int:
    return main([str(a) for a in args])


@pytest.fixture
def scene(tmp_path) -> Path:
    """A synthetic moving-target sequence and its 4x degraded copy."""
    hr = tmp_path / 'hr'
    assert _main('synth', hr, '--seed', 5, '-q') == EXIT_OK
    assert _main('degrade', hr, tmp_path / 'lr', '--scale', 4, '-q') == EXIT_OK
    return tmp_path


def test_parser_rejects_unknown_gradcheck_target():
    with pytest.raises(SystemExit) as e:
        build_parser().parse_args(['gradcheck', 'wavelet'])
    assert e.value.code == 2
    assert {t.value for t in GradcheckTarget} == {'cdconv', 'lsta', 'lsta-frac', 'rg', 'net-toy'}


def test_gradcheck_passes(capsys):
    assert _main('gradcheck', 'cdconv', '-q') == EXIT_OK
    out = capsys.readouterr().out
    assert 'cdconv: PASS' in out
    assert 'weight: max rel. err' in out


def test_gradcheck_failure_exit_code(monkeypatch, capsys):
    failing = GradCheckReport(names=('x',), max_rel_errors=(0.5,), checked_elements=(4,), tol=1e-6)
    monkeypatch.setattr(importlib.import_module('mocopy.cli.main'), 'cmd_gradcheck', lambda target, seed: failing)
    assert _main('gradcheck', 'rg', '-q') == EXIT_CHECK_FAILED
    assert 'rg: FAIL' in capsys.readouterr().out


def test_structured_errors_exit_with_two(tmp_path, monkeypatch):
    assert _main('degrade', tmp_path / 'missing', tmp_path / 'out', '-q') == EXIT_ERROR
    assert _main('synth', tmp_path / 's', '--set', 'bogus', '-q') == EXIT_ERROR
    assert _main('synth', tmp_path / 's', '--set', 'synth.colour=red', '-q') == EXIT_ERROR
    monkeypatch.setenv(THREADS_ENV, 'many')
    assert _main('synth', tmp_path / 's', '-q') == EXIT_ERROR


def test_default_threads(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert default_threads() == 1
    monkeypatch.setenv(THREADS_ENV, '3')
    assert default_threads() == 3
    monkeypatch.setenv(THREADS_ENV, '0')
    with pytest.raises(ConfigError):
        default_threads()


def test_run_config_layers(tmp_path):
    config = tmp_path / 'run.cfg'
    config.write_text('train.iterations = 20\nNET.Channels = 8\ndetector.tophat_se = 7\n')
    run = RunConfig.resolve('train', inputs=[tmp_path], output=tmp_path / 'ck', seed=4, threads=2, config=config,
                            assignments=['train.iterations=30', 'net.frames = 3'])
    assert run.section('train') == {'iterations': '30'}
    assert run.section('net') == {'channels': '8', 'frames': '3'}
    assert run.training.iterations == 30 and run.training.seed == 4
    assert run.network == MoCoPnetCfg.toy(frames=3, channels=8)
    assert run.detector(ResolutionClass.SR4).tophat_se == 7
    assert run.detector(ResolutionClass.SR4).ipi_block == 200


def test_run_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.resolve('synth', assignments=['iterations=3'])
    with pytest.raises(ConfigError):
        RunConfig.resolve('synth', assignments=['model.depth=3'])
    with pytest.raises(ConfigError):
        RunConfig.resolve('synth', assignments=['net.depth=3'])
    with pytest.raises(ConfigError):
        RunConfig.resolve('degrade', inputs=[tmp_path], assignments=['detector.radius=3'])
    with pytest.raises(ConfigError):
        RunConfig.resolve('synth', assignments=['train.epochs=3'])
    with pytest.raises(ConfigError):
        RunConfig.resolve('train', assignments=['train.preset=huge']).training
    with pytest.raises(ConfigError):
        RunConfig.resolve('synth', assignments=['no equals sign'])
    with pytest.raises(ConfigError):
        RunConfig.resolve('degrade', inputs=[tmp_path / 'missing'])
    with pytest.raises(ConfigError):
        RunConfig.resolve('synth', config=tmp_path / 'missing.cfg')
    with pytest.raises(ConfigError):
        RunConfig.resolve('synth', threads=0)


def test_train_preset_layers(tmp_path):
    run = RunConfig.resolve('train', inputs=[tmp_path], assignments=['train.preset=toy-overfit'])
    assert run.train_preset is TrainPreset.TOY_OVERFIT
    assert run.training == TrainPreset.TOY_OVERFIT.train_cfg()
    assert run.network == MoCoPnetCfg.toy(frames=7)
    run = RunConfig.resolve('train', inputs=[tmp_path], seed=3,
                            assignments=['train.preset=toy-overfit', 'train.iterations=50', 'net.channels=8'])
    assert (run.training.iterations, run.training.seed, run.training.patch) == (50, 3, 16)
    assert run.network == MoCoPnetCfg.toy(frames=7, channels=8)
    assert RunConfig.resolve('train', inputs=[tmp_path]).training == TrainCfg()


def test_network_cfg():
    assert network_cfg({}) == MoCoPnetCfg.toy()
    assert network_cfg({'alignment': 'none', 'scale': '2'}).alignment is AlignmentMode.NONE
    assert network_cfg({'preset': 'full'}) == MoCoPnetCfg.full()
    with pytest.raises(ConfigError):
        network_cfg({'preset': 'full', 'alignment': 'single'})
    with pytest.raises(ConfigError):
        network_cfg({'depth': '3'})
    with pytest.raises(ConfigError):
        network_cfg({'preset': 'huge'})
    with pytest.raises(ConfigError):
        network_cfg({'frames': 'four'})


def test_synth_and_degrade(scene):
    hr, lr = load_sequence(scene / 'hr'), load_sequence(scene / 'lr')
    assert (len(hr), hr.size) == (7, (64, 64))
    assert (len(lr), lr.size) == (7, (16, 16))
    assert read_key_values(scene / 'hr' / 'synth.cfg')['seed'] == '5'
    a_hr, a_lr = hr.annotation(3), lr.annotation(3)
    assert (a_lr.x, a_lr.y) == pytest.approx((a_hr.x / 4, a_hr.y / 4), abs=1e-6)


def test_eval_sr_of_ground_truth(scene):
    report_path = scene / 'sr.json'
    assert _main('eval-sr', scene / 'hr', scene / 'hr', '--out', report_path, '-q') == EXIT_OK
    report = read_json_report(report_path)
    assert len(report['items']) == 7
    assert report['mean']['psnr'] == math.inf
    assert report['mean']['ssim'] == pytest.approx(1.0)
    assert report['mean']['snr'] > 1.0 and report['mean']['cr'] > 0.0


def test_detect_and_eval_detect(scene):
    det = scene / 'det'
    assert _main('detect', scene / 'hr', '--detector', 'tophat', '--out', det, '--set', 'detector.tophat_se=7',
                 '--png', '-q') == EXIT_OK
    assert len(list(det.glob('target_*.npy'))) == 7
    assert len(list(det.glob('target_*.png'))) == 7
    assert read_detector_params(det / 'detector.cfg').tophat_se == 7
    candidates = read_rows_csv(det / 'candidates.csv')
    assert set(candidates['frame']) <= {p.stem for p in list_frames(scene / 'hr')}

    report_path, roc_path, figure = scene / 'gains.json', scene / 'roc.csv', scene / 'roc.png'
    assert _main('eval-detect', scene / 'lr', det, '--out', report_path, '--roc', roc_path,
                 '--roc-figure', figure, '--sweep', 20, '-q') == EXIT_OK
    report = read_json_report(report_path)
    assert len(report['items']) == 7
    assert set(report['mean']) == {'snrg', 'bsf', 'scrg', 'cg'}
    assert report['roc']['tau'] == 10.0 and report['roc']['thresholds'] == 20
    assert 0.0 <= report['roc']['auc'] <= 1.0
    roc = read_rows_csv(roc_path)
    assert len(roc) == 20
    assert all(a >= b for a, b in zip(roc['threshold'], roc['threshold'][1:]))
    assert figure.stat().st_size > 0


def test_eval_detect_needs_target_images(scene):
    (scene / 'empty').mkdir()
    assert _main('eval-detect', scene / 'lr', scene / 'empty', '--out', scene / 'g.json', '--roc', scene / 'r.csv',
                 '-q') == EXIT_ERROR


def test_zero_checkpoint_super_resolves_to_bicubic(scene):
    cfg = MoCoPnetCfg.toy(frames=3, scale=4, channels=8)
    checkpoint = scene / 'zero.ckpt'
    save_checkpoint(checkpoint, cfg, zero_params(cfg))
    sr, internals = scene / 'sr', scene / 'internals'
    assert _main('sr', checkpoint, scene / 'lr', '--out', sr, '--dump-internals', internals, '-q') == EXIT_OK

    names = [p.name for p in list_frames(sr)]
    assert names == [f'frame_{i:04d}.png' for i in range(1, 6)]
    expected = np.clip(bicubic_upsample(load_frame(scene / 'lr' / 'frame_0002.png'), 4).data, 0.0, 1.0)
    np.testing.assert_allclose(load_frame(sr / 'frame_0002.png'), expected, atol=1e-5)
    assert (internals / 'frame_0002_features.png').exists()

    lr_annotations = read_sidecar(scene / 'lr' / SIDECAR_NAME, 7)
    sr_annotations = read_sidecar(sr / SIDECAR_NAME, 5)
    assert sr_annotations[1].x == pytest.approx(lr_annotations[2].x * 4, abs=1e-4)


def test_sr_needs_a_full_window(scene):
    cfg = MoCoPnetCfg.toy(frames=9, scale=4, channels=8)
    checkpoint = scene / 'wide.ckpt'
    save_checkpoint(checkpoint, cfg, zero_params(cfg))
    assert _main('sr', checkpoint, scene / 'lr', '--out', scene / 'sr', '-q') == EXIT_ERROR


@pytest.mark.slow
def test_train_and_resume(scene):
    settings = ['--set', 'net.frames=3', '--set', 'net.channels=8', '--set', 'train.patch=8', '--set', 'train.batch=1',
                '--set', 'train.log_every=1', '--set', 'train.flip=no', '--set', 'train.rotate=no']
    losses = scene / 'loss.csv'
    assert _main('train', scene / 'hr', '--out', scene / 'a.ckpt', '--loss-csv', losses,
                 '--set', 'train.iterations=2', *settings, '-q') == EXIT_OK
    assert len(read_rows_csv(losses)) == 2
    first = load_checkpoint(scene / 'a.ckpt')
    assert first.iteration == 2 and first.cfg == MoCoPnetCfg.toy(frames=3, channels=8)

    assert _main('train', scene / 'hr', '--out', scene / 'b.ckpt', '--resume', scene / 'a.ckpt',
                 '--loss-csv', losses, '--set', 'train.iterations=3', *settings, '-q') == EXIT_OK
    assert load_checkpoint(scene / 'b.ckpt').iteration == 3
    rows = read_rows_csv(losses)
    assert list(rows['iteration']) == [1, 2, 3]
    assert np.all(np.isfinite(rows['loss']))


def _pipeline(root: Path) -> dict:
    quiet = ['-q', '--seed', 11]
    assert _main('synth', root / 'hr', *quiet) == EXIT_OK
    assert _main('degrade', root / 'hr', root / 'lr', *quiet) == EXIT_OK
    assert _main('train', root / 'hr', '--out', root / 'net.ckpt', '--set', 'net.frames=3', '--set', 'net.channels=8',
                 '--set', 'train.iterations=2', '--set', 'train.patch=8', '--set', 'train.batch=1', *quiet) == EXIT_OK
    assert _main('sr', root / 'net.ckpt', root / 'lr', '--out', root / 'sr', *quiet) == EXIT_OK
    reports = {}
    for detector in ('tophat', 'ilcm', 'ipi'):
        det = root / f'det_{detector}'
        assert _main('detect', root / 'sr', '--detector', detector, '--out', det, *quiet) == EXIT_OK
        out = root / f'{detector}.json'
        assert _main('eval-detect', root / 'lr', det, '--out', out, '--roc', root / f'{detector}.csv',
                     '--sweep', 10, *quiet) == EXIT_OK
        reports[detector] = out.read_text()
    return reports


@pytest.mark.slow
def test_pipeline_is_deterministic(tmp_path):
    first = _pipeline(tmp_path / 'first')
    second = _pipeline(tmp_path / 'second')
    assert first == second
    assert len(read_json_report(tmp_path / 'first' / 'ipi.json')['items']) == 5
