# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from mocopy.data import (SIDECAR_NAME, DatasetManifest, FrameSequence, ManifestEntry, SynthPreset, SynthSpec,
                         TargetAnnotation, TargetShape, bicubic_resize, bicubic_upsample, cubic_kernel, degrade,
                         list_frames, load_frame, load_sequence, read_manifest, read_sidecar, resize_weights,
                         save_frame, save_sequence, synth_sequence, write_manifest, write_sidecar)
from mocopy.errors import (AnnotationOutsideImageError, ConfigError, DegenerateSizeError, DivisibilityError,
                           MalformedSidecarError, MixedFrameSizeError, TargetOutOfBoundsError, UnreadableFrameError)

from .fixtures import impulse_pair, moving_target, rng


def test_annotation_validation_and_scaling():
    ann = TargetAnnotation(x=10.0, y=4.0, a=3.0, b=2.0)
    assert ann.scaled(0.5) == TargetAnnotation(x=5.0, y=2.0, a=1.5, b=1.0)
    assert ann.inside((8, 16)) and not ann.inside((4, 16))
    with pytest.raises(ValueError):
        TargetAnnotation(x=0.0, y=0.0, a=0.0, b=1.0)


def test_sequence_validation():
    with pytest.raises(ValueError):
        FrameSequence(frames=())
    with pytest.raises(MixedFrameSizeError):
        FrameSequence.from_arrays([np.zeros((4, 4)), np.zeros((4, 5))])
    with pytest.raises(AnnotationOutsideImageError):
        FrameSequence.from_arrays([np.zeros((4, 4))], [TargetAnnotation(5.0, 1.0, 1.0, 1.0)])
    with pytest.raises(ValueError):
        FrameSequence.from_arrays([np.zeros((4, 4))], [None, None])


def test_sequence_clamps_and_windows():
    seq = FrameSequence.from_arrays([np.full((2, 3), v) for v in (-1.0, 0.5, 2.0)],
                                    [None, TargetAnnotation(1.0, 1.0, 1.0, 1.0), None])
    assert len(seq) == 3 and seq.size == (2, 3)
    np.testing.assert_array_equal(seq.stack()[:, 0, 0], [0.0, 0.5, 1.0])
    window = seq.window(1, 2)
    assert window.annotation(0) == TargetAnnotation(1.0, 1.0, 1.0, 1.0)
    assert window.annotation(1) is None
    with pytest.raises(ValueError):
        seq.window(2, 2)


def test_cubic_kernel_values():
    np.testing.assert_allclose(cubic_kernel([0.0, 1.0, 2.0, 2.5]), [1.0, 0.0, 0.0, 0.0], atol=1e-15)
    assert cubic_kernel(0.5) == pytest.approx(0.5625)
    assert cubic_kernel(1.5) == pytest.approx(-0.0625)


@pytest.mark.parametrize('in_size, out_size, factor', [(8, 32, Fraction(4)), (32, 8, Fraction(1, 4)),
                                                       (9, 6, Fraction(2, 3))])
def test_resize_weights_partition_unity(in_size, out_size, factor):
    w = resize_weights(in_size, out_size, factor)
    assert w.shape == (out_size, in_size)
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-12)


def test_bicubic_preserves_constants_and_linear_ramps():
    flat = np.full((8, 12), 0.3)
    np.testing.assert_allclose(bicubic_upsample(flat, 4).data, 0.3, atol=1e-12)
    ramp = np.tile(np.arange(16.0), (16, 1))
    up = bicubic_upsample(ramp, 2).data
    # Away from the mirrored border a bicubic kernel reproduces linear functions exactly.
    expected = (np.arange(32) + 0.5) / 2 - 0.5
    np.testing.assert_allclose(up[:, 4:-4], np.tile(expected[4:-4], (32, 1)), atol=1e-12)


def test_bicubic_output_sizes():
    assert bicubic_resize(np.zeros((10, 7)), Fraction(1, 2)).shape == (5, 3)
    assert bicubic_resize(np.zeros((9, 9)), 2 / 3).shape == (6, 6)
    with pytest.raises(DegenerateSizeError):
        bicubic_resize(np.zeros((3, 3)), Fraction(1, 4))
    with pytest.raises(ValueError):
        bicubic_resize(np.zeros((3, 3)), 0)


def test_bicubic_downscale_of_interior_delta_sums_to_delta_mass():
    img = np.zeros((32, 32))
    img[16, 16] = 1.0
    down = bicubic_resize(img, Fraction(1, 4)).data
    assert down.sum() == pytest.approx(1.0 / 16.0, rel=1e-3)
    assert np.unravel_index(np.argmax(down), down.shape) == (4, 4)


@pytest.mark.usefixtures('moving_target')
def test_degrade_scales_frames_and_annotations(moving_target):
    lr = degrade(moving_target, 4)
    assert lr.size == (16, 16) and len(lr) == len(moving_target)
    assert lr.annotation(3) == moving_target.annotation(3).scaled(0.25)
    assert lr.stack().min() >= 0.0 and lr.stack().max() <= 1.0
    with pytest.raises(DivisibilityError):
        degrade(FrameSequence.from_arrays([np.zeros((10, 12))]), 4)


@pytest.mark.usefixtures('impulse_pair')
def test_impulse_pair(impulse_pair):
    assert len(impulse_pair) == 2 and impulse_pair.size == (32, 32)
    assert impulse_pair.array(0)[15, 15] == 1.0
    assert impulse_pair.array(1)[16, 16] == 1.0
    assert impulse_pair.array(0).sum() == 1.0 and impulse_pair.array(1).sum() == 1.0
    assert impulse_pair.annotation(1) == TargetAnnotation(x=16.0, y=16.0, a=1, b=1)


def test_synth_is_reproducible():
    spec = SynthPreset.MOVING_TARGET.spec(seed=5)
    a, b = synth_sequence(spec), synth_sequence(spec)
    np.testing.assert_array_equal(a.stack(), b.stack())
    c = synth_sequence(SynthPreset.MOVING_TARGET.spec(seed=6))
    assert not np.array_equal(a.stack(), c.stack())


def test_synth_target_follows_annotation():
    spec = SynthSpec(height=32, width=32, frames=4, level=0.1, target_size=3, target_peak=0.5,
                     start_y=10.0, start_x=8.0, motion_y=2.0, motion_x=3.0)
    seq = synth_sequence(spec)
    for t in range(4):
        ann = seq.annotation(t)
        assert (ann.y, ann.x) == (10.0 + 2 * t, 8.0 + 3 * t)
        frame = seq.array(t)
        np.testing.assert_allclose(frame[int(ann.y) - 1:int(ann.y) + 2, int(ann.x) - 1:int(ann.x) + 2], 0.6)
        assert frame.sum() == pytest.approx(0.1 * 32 * 32 + 9 * 0.5)


def test_synth_fractional_motion_keeps_target_mass():
    spec = SynthSpec(height=24, width=24, frames=3, level=0.0, target_shape=TargetShape.GAUSSIAN, target_size=2,
                     target_peak=0.4, start_y=11.0, start_x=11.0, motion_y=0.25, motion_x=-0.5)
    seq = synth_sequence(spec)
    masses = [seq.array(t).sum() for t in range(3)]
    np.testing.assert_allclose(masses, masses[0], rtol=1e-12)


def test_synth_rejects_targets_leaving_the_image():
    with pytest.raises(TargetOutOfBoundsError) as e:
        synth_sequence(SynthSpec(height=16, width=16, frames=5, start_y=8.0, start_x=8.0, motion_x=2.0))
    assert e.value.frame == 4


def test_synth_clutter_preset_is_low_rank():
    seq = synth_sequence(SynthSpec(height=32, width=32, frames=1, level=0.1, clutter_blobs=3,
                                   clutter_amplitude=0.3, target_peak=0.0))
    s = np.linalg.svd(seq.array(0), compute_uv=False)
    assert s[4] / s[0] < 1e-10


def test_synth_spec_from_config():
    spec = SynthSpec.from_config({'frames': '3', 'noise_sigma': '0.02', 'target_shape': 'gaussian'})
    assert (spec.frames, spec.noise_sigma, spec.target_shape) == (3, 0.02, TargetShape.GAUSSIAN)
    assert SynthSpec.from_config(spec.to_config()) == spec
    with pytest.raises(ConfigError):
        SynthSpec.from_config({'colour': 'red'})
    with pytest.raises(ConfigError):
        SynthSpec.from_config({'frames': 'seven'})


@pytest.mark.parametrize('bit_depth, tol', [(8, 0.5 / 255), (16, 0.5 / 65535)])
@pytest.mark.usefixtures('rng')
def test_frame_io_quantisation(rng, tmp_path, bit_depth, tol):
    arr = rng.uniform(size=(5, 7))
    path = tmp_path / 'f.png'
    save_frame(arr, path, bit_depth)
    back = load_frame(path)
    assert back.shape == (5, 7)
    assert np.max(np.abs(back - arr)) <= tol + 1e-12


def test_load_frame_errors(tmp_path):
    garbage = tmp_path / 'garbage.png'
    garbage.write_bytes(b'definitely not an image')
    with pytest.raises(UnreadableFrameError):
        load_frame(garbage)
    rgb = tmp_path / 'rgb.png'
    Image.new('RGB', (3, 3)).save(rgb)
    with pytest.raises(UnreadableFrameError):
        load_frame(rgb)
    with pytest.raises(ValueError):
        save_frame(np.zeros((2, 2)), tmp_path / 'x.png', bit_depth=12)


def test_list_frames_natural_order(tmp_path):
    for name in ('frame_10.png', 'frame_2.png', 'frame_1.pgm', 'notes.txt'):
        (tmp_path / name).touch()
    assert [p.name for p in list_frames(tmp_path)] == ['frame_1.pgm', 'frame_2.png', 'frame_10.png']


@pytest.mark.usefixtures('moving_target')
def test_sequence_directory_round_trip(moving_target, tmp_path):
    paths = save_sequence(moving_target, tmp_path / 'seq')
    assert paths[0].name == 'frame_0000.png'
    assert (tmp_path / 'seq' / SIDECAR_NAME).exists()
    back = load_sequence(tmp_path / 'seq', threads=3)
    assert len(back) == 7
    np.testing.assert_allclose(back.stack(), moving_target.stack(), atol=0.5 / 65535 + 1e-12)
    assert back.annotations == moving_target.annotations


def test_load_sequence_errors(tmp_path):
    with pytest.raises(UnreadableFrameError):
        load_sequence(tmp_path)
    save_frame(np.zeros((4, 4)), tmp_path / 'frame_0.png')
    save_frame(np.zeros((4, 5)), tmp_path / 'frame_1.png')
    with pytest.raises(MixedFrameSizeError):
        load_sequence(tmp_path)


def test_sidecar_parsing(tmp_path):
    path = tmp_path / SIDECAR_NAME
    path.write_text('# index x y a b\n\n0 1.5 2.0 3 3\n2 4 5 1 1\n')
    anns = read_sidecar(path, 3)
    assert anns == (TargetAnnotation(1.5, 2.0, 3.0, 3.0), None, TargetAnnotation(4.0, 5.0, 1.0, 1.0))
    write_sidecar(anns, path)
    assert read_sidecar(path, 3) == anns


@pytest.mark.parametrize('line', ['0 1 2 3', '0 1 2 x 4', '5 1 2 3 3', '0 1 2 0 1'])
def test_sidecar_malformed_lines(tmp_path, line):
    path = tmp_path / SIDECAR_NAME
    path.write_text(f'1 1 1 1 1\n{line}\n')
    with pytest.raises(MalformedSidecarError) as e:
        read_sidecar(path, 3)
    assert e.value.line_number == 2


def test_manifest(tmp_path):
    path = tmp_path / 'data.txt'
    path.write_text('# split path\ntrain seq_a\ntest /abs/seq_b\ntrain seq c\n')
    manifest = read_manifest(path)
    assert manifest.split('train') == (tmp_path / 'seq_a', tmp_path / 'seq c')
    assert manifest.split('test') == (Path('/abs/seq_b'),)
    assert manifest.split('val') == ()
    out = tmp_path / 'copy.txt'
    write_manifest(DatasetManifest((ManifestEntry('train', tmp_path / 'x'),)), out)
    assert read_manifest(out).split('train') == (tmp_path / 'x',)
    path.write_text('train\n')
    with pytest.raises(MalformedSidecarError):
        read_manifest(path)
