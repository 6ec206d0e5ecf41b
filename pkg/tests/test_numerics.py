# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mocopy.errors import ShapeMismatchError
from mocopy.numerics import AdamState, LrSchedule, Tape, Tensor, adam_step, grad_check, spectral_norm, svd, svt
from mocopy.numerics.ops import (bilinear_sample, concat, conv2d, leaky_relu, mul, narrow, pixel_shuffle, shift2d,
                                 softmax, sum)

from .fixtures import naive_bilinear, naive_conv2d, rng


def test_tensor_is_read_only():
    t = Tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        t.data[0] = 5.0
    assert t.dtype == np.float64


def test_tensor_rejects_empty():
    with pytest.raises(ShapeMismatchError):
        Tensor(np.zeros((0, 3)))


def test_conv2d_counts_overlapping_ones():
    out = conv2d(Tensor(np.ones((1, 1, 3, 3))), Tensor(np.ones((1, 1, 3, 3))), Tensor([0.0]), padding=1).data
    assert out[0, 0, 1, 1] == 9
    assert out[0, 0, 0, 0] == out[0, 0, 0, 2] == out[0, 0, 2, 0] == out[0, 0, 2, 2] == 4


@pytest.mark.usefixtures('rng')
def test_conv2d_identity_kernel(rng):
    x = rng.normal(size=(2, 1, 4, 5))
    out = conv2d(Tensor(x), Tensor(np.ones((1, 1, 1, 1))), Tensor([0.0]))
    np.testing.assert_array_equal(out.data, x)


@pytest.mark.parametrize('seed, padding, dilation', [(0, 1, 1), (1, 1, 1), (2, 2, 2), (3, 0, 1), (4, 3, 1)])
def test_conv2d_matches_nested_loops(seed, padding, dilation):
    r = np.random.default_rng(seed)
    x = r.normal(size=(1, 2, 5, 5))
    w = r.normal(size=(3, 2, 3, 3))
    b = r.normal(size=(3,))
    out = conv2d(Tensor(x), Tensor(w), Tensor(b), padding=padding, dilation=dilation).data
    np.testing.assert_allclose(out, naive_conv2d(x, w, b, padding, dilation), rtol=0, atol=1e-12)


def test_conv2d_channel_mismatch():
    with pytest.raises(ShapeMismatchError):
        conv2d(Tensor(np.ones((1, 2, 4, 4))), Tensor(np.ones((1, 3, 3, 3))))


@pytest.mark.usefixtures('rng')
def test_bilinear_integer_coordinates_reproduce_input(rng):
    x = rng.normal(size=(1, 2, 4, 5))
    grid = np.stack(np.meshgrid(np.arange(4.0), np.arange(5.0), indexing='ij'), axis=-1)
    np.testing.assert_array_equal(bilinear_sample(Tensor(x), grid).data, x)


def test_bilinear_centre_of_block():
    x = Tensor(np.array([[[[0.0, 1.0], [2.0, 3.0]]]]))
    out = bilinear_sample(x, np.array([[[0.5, 0.5]]]))
    assert out.data[0, 0, 0, 0] == pytest.approx(1.5, abs=1e-15)


def test_bilinear_reads_zero_outside():
    x = Tensor(np.full((1, 1, 1, 1), 4.0))
    out = bilinear_sample(x, np.array([[[-0.5, 0.0], [0.0, 0.25]]]))
    np.testing.assert_allclose(out.data[0, 0, 0], [2.0, 3.0], atol=1e-15)


@pytest.mark.usefixtures('rng')
def test_bilinear_matches_four_point_blend(rng):
    img = rng.normal(size=(6, 7))
    coords = rng.uniform(-1.5, 7.5, size=(4, 5, 2))
    out = bilinear_sample(Tensor(img[None, None]), coords).data[0, 0]
    expected = np.array([[naive_bilinear(img, *coords[i, j]) for j in range(5)] for i in range(4)])
    np.testing.assert_allclose(out, expected, rtol=0, atol=1e-12)


def test_softmax_uniform_and_closed_form():
    np.testing.assert_allclose(softmax(Tensor(np.zeros(5)), axis=0).data, np.full(5, 0.2), atol=1e-15)
    np.testing.assert_allclose(softmax(Tensor([0.0, np.log(3.0)]), axis=0).data, [0.25, 0.75], atol=1e-15)


@settings(deadline=None, max_examples=50)
@given(arrays(np.float64, (3, 4), elements=st.floats(-10, 10)), st.floats(-10, 10))
def test_softmax_shift_invariance(x, c):
    a = softmax(Tensor(x), axis=1).data
    b = softmax(Tensor(x + c), axis=1).data
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
    np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(a > 0)


def test_softmax_invalid_axis():
    with pytest.raises(ShapeMismatchError):
        softmax(Tensor(np.ones((2, 2))), axis=2)


def test_pixel_shuffle_layout():
    x = Tensor(np.arange(4.0).reshape(1, 4, 1, 1))
    np.testing.assert_array_equal(pixel_shuffle(x, 2).data[0, 0], [[0.0, 1.0], [2.0, 3.0]])


def test_shift2d_zero_fills():
    x = Tensor(np.arange(9.0).reshape(1, 1, 3, 3))
    out = shift2d(x, 1, -1).data[0, 0]
    np.testing.assert_array_equal(out, [[0.0, 3.0, 4.0], [0.0, 6.0, 7.0], [0.0, 0.0, 0.0]])


def test_svd_identity_and_diagonal():
    np.testing.assert_allclose(svd(np.eye(4)).s, np.ones(4), atol=1e-15)
    np.testing.assert_allclose(svd(np.diag([3.0, 2.0, 1.0])).s, [3.0, 2.0, 1.0], atol=1e-14)


@pytest.mark.usefixtures('rng')
def test_svd_residuals(rng):
    a = rng.normal(size=(20, 12))
    u, s, v = svd(a)
    assert np.linalg.norm(a - (u * s) @ v.T) / np.linalg.norm(a) <= 1e-10
    assert np.linalg.norm(u.T @ u - np.eye(12)) <= 1e-10
    assert np.linalg.norm(v.T @ v - np.eye(12)) <= 1e-10
    assert np.all(s >= 0) and np.all(np.diff(s) <= 0)


def test_svd_rejects_non_finite():
    with pytest.raises(ValueError):
        svd(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_svt_shrinks_and_counts_rank():
    shrunk, rank = svt(np.diag([3.0, 2.0, 0.5]), 1.0)
    assert rank == 2
    np.testing.assert_allclose(shrunk, np.diag([2.0, 1.0, 0.0]), atol=1e-14)
    assert spectral_norm(np.diag([3.0, 2.0, 0.5])) == pytest.approx(3.0)


def test_tape_quadratic_gradient():
    x = Tensor([1.0, 2.0])
    with Tape() as tape:
        tape.watch(x)
        loss = sum(mul(x, x))
        (g,) = tape.gradient(loss, [x])
    np.testing.assert_allclose(g, [2.0, 4.0], atol=1e-15)


def test_tape_untouched_source_has_zero_gradient():
    x = Tensor([1.0, 2.0])
    y = Tensor([3.0])
    with Tape() as tape:
        tape.watch(x, y)
        loss = sum(mul(x, 2.0))
        gx, gy = tape.gradient(loss, [x, y])
    np.testing.assert_array_equal(gx, [2.0, 2.0])
    np.testing.assert_array_equal(gy, [0.0])


def test_tape_records_only_tracked_operations():
    x = Tensor([1.0, 2.0])
    with Tape() as tape:
        sum(mul(x, x))
    assert tape.nodes == ()


def test_tape_gradient_needs_scalar_target():
    x = Tensor([1.0, 2.0])
    with Tape() as tape:
        tape.watch(x)
        y = mul(x, x)
        with pytest.raises(ShapeMismatchError):
            tape.gradient(y, [x])


def test_grad_check_quadratic():
    report = grad_check(lambda x: sum(mul(x, x)), [np.array([1.0, 2.0])])
    assert report.passed
    assert report.max_rel_error <= 1e-8


def test_grad_check_constant_function():
    x = Tensor([1.0, -1.0])
    with Tape() as tape:
        tape.watch(x)
        (g,) = tape.gradient(sum(mul(x, 0.0)), [x])
    np.testing.assert_array_equal(g, [0.0, 0.0])
    assert grad_check(lambda t: sum(mul(t, 0.0)), [np.array([1.0, -1.0])]).max_rel_error == 0.0


@pytest.mark.parametrize('seed', range(10))
def test_grad_check_conv_softmax(seed):
    r = np.random.default_rng(seed)
    x = r.normal(size=(1, 2, 6, 6))
    w = r.normal(size=(3, 2, 3, 3))
    proj = r.normal(size=(1, 3, 6, 6))
    report = grad_check(lambda xt, wt: sum(mul(softmax(conv2d(xt, wt), axis=1), proj)), [x, w])
    assert report.passed, report.lines()


@pytest.mark.parametrize('seed', range(3))
def test_grad_check_layout_ops(seed):
    r = np.random.default_rng(seed)
    x = r.normal(size=(1, 4, 3, 3))
    y = r.normal(size=(1, 2, 3, 3))
    coords = r.uniform(-0.7, 3.2, size=(6, 6, 2))
    proj = r.normal(size=(1, 1, 6, 6))

    def f(xt, yt):
        z = concat([narrow(xt, 1, 1, 2), shift2d(yt, 1, -1)], axis=1)
        shuffled = pixel_shuffle(z, 2)
        return sum(mul(bilinear_sample(leaky_relu(mul(shuffled, 2.0)), coords), proj))

    # Keep leaky_relu away from its kink.
    x = np.where(np.abs(x) < 0.05, 0.5, x)
    y = np.where(np.abs(y) < 0.05, 0.5, y)
    assert grad_check(f, [x, y], names=('x', 'y')).passed


def test_grad_check_reports_failure():
    report = grad_check(lambda x: sum(mul(x, x)), [np.array([1.0, 2.0])], tol=-1.0)
    assert not report.passed
    assert report.lines()[0].startswith('input0: max rel. err')


def test_adam_zero_gradient_is_fixed_point():
    params = {'w': Tensor([1.0, -2.0])}
    state = AdamState.init(params)
    for _ in range(3):
        params = adam_step(state, params, {'w': np.zeros(2)}, 1e-3)
    np.testing.assert_array_equal(params['w'].data, [1.0, -2.0])


def test_adam_first_step():
    params = {'w': Tensor([0.0])}
    out = adam_step(AdamState.init(params), params, {'w': np.array([1.0])}, 0.1)
    assert out['w'].data[0] == pytest.approx(-0.1 / (1 + 1e-8), rel=1e-12)


def test_adam_symmetric_parameters_stay_equal():
    params = {'a': Tensor([0.5]), 'b': Tensor([0.5])}
    state = AdamState.init(params)
    for g in (0.3, -1.2, 2.0, 0.01):
        params = adam_step(state, params, {'a': np.array([g]), 'b': np.array([g])}, 0.01)
    assert params['a'].data[0] == params['b'].data[0]


def test_adam_shape_mismatch():
    params = {'w': Tensor([0.0, 1.0])}
    with pytest.raises(ShapeMismatchError):
        adam_step(AdamState.init(params), params, {'w': np.zeros(3)}, 0.1)


@pytest.mark.parametrize('iteration, expected', [(0, 1e-3), (9_999, 1e-3), (10_000, 5e-4), (20_000, 2.5e-4),
                                                 (60_000, 1.25e-4), (99_999, 1.25e-4)])
def test_lr_schedule(iteration, expected):
    assert LrSchedule().lr_at(iteration) == pytest.approx(expected)


def test_lr_schedule_scaled():
    assert LrSchedule.scaled(2000).marks == (200, 400, 1200)
