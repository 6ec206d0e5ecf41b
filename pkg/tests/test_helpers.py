# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from fractions import Fraction

import numpy as np
import pytest

from mocopy.helpers import (as_fraction, as_image, natural_key, read_key_values, str_to_bool, threshold_sweep,
                            to_gray_levels, window_starts, write_key_values)


@pytest.mark.parametrize('names, expected',
                         [(['frame_10.png', 'frame_2.png', 'frame_1.png'],
                           ['frame_1.png', 'frame_2.png', 'frame_10.png']),
                          (['B10', 'a2', 'b9'], ['a2', 'b9', 'B10'])])
def test_natural_key(names, expected):
    assert sorted(names, key=natural_key) == expected


@pytest.mark.parametrize('value, expected',
                         [(3, Fraction(3)),
                          (0.25, Fraction(1, 4)),
                          (1 / 3, Fraction(1, 3)),
                          (Fraction(2, 5), Fraction(2, 5))])
def test_as_fraction(value, expected):
    assert as_fraction(value) == expected


@pytest.mark.parametrize('s, expected',
                         [('yes', True), (' TRUE ', True), ('on', True), ('1', True),
                          ('no', False), ('0', False), ('', False), (None, False)])
def test_str_to_bool(s, expected):
    assert str_to_bool(s) == expected


@pytest.mark.parametrize('extent, window, stride, expected',
                         [(20, 10, 5, [0, 5, 10]),
                          (23, 10, 4, [0, 4, 8, 12, 13]),
                          (10, 10, 3, [0])])
def test_window_starts(extent, window, stride, expected):
    assert window_starts(extent, window, stride) == expected


def test_threshold_sweep_descends():
    sweep = threshold_sweep(0.0, 10.0, 5)
    np.testing.assert_allclose(sweep, [10.0, 7.5, 5.0, 2.5, 0.0])


def test_to_gray_levels():
    np.testing.assert_allclose(to_gray_levels([[0.0, 0.5, 1.0]]), [[0.0, 127.5, 255.0]])


def test_as_image():
    assert as_image(np.zeros((1, 1, 4, 5))).shape == (4, 5)
    assert as_image([[1, 2], [3, 4]]).dtype == np.float64
    with pytest.raises(ValueError):
        as_image(np.zeros((2, 1, 4, 5)))
    with pytest.raises(ValueError):
        as_image(np.zeros(5))


def test_key_value_files(tmp_path):
    path = tmp_path / 'settings.cfg'
    write_key_values({'train.iterations': 20, 'net.preset': 'toy'}, path)
    assert read_key_values(path) == {'train.iterations': '20', 'net.preset': 'toy'}
    path.write_text('# comment\n; another\nTrain.LR = 1e-4\n\nnet.channels=8\n')
    assert read_key_values(path) == {'train.lr': '1e-4', 'net.channels': '8'}
