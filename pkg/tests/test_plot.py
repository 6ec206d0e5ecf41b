# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import numpy as np
from PIL import Image

from mocopy.metrics import MatchCounts, RocCurve
from mocopy.plot import normalise, roc_figure, save_gray


def test_normalise():
    np.testing.assert_allclose(normalise([[2.0, 4.0], [6.0, 10.0]]), [[0.0, 0.25], [0.5, 1.0]])
    np.testing.assert_array_equal(normalise(np.full((3, 3), 7.0)), np.zeros((3, 3)))
    assert normalise(np.ones((1, 1, 2, 5))).shape == (2, 5)


def test_save_gray(tmp_path):
    path = tmp_path / 'map.png'
    save_gray(np.arange(12.0).reshape(3, 4), path)
    with Image.open(path) as img:
        assert img.size == (4, 3)


def test_roc_figure(tmp_path):
    curve = RocCurve(thresholds=(2.0, 1.0, 0.0),
                     counts=(MatchCounts(1, 0, 2, 100), MatchCounts(2, 3, 2, 100), MatchCounts(2, 9, 2, 100)))
    path = tmp_path / 'roc.png'
    roc_figure(curve, path, label='tophat')
    assert path.stat().st_size > 0
