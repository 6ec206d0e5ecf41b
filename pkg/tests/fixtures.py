# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import math

import numpy as np
import pytest

from mocopy.data import FrameSequence, SynthPreset, synth_sequence
from mocopy.network import MoCoPnetCfg
from mocopy.prior_ops import Activation


def naive_conv2d(x, w, b, padding, dilation=1):
    """
    Seven nested loops over batch, output channel, output row, output column, input channel and kernel taps.
    """
    n, cin, h, wd = x.shape
    cout, _, k, _ = w.shape
    hout = h + 2 * padding - dilation * (k - 1)
    wout = wd + 2 * padding - dilation * (k - 1)
    out = np.zeros((n, cout, hout, wout))
    for bb in range(n):
        for o in range(cout):
            for y in range(hout):
                for xx in range(wout):
                    acc = 0.0 if b is None else b[o]
                    for c in range(cin):
                        for i in range(k):
                            for j in range(k):
                                yy = y + i * dilation - padding
                                xj = xx + j * dilation - padding
                                if 0 <= yy < h and 0 <= xj < wd:
                                    acc += w[o, c, i, j] * x[bb, c, yy, xj]
                    out[bb, o, y, xx] = acc
    return out


def naive_bilinear(img, y, x):
    """
    The four-point blend at (y, x) of a 2-D image, reading zero outside the grid.
    """
    h, w = img.shape
    y0, x0 = math.floor(y), math.floor(x)
    fy, fx = y - y0, x - x0

    def px(r, c):
        return img[r, c] if 0 <= r < h and 0 <= c < w else 0.0

    return ((1 - fy) * (1 - fx) * px(y0, x0) + (1 - fy) * fx * px(y0, x0 + 1)
            + fy * (1 - fx) * px(y0 + 1, x0) + fy * fx * px(y0 + 1, x0 + 1))


def naive_dlcm(img, d):
    h, w = img.shape

    def px(r, c):
        return img[r, c] if 0 <= r < h and 0 <= c < w else 0.0

    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            s = img[y, x]
            out[y, x] = min((s - px(y - i, x - j)) * (s - px(y + i, x + j))
                            for i, j in ((d, d), (d, 0), (d, -d), (0, d)))
    return out


def naive_ssim(a, b, peak=1.0):
    """
    SSIM from its definition: explicit Gaussian-weighted local moments at every valid window position.
    """
    size, sigma = 11, 1.5
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-(r * r) / (2 * sigma * sigma))
    w = np.outer(g, g)
    w /= w.sum()
    c1, c2 = (0.01 * peak) ** 2, (0.03 * peak) ** 2
    h, wd = a.shape
    values = []
    for y in range(h - size + 1):
        for x in range(wd - size + 1):
            pa = a[y:y + size, x:x + size]
            pb = b[y:y + size, x:x + size]
            ma, mb = (w * pa).sum(), (w * pb).sum()
            va = (w * (pa - ma) ** 2).sum()
            vb = (w * (pb - mb) ** 2).sum()
            cov = (w * (pa - ma) * (pb - mb)).sum()
            values.append(((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma ** 2 + mb ** 2 + c1) * (va + vb + c2)))
    return float(np.mean(values))


def rank_one_image(height, width, contrast=0.0, target=None, base=40.0, ry=1.01, rx=0.99):
    """
    A background u v^T with geometric profiles, so every patch matrix of it has rank one,
    plus an optional single-pixel target of the given contrast at target = (row, col).
    """
    u = base * ry ** np.arange(height)
    v = rx ** np.arange(width)
    img = np.outer(u, v)
    if target is not None:
        img[target] += contrast
    return img


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def impulse_pair() -> FrameSequence:
    return synth_sequence(SynthPreset.IMPULSE_PAIR.spec())


@pytest.fixture
def moving_target() -> FrameSequence:
    return synth_sequence(SynthPreset.MOVING_TARGET.spec(seed=3))


@pytest.fixture
def toy_cfg() -> MoCoPnetCfg:
    return MoCoPnetCfg.toy(frames=5, scale=4, channels=16)


@pytest.fixture
def linear_toy_cfg() -> MoCoPnetCfg:
    return MoCoPnetCfg.toy(frames=3, scale=2, channels=8, activation=Activation.NONE)
