# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from pathlib import Path
from typing import Optional

import matplotlib.pyplot as plt
import numpy as np
import numpy.typing as npt

from mocopy.helpers import as_image
from mocopy.metrics import RocCurve, roc_auc
from mocopy.types import FloatArray

__all__ = [
    'normalise',
    'roc_figure',
    'save_gray',
]


def normalise(img: npt.ArrayLike) -> FloatArray:
    """
    Min-max stretch to [0, 1]. A constant image maps to zeros.
    """
    arr = as_image(img)
    lo, hi = float(arr.min()), float(arr.max())
    if hi <= lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def save_gray(img: npt.ArrayLike, path: Path) -> None:
    """
    Save a feature map, an attention map or a target image as a stretched grayscale picture.
    """
    plt.imsave(path, normalise(img), cmap='gray', vmin=0.0, vmax=1.0)


def roc_figure(curve: RocCurve, path: Path, label: Optional[str] = None) -> None:
    """
    Plot Pd against Fa and save the figure.

    Args:
        curve: the ROC curve.
        path: where to save; the format follows the suffix.
        label: legend entry, e.g. the detector name. The area under the curve is appended.
    """
    fig, ax = plt.subplots(figsize=(6, 5))
    legend = f'{label or "detector"} (AUC {roc_auc(curve):.3g})'
    ax.plot(curve.fa, curve.pd, marker='o', markersize=3, linewidth=1.5, label=legend)
    ax.set_xlabel('False-alarm rate Fa', fontsize=12)
    ax.set_ylabel('Detection probability Pd', fontsize=12)
    ax.set_ylim(0, 1.05)
    ax.grid(True, which='both', axis='both', alpha=0.3)
    ax.legend(loc='lower right')
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
