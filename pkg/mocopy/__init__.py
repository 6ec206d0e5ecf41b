# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause
""" # mocopy

This package contains the operators, network, detectors and evaluation metrics used to super-resolve
infrared small-target image sequences and to measure how super-resolution affects detection.

##Content

- Numerics: A small dense tensor library with a gradient tape, convolution, bilinear sampling, Adam and SVD.
- Prior Ops: Central difference convolution, dilated local contrast, residual groups and local spatio-temporal attention.
- Network: The multi-frame super-resolution network, its trainer and checkpoints.
- Data: Synthetic sequences, bicubic degradation and sequence / annotation I/O.
- Detectors: Top-hat, ILCM and IPI small-target detectors and target segmentation.
- Metrics: PSNR / SSIM, local neighborhood statistics, detection gains and ROC.
- Plot: Grayscale dumps of internal features and ROC figures.
- CLI: The `mocopy` command line.
- Types: A collection of variables to use with Python typing
- Decorators: A collection of decorators

"""
__version__ = '0.1.0'
