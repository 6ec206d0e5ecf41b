# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from typing import Dict, List, MutableMapping, Optional, Tuple

import numpy as np

from mocopy.data import FrameSequence, bicubic_upsample
from mocopy.errors import FrameCountError, ShapeMismatchError
from mocopy.numerics import Params, Tensor, as_tensor
from mocopy.numerics.ops import (add, concat, mse, mul, narrow, pixel_shuffle,
                                 reshape)
from mocopy.prior_ops import (LstaCfg, feature_l2_norm, init_conv,
                              init_lsta, init_residual_group, lsta_apply,
                              lsta_attention, residual_group)
from mocopy.prior_ops.layers import conv
from mocopy.types import FloatArray

from .config import AlignmentMode, MoCoPnetCfg

__all__ = [
    'clip_tensor',
    'forward',
    'init_params',
    'loss',
    'parameter_count',
    'zero_params',
]

_PARALLEL_DILATIONS: Tuple[int, ...] = (1, 3, 5)


def _alignment_modules(cfg: MoCoPnetCfg) -> List[Tuple[str, LstaCfg]]:
    match cfg.alignment:
        case AlignmentMode.CASCADE:
            return [('lsta1', cfg.lsta1), ('lsta2', cfg.lsta2)]
        case AlignmentMode.SINGLE:
            return [('lsta', cfg.lsta2)]
        case AlignmentMode.PARALLEL:
            return [(f'lsta.d{d}', LstaCfg(kern=cfg.lsta2.kern, dila=d, cr=cfg.lsta2.cr)) for d in _PARALLEL_DILATIONS]
        case _:
            return []


def init_params(cfg: MoCoPnetCfg, seed: int = 0) -> Dict[str, Tensor]:
    """
    Seeded fan-in uniform initialisation of every learnable tensor of the network.
    """
    rng = np.random.default_rng(seed)
    c, s, m = cfg.channels, cfg.scale, cfg.branches
    params: Dict[str, Tensor] = {}
    params.update(init_conv(rng, 'feat', 1, c, 3))
    params.update(init_residual_group(rng, cfg.cdrg, 'cdrg'))
    for prefix, lcfg in _alignment_modules(cfg):
        params.update(init_lsta(rng, c, lcfg, prefix))
    params.update(init_conv(rng, 'coarse.reduce', 3 * c, c, 1))
    params.update(init_residual_group(rng, cfg.rg_coarse, 'coarse.rg'))
    params.update(init_conv(rng, 'coarse.out', c, c, 3))
    params.update(init_conv(rng, 'fine.reduce', m * c, c, 1))
    params.update(init_residual_group(rng, cfg.rg_fine, 'fine.rg'))
    params.update(init_conv(rng, 'fine.out', c, c, 3))
    params.update(init_residual_group(rng, cfg.rg_recon, 'recon.rg'))
    params.update(init_conv(rng, 'recon.up', c, c * s * s, 3))
    params.update(init_conv(rng, 'recon.out', c, 1, 3))
    return params


def zero_params(cfg: MoCoPnetCfg) -> Dict[str, Tensor]:
    return {name: Tensor(np.zeros(p.shape)) for name, p in init_params(cfg).items()}


def parameter_count(params: Params) -> int:
    return sum(p.size for p in params.values())


def clip_tensor(seq: FrameSequence) -> Tensor:
    """
    Stack the frames of a sequence into a [1, T, H, W] clip.
    """
    return Tensor(seq.stack()[None])


def _align(ref: Tensor, nbr: Tensor, cfg: MoCoPnetCfg, params: Params,
           internals: Optional[MutableMapping[str, FloatArray]]) -> Tensor:
    modules = _alignment_modules(cfg)
    if not modules:
        return nbr

    def attend(key: Tensor, prefix: str, lcfg: LstaCfg) -> Tensor:
        attn = lsta_attention(ref, key, lcfg, params, prefix)
        if internals is not None:
            internals[f'attention.{prefix}'] = attn.numpy()
        return lsta_apply(key, attn, lcfg)

    if cfg.alignment is AlignmentMode.PARALLEL:
        out = None
        for prefix, lcfg in modules:
            aligned = attend(nbr, prefix, lcfg)
            out = aligned if out is None else add(out, aligned)
        return mul(out, 1.0 / len(modules))

    # Cascade: every module keeps the reference as query and refines the previous output.
    out = nbr
    for prefix, lcfg in modules:
        out = attend(out, prefix, lcfg)
    return out


def forward(clip: Tensor | FrameSequence,
            cfg: MoCoPnetCfg,
            params: Params,
            internals: Optional[MutableMapping[str, FloatArray]] = None) -> Tensor:
    """
    Super-resolve the middle frame of each clip.

    Pipeline: a shared 3 x 3 convolution and the CD-RG extract features from every frame; each
    neighbour is aligned to the reference with the shared LSTA modules; for k = 1 .. (T - 1) / 2 the
    reference and the aligned frames t + k and t - k go through the coarse fusion branch (weights
    shared by all branches); the branch outputs are fused again, reconstructed, upsampled by
    depth-to-space, and added to the bicubic upsampling of the reference frame.

    Args:
        clip: a [B, T, H, W] batch of low-resolution clips in [0, 1], or a sequence of T frames.
        cfg: the network configuration.
        params: the parameters, as produced by init_params.
        internals: when given, receives the L2 norm maps of the reference features and the attention maps.

    Returns:
        The super-resolved reference frames, [B, 1, scale * H, scale * W].

    Raises:
        FrameCountError: the clip does not have cfg.frames frames.
    """
    if isinstance(clip, FrameSequence):
        clip = clip_tensor(clip)
    clip = as_tensor(clip)
    if clip.ndim != 4:
        raise ShapeMismatchError('forward', (-1, cfg.frames, -1, -1), clip.shape)
    b, t, h, w = clip.shape
    if t != cfg.frames:
        raise FrameCountError(cfg.frames, t, 'The network needs an odd number of frames centred on the reference.')
    c, m, center = cfg.channels, cfg.branches, cfg.center

    # Feature extraction, all frames at once in the batch axis: row b * T + i is frame i of clip b.
    x = reshape(clip, (b * t, 1, h, w))
    features = residual_group(conv(x, params, 'feat'), cfg.cdrg, params, 'cdrg')
    per_frame = reshape(features, (b, t * c, h, w))
    frame = [narrow(per_frame, 1, i * c, c) for i in range(t)]
    ref = frame[center]
    if internals is not None:
        internals['features.ref'] = feature_l2_norm(ref)

    # Alignment of all neighbours at once; row block j holds neighbour neighbours[j].
    neighbours = [i for i in range(t) if i != center]
    aligned_all = _align(concat([ref] * len(neighbours), axis=0), concat([frame[i] for i in neighbours], axis=0),
                         cfg, params, internals)
    aligned = {i: narrow(aligned_all, 0, j * b, b) for j, i in enumerate(neighbours)}

    # Coarse fusion, one branch per temporal distance k, batched along the batch axis.
    branches = concat([concat([ref, aligned[center + k], aligned[center - k]], axis=1) for k in range(1, m + 1)],
                      axis=0)
    coarse = conv(branches, params, 'coarse.reduce')
    coarse = conv(residual_group(coarse, cfg.rg_coarse, params, 'coarse.rg'), params, 'coarse.out')

    # Fine fusion.
    fine = concat([narrow(coarse, 0, k * b, b) for k in range(m)], axis=1)
    fine = conv(fine, params, 'fine.reduce')
    fine = conv(residual_group(fine, cfg.rg_fine, params, 'fine.rg'), params, 'fine.out')

    # Reconstruction and sub-pixel upsampling.
    recon = residual_group(fine, cfg.rg_recon, params, 'recon.rg')
    recon = pixel_shuffle(conv(recon, params, 'recon.up'), cfg.scale)
    recon = conv(recon, params, 'recon.out')

    base = bicubic_upsample(clip.data[:, center], cfg.scale).data[:, None].astype(clip.dtype)
    return add(recon, Tensor.wrap(base))


def loss(sr: Tensor, hr: Tensor) -> Tensor:
    """
    Mean squared error between the super-resolved and the ground-truth frames.
    """
    if sr.shape != hr.shape:
        raise ShapeMismatchError('loss', hr.shape, sr.shape)
    return mse(sr, hr)
