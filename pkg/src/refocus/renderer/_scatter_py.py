"""NumPy fallback for the scatter core.

Instead of looping over pixels, this sweeps over kernel offsets: for each
(dy, dx) inside the largest support, every source pixel's weight at that
offset is gathered from a padded per-kernel table and added into the shifted
accumulators in one vectorized pass. Slower than the compiled loop for big
kernels, but dependency-free.
"""

from __future__ import annotations

import numpy as np


def _weight_table(half_extents, offsets, weights_flat):
    he_max = int(half_extents.max())
    side_max = 2 * he_max + 1
    table = np.zeros((len(half_extents), side_max, side_max))
    for k, he in enumerate(half_extents):
        side = 2 * int(he) + 1
        block = weights_flat[offsets[k] : offsets[k + 1]].reshape(side, side)
        lo, hi = he_max - he, he_max + he + 1
        table[k, lo:hi, lo:hi] = block
    return table, he_max


def _gate(d_src, d_tgt, inv_delta):
    return np.where(d_src >= d_tgt, 1.0, np.clip(1.0 - (d_tgt - d_src) * inv_delta, 0.0, None))


def scatter_accumulate(
    boosted,
    kernel_id,
    half_extents,
    offsets,
    weights_flat,
    disparity,
    occlusion_delta,
    wrap,
):
    height, width = kernel_id.shape
    table, he_max = _weight_table(half_extents, offsets, weights_flat)
    color_acc = np.zeros((height, width, 3))
    weight_acc = np.zeros((height, width))
    inv_delta = 1.0 / occlusion_delta

    for dy in range(-he_max, he_max + 1):
        for dx in range(-he_max, he_max + 1):
            w_map = table[kernel_id, dy + he_max, dx + he_max]
            if not w_map.any():
                continue
            if wrap:
                d_tgt = np.roll(disparity, (-dy, -dx), axis=(0, 1))
                contrib = w_map * _gate(disparity, d_tgt, inv_delta)
                color_acc += np.roll(boosted * contrib[:, :, None], (dy, dx), axis=(0, 1))
                weight_acc += np.roll(contrib, (dy, dx), axis=(0, 1))
            else:
                sy0, sy1 = max(0, -dy), min(height, height - dy)
                sx0, sx1 = max(0, -dx), min(width, width - dx)
                if sy0 >= sy1 or sx0 >= sx1:
                    continue
                ty0, ty1 = sy0 + dy, sy1 + dy
                tx0, tx1 = sx0 + dx, sx1 + dx
                d_src = disparity[sy0:sy1, sx0:sx1]
                d_tgt = disparity[ty0:ty1, tx0:tx1]
                contrib = w_map[sy0:sy1, sx0:sx1] * _gate(d_src, d_tgt, inv_delta)
                color_acc[ty0:ty1, tx0:tx1] += boosted[sy0:sy1, sx0:sx1] * contrib[:, :, None]
                weight_acc[ty0:ty1, tx0:tx1] += contrib
    return color_acc, weight_acc
