# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scatter-accumulate core.

Walks every source pixel once and splats its boosted color over the kernel
support, gated by the soft disparity occlusion factor. This is the O(n r^2)
loop that dominates render time; keep it allocation-free.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def scatter_accumulate(
    const double[:, :, ::1] boosted,
    const int[:, ::1] kernel_id,
    const int[::1] half_extents,
    const long long[::1] offsets,
    const double[::1] weights_flat,
    const double[:, ::1] disparity,
    double occlusion_delta,
    bint wrap,
):
    cdef Py_ssize_t height = boosted.shape[0]
    cdef Py_ssize_t width = boosted.shape[1]

    color_acc = np.zeros((height, width, 3), dtype=np.float64)
    weight_acc = np.zeros((height, width), dtype=np.float64)
    cdef double[:, :, ::1] acc = color_acc
    cdef double[:, ::1] wacc = weight_acc

    cdef Py_ssize_t y, x, dy, dx, ty, tx, he, side
    cdef long long base
    cdef int kid
    cdef double w, gate, wa, d_src, d_tgt, j0, j1, j2
    cdef double inv_delta = 1.0 / occlusion_delta

    for y in range(height):
        for x in range(width):
            kid = kernel_id[y, x]
            he = half_extents[kid]
            base = offsets[kid]
            side = 2 * he + 1
            j0 = boosted[y, x, 0]
            j1 = boosted[y, x, 1]
            j2 = boosted[y, x, 2]
            d_src = disparity[y, x]
            for dy in range(-he, he + 1):
                ty = y + dy
                if wrap:
                    ty = ty % height
                    if ty < 0:
                        ty += height
                elif ty < 0 or ty >= height:
                    continue
                for dx in range(-he, he + 1):
                    w = weights_flat[base + (dy + he) * side + (dx + he)]
                    if w == 0.0:
                        continue
                    tx = x + dx
                    if wrap:
                        tx = tx % width
                        if tx < 0:
                            tx += width
                    elif tx < 0 or tx >= width:
                        continue
                    d_tgt = disparity[ty, tx]
                    if d_src >= d_tgt:
                        gate = 1.0
                    else:
                        gate = 1.0 - (d_tgt - d_src) * inv_delta
                        if gate <= 0.0:
                            continue
                    wa = w * gate
                    acc[ty, tx, 0] += j0 * wa
                    acc[ty, tx, 1] += j1 * wa
                    acc[ty, tx, 2] += j2 * wa
                    wacc[ty, tx] += wa

    return color_acc, weight_acc
