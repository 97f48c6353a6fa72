"""Hot raster kernels with paired numba and pure-NumPy implementations.

Every kernel exists twice: ``*_np`` is vectorized NumPy, ``*_nb`` is a loop
body compiled with ``@njit``. The public name dispatches to the numba build
unless ``FISHPARTS_NUMBA=0`` selects the NumPy path (see
:mod:`fishparts.backend`). Both paths use the same arithmetic expressions and
accumulation order so results agree to the last bit in practice;
``benchmarks/bench_kernels.py`` times them against each other.

Coordinate convention used throughout the package: arrays are indexed
``[y, x]``, points are ``(x, y)`` tuples, and a pixel with index ``i`` is the
unit cell centered at coordinate ``i`` (continuous extent ``[i-0.5, i+0.5]``).
"""

import math

import numpy as np

from .backend import NUMBA_ENABLED, njit

# ---------------------------------------------------------------------------
# rotation by inverse mapping
#
# Content rotated by angle phi about (cx_in, cy_in) -> (cx_out, cy_out):
# the source point of output pixel (xo, yo) is
#   xi = cx_in + cos(phi) * (xo - cx_out) + sin(phi) * (yo - cy_out)
#   yi = cy_in - sin(phi) * (xo - cx_out) + cos(phi) * (yo - cy_out)
# ---------------------------------------------------------------------------


def _rotate_image_bilinear_np(img, cos_p, sin_p, cx_in, cy_in, cx_out, cy_out,
                              out_h, out_w, fill):
    h, w, nc = img.shape
    ys, xs = np.mgrid[0:out_h, 0:out_w]
    dx = xs - cx_out
    dy = ys - cy_out
    xi = cx_in + cos_p * dx + sin_p * dy
    yi = cy_in - sin_p * dx + cos_p * dy
    x0 = np.floor(xi)
    y0 = np.floor(yi)
    fx = xi - x0
    fy = yi - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    out = np.empty((out_h, out_w, nc), dtype=np.float64)
    weights = ((1.0 - fx) * (1.0 - fy), fx * (1.0 - fy),
               (1.0 - fx) * fy, fx * fy)
    corners = ((x0, y0), (x0 + 1, y0), (x0, y0 + 1), (x0 + 1, y0 + 1))
    for c in range(nc):
        acc = np.zeros((out_h, out_w), dtype=np.float64)
        for (cx, cy), wgt in zip(corners, weights):
            inb = (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h)
            vals = img[np.clip(cy, 0, h - 1), np.clip(cx, 0, w - 1), c]
            acc += wgt * np.where(inb, vals, fill)
        out[:, :, c] = acc
    return out


@njit(cache=True)
def _rotate_image_bilinear_nb(img, cos_p, sin_p, cx_in, cy_in, cx_out, cy_out,
                              out_h, out_w, fill):
    h, w, nc = img.shape
    out = np.empty((out_h, out_w, nc), dtype=np.float64)
    for yo in range(out_h):
        dy = yo - cy_out
        for xo in range(out_w):
            dx = xo - cx_out
            xi = cx_in + cos_p * dx + sin_p * dy
            yi = cy_in - sin_p * dx + cos_p * dy
            x0 = math.floor(xi)
            y0 = math.floor(yi)
            fx = xi - x0
            fy = yi - y0
            for c in range(nc):
                acc = 0.0
                for k in range(4):
                    cx = x0 + (k & 1)
                    cy = y0 + (k >> 1)
                    if k == 0:
                        wgt = (1.0 - fx) * (1.0 - fy)
                    elif k == 1:
                        wgt = fx * (1.0 - fy)
                    elif k == 2:
                        wgt = (1.0 - fx) * fy
                    else:
                        wgt = fx * fy
                    if 0 <= cx < w and 0 <= cy < h:
                        acc += wgt * img[cy, cx, c]
                    else:
                        acc += wgt * fill
                out[yo, xo, c] = acc
    return out


def _rotate_mask_nearest_np(mask, cos_p, sin_p, cx_in, cy_in, cx_out, cy_out,
                            out_h, out_w):
    h, w = mask.shape
    ys, xs = np.mgrid[0:out_h, 0:out_w]
    dx = xs - cx_out
    dy = ys - cy_out
    xi = np.floor(cx_in + cos_p * dx + sin_p * dy + 0.5).astype(np.int64)
    yi = np.floor(cy_in - sin_p * dx + cos_p * dy + 0.5).astype(np.int64)
    inb = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
    vals = mask[np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)]
    return np.where(inb, vals, np.uint8(0)).astype(np.uint8)


@njit(cache=True)
def _rotate_mask_nearest_nb(mask, cos_p, sin_p, cx_in, cy_in, cx_out, cy_out,
                            out_h, out_w):
    h, w = mask.shape
    out = np.zeros((out_h, out_w), dtype=np.uint8)
    for yo in range(out_h):
        dy = yo - cy_out
        for xo in range(out_w):
            dx = xo - cx_out
            xi = math.floor(cx_in + cos_p * dx + sin_p * dy + 0.5)
            yi = math.floor(cy_in - sin_p * dx + cos_p * dy + 0.5)
            if 0 <= xi < w and 0 <= yi < h:
                out[yo, xo] = mask[yi, xi]
    return out


# ---------------------------------------------------------------------------
# bilinear resize (half-pixel-center convention, like common image libraries)
# ---------------------------------------------------------------------------


def _resize_bilinear_np(img, out_h, out_w):
    h, w, nc = img.shape
    sx = w / out_w
    sy = h / out_h
    xi = (np.arange(out_w) + 0.5) * sx - 0.5
    yi = (np.arange(out_h) + 0.5) * sy - 0.5
    xi, yi = np.meshgrid(xi, yi)
    x0 = np.floor(xi)
    y0 = np.floor(yi)
    fx = xi - x0
    fy = yi - y0
    x0 = np.clip(x0.astype(np.int64), 0, w - 1)
    y0 = np.clip(y0.astype(np.int64), 0, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    out = np.empty((out_h, out_w, nc), dtype=np.float64)
    for c in range(nc):
        v00 = img[y0, x0, c]
        v10 = img[y0, x1, c]
        v01 = img[y1, x0, c]
        v11 = img[y1, x1, c]
        out[:, :, c] = ((1.0 - fx) * (1.0 - fy) * v00 + fx * (1.0 - fy) * v10
                        + (1.0 - fx) * fy * v01 + fx * fy * v11)
    return out


@njit(cache=True)
def _resize_bilinear_nb(img, out_h, out_w):
    h, w, nc = img.shape
    sx = w / out_w
    sy = h / out_h
    out = np.empty((out_h, out_w, nc), dtype=np.float64)
    for yo in range(out_h):
        yi = (yo + 0.5) * sy - 0.5
        y0 = math.floor(yi)
        fy = yi - y0
        if y0 < 0:
            y0 = 0
        if y0 > h - 1:
            y0 = h - 1
        y1 = y0 + 1
        if y1 > h - 1:
            y1 = h - 1
        for xo in range(out_w):
            xi = (xo + 0.5) * sx - 0.5
            x0 = math.floor(xi)
            fx = xi - x0
            if x0 < 0:
                x0 = 0
            if x0 > w - 1:
                x0 = w - 1
            x1 = x0 + 1
            if x1 > w - 1:
                x1 = w - 1
            for c in range(nc):
                out[yo, xo, c] = ((1.0 - fx) * (1.0 - fy) * img[y0, x0, c]
                                  + fx * (1.0 - fy) * img[y0, x1, c]
                                  + (1.0 - fx) * fy * img[y1, x0, c]
                                  + fx * fy * img[y1, x1, c])
    return out


# ---------------------------------------------------------------------------
# separable convolution, zero padding, horizontal pass then vertical pass
# ---------------------------------------------------------------------------


def _conv1_np(img, k, axis):
    taps = k.shape[0]
    r = taps // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    padded = np.pad(img, pad, mode="constant")
    out = np.zeros_like(img)
    h, w = img.shape
    for i in range(taps):
        if axis == 0:
            out += k[i] * padded[i:i + h, :]
        else:
            out += k[i] * padded[:, i:i + w]
    return out


def _conv2_sep_np(img, k):
    return _conv1_np(_conv1_np(img, k, 1), k, 0)


@njit(cache=True)
def _conv2_sep_nb(img, k):
    h, w = img.shape
    taps = k.shape[0]
    r = taps // 2
    tmp = np.zeros((h, w), dtype=np.float64)
    out = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i in range(taps):
                xx = x + i - r
                if 0 <= xx < w:
                    acc += k[i] * img[y, xx]
            tmp[y, x] = acc
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i in range(taps):
                yy = y + i - r
                if 0 <= yy < h:
                    acc += k[i] * tmp[yy, x]
            out[y, x] = acc
    return out


# ---------------------------------------------------------------------------
# alpha blend over a window
# ---------------------------------------------------------------------------


def _blend_np(base, top, alpha):
    return alpha[:, :, None] * top + (1.0 - alpha)[:, :, None] * base


@njit(cache=True)
def _blend_nb(base, top, alpha):
    h, w, nc = base.shape
    out = np.empty((h, w, nc), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            a = alpha[y, x]
            for c in range(nc):
                out[y, x, c] = a * top[y, x, c] + (1.0 - a) * base[y, x, c]
    return out


# ---------------------------------------------------------------------------
# part labeling: head ellipse beats body ellipse beats fins, background = 0
# labels: 1 = head, 2 = fins, 3 = body
# ---------------------------------------------------------------------------


def _label_partition_np(fg, head, body):
    hx, hy, ha, hb, hc, hs = head
    bx, by, ba, bb, bc, bs = body
    h, w = fg.shape
    ys, xs = np.mgrid[0:h, 0:w]
    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)

    du = (xs - hx) * hc + (ys - hy) * hs
    dv = -(xs - hx) * hs + (ys - hy) * hc
    in_head = (du / ha) ** 2 + (dv / hb) ** 2 <= 1.0

    du = (xs - bx) * bc + (ys - by) * bs
    dv = -(xs - bx) * bs + (ys - by) * bc
    in_body = (du / ba) ** 2 + (dv / bb) ** 2 <= 1.0

    labels = np.zeros((h, w), dtype=np.uint8)
    fgb = fg > 0
    labels[fgb] = 2
    labels[fgb & in_body] = 3
    labels[fgb & in_head] = 1
    return labels


@njit(cache=True)
def _label_partition_nb(fg, head, body):
    hx, hy, ha, hb, hc, hs = head
    bx, by, ba, bb, bc, bs = body
    h, w = fg.shape
    labels = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            if fg[y, x] == 0:
                continue
            du = (x - hx) * hc + (y - hy) * hs
            dv = -(x - hx) * hs + (y - hy) * hc
            if (du / ha) ** 2 + (dv / hb) ** 2 <= 1.0:
                labels[y, x] = 1
                continue
            du = (x - bx) * bc + (y - by) * bs
            dv = -(x - bx) * bs + (y - by) * bc
            if (du / ba) ** 2 + (dv / bb) ** 2 <= 1.0:
                labels[y, x] = 3
            else:
                labels[y, x] = 2
    return labels


# ---------------------------------------------------------------------------
# heatmap accumulation: +1 on every pixel index inside the closed interval
# [x0, x1] x [y0, y1] of each footprint
# ---------------------------------------------------------------------------


def _accumulate_boxes_np(grid, boxes):
    h, w = grid.shape
    for i in range(boxes.shape[0]):
        x0 = max(int(np.ceil(boxes[i, 0])), 0)
        y0 = max(int(np.ceil(boxes[i, 1])), 0)
        x1 = min(int(np.floor(boxes[i, 2])), w - 1)
        y1 = min(int(np.floor(boxes[i, 3])), h - 1)
        if x0 > x1 or y0 > y1:
            continue
        grid[y0:y1 + 1, x0:x1 + 1] += 1.0
    return grid


@njit(cache=True)
def _accumulate_boxes_nb(grid, boxes):
    h, w = grid.shape
    for i in range(boxes.shape[0]):
        x0 = max(math.ceil(boxes[i, 0]), 0)
        y0 = max(math.ceil(boxes[i, 1]), 0)
        x1 = min(math.floor(boxes[i, 2]), w - 1)
        y1 = min(math.floor(boxes[i, 3]), h - 1)
        if x0 > x1 or y0 > y1:
            continue
        for y in range(y0, y1 + 1):
            for x in range(x0, x1 + 1):
                grid[y, x] += 1.0
    return grid


# ---------------------------------------------------------------------------
# dispatch table
# ---------------------------------------------------------------------------

_PAIRS = {
    "rotate_image_bilinear": (_rotate_image_bilinear_np, _rotate_image_bilinear_nb),
    "rotate_mask_nearest": (_rotate_mask_nearest_np, _rotate_mask_nearest_nb),
    "resize_bilinear": (_resize_bilinear_np, _resize_bilinear_nb),
    "conv2_sep": (_conv2_sep_np, _conv2_sep_nb),
    "blend": (_blend_np, _blend_nb),
    "label_partition": (_label_partition_np, _label_partition_nb),
    "accumulate_boxes": (_accumulate_boxes_np, _accumulate_boxes_nb),
}


def implementations():
    """Both implementations of every kernel, keyed by kernel then backend."""
    return {name: {"numpy": np_fn, "numba": nb_fn}
            for name, (np_fn, nb_fn) in _PAIRS.items()}


_idx = 1 if NUMBA_ENABLED else 0
rotate_image_bilinear = _PAIRS["rotate_image_bilinear"][_idx]
rotate_mask_nearest = _PAIRS["rotate_mask_nearest"][_idx]
resize_bilinear = _PAIRS["resize_bilinear"][_idx]
conv2_sep = _PAIRS["conv2_sep"][_idx]
blend = _PAIRS["blend"][_idx]
label_partition = _PAIRS["label_partition"][_idx]
accumulate_boxes = _PAIRS["accumulate_boxes"][_idx]


def gaussian_kernel1d(size: int, sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps on the integer grid centered at 0."""
    if size < 1 or size % 2 == 0:
        raise ValueError("kernel size must be a positive odd integer")
    x = np.arange(size, dtype=np.float64) - size // 2
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_kernel2d(size: int, sigma: float) -> np.ndarray:
    """Normalized 2-D Gaussian kernel; outer product of the 1-D taps."""
    k = gaussian_kernel1d(size, sigma)
    return np.outer(k, k)


def warmup() -> None:
    """Trigger JIT compilation of every kernel on tiny inputs."""
    img = np.zeros((4, 4, 3), dtype=np.float64)
    mask = np.zeros((4, 4), dtype=np.uint8)
    rotate_image_bilinear(img, 1.0, 0.0, 1.5, 1.5, 1.5, 1.5, 4, 4, 0.0)
    rotate_mask_nearest(mask, 1.0, 0.0, 1.5, 1.5, 1.5, 1.5, 4, 4)
    resize_bilinear(img, 3, 3)
    conv2_sep(np.zeros((4, 4)), gaussian_kernel1d(3, 0.5))
    blend(img, img, np.zeros((4, 4)))
    ellipse = (1.5, 1.5, 1.0, 1.0, 1.0, 0.0)
    label_partition(mask, ellipse, ellipse)
    accumulate_boxes(np.zeros((4, 4)), np.zeros((1, 4)))
