"""Foreground mask handling, bounding boxes, and principal-axis alignment.

A mask is a boolean ``(H, W)`` array, True on fish pixels. The orientation of
a mask is the eigenvector of the foreground pixel-coordinate covariance
matrix (normalized by the pixel count ``K``, no Bessel correction) that
belongs to the larger eigenvalue. Rotating that axis onto the horizontal
aligns the fish.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import kernels
from .errors import DegenerateShape, EmptyMask, NoForeground

DEFAULT_ISO_RATIO = 0.05      # eigenvalue gap below this fraction of the major one: no axis
DEFAULT_CROP_MARGIN = 0.02    # crop margin after alignment, fraction of the longer side


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in center/width/height form, pixel units."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box sides must be positive, got w={self.w} h={self.h}")

    @property
    def left(self) -> float:
        return self.cx - self.w / 2.0

    @property
    def right(self) -> float:
        return self.cx + self.w / 2.0

    @property
    def top(self) -> float:
        return self.cy - self.h / 2.0

    @property
    def bottom(self) -> float:
        return self.cy + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class ShapeStats:
    """First and second moments of a foreground pixel cloud."""

    mean: tuple          # (m_x, m_y)
    covariance: np.ndarray  # 2x2, pixel^2
    eigenvalues: tuple   # (major, minor), major >= minor >= 0
    principal_axis: np.ndarray  # unit 2-vector of the major eigenvalue

    @property
    def angle_deg(self) -> float:
        """Orientation of the principal axis in image coords, (-90, 90]."""
        vx, vy = self.principal_axis
        ang = math.degrees(math.atan2(vy, vx))
        if ang <= -90.0:
            ang += 180.0
        elif ang > 90.0:
            ang -= 180.0
        return ang


@dataclass
class AlignedFish:
    """Horizontally aligned, cropped fish image plus its mask."""

    image: np.ndarray    # (H, W, 3) uint8
    mask: np.ndarray     # (H, W) bool
    rotation_deg: float  # rotation that was applied to the content
    head_side: str       # "left" or "right"
    flipped: bool = field(default=False)


def _require_foreground(mask: np.ndarray) -> np.ndarray:
    fg = np.asarray(mask, dtype=bool)
    if not fg.any():
        raise EmptyMask("mask has no foreground pixels")
    return fg


def mask_from_color_fallback(image: np.ndarray, threshold: float = 40.0,
                             border: int = 4, morph_iterations: int = 2) -> np.ndarray:
    """Classical foreground extraction for images on a near-uniform background.

    The background color is modeled as the median of a ``border``-pixel frame
    around the image. Pixels whose Euclidean RGB distance from that color
    exceeds ``threshold`` are foreground candidates; a morphological open and
    close with a 3x3 structuring element removes speckle, and the largest
    connected component is returned.

    Raises NoForeground when nothing passes the threshold or survives cleanup.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    b = max(1, int(border))
    frame = np.concatenate([
        img[:b].reshape(-1, img.shape[2]),
        img[-b:].reshape(-1, img.shape[2]),
        img[:, :b].reshape(-1, img.shape[2]),
        img[:, -b:].reshape(-1, img.shape[2]),
    ])
    bg = np.median(frame, axis=0)
    dist = np.sqrt(((img - bg) ** 2).sum(axis=2))
    raw = dist > threshold
    if not raw.any():
        raise NoForeground("no pixel exceeds the background color threshold")
    structure = np.ones((3, 3), dtype=bool)
    cleaned = ndimage.binary_opening(raw, structure=structure, iterations=morph_iterations)
    cleaned = ndimage.binary_closing(cleaned, structure=structure, iterations=morph_iterations)
    if not cleaned.any():
        raise NoForeground("morphological cleanup removed all candidates")
    labels, n = ndimage.label(cleaned)
    if n == 0:
        raise NoForeground("no connected component found")
    sizes = ndimage.sum_labels(np.ones_like(labels), labels, index=np.arange(1, n + 1))
    return labels == (1 + int(np.argmax(sizes)))


def bbox_from_mask(mask: np.ndarray) -> BoundingBox:
    """Tightest axis-aligned box over the foreground, center/size form."""
    fg = _require_foreground(mask)
    ys, xs = np.nonzero(fg)
    xmin, xmax = int(xs.min()), int(xs.max())
    ymin, ymax = int(ys.min()), int(ys.max())
    return BoundingBox(cx=(xmin + xmax) / 2.0, cy=(ymin + ymax) / 2.0,
                       w=float(xmax - xmin + 1), h=float(ymax - ymin + 1))


def shape_stats(mask: np.ndarray, iso_ratio: float = DEFAULT_ISO_RATIO) -> ShapeStats:
    """Mean, covariance (1/K normalization) and principal axis of a mask."""
    fg = _require_foreground(mask)
    ys, xs = np.nonzero(fg)
    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)
    k = xs.size
    mx = xs.sum() / k
    my = ys.sum() / k
    dx = xs - mx
    dy = ys - my
    cxx = (dx * dx).sum() / k
    cyy = (dy * dy).sum() / k
    cxy = (dx * dy).sum() / k
    cov = np.array([[cxx, cxy], [cxy, cyy]], dtype=np.float64)

    # closed-form symmetric 2x2 eigendecomposition
    half_tr = 0.5 * (cxx + cyy)
    radius = math.hypot(0.5 * (cxx - cyy), cxy)
    lam_major = half_tr + radius
    lam_minor = half_tr - radius
    if lam_major <= 0.0 or (lam_major - lam_minor) < iso_ratio * lam_major:
        raise DegenerateShape(
            f"eigenvalue gap {lam_major - lam_minor:.4g} below "
            f"{iso_ratio:.3g} * {lam_major:.4g}; no stable axis")

    # eigenvector for lam_major; pick the better conditioned expression
    if abs(cxy) > 1e-12:
        if cxx >= cyy:
            v = np.array([lam_major - cyy, cxy], dtype=np.float64)
        else:
            v = np.array([cxy, lam_major - cxx], dtype=np.float64)
    else:
        v = np.array([1.0, 0.0]) if cxx >= cyy else np.array([0.0, 1.0])
    v = v / np.linalg.norm(v)
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    return ShapeStats(mean=(mx, my), covariance=cov,
                      eigenvalues=(lam_major, lam_minor), principal_axis=v)


def detect_head_side(mask: np.ndarray) -> str:
    """Side of the centroid holding the larger foreground area.

    Flatfish heads are wider than their tails, so the heavier half is taken
    as the head side.
    """
    fg = _require_foreground(mask)
    _, xs = np.nonzero(fg)
    mx = xs.mean()
    left = int((xs < mx).sum())
    right = int(xs.size - left)
    return "left" if left >= right else "right"


def align_horizontal(image: np.ndarray, mask: np.ndarray,
                     margin: float = DEFAULT_CROP_MARGIN,
                     head: str = "auto",
                     canonical_head: str | None = None,
                     iso_ratio: float = DEFAULT_ISO_RATIO) -> AlignedFish:
    """Rotate the principal axis onto the horizontal and crop to the fish.

    The image is resampled bilinearly and the mask with nearest neighbor so
    it stays binary; both are rotated about the mask centroid, then cropped
    to the rotated mask's bounding box expanded by ``margin`` of its longer
    side. ``head`` is ``auto`` (area heuristic) or a forced ``left``/``right``.
    When ``canonical_head`` is set the crop is mirrored as needed so the head
    ends up on that side; ``head_side`` always reports where the head is in
    the returned crop.
    """
    fg = _require_foreground(mask)
    img = np.asarray(image)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    if img.shape[:2] != fg.shape:
        raise ValueError("image and mask dimensions differ")

    stats = shape_stats(fg, iso_ratio=iso_ratio)
    phi = -stats.angle_deg
    rad = math.radians(phi)
    cos_p, sin_p = math.cos(rad), math.sin(rad)

    h, w = fg.shape
    side = int(math.ceil(math.hypot(w, h))) + 4
    c_out = (side - 1) / 2.0
    cx_in, cy_in = stats.mean

    rot_mask = kernels.rotate_mask_nearest(
        fg.astype(np.uint8), cos_p, sin_p, cx_in, cy_in, c_out, c_out, side, side)
    rot_img = kernels.rotate_image_bilinear(
        img.astype(np.float64), cos_p, sin_p, cx_in, cy_in, c_out, c_out,
        side, side, 0.0)

    rys, rxs = np.nonzero(rot_mask)
    xmin, xmax = int(rxs.min()), int(rxs.max())
    ymin, ymax = int(rys.min()), int(rys.max())
    pad = max(1, int(round(margin * max(xmax - xmin + 1, ymax - ymin + 1))))
    x0 = max(0, xmin - pad)
    x1 = min(side, xmax + 1 + pad)
    y0 = max(0, ymin - pad)
    y1 = min(side, ymax + 1 + pad)

    crop_mask = rot_mask[y0:y1, x0:x1] > 0
    crop_img = np.clip(np.rint(rot_img[y0:y1, x0:x1]), 0, 255).astype(np.uint8)

    if head == "auto":
        head_side = detect_head_side(crop_mask)
    elif head in ("left", "right"):
        head_side = head
    else:
        raise ValueError(f"head must be auto/left/right, got {head!r}")

    flipped = False
    if canonical_head is not None:
        if canonical_head not in ("left", "right"):
            raise ValueError(f"canonical_head must be left/right, got {canonical_head!r}")
        if head_side != canonical_head:
            crop_mask = crop_mask[:, ::-1].copy()
            crop_img = crop_img[:, ::-1].copy()
            head_side = canonical_head
            flipped = True

    return AlignedFish(image=crop_img, mask=crop_mask, rotation_deg=phi,
                       head_side=head_side, flipped=flipped)
