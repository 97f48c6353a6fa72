"""Compositing of pre-generated lesion patches onto healthy fish images.

A patch is an image plus a foreground mask of the lesion; the mask
complement is its healthy margin. Placement draws a scale from
[0.8, 1.2] and a position such that the scaled lesion foreground stays
inside the fish foreground. The patch colors are matched to a ring of fish
pixels around the landing spot by per-channel affine moment transfer in a
luma/chroma space, the mask boundary is softened with a normalized 5x5
Gaussian (sigma 0.5), and the result is alpha-blended onto the fish.
Everything is deterministic given (patch, fish, seed).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import kernels
from .colorspace import opponent_to_rgb, rgb_to_opponent
from .errors import EmptyRing, PlacementInfeasible
from .mask_ops import BoundingBox, bbox_from_mask
from .partseg import assign_box_to_part

SCALE_RANGE = (0.8, 1.2)
MAX_RETRIES = 1000
RING_WIDTH = 8                 # dilation band around the footprint, pixels
BLUR_SIZE = 5
BLUR_SIGMA = 0.5
MATTE_THRESHOLD = 0.5          # alpha above this defines the ground-truth box
DEFAULT_CLASS = "disease"      # part class when no label map is available


@dataclass(frozen=True)
class PatchRecord:
    patch_id: str
    image: np.ndarray      # (h, w, 3) uint8
    fg_mask: np.ndarray    # (h, w) bool, lesion foreground

    def __post_init__(self):
        if self.fg_mask.shape != self.image.shape[:2]:
            raise ValueError("patch mask and image dimensions differ")
        if not self.fg_mask.any():
            raise ValueError("patch foreground mask is empty")


@dataclass(frozen=True)
class TargetFish:
    fish_id: str
    image: np.ndarray      # (H, W, 3) uint8
    mask: np.ndarray       # (H, W) bool
    labels: np.ndarray | None = None   # optional part label map

    def __post_init__(self):
        if not self.mask.any():
            raise ValueError("fish mask is empty")


@dataclass(frozen=True)
class AugmentationPlan:
    patch_id: str
    fish_id: str
    anchor: tuple          # (x, y) placement center, pixels
    scale: float
    seed: int


@dataclass
class AugmentedSample:
    image: np.ndarray
    gt_box: BoundingBox
    part_class: str
    plan: AugmentationPlan


def _scaled_size(shape, scale):
    h = max(1, int(round(shape[0] * scale)))
    w = max(1, int(round(shape[1] * scale)))
    return h, w


def _scale_patch_mask(mask: np.ndarray, scale: float) -> np.ndarray:
    h, w = _scaled_size(mask.shape, scale)
    resized = kernels.resize_bilinear(
        mask.astype(np.float64)[:, :, None], h, w)[:, :, 0]
    return resized > 0.5


def _scale_patch_image(image: np.ndarray, scale: float) -> np.ndarray:
    h, w = _scaled_size(image.shape[:2], scale)
    return kernels.resize_bilinear(image.astype(np.float64), h, w)


def _placement_window(mask_shape, anchor):
    """Top-left corner of a patch window centered on ``anchor``."""
    ph, pw = mask_shape
    x0 = anchor[0] - pw // 2
    y0 = anchor[1] - ph // 2
    return x0, y0


def _footprint(fish_shape, scaled_fg, anchor):
    """Scaled lesion foreground placed into a fish-frame boolean array.

    Returns None when any foreground pixel would fall outside the frame.
    """
    fh, fw = fish_shape
    ph, pw = scaled_fg.shape
    x0, y0 = _placement_window(scaled_fg.shape, anchor)
    if x0 < 0 or y0 < 0 or x0 + pw > fw or y0 + ph > fh:
        return None
    placed = np.zeros(fish_shape, dtype=bool)
    placed[y0:y0 + ph, x0:x0 + pw] = scaled_fg
    return placed


def sample_placement(patch: PatchRecord, fish: TargetFish, seed: int,
                     scale_range: tuple = SCALE_RANGE,
                     max_retries: int = MAX_RETRIES) -> AugmentationPlan:
    """Draw a (scale, anchor) pair whose lesion lands inside the fish.

    The scale is uniform on ``scale_range`` and the anchor uniform over the
    fish bounding box; pairs violating the containment constraint are
    rejected and redrawn, up to ``max_retries`` attempts.
    """
    lo, hi = scale_range
    min_fg = _scale_patch_mask(patch.fg_mask, lo).sum()
    if int(fish.mask.sum()) <= int(min_fg):
        raise PlacementInfeasible(
            "fish foreground smaller than the lesion at minimum scale")
    rng = np.random.default_rng(seed)
    ys, xs = np.nonzero(fish.mask)
    bx0, bx1 = int(xs.min()), int(xs.max())
    by0, by1 = int(ys.min()), int(ys.max())
    for _ in range(max_retries):
        scale = float(rng.uniform(lo, hi))
        anchor = (int(rng.integers(bx0, bx1 + 1)),
                  int(rng.integers(by0, by1 + 1)))
        scaled_fg = _scale_patch_mask(patch.fg_mask, scale)
        placed = _footprint(fish.mask.shape, scaled_fg, anchor)
        if placed is None:
            continue
        if np.all(fish.mask[placed]):
            return AugmentationPlan(patch_id=patch.patch_id, fish_id=fish.fish_id,
                                    anchor=anchor, scale=scale, seed=seed)
    raise PlacementInfeasible(f"no valid placement in {max_retries} retries")


def harmonize_colors(patch: PatchRecord, fish: TargetFish,
                     plan: AugmentationPlan,
                     ring_width: int = RING_WIDTH) -> np.ndarray:
    """Affine per-channel moment transfer toward the surrounding fish ring.

    Statistics are taken over the scaled lesion foreground and over a
    ``ring_width``-pixel dilation band around the landing footprint clipped
    to the fish foreground, both in the luma/chroma space. Channels with
    (near) zero variance receive a pure mean shift. The map is applied to
    the whole patch so the healthy margin follows along; output is float64
    RGB clamped to [0, 255] at the scaled size.
    """
    scaled_img = _scale_patch_image(patch.image, plan.scale)
    scaled_fg = _scale_patch_mask(patch.fg_mask, plan.scale)
    placed = _footprint(fish.mask.shape, scaled_fg, plan.anchor)
    if placed is None:
        raise ValueError("plan places the lesion outside the fish frame")
    ring = ndimage.binary_dilation(placed, iterations=ring_width) & ~placed & fish.mask
    if not ring.any():
        raise EmptyRing("no fish pixels around the placement footprint")

    patch_opp = rgb_to_opponent(scaled_img)
    fg_stats = patch_opp[scaled_fg]
    ring_stats = rgb_to_opponent(fish.image[ring].astype(np.float64))
    mu_p = fg_stats.mean(axis=0)
    sd_p = fg_stats.std(axis=0)
    mu_r = ring_stats.mean(axis=0)
    sd_r = ring_stats.std(axis=0)

    out = np.empty_like(patch_opp)
    for c in range(3):
        if sd_p[c] < 1e-6:
            out[:, :, c] = patch_opp[:, :, c] - mu_p[c] + mu_r[c]
        else:
            out[:, :, c] = (patch_opp[:, :, c] - mu_p[c]) * (sd_r[c] / sd_p[c]) + mu_r[c]
    return np.clip(opponent_to_rgb(out), 0.0, 255.0)


def blur_boundary(fg_mask: np.ndarray) -> np.ndarray:
    """Soft matte: the binary mask convolved with the 5x5, sigma 0.5 Gaussian."""
    k = kernels.gaussian_kernel1d(BLUR_SIZE, BLUR_SIGMA)
    return kernels.conv2_sep(np.asarray(fg_mask, dtype=np.float64), k)


def composite(fish: TargetFish, adjusted_patch: np.ndarray, matte: np.ndarray,
              plan: AugmentationPlan) -> AugmentedSample:
    """Alpha-blend the adjusted patch onto the fish and derive the truth box.

    ``adjusted_patch`` is the harmonized patch at the scaled size; ``matte``
    is the blurred placed foreground in fish-frame coordinates. Blending is
    restricted to the patch window, so every pixel with zero alpha (in
    particular everything outside the matte support) is bit-identical to the
    fish image. The ground-truth box is the tight box over alpha > 0.5 and
    the part class comes from the fish label map when one is present.
    """
    ph, pw = adjusted_patch.shape[:2]
    x0, y0 = _placement_window((ph, pw), plan.anchor)
    out = fish.image.copy()
    window_alpha = matte[y0:y0 + ph, x0:x0 + pw]
    base = fish.image[y0:y0 + ph, x0:x0 + pw].astype(np.float64)
    blended = kernels.blend(base, adjusted_patch, window_alpha)
    out[y0:y0 + ph, x0:x0 + pw] = np.clip(np.rint(blended), 0, 255).astype(np.uint8)

    gt_box = bbox_from_mask(matte > MATTE_THRESHOLD)
    if fish.labels is not None:
        part_class = assign_box_to_part(gt_box, fish.labels)
    else:
        part_class = DEFAULT_CLASS
    return AugmentedSample(image=out, gt_box=gt_box, part_class=part_class, plan=plan)


def render_plan(patch: PatchRecord, fish: TargetFish, plan: AugmentationPlan,
                ring_width: int = RING_WIDTH) -> AugmentedSample:
    """Run harmonization, boundary blur and compositing for one plan."""
    adjusted = harmonize_colors(patch, fish, plan, ring_width=ring_width)
    scaled_fg = _scale_patch_mask(patch.fg_mask, plan.scale)
    placed = _footprint(fish.mask.shape, scaled_fg, plan.anchor)
    if placed is None:
        raise ValueError("plan places the lesion outside the fish frame")
    matte = blur_boundary(placed)
    # the matte halo may poke past the patch window; alpha there has no
    # patch data, so it is clipped to the window inside composite()
    return composite(fish, adjusted, matte, plan)


def combination_count(n_patches: int, n_fish: int, n_size_variants: int) -> int:
    """Size of the patch x fish x size-variant combination space."""
    vals = (n_patches, n_fish, n_size_variants)
    for v in vals:
        if int(v) != v or v < 0:
            raise ValueError(f"counts must be non-negative integers, got {vals}")
    return int(n_patches) * int(n_fish) * int(n_size_variants)
