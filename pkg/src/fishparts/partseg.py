"""Three-part segmentation of an aligned fish mask.

The fish outline is split into an upper and a lower boundary by a column
scan. The caudal notches, the concave points where the tail stalk meets the
caudal fin, are found as the deepest local extrema of the smoothed
boundaries inside a tail-side search window. From the notch pair the tail
center and tail length follow, the head ellipse is placed a fixed fraction
of the tail length inward from the snout, a moment-based ellipse covers the
body, and everything else (including the tail circle area) is fins.

Label values used in the per-pixel map: 0 background, 1 head, 2 fins,
3 body.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import EmptyMask, FragmentedMask, GeometryError, NoOverlap, NoTailNotch
from .mask_ops import BoundingBox

LABEL_BACKGROUND = 0
LABEL_HEAD = 1
LABEL_FINS = 2
LABEL_BODY = 3
LABEL_NAMES = {LABEL_HEAD: "head", LABEL_FINS: "fins", LABEL_BODY: "body"}

# Geometry constants; the paper-level method leaves these open, values are
# project defaults and every caller can override them.
HEAD_OFFSET_FRACTION = 0.5    # head center sits this fraction of L_tail in from the snout
TAIL_CIRCLE_FRACTION = 0.75   # tail circle radius as a fraction of the tail thickness
TAIL_SEARCH_FRACTION = 0.4    # notch search window, fraction of the horizontal extent
SMOOTH_WINDOW = 9             # moving-average taps applied to the boundary profiles
EXTREMUM_RADIUS = 5           # strict-extremum neighborhood, columns
MAX_COLUMN_GAP = 2            # tolerated run of empty columns inside the extent


@dataclass(frozen=True)
class BoundaryProfile:
    """Upper (min-y) and lower (max-y) outline per column, smoothed."""

    x0: int                # first foreground column
    upper: np.ndarray      # float y per column, y grows downward
    lower: np.ndarray

    @property
    def x_range(self) -> tuple:
        return (self.x0, self.x0 + len(self.upper) - 1)

    def xs(self) -> np.ndarray:
        return np.arange(self.x0, self.x0 + len(self.upper))


@dataclass
class FeaturePointSet:
    """Tail and head feature points; head fields are filled by the fitter."""

    p_tail_up: tuple
    p_tail_low: tuple
    p_tail_c: tuple
    tail_length: float
    tail_thickness: float
    p_head_c: tuple | None = None
    p_head_up: tuple | None = None
    p_head_low: tuple | None = None


@dataclass(frozen=True)
class EllipseParams:
    """Ellipse with semi_major >= semi_minor; axis_angle orients the major axis."""

    center: tuple
    semi_major: float
    semi_minor: float
    axis_angle_deg: float

    def __post_init__(self):
        if self.semi_minor <= 0 or self.semi_major < self.semi_minor:
            raise GeometryError(
                f"invalid ellipse axes ({self.semi_major}, {self.semi_minor})")

    @staticmethod
    def from_axes(center, semi_x, semi_y, angle_deg=0.0) -> "EllipseParams":
        """Build from axis lengths along/perpendicular to ``angle_deg``."""
        if semi_x <= 0 or semi_y <= 0:
            raise GeometryError(f"non-positive ellipse axis ({semi_x}, {semi_y})")
        if semi_x >= semi_y:
            return EllipseParams(center, semi_x, semi_y, angle_deg)
        return EllipseParams(center, semi_y, semi_x, angle_deg + 90.0)

    def kernel_params(self) -> tuple:
        rad = math.radians(self.axis_angle_deg)
        return (self.center[0], self.center[1], self.semi_major,
                self.semi_minor, math.cos(rad), math.sin(rad))

    def contains(self, x, y):
        cx, cy, a, b, c, s = self.kernel_params()
        du = (x - cx) * c + (y - cy) * s
        dv = -(x - cx) * s + (y - cy) * c
        return (du / a) ** 2 + (dv / b) ** 2 <= 1.0


@dataclass(frozen=True)
class TailCircle:
    center: tuple
    radius: float


@dataclass
class PartRegions:
    head: EllipseParams
    body: EllipseParams
    fin_envelope: EllipseParams
    tail_circle: TailCircle
    feature_points: FeaturePointSet


def _moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; the window shrinks symmetrically at the ends."""
    if window <= 1 or len(values) == 1:
        return values.astype(np.float64)
    r = window // 2
    csum = np.concatenate([[0.0], np.cumsum(values, dtype=np.float64)])
    n = len(values)
    idx = np.arange(n)
    radii = np.minimum(np.minimum(idx, n - 1 - idx), r)
    lo = idx - radii
    hi = idx + radii
    return (csum[hi + 1] - csum[lo]) / (hi - lo + 1)


def extract_boundary(mask: np.ndarray, smooth_window: int = SMOOTH_WINDOW,
                     max_gap: int = MAX_COLUMN_GAP) -> BoundaryProfile:
    """Column-wise outline of the mask, smoothed by a moving average.

    Interior holes do not matter; only the per-column extrema are taken.
    Raises FragmentedMask if more than ``max_gap`` consecutive columns inside
    the horizontal extent hold no foreground.
    """
    fg = np.asarray(mask, dtype=bool)
    if not fg.any():
        raise EmptyMask("mask has no foreground pixels")
    cols = fg.any(axis=0)
    x0 = int(np.argmax(cols))
    x1 = len(cols) - 1 - int(np.argmax(cols[::-1]))
    span = fg[:, x0:x1 + 1]
    filled = span.any(axis=0)
    if not filled.all():
        gaps = np.where(~filled)[0]
        run, longest = 1, 1
        for a, b in zip(gaps[:-1], gaps[1:]):
            run = run + 1 if b == a + 1 else 1
            longest = max(longest, run)
        if longest > max_gap:
            raise FragmentedMask(
                f"{longest} consecutive empty columns inside the extent "
                f"(tolerance {max_gap})")
    h = span.shape[0]
    upper = np.where(filled, np.argmax(span, axis=0),
                     -1).astype(np.float64)
    lower = np.where(filled, h - 1 - np.argmax(span[::-1, :], axis=0),
                     -1).astype(np.float64)
    if not filled.all():
        good = np.where(filled)[0]
        xs = np.arange(span.shape[1])
        upper = np.interp(xs, good, upper[good])
        lower = np.interp(xs, good, lower[good])
    return BoundaryProfile(x0=x0,
                           upper=_moving_average(upper, smooth_window),
                           lower=_moving_average(lower, smooth_window))


def _notch_candidates(profile_y: np.ndarray, want_max: bool, radius: int,
                      in_window: np.ndarray) -> list:
    """Strict local extrema with their depth relative to the +-radius ends."""
    y = profile_y if want_max else -profile_y
    n = len(y)
    out = []
    for i in range(radius, n - radius):
        if not in_window[i]:
            continue
        seg = y[i - radius:i + radius + 1]
        center = seg[radius]
        rest = np.delete(seg, radius)
        if np.all(center > rest):
            depth = center - max(y[i - radius], y[i + radius])
            out.append((i, float(depth)))
    return out


def find_tail_points(profile: BoundaryProfile, head_side: str,
                     search_fraction: float = TAIL_SEARCH_FRACTION,
                     extremum_radius: int = EXTREMUM_RADIUS) -> FeaturePointSet:
    """Locate the caudal notches and derive tail center, length, thickness.

    The upper boundary notch is a strict local maximum of y (the outline dips
    toward the centerline), the lower one a strict local minimum, both within
    ``search_fraction`` of the horizontal extent measured from the tail tip.
    The deepest notch wins; ties go to the candidate nearest the tip.
    """
    if head_side not in ("left", "right"):
        raise ValueError(f"head_side must be left/right, got {head_side!r}")
    n = len(profile.upper)
    extent = n - 1
    if extent < 2 * extremum_radius + 1:
        raise NoTailNotch("profile too short for the extremum neighborhood")
    tip_idx = extent if head_side == "left" else 0
    idx = np.arange(n)
    in_window = np.abs(idx - tip_idx) <= search_fraction * extent

    def pick(cands):
        if not cands:
            raise NoTailNotch("no strict boundary extremum inside the search window")
        best_depth = max(d for _, d in cands)
        tied = [i for i, d in cands if d == best_depth]
        return min(tied, key=lambda i: abs(i - tip_idx))

    i_up = pick(_notch_candidates(profile.upper, True, extremum_radius, in_window))
    i_low = pick(_notch_candidates(profile.lower, False, extremum_radius, in_window))

    p_up = (float(profile.x0 + i_up), float(profile.upper[i_up]))
    p_low = (float(profile.x0 + i_low), float(profile.lower[i_low]))
    p_c = ((p_up[0] + p_low[0]) / 2.0, (p_up[1] + p_low[1]) / 2.0)
    tip_x = float(profile.x0 + tip_idx)
    tail_length = abs(tip_x - p_c[0])
    tail_thickness = math.hypot(p_up[0] - p_low[0], p_up[1] - p_low[1])
    if tail_length <= 0:
        raise NoTailNotch("tail notch coincides with the tail tip")
    return FeaturePointSet(p_tail_up=p_up, p_tail_low=p_low, p_tail_c=p_c,
                           tail_length=tail_length, tail_thickness=tail_thickness)


def fit_part_regions(mask: np.ndarray, fps: FeaturePointSet,
                     profile: str = "flatfish",
                     head_offset: float = HEAD_OFFSET_FRACTION,
                     tail_circle_fraction: float = TAIL_CIRCLE_FRACTION) -> PartRegions:
    """Fit the head ellipse, body ellipse, fin envelope and tail circle.

    Head ellipse: centered ``head_offset * L_tail`` in from the snout, its
    vertical axis is the raw mask chord at that column and its horizontal
    axis is the tail length. Body ellipse: flatfish profile uses the
    foreground centroid with 2-sigma axes; the fusiform profile spans the
    segment connecting the tail and head center points. Both are clipped to
    stay inside the fin envelope, which spans head chord to tail center
    horizontally and the full mask height vertically.
    """
    if profile not in ("flatfish", "fusiform"):
        raise ValueError(f"profile must be flatfish/fusiform, got {profile!r}")
    fg = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(fg)
    if xs.size == 0:
        raise EmptyMask("mask has no foreground pixels")
    xmin, xmax = int(xs.min()), int(xs.max())
    ymin, ymax = int(ys.min()), int(ys.max())

    head_left = fps.p_tail_c[0] > (xmin + xmax) / 2.0
    snout_x = xmin if head_left else xmax
    x_hc = snout_x + head_offset * fps.tail_length * (1.0 if head_left else -1.0)
    col = int(round(x_hc))
    col = min(max(col, xmin), xmax)
    col_ys = np.nonzero(fg[:, col])[0]
    if col_ys.size == 0:
        raise GeometryError(f"no foreground in the head chord column x={col}")
    chord_top = float(col_ys.min())
    chord_bot = float(col_ys.max())
    chord = chord_bot - chord_top
    if chord <= 0 or fps.tail_length <= 0:
        raise GeometryError("head chord or tail length is non-positive")
    p_head_up = (x_hc, chord_top)
    p_head_low = (x_hc, chord_bot)
    p_head_c = (x_hc, (chord_top + chord_bot) / 2.0)
    head = EllipseParams.from_axes(p_head_c, fps.tail_length / 2.0, chord / 2.0)

    fin_cx = (x_hc + fps.p_tail_c[0]) / 2.0
    fin_sx = abs(fps.p_tail_c[0] - x_hc) / 2.0
    fin_cy = (ymin + ymax) / 2.0
    fin_sy = (ymax - ymin) / 2.0
    if fin_sx <= 0 or fin_sy <= 0:
        raise GeometryError("fin envelope collapsed to a degenerate span")
    fin = EllipseParams.from_axes((fin_cx, fin_cy), fin_sx, fin_sy)

    mx = xs.mean()
    my = ys.mean()
    sx = xs.std()
    sy = ys.std()
    if profile == "flatfish":
        semi_x = min(2.0 * sx, fin_sx - abs(mx - fin_cx))
        semi_y = min(2.0 * sy, fin_sy - abs(my - fin_cy))
        if semi_x <= 0 or semi_y <= 0:
            raise GeometryError("body ellipse clipped away by the fin envelope")
        body = EllipseParams.from_axes((mx, my), semi_x, semi_y)
    else:
        # fusiform: major axis connects the tail and head center points
        dx = p_head_c[0] - fps.p_tail_c[0]
        dy = p_head_c[1] - fps.p_tail_c[1]
        center = ((p_head_c[0] + fps.p_tail_c[0]) / 2.0,
                  (p_head_c[1] + fps.p_tail_c[1]) / 2.0)
        semi_along = math.hypot(dx, dy) / 2.0
        semi_perp = min(2.0 * sy, fin_sy - abs(center[1] - fin_cy))
        if semi_along <= 0 or semi_perp <= 0:
            raise GeometryError("fusiform body axis is degenerate")
        angle = math.degrees(math.atan2(dy, dx))
        body = EllipseParams.from_axes(center, semi_along, semi_perp, angle)

    circle = TailCircle(center=fps.p_tail_c,
                        radius=tail_circle_fraction * fps.tail_thickness)
    if circle.radius <= 0:
        raise GeometryError("tail circle radius is non-positive")

    done = replace(fps, p_head_c=p_head_c, p_head_up=p_head_up, p_head_low=p_head_low)
    return PartRegions(head=head, body=body, fin_envelope=fin,
                       tail_circle=circle, feature_points=done)


def rasterize_part_labels(mask: np.ndarray, regions: PartRegions) -> np.ndarray:
    """Per-pixel label map; priority head > body > fins partitions the mask.

    The tail circle marks caudal-fin territory; with the priority order
    above, its pixels that are not claimed by the head or body ellipse end
    up in fins along with every other unclaimed foreground pixel, so the
    result is an exact partition of the foreground.
    """
    fg = np.asarray(mask, dtype=bool).astype(np.uint8)
    return kernels.label_partition(fg, regions.head.kernel_params(),
                                   regions.body.kernel_params())


def assign_box_to_part(box: BoundingBox, labels: np.ndarray) -> str:
    """Majority part among labeled pixels inside the box; ties head > fins > body."""
    lab = np.asarray(labels)
    h, w = lab.shape
    x0 = max(int(math.ceil(box.left)), 0)
    x1 = min(int(math.floor(box.right)), w - 1)
    y0 = max(int(math.ceil(box.top)), 0)
    y1 = min(int(math.floor(box.bottom)), h - 1)
    if x0 > x1 or y0 > y1:
        raise NoOverlap("box misses the label map")
    window = lab[y0:y1 + 1, x0:x1 + 1]
    counts = {part: int((window == part).sum())
              for part in (LABEL_HEAD, LABEL_FINS, LABEL_BODY)}
    if sum(counts.values()) == 0:
        raise NoOverlap("box covers background only")
    best = max(counts.values())
    for part in (LABEL_HEAD, LABEL_FINS, LABEL_BODY):
        if counts[part] == best:
            return LABEL_NAMES[part]
    raise AssertionError("unreachable")
