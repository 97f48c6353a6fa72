"""Linear luma/chroma color transform used by the color-statistics transfer.

The transfer matches per-channel moments in a decorrelated space. A linear
transform is used on purpose: a linear bijection commutes with the mean, so
matching channel means in this space matches them in RGB as well, without the
bias a log-space transform would introduce.
"""

import numpy as np

# BT.601 full-range luma/chroma analysis matrix.
_RGB_TO_OPP = np.array([
    [0.299, 0.587, 0.114],
    [-0.168736, -0.331264, 0.5],
    [0.5, -0.418688, -0.081312],
], dtype=np.float64)

_OPP_TO_RGB = np.linalg.inv(_RGB_TO_OPP)


def rgb_to_opponent(rgb: np.ndarray) -> np.ndarray:
    """Map float RGB (any shape ending in 3) to the luma/chroma space."""
    return rgb @ _RGB_TO_OPP.T


def opponent_to_rgb(opp: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_to_opponent`."""
    return opp @ _OPP_TO_RGB.T
