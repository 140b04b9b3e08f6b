"""The four image filters that generate additional feature sources.

Each filter maps an image to a new intensity grid of the same size, with
all borders handled by edge replication:

* low-pass Gaussian blur (separable convolution, radius ceil(3 sigma)),
* Canny edge detection (smoothing, Sobel gradients, non-maximum
  suppression, double-threshold hysteresis) giving a binary grid,
* 9x9 sliding-window Shannon entropy of the quantized gray histogram,
  rescaled by log2(levels),
* 3x3 sliding-window population variance, rescaled by the maximum
  attainable variance 0.25 for values in [0, 1].

Filtered grids are re-quantized before co-occurrence analysis, so every
source feeds the feature extractor in the same form as the original.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .dataset import ImageSample, QuantizedImage, quantize
from .validation import as_intensity_grid

SOURCE_ORDER = ("original", "gaussian", "canny", "entropy", "variance")

SOURCE_PREFIX = {
    "original": "orig",
    "gaussian": "gauss",
    "canny": "canny",
    "entropy": "entropy",
    "variance": "var",
}


@dataclass(frozen=True)
class FilterParams:
    """Tunable filter parameters (config keys in parentheses).

    gaussian_sigma       blur strength (gaussian.sigma)
    canny_sigma          pre-smoothing strength (canny.sigma)
    canny_high_percentile  percentile of gradient magnitude used as the
                           strong-edge threshold (canny.high_percentile)
    canny_low_ratio      weak threshold as a fraction of the strong one
                         (canny.low_ratio)
    """

    gaussian_sigma: float = 2.0
    canny_sigma: float = 1.4
    canny_high_percentile: float = 90.0
    canny_low_ratio: float = 0.4

    def __post_init__(self):
        if self.gaussian_sigma <= 0 or self.canny_sigma <= 0:
            raise ValueError("filter sigmas must be positive")
        if not 0 < self.canny_high_percentile <= 100:
            raise ValueError("canny.high_percentile must be in (0, 100]")
        if not 0 < self.canny_low_ratio <= 1:
            raise ValueError("canny.low_ratio must be in (0, 1]")


@dataclass(frozen=True)
class SourceSelection:
    """Which of the five image sources participate in a run.

    The case number encodes the flags as a 5-bit value in the order
    (variance, entropy, canny, gaussian, original), so case 1 is the
    original image alone and case 31 uses all five sources.
    """

    variance: bool = False
    entropy: bool = False
    canny: bool = False
    gaussian: bool = False
    original: bool = False

    def __post_init__(self):
        if not any(self.flags):
            raise ValueError("a source selection must enable at least one source")

    @property
    def flags(self) -> tuple[bool, bool, bool, bool, bool]:
        """Flags in case-encoding order (V, E, C, G, O)."""
        return (self.variance, self.entropy, self.canny, self.gaussian, self.original)

    @property
    def case_number(self) -> int:
        n = 0
        for bit in self.flags:
            n = (n << 1) | int(bit)
        return n

    @classmethod
    def from_case(cls, case: int) -> "SourceSelection":
        if not 1 <= case <= 31:
            raise ValueError(f"case must be in [1, 31], got {case}")
        bits = [(case >> shift) & 1 for shift in (4, 3, 2, 1, 0)]
        return cls(
            variance=bool(bits[0]),
            entropy=bool(bits[1]),
            canny=bool(bits[2]),
            gaussian=bool(bits[3]),
            original=bool(bits[4]),
        )

    @classmethod
    def all_sources(cls) -> "SourceSelection":
        return cls.from_case(31)

    def selected_sources(self) -> list[str]:
        """Selected source tags in fixed output order."""
        return [s for s in SOURCE_ORDER if getattr(self, s)]


def _box_sum(arr: np.ndarray, size: int) -> np.ndarray:
    """Sliding-window sum over a size x size box with edge replication."""
    pad = size // 2
    padded = np.pad(arr, pad, mode="edge")
    c = padded.cumsum(axis=0).cumsum(axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    h, w = arr.shape
    return (
        c[size : size + h, size : size + w]
        - c[size : size + h, :w]
        - c[:h, size : size + w]
        + c[:h, :w]
    )


def gaussian_filter(img, sigma: float = 2.0) -> np.ndarray:
    """Separable Gaussian blur with replicated edges, clamped to [0, 1]."""
    img = as_intensity_grid(img)
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    kernel /= kernel.sum()
    out = ndimage.correlate1d(img, kernel, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="nearest")
    return np.clip(out, 0.0, 1.0)


def _sobel_gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gx = ndimage.sobel(img, axis=1, mode="nearest")
    gy = ndimage.sobel(img, axis=0, mode="nearest")
    return gx, gy


def _nonmax_suppress(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Keep only pixels that are local maxima along the gradient direction.

    The direction is quantized to the four 45-degree sectors.  Ties on a
    two-pixel plateau are broken asymmetrically (>= forward, > backward)
    so a symmetric ridge thins to a single-pixel line.
    """
    h, w = mag.shape
    angle = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    padded = np.pad(mag, 1, mode="constant")

    # (dr, dc) of the forward neighbor along the gradient; rows grow
    # downward, so a 45-degree gradient points down-right
    sector_offsets = {
        0: (0, 1),    # horizontal gradient: compare left/right
        1: (1, 1),    # 45 degrees: compare down-right/up-left
        2: (1, 0),    # vertical gradient: compare up/down
        3: (1, -1),   # 135 degrees: compare down-left/up-right
    }
    sector = np.zeros_like(mag, dtype=np.int64)
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3

    out = np.zeros_like(mag)
    for s, (dr, dc) in sector_offsets.items():
        fwd = padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
        bwd = padded[1 - dr : 1 - dr + h, 1 - dc : 1 - dc + w]
        keep = (sector == s) & (mag > 0) & (mag >= fwd) & (mag > bwd)
        out[keep] = mag[keep]
    return out


def canny_filter(img, params: FilterParams = FilterParams()) -> np.ndarray:
    """Classic Canny edge detection returning a {0, 1} grid.

    The strong threshold is a percentile of the raw gradient magnitude
    and the weak threshold a fixed fraction of it; weak ridge pixels
    survive only if 8-connected to a strong pixel.
    """
    img = as_intensity_grid(img)
    smoothed = gaussian_filter(img, params.canny_sigma)
    gx, gy = _sobel_gradients(smoothed)
    mag = np.hypot(gx, gy)

    high = float(np.percentile(mag, params.canny_high_percentile))
    if high <= 0.0:
        return np.zeros_like(img)
    low = params.canny_low_ratio * high

    nms = _nonmax_suppress(mag, gx, gy)
    weak = nms >= low
    strong = nms >= high
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return np.zeros_like(img)
    keep = np.zeros(n + 1, dtype=bool)
    keep[np.unique(labels[strong])] = True
    keep[0] = False
    return keep[labels].astype(np.float64)


def entropy_filter(q: QuantizedImage, size: int = 9) -> np.ndarray:
    """Sliding-window Shannon entropy of the gray-level histogram.

    Output cells are the entropy in bits of the size x size window
    centered on each pixel (edge replicated), divided by log2(levels)
    so the result lies in [0, 1].
    """
    if size % 2 == 0 or size < 3:
        raise ValueError(f"window size must be odd and >= 3, got {size}")
    data = q.data
    total = float(size * size)
    # Per-level occupancy counts via box sums keep memory flat in levels.
    entropy = np.zeros(data.shape, dtype=np.float64)
    for level in range(q.levels):
        counts = _box_sum((data == level).astype(np.float64), size)
        p = counts / total
        mask = p > 0.0
        entropy[mask] -= p[mask] * np.log2(p[mask])
    return entropy / np.log2(q.levels)


def variance_filter(img, size: int = 3) -> np.ndarray:
    """Sliding-window population variance rescaled by its 0.25 bound."""
    if size % 2 == 0 or size < 3:
        raise ValueError(f"window size must be odd and >= 3, got {size}")
    img = as_intensity_grid(img)
    n = float(size * size)
    # Shifting by the global mean keeps the E[x^2] - E[x]^2 cancellation
    # error relative to local deviations (exact zero on constant input).
    shifted = img - img.mean()
    mean = _box_sum(shifted, size) / n
    mean_sq = _box_sum(shifted * shifted, size) / n
    var = np.maximum(mean_sq - mean * mean, 0.0)
    return np.clip(var / 0.25, 0.0, 1.0)


def apply_filter_bank(
    sample: ImageSample,
    selection: SourceSelection,
    levels: int,
    params: FilterParams = FilterParams(),
    filtered_levels: int | None = None,
) -> list[tuple[str, QuantizedImage]]:
    """Produce the selected quantized image sources in fixed order.

    Every source, filtered or not, is quantized before feature
    extraction; the binary Canny output therefore maps onto
    {0, levels - 1}.  Filtered sources re-quantize to ``levels`` unless
    a different ``filtered_levels`` is requested.
    """
    if filtered_levels is None:
        filtered_levels = levels
    out = []
    for source in selection.selected_sources():
        if source == "original":
            grid, lv = sample.pixels, levels
        elif source == "gaussian":
            grid, lv = gaussian_filter(sample.pixels, params.gaussian_sigma), filtered_levels
        elif source == "canny":
            grid, lv = canny_filter(sample.pixels, params), filtered_levels
        elif source == "entropy":
            grid, lv = entropy_filter(quantize(sample.pixels, levels)), filtered_levels
        else:
            grid, lv = variance_filter(sample.pixels), filtered_levels
        out.append((source, quantize(grid, lv)))
    return out
