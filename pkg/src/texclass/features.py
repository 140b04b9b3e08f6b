"""Textural feature extraction: 104 values per image source.

Seventeen scalar features are computed from each co-occurrence matrix:
the thirteen classic ones (angular second moment through the two
information measures of correlation; the maximal correlation coefficient
is deliberately omitted) plus maximum probability, cluster shade,
cluster prominence, and Tsallis entropy.  They are evaluated for the
four directional GLCMs, and the per-feature mean (avg) and max - min
spread (rng) over directions give two more records, removing texture
anisotropy.  Two global estimates, a differential box-counting fractal
dimension and a nearest-neighbor-divergence largest Lyapunov exponent,
complete the block:

    6 records x 17 features + fd + mle = 104 values.

Degenerate inputs are pinned rather than left to float accidents: a
constant image has correlation 0, information measure I 0, and Lyapunov
exponent 0 by definition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.spatial import cKDTree

from .dataset import ImageSample, QuantizedImage
from .errors import DataError, EstimationError
from .filters import SOURCE_PREFIX, FilterParams, SourceSelection, apply_filter_bank
from .glcm import Direction, Glcm, GlcmMarginals, glcm_set, marginals

VARIANT_ORDER = ("d0", "d45", "d90", "d135", "avg", "rng")

_DIRECTION_VARIANT = {
    Direction.D0: "d0",
    Direction.D45: "d45",
    Direction.D90: "d90",
    Direction.D135: "d135",
}


@dataclass(frozen=True)
class GlcmFeatures:
    """The 17 scalar features of one co-occurrence matrix."""

    asm: float
    contrast: float
    correlation: float
    variance: float
    homogeneity: float
    sum_avg: float
    sum_var: float
    sum_entropy: float
    entropy: float
    diff_var: float
    diff_entropy: float
    imc1: float
    imc2: float
    max_prob: float
    cluster_shade: float
    cluster_prom: float
    tsallis: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in FEATURE_NAMES])


FEATURE_NAMES = tuple(f.name for f in fields(GlcmFeatures))


@dataclass(frozen=True)
class FeatureConfig:
    """Extraction parameters shared by every image source.

    ``filtered_levels`` controls the re-quantization of filtered images
    and defaults to ``levels``.
    """

    levels: int = 64
    offset: int = 1
    tsallis_q: float = 1.5
    sato_k: int = 5
    filter_params: FilterParams = FilterParams()
    filtered_levels: int | None = None

    def __post_init__(self):
        if self.tsallis_q == 1.0:
            raise ValueError("tsallis_q = 1 is the Shannon limit; use entropy instead")
        if self.sato_k < 1:
            raise ValueError(f"sato_k must be >= 1, got {self.sato_k}")


def haralick_features(g: Glcm, m: GlcmMarginals) -> tuple[float, ...]:
    """The thirteen classic co-occurrence features, in canonical order.

    All indices are zero-based and entropies use the natural log.  For a
    constant image both marginal deviations vanish; correlation is then
    defined as 0, as is information measure I when max(HX, HY) = 0.
    """
    p = g.p
    idx = np.arange(g.levels, dtype=np.float64)
    k_sum = np.arange(len(m.p_sum), dtype=np.float64)
    k_diff = np.arange(len(m.p_diff), dtype=np.float64)

    asm = float(np.sum(p * p))
    contrast = float((k_diff**2) @ m.p_diff)

    if m.std_x > 0.0 and m.std_y > 0.0:
        cross = float(idx @ p @ idx)
        correlation = (cross - m.mean_x * m.mean_y) / (m.std_x * m.std_y)
    else:
        correlation = 0.0

    variance = float(((idx - m.mean_x) ** 2) @ m.p_x)
    homogeneity = float(np.sum(p / (1.0 + (idx[:, None] - idx[None, :]) ** 2)))

    sum_avg = float(k_sum @ m.p_sum)
    sum_var = float(((k_sum - sum_avg) ** 2) @ m.p_sum)
    sum_entropy = -_plogp(m.p_sum)
    entropy = m.hxy

    diff_mean = float(k_diff @ m.p_diff)
    diff_var = float((k_diff**2) @ m.p_diff) - diff_mean**2
    diff_entropy = -_plogp(m.p_diff)

    denom = max(m.hx, m.hy)
    imc1 = (m.hxy - m.hxy1) / denom if denom > 0.0 else 0.0
    imc2 = math.sqrt(1.0 - math.exp(-2.0 * max(m.hxy2 - m.hxy, 0.0)))

    return (
        asm, contrast, correlation, variance, homogeneity, sum_avg, sum_var,
        sum_entropy, entropy, diff_var, diff_entropy, imc1, imc2,
    )


def extra_glcm_features(
    g: Glcm, m: GlcmMarginals, tsallis_q: float
) -> tuple[float, float, float, float]:
    """Maximum probability, cluster shade/prominence, and Tsallis entropy.

    Tsallis entropy is (1 - sum p^q) / (q - 1); q = 1 is rejected since
    its Shannon limit is already covered by the entropy feature.
    """
    if tsallis_q == 1.0:
        raise ValueError("tsallis_q = 1 is excluded (Shannon limit)")
    p = g.p
    idx = np.arange(g.levels, dtype=np.float64)
    centered = idx[:, None] + idx[None, :] - m.mean_x - m.mean_y

    max_prob = float(p.max())
    cluster_shade = float(np.sum(centered**3 * p))
    cluster_prom = float(np.sum(centered**4 * p))
    tsallis = (1.0 - float(np.sum(p**tsallis_q))) / (tsallis_q - 1.0)
    return max_prob, cluster_shade, cluster_prom, tsallis


def glcm_features(g: Glcm, tsallis_q: float = 1.5) -> GlcmFeatures:
    """All 17 features of a single GLCM."""
    m = marginals(g)
    core = haralick_features(g, m)
    extras = extra_glcm_features(g, m, tsallis_q)
    return GlcmFeatures(*core, *extras)


def _plogp(p: np.ndarray) -> float:
    mask = p > 0.0
    return float(np.sum(p[mask] * np.log(p[mask])))


def fractal_dimension(q: QuantizedImage) -> float:
    """Differential box-counting estimate of the surface fractal dimension.

    The image is treated as a height field over a grid of s x s cells
    for dyadic sizes s in {2, 4, ..., <= min(H, W)/2}.  Each cell needs
    ceil((max - min) / h) + 1 boxes of height h = s * levels / min(H, W);
    the estimate is the least-squares slope of log N(s) against
    log(1/s), clamped into [2, 3].
    """
    data = q.data
    h, w = data.shape
    if h < 16 or w < 16:
        raise DataError(f"image of shape {data.shape} is too small (16x16 minimum)")
    side = min(h, w)

    sizes, counts = [], []
    s = 2
    while s <= side // 2:
        row_idx = np.arange(0, h, s)
        col_idx = np.arange(0, w, s)
        cell_max = np.maximum.reduceat(
            np.maximum.reduceat(data, row_idx, axis=0), col_idx, axis=1
        )
        cell_min = np.minimum.reduceat(
            np.minimum.reduceat(data, row_idx, axis=0), col_idx, axis=1
        )
        box_height = s * q.levels / side
        boxes = np.ceil((cell_max - cell_min) / box_height) + 1.0
        sizes.append(s)
        counts.append(float(boxes.sum()))
        s *= 2

    if len(sizes) < 3:
        raise EstimationError(
            f"only {len(sizes)} box scales available; at least 3 required"
        )
    x = np.log(1.0 / np.asarray(sizes, dtype=np.float64))
    y = np.log(np.asarray(counts))
    slope = float(np.polyfit(x, y, 1)[0])
    return min(max(slope, 2.0), 3.0)


def sato_mle(
    q: QuantizedImage,
    k: int = 5,
    embed_dim: int = 3,
    delay: int = 1,
    max_neighbors: int = 16,
) -> float:
    """Largest Lyapunov exponent of the image read as a scalar series.

    The pixel grid is flattened row-major, delay-embedded, and for each
    embedded point the nearest neighbor outside the temporal exclusion
    window (embed_dim * delay steps) is located.  The exponent is the
    average log-divergence rate (1/k) ln(d(k) / d(0)) over all pairs
    whose initial and final separations are both positive; with no such
    pair (a constant image) the exponent is 0 by definition.
    """
    series = q.data.ravel().astype(np.float64)
    if series.size < 512:
        raise DataError(
            f"series of length {series.size} is too short (512 minimum)"
        )

    span = (embed_dim - 1) * delay
    n_points = series.size - span
    embedded = np.stack([series[i * delay : i * delay + n_points]
                         for i in range(embed_dim)], axis=1)

    n_base = n_points - k
    if n_base < 2:
        return 0.0
    exclusion = embed_dim * delay

    tree = cKDTree(embedded)
    n_query = min(max_neighbors, n_points)
    dists, idxs = tree.query(embedded[:n_base], k=n_query)

    base = np.arange(n_base)[:, None]
    valid = (
        (dists > 0.0)
        & (np.abs(idxs - base) > exclusion)
        & (idxs + k < n_points)
    )
    has_neighbor = valid.any(axis=1)
    if not has_neighbor.any():
        return 0.0
    first = np.argmax(valid, axis=1)
    points = np.nonzero(has_neighbor)[0]
    neighbors = idxs[points, first[points]]
    d0 = dists[points, first[points]]
    dk = np.linalg.norm(embedded[points + k] - embedded[neighbors + k], axis=1)
    diverged = dk > 0.0
    if not diverged.any():
        return 0.0
    return float(np.mean(np.log(dk[diverged] / d0[diverged])) / k)


@dataclass(frozen=True)
class ImageFeatureBlock:
    """The 104 named feature values of one image source."""

    directional: dict[Direction, GlcmFeatures]
    avg: GlcmFeatures
    rng: GlcmFeatures
    fd: float
    mle: float

    def records(self) -> list[tuple[str, GlcmFeatures]]:
        out = [(_DIRECTION_VARIANT[d], self.directional[d]) for d in Direction]
        out.extend([("avg", self.avg), ("rng", self.rng)])
        return out

    def names(self) -> list[str]:
        out = [f"{variant}.{feat}" for variant, _ in self.records()
               for feat in FEATURE_NAMES]
        out.extend(["global.fd", "global.mle"])
        return out

    def values(self) -> np.ndarray:
        arrays = [rec.to_array() for _, rec in self.records()]
        return np.concatenate(arrays + [np.array([self.fd, self.mle])])


def block_feature_names() -> list[str]:
    """The 104 canonical per-source feature names, in extraction order."""
    out = [f"{variant}.{feat}" for variant in VARIANT_ORDER for feat in FEATURE_NAMES]
    out.extend(["global.fd", "global.mle"])
    return out


def feature_block(q: QuantizedImage, config: FeatureConfig = FeatureConfig()) -> ImageFeatureBlock:
    """Extract the full 104-value block from one quantized image.

    The avg and rng records are the per-feature mean and max - min over
    the four directional records (not features of the averaged matrix),
    so they are invariant under image rotation by multiples of 90
    degrees.
    """
    gset = glcm_set(q, offset=config.offset)
    directional = {
        d: glcm_features(gset.by_direction[d], config.tsallis_q) for d in Direction
    }
    stacked = np.stack([directional[d].to_array() for d in Direction])
    avg = GlcmFeatures(*stacked.mean(axis=0))
    rng = GlcmFeatures(*(stacked.max(axis=0) - stacked.min(axis=0)))
    return ImageFeatureBlock(
        directional=directional,
        avg=avg,
        rng=rng,
        fd=fractal_dimension(q),
        mle=sato_mle(q, k=config.sato_k),
    )


@dataclass(frozen=True)
class FeatureVector:
    """Named feature values for one sample: 104 per selected source."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        if len(self.names) != len(self.values):
            raise ValueError("feature names and values differ in length")
        if not np.all(np.isfinite(self.values)):
            bad = self.names[int(np.argmin(np.isfinite(self.values)))]
            raise DataError(f"feature {bad!r} is non-finite")


def vector_feature_names(selection: SourceSelection) -> list[str]:
    """Canonical feature names for a selection, in fixed source order."""
    block = block_feature_names()
    return [
        f"{SOURCE_PREFIX[source]}.{name}"
        for source in selection.selected_sources()
        for name in block
    ]


def feature_vector(
    sample: ImageSample,
    selection: SourceSelection,
    config: FeatureConfig = FeatureConfig(),
) -> FeatureVector:
    """Extract the concatenated feature vector over the selected sources."""
    names, chunks = [], []
    bank = apply_filter_bank(
        sample, selection, config.levels, config.filter_params,
        filtered_levels=config.filtered_levels,
    )
    for source, quantized in bank:
        block = feature_block(quantized, config)
        prefix = SOURCE_PREFIX[source]
        names.extend(f"{prefix}.{n}" for n in block.names())
        chunks.append(block.values())
    return FeatureVector(names=tuple(names), values=np.concatenate(chunks))
