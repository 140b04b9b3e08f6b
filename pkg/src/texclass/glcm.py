"""Gray-level co-occurrence matrices and their marginal distributions.

A GLCM is the normalized joint distribution of gray-level pairs at a
fixed pixel displacement.  Matrices are accumulated symmetrically (both
pair orders are counted), so every GLCM here equals its transpose and
the 0-degree matrix already averages the 0/180-degree senses.

Displacement convention (dr, dc), rows growing downward:

    D0   (0, 1)    horizontal
    D45  (-1, 1)   up-right diagonal
    D90  (-1, 0)   vertical
    D135 (-1, -1)  up-left diagonal

Entropy-type quantities use the natural logarithm with 0 * log 0 = 0.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dataset import QuantizedImage
from .errors import DataError

_SUM_TOL = 1e-9


class Direction(enum.Enum):
    """The four canonical GLCM scan directions."""

    D0 = (0, 1)
    D45 = (-1, 1)
    D90 = (-1, 0)
    D135 = (-1, -1)

    @property
    def displacement(self) -> tuple[int, int]:
        return self.value


@dataclass
class Glcm:
    """Normalized symmetric co-occurrence matrix for one displacement."""

    levels: int
    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=np.float64)
        if self.p.shape != (self.levels, self.levels):
            raise ValueError(
                f"expected a {self.levels}x{self.levels} matrix, got {self.p.shape}"
            )
        if self.p.min() < 0.0:
            raise DataError("co-occurrence probabilities must be non-negative")
        if abs(self.p.sum() - 1.0) > _SUM_TOL:
            raise DataError(f"co-occurrence mass is {self.p.sum():.12f}, expected 1")


@dataclass
class GlcmSet:
    """GLCMs for all four directions plus elementwise aggregates.

    ``avg`` is the elementwise mean of the four matrices (itself a valid
    GLCM); ``rng`` is the elementwise max - min spread and is kept as a
    raw matrix for diagnostics.
    """

    by_direction: dict[Direction, Glcm]
    avg: Glcm
    rng: np.ndarray


@dataclass
class GlcmMarginals:
    """Marginal distributions and entropies of a GLCM.

    p_x / p_y are the row/column marginals; p_sum is indexed by i + j
    (length 2L - 1) and p_diff by |i - j| (length L).  The entropy
    scalars are the standard intermediaries of co-occurrence feature
    definitions:

        HXY  = -sum p ln p
        HXY1 = -sum p[i,j] ln(p_x[i] p_y[j])
        HXY2 = -sum p_x[i] p_y[j] ln(p_x[i] p_y[j])

    with HX, HY the entropies of the marginals themselves.
    """

    levels: int
    p_x: np.ndarray
    p_y: np.ndarray
    p_sum: np.ndarray
    p_diff: np.ndarray
    mean_x: float
    mean_y: float
    std_x: float
    std_y: float
    hx: float
    hy: float
    hxy: float
    hxy1: float
    hxy2: float


def _plogp(p: np.ndarray) -> float:
    """sum p ln p with the 0 * log 0 = 0 convention."""
    mask = p > 0.0
    return float(np.sum(p[mask] * np.log(p[mask])))


def compute_glcm(q: QuantizedImage, direction: Direction, offset: int = 1) -> Glcm:
    """Count co-occurring gray-level pairs at the given displacement.

    Both (i, j) and (j, i) are accumulated for every in-bounds pair, and
    the counts are normalized by their total.
    """
    if offset < 1:
        raise ValueError(f"offset must be >= 1, got {offset}")
    dr, dc = direction.displacement
    dr, dc = dr * offset, dc * offset
    data = q.data
    h, w = data.shape

    r0, r1 = max(0, -dr), min(h, h - dr)
    c0, c1 = max(0, -dc), min(w, w - dc)
    if r0 >= r1 or c0 >= c1:
        raise DataError(
            f"image of shape {data.shape} has no pixel pairs for "
            f"direction {direction.name} at offset {offset}"
        )

    a = data[r0:r1, c0:c1].ravel()
    b = data[r0 + dr : r1 + dr, c0 + dc : c1 + dc].ravel()
    counts = np.bincount(a * q.levels + b, minlength=q.levels * q.levels)
    counts = counts.reshape(q.levels, q.levels)
    counts = counts + counts.T
    return Glcm(levels=q.levels, p=counts / counts.sum())


def glcm_set(q: QuantizedImage, offset: int = 1) -> GlcmSet:
    """Compute all four directional GLCMs plus avg and range matrices."""
    by_direction = {d: compute_glcm(q, d, offset) for d in Direction}
    stack = np.stack([by_direction[d].p for d in Direction])
    avg = Glcm(levels=q.levels, p=stack.mean(axis=0))
    rng = stack.max(axis=0) - stack.min(axis=0)
    return GlcmSet(by_direction=by_direction, avg=avg, rng=rng)


def marginals(g: Glcm) -> GlcmMarginals:
    """Derive the marginal distributions and entropy scalars of a GLCM."""
    p = g.p
    levels = g.levels
    idx = np.arange(levels, dtype=np.float64)

    p_x = p.sum(axis=1)
    p_y = p.sum(axis=0)

    i_plus_j = idx[:, None] + idx[None, :]
    i_minus_j = np.abs(idx[:, None] - idx[None, :]).astype(np.int64)
    p_sum = np.bincount(i_plus_j.astype(np.int64).ravel(), weights=p.ravel(),
                        minlength=2 * levels - 1)
    p_diff = np.bincount(i_minus_j.ravel(), weights=p.ravel(), minlength=levels)

    mean_x = float(idx @ p_x)
    mean_y = float(idx @ p_y)
    std_x = float(np.sqrt(((idx - mean_x) ** 2) @ p_x))
    std_y = float(np.sqrt(((idx - mean_y) ** 2) @ p_y))

    outer = p_x[:, None] * p_y[None, :]
    support = outer > 0.0
    hxy1 = -float(np.sum(p[support] * np.log(outer[support])))

    return GlcmMarginals(
        levels=levels,
        p_x=p_x,
        p_y=p_y,
        p_sum=p_sum,
        p_diff=p_diff,
        mean_x=mean_x,
        mean_y=mean_y,
        std_x=std_x,
        std_y=std_y,
        hx=-_plogp(p_x),
        hy=-_plogp(p_y),
        hxy=-_plogp(p),
        hxy1=hxy1,
        hxy2=-_plogp(outer),
    )
