"""Orthonormal multi-level 2D Haar transform with a fixed flat coefficient layout.

One analysis level splits an image block into four half-resolution subbands
through pairwise sums and differences scaled by 1/sqrt(2) along each axis, so
the transform is exactly orthonormal.  The flat coefficient vector stores the
deepest approximation block first, then for each level from coarsest to finest
the three detail blocks in the order

    HL (difference along rows, average along columns),
    LH (average along rows, difference along columns),
    HH (difference along both axes),

each block flattened in the same column-stacked order used for images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class WaveletPlan:
    """Transform shape: image side ``n`` and number of decomposition levels."""

    n: int
    levels: int = 3

    def __post_init__(self) -> None:
        if self.levels < 1:
            raise ValueError("need at least one decomposition level")
        if self.n < 2:
            raise ValueError("image side must be at least 2")
        if self.n % (1 << self.levels) != 0:
            raise ValueError(
                f"image side {self.n} is not divisible by 2**levels = {1 << self.levels}"
            )

    @property
    def num_coefficients(self) -> int:
        return self.n * self.n

    def subbands(self) -> list[tuple[str, int, int, int]]:
        """Layout table: (label, level, offset, block side) per stored block.

        Levels count from 1 (finest) to ``levels`` (coarsest); block side is
        the subband's square edge length, ``n >> level``.
        """
        table = []
        side = self.n >> self.levels
        table.append(("approx", self.levels, 0, side))
        offset = side * side
        for level in range(self.levels, 0, -1):
            side = self.n >> level
            for label in ("hl", "lh", "hh"):
                table.append((label, level, offset, side))
                offset += side * side
        return table


def _analysis_step(block: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    lo = (block[0::2, :] + block[1::2, :]) * _INV_SQRT2
    hi = (block[0::2, :] - block[1::2, :]) * _INV_SQRT2
    ll = (lo[:, 0::2] + lo[:, 1::2]) * _INV_SQRT2
    lh = (lo[:, 0::2] - lo[:, 1::2]) * _INV_SQRT2
    hl = (hi[:, 0::2] + hi[:, 1::2]) * _INV_SQRT2
    hh = (hi[:, 0::2] - hi[:, 1::2]) * _INV_SQRT2
    return ll, hl, lh, hh


def _synthesis_step(
    ll: np.ndarray, hl: np.ndarray, lh: np.ndarray, hh: np.ndarray
) -> np.ndarray:
    side = ll.shape[0]
    lo = np.empty((side, 2 * side), dtype=np.float64)
    hi = np.empty((side, 2 * side), dtype=np.float64)
    lo[:, 0::2] = (ll + lh) * _INV_SQRT2
    lo[:, 1::2] = (ll - lh) * _INV_SQRT2
    hi[:, 0::2] = (hl + hh) * _INV_SQRT2
    hi[:, 1::2] = (hl - hh) * _INV_SQRT2
    block = np.empty((2 * side, 2 * side), dtype=np.float64)
    block[0::2, :] = (lo + hi) * _INV_SQRT2
    block[1::2, :] = (lo - hi) * _INV_SQRT2
    return block


def forward_haar_2d(image: np.ndarray, plan: WaveletPlan) -> np.ndarray:
    """Flat coefficient vector of a flat (or (n, n)) image."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.size != plan.num_coefficients:
        raise ValueError(f"expected {plan.num_coefficients} pixels, got {arr.size}")
    current = arr.reshape((plan.n, plan.n), order="F")
    details = []
    for _ in range(plan.levels):
        current, hl, lh, hh = _analysis_step(current)
        details.append((hl, lh, hh))
    parts = [current.ravel(order="F")]
    for hl, lh, hh in reversed(details):
        parts.extend((hl.ravel(order="F"), lh.ravel(order="F"), hh.ravel(order="F")))
    return np.concatenate(parts)


def inverse_haar_2d(coeffs: np.ndarray, plan: WaveletPlan) -> np.ndarray:
    """Flat image vector from a flat coefficient vector (exact inverse)."""
    vec = np.asarray(coeffs, dtype=np.float64)
    if vec.size != plan.num_coefficients:
        raise ValueError(f"expected {plan.num_coefficients} coefficients, got {vec.size}")
    side = plan.n >> plan.levels
    pos = side * side
    current = vec[:pos].reshape((side, side), order="F")
    for level in range(plan.levels, 0, -1):
        side = plan.n >> level
        blocks = []
        for _ in range(3):
            blocks.append(vec[pos : pos + side * side].reshape((side, side), order="F"))
            pos += side * side
        current = _synthesis_step(current, *blocks)
    return current.ravel(order="F")


def count_above_threshold(coeffs: np.ndarray, kappa: float) -> int:
    """Number of coefficients with magnitude strictly greater than ``kappa``."""
    if kappa < 0:
        raise ValueError("threshold must be non-negative")
    return int(np.count_nonzero(np.abs(np.asarray(coeffs)) > kappa))


def sparsity_ratio(image: np.ndarray, plan: WaveletPlan, kappa: float) -> float:
    """Fraction of the image's Haar coefficients with magnitude above ``kappa``."""
    coeffs = forward_haar_2d(image, plan)
    return count_above_threshold(coeffs, kappa) / plan.num_coefficients
