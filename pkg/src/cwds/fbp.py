"""Filtered backprojection for the fan-beam geometry, as a reference method.

The implementation follows the classical flat-detector weighting scheme:
cosine-weight each projection, convolve with the discrete ramp kernel via a
zero-padded FFT, then backproject with inverse-square distance weighting.
Detector samples are rebinned conceptually onto a virtual flat detector
through the rotation center, which keeps the weights in the textbook form.
No non-negativity or other constraint is applied, so the output can dip below
zero; that is deliberate for an unregularized reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import FanBeamGeometry, ImageGrid, SparseSystemMatrix, back_project


@dataclass(frozen=True)
class FilterSpec:
    """Ramp filter settings: ``cutoff`` is the retained fraction of Nyquist."""

    cutoff: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.cutoff <= 1:
            raise ValueError("filter cutoff must lie in (0, 1]")


def _pad_length(num_detectors: int) -> int:
    """Smallest power of two that is at least twice the detector count."""
    return 1 << max(2 * num_detectors - 1, 1).bit_length()


def ramp_kernel(length: int, spacing: float) -> np.ndarray:
    """Discrete ramp (Ram-Lak) kernel samples arranged for circular convolution.

    Index 0 holds the zero-lag tap 1 / (4 spacing^2); odd lags (wrapped to
    negative on the upper half) hold -1 / (pi^2 lag^2 spacing^2); even lags are
    zero.  Using the sampled spatial kernel rather than the ideal ramp in
    frequency keeps the DC response correct for band-limited projections.
    """
    if length < 2:
        raise ValueError("kernel length must be at least 2")
    if not spacing > 0:
        raise ValueError("sample spacing must be positive")
    k = np.arange(length)
    lag = np.where(k <= length // 2, k, k - length)
    kernel = np.zeros(length, dtype=np.float64)
    kernel[0] = 1.0 / (4.0 * spacing**2)
    odd = lag % 2 != 0
    kernel[odd] = -1.0 / (np.pi**2 * lag[odd].astype(np.float64) ** 2 * spacing**2)
    return kernel


def fbp_reconstruct(
    sinogram: np.ndarray,
    geom: FanBeamGeometry,
    grid: ImageGrid,
    filter_spec: FilterSpec = FilterSpec(),
) -> np.ndarray:
    """Filtered backprojection of a flat sinogram onto ``grid``.

    Assumes a full-circle scan (every point is covered twice, hence the final
    factor 1/2).  Returns the flat image vector in the grid's column-stacked
    layout, unclipped.
    """
    sinogram = np.asarray(sinogram, dtype=np.float64)
    if sinogram.size != geom.num_rays:
        raise ValueError(f"sinogram has {sinogram.size} samples, geometry expects {geom.num_rays}")
    views = sinogram.reshape(geom.num_angles, geom.num_detectors)

    source_dist = geom.source_radius
    # Rescale detector coordinates onto the virtual flat detector through the
    # rotation center; the fan geometry then matches the textbook weights.
    shrink = source_dist / (source_dist + geom.detector_radius)
    spacing = (geom.detector_width / geom.num_detectors) * shrink
    s = (np.arange(geom.num_detectors) - 0.5 * (geom.num_detectors - 1)) * spacing

    weighted = views * (source_dist / np.sqrt(source_dist**2 + s**2))[None, :]

    pad = _pad_length(geom.num_detectors)
    response = np.fft.rfft(ramp_kernel(pad, spacing))
    freqs = np.fft.rfftfreq(pad, d=spacing)
    response[freqs > filter_spec.cutoff * 0.5 / spacing] = 0.0
    filtered = np.fft.irfft(np.fft.rfft(weighted, pad, axis=1) * response[None, :], pad, axis=1)
    filtered = filtered[:, : geom.num_detectors] * spacing

    centers = grid.pixel_centers()
    x, y = np.meshgrid(centers, centers)
    accum = np.zeros((grid.n, grid.n), dtype=np.float64)
    for a, angle in enumerate(geom.angles()):
        cos_a = math.cos(angle)
        sin_a = math.sin(angle)
        depth = source_dist - x * cos_a - y * sin_a
        s_hit = source_dist * (-x * sin_a + y * cos_a) / depth
        values = np.interp(s_hit, s, filtered[a], left=0.0, right=0.0)
        accum += values * (source_dist / depth) ** 2
    image = accum * (geom.angle_range / geom.num_angles) / 2.0
    return grid.as_vector(image)


def plain_backprojection(sinogram: np.ndarray, system: SparseSystemMatrix) -> np.ndarray:
    """Unfiltered adjoint applied to the data; delegates to ``back_project``."""
    return back_project(system, sinogram)
