"""Fan-beam acquisition geometry and the sparse ray-intersection system matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .rng import random_uniform

# Direction components smaller than this are treated as axis-parallel.
_PARALLEL_EPS = 1e-12


class SystemMatrixScaleError(RuntimeError):
    """Assembling A would exceed the nonzero budget; apply it matrix-free instead."""


@dataclass(frozen=True)
class ImageGrid:
    """Square n x n pixel grid covering [-fov/2, fov/2]^2.

    Images are stored as flat vectors of length n**2 in column-stacked order:
    pixel (i, j), with i the row (y) index and j the column (x) index, lives
    at flat position j * n + i.  ``as_image`` / ``as_vector`` convert between
    the (n, n) array and this layout.  Pixel (i, j) spans the half-open box
    [low + j*h, low + (j+1)*h) x [low + i*h, low + (i+1)*h) with h = fov / n.
    """

    n: int
    fov: float = 2.0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("grid side must be at least one pixel")
        if not self.fov > 0:
            raise ValueError("field of view must be positive")

    @property
    def pixel_size(self) -> float:
        return self.fov / self.n

    @property
    def num_pixels(self) -> int:
        return self.n * self.n

    def pixel_centers(self) -> np.ndarray:
        """Coordinates of pixel centers along one axis, ascending."""
        low = -0.5 * self.fov
        return low + (np.arange(self.n) + 0.5) * self.pixel_size

    def as_vector(self, image: np.ndarray) -> np.ndarray:
        image = np.asarray(image, dtype=np.float64)
        if image.shape != (self.n, self.n):
            raise ValueError(f"expected a {self.n}x{self.n} image, got shape {image.shape}")
        return image.ravel(order="F")

    def as_image(self, vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != self.num_pixels:
            raise ValueError(f"expected {self.num_pixels} pixel values, got {vec.size}")
        return vec.reshape((self.n, self.n), order="F")


@dataclass(frozen=True)
class FanBeamGeometry:
    """Point source and flat detector rotating about the grid origin.

    For view angle ``a`` the source sits at ``source_radius * (cos a, sin a)``
    and the detector midpoint at ``-detector_radius * (cos a, sin a)``; the
    detector extends along the tangential unit vector ``(-sin a, cos a)``.
    One ray is cast from the source through each detector cell center, so the
    sinogram holds ``num_angles * num_detectors`` samples with the detector
    index varying fastest.
    """

    num_angles: int
    num_detectors: int
    source_radius: float
    detector_radius: float
    detector_width: float
    angle_start: float = 0.0
    angle_range: float = 2.0 * math.pi

    def __post_init__(self) -> None:
        if self.num_angles < 1:
            raise ValueError("need at least one view angle")
        if self.num_detectors < 1:
            raise ValueError("need at least one detector cell")
        if not (self.source_radius > 0 and self.detector_radius > 0):
            raise ValueError("source and detector radii must be positive")
        if not self.detector_width > 0:
            raise ValueError("detector width must be positive")
        if not self.angle_range > 0:
            raise ValueError("angular range must be positive")

    @property
    def num_rays(self) -> int:
        return self.num_angles * self.num_detectors

    def angles(self) -> np.ndarray:
        """View angles, equispaced over [angle_start, angle_start + angle_range)."""
        step = self.angle_range / self.num_angles
        return self.angle_start + step * np.arange(self.num_angles)

    def source_position(self, angle: float) -> np.ndarray:
        return self.source_radius * np.array([math.cos(angle), math.sin(angle)])

    def detector_cell_centers(self, angle: float) -> np.ndarray:
        """(num_detectors, 2) array of cell-center positions for one view."""
        e_r = np.array([math.cos(angle), math.sin(angle)])
        e_t = np.array([-math.sin(angle), math.cos(angle)])
        pitch = self.detector_width / self.num_detectors
        offsets = (np.arange(self.num_detectors) - 0.5 * (self.num_detectors - 1)) * pitch
        return -self.detector_radius * e_r + offsets[:, None] * e_t


@dataclass(frozen=True)
class Ray:
    """Half-line with a unit direction vector."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self) -> None:
        norm = float(np.linalg.norm(self.direction))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError("ray direction must be a unit vector")


def build_rays(geom: FanBeamGeometry) -> list[Ray]:
    """All measurement rays; detector index fastest, view angle slowest."""
    rays = []
    for angle in geom.angles():
        source = geom.source_position(angle)
        for cell in geom.detector_cell_centers(angle):
            direction = cell - source
            direction = direction / np.linalg.norm(direction)
            rays.append(Ray(source, direction))
    return rays


def trace_ray(ray: Ray, grid: ImageGrid) -> tuple[np.ndarray, np.ndarray]:
    """Exact intersection lengths of one ray with the pixels it crosses.

    The ray parameter interval inside the image square is split at every
    gridline crossing, and each sub-segment is attributed to the pixel that
    contains its midpoint.  Pixels are half-open boxes, so a segment running
    exactly on a gridline lands in the higher-index pixel and grazing contacts
    contribute nothing.

    Returns
    -------
    (indices, lengths)
        Flat pixel indices (column-stacked layout) and matching intersection
        lengths, ordered along the ray.  Both empty if the ray misses the grid.
    """
    empty = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    low = -0.5 * grid.fov
    high = low + grid.fov
    h = grid.pixel_size
    n = grid.n

    t_enter, t_exit = -math.inf, math.inf
    for axis in range(2):
        d = float(ray.direction[axis])
        o = float(ray.origin[axis])
        if abs(d) <= _PARALLEL_EPS:
            if not (low <= o < high):
                return empty
        else:
            ta = (low - o) / d
            tb = (high - o) / d
            t_enter = max(t_enter, min(ta, tb))
            t_exit = min(t_exit, max(ta, tb))
    if not t_exit > t_enter:
        return empty

    planes = low + h * np.arange(n + 1)
    cuts = [np.array([t_enter, t_exit])]
    for axis in range(2):
        d = float(ray.direction[axis])
        if abs(d) > _PARALLEL_EPS:
            t = (planes - float(ray.origin[axis])) / d
            cuts.append(t[(t > t_enter) & (t < t_exit)])
    breaks = np.unique(np.concatenate(cuts))
    if breaks.size < 2:
        return empty

    lengths = np.diff(breaks)
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    x = ray.origin[0] + mids * ray.direction[0]
    y = ray.origin[1] + mids * ray.direction[1]
    col = np.floor((x - low) / h).astype(np.int64)
    row = np.floor((y - low) / h).astype(np.int64)
    keep = (col >= 0) & (col < n) & (row >= 0) & (row < n) & (lengths > 0)
    return col[keep] * n + row[keep], lengths[keep]


def _require_source_outside(geom: FanBeamGeometry, grid: ImageGrid) -> None:
    if not geom.source_radius > grid.fov * math.sqrt(2.0) / 2.0:
        raise ValueError("source path must stay outside the image square")


@dataclass(frozen=True)
class SparseSystemMatrix:
    """Ray-pixel intersection matrix in CSR form plus operator-norm bookkeeping."""

    matrix: sp.csr_matrix
    norm_estimate: float | None = None
    normalized: bool = False

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]


def assemble_system_matrix(
    geom: FanBeamGeometry,
    grid: ImageGrid,
    *,
    max_nonzeros: int = 200_000_000,
) -> SparseSystemMatrix:
    """Trace every ray and collect the intersection lengths into a CSR matrix.

    Raises
    ------
    SystemMatrixScaleError
        If the predicted nonzero count exceeds ``max_nonzeros``; the
        matrix-free projectors cover that regime.
    """
    _require_source_outside(geom, grid)
    # Each ray crosses at most 2n - 1 pixels, plus slack for boundary splits.
    predicted = geom.num_rays * (2 * grid.n + 4)
    if predicted > max_nonzeros:
        raise SystemMatrixScaleError(
            f"predicted {predicted} nonzeros exceeds the budget of {max_nonzeros}; "
            "use forward_project_matrix_free / back_project_matrix_free"
        )

    index_chunks: list[np.ndarray] = []
    value_chunks: list[np.ndarray] = []
    counts = np.zeros(geom.num_rays + 1, dtype=np.int64)
    for k, ray in enumerate(build_rays(geom)):
        idx, lengths = trace_ray(ray, grid)
        index_chunks.append(idx.astype(np.int32))
        value_chunks.append(lengths)
        counts[k + 1] = idx.size
    indptr = np.cumsum(counts)
    matrix = sp.csr_matrix(
        (np.concatenate(value_chunks), np.concatenate(index_chunks), indptr),
        shape=(geom.num_rays, grid.num_pixels),
    )
    matrix.sum_duplicates()
    return SparseSystemMatrix(matrix=matrix)


def forward_project(system: SparseSystemMatrix, image: np.ndarray) -> np.ndarray:
    """Sinogram A @ f of a flat image vector."""
    image = np.asarray(image, dtype=np.float64)
    if image.size != system.cols:
        raise ValueError(f"image has {image.size} pixels, system expects {system.cols}")
    return system.matrix @ image


def back_project(system: SparseSystemMatrix, sinogram: np.ndarray) -> np.ndarray:
    """Adjoint application A.T @ m of a flat sinogram vector."""
    sinogram = np.asarray(sinogram, dtype=np.float64)
    if sinogram.size != system.rows:
        raise ValueError(f"sinogram has {sinogram.size} samples, system expects {system.rows}")
    return system.matrix.T @ sinogram


def forward_project_matrix_free(
    geom: FanBeamGeometry, grid: ImageGrid, image: np.ndarray
) -> np.ndarray:
    """Sinogram of a flat image computed ray by ray, without assembling A."""
    _require_source_outside(geom, grid)
    image = np.asarray(image, dtype=np.float64)
    if image.size != grid.num_pixels:
        raise ValueError(f"image has {image.size} pixels, grid expects {grid.num_pixels}")
    out = np.zeros(geom.num_rays, dtype=np.float64)
    for k, ray in enumerate(build_rays(geom)):
        idx, lengths = trace_ray(ray, grid)
        out[k] = lengths @ image[idx]
    return out


def back_project_matrix_free(
    geom: FanBeamGeometry, grid: ImageGrid, sinogram: np.ndarray
) -> np.ndarray:
    """Adjoint of the matrix-free forward projector."""
    _require_source_outside(geom, grid)
    sinogram = np.asarray(sinogram, dtype=np.float64)
    if sinogram.size != geom.num_rays:
        raise ValueError(f"sinogram has {sinogram.size} samples, geometry expects {geom.num_rays}")
    out = np.zeros(grid.num_pixels, dtype=np.float64)
    for k, ray in enumerate(build_rays(geom)):
        idx, lengths = trace_ray(ray, grid)
        np.add.at(out, idx, sinogram[k] * lengths)
    return out


def spectral_norm(
    system: SparseSystemMatrix,
    *,
    tol: float = 1e-6,
    max_iterations: int = 500,
    seed: int = 0,
) -> float:
    """Largest singular value of A by power iteration on the normal operator.

    Iterates until two successive estimates agree to ``tol`` relative or the
    iteration cap is hit; the start vector is a deterministic function of
    ``seed``.
    """
    mat = system.matrix
    if mat.nnz == 0 or not np.any(mat.data):
        raise ValueError("spectral norm of an all-zero matrix is not useful here")
    x = random_uniform(mat.shape[1], seed)
    x /= np.linalg.norm(x)
    estimate = 0.0
    for _ in range(max_iterations):
        y = mat @ x
        new_estimate = float(np.linalg.norm(y))
        if new_estimate == 0.0:
            raise ValueError("power iteration start vector lies in the null space")
        z = mat.T @ y
        x = z / np.linalg.norm(z)
        if estimate > 0.0 and abs(new_estimate - estimate) < tol * new_estimate:
            return new_estimate
        estimate = new_estimate
    return estimate


def normalize_system(
    system: SparseSystemMatrix, sinogram: np.ndarray
) -> tuple[SparseSystemMatrix, np.ndarray]:
    """Jointly rescale (A, m) so the scaled matrix has unit spectral norm.

    Uses ``system.norm_estimate`` when present, otherwise runs ``spectral_norm``.
    The minimizer of the data-fidelity-plus-penalty objective is unchanged when
    the penalty weight is rescaled accordingly, so downstream solvers can
    assume a unit-norm operator.
    """
    sinogram = np.asarray(sinogram, dtype=np.float64)
    if sinogram.size != system.rows:
        raise ValueError(f"sinogram has {sinogram.size} samples, system expects {system.rows}")
    sigma = system.norm_estimate if system.norm_estimate is not None else spectral_norm(system)
    if not sigma > 0:
        raise ValueError("spectral norm must be positive to normalize")
    scaled = SparseSystemMatrix(
        matrix=(system.matrix * (1.0 / sigma)).tocsr(),
        norm_estimate=1.0,
        normalized=True,
    )
    return scaled, sinogram / sigma
