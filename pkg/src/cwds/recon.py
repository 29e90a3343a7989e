"""Primal-dual fixed-point iteration for non-negative wavelet-sparse reconstruction.

The target objective is

    min_{f >= 0}  0.5 * ||A f - m||^2  +  mu * ||W f||_1

with W the orthonormal Haar transform.  One iteration updates the primal
image ``f`` and the wavelet-domain dual ``v`` as

    y      = P(f - tau * grad - lam * W' v)
    v_next = (I - T_mu)(W y + v)
    f_next = P(f - tau * grad - lam * W' v_next)

where ``grad = A'(A f - m)`` is computed once per step, ``P`` clips to the
non-negative orthant, and ``T_mu`` is soft-thresholding at ``mu / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SparseSystemMatrix, back_project, forward_project
from .wavelet import WaveletPlan, forward_haar_2d, inverse_haar_2d


class NonFiniteIterateError(RuntimeError):
    """An iterate picked up NaN or infinity; the run cannot continue."""


def soft_threshold(coeffs: np.ndarray, mu: float) -> np.ndarray:
    """Shrink each entry toward zero by ``mu / 2``, clipping across zero."""
    if mu < 0:
        raise ValueError("threshold weight must be non-negative")
    coeffs = np.asarray(coeffs, dtype=np.float64)
    return np.sign(coeffs) * np.maximum(np.abs(coeffs) - 0.5 * mu, 0.0)


def project_nonneg(image: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the non-negative orthant."""
    return np.maximum(np.asarray(image, dtype=np.float64), 0.0)


def grad_data_fidelity(
    system: SparseSystemMatrix, sinogram: np.ndarray, image: np.ndarray
) -> np.ndarray:
    """Gradient A'(A f - m) of the least-squares data term."""
    return back_project(system, forward_project(system, image) - sinogram)


@dataclass(frozen=True)
class PdfpParams:
    """Step sizes of the fixed-point iteration.

    ``tau`` is the gradient step and ``lam`` the dual step; with a unit-norm
    system matrix any ``tau`` in (0, 2) and ``lam`` in (0, 1) converges, since
    the orthonormal transform contributes a unit Lipschitz factor.
    """

    plan: WaveletPlan
    tau: float = 1.0
    lam: float = 0.99

    def __post_init__(self) -> None:
        if not 0 < self.tau < 2:
            raise ValueError("tau must lie in (0, 2) for a unit-norm system")
        if not 0 < self.lam < 1:
            raise ValueError("lam must lie in (0, 1)")


@dataclass(frozen=True)
class PdfpState:
    """Iterate pair: flat image ``f``, flat wavelet dual ``v``, step counter."""

    f: np.ndarray
    v: np.ndarray
    i: int = 0

    @classmethod
    def zeros(cls, num_pixels: int) -> "PdfpState":
        return cls(np.zeros(num_pixels), np.zeros(num_pixels), 0)


def pdfp_step(
    state: PdfpState,
    mu: float,
    params: PdfpParams,
    system: SparseSystemMatrix,
    sinogram: np.ndarray,
    *,
    residual: np.ndarray | None = None,
) -> PdfpState:
    """One primal-dual update; one adjoint and at most one forward projection.

    A caller that already holds ``A f - m`` for the current iterate (say from
    an objective evaluation) can pass it as ``residual`` to skip the forward
    projection; the result is bit-identical to the self-contained path.
    """
    plan = params.plan
    if state.f.size != system.cols or state.v.size != plan.num_coefficients:
        raise ValueError("iterate size does not match the system and transform")
    if not (np.isfinite(state.f).all() and np.isfinite(state.v).all()):
        raise NonFiniteIterateError(f"non-finite iterate at step {state.i}")
    if residual is None:
        grad = grad_data_fidelity(system, sinogram, state.f)
    else:
        if residual.size != system.rows:
            raise ValueError("residual length does not match the system's row count")
        grad = back_project(system, residual)
    base = state.f - params.tau * grad
    y = project_nonneg(base - params.lam * inverse_haar_2d(state.v, plan))
    shifted = forward_haar_2d(y, plan) + state.v
    v_next = shifted - soft_threshold(shifted, mu)
    f_next = project_nonneg(base - params.lam * inverse_haar_2d(v_next, plan))
    return PdfpState(f_next, v_next, state.i + 1)


def objective_value(
    system: SparseSystemMatrix,
    sinogram: np.ndarray,
    image: np.ndarray,
    mu: float,
    plan: WaveletPlan,
) -> float:
    """0.5 * ||A f - m||^2 + mu * ||W f||_1 at the given image."""
    residual = forward_project(system, image) - np.asarray(sinogram, dtype=np.float64)
    return objective_from_residual(residual, image, mu, plan)


def objective_from_residual(
    residual: np.ndarray, image: np.ndarray, mu: float, plan: WaveletPlan
) -> float:
    """Objective evaluated from a precomputed residual ``A f - m``."""
    penalty = np.abs(forward_haar_2d(image, plan)).sum()
    return 0.5 * float(residual @ residual) + mu * float(penalty)
