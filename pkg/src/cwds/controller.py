"""Integral feedback control of the sparsity weight during reconstruction.

Instead of hand-tuning the penalty weight ``mu``, the solver measures the
wavelet-domain sparsity of each iterate and steers ``mu`` so that the fraction
of significant coefficients settles at a prescribed target ``c_pr`` (estimated
once from any roughly comparable image).  The update is integral control,

    mu <- max(0, mu + beta * (c - c_pr)),

with a gain ``beta`` that shrinks whenever the sparsity error changes sign,
which damps the oscillation around the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .geometry import SparseSystemMatrix, back_project, forward_project
from .recon import (
    NonFiniteIterateError,
    PdfpParams,
    PdfpState,
    objective_from_residual,
    pdfp_step,
)
from .wavelet import WaveletPlan, forward_haar_2d, sparsity_ratio

# The gain never shrinks by more than this factor in one adjustment.
_GAIN_SHRINK_FLOOR = 0.01


@dataclass(frozen=True)
class ControllerConfig:
    """Target sparsity and loop constants.

    ``c_pr`` is the desired fraction of above-threshold Haar coefficients,
    ``kappa`` the significance threshold, ``omega`` the initial-gain scale,
    ``eps_error`` / ``eps_step`` the stopping tolerances on the sparsity error
    and on the relative image change, and ``i_max`` the iteration cap.
    """

    c_pr: float
    kappa: float = 1e-6
    omega: float = 1.0
    eps_error: float = 5e-4
    eps_step: float = 5e-4
    i_max: int = 1500

    def __post_init__(self) -> None:
        if not 0 < self.c_pr <= 1:
            raise ValueError("target sparsity must lie in (0, 1]")
        if not self.kappa > 0:
            raise ValueError("significance threshold must be positive")
        if not self.omega > 0:
            raise ValueError("gain scale must be positive")
        if not (self.eps_error > 0 and self.eps_step > 0):
            raise ValueError("stopping tolerances must be positive")
        if self.i_max < 1:
            raise ValueError("iteration cap must be at least 1")


@dataclass(frozen=True)
class TraceRecord:
    """One completed iteration.

    ``mu`` and ``beta`` are the weight and gain used for the step, ``c`` the
    resulting iterate's sparsity, ``e = c - c_pr`` its distance from the
    target, ``d`` the relative image change, and ``objective`` the penalized
    least-squares value.
    """

    i: int
    mu: float
    beta: float
    c: float
    e: float
    d: float
    objective: float


@dataclass
class IterationTrace:
    """Per-iteration records plus run metadata and the final stop reason."""

    records: list[TraceRecord] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)
    stop_reason: str = ""

    def __len__(self) -> int:
        return len(self.records)


def prior_sparsity_from_image(image: np.ndarray, plan: WaveletPlan, kappa: float) -> float:
    """Sparsity target measured from a reference image (must not be all zero)."""
    arr = np.asarray(image, dtype=np.float64)
    if not np.any(arr):
        raise ValueError("cannot take a sparsity target from an all-zero image")
    return sparsity_ratio(arr, plan, kappa)


def init_mu_from_backprojection(
    sinogram: np.ndarray,
    system: SparseSystemMatrix,
    plan: WaveletPlan,
    c_pr: float,
) -> float:
    """Data-driven starting weight.

    The backprojected data is transformed, the coefficient magnitudes are
    sorted ascending, and the starting weight is the mean of the smallest
    ``round(n^2 * (1 - c_pr))`` of them, i.e. the typical scale of the
    coefficients the target sparsity says should vanish.
    """
    magnitudes = np.abs(forward_haar_2d(back_project(system, sinogram), plan))
    count = int(round(magnitudes.size * (1.0 - c_pr)))
    if count <= 0:
        return 0.0
    return float(np.mean(np.sort(magnitudes)[:count]))


def init_beta(mu0: float, omega: float, kappa: float) -> float:
    """Initial integral gain: ``omega * mu0``, or ``omega * kappa`` if mu0 is 0."""
    if mu0 < 0:
        raise ValueError("starting weight must be non-negative")
    return omega * mu0 if mu0 > 0 else omega * kappa


def update_mu(mu: float, beta: float, c: float, c_pr: float) -> float:
    """Integral update of the weight, clipped at zero."""
    return max(0.0, mu + beta * (c - c_pr))


def tune_beta_on_sign_change(beta: float, e_now: float, e_prev: float) -> float:
    """Shrink the gain by 1 - |e_now - e_prev| when the error flips sign.

    A zero error on either side counts as no sign change, and the shrink
    factor never drops below 0.01, so the gain stays positive and
    non-increasing.
    """
    if e_now == 0.0 or e_prev == 0.0 or (e_now > 0.0) == (e_prev > 0.0):
        return beta
    return beta * max(1.0 - abs(e_now - e_prev), _GAIN_SHRINK_FLOOR)


def stopping_check(e: float, d: float, i: int, config: ControllerConfig) -> bool:
    """True while the loop should continue.

    Runs while the iteration cap is not reached and either tolerance is still
    violated, so termination before the cap means both the sparsity error and
    the relative step are small.
    """
    return i < config.i_max and (abs(e) >= config.eps_error or d >= config.eps_step)


def cwds_run(
    system: SparseSystemMatrix,
    sinogram: np.ndarray,
    plan: WaveletPlan,
    config: ControllerConfig,
    params: PdfpParams | None = None,
    *,
    mu0: float | None = None,
    metadata: dict[str, Any] | None = None,
) -> tuple[np.ndarray, IterationTrace]:
    """Reconstruct with sparsity-controlled regularization.

    Starts from a zero image and dual, initializes ``mu`` from the
    backprojected data unless ``mu0`` is given, and alternates the integral
    weight update with one primal-dual step until both stopping tolerances
    hold or the iteration cap is reached.

    Parameters
    ----------
    system : SparseSystemMatrix
        Must be normalized (unit spectral norm); pair it with the matching
        rescaled sinogram from ``normalize_system``.
    sinogram : array
        Flat measured data, length ``system.rows``.
    plan : WaveletPlan
        Transform whose coefficient sparsity is controlled.
    config : ControllerConfig
        Target sparsity and loop constants.
    params : PdfpParams, optional
        Step sizes; defaults to ``tau=1, lam=0.99`` on ``plan``.

    Returns
    -------
    (image, trace)
        The flat reconstructed image and the per-iteration trace.  The trace's
        ``stop_reason`` is ``"converged"`` when both tolerances were met and
        ``"cap_reached"`` otherwise.
    """
    if not system.normalized:
        raise ValueError("reconstruction expects a normalized system; run normalize_system first")
    sinogram = np.asarray(sinogram, dtype=np.float64)
    if sinogram.size != system.rows:
        raise ValueError(f"sinogram has {sinogram.size} samples, system expects {system.rows}")
    if system.cols != plan.num_coefficients:
        raise ValueError("transform size does not match the system's image size")
    if params is None:
        params = PdfpParams(plan=plan)
    mu = init_mu_from_backprojection(sinogram, system, plan, config.c_pr) if mu0 is None else mu0
    if mu < 0:
        raise ValueError("starting weight must be non-negative")
    beta = init_beta(mu, config.omega, config.kappa)

    trace = IterationTrace(metadata=dict(metadata) if metadata else {})
    trace.metadata.setdefault("mu0", mu)
    state = PdfpState.zeros(plan.num_coefficients)
    # The residual of the zero iterate is -m; each loop pass refreshes it for
    # the trace objective and hands it to the next step, so one forward and
    # one adjoint projection per iteration suffice.
    residual = -sinogram
    e_prev = 1.0
    c = 1.0
    d = math.inf
    while stopping_check(c - config.c_pr, d, state.i, config):
        e = c - config.c_pr
        beta = tune_beta_on_sign_change(beta, e, e_prev)
        mu = update_mu(mu, beta, c, config.c_pr)
        previous = state.f
        state = pdfp_step(state, mu, params, system, sinogram, residual=residual)
        if not np.isfinite(state.f).all():
            raise NonFiniteIterateError(
                f"non-finite image after step {state.i}; trace has {len(trace)} records"
            )
        c = sparsity_ratio(state.f, plan, config.kappa)
        norm_new = float(np.linalg.norm(state.f))
        d = float(np.linalg.norm(state.f - previous)) / norm_new if norm_new > 0 else 0.0
        e_prev = e
        residual = forward_project(system, state.f) - sinogram
        trace.records.append(
            TraceRecord(
                i=state.i,
                mu=mu,
                beta=beta,
                c=c,
                e=c - config.c_pr,
                d=d,
                objective=objective_from_residual(residual, state.f, mu, plan),
            )
        )
    converged = abs(c - config.c_pr) < config.eps_error and d < config.eps_step
    trace.stop_reason = "converged" if converged else "cap_reached"
    trace.metadata.setdefault("iterations", state.i)
    return state.f, trace
