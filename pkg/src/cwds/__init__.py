"""Tomographic reconstruction with feedback-controlled wavelet-domain sparsity."""

from .controller import (
    ControllerConfig,
    IterationTrace,
    TraceRecord,
    cwds_run,
    init_beta,
    init_mu_from_backprojection,
    prior_sparsity_from_image,
    stopping_check,
    tune_beta_on_sign_change,
    update_mu,
)
from .fbp import FilterSpec, fbp_reconstruct, plain_backprojection, ramp_kernel
from .geometry import (
    FanBeamGeometry,
    ImageGrid,
    Ray,
    SparseSystemMatrix,
    SystemMatrixScaleError,
    assemble_system_matrix,
    back_project,
    back_project_matrix_free,
    build_rays,
    forward_project,
    forward_project_matrix_free,
    normalize_system,
    spectral_norm,
    trace_ray,
)
from .io import (
    ConfigError,
    DtypeMismatchError,
    MatrixFormatError,
    RunConfig,
    TruncatedPayloadError,
    UnrecognizedFormatError,
    export_image_pgm,
    parse_config_text,
    read_matrix,
    read_trace_csv,
    relative_error,
    write_matrix,
    write_trace_csv,
)
from .phantom import SHEPP_LOGAN, Ellipse, EllipsePhantom, add_gaussian_noise, shepp_logan, simulate_sinogram
from .recon import (
    NonFiniteIterateError,
    PdfpParams,
    PdfpState,
    grad_data_fidelity,
    objective_value,
    pdfp_step,
    project_nonneg,
    soft_threshold,
)
from .rng import random_uniform, standard_normal
from .wavelet import WaveletPlan, count_above_threshold, forward_haar_2d, inverse_haar_2d, sparsity_ratio

__version__ = "0.1.0"

__all__ = [
    "ControllerConfig",
    "IterationTrace",
    "TraceRecord",
    "cwds_run",
    "init_beta",
    "init_mu_from_backprojection",
    "prior_sparsity_from_image",
    "stopping_check",
    "tune_beta_on_sign_change",
    "update_mu",
    "FilterSpec",
    "fbp_reconstruct",
    "plain_backprojection",
    "ramp_kernel",
    "FanBeamGeometry",
    "ImageGrid",
    "Ray",
    "SparseSystemMatrix",
    "SystemMatrixScaleError",
    "assemble_system_matrix",
    "back_project",
    "back_project_matrix_free",
    "build_rays",
    "forward_project",
    "forward_project_matrix_free",
    "normalize_system",
    "spectral_norm",
    "trace_ray",
    "ConfigError",
    "DtypeMismatchError",
    "MatrixFormatError",
    "RunConfig",
    "TruncatedPayloadError",
    "UnrecognizedFormatError",
    "export_image_pgm",
    "parse_config_text",
    "read_matrix",
    "read_trace_csv",
    "relative_error",
    "write_matrix",
    "write_trace_csv",
    "SHEPP_LOGAN",
    "Ellipse",
    "EllipsePhantom",
    "add_gaussian_noise",
    "shepp_logan",
    "simulate_sinogram",
    "NonFiniteIterateError",
    "PdfpParams",
    "PdfpState",
    "grad_data_fidelity",
    "objective_value",
    "pdfp_step",
    "project_nonneg",
    "soft_threshold",
    "random_uniform",
    "standard_normal",
    "WaveletPlan",
    "count_above_threshold",
    "forward_haar_2d",
    "inverse_haar_2d",
    "sparsity_ratio",
]
