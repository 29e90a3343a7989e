"""File formats, run configuration, and the error metric.

Matrix container
----------------
A matrix file is two ASCII header lines followed by the raw payload:

    CWDS-MAT 1
    <rows> <cols> f64le
    <rows * cols little-endian float64 values, row-major>

The format is versioned by the magic line; ``f64le`` is the only payload type.
Readers reject a wrong magic line, a malformed header, an unknown payload
type, and a payload whose byte length does not match the header exactly, each
with its own error type so callers can map them to distinct exit codes.

Run configuration
-----------------
Config files are flat ``key = value`` lines; ``#`` starts a comment and blank
lines are ignored.  Unknown keys are rejected rather than silently dropped.
All writes in this module go through a temporary file in the target directory
followed by an atomic rename, so readers never observe partial files.
"""

from __future__ import annotations

import math
import os
import tempfile
import warnings
from dataclasses import dataclass, fields
from typing import Any

import numpy as np

from .controller import IterationTrace, TraceRecord
from .geometry import FanBeamGeometry, ImageGrid

MATRIX_MAGIC = "CWDS-MAT 1"


class MatrixFormatError(Exception):
    """Base class for matrix container problems."""


class UnrecognizedFormatError(MatrixFormatError):
    """The magic line or header is not this container format."""


class TruncatedPayloadError(MatrixFormatError):
    """The payload byte count disagrees with the header."""


class DtypeMismatchError(MatrixFormatError):
    """The header announces a payload type this reader does not support."""


class ConfigError(Exception):
    """A run configuration file or override is invalid."""


def _atomic_write_bytes(path: str, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix(path: str, matrix: np.ndarray) -> None:
    """Write a 1D or 2D float array; vectors are stored as single columns."""
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"only 1D or 2D arrays can be stored, got ndim={arr.ndim}")
    header = f"{MATRIX_MAGIC}\n{arr.shape[0]} {arr.shape[1]} f64le\n".encode("ascii")
    payload = np.ascontiguousarray(arr, dtype="<f8").tobytes()
    _atomic_write_bytes(path, header + payload)


def read_matrix(path: str) -> np.ndarray:
    """Read a matrix container; always returns a 2D float64 array."""
    with open(path, "rb") as handle:
        magic = handle.readline()
        if magic != (MATRIX_MAGIC + "\n").encode("ascii"):
            raise UnrecognizedFormatError(f"{path}: not a matrix container (bad magic line)")
        header = handle.readline().decode("ascii", errors="replace").split()
        if len(header) != 3:
            raise UnrecognizedFormatError(f"{path}: malformed header line")
        try:
            rows, cols = int(header[0]), int(header[1])
        except ValueError:
            raise UnrecognizedFormatError(f"{path}: non-numeric shape in header") from None
        if rows < 0 or cols < 0:
            raise UnrecognizedFormatError(f"{path}: negative shape in header")
        if header[2] != "f64le":
            raise DtypeMismatchError(f"{path}: unsupported payload type {header[2]!r}")
        payload = handle.read()
    expected = 8 * rows * cols
    if len(payload) != expected:
        raise TruncatedPayloadError(
            f"{path}: payload holds {len(payload)} bytes, header promises {expected}"
        )
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)


def export_image_pgm(image: np.ndarray, path: str, vmin: float, vmax: float) -> None:
    """Window an image into a 16-bit binary PGM for quick visual checks.

    ``vmin`` maps to 0 and ``vmax`` to 65535, values outside clip.  A
    degenerate window (vmin == vmax) produces a uniform mid-gray file and a
    warning instead of an error.  Row 0 of the written file is the top of the
    image, i.e. the highest y row of the grid convention.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("PGM export expects a 2D image")
    if not np.isfinite(arr).all():
        raise ValueError("PGM export requires finite pixel values")
    if vmax < vmin:
        raise ValueError("window maximum must not be below the minimum")
    if vmax == vmin:
        warnings.warn("degenerate display window, writing uniform mid-gray", stacklevel=2)
        levels = np.full(arr.shape, 32768, dtype=np.uint16)
    else:
        scaled = np.clip((arr - vmin) / (vmax - vmin), 0.0, 1.0)
        levels = np.rint(scaled * 65535.0).astype(np.uint16)
    flipped = levels[::-1, :]
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n65535\n".encode("ascii")
    _atomic_write_bytes(path, header + flipped.astype(">u2").tobytes())


def relative_error(recon: np.ndarray, truth: np.ndarray) -> float:
    """||recon - truth||_2 / ||truth||_2 over flattened arrays."""
    a = np.asarray(recon, dtype=np.float64).ravel()
    b = np.asarray(truth, dtype=np.float64).ravel()
    if a.size != b.size:
        raise ValueError(f"size mismatch: {a.size} vs {b.size}")
    denom = float(np.linalg.norm(b))
    if denom == 0.0:
        raise ValueError("relative error against an all-zero reference is undefined")
    return float(np.linalg.norm(a - b)) / denom


_TRACE_HEADER = "i,mu,beta,C,e,d,objective"


def write_trace_csv(path: str, trace: IterationTrace) -> None:
    """Write an iteration trace with its metadata echoed as ``# key = value`` lines.

    Floats are rendered with ``repr``, which round-trips exactly, so two runs
    of the same configuration produce byte-identical files.
    """
    lines = [f"# {key} = {value}" for key, value in trace.metadata.items()]
    if trace.stop_reason:
        lines.append(f"# stop_reason = {trace.stop_reason}")
    lines.append(_TRACE_HEADER)
    for r in trace.records:
        lines.append(f"{r.i},{r.mu!r},{r.beta!r},{r.c!r},{r.e!r},{r.d!r},{r.objective!r}")
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("ascii"))


def read_trace_csv(path: str) -> IterationTrace:
    """Parse a trace file written by ``write_trace_csv``."""
    trace = IterationTrace()
    with open(path, "r", encoding="ascii") as handle:
        for raw in handle:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                if key.strip() == "stop_reason":
                    trace.stop_reason = value.strip()
                else:
                    trace.metadata[key.strip()] = value.strip()
                continue
            if line == _TRACE_HEADER:
                continue
            cells = line.split(",")
            if len(cells) != 7:
                raise ValueError(f"{path}: malformed trace row {line!r}")
            trace.records.append(
                TraceRecord(
                    i=int(cells[0]),
                    mu=float(cells[1]),
                    beta=float(cells[2]),
                    c=float(cells[3]),
                    e=float(cells[4]),
                    d=float(cells[5]),
                    objective=float(cells[6]),
                )
            )
    return trace


# Config schema: key -> (python type, default).  ``None`` defaults mean the
# value is derived or required by a specific subcommand.
_CONFIG_SCHEMA: dict[str, tuple[type, Any]] = {
    "n": (int, 328),
    "fov": (float, 2.0),
    "num_angles": (int, 120),
    "num_detectors": (int, None),
    "source_radius": (float, None),
    "detector_radius": (float, None),
    "detector_width": (float, None),
    "angle_start": (float, 0.0),
    "angle_range": (float, 2.0 * math.pi),
    "noise": (float, 0.0),
    "noise_ref": (str, "peak"),
    "seed": (int, 0),
    "supersample": (bool, False),
    "C_pr": (float, None),
    "kappa": (float, 1e-6),
    "omega": (float, 1.0),
    "eps1": (float, 5e-4),
    "eps2": (float, 5e-4),
    "imax": (int, 1500),
    "tau": (float, 1.0),
    "lambda": (float, 0.99),
    "levels": (int, 3),
    "fbp_cutoff": (float, 1.0),
    "sinogram_in": (str, None),
    "sinogram_out": (str, None),
    "image_out": (str, None),
    "trace_out": (str, None),
    "prior_image": (str, None),
    "truth_image": (str, None),
}

# Keys whose name is not a valid attribute name get remapped.
_KEY_TO_FIELD = {"lambda": "lam", "C_pr": "c_pr"}
_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}


def _parse_value(key: str, text: str) -> Any:
    kind, _ = _CONFIG_SCHEMA[key]
    text = text.strip()
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"bad value {text!r} for key {key!r}") from None


@dataclass
class RunConfig:
    """Every tunable of the pipeline, with the defaults used throughout.

    Geometry values left unset fall back to proportions of the field of view:
    one detector cell per image column, source and detector rings at twice the
    field of view, and a detector wide enough to cover the inscribed circle.
    """

    n: int = 328
    fov: float = 2.0
    num_angles: int = 120
    num_detectors: int | None = None
    source_radius: float | None = None
    detector_radius: float | None = None
    detector_width: float | None = None
    angle_start: float = 0.0
    angle_range: float = 2.0 * math.pi
    noise: float = 0.0
    noise_ref: str = "peak"
    seed: int = 0
    supersample: bool = False
    c_pr: float | None = None
    kappa: float = 1e-6
    omega: float = 1.0
    eps1: float = 5e-4
    eps2: float = 5e-4
    imax: int = 1500
    tau: float = 1.0
    lam: float = 0.99
    levels: int = 3
    fbp_cutoff: float = 1.0
    sinogram_in: str | None = None
    sinogram_out: str | None = None
    image_out: str | None = None
    trace_out: str | None = None
    prior_image: str | None = None
    truth_image: str | None = None

    @classmethod
    def from_sources(cls, path: str | None = None, overrides: dict[str, Any] | None = None) -> "RunConfig":
        """Defaults, then file values, then explicit overrides (highest priority)."""
        config = cls()
        if path is not None:
            config._apply(parse_config_text(_read_text(path), source=path))
        if overrides:
            unknown = set(overrides) - set(_CONFIG_SCHEMA)
            if unknown:
                raise ConfigError(f"unknown config keys: {sorted(unknown)}")
            config._apply(dict(overrides))
        return config

    def _apply(self, values: dict[str, Any]) -> None:
        for key, value in values.items():
            setattr(self, _KEY_TO_FIELD.get(key, key), value)

    def effective(self) -> dict[str, Any]:
        """Resolved key/value mapping (file keys, derived geometry filled in)."""
        out: dict[str, Any] = {}
        for f in fields(self):
            out[_FIELD_TO_KEY.get(f.name, f.name)] = getattr(self, f.name)
        out["num_detectors"] = self.resolved_num_detectors
        out["source_radius"] = self.resolved_source_radius
        out["detector_radius"] = self.resolved_detector_radius
        out["detector_width"] = self.resolved_detector_width
        return out

    @property
    def resolved_num_detectors(self) -> int:
        return self.num_detectors if self.num_detectors is not None else self.n

    @property
    def resolved_source_radius(self) -> float:
        return self.source_radius if self.source_radius is not None else 2.0 * self.fov

    @property
    def resolved_detector_radius(self) -> float:
        return self.detector_radius if self.detector_radius is not None else 2.0 * self.fov

    @property
    def resolved_detector_width(self) -> float:
        return self.detector_width if self.detector_width is not None else 2.1 * self.fov

    def build_grid(self) -> ImageGrid:
        return ImageGrid(self.n, self.fov)

    def build_geometry(self) -> FanBeamGeometry:
        return FanBeamGeometry(
            num_angles=self.num_angles,
            num_detectors=self.resolved_num_detectors,
            source_radius=self.resolved_source_radius,
            detector_radius=self.resolved_detector_radius,
            detector_width=self.resolved_detector_width,
            angle_start=self.angle_start,
            angle_range=self.angle_range,
        )


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def parse_config_text(text: str, *, source: str = "<config>") -> dict[str, Any]:
    """Parse ``key = value`` lines into typed values, rejecting unknown keys."""
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        if key not in _CONFIG_SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        values[key] = _parse_value(key, value)
    return values
