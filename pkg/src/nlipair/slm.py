"""Phase profile -> SLM gray-level pattern, and binary PGM I/O.

Column c sees wavelength lambda(c) = lambda_0 + c * nm_per_column; the phase
there is wrapped to [0, 2 pi) and quantised linearly onto 256 gray levels
(round half to even).  Rows are identical.
"""
from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .phase import PhaseProfile
from .units import wavelength_to_frequency

LEVELS = 256


@dataclass(frozen=True)
class SLMCalibration:
    columns: int = 1920
    rows: int = 1080
    wavelength_at_column_0: float = 1561.0  # nm
    nm_per_column: float = -0.011
    phase_full_scale: float = 2 * np.pi

    def __post_init__(self):
        if self.columns <= 0 or self.rows <= 0:
            raise ValueError("SLM geometry must be positive")
        if self.nm_per_column == 0:
            raise ValueError("nm_per_column must be non-zero")
        if not self.phase_full_scale > 0:
            raise ValueError("phase_full_scale must be positive")
        lam_end = self.wavelength_at_column_0 + (self.columns - 1) * self.nm_per_column
        if min(self.wavelength_at_column_0, lam_end) <= 0:
            raise ValueError("calibration reaches non-positive wavelengths")

    @property
    def column_wavelengths(self) -> np.ndarray:
        return self.wavelength_at_column_0 + np.arange(self.columns) * self.nm_per_column

    @property
    def column_frequencies(self) -> np.ndarray:
        return wavelength_to_frequency(self.column_wavelengths)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SLMCalibration":
        return cls(**json.loads(text))


@dataclass
class GrayPattern:
    pixels: np.ndarray  # uint8, (rows, columns)
    calibration: SLMCalibration

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.dtype != np.uint8 or self.pixels.ndim != 2:
            raise ValueError("pattern must be a 2-D uint8 array")

    @property
    def row(self) -> np.ndarray:
        return self.pixels[0]


def phase_to_gray(phi, full_scale: float = 2 * np.pi) -> np.ndarray:
    wrapped = np.mod(np.asarray(phi, dtype=float), full_scale)
    return (np.rint(wrapped / full_scale * LEVELS).astype(np.int64) % LEVELS).astype(np.uint8)


def gray_to_phase(gray, full_scale: float = 2 * np.pi) -> np.ndarray:
    return np.asarray(gray, dtype=float) * (full_scale / LEVELS)


def phase_to_pattern(profile: PhaseProfile, calib: SLMCalibration) -> GrayPattern:
    """Gray-level mask for ``profile``.

    The calibrated span must cover every band of the profile; columns beyond
    the profile axis hold the nearest end sample.
    """
    nu = calib.column_frequencies
    lo, hi = float(nu.min()), float(nu.max())
    for b in profile.bands:
        if b.lo < lo or b.hi > hi:
            raise ValueError(
                f"SLM span [{lo:.4f}, {hi:.4f}] THz does not cover band {b.label} "
                f"[{b.lo:.4f}, {b.hi:.4f}] THz"
            )
    if not profile.bands and (profile.axis.start < lo or profile.axis.stop > hi):
        raise ValueError("SLM span does not cover the profile axis")
    phi = np.interp(nu, profile.frequencies, profile.phi)
    row = phase_to_gray(phi, calib.phase_full_scale)
    return GrayPattern(np.tile(row, (calib.rows, 1)), calib)


def pattern_to_phase(pattern: GrayPattern) -> np.ndarray:
    """Per-column phase encoded by the first row."""
    return gray_to_phase(pattern.row, pattern.calibration.phase_full_scale)


def export_pgm(pattern: GrayPattern, destination) -> None:
    """Binary P5 PGM: ``P5\\n<cols> <rows>\\n255\\n`` + raw bytes, row-major."""
    rows, cols = pattern.pixels.shape
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    data = np.ascontiguousarray(pattern.pixels, dtype=np.uint8).tobytes()
    if hasattr(destination, "write"):
        destination.write(header + data)
    else:
        Path(destination).write_bytes(header + data)


_HEADER = re.compile(rb"P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")


def import_pgm(source, calibration: SLMCalibration | None = None) -> GrayPattern:
    """Read an 8-bit binary PGM written by :func:`export_pgm` (comments tolerated)."""
    raw = source.read() if hasattr(source, "read") else Path(source).read_bytes()
    m = _HEADER.match(raw)
    if m is None:
        raise ValueError("malformed PGM header (expected binary P5)")
    cols, rows, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise ValueError(f"unsupported PGM maxval {maxval}; only 8-bit (255) patterns are handled")
    if cols <= 0 or rows <= 0:
        raise ValueError("PGM geometry must be positive")
    payload = raw[m.end():]
    need = cols * rows
    if len(payload) < need:
        raise ValueError(f"truncated PGM payload: {len(payload)} of {need} bytes")
    if len(payload) > need:
        raise ValueError(f"PGM payload has {len(payload) - need} trailing bytes")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(rows, cols).copy()
    if calibration is None:
        calibration = SLMCalibration(columns=cols, rows=rows)
    elif (calibration.columns, calibration.rows) != (cols, rows):
        raise ValueError("calibration geometry does not match the PGM")
    return GrayPattern(pixels, calibration)
