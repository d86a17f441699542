"""Programmable phase functions for the inter-stage phase device.

A profile is a sampled phi(w) on one frequency axis spanning the signal, pump
and idler regions.  Each signal/idler band carries an arctan-series ramp whose
second difference turns cos(dphi/2) into a Gaussian ridge of width ``a``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .units import FrequencyAxis, MediumSpec, PumpSpec, dispersive_wavenumber, nonlinear_phase_rate

_SQRT2 = np.sqrt(2.0)
# coefficients of the odd polynomial inside the arctan, in powers of x/a
_U_COEFFS = (
    (1, _SQRT2),
    (3, 1.0 / _SQRT2),
    (5, 5.0 / (12.0 * _SQRT2)),
    (7, 1.0 / (8.0 * _SQRT2)),
    (9, 79.0 / (2880.0 * _SQRT2)),
)

PUMP_BAND_SIGMAS = 3.0
ENERGY_TOL = 1e-6  # THz
_EDGE_TOL = 1e-9  # THz


def u_series(x, a):
    """Arctan shaping function, cos(u(x, a)) ~ exp(-x^2/a^2).

    Odd and strictly increasing in x, bounded by pi/2.
    """
    if not np.all(np.asarray(a) > 0):
        raise ValueError(f"bandwidth parameter a must be positive, got {a!r}")
    t = np.asarray(x, dtype=float) / a
    t2 = t * t
    # Horner form of sum c_n t^n over odd n
    poly = _U_COEFFS[-1][1]
    for _, c in reversed(_U_COEFFS[:-1]):
        poly = poly * t2 + c
    out = np.arctan(t * poly)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ChannelSpec:
    """One signal/idler island.

    ``band_half_width`` of None means "resolve at build time": 3 sigma_p for a
    lone channel, capped at half the spacing to the nearest neighbour.
    ``reversed`` flips the sign of u in both sub-bands.
    """

    signal_center: float
    idler_center: float
    a_signal: float
    a_idler: float
    band_half_width: float | None = None
    reversed: bool = False

    def __post_init__(self):
        if not (self.a_signal > 0 and self.a_idler > 0):
            raise ValueError("a_signal and a_idler must be positive")
        if self.band_half_width is not None and not self.band_half_width > 0:
            raise ValueError("band_half_width must be positive")

    @classmethod
    def symmetric(cls, signal_center, idler_center, a, **kw) -> "ChannelSpec":
        return cls(signal_center, idler_center, a, a, **kw)

    def check_energy(self, pump: PumpSpec):
        mismatch = self.signal_center + self.idler_center - 2.0 * pump.center_frequency
        if abs(mismatch) > ENERGY_TOL:
            raise ValueError(
                f"channel ({self.signal_center}, {self.idler_center}) THz violates energy "
                f"conservation with pump {pump.center_frequency} THz by {mismatch:.3g} THz"
            )


@dataclass(frozen=True)
class Band:
    label: str  # "pump", "signal<k>", "idler<k>"
    center: float
    half_width: float
    a: float | None = None
    sign: int = 1

    @property
    def lo(self):
        return self.center - self.half_width

    @property
    def hi(self):
        return self.center + self.half_width

    def phase(self, freq):
        """Phase inside the band (no range check)."""
        if self.label == "pump":
            return np.full_like(np.asarray(freq, dtype=float), np.pi / 2)
        detuning = np.asarray(freq, dtype=float) - self.center
        u = u_series(detuning, self.a)
        if self.label.startswith("signal"):
            return self.sign * (-u) + np.pi / 2
        return self.sign * u + np.pi / 2


@dataclass
class PhaseProfile:
    axis: FrequencyAxis
    phi: np.ndarray
    band_labels: np.ndarray
    bands: tuple[Band, ...] = field(default=())
    pump_center: float | None = None

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        self.band_labels = np.asarray(self.band_labels, dtype=object)
        if self.phi.shape != (self.axis.count,) or self.band_labels.shape != (self.axis.count,):
            raise ValueError("phi and band_labels must have one entry per axis sample")
        if not np.all(np.isfinite(self.phi)):
            raise ValueError("phase profile contains non-finite samples")

    @property
    def frequencies(self) -> np.ndarray:
        return self.axis.values

    def evaluate(self, freq):
        """Linearly interpolated phi at arbitrary in-range frequencies."""
        f = np.asarray(freq, dtype=float)
        if not self.axis.contains(f):
            raise ValueError(
                f"frequency outside profile axis [{self.axis.start}, {self.axis.stop}] THz"
            )
        return np.interp(f, self.axis.values, self.phi)

    @classmethod
    def zeros(cls, axis: FrequencyAxis) -> "PhaseProfile":
        return cls(axis, np.zeros(axis.count), np.full(axis.count, "fill", dtype=object))


def resolve_half_widths(channels: Sequence[ChannelSpec], pump: PumpSpec) -> list[float]:
    """Band half-width per channel: explicit value, else min(3 sigma_p, half spacing)."""
    default = PUMP_BAND_SIGMAS * pump.sigma_p
    centers = np.array([c.signal_center for c in channels])
    out = []
    for k, ch in enumerate(channels):
        if ch.band_half_width is not None:
            out.append(float(ch.band_half_width))
            continue
        others = np.delete(centers, k)
        hw = default
        if others.size:
            hw = min(hw, 0.5 * float(np.min(np.abs(others - ch.signal_center))))
        out.append(hw)
    return out


def layout_bands(pump: PumpSpec, channels: Sequence[ChannelSpec]) -> list[Band]:
    if not channels:
        raise ValueError("at least one channel is required")
    bands = [Band("pump", pump.center_frequency, PUMP_BAND_SIGMAS * pump.sigma_p)]
    for k, (ch, hw) in enumerate(zip(channels, resolve_half_widths(channels, pump)), start=1):
        ch.check_energy(pump)
        sign = -1 if ch.reversed else 1
        bands.append(Band(f"signal{k}", ch.signal_center, hw, ch.a_signal, sign))
        bands.append(Band(f"idler{k}", ch.idler_center, hw, ch.a_idler, sign))
    ordered = sorted(bands, key=lambda b: b.lo)
    for left, right in zip(ordered, ordered[1:]):
        if left.hi > right.lo + _EDGE_TOL:
            raise ValueError(f"bands {left.label} and {right.label} overlap")
    return bands


def build_phase_profile(axis: FrequencyAxis, pump: PumpSpec, channels: Sequence[ChannelSpec]) -> PhaseProfile:
    """Piecewise phase function for the given pump and signal/idler channels.

    Bands are closed intervals; a sample on a shared edge of two contiguous
    bands goes to the lower one.  Samples outside every band hold the phase
    of the nearest signal/idler band edge.
    """
    bands = layout_bands(pump, channels)
    freqs = axis.values
    for b in bands:
        if b.lo < axis.start - _EDGE_TOL or b.hi > axis.stop + _EDGE_TOL:
            raise ValueError(f"band {b.label} [{b.lo:.6f}, {b.hi:.6f}] THz extends outside the axis")

    phi = np.zeros(axis.count)
    labels = np.full(axis.count, "fill", dtype=object)
    for b in sorted(bands, key=lambda b: b.lo):
        inside = (freqs >= b.lo - _EDGE_TOL) & (freqs <= b.hi + _EDGE_TOL) & (labels == "fill")
        phi[inside] = b.phase(freqs[inside])
        labels[inside] = b.label

    gaps = labels == "fill"
    if np.any(gaps):
        edges = []
        for b in bands:
            if b.label != "pump":
                edges.append((b.lo, float(b.phase(b.lo))))
                edges.append((b.hi, float(b.phase(b.hi))))
        edges.sort()
        pos = np.array([e[0] for e in edges])
        vals = np.array([e[1] for e in edges])
        dist = np.abs(freqs[gaps, None] - pos[None, :])
        # argmin returns the first minimum, i.e. the lower-frequency edge on ties
        phi[gaps] = vals[np.argmin(dist, axis=1)]

    return PhaseProfile(axis, phi, labels, tuple(bands), pump.center_frequency)


def delta_phi(profile: PhaseProfile, omega_s, omega_i):
    """Second difference 2 phi((w_s + w_i)/2) - phi(w_s) - phi(w_i)."""
    ws = np.asarray(omega_s, dtype=float)
    wi = np.asarray(omega_i, dtype=float)
    mid = 0.5 * (ws + wi)
    return 2.0 * profile.evaluate(mid) - profile.evaluate(ws) - profile.evaluate(wi)


def pump_side(profile: PhaseProfile) -> np.ndarray:
    """Mask of the pump band plus the fill samples nearer to it than to any other band."""
    freqs = profile.frequencies
    mask = profile.band_labels == "pump"
    pumps = [b for b in profile.bands if b.label == "pump"]
    others = [b for b in profile.bands if b.label != "pump"]
    fill = profile.band_labels == "fill"
    if not pumps or not np.any(fill):
        return mask

    def dist(bands):
        return np.min([np.maximum(np.maximum(b.lo - freqs, freqs - b.hi), 0.0) for b in bands], axis=0)

    d_other = dist(others) if others else np.full(freqs.shape, np.inf)
    return mask | (fill & (dist(pumps) < d_other))


def dispersion_compensation(profile: PhaseProfile, medium: MediumSpec, pump: PumpSpec) -> PhaseProfile:
    """Add -L k_disp(w) everywhere and +gamma P_p L on the pump side.

    After this the full-model argument dk L + dphi equals the designed dphi
    wherever (w_s + w_i)/2 falls on the pump side (see :func:`pump_side`)
    and w_s, w_i do not.  Signal and idler bands get no constant shift.
    """
    freqs = profile.frequencies
    phi = profile.phi - medium.length * dispersive_wavenumber(freqs, medium)
    phi = phi + np.where(pump_side(profile), nonlinear_phase_rate(medium, pump) * medium.length, 0.0)
    return replace(profile, phi=phi)


# --- CSV + band map -------------------------------------------------------

def write_profile_csv(profile: PhaseProfile, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frequency_THz", "phase_rad"])
        for f, p in zip(profile.frequencies, profile.phi):
            w.writerow([repr(float(f)), repr(float(p))])


def band_map(profile: PhaseProfile) -> dict:
    return {
        "axis": {"start_THz": profile.axis.start, "step_THz": profile.axis.step, "count": profile.axis.count},
        "pump_center_THz": profile.pump_center,
        "bands": [
            {
                "label": b.label,
                "center_THz": b.center,
                "lo_THz": b.lo,
                "hi_THz": b.hi,
                "a_THz": b.a,
                "reversed": b.sign < 0,
            }
            for b in sorted(profile.bands, key=lambda b: b.lo)
        ],
    }


def write_band_map(profile: PhaseProfile, path) -> None:
    Path(path).write_text(json.dumps(band_map(profile), indent=2, sort_keys=True) + "\n")


def read_profile_csv(path, band_map_path=None) -> PhaseProfile:
    """Inverse of :func:`write_profile_csv` (+ optional band map sidecar)."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["frequency_THz", "phase_rad"]:
        raise ValueError(f"{path}: expected header 'frequency_THz,phase_rad'")
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    if data.shape[0] < 2:
        raise ValueError(f"{path}: need at least two samples")
    freqs, phi = data[:, 0], data[:, 1]

    bands: tuple[Band, ...] = ()
    pump_center = None
    if band_map_path is not None:
        meta = json.loads(Path(band_map_path).read_text())
        ax = meta["axis"]
        axis = FrequencyAxis(ax["start_THz"], ax["step_THz"], ax["count"])
        pump_center = meta.get("pump_center_THz")
        bands = tuple(
            Band(b["label"], b["center_THz"], b["hi_THz"] - b["center_THz"], b["a_THz"], -1 if b["reversed"] else 1)
            for b in meta["bands"]
        )
    else:
        step = (freqs[-1] - freqs[0]) / (len(freqs) - 1)
        axis = FrequencyAxis(float(freqs[0]), float(step), len(freqs))
    if axis.count != len(freqs) or not np.allclose(axis.values, freqs, rtol=0, atol=1e-9):
        raise ValueError(f"{path}: frequency column is not the declared uniform axis")

    labels = np.full(axis.count, "fill", dtype=object)
    for b in sorted(bands, key=lambda b: b.lo):
        inside = (freqs >= b.lo - _EDGE_TOL) & (freqs <= b.hi + _EDGE_TOL) & (labels == "fill")
        labels[inside] = b.label
    return PhaseProfile(axis, phi, labels, bands, pump_center)
