"""Units, frequency grids and the pump/medium parameter containers.

Frequencies are THz, wavelengths nm.  Angular detunings only appear inside
:func:`dispersive_wavenumber`, which is the single place where THz, ps^n/km
and metres get reconciled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: speed of light in nm*THz (exact SI value)
C_NM_THZ = 299792.458


def wavelength_to_frequency(wavelength_nm):
    """Vacuum wavelength [nm] -> frequency [THz]."""
    wl = np.asarray(wavelength_nm, dtype=float)
    if np.any(wl <= 0) or not np.all(np.isfinite(wl)):
        raise ValueError(f"wavelength must be positive and finite, got {wavelength_nm!r}")
    out = C_NM_THZ / wl
    return float(out) if out.ndim == 0 else out


def frequency_to_wavelength(frequency_thz):
    """Frequency [THz] -> vacuum wavelength [nm]."""
    nu = np.asarray(frequency_thz, dtype=float)
    if np.any(nu <= 0) or not np.all(np.isfinite(nu)):
        raise ValueError(f"frequency must be positive and finite, got {frequency_thz!r}")
    out = C_NM_THZ / nu
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FrequencyAxis:
    """Uniform frequency axis, sample(i) = start + i*step (THz)."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.step)):
            raise ValueError("axis start/step must be finite")
        if self.step <= 0:
            raise ValueError(f"axis step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise ValueError(f"axis count must be an integer >= 2, got {self.count}")

    def sample(self, i: int) -> float:
        if not 0 <= i < self.count:
            raise IndexError(i)
        return self.start + i * self.step

    @property
    def values(self) -> np.ndarray:
        # affine in the index, never a running sum
        return self.start + np.arange(self.count) * self.step

    @property
    def stop(self) -> float:
        return self.start + (self.count - 1) * self.step

    def contains(self, freq, tol: float = 1e-9) -> bool:
        f = np.asarray(freq, dtype=float)
        return bool(np.all((f >= self.start - tol) & (f <= self.stop + tol)))

    def __len__(self):
        return self.count


def make_axis(center: float, half_width: float, count: int) -> FrequencyAxis:
    """Symmetric axis of ``count`` samples spanning center +/- half_width.

    ``count`` must be odd so the center lands on a sample.
    """
    if half_width <= 0:
        raise ValueError(f"half_width must be positive, got {half_width}")
    if center - half_width <= 0:
        raise ValueError("axis would reach non-positive frequencies")
    if int(count) != count or count < 3 or count % 2 == 0:
        raise ValueError(f"count must be an odd integer >= 3 (center on-grid), got {count}")
    count = int(count)
    step = 2.0 * half_width / (count - 1)
    mid = (count - 1) // 2
    # start chosen so that start + mid*step reproduces center exactly
    start = _exact_start(center, step, mid)
    if start is None:
        # rounding skipped over center for every nearby start: perturb step by ulps
        s = step
        for _ in range(64):
            s = float(np.nextafter(s, np.inf))
            start = _exact_start(center, s, mid)
            if start is not None:
                step = s
                break
        else:
            raise ArithmeticError("could not place center exactly on the axis")
    return FrequencyAxis(start=start, step=step, count=count)


def _exact_start(center: float, step: float, mid: int) -> float | None:
    base = center - mid * step
    lo = hi = base
    for _ in range(64):
        for s in (lo, hi):
            if s + mid * step == center:
                return s
        lo = float(np.nextafter(lo, -np.inf))
        hi = float(np.nextafter(hi, np.inf))
    return None


@dataclass(frozen=True)
class PumpSpec:
    """Gaussian pump.

    ``sigma_p`` is the amplitude-envelope parameter of
    exp[-(w_s + w_i - 2 w_p0)^2 / (4 sigma_p^2)], used as given.
    """

    center_frequency: float  # THz
    sigma_p: float  # THz
    peak_power: float = 0.0  # W
    average_power: float | None = None  # mW, metadata
    repetition_rate: float | None = None  # MHz, metadata

    def __post_init__(self):
        if not self.sigma_p > 0:
            raise ValueError(f"sigma_p must be positive, got {self.sigma_p}")
        if self.peak_power < 0:
            raise ValueError(f"peak_power must be >= 0, got {self.peak_power}")
        if not self.center_frequency > 0:
            raise ValueError("pump center frequency must be positive")


@dataclass(frozen=True)
class MediumSpec:
    """Nonlinear waveguide with a Taylor-expanded propagation constant.

    Units: length m, gamma 1/(W km), reference THz, beta_n in ps^n/km.
    """

    length: float
    gamma: float = 0.0
    reference_frequency: float = 193.5
    beta2: float = 0.0
    beta3: float = 0.0
    beta4: float = 0.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"medium length must be positive, got {self.length}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def is_dispersionless(self) -> bool:
        return self.beta2 == 0 and self.beta3 == 0 and self.beta4 == 0


def dispersive_wavenumber(freq_thz, medium: MediumSpec):
    """Dispersive part of k(w) in 1/m.

    k = beta2/2 dw^2 + beta3/6 dw^3 + beta4/24 dw^4 with dw = 2*pi*(nu - nu_ref)
    in rad/ps; beta in ps^n/km gives 1/km, divided by 1000 for 1/m.  The
    constant and linear Taylor terms cancel in every second difference and
    are left out.
    """
    dw = 2.0 * np.pi * (np.asarray(freq_thz, dtype=float) - medium.reference_frequency)
    k_per_km = dw * dw * (medium.beta2 / 2.0 + dw * (medium.beta3 / 6.0 + dw * medium.beta4 / 24.0))
    return k_per_km / 1000.0


def nonlinear_phase_rate(medium: MediumSpec, pump: PumpSpec) -> float:
    """gamma * P_p in 1/m."""
    return medium.gamma * pump.peak_power / 1000.0


def dsf_betas(zero_dispersion_nm: float, slope: float, at_nm: float) -> tuple[float, float]:
    """(beta2, beta3) in ps^2/km, ps^3/km at ``at_nm`` for a fibre with linear D(lambda).

    D = slope*(lambda - zero_dispersion_nm) in ps/(nm km); slope in ps/(nm^2 km).
    Used only to produce example media, not a fitted fibre model.
    """
    d = slope * (at_nm - zero_dispersion_nm)
    c = C_NM_THZ  # nm/ps
    beta2 = -(at_nm**2) / (2.0 * np.pi * c) * d
    beta3 = at_nm**4 / (4.0 * np.pi**2 * c**2) * slope + at_nm**3 / (2.0 * np.pi**2 * c**2) * d
    return float(beta2), float(beta3)
