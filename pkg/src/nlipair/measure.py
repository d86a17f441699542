"""Simulated measurements: dual-band joint spectral scan and HBT g2.

Counting model: independent Poisson counts per scan point, accidentals as
products of independent singles (adjacent pulses), no dead time, no dark
counts.  Every scan point gets its own generator spawned from
(seed, point index), so results do not depend on evaluation order.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import DualBandWindows, coverage, signal_correlation_operator
from .model import JSF, TwoPhotonStateWeights
from .units import FrequencyAxis, wavelength_to_frequency

MAX_MEAN_PHOTONS = 1.0


@dataclass(frozen=True)
class ScanConfig:
    """Flat-top filter scan; wavelengths in nm."""

    filter_full_width: float = 0.2
    signal_range: tuple[float, float] = (1552.6, 1555.6)
    idler_range: tuple[float, float] = (1543.0, 1546.0)
    step: float = 0.2
    pulses_per_point: int | None = None
    seed: int = 0
    noiseless: bool = True
    brightness: float = 1.0  # expected pair probability per pulse per unit weight
    detection_efficiency: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("scan step must be positive")
        if not self.filter_full_width > 0:
            raise ValueError("filter width must be positive")
        for lo, hi in (self.signal_range, self.idler_range):
            if hi < lo:
                raise ValueError(f"scan range ({lo}, {hi}) is reversed")
        if not self.noiseless and not self.pulses_per_point:
            raise ValueError("noisy scans need pulses_per_point")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def points(self, rng: tuple[float, float]) -> np.ndarray:
        lo, hi = rng
        n = int(np.floor((hi - lo) / self.step + 1e-9)) + 1
        return lo + np.arange(n) * self.step


@dataclass
class ScanResult:
    signal_nm: np.ndarray
    idler_nm: np.ndarray
    true_coincidence: np.ndarray  # (signal points, idler points)
    accidental: np.ndarray

    def argmax(self) -> tuple[float, float]:
        r, c = np.unravel_index(np.argmax(self.true_coincidence), self.true_coincidence.shape)
        return float(self.signal_nm[r]), float(self.idler_nm[c])


def _window_matrix(axis: FrequencyAxis, centers_nm: np.ndarray, width_nm: float) -> np.ndarray:
    h = 0.5 * width_nm
    f_hi = wavelength_to_frequency(centers_nm - h)
    f_lo = wavelength_to_frequency(centers_nm + h)
    edge_lo = axis.start - 0.5 * axis.step
    edge_hi = axis.stop + 0.5 * axis.step
    if np.min(f_lo) < edge_lo - 1e-12 or np.max(f_hi) > edge_hi + 1e-12:
        raise ValueError(
            f"scan windows [{np.min(f_lo):.4f}, {np.max(f_hi):.4f}] THz fall outside the JSF axis "
            f"[{edge_lo:.4f}, {edge_hi:.4f}] THz"
        )
    return np.stack([coverage(axis, lo, hi) for lo, hi in zip(f_lo, f_hi)])


def joint_spectral_scan(
    f_nli: JSF,
    weights: TwoPhotonStateWeights,
    config: ScanConfig,
    f_sp: JSF | None = None,
) -> ScanResult:
    """Coincidence map of a dual flat-top filter scanned over the JSF.

    True coincidences follow the windowed pair density 4 eta^2 G^2 |F_NLI|^2;
    singles add the one-photon background eta (1-eta) G^2 |F_SP|^2.  Without
    ``f_sp`` the background is given the pair-spectrum shape, scaled to
    ``weights.w_signal_only``.
    """
    eta, g = weights.eta, weights.gain
    pair = 4.0 * eta**2 * g**2 * f_nli.intensity
    if f_sp is not None:
        if not f_sp.same_axes(f_nli):
            raise ValueError("F_SP and F_NLI are on different grids")
        one = eta * (1.0 - eta) * g**2 * f_sp.intensity
    else:
        n = f_nli.norm2()
        one = f_nli.intensity * (weights.w_signal_only / n if n > 0 else 0.0)

    s_nm = config.points(config.signal_range)
    i_nm = config.points(config.idler_range)
    ws = _window_matrix(f_nli.signal_axis, s_nm, config.filter_full_width)
    wi = _window_matrix(f_nli.idler_axis, i_nm, config.filter_full_width)
    area = f_nli.cell_area

    pair_win = ws @ pair @ wi.T * area
    singles_s = ws @ (pair.sum(axis=1) + one.sum(axis=1)) * area
    singles_i = wi @ (pair.sum(axis=0) + one.sum(axis=0)) * area

    eff_s, eff_i = config.detection_efficiency
    if config.pulses_per_point:
        b, n_pulses = config.brightness, config.pulses_per_point
        true_mean = n_pulses * b * eff_s * eff_i * pair_win
        acc_mean = n_pulses * np.outer(b * eff_s * singles_s, b * eff_i * singles_i)
    else:
        true_mean = eff_s * eff_i * pair_win
        acc_mean = np.outer(eff_s * singles_s, eff_i * singles_i)

    if config.noiseless:
        return ScanResult(s_nm, i_nm, true_mean, acc_mean)

    true_est = np.empty_like(true_mean)
    acc_est = np.empty_like(acc_mean)
    for idx in np.ndindex(true_mean.shape):
        flat = idx[0] * true_mean.shape[1] + idx[1]
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(flat,)))
        raw = rng.poisson(true_mean[idx] + acc_mean[idx])
        adj = rng.poisson(acc_mean[idx])
        acc_est[idx] = adj
        true_est[idx] = max(raw - adj, 0)
    return ScanResult(s_nm, i_nm, true_est, acc_est)


def write_scan_csv(result: ScanResult, path) -> None:
    """CSV ``signal_nm,idler_nm,true_coincidence,accidental``, signal-major."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["signal_nm", "idler_nm", "true_coincidence", "accidental"])
        for r, s in enumerate(result.signal_nm):
            for c, i in enumerate(result.idler_nm):
                w.writerow([f"{s:.4f}", f"{i:.4f}", repr(float(result.true_coincidence[r, c])),
                            repr(float(result.accidental[r, c]))])


@dataclass
class HBTResult:
    g2: float
    stderr: float
    same_pulse: float  # summed photon-pair coincidences between the two HBT arms
    adjacent_pulse: float  # summed adjacent-pulse coincidences (both orderings, halved)
    pulses: int
    n_modes: int


def thermal_mode_occupations(gamma: np.ndarray, mean_photons: float, rtol: float = 1e-10) -> np.ndarray:
    """Eigenvalues of Gamma_s scaled to a total mean photon number per pulse."""
    lam = np.linalg.eigvalsh(gamma)[::-1]
    lam = lam[lam > rtol * lam[0]]
    return mean_photons * lam / lam.sum()


def hbt_from_occupations(
    occupations: np.ndarray,
    detector_efficiency: float,
    pulses: int,
    seed: int,
    batches: int = 100,
) -> HBTResult:
    """HBT run on independent thermal modes with the given mean occupations.

    Each pulse draws Bose-Einstein photon numbers per mode; every photon takes
    one port of a 50/50 coupler and is detected with ``detector_efficiency``.
    Counts are photon-resolved (no dead time), so the estimator
    same-pulse / adjacent-pulse coincidences is unbiased at any occupation.
    """
    if pulses < 2 * batches:
        raise ValueError(f"need at least {2 * batches} pulses")
    if not 0 < detector_efficiency <= 1:
        raise ValueError("detector efficiency must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    n = np.zeros(pulses, dtype=np.int64)
    for mu in occupations:
        n += rng.geometric(1.0 / (1.0 + mu), size=pulses) - 1
    p = 0.5 * detector_efficiency
    na = rng.binomial(n, p)
    nb = rng.binomial(n - na, p / (1.0 - p))

    x = (na * nb).astype(float)
    y = np.zeros(pulses)
    y[:-1] = 0.5 * (na[:-1] * nb[1:] + nb[:-1] * na[1:])
    # last pulse has no successor; drop it from the accidental average
    xm = x.mean()
    ym = y[:-1].mean()
    if ym == 0:
        raise ValueError("no accidental coincidences recorded; raise pulses or mean photon number")
    g2 = xm / ym

    # batch means absorb the lag-1 correlation of the accidental series
    xb = np.array([b.mean() for b in np.array_split(x[:-1], batches)])
    yb = np.array([b.mean() for b in np.array_split(y[:-1], batches)])
    cov = np.cov(np.vstack([xb, yb]))
    var = (cov[0, 0] / xm**2 + cov[1, 1] / ym**2 - 2 * cov[0, 1] / (xm * ym)) * g2**2 / batches
    return HBTResult(
        g2=float(g2),
        stderr=float(np.sqrt(max(var, 0.0))),
        same_pulse=float(x.sum()),
        adjacent_pulse=float(y.sum()),
        pulses=pulses,
        n_modes=len(occupations),
    )


def hbt_g2_sim(
    f_sp: JSF,
    f_nli: JSF,
    eta: float,
    detector_efficiency: float = 0.15,
    pulses: int = 10**6,
    seed: int = 0,
    mean_photons: float = 0.1,
    windows: DualBandWindows | None = None,
) -> HBTResult:
    """Monte Carlo HBT measurement of the signal arm.

    Thermal statistics are drawn in the eigenmodes of Gamma_s, whose
    eigenvalues are rescaled so the signal carries ``mean_photons`` per pulse.
    """
    if not 0 < mean_photons <= MAX_MEAN_PHOTONS:
        raise ValueError(
            f"mean photon number {mean_photons} per pulse is outside the low-gain range "
            f"(0, {MAX_MEAN_PHOTONS}]"
        )
    gamma = signal_correlation_operator(f_sp, f_nli, eta, windows)
    occ = thermal_mode_occupations(gamma, mean_photons)
    return hbt_from_occupations(occ, detector_efficiency, pulses, seed)
