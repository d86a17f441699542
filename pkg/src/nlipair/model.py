"""Forward model of the two-stage interferometer.

F_NLI(ws, wi) = F_SP(ws, wi) * I(ws, wi), with the single-piece JSF

    F_SP = exp[-(ws + wi - 2 wp0)^2 / (4 sigma_p^2)] sinc(dk L / 2) exp(i dk L / 2)

and the interference function

    I = cos((dk L + dphi) / 2) exp(i dphi / 2).

``simplified=True`` drops the dk L terms (perfect phase matching around the
design point), leaving the Gaussian pump envelope and cos(dphi / 2).
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .phase import PhaseProfile, delta_phi
from .units import FrequencyAxis, MediumSpec, PumpSpec, dispersive_wavenumber, make_axis, nonlinear_phase_rate


@dataclass
class JSF:
    """Complex joint spectral amplitude, rows = signal samples, cols = idler samples."""

    signal_axis: FrequencyAxis
    idler_axis: FrequencyAxis
    amplitude: np.ndarray

    def __post_init__(self):
        self.amplitude = np.asarray(self.amplitude, dtype=complex)
        shape = (self.signal_axis.count, self.idler_axis.count)
        if self.amplitude.shape != shape:
            raise ValueError(f"amplitude shape {self.amplitude.shape} does not match axes {shape}")
        if not np.all(np.isfinite(self.amplitude)):
            raise ValueError("JSF contains non-finite entries")

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    @property
    def cell_area(self) -> float:
        return self.signal_axis.step * self.idler_axis.step

    def norm2(self) -> float:
        """Rectangle-rule integral of |F|^2 over the grid."""
        return float(np.sum(self.intensity) * self.cell_area)

    def same_axes(self, other) -> bool:
        return self.signal_axis == other.signal_axis and self.idler_axis == other.idler_axis

    def with_amplitude(self, amplitude) -> "JSF":
        return JSF(self.signal_axis, self.idler_axis, amplitude)


@dataclass
class InterferenceMap:
    signal_axis: FrequencyAxis
    idler_axis: FrequencyAxis
    values: np.ndarray


@dataclass(frozen=True)
class TwoPhotonStateWeights:
    """Weights of the four terms of the loss-evolved two-photon state.

    Arbitrary units (proportional to probabilities at lowest order in G).
    ``eta`` and ``gain`` are carried along so consumers can rebuild spectral
    densities from the weights.
    """

    w_vacuum: float
    w_signal_only: float
    w_idler_only: float
    w_pair: float
    eta: float
    gain: float = 1.0


def jsf_axes(signal_center: float, idler_center: float, half_width: float, count: int):
    """Signal and idler axes of equal shape centred on a channel."""
    return make_axis(signal_center, half_width, count), make_axis(idler_center, half_width, count)


def _meshgrid(signal_axis: FrequencyAxis, idler_axis: FrequencyAxis, rows=slice(None)):
    return np.meshgrid(signal_axis.values[rows], idler_axis.values, indexing="ij")


def _by_rows(fn, n_rows: int, threads: int) -> np.ndarray:
    """Evaluate ``fn(row_slice)`` in row blocks; blocks are disjoint, so the
    result does not depend on the thread count."""
    if threads is None or threads <= 1 or n_rows < 2:
        return fn(slice(None))
    bounds = np.linspace(0, n_rows, min(threads, n_rows) + 1).astype(int)
    slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(fn, slices))
    return np.concatenate(parts, axis=0)


def wavevector_mismatch(omega_s, omega_i, medium: MediumSpec, pump: PumpSpec):
    """dk = 2k((ws+wi)/2) - k(ws) - k(wi) - 2 gamma P_p, in 1/m."""
    ws = np.asarray(omega_s, dtype=float)
    wi = np.asarray(omega_i, dtype=float)
    k = lambda f: dispersive_wavenumber(f, medium)  # noqa: E731
    return 2.0 * k(0.5 * (ws + wi)) - k(ws) - k(wi) - 2.0 * nonlinear_phase_rate(medium, pump)


def sinc(x):
    """sin(x)/x with sinc(0) = 1 (unnormalised, unlike np.sinc)."""
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


def single_piece_jsf(
    signal_axis: FrequencyAxis,
    idler_axis: FrequencyAxis,
    pump: PumpSpec,
    medium: MediumSpec | None = None,
    simplified: bool = True,
    threads: int = 1,
) -> JSF:
    if not simplified and medium is None:
        raise ValueError("the full model needs a medium")

    def rows(sl):
        ws, wi = _meshgrid(signal_axis, idler_axis, sl)
        env = np.exp(-((ws + wi - 2.0 * pump.center_frequency) ** 2) / (4.0 * pump.sigma_p**2))
        if simplified:
            return env.astype(complex)
        dkl = wavevector_mismatch(ws, wi, medium, pump) * medium.length
        return env * sinc(dkl / 2.0) * np.exp(0.5j * dkl)

    return JSF(signal_axis, idler_axis, _by_rows(rows, signal_axis.count, threads))


def interference_map(
    signal_axis: FrequencyAxis,
    idler_axis: FrequencyAxis,
    profile: PhaseProfile,
    medium: MediumSpec | None = None,
    pump: PumpSpec | None = None,
    simplified: bool = True,
    threads: int = 1,
) -> InterferenceMap:
    if not simplified and (medium is None or pump is None):
        raise ValueError("the full model needs a medium and a pump")
    lo = min(signal_axis.start, idler_axis.start)
    hi = max(signal_axis.stop, idler_axis.stop)
    if not profile.axis.contains([lo, hi]):
        raise ValueError(
            f"profile axis [{profile.axis.start}, {profile.axis.stop}] THz does not cover "
            f"the JSF grid [{lo}, {hi}] THz"
        )

    def rows(sl):
        ws, wi = _meshgrid(signal_axis, idler_axis, sl)
        dphi = delta_phi(profile, ws, wi)
        if simplified:
            return np.cos(dphi / 2.0).astype(complex)
        dkl = wavevector_mismatch(ws, wi, medium, pump) * medium.length
        return np.cos((dkl + dphi) / 2.0) * np.exp(0.5j * dphi)

    return InterferenceMap(signal_axis, idler_axis, _by_rows(rows, signal_axis.count, threads))


def nli_jsf(f_sp: JSF, imap: InterferenceMap) -> JSF:
    if f_sp.signal_axis != imap.signal_axis or f_sp.idler_axis != imap.idler_axis:
        raise ValueError("F_SP and the interference map are on different grids")
    return f_sp.with_amplitude(f_sp.amplitude * imap.values)


def lossy_state_weights(f_sp: JSF, f_nli: JSF, eta: float, gain: float = 1.0) -> TwoPhotonStateWeights:
    """Term weights for inter-stage transmission ``eta``.

    Amplitudes (1-eta) G F_SP, sqrt(eta(1-eta)) G F_SP (twice) and
    2 eta G F_NLI, squared and integrated over the grid.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmission eta must lie in [0, 1], got {eta}")
    if not f_sp.same_axes(f_nli):
        raise ValueError("F_SP and F_NLI are on different grids")
    g2 = gain * gain
    n_sp = f_sp.norm2()
    one = eta * (1.0 - eta) * g2 * n_sp
    return TwoPhotonStateWeights(
        w_vacuum=(1.0 - eta) ** 2 * g2 * n_sp,
        w_signal_only=one,
        w_idler_only=one,
        w_pair=4.0 * eta**2 * g2 * f_nli.norm2(),
        eta=eta,
        gain=gain,
    )


def write_jsf_csv(jsf: JSF, path) -> None:
    """CSV ``signal_THz,idler_THz,re,im,abs2``, signal-major."""
    ws = jsf.signal_axis.values
    wi = jsf.idler_axis.values
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["signal_THz", "idler_THz", "re", "im", "abs2"])
        for r, fs in enumerate(ws):
            row = jsf.amplitude[r]
            for c, fi in enumerate(wi):
                z = row[c]
                w.writerow([repr(float(fs)), repr(float(fi)), repr(float(z.real)), repr(float(z.imag)),
                            repr(float(abs(z) ** 2))])


def read_jsf_csv(path) -> JSF:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["signal_THz", "idler_THz", "re", "im", "abs2"]:
        raise ValueError(f"{path}: unexpected JSF header")
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    fs = np.unique(data[:, 0])
    fi = np.unique(data[:, 1])
    if len(fs) * len(fi) != len(data):
        raise ValueError(f"{path}: rows do not form a full grid")
    sa = FrequencyAxis(float(fs[0]), float((fs[-1] - fs[0]) / (len(fs) - 1)), len(fs))
    ia = FrequencyAxis(float(fi[0]), float((fi[-1] - fi[0]) / (len(fi) - 1)), len(fi))
    amp = (data[:, 2] + 1j * data[:, 3]).reshape(len(fs), len(fi))
    return JSF(sa, ia, amp)
