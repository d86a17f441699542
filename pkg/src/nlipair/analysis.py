"""Modal analysis of joint spectral functions.

Schmidt decomposition, single-arm g2 under inter-stage loss, heralding
efficiency, spectral correlation and multi-island channel decomposition.

The g2(eta) construction is a re-derivation from the lossy output state
(signal-only photons from lost idlers plus surviving pairs): the signal
correlation operator is

    Gamma_s = eta (1 - eta) rho_SP + 4 eta^2 rho_NLI,
    rho_X(w, w') = int F_X(w, wi) F_X*(w', wi) dwi,

and g2 = 1 + Tr(Gamma_s^2) / (Tr Gamma_s)^2, the multimode-thermal value
1 + 1/K_eff.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import JSF, TwoPhotonStateWeights
from .phase import ChannelSpec, resolve_half_widths
from .units import FrequencyAxis, PumpSpec, wavelength_to_frequency

SVD_RTOL = 1e-12


@dataclass
class SchmidtResult:
    lambdas: np.ndarray
    K: float
    signal_modes: np.ndarray  # columns orthonormal under the signal-axis quadrature
    idler_modes: np.ndarray
    singular_values: np.ndarray
    norm2: float

    def reconstruct(self, n_modes: int | None = None) -> np.ndarray:
        n = len(self.lambdas) if n_modes is None else n_modes
        coeff = np.sqrt(self.lambdas[:n] * self.norm2)
        return (self.signal_modes[:, :n] * coeff) @ self.idler_modes[:, :n].T


def schmidt_decompose(jsf: JSF, rtol: float = SVD_RTOL) -> SchmidtResult:
    """Singular-mode decomposition of a JSF.

    The matrix is weighted by sqrt(dws dwi) so that mode functions are
    normalised under the grid quadrature; singular values below ``rtol`` of
    the largest are dropped.
    """
    ds, di = jsf.signal_axis.step, jsf.idler_axis.step
    m = jsf.amplitude * np.sqrt(ds * di)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise ValueError("cannot decompose an all-zero JSF")
    keep = s > rtol * s[0]
    s, u, vh = s[keep], u[:, keep], vh[keep]
    p = s**2
    total = float(np.sum(p))
    lambdas = p / total
    return SchmidtResult(
        lambdas=lambdas,
        K=float(1.0 / np.sum(lambdas**2)),
        signal_modes=u / np.sqrt(ds),
        idler_modes=vh.T / np.sqrt(di),
        singular_values=s,
        norm2=total,
    )


def schmidt_number(jsf: JSF) -> float:
    return schmidt_decompose(jsf).K


# --- spectral windows -----------------------------------------------------

def coverage(axis: FrequencyAxis, lo: float, hi: float) -> np.ndarray:
    """Fraction of each grid cell [v - h/2, v + h/2] lying inside [lo, hi]."""
    v = axis.values
    h = axis.step
    left = np.maximum(v - 0.5 * h, lo)
    right = np.minimum(v + 0.5 * h, hi)
    return np.clip(right - left, 0.0, None) / h


@dataclass(frozen=True)
class DualBandWindows:
    """Ideal rectangular signal and idler passbands in THz."""

    signal: tuple[float, float]
    idler: tuple[float, float]

    @classmethod
    def centered(cls, signal_center: float, idler_center: float, full_width: float) -> "DualBandWindows":
        h = 0.5 * full_width
        return cls((signal_center - h, signal_center + h), (idler_center - h, idler_center + h))

    @classmethod
    def from_wavelengths(cls, signal_nm: float, idler_nm: float, full_width_nm: float) -> "DualBandWindows":
        h = 0.5 * full_width_nm

        def band(c):
            return tuple(sorted(wavelength_to_frequency(np.array([c - h, c + h])).tolist()))

        return cls(band(signal_nm), band(idler_nm))

    def weights(self, jsf: JSF) -> np.ndarray:
        """Per-cell intensity weights (coverage products)."""
        ws = coverage(jsf.signal_axis, *self.signal)
        wi = coverage(jsf.idler_axis, *self.idler)
        return np.outer(ws, wi)

    def apply(self, jsf: JSF) -> JSF:
        ws = np.sqrt(coverage(jsf.signal_axis, *self.signal))
        wi = np.sqrt(coverage(jsf.idler_axis, *self.idler))
        if not ws.any() or not wi.any():
            raise ValueError("filter window does not intersect the JSF grid")
        return jsf.with_amplitude(jsf.amplitude * ws[:, None] * wi[None, :])


def _check_eta(eta: float):
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmission eta must lie in [0, 1], got {eta}")


def _rho_pair(f_sp: JSF, f_nli: JSF, windows: DualBandWindows | None):
    if not f_sp.same_axes(f_nli):
        raise ValueError("F_SP and F_NLI are on different grids")
    if windows is not None:
        f_sp, f_nli = windows.apply(f_sp), windows.apply(f_nli)
    w = np.sqrt(f_sp.cell_area)
    a = f_sp.amplitude * w
    b = f_nli.amplitude * w
    return a @ a.conj().T, b @ b.conj().T


def signal_correlation_operator(f_sp: JSF, f_nli: JSF, eta: float, windows: DualBandWindows | None = None) -> np.ndarray:
    """Gamma_s on the signal grid, quadrature-weighted (eigenvalues = mode occupations, a.u.).

    At eta = 0 the operator vanishes; the eta -> 0+ direction rho_SP is
    returned instead so downstream ratios stay defined.
    """
    _check_eta(eta)
    rho_sp, rho_nli = _rho_pair(f_sp, f_nli, windows)
    if eta == 0.0:
        return rho_sp
    return eta * (1.0 - eta) * rho_sp + 4.0 * eta**2 * rho_nli


def g2_signal(f_sp: JSF, f_nli: JSF, eta: float, windows: DualBandWindows | None = None) -> float:
    """Unheralded single-arm g2 of the signal field for transmission ``eta``."""
    _check_eta(eta)
    rho_sp, rho_nli = _rho_pair(f_sp, f_nli, windows)
    # Gamma_s / eta: same g2, no underflow as eta -> 0
    gamma = (1.0 - eta) * rho_sp + 4.0 * eta * rho_nli
    tr = float(np.trace(gamma).real)
    if tr <= 0:
        raise ValueError("no signal photons inside the filter window")
    # Gamma is Hermitian, so Tr(Gamma^2) is its squared Frobenius norm
    return 1.0 + float(np.sum(np.abs(gamma / tr) ** 2))


def heralding_efficiency(weights: TwoPhotonStateWeights) -> float:
    """P(idler present | signal detected) = w_pair / (w_pair + w_signal_only)."""
    den = weights.w_pair + weights.w_signal_only
    if den <= 0:
        raise ValueError("no signal photons survive (eta = 0?)")
    return weights.w_pair / den


def pearson_correlation(jsf: JSF) -> float:
    """Correlation coefficient of (w_s, w_i) under the density |F|^2."""
    p = jsf.intensity
    tot = p.sum()
    if tot <= 0:
        raise ValueError("cannot correlate an all-zero JSF")
    p = p / tot
    # centred coordinates keep the moments well conditioned
    xs = jsf.signal_axis.values - jsf.signal_axis.values.mean()
    xi = jsf.idler_axis.values - jsf.idler_axis.values.mean()
    ps, pi = p.sum(axis=1), p.sum(axis=0)
    ms, mi = ps @ xs, pi @ xi
    ds, di = xs - ms, xi - mi
    cov = ds @ p @ di
    return float(cov / np.sqrt((ps @ ds**2) * (pi @ di**2)))


# --- multi-island decomposition ------------------------------------------

@dataclass
class ChannelDecomposition:
    r: np.ndarray
    partial_jsfs: list[JSF]
    K: np.ndarray
    peaks: list[tuple[float, float]]
    residual: float  # fraction of the grid norm outside every support
    supports: list[tuple[tuple[float, float], tuple[float, float]]] = field(default_factory=list)


def _sub_axis(axis: FrequencyAxis, idx: np.ndarray) -> FrequencyAxis:
    return FrequencyAxis(axis.start + int(idx[0]) * axis.step, axis.step, len(idx))


def decompose_channels(jsf: JSF, channels: Sequence[ChannelSpec], pump: PumpSpec | None = None) -> ChannelDecomposition:
    """Split a JSF into per-channel islands.

    Support k is the rectangle [c_s +/- h) x [c_i +/- h) of the channel band
    half-width h (upper edges open so contiguous bands never share a cell).
    """
    if not channels:
        raise ValueError("no channels given")
    if any(c.band_half_width is None for c in channels):
        if pump is None:
            raise ValueError("a pump is needed to resolve default band half-widths")
        hws = resolve_half_widths(channels, pump)
    else:
        hws = [c.band_half_width for c in channels]

    supports = [((c.signal_center - h, c.signal_center + h), (c.idler_center - h, c.idler_center + h))
                for c, h in zip(channels, hws)]
    for i in range(len(supports)):
        for j in range(i + 1, len(supports)):
            (s1, i1), (s2, i2) = supports[i], supports[j]
            if s1[0] < s2[1] and s2[0] < s1[1] and i1[0] < i2[1] and i2[0] < i1[1]:
                raise ValueError(f"channel supports {i + 1} and {j + 1} overlap")

    fs, fi = jsf.signal_axis.values, jsf.idler_axis.values
    inten = jsf.intensity
    norms, parts, ks, peaks = [], [], [], []
    used = np.zeros_like(inten, dtype=bool)
    for (slo, shi), (ilo, ihi) in supports:
        rs = np.flatnonzero((fs >= slo) & (fs < shi))
        ci = np.flatnonzero((fi >= ilo) & (fi < ihi))
        if rs.size < 2 or ci.size < 2:
            raise ValueError("channel support covers fewer than two grid samples per axis")
        sub = JSF(_sub_axis(jsf.signal_axis, rs), _sub_axis(jsf.idler_axis, ci), jsf.amplitude[np.ix_(rs, ci)])
        used[np.ix_(rs, ci)] = True
        parts.append(sub)
        norms.append(sub.norm2())
        ks.append(schmidt_decompose(sub).K)
        r, c = np.unravel_index(np.argmax(sub.intensity), sub.amplitude.shape)
        peaks.append((float(sub.signal_axis.values[r]), float(sub.idler_axis.values[c])))

    norms = np.array(norms)
    total_in = norms.sum()
    if total_in <= 0:
        raise ValueError("JSF vanishes on every channel support")
    grand = inten.sum()
    return ChannelDecomposition(
        r=np.sqrt(norms / total_in),
        partial_jsfs=parts,
        K=np.array(ks),
        peaks=peaks,
        residual=float(inten[~used].sum() / grand),
        supports=supports,
    )


def write_report(report: dict, path) -> None:
    """Analysis report as sorted, indented JSON."""
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
