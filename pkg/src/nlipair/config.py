"""Flat ``key = value`` run configuration.

One dotted key per line, ``#`` starts a comment.  Units live in the key
names (``_thz``, ``_nm``, ``_m``, ``_w``, ``_ps2_per_km`` ...).  Channels are
numbered: ``channel.1.signal_thz``, ``channel.1.a_thz`` and so on.

Every key is validated before anything is computed; unknown keys are
rejected by name.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .analysis import DualBandWindows
from .measure import ScanConfig
from .phase import ChannelSpec, layout_bands
from .slm import SLMCalibration
from .units import FrequencyAxis, MediumSpec, PumpSpec, make_axis, wavelength_to_frequency


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise ValueError("must be an unsigned 64-bit integer")
    return v


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


# key -> (parser, default); None default means optional/absent
SCHEMA: dict[str, tuple] = {
    "pump.center_thz": (float, None),
    "pump.center_nm": (float, None),
    "pump.sigma_thz": (float, 0.042),
    "pump.peak_power_w": (float, 0.0),
    "pump.average_power_mw": (float, None),
    "pump.repetition_rate_mhz": (float, None),
    "medium.length_m": (float, 30.0),
    "medium.gamma_per_w_km": (float, 0.0),
    "medium.reference_thz": (float, None),
    "medium.beta2_ps2_per_km": (float, 0.0),
    "medium.beta3_ps3_per_km": (float, 0.0),
    "medium.beta4_ps4_per_km": (float, 0.0),
    "model.simplified": (_bool, True),
    "model.compensate": (_bool, False),
    "grid.margin_thz": (float, 0.252),
    "grid.count": (int, 201),
    "grid.profile_step_thz": (float, 0.0005),
    "loss.eta": (float, 0.6),
    "analysis.gain": (float, 1.0),
    "analysis.filter_width_ghz": (float, 200.0),
    "analysis.use_filter": (_bool, True),
    "g2curve.eta_step": (float, 0.05),
    "g2curve.extra_eta": (_float_list, [0.6, 0.85, 1.0]),
    "scan.filter_width_nm": (float, 0.2),
    "scan.signal_start_nm": (float, 1552.6),
    "scan.signal_end_nm": (float, 1555.6),
    "scan.idler_start_nm": (float, 1543.0),
    "scan.idler_end_nm": (float, 1546.0),
    "scan.step_nm": (float, 0.2),
    "scan.pulses_per_point": (int, None),
    "scan.brightness": (float, 1.0),
    "scan.detection_efficiency": (float, 1.0),
    "scan.noiseless": (_bool, False),
    "hbt.pulses": (int, 10**6),
    "hbt.mean_photons": (float, 0.5),
    "hbt.detection_efficiency": (float, 1.0),
    "slm.columns": (int, 1920),
    "slm.rows": (int, 1080),
    "slm.wavelength_at_column_0_nm": (float, 1561.0),
    "slm.nm_per_column": (float, -0.011),
    "slm.phase_full_scale_rad": (float, None),
    "output.dir": (str, "out"),
    "seed": (_u64, 0),
}

CHANNEL_KEYS: dict[str, tuple] = {
    "signal_thz": (float, None),
    "signal_nm": (float, None),
    "idler_thz": (float, None),
    "a_thz": (float, None),
    "a_signal_thz": (float, None),
    "a_idler_thz": (float, None),
    "half_width_thz": (float, None),
    "reversed": (_bool, False),
}
_CHANNEL_RE = re.compile(r"^channel\.(\d+)\.([a-z_0-9]+)$")


@dataclass
class RunConfig:
    pump: PumpSpec
    medium: MediumSpec
    channels: list[ChannelSpec]
    grid_margin: float
    grid_count: int
    profile_step: float
    simplified: bool
    compensate: bool
    eta: float
    gain: float
    filter_width: float | None  # THz, None disables the g2 windows
    g2_eta_step: float
    g2_extra_eta: list[float]
    scan: ScanConfig
    hbt_pulses: int
    hbt_mean_photons: float
    hbt_efficiency: float
    calibration: SLMCalibration
    output_dir: Path
    seed: int
    source: str = ""
    raw: dict = field(default_factory=dict)

    # --- derived geometry -------------------------------------------------
    def signal_axis(self) -> FrequencyAxis:
        return self._axis([c.signal_center for c in self.channels])

    def idler_axis(self) -> FrequencyAxis:
        return self._axis([c.idler_center for c in self.channels])

    def _axis(self, centers) -> FrequencyAxis:
        lo, hi = min(centers), max(centers)
        return make_axis(0.5 * (lo + hi), 0.5 * (hi - lo) + self.grid_margin, self.grid_count)

    def profile_axis(self) -> FrequencyAxis:
        bands = layout_bands(self.pump, self.channels)
        sa, ia = self.signal_axis(), self.idler_axis()
        lo = min([sa.start, ia.start] + [b.lo for b in bands])
        hi = max([sa.stop, ia.stop] + [b.hi for b in bands])
        step = self.profile_step
        lo -= 2 * step
        count = int((hi + 2 * step - lo) / step) + 2
        return FrequencyAxis(lo, step, count)

    def windows(self, channel: int = 0) -> DualBandWindows | None:
        if self.filter_width is None:
            return None
        ch = self.channels[channel]
        return DualBandWindows.centered(ch.signal_center, ch.idler_center, self.filter_width)


def parse_text(text: str, source: str = "<string>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        out[key] = value
    return out


def bundled_configs() -> list[str]:
    return sorted(p.name for p in resources.files("nlipair.configs").iterdir() if p.name.endswith(".cfg"))


def resolve_config_path(name: str) -> Path | None:
    p = Path(name)
    if p.is_file():
        return p
    if name in bundled_configs():
        return Path(str(resources.files("nlipair.configs").joinpath(name)))
    return None


def load_config(path_or_name: str) -> RunConfig:
    path = resolve_config_path(path_or_name)
    if path is None:
        raise FileNotFoundError(f"config file not found: {path_or_name}")
    return build_config(parse_text(path.read_text(), str(path)), str(path))


def build_config(raw: dict[str, str], source: str = "<string>") -> RunConfig:
    vals: dict[str, object] = {}
    chans: dict[int, dict[str, object]] = {}
    for key, text in raw.items():
        m = _CHANNEL_RE.match(key)
        if m:
            idx, sub = int(m.group(1)), m.group(2)
            if sub not in CHANNEL_KEYS:
                raise ConfigError(f"{source}: unknown key '{key}'")
            parser = CHANNEL_KEYS[sub][0]
            target = chans.setdefault(idx, {})
        elif key in SCHEMA:
            parser, sub, target = SCHEMA[key][0], key, vals
        else:
            raise ConfigError(f"{source}: unknown key '{key}'")
        try:
            target[sub] = parser(text)
        except ValueError as exc:
            raise ConfigError(f"{source}: bad value for '{key}': {exc}") from None

    def get(key):
        return vals.get(key, SCHEMA[key][1])

    try:
        if get("pump.center_thz") is not None and get("pump.center_nm") is not None:
            raise ConfigError("give only one of pump.center_thz / pump.center_nm")
        if get("pump.center_thz") is not None:
            center = get("pump.center_thz")
        elif get("pump.center_nm") is not None:
            center = wavelength_to_frequency(get("pump.center_nm"))
        else:
            raise ConfigError("missing pump.center_thz (or pump.center_nm)")
        pump = PumpSpec(center, get("pump.sigma_thz"), get("pump.peak_power_w"),
                        get("pump.average_power_mw"), get("pump.repetition_rate_mhz"))
        ref = get("medium.reference_thz")
        medium = MediumSpec(
            length=get("medium.length_m"),
            gamma=get("medium.gamma_per_w_km"),
            reference_frequency=center if ref is None else ref,
            beta2=get("medium.beta2_ps2_per_km"),
            beta3=get("medium.beta3_ps3_per_km"),
            beta4=get("medium.beta4_ps4_per_km"),
        )
        if not chans:
            raise ConfigError(f"{source}: no channels defined (need channel.1.signal_thz ...)")
        if sorted(chans) != list(range(1, len(chans) + 1)):
            raise ConfigError(f"{source}: channels must be numbered 1..N, got {sorted(chans)}")
        channels = [_channel(chans[k], k, pump) for k in sorted(chans)]
        layout_bands(pump, channels)

        eta = get("loss.eta")
        if not 0 <= eta <= 1:
            raise ConfigError("loss.eta must lie in [0, 1]")
        if get("grid.count") % 2 == 0 or get("grid.count") < 3:
            raise ConfigError("grid.count must be odd and >= 3")
        if not get("g2curve.eta_step") > 0:
            raise ConfigError("g2curve.eta_step must be positive")
        eff = get("scan.detection_efficiency")
        scan = ScanConfig(
            filter_full_width=get("scan.filter_width_nm"),
            signal_range=(get("scan.signal_start_nm"), get("scan.signal_end_nm")),
            idler_range=(get("scan.idler_start_nm"), get("scan.idler_end_nm")),
            step=get("scan.step_nm"),
            pulses_per_point=get("scan.pulses_per_point"),
            seed=get("seed"),
            noiseless=get("scan.noiseless") or get("scan.pulses_per_point") is None,
            brightness=get("scan.brightness"),
            detection_efficiency=(eff, eff),
        )
        fs = get("slm.phase_full_scale_rad")
        calib_kw = dict(
            columns=get("slm.columns"),
            rows=get("slm.rows"),
            wavelength_at_column_0=get("slm.wavelength_at_column_0_nm"),
            nm_per_column=get("slm.nm_per_column"),
        )
        if fs is not None:
            calib_kw["phase_full_scale"] = fs
        calibration = SLMCalibration(**calib_kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None

    return RunConfig(
        pump=pump,
        medium=medium,
        channels=channels,
        grid_margin=get("grid.margin_thz"),
        grid_count=get("grid.count"),
        profile_step=get("grid.profile_step_thz"),
        simplified=get("model.simplified"),
        compensate=get("model.compensate"),
        eta=eta,
        gain=get("analysis.gain"),
        filter_width=get("analysis.filter_width_ghz") / 1000.0 if get("analysis.use_filter") else None,
        g2_eta_step=get("g2curve.eta_step"),
        g2_extra_eta=get("g2curve.extra_eta"),
        scan=scan,
        hbt_pulses=get("hbt.pulses"),
        hbt_mean_photons=get("hbt.mean_photons"),
        hbt_efficiency=get("hbt.detection_efficiency"),
        calibration=calibration,
        output_dir=Path(get("output.dir")),
        seed=get("seed"),
        source=source,
        raw=dict(raw),
    )


def _channel(d: dict, k: int, pump: PumpSpec) -> ChannelSpec:
    if "signal_thz" in d and "signal_nm" in d:
        raise ConfigError(f"channel {k}: give only one of signal_thz / signal_nm")
    if "signal_thz" in d:
        sig = d["signal_thz"]
    elif "signal_nm" in d:
        sig = wavelength_to_frequency(d["signal_nm"])
    else:
        raise ConfigError(f"channel {k}: missing signal_thz")
    idl = d.get("idler_thz", 2.0 * pump.center_frequency - sig)
    a = d.get("a_thz")
    a_s = d.get("a_signal_thz", a)
    a_i = d.get("a_idler_thz", a)
    if a_s is None or a_i is None:
        raise ConfigError(f"channel {k}: missing a_thz (or a_signal_thz / a_idler_thz)")
    return ChannelSpec(sig, idl, a_s, a_i, d.get("half_width_thz"), d.get("reversed", False))
