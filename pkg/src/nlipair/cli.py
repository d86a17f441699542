"""Command-line front end: ``nlipair <command> --config FILE``.

Commands: design, pattern, jsf, analyze, scan, g2curve.  ``--config`` also
accepts the name of a bundled config (``factorable.cfg``, ``wdm3.cfg`` ...).
Exit status: 0 ok, 1 computation failure, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analysis import decompose_channels, g2_signal, heralding_efficiency, pearson_correlation, schmidt_decompose, write_report
from .config import ConfigError, RunConfig, bundled_configs, load_config
from .measure import hbt_g2_sim, joint_spectral_scan, write_scan_csv
from .model import interference_map, lossy_state_weights, nli_jsf, single_piece_jsf, write_jsf_csv
from .phase import build_phase_profile, delta_phi, dispersion_compensation, write_band_map, write_profile_csv
from .slm import export_pgm, phase_to_pattern

log = logging.getLogger("nlipair")


# --- pipeline -------------------------------------------------------------

def design_profile(cfg: RunConfig):
    profile = build_phase_profile(cfg.profile_axis(), cfg.pump, cfg.channels)
    if cfg.compensate:
        profile = dispersion_compensation(profile, cfg.medium, cfg.pump)
    return profile


def compute_jsfs(cfg: RunConfig, threads: int = 1):
    profile = design_profile(cfg)
    sa, ia = cfg.signal_axis(), cfg.idler_axis()
    f_sp = single_piece_jsf(sa, ia, cfg.pump, cfg.medium, cfg.simplified, threads)
    imap = interference_map(sa, ia, profile, cfg.medium, cfg.pump, cfg.simplified, threads)
    return profile, f_sp, nli_jsf(f_sp, imap)


def eta_grid(cfg: RunConfig) -> np.ndarray:
    n = int(np.floor(1.0 / cfg.g2_eta_step + 1e-9))
    etas = np.concatenate([np.arange(n + 1) * cfg.g2_eta_step, [1.0], cfg.g2_extra_eta])
    etas = np.unique(np.round(etas[(etas >= 0) & (etas <= 1)], 12))
    return etas


# --- commands -------------------------------------------------------------

def cmd_design(cfg: RunConfig, args) -> None:
    out = cfg.output_dir
    profile = design_profile(cfg)
    write_profile_csv(profile, out / "profile.csv")
    write_band_map(profile, out / "bands.json")
    if not args.no_pattern:
        _write_pattern(cfg, profile)
    bands = sorted(profile.bands, key=lambda b: b.lo)
    print(f"islands: {len(cfg.channels)}")
    for b in bands:
        a = "" if b.a is None else f"  a = {b.a:.4f} THz"
        rev = "  reversed" if b.sign < 0 else ""
        print(f"{b.label:>8}: [{b.lo:.4f}, {b.hi:.4f}] THz{a}{rev}")
    ch = cfg.channels[0]
    spot = delta_phi(profile, ch.signal_center + ch.a_signal, ch.idler_center - ch.a_signal)
    print(f"dphi(ws0 + a, wi0 - a) = {float(spot):.6f} rad")
    print(f"wrote {out / 'profile.csv'}")


def _write_pattern(cfg: RunConfig, profile) -> None:
    pattern = phase_to_pattern(profile, cfg.calibration)
    export_pgm(pattern, cfg.output_dir / "pattern.pgm")
    (cfg.output_dir / "calibration.json").write_text(cfg.calibration.to_json())


def cmd_pattern(cfg: RunConfig, args) -> None:
    _write_pattern(cfg, design_profile(cfg))
    print(f"wrote {cfg.output_dir / 'pattern.pgm'}")


def cmd_jsf(cfg: RunConfig, args) -> None:
    _, f_sp, f_nli = compute_jsfs(cfg, args.threads)
    write_jsf_csv(f_nli, cfg.output_dir / "jsf.csv")
    write_jsf_csv(f_sp, cfg.output_dir / "jsf_single_piece.csv")
    print(f"wrote {cfg.output_dir / 'jsf.csv'} ({f_nli.amplitude.shape[0]}x{f_nli.amplitude.shape[1]})")


def cmd_analyze(cfg: RunConfig, args) -> None:
    _, f_sp, f_nli = compute_jsfs(cfg, args.threads)
    schmidt = schmidt_decompose(f_nli)
    r = pearson_correlation(f_nli)
    etas = eta_grid(cfg)
    win = cfg.windows()
    g2 = [g2_signal(f_sp, f_nli, float(e), win) for e in etas]
    her = [heralding_efficiency(lossy_state_weights(f_sp, f_nli, float(e), cfg.gain)) if e > 0 else None
           for e in etas]
    report = {
        "config": Path(cfg.source).name,
        "K": schmidt.K,
        "K_single_piece": schmidt_decompose(f_sp).K,
        "pearson_r": r,
        "eta": cfg.eta,
        "g2_at_eta": g2_signal(f_sp, f_nli, cfg.eta, win),
        "heralding_at_eta": heralding_efficiency(lossy_state_weights(f_sp, f_nli, cfg.eta, cfg.gain))
        if cfg.eta > 0 else None,
        "g2": {"eta": etas.tolist(), "value": g2},
        "heralding": {"eta": etas.tolist(), "value": her},
        "g2_filter_width_THz": cfg.filter_width,
        "g2_relation": "1 + Tr(Gamma^2)/Tr(Gamma)^2 (re-derived from the lossy two-photon state)",
    }
    print(f"K = {schmidt.K:.4f}")
    print(f"pearson r = {r:+.4f}")
    print(f"g2(eta={cfg.eta:g}) = {report['g2_at_eta']:.4f}")
    if cfg.eta > 0:
        hbt = hbt_g2_sim(f_sp, f_nli, cfg.eta, cfg.hbt_efficiency, cfg.hbt_pulses, cfg.seed,
                         cfg.hbt_mean_photons, win)
        report["hbt"] = {"g2": hbt.g2, "stderr": hbt.stderr, "pulses": hbt.pulses, "seed": cfg.seed,
                         "mean_photons": cfg.hbt_mean_photons, "detection_efficiency": cfg.hbt_efficiency}
        print(f"HBT g2 (simulated) = {hbt.g2:.4f} +/- {hbt.stderr:.4f}")
    if len(cfg.channels) > 1:
        dec = decompose_channels(f_nli, cfg.channels, cfg.pump)
        report["channels"] = [
            {"index": k + 1, "signal_THz": ch.signal_center, "idler_THz": ch.idler_center,
             "r": float(dec.r[k]), "K": float(dec.K[k]),
             "peak_signal_THz": dec.peaks[k][0], "peak_idler_THz": dec.peaks[k][1]}
            for k, ch in enumerate(cfg.channels)
        ]
        report["channel_residual"] = dec.residual
        for row in report["channels"]:
            print(f"channel {row['index']}: r = {row['r']:.4f}  K = {row['K']:.4f}  "
                  f"peak = ({row['peak_signal_THz']:.4f}, {row['peak_idler_THz']:.4f}) THz")
    write_report(report, cfg.output_dir / "report.json")
    print(f"wrote {cfg.output_dir / 'report.json'}")


def cmd_scan(cfg: RunConfig, args) -> None:
    _, f_sp, f_nli = compute_jsfs(cfg, args.threads)
    weights = lossy_state_weights(f_sp, f_nli, cfg.eta, cfg.gain)
    scan = cfg.scan
    if args.noiseless:
        scan = replace(scan, noiseless=True)
    result = joint_spectral_scan(f_nli, weights, scan, f_sp=f_sp)
    write_scan_csv(result, cfg.output_dir / "scan.csv")
    s, i = result.argmax()
    print(f"scan {result.true_coincidence.shape[0]}x{result.true_coincidence.shape[1]}, "
          f"peak at ({s:.2f}, {i:.2f}) nm")
    print(f"wrote {cfg.output_dir / 'scan.csv'}")


def cmd_g2curve(cfg: RunConfig, args) -> None:
    _, f_sp, f_nli = compute_jsfs(cfg, args.threads)
    win = cfg.windows()
    path = cfg.output_dir / "g2curve.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eta", "g2", "heralding"])
        for e in eta_grid(cfg):
            g = g2_signal(f_sp, f_nli, float(e), win)
            h = heralding_efficiency(lossy_state_weights(f_sp, f_nli, float(e), cfg.gain)) if e > 0 else float("nan")
            w.writerow([f"{e:.2f}", f"{g:.6f}", f"{h:.6f}"])
            if e in (0.6, 0.85, 1.0):
                print(f"g2(eta={e:.2f}) = {g:.4f}")
    print(f"wrote {path}")


COMMANDS = {
    "design": (cmd_design, "phase profile CSV, band map and SLM pattern"),
    "pattern": (cmd_pattern, "SLM gray-level pattern (PGM) only"),
    "jsf": (cmd_jsf, "joint spectral functions as CSV"),
    "analyze": (cmd_analyze, "Schmidt number, correlation, g2 and heralding report"),
    "scan": (cmd_scan, "simulated dual-band joint spectral scan"),
    "g2curve": (cmd_g2curve, "g2 and heralding efficiency versus transmission eta"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help=f"config file or bundled name ({', '.join(bundled_configs())})")
    common.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    common.add_argument("--seed", type=lambda s: int(s, 0), help="RNG seed, unsigned 64-bit (overrides seed)")
    common.add_argument("--noiseless", action="store_true", help="return expected counts instead of samples")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads (results do not depend on it)")

    p = argparse.ArgumentParser(prog="nlipair", description="Programmable photon-pair source designer/simulator")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name == "design":
            sp.add_argument("--no-pattern", action="store_true", help="skip the PGM pattern")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg.output_dir = args.out
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.seed = args.seed
            cfg.scan = replace(cfg.scan, seed=args.seed)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(cfg.output_dir / "run.log", mode="a")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    try:
        log.info("start %s config=%s seed=%d at %s", args.command, cfg.source, cfg.seed,
                 datetime.now(timezone.utc).isoformat())
        COMMANDS[args.command][0](cfg, args)
        log.info("done %s", args.command)
    except Exception as exc:  # noqa: BLE001 - any computation failure maps to exit 1
        log.exception("failed")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        log.removeHandler(handler)
        handler.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
