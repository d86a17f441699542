"""Shared test designs (simplified model, factorable island unless stated)."""
import numpy as np
from nlipair import ChannelSpec, FrequencyAxis, MediumSpec, PumpSpec, build_phase_profile, interference_map, nli_jsf, single_piece_jsf
from nlipair.model import jsf_axes
from nlipair.units import dsf_betas

SIGMA_P = 0.042
PUMP_THZ = 193.5
SIGNAL_THZ, IDLER_THZ = 192.9, 194.1
PROFILE_AXIS = FrequencyAxis(192.5, 0.0005, 4401)


def pump(power=0.0):
    return PumpSpec(PUMP_THZ, SIGMA_P, power)


def example_beta2():
    return dsf_betas(1548.5, 0.07, 1549.32)[0]


def design(a=SIGMA_P, half=None, count=201, channels=None, power=0.0):
    """F_SP, F_NLI and profile of a simplified-model single-island design."""
    p = pump(power)
    chans = channels or [ChannelSpec.symmetric(SIGNAL_THZ, IDLER_THZ, a)]
    sa, ia = jsf_axes(SIGNAL_THZ, IDLER_THZ, 6 * a if half is None else half, count)
    prof = build_phase_profile(PROFILE_AXIS, p, chans)
    f_sp = single_piece_jsf(sa, ia, p)
    return f_sp, nli_jsf(f_sp, interference_map(sa, ia, prof)), prof
