"""Spectrally programmable photon-pair source: phase design, JSF model, analysis and export."""

from .analysis import (
    ChannelDecomposition,
    DualBandWindows,
    SchmidtResult,
    decompose_channels,
    g2_signal,
    heralding_efficiency,
    pearson_correlation,
    schmidt_decompose,
)
from .measure import ScanConfig, ScanResult, hbt_g2_sim, joint_spectral_scan
from .model import (
    JSF,
    InterferenceMap,
    TwoPhotonStateWeights,
    interference_map,
    lossy_state_weights,
    nli_jsf,
    single_piece_jsf,
    wavevector_mismatch,
)
from .phase import (
    ChannelSpec,
    PhaseProfile,
    build_phase_profile,
    delta_phi,
    dispersion_compensation,
    pump_side,
    u_series,
)
from .slm import GrayPattern, SLMCalibration, export_pgm, import_pgm, pattern_to_phase, phase_to_pattern
from .units import (
    FrequencyAxis,
    MediumSpec,
    PumpSpec,
    frequency_to_wavelength,
    make_axis,
    wavelength_to_frequency,
)

__version__ = "0.1.0"
