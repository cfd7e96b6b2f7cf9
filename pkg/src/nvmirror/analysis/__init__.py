from .fits import (
    ConvergenceError,
    FitError,
    G2Fit,
    OscillationFit,
    SaturationFit,
    fit_background_oscillation,
    fit_g2,
    fit_saturation,
    g2_model,
    oscillation_model,
    saturation_model,
)
from .scans import EnhancementResult, SnrMap, add_background, extract_enhancement, snr_map, subtract_background
from .spectra import PsdResult, SpectrumError, psd_peaks, psd_vs_inverse_k
