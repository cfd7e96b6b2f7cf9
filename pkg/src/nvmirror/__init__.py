"""Dipole emission between a substrate and a movable metal mirror, plus the scan-analysis toolkit."""

from .emission import (
    HORIZONTAL,
    VERTICAL,
    AngularPattern,
    CollectionResult,
    DecayResult,
    DipoleOrientation,
    EmissionError,
    EmissionModel,
    EmitterGeometry,
    Enhancement,
    QuadratureSpec,
    collection,
    collection_efficiency,
    far_field_pattern,
    geometric_factor,
    integrate_pattern,
    relative_decay_rate,
    total_enhancement,
)
from .materials import DIAMOND, SILICA, SILVER_532, SILVER_700, VACUUM, Material, MaterialError, load_materials
from .optics import HalfSpaceStack, PlaneWaveQuery, StackError, build_stack, interface_coefficients, mirror, stack_reflection
from .pump import pump_modulation
from .quadrature import QuadratureError
from .scanmodel import BackgroundModel, EmitterParams, NoiseModel, ScanOptics, synth_scan
from .traces import G2Histogram, SaturationCurve, ScanTrace, TraceError, read_g2, read_saturation, read_trace

__version__ = "0.1.0"
