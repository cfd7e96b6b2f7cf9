"""Standing wave of the pump laser between substrate and mirror."""

from __future__ import annotations

import numpy as np

from .optics import HalfSpaceStack, stack_rt


def pump_modulation(z, D_mirror_substrate, pump_wavelength: float = 532.0,
                    mirror: HalfSpaceStack | None = None, substrate: HalfSpaceStack | None = None):
    """Relative pump intensity |E(z)|^2 / |E_0(z)|^2 at height ``z`` above the substrate.

    A normally incident plane wave enters the gap through the substrate and
    bounces between the substrate and the mirror a distance ``D_mirror_substrate``
    above it. ``E_0`` is the field at the same point without the mirror.
    Both stacks are seen from the gap medium.
    """
    z = np.asarray(z, dtype=float)
    L = np.asarray(D_mirror_substrate, dtype=float)
    if mirror is None or mirror.trivial:
        return np.ones(np.broadcast(z, L).shape)
    if np.any(z < 0) or np.any(z > L):
        raise ValueError("emitter must lie between the substrate (z = 0) and the mirror")
    n_gap = mirror.medium.index(pump_wavelength).real
    k = 2 * np.pi * n_gap / pump_wavelength
    r_m, _ = stack_rt(mirror, "s", 0.0, pump_wavelength)
    if substrate is None or substrate.trivial:
        r_sub = 0.0
    else:
        r_sub, _ = stack_rt(substrate, "s", 0.0, pump_wavelength)
    field = (1 + r_m * np.exp(2j * k * (L - z))) / (1 - r_sub * r_m * np.exp(2j * k * L))
    return np.abs(field) ** 2
