"""Plane-wave reflection and transmission of planar layer stacks.

Wave vectors are parameterized by ``s = k_par / k_1`` where ``k_1`` is the
wavenumber in the emitter medium. Normal components use the branch with
Im(k_z) >= 0 (and Re(k_z) >= 0 on the real axis) everywhere.

Polarization conventions: ``r_s``/``t_s`` are ratios of tangential electric
field; ``r_p``/``t_p`` are ratios of tangential magnetic field. With this
choice a perfect conductor gives r_s = -1 and r_p = +1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .materials import VACUUM, Material

Polarization = Literal["s", "p"]


class StackError(ValueError):
    pass


@dataclass(frozen=True)
class HalfSpaceStack:
    """Finite layers ordered from the emitter outward, then a semi-infinite terminal.

    ``medium`` is the (semi-infinite) medium on the emitter side of the first
    interface.
    """

    layers: tuple[tuple[Material, float], ...] = ()
    terminal: Material = VACUUM
    medium: Material = field(default=VACUUM)

    def __post_init__(self):
        layers = tuple((m, float(t)) for m, t in self.layers)
        for mat, t in layers:
            if not t > 0:
                raise StackError(f"layer {mat.name}: thickness must be > 0, got {t}")
        object.__setattr__(self, "layers", layers)

    @property
    def trivial(self) -> bool:
        return not self.layers and self.terminal == self.medium

    def indices(self, wavelength: float) -> list[complex]:
        """Indices from the emitter medium through the terminal."""
        return (
            [self.medium.index(wavelength)]
            + [m.index(wavelength) for m, _ in self.layers]
            + [self.terminal.index(wavelength)]
        )


def mirror(material: Material, medium: Material = VACUUM) -> HalfSpaceStack:
    """Semi-infinite half space of ``material`` (e.g. a thick metal film)."""
    return HalfSpaceStack((), material, medium)


@dataclass(frozen=True)
class PlaneWaveQuery:
    polarization: Polarization
    s_par: float | np.ndarray
    wavelength: float
    emitter_medium: Material = VACUUM

    def __post_init__(self):
        if self.polarization not in ("s", "p"):
            raise StackError(f"polarization must be 's' or 'p', got {self.polarization!r}")
        if not self.wavelength > 0:
            raise StackError("wavelength must be > 0")
        if np.any(np.asarray(self.s_par) < 0):
            raise StackError("s_par must be >= 0")


def kz(n, n1, s, k0=1.0):
    """Normal wavevector component ``k0*sqrt(n^2 - n1^2 s^2)`` on the decaying branch."""
    q = np.sqrt(np.asarray(n, dtype=complex) ** 2 - (n1 * np.asarray(s)) ** 2 + 0j)
    q = np.where(q.imag < 0, -q, q)
    return k0 * q


def _admittance(pol, n, q):
    # q is the normal component; for p the tangential-H formulation needs q / n^2
    return q if pol == "s" else q / n**2


def _fresnel(pol, ni, nj, qi, qj):
    yi, yj = _admittance(pol, ni, qi), _admittance(pol, nj, qj)
    r = (yi - yj) / (yi + yj)
    t = 2 * yi / (yi + yj)
    return r, t


def interface_coefficients(query: PlaneWaveQuery, n_i: complex, n_j: complex):
    """Single-interface Fresnel (r, t) going from index ``n_i`` into ``n_j``."""
    n1 = query.emitter_medium.index(query.wavelength)
    s = np.asarray(query.s_par, dtype=float)
    qi, qj = kz(n_i, n1, s), kz(n_j, n1, s)
    with np.errstate(invalid="ignore", divide="ignore"):
        r, t = _fresnel(query.polarization, n_i, n_j, qi, qj)
    same = n_i == n_j
    if same:
        r, t = np.zeros_like(r), np.ones_like(t)
    if r.ndim == 0:
        return complex(r), complex(t)
    return r, t


def stack_rt(stack: HalfSpaceStack, pol: Polarization, s, wavelength: float):
    """Vectorized amplitude (r, t) of ``stack`` seen from its emitter-side medium.

    Composition runs from the terminal inward with Airy recursion, which stays
    bounded for thick absorbing layers and strongly evanescent waves.
    """
    s = np.asarray(s, dtype=float)
    ns = stack.indices(wavelength)
    n1 = ns[0]
    k0 = 2 * np.pi / wavelength
    qs = [kz(n, n1, s, k0) for n in ns]

    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        r, t = _fresnel(pol, ns[-2], ns[-1], qs[-2], qs[-1])
        if ns[-2] == ns[-1]:
            r, t = np.zeros_like(r), np.ones_like(t)
        for j in range(len(ns) - 2, 0, -1):
            thickness = stack.layers[j - 1][1]
            phase = np.exp(1j * qs[j] * thickness)
            rij, tij = _fresnel(pol, ns[j - 1], ns[j], qs[j - 1], qs[j])
            if ns[j - 1] == ns[j]:
                rij, tij = np.zeros_like(rij), np.ones_like(tij)
            denom = 1 + rij * r * phase**2
            r, t = (rij + r * phase**2) / denom, tij * t * phase / denom
    return r, t


def stack_reflection(stack: HalfSpaceStack, query: PlaneWaveQuery):
    """Amplitude reflection and transmission of ``stack`` for ``query``."""
    if query.emitter_medium != stack.medium:
        raise StackError(
            f"query emitter medium {query.emitter_medium.name!r} does not match "
            f"stack medium {stack.medium.name!r}"
        )
    r, t = stack_rt(stack, query.polarization, query.s_par, query.wavelength)
    if np.ndim(r) == 0:
        return complex(r), complex(t)
    return r, t


def flux_factor(pol: Polarization, n_in, n_out, s, n1=None):
    """Factor converting |t|^2 into transmitted power flux (propagating waves)."""
    n1 = n_in if n1 is None else n1
    qi, qj = kz(n_in, n1, s), kz(n_out, n1, s)
    yi, yj = _admittance(pol, n_in, qi), _admittance(pol, n_out, qj)
    return np.real(yj) / np.real(yi)


def subdivide(stack: HalfSpaceStack, index: int, fraction: float = 0.5) -> HalfSpaceStack:
    """Split one layer into two sublayers of the same material."""
    layers: list[tuple[Material, float]] = list(stack.layers)
    mat, t = layers[index]
    layers[index : index + 1] = [(mat, t * fraction), (mat, t * (1 - fraction))]
    return HalfSpaceStack(tuple(layers), stack.terminal, stack.medium)


def build_stack(layers: Sequence[tuple[Material, float]], terminal: Material, medium: Material = VACUUM):
    return HalfSpaceStack(tuple(layers), terminal, medium)
