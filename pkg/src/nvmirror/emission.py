"""Dipole emission between two planar half-space stacks.

The emitter sits in a homogeneous gap: ``d`` nm above the lower stack
(substrate side) and ``D`` nm below the upper stack (mirror side). All rates
are in units of the free-space decay rate in the emitter medium.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy.integrate import trapezoid

from .materials import VACUUM, Material
from .optics import HalfSpaceStack, kz, stack_rt
from .quadrature import QuadratureError, gk_adaptive

Hemisphere = Literal["lower", "upper"]

# Clustered breakpoints (in s) resolving the metal surface-plasmon pole just above s = 1.
_PLASMON_BREAKS = (1.005, 1.01, 1.02, 1.03, 1.04, 1.06, 1.1, 1.2, 1.5, 2.0)


class EmissionError(ValueError):
    pass


@dataclass(frozen=True)
class EmitterGeometry:
    d: float
    D: float | None = None
    emitter_medium: Material = VACUUM

    def __post_init__(self):
        if not self.d > 0:
            raise EmissionError(f"d must be > 0, got {self.d}")
        if self.D is not None and not self.D > 0:
            raise EmissionError(f"D must be > 0 or None, got {self.D}")


@dataclass(frozen=True)
class DipoleOrientation:
    tilt: float

    def __post_init__(self):
        if not 0 <= self.tilt <= math.pi / 2 + 1e-15:
            raise EmissionError(f"tilt must lie in [0, pi/2], got {self.tilt}")

    @property
    def weights(self) -> tuple[float, float]:
        """(perpendicular, parallel) weights cos^2 and sin^2 of the tilt."""
        return math.cos(self.tilt) ** 2, math.sin(self.tilt) ** 2


VERTICAL = DipoleOrientation(0.0)
HORIZONTAL = DipoleOrientation(math.pi / 2)


@dataclass(frozen=True)
class EmissionModel:
    wavelength: float = 700.0
    quantum_efficiency: float = 1.0

    def __post_init__(self):
        if not self.wavelength > 0:
            raise EmissionError("wavelength must be > 0")
        if not 0 < self.quantum_efficiency <= 1:
            raise EmissionError("quantum_efficiency must lie in (0, 1]")


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    damping: float = 1e-14
    s_cap: float = 50.0
    max_intervals: int = 4000

    def __post_init__(self):
        if not 0 < self.rel_tol <= 1e-3:
            raise EmissionError("rel_tol must lie in (0, 1e-3]")
        if self.max_intervals < 1:
            raise EmissionError("max_intervals must be positive")


@dataclass(frozen=True)
class DecayResult:
    gamma_rel: float
    gamma_rad_lower: float
    gamma_rad_upper: float
    gamma_nonrad: float
    quadrature_error: float
    gamma_perp: float
    gamma_par: float
    truncation_warning: bool = False

    @property
    def gamma_rad(self) -> float:
        return self.gamma_rad_lower + self.gamma_rad_upper


@dataclass(frozen=True)
class AngularPattern:
    """Azimuthally averaged far-field power per steradian in a terminal medium.

    ``weight`` is ``2*pi*sin(theta)*dP/dOmega`` (power per unit exit angle).
    """

    hemisphere: Hemisphere
    theta: np.ndarray
    dp_domega: np.ndarray
    weight: np.ndarray
    wavelength: float
    orientation: DipoleOrientation
    no_far_field: bool = False
    terminal_index: float = 1.0

    @property
    def samples(self):
        return list(zip(self.theta.tolist(), self.dp_domega.tolist(), self.weight.tolist()))


def _trivial(medium: Material) -> HalfSpaceStack:
    return HalfSpaceStack((), medium, medium)


class _Cavity:
    """Reflection data of the emitter gap, vectorized over s = k_par/k_1."""

    def __init__(self, geom, model, lower, upper):
        lam = model.wavelength
        self.geom = geom
        self.wavelength = lam
        self.n1 = geom.emitter_medium.index(lam)
        if self.n1.imag != 0:
            raise EmissionError("emitter medium must be lossless")
        self.k1 = 2 * math.pi / lam * self.n1.real
        lower = lower if lower is not None else _trivial(geom.emitter_medium)
        if geom.D is None or upper is None:
            upper = _trivial(geom.emitter_medium)
        for st in (lower, upper):
            if st.medium != geom.emitter_medium:
                raise EmissionError(
                    f"stack medium {st.medium.name!r} differs from emitter medium "
                    f"{geom.emitter_medium.name!r}"
                )
        self.lower, self.upper = lower, upper
        self.dist = {"lower": geom.d, "upper": geom.D if geom.D is not None else math.inf}
        self.stack = {"lower": lower, "upper": upper}

    def l1(self, s):
        return kz(self.n1, self.n1, s) / self.n1

    def a(self, side, pol, s, l1=None):
        """Round-trip factor r * exp(2i k1 l1 dist); zero for a trivial side."""
        st = self.stack[side]
        if st.trivial:
            return np.zeros(np.shape(s), complex), np.ones(np.shape(s), complex)
        r, t = stack_rt(st, pol, s, self.wavelength)
        l1 = self.l1(s) if l1 is None else l1
        return r * np.exp(2j * self.k1 * l1 * self.dist[side]), t

    def lossy(self, side):
        st = self.stack[side]
        mats = [m for m, _ in st.layers] + [st.terminal]
        return any(m.index(self.wavelength).imag > 0 for m in mats)

    @property
    def min_distance(self):
        dists = [self.dist[k] for k in ("lower", "upper") if not self.stack[k].trivial]
        return min(dists) if dists else math.inf


def _s_max(cav: _Cavity, quad: QuadratureSpec):
    """Upper integration limit in s, and whether the cap cut off absorbed power."""
    dmin = cav.min_distance
    if math.isinf(dmin):
        return 1.0, False
    root = math.log(1 / quad.damping) / (2 * cav.k1 * dmin)
    s_max = min(max(math.sqrt(1 + root * root), 2.5), quad.s_cap)
    # past every terminal index a lossless stack has |r| = 1 and real round-trip
    # factors, so only an absorbing side can lose power beyond the cap
    kappa = math.sqrt(s_max**2 - 1)
    truncated = s_max >= quad.s_cap and any(
        cav.lossy(side) and math.exp(-2 * cav.k1 * kappa * cav.dist[side]) > quad.damping
        for side in ("lower", "upper")
        if not cav.stack[side].trivial
    )
    return s_max, truncated


def _decay_integrands(cav: _Cavity):
    """Reflected-field parts of the decay integrands, as functions of s.

    Returns f(s) -> (3, N) array: perpendicular, parallel-s, parallel-p terms
    with the free-space part removed (it integrates to exactly 1 analytically).
    """

    def f(s, l1):
        ap_u, _ = cav.a("upper", "p", s, l1)
        ap_l, _ = cav.a("lower", "p", s, l1)
        as_u, _ = cav.a("upper", "s", s, l1)
        as_l, _ = cav.a("lower", "s", s, l1)
        den_p = 1 - ap_u * ap_l
        den_s = 1 - as_u * as_l
        perp = (ap_u + ap_l + 2 * ap_u * ap_l) / den_p
        par_s = (as_u + as_l + 2 * as_u * as_l) / den_s
        par_p = (-ap_u - ap_l + 2 * ap_u * ap_l) / den_p
        return perp, par_s, par_p

    def below(u):
        # s = sin(u): ds = l1 du removes the 1/l1 edge singularity
        s, l1 = np.sin(u), np.cos(u) + 0j
        perp, par_s, par_p = f(s, l1)
        return np.vstack([
            1.5 * np.real(s**3 * perp),
            0.75 * np.real(s * par_s),
            0.75 * np.real(s * (1 - s**2) * par_p),
        ])

    def above(v):
        # s = cosh(v): ds = |l1| dv, and 1/l1 = -i/|l1|
        s, sh = np.cosh(v), np.sinh(v)
        perp, par_s, par_p = f(s, 1j * sh)
        return np.vstack([
            1.5 * np.imag(s**3 * perp),
            0.75 * np.imag(s * par_s),
            0.75 * np.imag(-s * sh**2 * par_p),
        ])

    return below, above


def _v_breaks(s_max):
    pts = [0.0] + [math.acosh(b) for b in _PLASMON_BREAKS if b < s_max] + [math.acosh(s_max)]
    return pts


def _decay_components(cav, quad):
    below, above = _decay_integrands(cav)
    res_b = gk_adaptive(below, [0.0, math.pi / 4, math.pi / 2], rel_tol=quad.rel_tol, abs_tol=quad.rel_tol * 0.1,
                        max_intervals=quad.max_intervals, initial_split=2)
    s_max, truncated = _s_max(cav, quad)
    vals = res_b.value.copy()
    errs = res_b.error.copy()
    converged = res_b.converged
    if s_max > 1:
        res_a = gk_adaptive(above, _v_breaks(s_max), rel_tol=quad.rel_tol, abs_tol=quad.rel_tol * 0.1,
                            max_intervals=quad.max_intervals, initial_split=2)
        vals += res_a.value
        errs += res_a.error
        converged &= res_a.converged
    perp = 1 + vals[0]
    par = 1 + vals[1] + vals[2]
    err = max(errs[0], errs[1] + errs[2])
    if not converged and err > 10 * quad.rel_tol * max(abs(perp), abs(par), 1.0):
        raise QuadratureError(f"decay-rate quadrature did not converge (error estimate {err:.3g})")
    return perp, par, err, truncated


# ---------------------------------------------------------------- far field


def _terminal_index(cav, hemisphere):
    return cav.stack[hemisphere].terminal.index(cav.wavelength)


def _pattern_parts(cav: _Cavity, hemisphere: Hemisphere, s):
    """(vertical, horizontal) dP/dOmega at in-plane wavenumbers ``s`` (exit medium real)."""
    other = "upper" if hemisphere == "lower" else "lower"
    n1 = cav.n1.real
    nm = _terminal_index(cav, hemisphere).real
    l1 = cav.l1(s)
    q1 = n1 * l1
    qm = kz(nm, n1, s)

    ap_h, tp = cav.a(hemisphere, "p", s, l1)
    ap_o, _ = cav.a(other, "p", s, l1)
    as_h, ts = cav.a(hemisphere, "s", s, l1)
    as_o, _ = cav.a(other, "s", s, l1)
    tp_e = tp * n1 / nm
    if cav.stack[hemisphere].trivial:
        prop = 1.0
    else:
        prop = np.abs(np.exp(1j * cav.k1 * l1 * cav.dist[hemisphere])) ** 2
    base = (3 / (8 * math.pi)) * (nm / n1) * np.abs(qm) ** 2 / np.abs(q1) ** 2 * prop

    cav_pv = np.abs((1 + ap_o) / (1 - ap_h * ap_o)) ** 2
    cav_ph = np.abs((1 - ap_o) / (1 - ap_h * ap_o)) ** 2
    cav_s = np.abs((1 + as_o) / (1 - as_h * as_o)) ** 2
    vert = base * np.abs(tp_e) ** 2 * cav_pv * s**2
    horiz = base * 0.5 * (np.abs(ts) ** 2 * cav_s + np.abs(tp_e) ** 2 * cav_ph * np.abs(l1) ** 2)
    return vert, horiz


def _nudge(s):
    # exactly s = 1 is a removable 0/0 point of the transmitted amplitudes
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s - 1) < 1e-12, 1 - 1e-12, s)


def _pattern_at_theta(cav, hemisphere, theta):
    nm = _terminal_index(cav, hemisphere).real
    s = _nudge(nm * np.sin(theta) / cav.n1.real)
    return _pattern_parts(cav, hemisphere, s)


def _has_far_field(cav, hemisphere):
    return _terminal_index(cav, hemisphere).imag == 0


def _hemisphere_power(cav, hemisphere, theta_hi, rel_tol):
    """Integrated (vertical, horizontal) far-field power for exit angles [0, theta_hi]."""
    if not _has_far_field(cav, hemisphere) or theta_hi <= 0:
        return np.zeros(2), np.zeros(2)
    nm = _terminal_index(cav, hemisphere).real
    n1 = cav.n1.real
    ratio = n1 / nm
    theta_c = math.asin(ratio) if ratio < 1 else math.pi / 2
    theta_hi = min(theta_hi, math.pi / 2)

    def integrand(theta, dtheta):
        v, h = _pattern_at_theta(cav, hemisphere, theta)
        w = 2 * math.pi * np.sin(theta) * dtheta
        return np.vstack([v * w, h * w])

    total = np.zeros(2)
    err = np.zeros(2)
    # quadratic clustering toward theta_c removes the square-root kink there
    lo = min(theta_hi, theta_c)
    if lo == theta_c:
        def below(w):
            return integrand(theta_c * (1 - w**2), 2 * theta_c * w)
    else:
        def below(w):
            return integrand(lo * w, lo)
    seg = gk_adaptive(below, [0.0, 0.5, 1.0], rel_tol=rel_tol, abs_tol=rel_tol * 1e-2)
    total += seg.value
    err += seg.error
    if theta_hi > theta_c:
        span = theta_hi - theta_c
        seg = gk_adaptive(
            lambda w: integrand(theta_c + span * w**2, 2 * span * w),
            [0.0, 0.25, 0.5, 1.0], rel_tol=rel_tol, abs_tol=rel_tol * 1e-2,
        )
        total += seg.value
        err += seg.error
    return total, err


def _orient_mix(orient, pair):
    wv, wh = orient.weights
    return wv * pair[0] + wh * pair[1]


# ---------------------------------------------------------------- public API


def relative_decay_rate(
    geom: EmitterGeometry,
    orient: DipoleOrientation,
    model: EmissionModel = EmissionModel(),
    lower: HalfSpaceStack | None = None,
    upper: HalfSpaceStack | None = None,
    quad: QuadratureSpec = QuadratureSpec(),
) -> DecayResult:
    """Total decay rate Gamma/Gamma_0 with its radiative / absorbed split."""
    cav = _Cavity(geom, model, lower, upper)
    perp, par, err, truncated = _decay_components(cav, quad)
    rad_l, err_l = _hemisphere_power(cav, "lower", math.pi / 2, quad.rel_tol)
    rad_u, err_u = _hemisphere_power(cav, "upper", math.pi / 2, quad.rel_tol)
    wv, wh = orient.weights
    total = wv * perp + wh * par
    lower_rad = _orient_mix(orient, rad_l)
    upper_rad = _orient_mix(orient, rad_u)
    nonrad = max(total - lower_rad - upper_rad, 0.0)
    q = model.quantum_efficiency
    warn = truncated or cav.min_distance < 1.0
    if warn:
        warnings.warn("emitter within 1 nm of an interface or s-range truncated; "
                      "evanescent contribution may be underestimated", RuntimeWarning, stacklevel=2)
    return DecayResult(
        gamma_rel=(1 - q) + q * total,
        gamma_rad_lower=lower_rad,
        gamma_rad_upper=upper_rad,
        gamma_nonrad=nonrad,
        quadrature_error=err + float(_orient_mix(orient, err_l + err_u)),
        gamma_perp=(1 - q) + q * perp,
        gamma_par=(1 - q) + q * par,
        truncation_warning=warn,
    )


def far_field_pattern(
    geom: EmitterGeometry,
    orient: DipoleOrientation,
    model: EmissionModel = EmissionModel(),
    lower: HalfSpaceStack | None = None,
    upper: HalfSpaceStack | None = None,
    hemisphere: Hemisphere = "lower",
    theta_grid=None,
) -> AngularPattern:
    """Far-field dP/dOmega (units of Gamma_0 per sr) versus exit angle in the terminal medium."""
    if hemisphere not in ("lower", "upper"):
        raise EmissionError(f"hemisphere must be 'lower' or 'upper', got {hemisphere!r}")
    if theta_grid is None:
        theta_grid = default_theta_grid()
    theta = np.asarray(theta_grid, dtype=float)
    if theta.ndim != 1 or np.any(theta < 0) or np.any(theta >= math.pi / 2):
        raise EmissionError("theta_grid must lie in [0, pi/2)")
    if np.any(np.diff(theta) <= 0):
        raise EmissionError("theta_grid must be strictly increasing")
    cav = _Cavity(geom, model, lower, upper)
    n_term = _terminal_index(cav, hemisphere)
    if n_term.imag != 0:
        zeros = np.zeros_like(theta)
        return AngularPattern(hemisphere, theta, zeros, zeros.copy(), model.wavelength, orient, True, float(abs(n_term)))
    v, h = _pattern_at_theta(cav, hemisphere, theta)
    p = _orient_mix(orient, (v, h))
    return AngularPattern(hemisphere, theta, p, 2 * math.pi * np.sin(theta) * p, model.wavelength, orient,
                          False, float(n_term.real))


def default_theta_grid(n: int = 2001) -> np.ndarray:
    return np.linspace(0, math.pi / 2, n, endpoint=False)


def integrate_pattern(pattern: AngularPattern, theta_max: float = math.pi / 2) -> float:
    """Power inside the cone theta < theta_max, from the sampled pattern (trapezoid rule)."""
    th, w = pattern.theta, pattern.weight
    if theta_max <= th[0]:
        return 0.0
    if theta_max < th[-1]:
        wmax = np.interp(theta_max, th, w)
        keep = th < theta_max
        th = np.append(th[keep], theta_max)
        w = np.append(w[keep], wmax)
    elif theta_max > th[-1]:
        # extend to theta_max; the pattern at grazing exit falls to zero in a denser medium
        th = np.append(th, theta_max)
        w = np.append(w, w[-1] if pattern.terminal_index <= 1.0 else 0.0)
    return float(trapezoid(w, th))


def collection_efficiency(lower_pattern: AngularPattern, decay: DecayResult, theta_max: float) -> float:
    """Fraction of far-field (radiated) power collected within ``theta_max`` below the emitter."""
    if lower_pattern.hemisphere != "lower":
        raise EmissionError("collection efficiency needs the lower-hemisphere pattern")
    if not 0 < theta_max < math.pi / 2:
        raise EmissionError("theta_max must lie in (0, pi/2)")
    radiated = decay.gamma_rad_lower + decay.gamma_rad_upper
    if radiated <= 0:
        raise EmissionError("no radiated power")
    return integrate_pattern(lower_pattern, theta_max) / radiated


def collected_power(geom, orient, model=EmissionModel(), lower=None, upper=None, theta_max=math.pi / 2,
                    rel_tol=1e-8) -> float:
    """Lower-hemisphere power within ``theta_max`` by adaptive quadrature (units of Gamma_0)."""
    cav = _Cavity(geom, model, lower, upper)
    val, _ = _hemisphere_power(cav, "lower", theta_max, rel_tol)
    return float(_orient_mix(orient, val))


@dataclass(frozen=True)
class CollectionResult:
    efficiency: float
    collected: float
    decay: DecayResult


def collection(geom, orient, model=EmissionModel(), lower=None, upper=None, theta_max=math.radians(73.5),
               quad: QuadratureSpec = QuadratureSpec()) -> CollectionResult:
    """Collection efficiency with the cone integral done by adaptive quadrature."""
    if not 0 < theta_max < math.pi / 2:
        raise EmissionError("theta_max must lie in (0, pi/2)")
    decay = relative_decay_rate(geom, orient, model, lower, upper, quad)
    radiated = decay.gamma_rad
    if radiated <= 0:
        raise EmissionError("no radiated power")
    got = collected_power(geom, orient, model, lower, upper, theta_max, quad.rel_tol)
    return CollectionResult(got / radiated, got, decay)


def geometric_factor(geom_with_mirror: EmitterGeometry, geom_without: EmitterGeometry, orient,
                     model=EmissionModel(), lower=None, upper=None, theta_max=math.radians(73.5),
                     quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Ratio of collection efficiencies with and without the upper stack."""
    if geom_with_mirror.D is None and geom_without.D is None:
        return 1.0
    with_m = collection(geom_with_mirror, orient, model, lower, upper, theta_max, quad).efficiency
    without = collection(geom_without, orient, model, lower, None, theta_max, quad).efficiency
    return with_m / without


@dataclass(frozen=True)
class Enhancement:
    total: float
    purcell: float
    geometric: float


def total_enhancement(geom: EmitterGeometry, orient: DipoleOrientation, model=EmissionModel(), lower=None,
                      upper=None, theta_max=math.radians(73.5), quad: QuadratureSpec = QuadratureSpec(),
                      radiative: bool = False, purcell_geometry: str = "mirror-only") -> Enhancement:
    """Purcell factor times geometric factor, both relative to D = infinity.

    The Purcell factor is taken from the emitter facing the upper stack alone
    (``purcell_geometry="mirror-only"``) or with the lower stack present as
    well (``"full"``). ``radiative=True`` uses radiated instead of total rates.
    """
    if purcell_geometry not in ("mirror-only", "full"):
        raise EmissionError(f"unknown purcell_geometry {purcell_geometry!r}")
    if geom.D is None:
        return Enhancement(1.0, 1.0, 1.0)
    free = replace(geom, D=None)
    with_m = collection(geom, orient, model, lower, upper, theta_max, quad)
    without = collection(free, orient, model, lower, None, theta_max, quad)
    if purcell_geometry == "full":
        dec_m, dec_0 = with_m.decay, without.decay
    else:
        dec_m = relative_decay_rate(geom, orient, model, None, upper, quad)
        dec_0 = relative_decay_rate(free, orient, model, None, None, quad)
    if radiative:
        purcell = dec_m.gamma_rad / dec_0.gamma_rad
    else:
        purcell = dec_m.gamma_rel / dec_0.gamma_rel
    geometric = with_m.efficiency / without.efficiency
    return Enhancement(purcell * geometric, purcell, geometric)
