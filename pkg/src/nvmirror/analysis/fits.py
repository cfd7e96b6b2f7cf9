"""Least-squares fits: saturation curve, g2 antibunching, background standing wave.

Positive parameters are fitted through a softplus map so the residual surface
stays smooth; covariances are reported for the natural parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from ..traces import G2Histogram, ScanTrace

MAX_ITER = 200
XTOL = 1e-9


class FitError(RuntimeError):
    pass


class ConvergenceError(FitError):
    pass


def softplus(x):
    return np.logaddexp(0.0, x)


def softplus_inv(y):
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("softplus_inv needs positive input")
    return np.where(y > 30, y + np.log1p(-np.exp(-np.minimum(y, 700))), np.log(np.expm1(np.minimum(y, 30))))


def _sigmoid(x):
    return 0.5 * (1 + np.tanh(0.5 * x))


@dataclass
class _LsqOut:
    x: np.ndarray
    cov: np.ndarray
    residual_norm: float
    converged: bool
    nfev: int


def _solve(residual, jac, x0, n_obs, sigma=None):
    """Damped Gauss-Newton (Levenberg-Marquardt) with relative-step convergence."""
    n = len(x0)
    if n_obs <= n:
        raise FitError(f"need more than {n} data points, got {n_obs}")
    res = least_squares(residual, x0, jac=jac, method="lm", xtol=XTOL, ftol=1e-15, gtol=1e-15,
                        max_nfev=MAX_ITER * (n + 1))
    J = res.jac
    chi2 = float(res.fun @ res.fun)
    jtj_inv = np.linalg.pinv(J.T @ J)
    # unit weights: scale by the residual variance; explicit sigmas: absolute
    cov = jtj_inv if sigma is not None else jtj_inv * chi2 / (n_obs - n)
    return _LsqOut(res.x, cov, math.sqrt(chi2), res.status > 0, res.nfev)


# ---------------------------------------------------------------- saturation


@dataclass(frozen=True)
class SaturationFit:
    R_inf: float
    P_sat: float
    slope: float | None
    covariance: np.ndarray
    residual_norm: float
    degenerate: bool = False

    @property
    def sigma_R_inf(self):
        return float(math.sqrt(self.covariance[0, 0]))

    @property
    def sigma_P_sat(self):
        return float(math.sqrt(self.covariance[1, 1]))

    def to_dict(self):
        names = ["R_inf_cps", "P_sat_uW"] + (["slope_cps_per_uW"] if self.slope is not None else [])
        return {
            "model": "R_inf*P/(P+P_sat)" + (" + slope*P" if self.slope is not None else ""),
            "parameters": dict(zip(names, [self.R_inf, self.P_sat] + ([self.slope] if self.slope is not None else []))),
            "covariance": {"names": names, "matrix": self.covariance.tolist()},
            "residual_norm": self.residual_norm,
            "degenerate": self.degenerate,
        }


def saturation_model(P, R_inf, P_sat, slope=0.0):
    P = np.asarray(P, dtype=float)
    return R_inf * P / (P + P_sat) + slope * P


def fit_saturation(P, R, with_linear_term: bool = False, sigma=None) -> SaturationFit:
    """Fit R = R_inf*P/(P+P_sat) (+ slope*P) to pump-power / count-rate points."""
    P = np.asarray(P, dtype=float)
    R = np.asarray(R, dtype=float)
    if P.shape != R.shape or P.ndim != 1:
        raise FitError("P and R must be 1-D arrays of equal length")
    if len(P) < 3:
        raise FitError("need at least 3 points")
    if np.any(P <= 0) or P.max() < 3 * P.min():
        raise FitError("pump powers must be positive and span at least a factor 3")
    w = np.ones_like(R) if sigma is None else 1 / np.asarray(sigma, dtype=float)

    def unpack(x):
        return softplus(x[0]), softplus(x[1]), (x[2] if with_linear_term else 0.0)

    def residual(x):
        r_inf, p_sat, c = unpack(x)
        return (saturation_model(P, r_inf, p_sat, c) - R) * w

    def jac(x):
        r_inf, p_sat, _ = unpack(x)
        cols = [
            P / (P + p_sat) * _sigmoid(x[0]),
            -r_inf * P / (P + p_sat) ** 2 * _sigmoid(x[1]),
        ]
        if with_linear_term:
            cols.append(P)
        return np.column_stack(cols) * w[:, None]

    x0 = [float(softplus_inv(2 * R.max())), float(softplus_inv(np.median(P)))]
    if with_linear_term:
        x0.append(0.0)
    out = _solve(residual, jac, np.array(x0), len(P), sigma)
    r_inf, p_sat, c = unpack(out.x)
    scale = np.array([_sigmoid(out.x[0]), _sigmoid(out.x[1])] + ([1.0] if with_linear_term else []))
    cov = out.cov * np.outer(scale, scale)
    degenerate = p_sat > 100 * P.max()
    if not out.converged and not degenerate:
        raise ConvergenceError(f"saturation fit did not converge in {MAX_ITER} iterations")
    return SaturationFit(float(r_inf), float(p_sat), float(c) if with_linear_term else None, cov,
                         out.residual_norm, degenerate or not out.converged)


# ---------------------------------------------------------------- g2


@dataclass(frozen=True)
class G2Fit:
    g2_0: float
    a: float
    tau1: float
    tau2: float
    covariance: np.ndarray
    residual_norm: float
    dip_present: bool = True
    names: tuple = ("g2_0", "a", "tau1_ns", "tau2_ns")

    @property
    def sigma_g2_0(self):
        return float(math.sqrt(self.covariance[0, 0]))

    @property
    def single_emitter(self) -> bool:
        return self.dip_present and self.g2_0 < 0.5

    def to_dict(self):
        return {
            "model": "1 - (1-g2_0)*[(1+a)exp(-|t|/tau1) - a*exp(-|t|/tau2)]",
            "parameters": dict(zip(self.names, [self.g2_0, self.a, self.tau1, self.tau2])),
            "sigma_g2_0": self.sigma_g2_0,
            "covariance": {"names": list(self.names), "matrix": self.covariance.tolist()},
            "residual_norm": self.residual_norm,
            "dip_present": self.dip_present,
            "single_emitter": self.single_emitter,
        }


def g2_model(tau, g2_0, a, tau1, tau2):
    """Three-level antibunching with bunching shoulder; g2(0) = g2_0."""
    t = np.abs(np.asarray(tau, dtype=float))
    return 1 - (1 - g2_0) * ((1 + a) * np.exp(-t / tau1) - a * np.exp(-t / tau2))


NORMALIZATION_TAU_NS = 100.0


def normalize_coincidences(hist: G2Histogram, window_ns: float = NORMALIZATION_TAU_NS) -> G2Histogram:
    if hist.kind == "normalized":
        return hist
    far = np.abs(hist.tau) > window_ns
    if not np.any(far):
        raise FitError(f"no delays beyond |tau| > {window_ns} ns to normalize coincidences")
    norm = hist.values[far].mean()
    if norm <= 0:
        raise FitError("normalization window holds no coincidences")
    return G2Histogram(hist.tau, hist.values / norm, "normalized")


def fit_g2(hist: G2Histogram, sigma=None) -> G2Fit:
    """Fit the three-level g2 model; raw coincidences are normalized first."""
    hist = normalize_coincidences(hist)
    tau, y = hist.tau, hist.values
    w = np.ones_like(y) if sigma is None else 1 / np.asarray(sigma, dtype=float)

    def unpack(x):
        return 1 - x[0], softplus(x[1]), softplus(x[2]), softplus(x[3])

    def residual(x):
        g0, a, t1, t2 = unpack(x)
        return (g2_model(tau, g0, a, t1, t2) - y) * w

    def jac(x):
        depth = x[0]
        a, t1, t2 = softplus(x[1]), softplus(x[2]), softplus(x[3])
        t = np.abs(tau)
        e1, e2 = np.exp(-t / t1), np.exp(-t / t2)
        return np.column_stack([
            -((1 + a) * e1 - a * e2),
            -depth * (e1 - e2) * _sigmoid(x[1]),
            -depth * (1 + a) * e1 * t / t1**2 * _sigmoid(x[2]),
            depth * a * e2 * t / t2**2 * _sigmoid(x[3]),
        ]) * w[:, None]

    # initial guesses from the data shape
    order = np.argsort(np.abs(tau))
    depth0 = float(np.clip(1 - y[order[:3]].mean(), 0.05, 1.5))
    recovered = np.abs(tau)[y > 1 - depth0 / 2 * 1.0]
    tau1_0 = float(max(np.min(recovered) / math.log(2), 1e-3)) if recovered.size else float(np.ptp(tau) / 10)
    a0 = float(max(y.max() - 1, 0.05))

    best = None
    for tau2_factor in (5.0, 20.0):
        x0 = np.array([depth0, softplus_inv(a0), softplus_inv(tau1_0), softplus_inv(tau1_0 * tau2_factor)],
                      dtype=float)
        out = _solve(residual, jac, x0, len(y), sigma)
        if best is None or out.residual_norm < best.residual_norm:
            best = out
    if not best.converged:
        raise ConvergenceError(f"g2 fit did not converge in {MAX_ITER} iterations")
    g0, a, t1, t2 = unpack(best.x)
    scale = np.array([-1.0, _sigmoid(best.x[1]), _sigmoid(best.x[2]), _sigmoid(best.x[3])])
    cov = best.cov * np.outer(scale, scale)
    dip = bool(y.min() <= 0.9)
    return G2Fit(float(g0), float(a), float(t1), float(t2), cov, best.residual_norm, dip)


# ---------------------------------------------------------------- standing wave


def oscillation_model(D, mean, visibility, period, phase):
    return mean * (1 + visibility * np.cos(2 * np.pi * np.asarray(D, dtype=float) / period + phase))


MIN_VISIBILITY = 0.02


@dataclass(frozen=True)
class OscillationFit:
    period: float | None
    phase: float
    mean: float
    visibility: float
    covariance: np.ndarray
    residual_norm: float
    resolved: bool = True

    @property
    def sigma_period(self):
        return float(math.sqrt(self.covariance[2, 2]))

    def to_dict(self):
        return {
            "model": "mean*(1 + visibility*cos(2*pi*D/period + phase))",
            "parameters": {"period_nm": self.period, "phase_rad": self.phase, "mean_cps": self.mean,
                           "visibility": self.visibility},
            "covariance": {"names": ["mean_cps", "visibility", "period_nm", "phase_rad"],
                           "matrix": self.covariance.tolist()},
            "residual_norm": self.residual_norm,
            "resolved": self.resolved,
        }


def fit_background_oscillation(background: ScanTrace) -> OscillationFit:
    """Fit B(D) = B0*(1 + v*cos(2*pi*D/period + phase)); period seeded from the PSD peak."""
    from .spectra import psd_peaks, psd_vs_inverse_k

    D, B = background.positions, background.rates
    peaks = psd_peaks(psd_vs_inverse_k(background), 1)
    span = abs(D[-1] - D[0])
    period0 = peaks[0] / 2 if peaks else span / 2

    # linear solve for mean and quadratures at the seeded period
    arg = 2 * np.pi * D / period0
    A = np.column_stack([np.ones_like(D), np.cos(arg), np.sin(arg)])
    c, *_ = np.linalg.lstsq(A, B, rcond=None)
    mean0 = c[0] if c[0] > 0 else max(B.mean(), 1e-12)
    v0 = math.hypot(c[1], c[2]) / mean0
    phase0 = math.atan2(-c[2], c[1])

    def unpack(x):
        return softplus(x[0]), x[1], softplus(x[2]), x[3]

    def residual(x):
        return oscillation_model(D, *unpack(x)) - B

    def jac(x):
        m, v, p, ph = unpack(x)
        arg = 2 * np.pi * D / p + ph
        return np.column_stack([
            (1 + v * np.cos(arg)) * _sigmoid(x[0]),
            m * np.cos(arg),
            m * v * np.sin(arg) * 2 * np.pi * D / p**2 * _sigmoid(x[2]),
            -m * v * np.sin(arg),
        ])

    x0 = np.array([softplus_inv(mean0), v0, softplus_inv(period0), phase0], dtype=float)
    out = _solve(residual, jac, x0, len(D))
    m, v, p, ph = unpack(out.x)
    scale = np.array([_sigmoid(out.x[0]), 1.0, _sigmoid(out.x[2]), 1.0])
    cov = out.cov * np.outer(scale, scale)
    if v < 0:
        v, ph = -v, ph + math.pi
    ph = (ph + math.pi) % (2 * math.pi) - math.pi
    if v < MIN_VISIBILITY:
        return OscillationFit(None, float(ph), float(m), float(v), cov, out.residual_norm, False)
    if not out.converged:
        raise ConvergenceError(f"oscillation fit did not converge in {MAX_ITER} iterations")
    return OscillationFit(float(p), float(ph), float(m), float(v), cov, out.residual_norm, True)
