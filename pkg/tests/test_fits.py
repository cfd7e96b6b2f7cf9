import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvmirror.analysis import (
    FitError,
    fit_background_oscillation,
    fit_g2,
    fit_saturation,
    g2_model,
    oscillation_model,
    saturation_model,
)
from nvmirror.analysis.fits import normalize_coincidences, softplus, softplus_inv
from nvmirror.traces import G2Histogram, ScanTrace

P = np.array([10, 20, 40, 60, 80, 100, 150, 200, 300, 400, 500, 600, 800, 1000], dtype=float)
TAU = np.arange(-200.0, 200.5, 0.5)
D = 225.0 + 20.0 * np.arange(200)


def test_softplus_inverse():
    y = np.array([1e-6, 0.3, 5.0, 40.0, 1e4])
    assert np.allclose(softplus(softplus_inv(y)), y, rtol=1e-12)


@pytest.mark.parametrize("p_sat", [224.0, 119.0, 150.0])
def test_saturation_round_trip(p_sat):
    fit = fit_saturation(P, saturation_model(P, 1.5e5, p_sat))
    assert fit.P_sat == pytest.approx(p_sat, rel=1e-6)
    assert fit.R_inf == pytest.approx(1.5e5, rel=1e-6)
    assert not fit.degenerate


@settings(max_examples=25, deadline=None)
@given(p_sat=st.floats(30.0, 600.0), r_inf=st.floats(1e4, 1e6))
def test_saturation_round_trip_property(p_sat, r_inf):
    fit = fit_saturation(P, saturation_model(P, r_inf, p_sat))
    assert fit.P_sat == pytest.approx(p_sat, rel=1e-6)


def test_saturation_with_linear_term():
    fit = fit_saturation(P, saturation_model(P, 1e5, 224.0, 12.0), with_linear_term=True)
    assert (fit.P_sat, fit.slope) == pytest.approx((224.0, 12.0), rel=1e-6)


@pytest.mark.parametrize("p_sat", [224.0, 119.0, 150.0])
def test_saturation_with_two_percent_noise(p_sat):
    # weighted by the known 2% error; a single 14-point curve has sigma(P_sat) of ~1.5%
    rng = np.random.default_rng(11)
    errs = []
    for _ in range(200):
        R = saturation_model(P, 1e5, p_sat) * (1 + 0.02 * rng.standard_normal(P.size))
        errs.append(fit_saturation(P, R, sigma=0.02 * R).P_sat / p_sat - 1)
    errs = np.abs(errs)
    assert np.mean(errs < 0.05) >= 0.95
    assert np.sqrt(np.mean(errs**2)) < 0.025


def test_uncertainty_shrinks_as_inverse_sqrt_n():
    rng = np.random.default_rng(5)
    sig = {}
    for n in (1, 4, 16):
        vals = []
        for _ in range(30):
            PP = np.tile(P, n)
            R = saturation_model(PP, 1e5, 224.0) * (1 + 0.02 * rng.standard_normal(PP.size))
            vals.append(fit_saturation(PP, R).sigma_P_sat)
        sig[n] = np.mean(vals)
    assert sig[1] / sig[4] == pytest.approx(2.0, rel=0.2)
    assert sig[1] / sig[16] == pytest.approx(4.0, rel=0.2)


def test_saturation_degenerate_when_linear():
    fit = fit_saturation(P[:5], 50.0 * P[:5])
    assert fit.degenerate


def test_saturation_input_errors():
    with pytest.raises(FitError):
        fit_saturation([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(FitError):
        fit_saturation([100.0, 110.0, 120.0], [1.0, 2.0, 3.0])
    with pytest.raises(FitError):
        fit_saturation([1.0, 2.0, 3.0], [1.0, 2.0])


def test_g2_round_trip():
    fit = fit_g2(G2Histogram(TAU, g2_model(TAU, 0.16, 0.2, 12.0, 150.0)))
    assert (fit.g2_0, fit.a, fit.tau1, fit.tau2) == pytest.approx((0.16, 0.2, 12.0, 150.0), rel=1e-6)


def test_g2_two_level_limit():
    y = g2_model(TAU, 0.0, 0.0, 12.0, 150.0)
    assert np.allclose(y, 1 - np.exp(-np.abs(TAU) / 12.0), atol=1e-15)


def test_g2_recovery_with_noise():
    rng = np.random.default_rng(3)
    for _ in range(10):
        y = g2_model(TAU, 0.16, 0.2, 12.0, 150.0) + 0.02 * rng.standard_normal(TAU.size)
        assert fit_g2(G2Histogram(TAU, y)).g2_0 == pytest.approx(0.16, abs=0.02)


@pytest.mark.parametrize("g0", [0.16, 0.24, 0.37])
@pytest.mark.parametrize("shift", [-0.02, 0.0, 0.02])
def test_single_emitter_verdict_is_stable(g0, shift):
    fit = fit_g2(G2Histogram(TAU, g2_model(TAU, g0 + shift, 0.2, 12.0, 150.0)))
    assert fit.single_emitter


def test_g2_raw_coincidences_are_normalized():
    h = G2Histogram(TAU, 37.0 * g2_model(TAU, 0.24, 0.2, 12.0, 150.0), "coincidences")
    n = normalize_coincidences(h)
    assert n.kind == "normalized"
    assert fit_g2(h).g2_0 == pytest.approx(0.24, abs=0.01)


def test_g2_no_dip_is_not_single():
    rng = np.random.default_rng(0)
    fit = fit_g2(G2Histogram(TAU, 1 + 0.01 * rng.standard_normal(TAU.size)))
    assert not fit.single_emitter


@pytest.mark.parametrize("period,tol", [(266.0, 2.0), (350.0, 3.0)])
def test_oscillation_period_recovered(period, tol):
    B = oscillation_model(D, 5000.0, 0.3, period, 0.9)
    fit = fit_background_oscillation(ScanTrace(D, B))
    assert fit.resolved
    assert fit.period == pytest.approx(period, abs=1e-6 * period)
    rng = np.random.default_rng(2)
    noisy = fit_background_oscillation(ScanTrace(D, B * (1 + 0.02 * rng.standard_normal(D.size))))
    assert noisy.period == pytest.approx(period, abs=tol)


def test_oscillation_unresolved_without_visibility():
    fit = fit_background_oscillation(ScanTrace(D, np.full(D.size, 4000.0)))
    assert not fit.resolved and fit.period is None


def test_to_dict_records():
    d = fit_saturation(P, saturation_model(P, 1e5, 224.0)).to_dict()
    assert d["parameters"]["P_sat_uW"] == pytest.approx(224.0)
    assert len(d["covariance"]["matrix"]) == 2
