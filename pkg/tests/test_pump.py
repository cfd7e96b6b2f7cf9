import numpy as np
import pytest
from scipy.signal import find_peaks

from nvmirror.materials import SILICA, SILVER_532, Material
from nvmirror.optics import mirror
from nvmirror.pump import pump_modulation


def test_no_mirror_is_constant():
    assert np.all(pump_modulation(25.0, np.linspace(100, 2000, 50), mirror=None) == 1.0)


def test_period_is_half_the_pump_wavelength():
    D = np.arange(100.0, 4000.0, 0.25)
    m = pump_modulation(25.0, D, 532.0, mirror(SILVER_532), mirror(SILICA))
    peaks, _ = find_peaks(m)
    assert np.mean(np.diff(D[peaks])) == pytest.approx(266.0, abs=0.5)


def test_exactly_periodic_in_D():
    D = np.linspace(300, 900, 61)
    a = pump_modulation(25.0, D, 532.0, mirror(SILVER_532), mirror(SILICA))
    b = pump_modulation(25.0, D + 266.0, 532.0, mirror(SILVER_532), mirror(SILICA))
    assert np.allclose(a, b, rtol=1e-10)


def test_node_at_perfect_mirror_surface():
    pec = mirror(Material("pec", 1e8j))
    L = np.array([400.0, 533.0, 1000.0])
    assert np.allclose(pump_modulation(L, L, 532.0, pec, mirror(SILICA)), 0.0, atol=1e-12)
    # the minimum of the modulation over z sits at the mirror
    z = np.linspace(0, 400.0, 4001)
    m = pump_modulation(z, 400.0, 532.0, pec, None)
    assert m[-1] == pytest.approx(m.min(), abs=1e-12)


def test_emitter_outside_gap_rejected():
    with pytest.raises(ValueError):
        pump_modulation(500.0, 400.0, 532.0, mirror(SILVER_532), mirror(SILICA))
