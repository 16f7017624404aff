import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from phasetrack import optics
from phasetrack.optics import BandwidthModel, DomainError, LossModel, SqueezedBeam


def test_db_conversions():
    assert optics.squeezing_r_from_db(-3.1) == pytest.approx(0.357, abs=1e-3)
    assert optics.antisqueezing_r_from_db(5.1) == pytest.approx(0.587, abs=1e-3)
    assert optics.squeezing_r_from_db(0.0) == 0.0
    assert math.copysign(1.0, optics.squeezing_r_from_db(0.0)) == 1.0
    assert float(optics.level_to_db(optics.db_to_level(-3.2))) == pytest.approx(-3.2, rel=1e-14)


@given(db=st.floats(-20.0, 0.0))
def test_beam_db_round_trip(db):
    b = SqueezedBeam.from_db(1e6, db, -db)
    assert b.squeezing_db == pytest.approx(db, abs=1e-12)
    assert b.antisqueezing_db == pytest.approx(-db, abs=1e-12)
    assert b.is_pure
    assert b.r_minus * b.r_plus == pytest.approx(1.0, rel=1e-12)


def test_beam_validation():
    with pytest.raises(ValueError, match="uncertainty"):
        SqueezedBeam(1e6, 0.5, 0.4)
    with pytest.raises(ValueError):
        SqueezedBeam(-1.0)
    with pytest.raises(ValueError):
        SqueezedBeam(1e6, eta=0.0)
    with pytest.raises(ValueError):
        SqueezedBeam(1e6, eta=1.2)
    assert SqueezedBeam.coherent(1e6, 0.85).detected_alpha_sq == pytest.approx(8.5e5)
    assert SqueezedBeam.coherent(1e6).squeezing_db == 0.0


def test_homodyne_full_reduces_at_zero_error():
    b = SqueezedBeam(1e6, 0.36, 0.59)
    assert optics.homodyne_increment_full(0.0, b, 1e-8, 0.3, 0.7) == pytest.approx(0.3)
    # at a quarter turn only the anti-squeezed quadrature is seen
    inc = optics.homodyne_increment_full(math.pi / 2, b, 1e-8, 0.3, 0.7)
    assert inc == pytest.approx(2e3 * 1e-8 + 0.7, rel=1e-12)


@given(d=st.floats(-0.3, 0.3))
def test_second_order_matches_full_variance(d):
    b = SqueezedBeam(1e6, 0.36, 0.59)
    full = optics.homodyne_variance_rate(d, b)
    second = d * d * b.r_plus + (1 - d * d) * b.r_minus
    assert full == pytest.approx(second, rel=0.02 * (1 + d * d * 10))
    assert full == pytest.approx(math.sin(d) ** 2 * b.r_plus + math.cos(d) ** 2 * b.r_minus, rel=1e-14)


def test_homodyne_second_order_mean():
    b = SqueezedBeam(4e6, 0.2, 0.3)
    inc = optics.homodyne_increment_second_order(0.01, b, 1e-8, 0.0)
    assert inc == pytest.approx(2 * 2e3 * 0.01 * 1e-8)


def test_effective_R():
    assert optics.effective_R(0.0, 0.36, 0.59) == pytest.approx(math.exp(-0.72))
    assert optics.effective_R(1.0, 0.36, 0.59) == pytest.approx(math.exp(1.18))
    with pytest.raises(DomainError):
        optics.effective_R(1.5, 0.36, 0.59)
    with pytest.raises(DomainError):
        optics.effective_R(-0.1, 0.36, 0.59)


@given(r=st.floats(0.0, 2.0), l_sq=st.floats(0.0, 0.95))
def test_loss_inversions(r, l_sq):
    r_minus, r_plus = optics.lossy_levels(r, l_sq)
    assert r_minus * r_plus >= 1.0 - 1e-12
    assume(r_minus - l_sq > 1e-9)
    assert optics.antisq_from_sq(r_minus, l_sq) == pytest.approx(r_plus, rel=1e-8)
    assert optics.pure_r_from_sq(r_minus, l_sq) == pytest.approx(r, abs=1e-7)


def test_loss_reference_values():
    assert optics.antisq_from_sq(0.479, 0.33) == pytest.approx(3.34, abs=0.01)
    assert optics.lossy_levels(0.0, 0.33) == (1.0, 1.0)
    with pytest.raises(DomainError):
        optics.antisq_from_sq(0.3, 0.33)
    with pytest.raises(ValueError):
        optics.lossy_levels(-0.1, 0.2)


def test_efficiency():
    # 0.85 from a typical homodyne budget
    assert optics.efficiency(0.97, 0.98, 0.92, 100.0) == pytest.approx(0.97**2 * 0.98 * 0.92 * 0.99)
    assert LossModel(0.33, 0.97, 0.98, 0.92, 100.0).eta == pytest.approx(0.8399, abs=1e-4)
    with pytest.raises(DomainError, match="exceed 1"):
        optics.efficiency(0.97, 0.98, 0.92, 1.0)
    with pytest.raises(ValueError):
        LossModel(0.33).eta
    with pytest.raises(ValueError):
        LossModel(1.0)


def test_pump_x_reference_and_round_trip():
    assert optics.pump_x(0.479, 3.09) == pytest.approx(0.334, abs=1e-3)
    x = 0.4
    # OPO centre levels for pump parameter x
    r_minus = 1 - 4 * x / (1 + x) ** 2
    r_plus = 1 + 4 * x / (1 - x) ** 2
    assert optics.pump_x(r_minus, r_plus) == pytest.approx(x, rel=1e-12)
    with pytest.raises(DomainError):
        optics.pump_x(1.2, 3.0)


def test_spectrum_limits_and_purity():
    x = 0.3
    bw = BandwidthModel(1e6, x)
    r_minus = 1 - 4 * x / (1 + x) ** 2
    r_plus = 1 + 4 * x / (1 - x) ** 2
    w = np.linspace(0, 5e6, 50)
    prod = optics.spectrum(w, r_minus, bw, -1) * optics.spectrum(w, r_plus, bw, +1)
    assert np.max(np.abs(prod - 1.0)) < 1e-12
    assert optics.spectrum(0.0, 0.5, bw, -1) == pytest.approx(0.5)
    assert optics.spectrum(1e12, 0.5, bw, -1) == pytest.approx(1.0, abs=1e-6)
    broad = BandwidthModel(math.inf, x)
    assert np.all(optics.spectrum(w, 0.5, broad, -1) == 0.5)
    with pytest.raises(ValueError):
        optics.spectrum(w, 0.5, bw, 0)


def test_bandwidth_model_validation():
    with pytest.raises(ValueError):
        BandwidthModel(0.0, 0.3)
    with pytest.raises(ValueError):
        BandwidthModel(1e6, 1.0)
    bw = BandwidthModel.for_levels(2e6, 0.479, 3.09)
    assert bw.squeezed_pole == pytest.approx(2e6 * (1 + bw.x))
    assert bw.antisqueezed_pole == pytest.approx(2e6 * (1 - bw.x))


def test_photon_flux_matches_density_integral():
    from scipy.integrate import quad

    r_minus, r_plus, d0 = 0.479, 3.09, 7e5
    x = optics.pump_x(r_minus, r_plus)
    bw = BandwidthModel(d0, x)
    # w = d0 tan(theta) keeps the Lorentzian tails finite
    f = lambda th: optics.photon_number_density(d0 * math.tan(th), r_minus, r_plus, bw) * d0 / math.cos(th) ** 2
    dens = 2 * quad(f, 0.0, math.pi / 2, epsrel=1e-12, limit=200)[0]
    assert optics.photon_flux_sq(r_minus, r_plus, x, d0) == pytest.approx(dens / (2 * math.pi), rel=1e-9)
    assert optics.photon_flux_sq(1.0, 1.0, 0.0, d0) == 0.0


def test_effective_bandwidth():
    assert optics.effective_bandwidth(5.9e4, 2.98e5) == pytest.approx(7.14e5)
    with pytest.raises(ValueError):
        optics.effective_bandwidth(-1.0, 1.0)
