import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from afcstark.analytic import dephasing_factor
from afcstark.comb import (CombSpec, GaussianLine, Resonator, ToothShape, build_comb,
                           comb_absorption_rate, g_total_for_rate, sample_ensemble,
                           tooth_fourier)
from afcstark.stark import StarkModel

TWO_PI = 2 * math.pi


def test_tooth_count_and_centres():
    spec = CombSpec.from_finesse(19.7e6, 12.2, 140e6)
    assert spec.n_teeth == 8
    c = spec.tooth_centers()
    assert np.allclose(np.diff(c), 19.7e6)
    assert 0.0 in c
    four = CombSpec.from_finesse(27.5e6, 27.5, 82.5e6)
    assert four.n_teeth == 4


def test_finesse_from_tooth_width():
    spec = CombSpec(19.7e6, ToothShape("gaussian", 19.7e6 / 12.2), 100e6)
    assert spec.finesse == pytest.approx(12.2)
    assert spec.tooth.fwhm_gamma == pytest.approx(1.615e6, rel=1e-3)


@pytest.mark.parametrize("kw", [
    dict(period_delta=-1.0, tooth=ToothShape(), bandwidth=1e8),
    dict(period_delta=1e6, tooth=ToothShape(fwhm_gamma=2e6), bandwidth=1e8),
    dict(period_delta=1e7, tooth=ToothShape(), bandwidth=1e6),
    dict(period_delta=1e7, tooth=ToothShape(), bandwidth=1e8, subclass_weights=(0.7, 0.7)),
])
def test_invalid_comb_rejected(kw):
    with pytest.raises(ValueError):
        CombSpec(**kw)


def test_density_normalised():
    dens = build_comb(CombSpec.from_finesse(20e6, 10, 60e6))
    lo, hi = dens.window
    pts = np.linspace(lo, hi, 60)
    total, _ = quad(dens, lo, hi, points=pts[1:-1], limit=400)
    assert total == pytest.approx(1.0, rel=1e-6)
    assert dens.cdf(hi) == pytest.approx(1.0)
    assert dens.cdf(lo) == pytest.approx(0.0)


def test_subclass_density_split():
    dens = build_comb(CombSpec.from_finesse(20e6, 10, 60e6, subclass_weights=(0.3, 0.7)))
    w = np.linspace(*dens.window, 101)
    assert np.allclose(dens(w, 1) + dens(w, -1), dens(w))
    assert np.allclose(dens(w, 1), 0.3 * dens(w))


def test_tooth_fourier_squared_is_dephasing():
    k = np.arange(0, 9)
    assert np.allclose(tooth_fourier(k, 12.2) ** 2, dephasing_factor(k, 12.2))
    assert tooth_fourier(3, math.inf) == 1.0


def test_resonator_span():
    assert Resonator(100, 6).span_um == (-56.0, 56.0)
    with pytest.raises(ValueError):
        Resonator(100, -1)


def test_sample_ensemble_basic():
    spec = CombSpec.from_finesse(19.7e6, 12.2, 140e6, subclass_weights=(0.5, 0.5))
    ens = sample_ensemble(spec, 5000, Resonator(), StarkModel(gamma_s=2.5e3), seed=3,
                          g_total=TWO_PI * 0.6e9)
    assert ens.n == 5000
    assert ens.g ** 2 * ens.n == pytest.approx(ens.g_total ** 2)
    assert ens.position_x.min() >= -56 and ens.position_x.max() <= 56
    assert abs((ens.subclass == 1).mean() - 0.5) < 0.01
    assert abs(ens.s_individual.mean() - 11.8e3) < 50
    # FWHM of s across ions
    fwhm = 2 * math.sqrt(2 * math.log(2)) * ens.s_individual.std()
    assert fwhm == pytest.approx(2.5e3, rel=0.05)
    lo, hi = build_comb(spec).window
    assert ens.detuning0.min() >= lo and ens.detuning0.max() <= hi
    ion = ens[0]
    assert ion.subclass in (1, -1)


def test_sampling_deterministic_and_seed_sensitive():
    spec = CombSpec.from_finesse(20e6, 10, 100e6)
    a = sample_ensemble(spec, 500, seed=11)
    b = sample_ensemble(spec, 500, seed=11)
    c = sample_ensemble(spec, 500, seed=12)
    assert np.array_equal(a.detuning0, b.detuning0)
    assert np.array_equal(a.position_x, b.position_x)
    assert not np.array_equal(a.detuning0, c.detuning0)


def test_sampling_too_few_ions():
    with pytest.raises(ValueError, match="too few"):
        sample_ensemble(CombSpec.from_finesse(20e6, 10, 100e6), 50)


def test_single_subclass_comb():
    spec = CombSpec.from_finesse(5e6, 10, 40e6, subclass_weights=(1.0, 0.0))
    ens = sample_ensemble(spec, 1000, seed=0)
    assert np.all(ens.subclass == 1)


def test_gaussian_line_sampling():
    ens = sample_ensemble(GaussianLine(50e6), 20000, seed=0)
    fwhm = 2 * math.sqrt(2 * math.log(2)) * ens.detuning0.std() / TWO_PI
    assert fwhm == pytest.approx(50e6, rel=0.02)


def test_stratified_tooth_counts_balanced():
    spec = CombSpec.from_finesse(20e6, 10, 100e6)
    dens = build_comb(spec)
    ens = sample_ensemble(spec, 1200, seed=5, sampling="stratified")
    tooth = np.argmin(np.abs(ens.detuning0[:, None] - dens.centers), axis=1)
    counts = np.bincount(tooth, minlength=dens.n_components)
    assert np.ptp(counts) <= 3


def test_absorption_rate_inverse():
    spec = CombSpec.from_finesse(19.7e6, 12.2, 140e6)
    g = TWO_PI * 0.6e9
    rate = comb_absorption_rate(spec, g)
    assert g_total_for_rate(spec, rate) == pytest.approx(g)
    # pi g^2 / (2 pi N Delta) with N teeth
    assert rate == pytest.approx(g ** 2 / (2 * spec.n_teeth * spec.period_delta))


@settings(max_examples=30, deadline=None)
@given(delta=st.floats(1e6, 50e6), finesse=st.floats(2.0, 40.0),
       n_per=st.integers(1, 8), seed=st.integers(0, 2 ** 31))
def test_samples_inside_window(delta, finesse, n_per, seed):
    spec = CombSpec.from_finesse(delta, finesse, delta * n_per)
    ens = sample_ensemble(spec, 200, seed=seed)
    lo, hi = build_comb(spec).window
    assert np.all((ens.detuning0 >= lo) & (ens.detuning0 <= hi))
    assert ens.n == 200


@settings(max_examples=30, deadline=None)
@given(st.floats(-1e9, 1e9))
def test_cdf_monotone(w):
    dens = build_comb(CombSpec.from_finesse(20e6, 10, 60e6))
    assert 0.0 <= dens.cdf(w) <= 1.0
    assert dens.cdf(w + 1e6) >= dens.cdf(w)
