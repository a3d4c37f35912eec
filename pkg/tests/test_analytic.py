import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from afcstark.analytic import (AnalyticParams, ReflectanceTrace, dephasing_factor,
                               emission_amplitudes, estimate_gamma_comb, finesse_at_inverse_e,
                               fit_finesse, model_reflectance, suppressed_efficiency)
from afcstark.comb import CombSpec, comb_absorption_rate, sample_ensemble
from afcstark.dynamics import CavityParams, steady_state_reflectance

TWO_PI = 2 * math.pi


def test_dephasing_values():
    assert dephasing_factor(0, 12.2) == 1.0
    assert dephasing_factor(1, 12.2) == pytest.approx(0.9533, abs=1e-4)
    assert dephasing_factor(4, 12.2) == pytest.approx(0.4652, abs=1e-4)
    assert np.all(np.diff(dephasing_factor(np.arange(10), 12.2)) < 0)


def test_inverse_e_point():
    m = finesse_at_inverse_e(12.2)
    assert m == pytest.approx(4.57, abs=0.01)
    assert dephasing_factor(m, 12.2) == pytest.approx(math.exp(-1))
    # 1/e storage time at Delta = 19.7 MHz, close to 240 ns
    assert m / 19.7e6 == pytest.approx(232e-9, rel=0.01)


def test_suppressed_efficiency_example():
    p = AnalyticParams.from_ratios(0.2, 0.05, 12.2)
    assert suppressed_efficiency(p, 1) == pytest.approx(1.255e-3, rel=1e-3)


def test_impedance_matched_limit():
    p = AnalyticParams.from_ratios(1.0, 1.0, math.inf)
    amps = emission_amplitudes(p, 4)
    assert abs(amps[0]) == pytest.approx(1.0)
    assert abs(amps[1]) < 1e-12 * abs(amps[0])
    assert suppressed_efficiency(p, 1) == pytest.approx(1.0)


def test_weak_absorption_keeps_later_emissions():
    p = AnalyticParams.from_ratios(0.2, 0.05, 12.2)
    a = np.abs(emission_amplitudes(p, 3))
    direct = 2 * 0.05 / 1.05 * 2 * 0.2 / 1.05 * math.sqrt(dephasing_factor(2, 12.2))
    assert a[1] > 0.5 * a[0]
    assert a[1] == pytest.approx(direct, rel=0.1)


def test_suppression_zeroes_selected():
    p = AnalyticParams.from_ratios(0.2, 0.5, 12.2)
    a = emission_amplitudes(p, 5, suppression={2, 3})
    assert a[1] == 0 and a[2] == 0 and a[3] != 0


def test_homogeneous_decay():
    p0 = AnalyticParams.from_ratios(0.2, 0.3, 12.2)
    p1 = AnalyticParams.from_ratios(0.2, 0.3, 12.2, gamma_h=0.1, delta=1.0)
    r = suppressed_efficiency(p1, 3) / suppressed_efficiency(p0, 3)
    assert r == pytest.approx(math.exp(-2 * 0.1 * 3))
    a = emission_amplitudes(p1, 3, suppression={1, 2})
    assert abs(a[2]) ** 2 == pytest.approx(suppressed_efficiency(p1, 3))


def test_validation():
    with pytest.raises(ValueError):
        AnalyticParams(1.0, 0.2, -0.1, 10)
    with pytest.raises(ValueError):
        AnalyticParams(1.0, 0.2, 0.1, 1.0)
    with pytest.raises(ValueError):
        emission_amplitudes(AnalyticParams(1.0, 0.2, 0.1, 10), 0)


@settings(max_examples=60, deadline=None)
@given(kr=st.floats(0.01, 1.0), gr=st.floats(0.001, 20.0), f=st.floats(1.5, 60.0),
       m=st.integers(1, 10))
def test_recursion_collapses_to_closed_form(kr, gr, f, m):
    p = AnalyticParams.from_ratios(kr, gr, f)
    a = emission_amplitudes(p, m, suppression=range(1, m))
    assert abs(a[-1]) ** 2 == pytest.approx(suppressed_efficiency(p, m), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(kr=st.floats(0.01, 1.0), gr=st.floats(0.01, 10.0), f=st.floats(2.0, 40.0))
def test_efficiency_peaks_at_impedance_matching(kr, gr, f):
    p = AnalyticParams.from_ratios(kr, gr, f)
    q = AnalyticParams.from_ratios(kr, 1.0, f)
    assert suppressed_efficiency(p, 1) <= suppressed_efficiency(q, 1) * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(f=st.floats(4.0, 40.0), gr=st.floats(0.01, 5.0))
def test_fit_finesse_self_consistent(f, gr):
    p = AnalyticParams.from_ratios(0.2, gr, f)
    m = np.arange(2, 9)
    e = [suppressed_efficiency(p, int(k)) for k in m]
    f_fit, _, _ = fit_finesse(m, e, f0=10.0)
    assert f_fit == pytest.approx(f, rel=1e-6)


# ------------------------------------------------------------ Gamma_comb fits

def _scan(comb, gamma):
    cav = CavityParams.from_quality()
    w = TWO_PI * np.linspace(-90e6, 90e6, 1501)
    trace = ReflectanceTrace(w, np.zeros_like(w), cav.kappa, cav.kappa_in)
    return trace, model_reflectance(trace, comb, gamma)


def test_gamma_comb_round_trip():
    comb = CombSpec.from_finesse(19.7e6, 12.2, 140e6)
    cav = CavityParams.from_quality()
    for ratio in (0.05, 0.5, 2.0):
        trace, r = _scan(comb, ratio * cav.kappa)
        est = estimate_gamma_comb(ReflectanceTrace(trace.omegas, r, cav.kappa, cav.kappa_in),
                                  comb)
        assert est.gamma_comb == pytest.approx(ratio * cav.kappa, rel=0.02)
        assert not est.flagged


def test_gamma_comb_zero_without_ions():
    comb = CombSpec.from_finesse(19.7e6, 12.2, 140e6)
    trace, r = _scan(comb, 0.0)
    cav = CavityParams.from_quality()
    est = estimate_gamma_comb(ReflectanceTrace(trace.omegas, r, cav.kappa, cav.kappa_in), comb)
    assert est.gamma_comb < 1e-6 * cav.kappa


def test_gamma_comb_from_sampled_ensemble():
    comb = CombSpec.from_finesse(19.7e6, 12.2, 140e6)
    cav = CavityParams.from_quality(g_total=TWO_PI * 0.3e9)
    ens = sample_ensemble(comb, 20000, seed=2, g_total=cav.g_total)
    w = TWO_PI * np.linspace(-80e6, 80e6, 801)
    r = steady_state_reflectance(cav, ens, w, linewidth=TWO_PI * 0.05e6)
    est = estimate_gamma_comb(ReflectanceTrace(w, r, cav.kappa, cav.kappa_in), comb)
    assert est.gamma_comb == pytest.approx(comb_absorption_rate(comb, cav.g_total), rel=0.05)


def test_poor_fit_flagged():
    comb = CombSpec.from_finesse(19.7e6, 12.2, 140e6)
    trace, r = _scan(comb, 0.3 * CavityParams.from_quality().kappa)
    noisy = r + 0.05 * np.sin(trace.omegas / 1e7)
    est = estimate_gamma_comb(ReflectanceTrace(trace.omegas, noisy, trace.kappa, trace.kappa_in),
                              comb, threshold=0.01)
    assert est.flagged


def test_device_scale_efficiency_order():
    # g_total = 2 pi x 0.6 GHz on the storage comb; efficiency within 10x of 0.4 %
    comb = CombSpec.from_finesse(19.7e6, 12.2, 140e6)
    cav = CavityParams.from_quality(g_total=TWO_PI * 0.6e9)
    p = AnalyticParams(cav.kappa, cav.kappa_in, comb_absorption_rate(comb, cav.g_total), 12.2)
    eta = suppressed_efficiency(p, 1)
    assert 0.0004 < eta < 0.04
