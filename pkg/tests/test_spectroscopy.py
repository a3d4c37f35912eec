import numpy as np
import pytest

from afcstark.comb import CombSpec
from afcstark.spectroscopy import (StarkSweep, fit_spectrum, fit_splitting_slope,
                                   four_tooth_comb, run_stark_sweep)
from afcstark.stark import FieldProfile, StarkModel


@pytest.fixture(scope="module")
def comb():
    return four_tooth_comb()


def test_four_tooth_layout(comb):
    c = comb.tooth_centers()
    assert c.size == 4
    assert np.allclose(np.diff(c), 27.5e6)
    assert comb.subclass_weights == (0.5, 0.5)


def test_zero_field_teeth_unsplit(comb):
    sw = run_stark_sweep(comb, [0.0], n=6000, seed=3)
    fit = fit_spectrum(sw.detunings, sw.spectra[0], sw.tooth_centers, sw.tooth_fwhm)
    assert not fit.resolved
    assert 1.0e6 <= fit.fwhm <= 1.3e6


def test_field_sign_flips_splitting(comb):
    sw = run_stark_sweep(comb, [-500.0, 500.0], n=8000, seed=1)
    fits = [fit_spectrum(sw.detunings, s, sw.tooth_centers, sw.tooth_fwhm, np.sign(f), 2 * 11.8e3 * f)
            for f, s in zip(sw.fields, sw.spectra)]
    assert all(f.resolved for f in fits)
    assert fits[0].splitting == pytest.approx(-fits[1].splitting, rel=0.02)
    assert fits[1].splitting == pytest.approx(2 * 11.8e3 * 500, rel=0.02)


def test_unresolved_falls_back():
    x = np.linspace(-20e6, 20e6, 801)
    y = 0.4 + 0.3 * np.exp(-4 * np.log(2) * x ** 2 / 1e6 ** 2)
    fit = fit_spectrum(x, y, np.array([0.0]), 1e6)
    assert not fit.resolved and fit.splitting == 0.0
    assert fit.fwhm == pytest.approx(1e6, rel=0.01)


def test_slope_fit_on_synthetic_sweep():
    x = np.linspace(-20e6, 20e6, 1601)
    fields = np.array([-600.0, -300.0, 0.0, 300.0, 600.0])
    s_true, w = 12.5e3, 1e6
    spectra = []
    for e in fields:
        d = s_true * e
        spectra.append(0.4 + 0.2 * (np.exp(-4 * np.log(2) * (x - d) ** 2 / w ** 2)
                                    + np.exp(-4 * np.log(2) * (x + d) ** 2 / w ** 2)))
    sw = StarkSweep(fields, x, np.array(spectra), np.array([0.0]), w)
    fit = fit_splitting_slope(sw, s_guess=12e3)
    assert fit.s_b_est == pytest.approx(s_true, rel=1e-4)
    assert not fit.used[2]
    assert fit.splitting_at(300.0)[0] == pytest.approx(2 * s_true * 300, rel=1e-4)
    with pytest.raises(KeyError):
        fit.splitting_at(123.0)
    j = fit.to_json()
    assert set(j) == {"s_b_khz_per_vcm", "ci95", "per_field_fwhm", "per_field_splitting_mhz"}


def test_sweep_errors(comb):
    with pytest.raises(ValueError, match="empty"):
        run_stark_sweep(comb, [], n=100)
    with pytest.raises(ValueError, match="both subclasses"):
        run_stark_sweep(CombSpec.from_finesse(27.5e6, 20, 82.5e6, subclass_weights=(1.0, 0.0)),
                        [0.0], n=100)
    sw = StarkSweep(np.array([100.0, 200.0, 300.0]), np.zeros(3), np.zeros((3, 3)),
                    np.zeros(1), 1e6)
    with pytest.raises(ValueError, match="sign change"):
        fit_splitting_slope(sw)


def test_stark_inhomogeneity_broadens(comb):
    plain = run_stark_sweep(comb, [600.0], n=8000, seed=2)
    spread = run_stark_sweep(comb, [600.0], StarkModel(gamma_s=1.5e3), n=8000, seed=2)
    args = lambda s: (s.detunings, s.spectra[0], s.tooth_centers, s.tooth_fwhm, 1.0, 2 * 11.8e3 * 600)
    assert fit_spectrum(*args(spread)).fwhm > 1.15 * fit_spectrum(*args(plain)).fwhm


def test_tabulated_profile_broadens(comb, tmp_path):
    x = np.linspace(-60, 60, 121)
    nominal = FieldProfile.ideal_parallel().nominal_e_per_volt()
    path = tmp_path / "p.csv"
    path.write_text("x_um,e_per_volt\n" + "".join(
        f"{a},{nominal * (1 + 0.004 * a)}\n" for a in x))
    prof = FieldProfile.from_csv(path)
    ideal = run_stark_sweep(comb, [600.0], n=8000, seed=2)
    real = run_stark_sweep(comb, [600.0], profile=prof, n=8000, seed=2)
    args = lambda s: (s.detunings, s.spectra[0], s.tooth_centers, s.tooth_fwhm, 1.0, 2 * 11.8e3 * 600)
    assert fit_spectrum(*args(real)).fwhm > fit_spectrum(*args(ideal)).fwhm


def test_sweep_csv(comb, tmp_path):
    sw = run_stark_sweep(comb, [0.0, 100.0], n=500, detunings=np.linspace(-1e6, 1e6, 5))
    p = tmp_path / "s.csv"
    sw.write_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "field_vcm,detuning_mhz,reflectance"
    assert len(lines) == 11
