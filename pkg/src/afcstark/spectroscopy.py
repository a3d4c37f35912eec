"""Holeburning Stark spectroscopy of a few-tooth comb.

A static field splits every tooth into two subclass components separated by
2 s_b E. Sweeping the field and fitting the splitting gives s_b; the fitted
tooth width versus field exposes field and Stark-parameter inhomogeneity.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.optimize import curve_fit

from .comb import TWO_PI, CombSpec, Resonator, ToothShape, sample_ensemble
from .dynamics import CavityParams, steady_state_reflectance
from .stark import FieldProfile, StarkModel, ion_shift

FOUR_LN2 = 4.0 * math.log(2.0)


def four_tooth_comb(spacing=27.5e6, tooth_fwhm=1.0e6, center=0.0) -> CombSpec:
    """Four narrow teeth, both subclasses equally populated."""
    return CombSpec(period_delta=spacing, tooth=ToothShape("gaussian", tooth_fwhm),
                    bandwidth=3 * spacing, center_detuning=center, subclass_weights=(0.5, 0.5))


@dataclass(frozen=True)
class StarkSweep:
    fields: np.ndarray          # V/cm, nominal
    detunings: np.ndarray       # Hz
    spectra: np.ndarray         # (n_fields, n_detunings) reflectance
    tooth_centers: np.ndarray   # Hz, unshifted
    tooth_fwhm: float           # Hz, unshifted

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("field_vcm,detuning_mhz,reflectance\n")
            for f, row in zip(self.fields, self.spectra):
                for d, r in zip(self.detunings, row):
                    fh.write(f"{f:.6g},{d * 1e-6:.6f},{r:.12e}\n")


def run_stark_sweep(comb: CombSpec, fields, stark: StarkModel | None = None,
                    profile: FieldProfile | None = None, n: int = 40000, seed: int = 0,
                    g_total: float = TWO_PI * 0.01e9, cavity: CavityParams | None = None,
                    resolution: float = 0.1e6, detunings=None, resonator=None) -> StarkSweep:
    """Steady-state reflectance of the field-shifted comb for every field.

    ``fields`` are nominal uniform fields in V/cm; each ion sees
    field * e_per_volt(x) / nominal_e_per_volt, so tabulated profiles add
    position-dependent spread. ``resolution`` (Hz) is the probe Lorentzian
    half-width that renders the finite sample as a smooth spectrum.
    """
    fields = np.atleast_1d(np.asarray(fields, dtype=float))
    if fields.size == 0:
        raise ValueError("empty field sweep")
    if comb.n_teeth < 1 or min(comb.subclass_weights) == 0:
        raise ValueError("Stark spectroscopy needs both subclasses populated")
    stark = stark or StarkModel()
    profile = profile or FieldProfile.ideal_parallel()
    cavity = (cavity or CavityParams.from_quality()).replace(g_total=g_total)
    ens = sample_ensemble(comb, n, resonator or Resonator(), stark, seed=seed, g_total=g_total)
    centers = comb.tooth_centers()
    if detunings is None:
        pad = comb.period_delta / 2
        detunings = np.linspace(centers[0] - pad, centers[-1] + pad, 1201)
    detunings = np.asarray(detunings, dtype=float)
    rel = profile.e_per_volt(ens.position_x) / profile.nominal_e_per_volt()
    omegas = TWO_PI * detunings
    spectra = np.empty((fields.size, detunings.size))
    for k, f in enumerate(fields):
        w = ens.detuning0 + ion_shift(stark, ens, f * rel)
        spectra[k] = steady_state_reflectance(cavity, ens, omegas, detunings=w,
                                              linewidth=TWO_PI * resolution)
    return StarkSweep(fields, detunings, spectra, centers, comb.tooth.fwhm_gamma)


# ------------------------------------------------------------------- fitting

def _pair_model(n_teeth):
    def model(x, base, split, width, *rest):
        amps, cents = rest[:n_teeth], rest[n_teeth:]
        y = np.full_like(x, base)
        for a, c in zip(amps, cents):
            y += a * (np.exp(-FOUR_LN2 * (x - c - split / 2) ** 2 / width ** 2)
                      + np.exp(-FOUR_LN2 * (x - c + split / 2) ** 2 / width ** 2))
        return y
    return model


def _single_model(n_teeth):
    def model(x, base, width, *rest):
        amps, cents = rest[:n_teeth], rest[n_teeth:]
        y = np.full_like(x, base)
        for a, c in zip(amps, cents):
            y += a * np.exp(-FOUR_LN2 * (x - c) ** 2 / width ** 2)
        return y
    return model


@dataclass(frozen=True)
class SpectrumFit:
    splitting: float        # Hz, signed
    splitting_ci: float     # Hz, 95% half-width
    fwhm: float             # Hz, per component
    resolved: bool


def fit_spectrum(detunings, spectrum, centers, tooth_fwhm, field_sign=1.0,
                 split_guess=None) -> SpectrumFit:
    """Fit one spectrum with two-fold split Gaussians sharing width and splitting.

    The two subclass components are indistinguishable in a single spectrum;
    the sign of the splitting follows ``field_sign`` so a reversed field gives
    a negative splitting. An unresolved pair falls back to one Gaussian per
    tooth and is marked ``resolved=False``.
    """
    x = np.asarray(detunings, dtype=float) * 1e-6
    y = np.asarray(spectrum, dtype=float)
    c0 = np.asarray(centers, dtype=float) * 1e-6
    w0 = tooth_fwhm * 1e-6
    nt = c0.size
    base = float(np.median(y))
    amp = float(y[np.argmax(np.abs(y - base))] - base)
    s0 = abs(split_guess) * 1e-6 if split_guess is not None else w0
    p0 = [base, max(s0, 0.5 * w0), w0] + [amp / 2] * nt + list(c0)
    ci = math.nan
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p, cov = curve_fit(_pair_model(nt), x, y, p0=p0, maxfev=20000)
        split, width = abs(p[1]), abs(p[2])
        dof = max(x.size - len(p), 1)
        var = cov[1, 1]
        # an exact (noise-free) fit leaves the covariance undefined
        ci = float(stats.t.ppf(0.975, dof) * math.sqrt(var)) * 1e6 if np.isfinite(var) else math.nan
        resolved = bool(np.all(np.isfinite(p)) and split >= 0.5 * width)
    except (RuntimeError, ValueError):
        resolved = False
    if resolved:
        sign = -1.0 if field_sign < 0 else 1.0
        return SpectrumFit(sign * split * 1e6, ci, width * 1e6, True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p, _ = curve_fit(_single_model(nt), x, y, p0=[base, w0] + [amp] * nt + list(c0),
                         maxfev=20000)
    return SpectrumFit(0.0, math.nan, abs(p[1]) * 1e6, False)


@dataclass(frozen=True)
class SplittingFit:
    s_b_est: float              # Hz per V/cm
    ci95: float                 # Hz per V/cm, half-width
    fields: np.ndarray
    splittings: np.ndarray      # Hz (0 where unresolved)
    splitting_ci: np.ndarray
    fwhm: np.ndarray            # Hz, fitted component width per field
    used: np.ndarray            # bool, point entered the slope fit

    def splitting_at(self, field):
        k = int(np.argmin(np.abs(self.fields - field)))
        if not math.isclose(self.fields[k], field, rel_tol=1e-9, abs_tol=1e-9):
            raise KeyError(f"field {field} not in sweep")
        return float(self.splittings[k]), float(self.splitting_ci[k])

    def to_json(self):
        return {
            "s_b_khz_per_vcm": self.s_b_est * 1e-3,
            "ci95": self.ci95 * 1e-3,
            "per_field_fwhm": {f"{f:g}": w * 1e-6 for f, w in zip(self.fields, self.fwhm)},
            "per_field_splitting_mhz": {f"{f:g}": s * 1e-6
                                        for f, s in zip(self.fields, self.splittings)},
        }


def fit_splitting_slope(sweep: StarkSweep, s_guess=11.8e3) -> SplittingFit:
    """Fit every spectrum, then splitting = 2 s_b E through the origin.

    Needs at least five fields with both signs present. ``s_guess`` (Hz per
    V/cm) only seeds the per-spectrum splitting.
    """
    fields = np.asarray(sweep.fields, dtype=float)
    if fields.size == 0:
        raise ValueError("empty field sweep")
    if fields.size < 5 or not (fields.min() < 0 < fields.max()):
        raise ValueError("slope fit needs >= 5 fields spanning a sign change")
    fits = [fit_spectrum(sweep.detunings, s, sweep.tooth_centers, sweep.tooth_fwhm,
                         np.sign(f), 2 * s_guess * f)
            for f, s in zip(fields, sweep.spectra)]
    split = np.array([f.splitting for f in fits])
    sci = np.array([f.splitting_ci for f in fits])
    used = np.array([f.resolved for f in fits])
    if used.sum() < 2:
        raise ValueError("fewer than two resolved splittings")
    e, s = fields[used], split[used]
    slope = float((e * s).sum() / (e * e).sum())
    dof = e.size - 1
    resid = s - slope * e
    se = math.sqrt((resid ** 2).sum() / dof / (e * e).sum())
    ci = float(stats.t.ppf(0.975, dof) * se)
    return SplittingFit(slope / 2, ci / 2, fields, split, sci,
                        np.array([f.fwhm for f in fits]), used)
