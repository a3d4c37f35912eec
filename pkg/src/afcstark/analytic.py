"""Closed-form emission amplitudes of a cavity-enhanced AFC.

Adiabatic elimination of the cavity turns the field equation into a delay
recursion: every re-emission is the sum of the directly rephased input and of
all earlier emissions re-absorbed and rephased by the comb.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit, least_squares
from scipy.special import wofz

from .comb import TWO_PI, build_comb, tooth_fourier

LN2 = math.log(2.0)


@dataclass(frozen=True)
class AnalyticParams:
    """Rates in rad/s; ``delta`` is the comb period in Hz."""

    kappa: float
    kappa_in: float
    gamma_comb: float
    finesse: float
    gamma_h: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        if min(self.kappa, self.kappa_in, self.gamma_comb, self.gamma_h) < 0:
            raise ValueError("rates must be non-negative")
        if not self.finesse > 1:
            raise ValueError("finesse must exceed 1")
        if not self.delta > 0:
            raise ValueError("comb period must be positive")

    @classmethod
    def from_ratios(cls, coupling_ratio, gamma_ratio, finesse, kappa=1.0, gamma_h=0.0,
                    delta=1.0):
        return cls(kappa, coupling_ratio * kappa, gamma_ratio * kappa, finesse, gamma_h, delta)


def dephasing_factor(m, finesse):
    """exp(-pi^2 m^2 / (2 ln2 F^2)), the squared tooth Fourier factor."""
    m = np.asarray(m, dtype=float)
    if np.isinf(finesse):
        out = np.ones_like(m)
    else:
        out = np.exp(-(math.pi ** 2) * m * m / (2.0 * LN2 * finesse ** 2))
    return out if out.ndim else float(out)


def emission_amplitudes(p: AnalyticParams, m_max: int, suppression=()):
    """E_out(m/Delta)/E_in(0) for m = 1..m_max (index 0 of the result is m=1).

    Emissions whose index is in ``suppression`` are forced to zero, which is
    how a dephasing pi pulse pair acts on the recursion.
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    suppression = set(suppression)
    k_all = np.arange(m_max + 1)
    decay = np.exp(-p.gamma_h * k_all / p.delta)
    ft = np.asarray(tooth_fourier(k_all, p.finesse)) * decay
    reabsorb = 2.0 * p.gamma_comb / (p.kappa + p.gamma_comb)
    direct = 2.0 * p.kappa_in / (p.kappa + p.gamma_comb)
    out = np.zeros(m_max + 1, dtype=complex)
    for m in range(1, m_max + 1):
        if m in suppression:
            continue
        acc = ft[m] * direct
        for k in range(1, m):
            acc += ft[k] * out[m - k]
        out[m] = -reabsorb * acc
    return out[1:]


def suppressed_efficiency(p: AnalyticParams, m: int) -> float:
    """Efficiency of emission m when all earlier emissions are suppressed.

    (kin/k * 4(G/k)/(1+G/k)^2)^2 * exp(-pi^2 m^2/(2 ln2 F^2)), times the
    homogeneous decay exp(-2 gamma_h m/Delta) (unity for gamma_h = 0).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    x = p.gamma_comb / p.kappa
    amp = (p.kappa_in / p.kappa) * 4.0 * x / (1.0 + x) ** 2
    return amp ** 2 * dephasing_factor(m, p.finesse) * math.exp(-2.0 * p.gamma_h * m / p.delta)


def finesse_at_inverse_e(finesse):
    """Emission index m at which the dephasing factor equals 1/e."""
    return finesse * math.sqrt(2.0 * LN2) / math.pi


def fit_finesse(m, energies, f0=10.0):
    """Fit energies ~ A * dephasing_factor(m, F); returns (F, A, F_stderr)."""
    m = np.asarray(m, dtype=float)
    y = np.asarray(energies, dtype=float)

    def model(mm, a, f):
        return a * np.exp(-(math.pi ** 2) * mm * mm / (2.0 * LN2 * f * f))

    a0 = float(y[0] / dephasing_factor(m[0], f0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        popt, pcov = curve_fit(model, m, y, p0=(a0, f0), ftol=1e-15, xtol=1e-15, maxfev=20000)
    err = float(np.sqrt(pcov[1, 1])) if np.all(np.isfinite(pcov)) else math.nan
    return abs(float(popt[1])), float(popt[0]), err


# ----------------------------------------------------------- reflectance model

def comb_susceptibility_shape(density, omegas, linewidth=0.0):
    """Complex line shape h(omega) of a Gaussian-mixture density.

    Normalised so that chi = gamma_comb * h, i.e. Re h averages to 1 across
    the comb: h = (1/(pi nbar)) * integral n(w') / (linewidth + i(w' - omega)).
    """
    omegas = np.asarray(omegas, dtype=float)
    s = density.sigma
    wts = density.component_weights()
    z = ((omegas[:, None] - density.centers[None, :]) + 1j * linewidth) / (s * math.sqrt(2.0))
    h = (wofz(z) * wts).sum(axis=1) * math.sqrt(math.pi / 2.0) / s
    return h / (math.pi * density.mean_density())


@dataclass(frozen=True)
class ReflectanceTrace:
    """A cavity reflectance scan: probe detunings (rad/s) and |r|^2."""

    omegas: np.ndarray
    reflectance: np.ndarray
    kappa: float
    kappa_in: float
    delta_omega_a: float = 0.0


@dataclass(frozen=True)
class GammaCombEstimate:
    gamma_comb: float
    tooth_fwhm: float       # Hz
    rel_residual: float
    flagged: bool

    def __float__(self):
        return self.gamma_comb


def model_reflectance(trace: ReflectanceTrace, comb_spec, gamma_comb, tooth_fwhm=None):
    from dataclasses import replace
    from .comb import GaussianLine, ToothShape
    spec = comb_spec
    if tooth_fwhm is not None and not isinstance(spec, GaussianLine):
        spec = replace(spec, tooth=ToothShape("gaussian", tooth_fwhm))
    h = comb_susceptibility_shape(build_comb(spec), trace.omegas)
    denom = trace.kappa + 1j * (trace.delta_omega_a - trace.omegas) + gamma_comb * h
    return np.abs(-1.0 + 2.0 * trace.kappa_in / denom) ** 2


def estimate_gamma_comb(trace: ReflectanceTrace, comb_spec, threshold=0.05) -> GammaCombEstimate:
    """Fit an effective comb absorption rate to a reflectance scan.

    Tooth positions come from ``comb_spec``; the rate and the tooth width are
    free. ``flagged`` is set when the RMS residual relative to the spectrum's
    dynamic range exceeds ``threshold``.
    """
    r = np.asarray(trace.reflectance, dtype=float)
    empty = model_reflectance(trace, comb_spec, 0.0)
    span = float(np.ptp(np.concatenate([r, empty]))) or 1.0
    fwhm0 = comb_spec.tooth.fwhm_gamma if hasattr(comb_spec, "tooth") else None

    def resid(x):
        g = x[0] * trace.kappa
        fw = x[1] * fwhm0 if fwhm0 else None
        return model_reflectance(trace, comb_spec, g, fw) - r

    best = None
    for g0 in (1e-3, 1e-2, 0.1, 1.0, 10.0):
        x0 = [g0, 1.0] if fwhm0 else [g0]
        lb = [0.0, 0.2] if fwhm0 else [0.0]
        ub = [1e4, 5.0] if fwhm0 else [1e4]
        if not fwhm0:
            res = least_squares(lambda x: resid([x[0], 1.0]), x0, bounds=(lb, ub), xtol=1e-14,
                                ftol=1e-14)
        else:
            res = least_squares(resid, x0, bounds=(lb, ub), xtol=1e-14, ftol=1e-14)
        if best is None or res.cost < best.cost:
            best = res
    x, cost = best.x, best.cost
    # no absorption at all is always a candidate (flat scans are ill-conditioned)
    r0 = empty - r
    if 0.5 * float(r0 @ r0) <= cost:
        x, cost = np.array([0.0, 1.0]), 0.5 * float(r0 @ r0)
    g = float(x[0] * trace.kappa)
    fw = float(x[1] * fwhm0) if fwhm0 else math.nan
    rel = float(math.sqrt(2.0 * cost / r.size) / span)
    return GammaCombEstimate(g, fw, rel, rel > threshold)
