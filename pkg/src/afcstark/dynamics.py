"""Time-domain cavity/ensemble simulation and trace analysis.

Internal units are SI: seconds, rad/s. Ion positions stay in um and fields in
V/cm (see :mod:`afcstark.stark`).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from . import _kernel
from .stark import StarkModel

TWO_PI = 2.0 * math.pi
FOUR_LN2 = 4.0 * math.log(2.0)
T2_DEFAULT = 108e-6


class SimulationInstabilityError(RuntimeError):
    """Raised when the integrated field blows up."""


@dataclass(frozen=True)
class CavityParams:
    """One-sided cavity; all rates in rad/s, kappa is the field decay rate."""

    kappa: float
    kappa_in: float
    delta_omega_a: float = 0.0
    g_total: float = 0.0
    gamma_h: float = 1.0 / T2_DEFAULT

    def __post_init__(self):
        if not 0 < self.kappa_in <= self.kappa:
            raise ValueError("need 0 < kappa_in <= kappa")
        if self.g_total < 0 or self.gamma_h < 0:
            raise ValueError("g_total and gamma_h must be non-negative")

    @classmethod
    def from_quality(cls, q=3e4, frequency=195e12, coupling_ratio=0.2, **kw):
        kappa = TWO_PI * frequency / (2.0 * q)
        return cls(kappa=kappa, kappa_in=coupling_ratio * kappa, **kw)

    def replace(self, **kw):
        d = dict(kappa=self.kappa, kappa_in=self.kappa_in, delta_omega_a=self.delta_omega_a,
                 g_total=self.g_total, gamma_h=self.gamma_h)
        d.update(kw)
        return CavityParams(**d)


@dataclass(frozen=True)
class InputPulse:
    """Gaussian input field; ``fwhm`` is the intensity FWHM in seconds."""

    t_center: float = 0.0
    fwhm: float = 10e-9
    amplitude: complex = 1.0
    carrier_detuning: float = 0.0
    shape: str = "gaussian"

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError("input FWHM must be positive")
        if self.shape != "gaussian":
            raise ValueError(f"unsupported input shape {self.shape!r}")

    def field(self, t):
        t = np.asarray(t, dtype=float)
        dt = t - self.t_center
        return (self.amplitude * np.exp(-0.5 * FOUR_LN2 * dt * dt / self.fwhm ** 2)
                * np.exp(-1j * self.carrier_detuning * t))

    def energy(self):
        """Integral of |E_in|^2 over all time."""
        return abs(self.amplitude) ** 2 * self.fwhm * math.sqrt(math.pi / FOUR_LN2)

    def scaled(self, c):
        return InputPulse(self.t_center, self.fwhm, self.amplitude * c, self.carrier_detuning)


@dataclass(frozen=True)
class PulseTrain:
    """Superposition of Gaussian inputs; quacks like :class:`InputPulse`."""

    pulses: tuple

    def __post_init__(self):
        if not self.pulses:
            raise ValueError("pulse train needs at least one pulse")

    @property
    def t_center(self):
        return min(p.t_center for p in self.pulses)

    @property
    def fwhm(self):
        return max(p.fwhm for p in self.pulses)

    @property
    def carrier_detuning(self):
        return max(abs(p.carrier_detuning) for p in self.pulses)

    def field(self, t):
        return sum(p.field(t) for p in self.pulses)


@dataclass(frozen=True)
class SolverConfig:
    """Fixed-step integration settings (seconds).

    ``dt=None`` picks 0.1 / (fastest rate). ``t_start=None`` starts three input
    FWHMs before the input centre.
    """

    t_end: float
    dt: float | None = None
    t_start: float | None = None
    method: str = "rk4"
    record_dt: float = 0.1e-9
    check_dt: bool = True


@dataclass
class TraceResult:
    times: np.ndarray
    e_out: np.ndarray
    e_cavity: np.ndarray
    e_in: np.ndarray
    energy_bins: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.times) == len(self.e_out) == len(self.e_cavity)):
            raise ValueError("trace arrays differ in length")

    @property
    def record_dt(self):
        return float(self.times[1] - self.times[0])

    @property
    def power(self):
        return np.abs(self.e_out) ** 2

    def window_mask(self, window):
        t0, t1 = window
        return (self.times >= t0) & (self.times < t1)

    def energy(self, window=None):
        p = self.power if window is None else self.power[self.window_mask(window)]
        return float(p.sum() * self.record_dt)

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t_ns,re_out,im_out,power_out\n")
            for t, e, p in zip(self.times * 1e9, self.e_out, self.power):
                fh.write(f"{t:.6f},{e.real:.12e},{e.imag:.12e},{p:.12e}\n")


def max_detuning_rate(ensemble, coef, env):
    w = np.abs(ensemble.detuning0)
    if coef.shape[0]:
        w = w + (np.abs(coef) * np.abs(env).max(axis=0)[:, None]).sum(axis=0)
    return float(w.max()) if w.size else 0.0


def stark_coefficients(ensemble, stark, e_pulses):
    """Per-pulse, per-ion angular shift (rad/s) at unit envelope."""
    coef = np.zeros((len(e_pulses), ensemble.n))
    lo, hi = float(ensemble.position_x.min()), float(ensemble.position_x.max())
    for p, pulse in enumerate(e_pulses):
        pulse.profile.check_covers(lo, hi)
        e = pulse.profile.e_per_volt(ensemble.position_x) * pulse.volts * stark.impedance_factor
        coef[p] = TWO_PI * ensemble.subclass * ensemble.s_individual * e
    return coef


def simulate_protocol(cavity: CavityParams, ensemble, stark: StarkModel, input: InputPulse,
                      e_pulses=(), solver: SolverConfig | None = None, rephase_times=(),
                      bin_period=None, metadata=None) -> TraceResult:
    """Integrate the coupled cavity/ion equations and record E_out.

    The cavity coupling uses ``cavity.g_total`` split evenly over the ions.
    ``rephase_times`` apply an ideal instantaneous optical pi rotation
    (sigma -> conj(sigma)) to every ion; this stands in for the second pulse of
    a two-pulse photon echo, which a weak-excitation model cannot produce.
    ``bin_period`` (s) enables per-emission energy bins around t_in + m*period.
    """
    solver = solver or SolverConfig(t_end=input.t_center + 10 * input.fwhm)
    if solver.method != "rk4":
        raise ValueError(f"unknown integration method {solver.method!r}")
    e_pulses = tuple(e_pulses)
    t_start = solver.t_start if solver.t_start is not None else input.t_center - 3.0 * input.fwhm
    span = solver.t_end - t_start
    if not span > 0:
        raise ValueError("t_end must exceed t_start")

    coef = stark_coefficients(ensemble, stark, e_pulses)
    g = cavity.g_total / math.sqrt(ensemble.n)
    peak_env = np.array([[1.0] * len(e_pulses)]) if e_pulses else np.zeros((1, 0))
    w_max = max_detuning_rate(ensemble, coef, peak_env)
    rate = max(cavity.kappa + abs(cavity.delta_omega_a), w_max + abs(input.carrier_detuning),
               cavity.g_total)
    dt_limit = 0.1 / rate
    dt = solver.dt if solver.dt is not None else dt_limit
    if solver.check_dt and dt > dt_limit * (1 + 1e-9):
        raise ValueError(
            f"dt={dt * 1e12:.3g} ps does not resolve the fastest rate; need dt <= "
            f"{dt_limit * 1e12:.3g} ps (0.1/max(kappa, |detuning|, g_total))")

    record_every = max(1, int(round(solver.record_dt / dt)))
    nsteps = int(math.ceil(span / dt / record_every)) * record_every
    t_nodes = t_start + dt * np.arange(nsteps + 1)
    t_half = t_start + 0.5 * dt * np.arange(2 * nsteps + 1)
    ein = input.field(t_half).astype(np.complex128)
    env = np.empty((nsteps, len(e_pulses)))
    for p, pulse in enumerate(e_pulses):
        env[:, p] = np.diff(pulse.env_integral(t_nodes)) / dt

    conj_steps = np.zeros(nsteps, dtype=np.bool_)
    for tr in rephase_times:
        s = int(round((tr - t_start) / dt))
        if 0 <= s < nsteps:
            conj_steps[s] = True

    drive = math.sqrt(2.0 * cavity.kappa_in)
    scale = float(np.abs(ein).max()) if ein.size else 0.0
    blowup = 1e3 * (scale if scale > 0 else 1.0)
    sig = np.zeros(ensemble.n, dtype=np.complex128)
    rec, bad = _kernel.rk4_evolve(
        0j, sig, ensemble.detuning0.astype(np.float64), float(cavity.gamma_h),
        np.ascontiguousarray(coef), env, ein, float(cavity.kappa),
        float(cavity.delta_omega_a), drive, g, dt, conj_steps, record_every, blowup)
    if bad >= 0:
        raise SimulationInstabilityError(
            f"field diverged near t={(t_start + bad * dt) * 1e9:.3f} ns with dt="
            f"{dt * 1e12:.3g} ps; reduce dt (stable bound ~{dt_limit * 1e12:.3g} ps)")

    times = t_nodes[::record_every]
    e_in_rec = input.field(times)
    e_out = -e_in_rec + drive * rec
    meta = dict(metadata or {})
    meta.update(dt=dt, n_ions=ensemble.n, seed=ensemble.rng_seed, n_steps=nsteps)
    trace = TraceResult(times, e_out, rec, e_in_rec, {}, meta)
    if bin_period:
        trace.energy_bins = energy_bins(trace, input.t_center, bin_period)
    return trace


def energy_bins(trace, t_ref, period):
    """Energy in [t_ref + m*T - T/2, t_ref + m*T + T/2) for every full bin m >= 0."""
    out = {}
    m = 0
    while t_ref + (m + 0.5) * period <= trace.times[-1] + 1e-15:
        c = t_ref + m * period
        out[m] = trace.energy((c - 0.5 * period, c + 0.5 * period))
        m += 1
    return out


def empty_cavity_reflectance(cavity: CavityParams, omega=0.0):
    """|E_out/E_in|^2 of the bare cavity at probe detuning omega (rad/s)."""
    r = -1.0 + 2.0 * cavity.kappa_in / (cavity.kappa + 1j * (cavity.delta_omega_a - omega))
    return float(abs(r) ** 2)


def ensemble_susceptibility(ensemble, omegas, g_total, detunings=None, linewidth=None,
                            chunk=2048):
    """chi(omega) = g^2 sum_i 1/(gamma + i(w_i - omega)) for sampled ions."""
    w = ensemble.detuning0 if detunings is None else np.asarray(detunings)
    gamma = linewidth if linewidth is not None else 1.0 / T2_DEFAULT
    g2 = g_total ** 2 / w.size
    omegas = np.asarray(omegas, dtype=float)
    chi = np.zeros(omegas.shape, dtype=np.complex128)
    for k in range(0, w.size, chunk):
        wk = w[k:k + chunk]
        chi += (1.0 / (gamma + 1j * (wk[None, :] - omegas[:, None]))).sum(axis=1)
    return g2 * chi


def reflectance_from_susceptibility(cavity, omegas, chi):
    denom = cavity.kappa + 1j * (cavity.delta_omega_a - np.asarray(omegas)) + chi
    return np.abs(-1.0 + 2.0 * cavity.kappa_in / denom) ** 2


def steady_state_reflectance(cavity, ensemble, omegas, detunings=None, linewidth=None):
    """Weak-probe reflectance |E_out/E_in|^2 on a grid of probe detunings (rad/s).

    ``linewidth`` (rad/s) is the per-ion Lorentzian half-width; it defaults to
    ``cavity.gamma_h`` and is normally set to the probe resolution so that a
    finite sample renders a smooth spectrum.
    """
    lw = cavity.gamma_h if linewidth is None else linewidth
    chi = ensemble_susceptibility(ensemble, omegas, cavity.g_total, detunings, lw)
    return reflectance_from_susceptibility(cavity, omegas, chi)


# ---------------------------------------------------------------- trace metrics

def _gauss(x, a, x0, w):
    return a * np.exp(-FOUR_LN2 * (x - x0) ** 2 / (w * w))


def _moments(x, y):
    y = np.clip(y, 0, None)
    s = y.sum()
    if s <= 0:
        return float(x[len(x) // 2]), 0.0
    c = float((x * y).sum() / s)
    rms = float(math.sqrt(max(((x - c) ** 2 * y).sum() / s, 0.0)))
    return c, rms


def fit_gaussian(x, y):
    """Fit y ~ a*exp(-4ln2 (x-x0)^2/w^2); returns (a, x0, w, converged)."""
    c, rms = _moments(x, y)
    w0 = 2.0 * math.sqrt(2.0 * math.log(2.0)) * rms
    p0 = (float(np.max(y)), c, w0 if w0 > 0 else float(x[-1] - x[0]) / 4)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p, _ = curve_fit(_gauss, x, y, p0=p0, ftol=1e-15, xtol=1e-15, gtol=1e-15,
                             maxfev=20000)
        ok = bool(np.all(np.isfinite(p)) and p[2] != 0 and x[0] <= p[1] <= x[-1])
        return float(p[0]), float(p[1]), abs(float(p[2])), ok
    except (RuntimeError, ValueError):
        return p0[0], c, w0, False


@dataclass
class TraceMetrics:
    fwhm_time: float          # s
    fwhm_freq: float          # Hz, Gaussian fit to the power spectrum
    fwhm_freq_from_time: float  # Hz, 4 ln2 / (2 pi fwhm_time)
    center_freq: float        # Hz
    center_time: float        # s
    energy: float
    converged: bool = True

    def to_json(self, m_bins=None):
        return {
            "fwhm_ns": self.fwhm_time * 1e9,
            "fwhm_mhz": self.fwhm_freq * 1e-6,
            "fwhm_mhz_from_time": self.fwhm_freq_from_time * 1e-6,
            "center_mhz": self.center_freq * 1e-6,
            "center_ns": self.center_time * 1e9,
            "energy": self.energy,
            "converged": self.converged,
            "m_bins": {str(k): v for k, v in (m_bins or {}).items()},
        }


def bandwidth_from_duration(fwhm_time):
    """Transform-limited Gaussian: intensity spectral FWHM from temporal FWHM."""
    return FOUR_LN2 / (TWO_PI * fwhm_time)


def trace_metrics(trace: TraceResult, window, signal=None, pad_factor=16) -> TraceMetrics:
    """Gaussian-fit metrics of one emission inside ``window`` = (t0, t1) s.

    Spectrum convention: S(f) = sum e(t) exp(+2 pi i f t), so an emitter at
    angular detuning +w appears at f = +w/(2 pi).
    """
    mask = trace.window_mask(window)
    t = trace.times[mask]
    e = (trace.e_out if signal is None else signal)[mask]
    if t.size < 8:
        raise ValueError("analysis window holds too few samples")
    dt = trace.record_dt
    p = np.abs(e) ** 2
    energy = float(p.sum() * dt)

    t_ns = (t - t[0]) * 1e9
    a, t0, w, ok_t = fit_gaussian(t_ns, p)
    if not ok_t:
        t0, rms = _moments(t_ns, p)
        w = 2.0 * math.sqrt(2.0 * math.log(2.0)) * rms
    fwhm_time = w * 1e-9
    center_time = t[0] + t0 * 1e-9

    nfft = 1 << int(math.ceil(math.log2(t.size * pad_factor)))
    spec = np.fft.ifft(e, n=nfft) * nfft
    spec = np.fft.fftshift(spec * np.exp(2j * math.pi * np.fft.fftfreq(nfft, dt) * t[0]))
    f_mhz = np.fft.fftshift(np.fft.fftfreq(nfft, dt)) * 1e-6
    ps = np.abs(spec) ** 2
    keep = ps > 1e-8 * ps.max()
    idx = np.nonzero(keep)[0]
    sl = slice(idx[0], idx[-1] + 1)
    a_f, f0, wf, ok_f = fit_gaussian(f_mhz[sl], ps[sl])
    if not ok_f:
        f0, rms = _moments(f_mhz[sl], ps[sl])
        wf = 2.0 * math.sqrt(2.0 * math.log(2.0)) * rms
    return TraceMetrics(
        fwhm_time=fwhm_time,
        fwhm_freq=wf * 1e6,
        fwhm_freq_from_time=bandwidth_from_duration(fwhm_time) if fwhm_time > 0 else math.nan,
        center_freq=f0 * 1e6,
        center_time=center_time,
        energy=energy,
        converged=ok_t and ok_f,
    )
