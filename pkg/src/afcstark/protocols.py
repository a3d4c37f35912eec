"""Experiment builders: memory time, frequency shift, bandwidth, photon echo.

Every builder returns an immutable :class:`ProtocolSpec` holding the optical
input, the derived electric pulses and the analysis window of the emission
of interest. Times are in seconds, measured from the input pulse centre.
"""
from __future__ import annotations

import logging

import numpy as np
from dataclasses import dataclass, field, replace

from .comb import CombSpec, GaussianLine
from .dynamics import (InputPulse, SolverConfig, bandwidth_from_duration, simulate_protocol,
                       trace_metrics)
from .stark import ElectricPulse, FieldProfile, StarkModel, design_pi_pair

log = logging.getLogger(__name__)

# output-window electric pulses span t_emit +/- this many input FWHMs
WINDOW_FWHM = 2.5


@dataclass(frozen=True)
class ProtocolSpec:
    variant: str
    params: dict
    comb: CombSpec | GaussianLine
    input: InputPulse
    e_pulses: tuple
    emission_time: float
    analysis_window: tuple
    t_end: float
    rephase_times: tuple = ()
    bin_period: float | None = None
    solver_log: dict = field(default_factory=dict)


def _default_input(fwhm):
    return InputPulse(t_center=0.0, fwhm=fwhm)


def build_memory_time(comb: CombSpec, m: int, field: float, stark: StarkModel | None = None,
                      profile: FieldProfile | None = None, input: InputPulse | None = None,
                      grid: float | None = None, t_end: float | None = None) -> ProtocolSpec:
    """Digital storage time m/Delta using one pi pulse pair.

    The first pulse sits half a timing grid after the input and the second at
    grid/2 + (m-1)*grid, so only the m-th rephasing is emitted. ``grid``
    defaults to 1/Delta; the measured device used a 50 ns grid. ``field`` is in
    V/cm. No pulses are applied for m = 1.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    stark = stark or StarkModel()
    period = 1.0 / comb.period_delta
    grid = grid or period
    input = input or _default_input(period / 6.0)
    t0 = input.t_center
    t_emit = t0 + m * period
    need = t_emit + 0.5 * period
    if t_end is None:
        t_end = t0 + (m + 1) * period
    elif t_end < need:
        raise ValueError(f"emission m={m} at {t_emit * 1e9:.1f} ns needs t_end >= {need * 1e9:.1f} ns")
    pulses = ()
    if m > 1:
        pulses = design_pi_pair(stark, field, t0 + 0.5 * grid, t0 + 0.5 * grid + (m - 1) * grid,
                                profile)
    return ProtocolSpec(
        variant="memory_time",
        params={"m": m, "field_vcm": field, "grid_s": grid},
        comb=comb, input=input, e_pulses=tuple(pulses), emission_time=t_emit,
        analysis_window=(t_emit - 0.5 * period, t_emit + 0.5 * period),
        t_end=t_end, bin_period=period)


def build_frequency(comb: CombSpec, volts: float, profile: FieldProfile | None = None,
                    input: InputPulse | None = None) -> ProtocolSpec:
    """Shift the output frequency with one parallel pulse over the emission bin.

    The comb must hold a single subclass. The pulse covers
    [t_emit - 1/(2 Delta), t_emit + 1/(2 Delta)].
    """
    if comb.subclass_weights[1] != 0:
        raise ValueError("frequency protocol needs a single-subclass comb (w_minus = 0)")
    profile = profile or FieldProfile.ideal_parallel()
    if profile.kind == "ideal_quadrupole":
        raise ValueError("frequency protocol uses a parallel field profile")
    period = 1.0 / comb.period_delta
    input = input or _default_input(bandwidth_from_duration(6e6))
    t_emit = input.t_center + period
    pulses = ()
    if volts != 0:
        pulses = (ElectricPulse(t_emit, period, volts, profile),)
    window = (t_emit - 0.5 * period, t_emit + 0.5 * period)
    return ProtocolSpec(
        variant="frequency_shift", params={"volts": volts},
        comb=comb, input=input, e_pulses=pulses, emission_time=t_emit,
        analysis_window=window, t_end=window[1], bin_period=period)


def expected_frequency_shift(stark: StarkModel, volts, profile: FieldProfile | None = None):
    """Nominal output shift (Hz) of the frequency protocol: s_b * E."""
    profile = profile or FieldProfile.ideal_parallel()
    return stark.s_b * volts * stark.impedance_factor * profile.nominal_e_per_volt()


def compensation_area(p1: ElectricPulse, p3: ElectricPulse, t_in: float, t_emit: float):
    """Volt-seconds the wait-time pulse must cancel.

    Phase picked up by an ion in pulse 1 after the input centre and in pulse 3
    before the emission centre; zeroing the total removes the
    position-dependent phase at the emission centre.
    """
    a1 = p1.volts * (p1.area - p1.env_integral(t_in))
    a3 = p3.volts * p3.env_integral(t_emit)
    return a1 + a3


def build_bandwidth(comb: CombSpec, in_volts: float, out_volts: float,
                    profile: FieldProfile | None = None, input: InputPulse | None = None,
                    max_volts: float = 10.0, gap_margin: float = 0.1,
                    compensation_scale: float = 1.0) -> ProtocolSpec:
    """Gradient pulses on input and output plus a wait-time compensation pulse.

    Output/input edge-field ratio sets the bandwidth change. The compensation
    pulse fills the wait gap (minus ``gap_margin`` on each side) with the
    amplitude that zeroes the net position-dependent phase at the emission
    centre, times ``compensation_scale`` (used by :func:`tune_compensation`).
    """
    profile = profile or FieldProfile.ideal_quadrupole()
    if profile.kind == "ideal_parallel":
        raise ValueError("bandwidth protocol needs a gradient (quadrupole) profile")
    input = input or _default_input(77.4e-9)
    period = 1.0 / comb.period_delta
    t_in = input.t_center
    t_emit = t_in + period
    half = WINDOW_FWHM * input.fwhm
    p1 = ElectricPulse(t_in, 2 * half, in_volts, profile)
    p3 = ElectricPulse(t_emit, 2 * half, out_volts, profile)
    gap = (t_emit - half) - (t_in + half)
    dur = gap * (1.0 - 2.0 * gap_margin)
    if dur <= 0:
        raise ValueError(
            f"no wait window for the compensation pulse ({gap * 1e9:.1f} ns gap); "
            "use a longer storage time (smaller comb period) or a shorter input")
    area = compensation_area(p1, p3, t_in, t_emit) * compensation_scale
    v2 = -area / dur
    if abs(v2) > max_volts:
        raise ValueError(
            f"compensation needs {abs(v2):.2f} V over {dur * 1e9:.1f} ns, above the "
            f"{max_volts} V limit; use a longer storage time")
    p2 = ElectricPulse(0.5 * (t_in + half + t_emit - half), dur, v2, profile)
    log.info("bandwidth compensation: %.4f V for %.1f ns (scale %.4f)", v2, dur * 1e9,
             compensation_scale)
    return ProtocolSpec(
        variant="bandwidth",
        params={"in_volts": in_volts, "out_volts": out_volts},
        comb=comb, input=input, e_pulses=(p1, p2, p3), emission_time=t_emit,
        analysis_window=(t_emit - half, t_emit + half), t_end=t_emit + half,
        bin_period=period,
        solver_log={"compensation_volts": v2, "compensation_duration_s": dur,
                    "compensation_scale": compensation_scale, "mode": "phase"})


def build_echo(tau: float, with_field_pair: bool, line: GaussianLine | None = None,
               input: InputPulse | None = None, stark: StarkModel | None = None,
               field: float = 2000.0, second_area_factor: float = 1.0,
               profile: FieldProfile | None = None) -> ProtocolSpec:
    """Two-pulse photon echo on a smooth line, optionally with a +/- field pair.

    The rephasing pulse at ``tau`` is an ideal optical pi rotation; the echo
    appears at 2*tau. The pair sits at tau/3 and 2*tau/3; ``second_area_factor``
    scales the second pulse (1 restores the phase exactly, 0 omits it).
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    line = line or GaussianLine(fwhm=50e6)
    input = input or _default_input(10e-9)
    stark = stark or StarkModel()
    t0 = input.t_center
    pulses = ()
    if with_field_pair:
        first, second = design_pi_pair(stark, field, t0 + tau / 3, t0 + 2 * tau / 3, profile)
        pulses = (first,) if second_area_factor == 0 else (first, second.scaled(second_area_factor))
    t_echo = t0 + 2 * tau
    return ProtocolSpec(
        variant="echo",
        params={"tau_s": tau, "with_field_pair": with_field_pair, "field_vcm": field,
                "second_area_factor": second_area_factor},
        comb=line, input=input, e_pulses=pulses, emission_time=t_echo,
        analysis_window=(t_echo - 0.5 * tau, t_echo + 0.5 * tau), t_end=t_echo + 0.5 * tau,
        rephase_times=(t0 + tau,))


def run_protocol(spec: ProtocolSpec, cavity, ensemble, stark, dt=None, t_end=None,
                 record_dt=0.1e-9):
    solver = SolverConfig(t_end=t_end if t_end is not None else spec.t_end, dt=dt,
                          record_dt=record_dt)
    meta = {"variant": spec.variant, "params": dict(spec.params), **spec.solver_log}
    return simulate_protocol(cavity, ensemble, stark, spec.input, spec.e_pulses, solver,
                             spec.rephase_times, spec.bin_period, meta)


def tune_compensation(comb, in_volts, out_volts, simulate, bounds=(0.8, 1.2), xatol=2e-3,
                      **kw):
    """Refine the compensation area by maximising simulated output energy.

    ``simulate(spec) -> TraceResult``. Starts from the phase-zeroing area and
    searches ``compensation_scale`` within ``bounds``. Returns the tuned spec;
    its ``solver_log`` records the search.
    """
    from scipy.optimize import minimize_scalar

    def neg_energy(scale):
        spec = build_bandwidth(comb, in_volts, out_volts, compensation_scale=scale, **kw)
        return -trace_metrics(simulate(spec), spec.analysis_window).energy

    res = minimize_scalar(neg_energy, bounds=bounds, method="bounded",
                          options={"xatol": xatol})
    spec = build_bandwidth(comb, in_volts, out_volts, compensation_scale=float(res.x), **kw)
    log_ = dict(spec.solver_log, mode="energy", evaluations=int(res.nfev),
                energy=float(-res.fun))
    return replace(spec, solver_log=log_)


def suppression_depth_db(suppressed, reference, spec: ProtocolSpec):
    """Peak power between the pi-pair pulses relative to the unsuppressed first-emission peak.

    ``reference`` is the same protocol without pulses (m = 1). Returns a positive
    number of dB when emission is suppressed.
    """
    if len(spec.e_pulses) < 2:
        raise ValueError("protocol has no pulse pair")
    lo, hi = spec.e_pulses[0].t_stop, spec.e_pulses[1].t_start
    period = spec.bin_period
    t0 = spec.input.t_center
    between = suppressed.power[(suppressed.times >= lo) & (suppressed.times <= hi)]
    ref_mask = np.abs(reference.times - (t0 + period)) <= 0.5 * period
    return float(10.0 * np.log10(reference.power[ref_mask].max() / between.max()))


def ideal_gradient_envelope(tau, input: InputPulse, in_field_max, ratio, stark: StarkModel):
    """Output amplitude envelope of the bandwidth protocol for an ideal gradient.

    Ions spread uniformly between -E_max and +E_max; with the net phase zeroed
    at the emission centre each ion keeps a residual (ratio - 1) * 2 pi s_b E(x) * tau,
    so the emission is the input envelope times sinc((ratio - 1) a_max tau).
    ``tau`` is measured from the emission centre.
    """
    tau = np.asarray(tau, dtype=float)
    a_max = 2.0 * np.pi * stark.s_b * in_field_max
    gauss = np.exp(-2.0 * np.log(2.0) * tau ** 2 / input.fwhm ** 2)
    return gauss * np.sinc((ratio - 1.0) * a_max * tau / np.pi)
