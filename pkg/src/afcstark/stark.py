"""Electrode field profiles, electric pulses and linear Stark shifts.

Fields are in V/cm, positions in um, times in s. ``volts`` is the function
generator setting; the open-circuit electrodes see ``impedance_factor`` times
that.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi

DEFAULT_SCALE_PARALLEL = 314.8      # (V/cm) per electrode volt
DEFAULT_SCALE_GRADIENT = 5.0        # (V/cm/um) per electrode volt
DEFAULT_IMPEDANCE_FACTOR = 2.0


@dataclass(frozen=True, eq=False)
class FieldProfile:
    """E_y(x) per electrode volt.

    kinds: ``ideal_parallel`` (uniform), ``ideal_quadrupole`` (linear in x,
    zero at the centre) and ``tabulated`` (linear interpolation of a table,
    no extrapolation).
    """

    kind: str = "ideal_parallel"
    table: tuple | None = None
    scale_parallel: float = DEFAULT_SCALE_PARALLEL
    scale_gradient: float = DEFAULT_SCALE_GRADIENT

    def __post_init__(self):
        if self.kind not in ("ideal_parallel", "ideal_quadrupole", "tabulated"):
            raise ValueError(f"unknown field profile kind {self.kind!r}")
        if self.kind == "tabulated":
            if self.table is None or len(self.table[0]) < 2:
                raise ValueError("tabulated profile needs at least 2 points")
            x = np.asarray(self.table[0], dtype=float)
            if np.any(np.diff(x) <= 0):
                raise ValueError("tabulated profile x values must be strictly increasing")

    @classmethod
    def ideal_parallel(cls, scale=DEFAULT_SCALE_PARALLEL):
        return cls("ideal_parallel", scale_parallel=scale)

    @classmethod
    def ideal_quadrupole(cls, scale=DEFAULT_SCALE_GRADIENT):
        return cls("ideal_quadrupole", scale_gradient=scale)

    @classmethod
    def tabulated(cls, x_um, e_per_volt):
        x = tuple(float(v) for v in x_um)
        e = tuple(float(v) for v in e_per_volt)
        if len(x) != len(e):
            raise ValueError("x and e_per_volt columns differ in length")
        mean = float(np.trapezoid(e, x) / (x[-1] - x[0])) if len(x) > 1 else 0.0
        return cls("tabulated", table=(x, e), scale_parallel=mean)

    @classmethod
    def from_csv(cls, path):
        """Read a ``x_um,e_per_volt`` table."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["x_um", "e_per_volt"]:
                raise ValueError(f"{path}: header must be 'x_um,e_per_volt'")
            rows = [(float(r["x_um"]), float(r["e_per_volt"])) for r in reader]
        if not rows:
            raise ValueError(f"{path}: empty field table")
        x, e = zip(*rows)
        return cls.tabulated(x, e)

    def to_csv(self, path):
        if self.kind != "tabulated":
            raise ValueError("only tabulated profiles serialise to CSV")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("x_um,e_per_volt\n")
            for x, e in zip(*self.table):
                fh.write(f"{x!r},{e!r}\n")

    @property
    def span(self):
        if self.kind == "tabulated":
            return (self.table[0][0], self.table[0][-1])
        return (-math.inf, math.inf)

    def check_covers(self, lo, hi):
        a, b = self.span
        if lo < a or hi > b:
            raise ValueError(f"field profile spans [{a}, {b}] um but ions lie in [{lo}, {hi}] um")

    def e_per_volt(self, x):
        """Field per electrode volt, (V/cm)/V, at position(s) x in um."""
        x = np.asarray(x, dtype=float)
        if self.kind == "ideal_parallel":
            out = np.full_like(x, self.scale_parallel)
        elif self.kind == "ideal_quadrupole":
            out = self.scale_gradient * x
        else:
            xs, es = self.table
            if np.any(x < xs[0]) or np.any(x > xs[-1]):
                raise ValueError(f"x outside tabulated span [{xs[0]}, {xs[-1]}] um")
            out = np.interp(x, xs, es)
        return out if out.ndim else float(out)

    def nominal_e_per_volt(self):
        """Calibration field per electrode volt used to quote a nominal field."""
        if self.kind == "ideal_quadrupole":
            raise ValueError("quadrupole profiles have no nominal uniform field")
        return self.scale_parallel


def _smooth_ramp_integral(u):
    # integral of sin^2(pi/2 * s) for s in [0, u], u in [0, 1]
    return 0.5 * u - np.sin(math.pi * u) / (2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class ElectricPulse:
    """Time-windowed electrode bias.

    ``envelope`` is ``"rect"`` or ``"smoothed"``; the smoothed envelope ramps
    as sin^2 over ``rise`` seconds inside the window.
    """

    t_center: float
    duration: float
    volts: float
    profile: FieldProfile = FieldProfile()
    envelope: str = "rect"
    rise: float = 0.0

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("pulse duration must be positive")
        if self.envelope not in ("rect", "smoothed"):
            raise ValueError(f"unknown envelope {self.envelope!r}")
        if self.envelope == "smoothed" and not 0 < self.rise <= self.duration / 4:
            raise ValueError("smoothed rise must be in (0, duration/4]")

    @property
    def t_start(self):
        return self.t_center - 0.5 * self.duration

    @property
    def t_stop(self):
        return self.t_center + 0.5 * self.duration

    def scaled(self, factor):
        return ElectricPulse(self.t_center, self.duration, self.volts * factor,
                             self.profile, self.envelope, self.rise)

    def env(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.t_start) & (t <= self.t_stop)
        if self.envelope == "rect":
            out = inside.astype(float)
        else:
            d = np.minimum(t - self.t_start, self.t_stop - t)
            out = np.where(inside, np.sin(0.5 * math.pi * np.clip(d / self.rise, 0, 1)) ** 2, 0.0)
        return out if out.ndim else float(out)

    def env_integral(self, t):
        """Exact integral of the envelope from -inf to t (seconds)."""
        t = np.asarray(t, dtype=float)
        s = np.clip(t - self.t_start, 0.0, self.duration)
        if self.envelope == "rect":
            out = s
        else:
            r = self.rise
            out = (r * _smooth_ramp_integral(np.clip(s / r, 0, 1))
                   + np.clip(s - r, 0.0, self.duration - 2 * r)
                   + r * (0.5 - _smooth_ramp_integral(
                       np.clip((self.duration - s) / r, 0, 1))) * (s > self.duration - r))
        return out if out.ndim else float(out)

    @property
    def area(self):
        """Envelope area in seconds."""
        return float(self.env_integral(self.t_stop))


@dataclass(frozen=True)
class StarkModel:
    s_b: float = 11.8e3           # Hz per V/cm
    gamma_s: float = 0.0          # FWHM of s across ions, Hz per V/cm
    impedance_factor: float = DEFAULT_IMPEDANCE_FACTOR

    def __post_init__(self):
        if not self.s_b > 0:
            raise ValueError("Stark parameter s_b must be positive")
        if self.gamma_s < 0:
            raise ValueError("Stark inhomogeneity gamma_s must be non-negative")


def eval_field(pulses, x, t, impedance_factor=DEFAULT_IMPEDANCE_FACTOR):
    """Superposed field in V/cm at positions ``x`` (um) and times ``t`` (s)."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    total = np.zeros(np.broadcast(x, t).shape)
    for p in pulses:
        total = total + p.env(t) * p.profile.e_per_volt(x) * p.volts * impedance_factor
    return total if total.ndim else float(total)


def ion_shift(model, ion, field):
    """Angular Stark shift 2*pi*subclass*s*E of an ion (or ensemble arrays)."""
    return TWO_PI * np.asarray(ion.subclass) * np.asarray(ion.s_individual) * np.asarray(field)


def volts_for_field(field, profile=None, impedance_factor=DEFAULT_IMPEDANCE_FACTOR):
    """Generator volts giving a nominal uniform ``field`` (V/cm)."""
    profile = profile or FieldProfile.ideal_parallel()
    return field / (profile.nominal_e_per_volt() * impedance_factor)


def volts_for_edge_field(e_max, profile, half_length_um, impedance_factor=DEFAULT_IMPEDANCE_FACTOR):
    """Generator volts giving quadrupole edge field ``e_max`` at x = half_length."""
    return e_max / (profile.scale_gradient * half_length_um * impedance_factor)


def subclass_phase_difference(model, pulse, x=0.0):
    """Phase (rad) opened between the two subclasses by one pulse at position x."""
    e = pulse.profile.e_per_volt(x) * pulse.volts * model.impedance_factor
    return TWO_PI * 2.0 * model.s_b * e * pulse.area


def pi_duration(model, field_amplitude):
    """Rectangular duration opening a pi phase between subclasses: 1/(4 s_b E)."""
    return 1.0 / (4.0 * model.s_b * field_amplitude)


def design_pi_pair(model, field_amplitude, t_first, t_second, profile=None,
                   envelope="rect", rise=0.0):
    """Two opposite pulses; the first opens a pi subclass phase, the second closes it.

    Returns ``(first, second)`` centred at ``t_first`` and ``t_second``. For the
    smoothed envelope the window is lengthened by ``rise`` so the envelope area
    still equals the rectangular pi duration.
    """
    if not field_amplitude > 0:
        raise ValueError("field amplitude must be positive")
    if not t_second > t_first:
        raise ValueError("second pulse must come after the first")
    profile = profile or FieldProfile.ideal_parallel()
    t_pi = pi_duration(model, field_amplitude)
    duration = t_pi + (rise if envelope == "smoothed" else 0.0)
    if duration > t_second - t_first:
        raise ValueError(
            f"pi pulses of {duration * 1e9:.2f} ns overlap with a "
            f"{(t_second - t_first) * 1e9:.2f} ns separation")
    volts = volts_for_field(field_amplitude, profile, model.impedance_factor)
    first = ElectricPulse(t_first, duration, volts, profile, envelope, rise)
    second = ElectricPulse(t_second, duration, -volts, profile, envelope, rise)
    return first, second
