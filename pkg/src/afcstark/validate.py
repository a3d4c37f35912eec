"""Small-ensemble invariant checks backing the ``validate`` subcommand."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .comb import CombSpec, Resonator, sample_ensemble
from .dynamics import (CavityParams, InputPulse, PulseTrain, SolverConfig,
                       empty_cavity_reflectance, simulate_protocol)
from .stark import ElectricPulse, FieldProfile, StarkModel

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def to_json(self):
        return asdict(self)


def _setup(n, seed):
    comb = CombSpec.from_finesse(20e6, 10.0, 100e6, 0.0, (0.5, 0.5))
    cavity = CavityParams.from_quality(g_total=TWO_PI * 0.3e9)
    stark = StarkModel()
    ens = sample_ensemble(comb, n, Resonator(), stark, seed=seed, g_total=cavity.g_total)
    pulses = (ElectricPulse(25e-9, 10e-9, 3.0, FieldProfile.ideal_parallel()),
              ElectricPulse(45e-9, 10e-9, -3.0, FieldProfile.ideal_parallel()))
    return cavity, ens, stark, pulses


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def check_linearity(n=200, seed=0, tol=1e-12):
    cavity, ens, stark, pulses = _setup(n, seed)
    solver = SolverConfig(t_start=-30e-9, t_end=80e-9)
    a = InputPulse(0.0, 10e-9, 1.0)
    b = InputPulse(6e-9, 7e-9, 0.4 - 0.3j, TWO_PI * 5e6)
    alpha, beta = 0.7 + 0.2j, -1.3 + 0.5j

    def run(inp):
        return simulate_protocol(cavity, ens, stark, inp, pulses, solver).e_cavity

    both = run(PulseTrain((a.scaled(alpha), b.scaled(beta))))
    sep = alpha * run(a) + beta * run(b)
    err = _rel(both, sep)
    return CheckResult("linearity", err <= tol, err, tol, "superposition of two inputs")


def check_translation(n=200, seed=0, tol=1e-9, shift_mhz=3.0):
    """Shift ions, cavity and carrier by delta: output gains exp(-i delta t)."""
    cavity, ens, stark, pulses = _setup(n, seed)
    delta = TWO_PI * shift_mhz * 1e6
    inp = InputPulse(0.0, 10e-9, 1.0)
    base = simulate_protocol(cavity, ens, stark, inp, pulses,
                             SolverConfig(t_start=-30e-9, t_end=80e-9))
    dt = base.metadata["dt"]
    solver = SolverConfig(t_start=-30e-9, t_end=80e-9, dt=dt, check_dt=False)
    moved = simulate_protocol(cavity.replace(delta_omega_a=cavity.delta_omega_a + delta),
                              ens.shifted(delta), stark,
                              replace(inp, carrier_detuning=delta), pulses, solver)
    expect = base.e_out * np.exp(-1j * delta * base.times)
    err = _rel(moved.e_out, expect)
    return CheckResult("translation_covariance", err <= tol, err, tol,
                       f"shift {shift_mhz} MHz")


def check_energy(n=200, seed=0):
    """A passive system returns no more energy than it receives."""
    cavity, ens, stark, pulses = _setup(n, seed)
    inp = InputPulse(0.0, 10e-9, 1.0)
    tr = simulate_protocol(cavity, ens, stark, inp, pulses,
                           SolverConfig(t_start=-40e-9, t_end=400e-9))
    e_in = float(np.sum(np.abs(tr.e_in) ** 2) * tr.record_dt)
    ratio = tr.energy() / e_in
    return CheckResult("energy_inequality", ratio <= 1.0 + 1e-9, ratio, 1.0,
                       "E_out / E_in")


def check_empty_cavity(tol=1e-3):
    cavity = CavityParams.from_quality(coupling_ratio=0.2)
    r0 = empty_cavity_reflectance(cavity)
    comb = CombSpec.from_finesse(20e6, 10.0, 100e6)
    ens = sample_ensemble(comb, 100, Resonator(), seed=0)
    inp = InputPulse(0.0, 10e-9, 1.0)
    tr = simulate_protocol(cavity, ens, StarkModel(), inp, (),
                           SolverConfig(t_start=-20e-9, t_end=5e-9))
    k = int(np.argmin(np.abs(tr.times)))
    r_sim = float(abs(tr.e_out[k] / tr.e_in[k]) ** 2)
    err = max(abs(r0 - 0.36), abs(r_sim - 0.36))
    return CheckResult("empty_cavity_reflectance", err <= tol, r_sim, tol,
                       f"closed form {r0:.6f}")


def check_replay(n=200, seed=7):
    out = []
    for _ in range(2):
        cavity, ens, stark, pulses = _setup(n, seed)
        tr = simulate_protocol(cavity, ens, stark, InputPulse(0.0, 10e-9), pulses,
                               SolverConfig(t_start=-30e-9, t_end=60e-9))
        out.append(tr.e_out)
    same = bool(np.array_equal(out[0], out[1]))
    return CheckResult("deterministic_replay", same, 0.0 if same else _rel(out[0], out[1]), 0.0,
                       f"seed {seed}")


def run_invariants(n=200, seed=0):
    return [
        check_linearity(n, seed),
        check_translation(n, seed),
        check_energy(n, seed),
        check_empty_cavity(),
        check_replay(n, seed + 7),
    ]
