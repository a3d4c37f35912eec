"""JSON run configuration with unit-suffixed keys.

Every physical quantity carries its unit in the key (``delta_mhz``,
``pulse_kv_per_cm``, ``t2_us``). Rates quoted in MHz/GHz are ordinary
frequencies (rate / 2 pi). Parsing is strict: unknown or missing keys raise
:class:`ConfigError` naming the dotted key path. Conversion to SI happens
once, in :func:`build_run`.
"""
from __future__ import annotations

import dataclasses
import json
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .comb import CombSpec, GaussianLine, Resonator, ToothShape, sample_ensemble
from .dynamics import CavityParams, InputPulse
from .protocols import (build_bandwidth, build_echo, build_frequency, build_memory_time,
                        ProtocolSpec)
from .stark import FieldProfile, StarkModel, volts_for_edge_field

TWO_PI = 2.0 * math.pi
VARIANTS = ("memory_time", "frequency_shift", "bandwidth", "echo")


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class CombConfig:
    delta_mhz: float | None = None
    finesse: float | None = None
    tooth_fwhm_mhz: float | None = None
    bandwidth_mhz: float | None = None
    line_fwhm_mhz: float | None = None
    center_mhz: float = 0.0
    subclass_weights: list = field(default_factory=lambda: [0.5, 0.5])


@dataclass(frozen=True)
class CavityConfig:
    quality_factor: float = 3e4
    frequency_thz: float = 195.0
    kappa_ghz: float | None = None
    kappa_in_ratio: float = 0.2
    detuning_mhz: float = 0.0
    g_total_ghz: float = 0.6
    t2_us: float | None = 108.0


@dataclass(frozen=True)
class StarkConfig:
    s_b_khz_per_vcm: float = 11.8
    gamma_s_khz_per_vcm: float = 0.0
    impedance_factor: float = 2.0


@dataclass(frozen=True)
class FieldConfig:
    kind: str = "ideal_parallel"
    scale_parallel_vcm_per_v: float = 314.8
    scale_gradient_vcm_per_um_per_v: float = 5.0
    table_csv: str | None = None


@dataclass(frozen=True)
class ResonatorConfig:
    length_um: float = 100.0
    x_eff_um: float = 6.0


@dataclass(frozen=True)
class InputConfig:
    fwhm_ns: float | None = None
    amplitude: float = 1.0
    carrier_mhz: float = 0.0
    t_center_ns: float = 0.0


@dataclass(frozen=True)
class ProtocolConfig:
    m: int | None = None
    pulse_kv_per_cm: float | None = None
    grid_ns: float | None = None
    volts: float | None = None
    field_vcm: float | None = None
    in_volts: float | None = None
    out_volts: float | None = None
    in_edge_kv_per_cm: float | None = None
    out_edge_kv_per_cm: float | None = None
    max_volts: float = 10.0
    compensation: str = "phase"
    tau_ns: float | None = None
    with_field_pair: bool = False
    second_area_factor: float = 1.0


@dataclass(frozen=True)
class SolverSection:
    dt_ns: float | None = None
    t_end_ns: float | None = None
    record_dt_ns: float = 0.1


@dataclass(frozen=True)
class RunConfig:
    variant: str
    comb: CombConfig
    protocol: ProtocolConfig
    seed: int = 0
    n_ions: int = 10000
    sampling: str = "stratified"
    cavity: CavityConfig = field(default_factory=CavityConfig)
    stark: StarkConfig = field(default_factory=StarkConfig)
    field_profile: FieldConfig = field(default_factory=FieldConfig)
    resonator: ResonatorConfig = field(default_factory=ResonatorConfig)
    input: InputConfig = field(default_factory=InputConfig)
    solver: SolverSection = field(default_factory=SolverSection)

    def to_dict(self):
        return dataclasses.asdict(self)

    def with_overrides(self, **kw):
        """Return a copy with dotted-path overrides, e.g. ``{"protocol.m": 3}``."""
        d = self.to_dict()
        for path, value in kw.items():
            set_path(d, path, value)
        return parse_config(d)


_NUMBER = (int, float)


def _check_type(key, value, annotation):
    allowed = set(typing.get_args(annotation) or (annotation,))
    if value is None:
        if type(None) not in allowed:
            raise ConfigError(key, "must not be null")
        return value
    if bool in allowed:
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if int in allowed:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if float in allowed:
        if isinstance(value, bool) or not isinstance(value, _NUMBER):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if str in allowed:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    if list in allowed:
        if not isinstance(value, list):
            raise ConfigError(key, f"expected a list, got {value!r}")
        return list(value)
    return value


def _parse_section(cls, data, prefix):
    if not isinstance(data, dict):
        raise ConfigError(prefix or "<root>", "expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(f"{prefix}{key}", "unknown key")
    kw = {}
    for f in dataclasses.fields(cls):
        key = f"{prefix}{f.name}"
        hint = hints[f.name]
        if f.name not in data:
            if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
                raise ConfigError(key, "missing required key")
            continue
        if dataclasses.is_dataclass(hint):
            kw[f.name] = _parse_section(hint, data[f.name], key + ".")
        else:
            kw[f.name] = _check_type(key, data[f.name], hint)
    return cls(**kw)


def parse_config(data: dict) -> RunConfig:
    cfg = _parse_section(RunConfig, data, "")
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.variant not in VARIANTS:
        raise ConfigError("variant", f"must be one of {', '.join(VARIANTS)}")
    c = cfg.comb
    if cfg.variant == "echo":
        if c.line_fwhm_mhz is None:
            raise ConfigError("comb.line_fwhm_mhz", "echo runs need a smooth line width")
    else:
        for k in ("delta_mhz", "bandwidth_mhz"):
            if getattr(c, k) is None:
                raise ConfigError(f"comb.{k}", "missing required key")
        if (c.finesse is None) == (c.tooth_fwhm_mhz is None):
            raise ConfigError("comb.finesse", "give exactly one of finesse, tooth_fwhm_mhz")
    if len(c.subclass_weights) != 2:
        raise ConfigError("comb.subclass_weights", "expected two weights")
    if cfg.field_profile.kind not in ("ideal_parallel", "ideal_quadrupole", "tabulated"):
        raise ConfigError("field_profile.kind", f"unknown kind {cfg.field_profile.kind!r}")
    if cfg.field_profile.kind == "tabulated" and not cfg.field_profile.table_csv:
        raise ConfigError("field_profile.table_csv", "tabulated profile needs a table file")
    if cfg.sampling not in ("stratified", "iid"):
        raise ConfigError("sampling", "must be 'stratified' or 'iid'")
    p = cfg.protocol
    need = {
        "memory_time": ("m", "pulse_kv_per_cm"),
        "frequency_shift": (),
        "bandwidth": (),
        "echo": ("tau_ns",),
    }[cfg.variant]
    for k in need:
        if getattr(p, k) is None:
            raise ConfigError(f"protocol.{k}", f"required for {cfg.variant}")
    if cfg.variant == "frequency_shift" and (p.volts is None) == (p.field_vcm is None):
        raise ConfigError("protocol.volts", "give exactly one of volts, field_vcm")
    if cfg.variant == "bandwidth":
        if (p.in_volts is None) == (p.in_edge_kv_per_cm is None):
            raise ConfigError("protocol.in_volts", "give exactly one of in_volts, in_edge_kv_per_cm")
        if (p.out_volts is None) == (p.out_edge_kv_per_cm is None):
            raise ConfigError("protocol.out_volts",
                              "give exactly one of out_volts, out_edge_kv_per_cm")
        if p.compensation not in ("phase", "energy"):
            raise ConfigError("protocol.compensation", "must be 'phase' or 'energy'")


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return parse_config(data)


def dump_config(cfg: RunConfig, path=None):
    text = json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


def set_path(d: dict, path: str, value):
    """Set a dotted key. A bare name is resolved if exactly one section holds it."""
    if "." not in path and path not in d:
        hits = [k for k, v in d.items() if isinstance(v, dict) and path in v]
        if len(hits) != 1:
            raise ConfigError(path, "unknown parameter" if not hits
                              else f"ambiguous, found in {', '.join(hits)}")
        path = f"{hits[0]}.{path}"
    keys = path.split(".")
    node = d
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise ConfigError(path, "unknown parameter")
        node = node[k]
    if keys[-1] not in node:
        raise ConfigError(path, "unknown parameter")
    node[keys[-1]] = value


# ---------------------------------------------------------------- SI objects

@dataclass(frozen=True)
class PreparedRun:
    config: RunConfig
    spec: ProtocolSpec
    cavity: CavityParams
    stark: StarkModel
    ensemble: object
    dt: float | None
    t_end: float | None
    record_dt: float


def comb_from_config(c: CombConfig):
    weights = tuple(float(w) for w in c.subclass_weights)
    if c.line_fwhm_mhz is not None and c.delta_mhz is None:
        return GaussianLine(fwhm=c.line_fwhm_mhz * 1e6, center_detuning=c.center_mhz * 1e6,
                            subclass_weights=weights)
    delta = c.delta_mhz * 1e6
    fwhm = c.tooth_fwhm_mhz * 1e6 if c.tooth_fwhm_mhz is not None else delta / c.finesse
    return CombSpec(delta, ToothShape("gaussian", fwhm), c.bandwidth_mhz * 1e6,
                    c.center_mhz * 1e6, weights)


def cavity_from_config(c: CavityConfig) -> CavityParams:
    gamma_h = 0.0 if c.t2_us is None else 1.0 / (c.t2_us * 1e-6)
    kw = dict(delta_omega_a=TWO_PI * c.detuning_mhz * 1e6, g_total=TWO_PI * c.g_total_ghz * 1e9,
              gamma_h=gamma_h)
    if c.kappa_ghz is not None:
        kappa = TWO_PI * c.kappa_ghz * 1e9
        return CavityParams(kappa=kappa, kappa_in=c.kappa_in_ratio * kappa, **kw)
    return CavityParams.from_quality(c.quality_factor, c.frequency_thz * 1e12,
                                     c.kappa_in_ratio, **kw)


def profile_from_config(f: FieldConfig, base_dir=None) -> FieldProfile:
    if f.kind == "tabulated":
        path = Path(f.table_csv)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return FieldProfile.from_csv(path)
    return FieldProfile(f.kind, scale_parallel=f.scale_parallel_vcm_per_v,
                        scale_gradient=f.scale_gradient_vcm_per_um_per_v)


def build_run(cfg: RunConfig, base_dir=None, seed=None, dt_ns=None, t_end_ns=None) -> PreparedRun:
    """Convert a config to SI objects and a ProtocolSpec; CLI overrides win."""
    seed = cfg.seed if seed is None else seed
    comb = comb_from_config(cfg.comb)
    cavity = cavity_from_config(cfg.cavity)
    stark = StarkModel(cfg.stark.s_b_khz_per_vcm * 1e3, cfg.stark.gamma_s_khz_per_vcm * 1e3,
                       cfg.stark.impedance_factor)
    profile = profile_from_config(cfg.field_profile, base_dir)
    resonator = Resonator(cfg.resonator.length_um, cfg.resonator.x_eff_um)
    i = cfg.input
    inp = None
    if i.fwhm_ns is not None:
        inp = InputPulse(i.t_center_ns * 1e-9, i.fwhm_ns * 1e-9, i.amplitude,
                         TWO_PI * i.carrier_mhz * 1e6)
    p = cfg.protocol
    if cfg.variant == "memory_time":
        spec = build_memory_time(comb, p.m, p.pulse_kv_per_cm * 1e3, stark, profile, inp,
                                 p.grid_ns * 1e-9 if p.grid_ns else None,
                                 t_end_ns * 1e-9 if t_end_ns else None)
    elif cfg.variant == "frequency_shift":
        volts = p.volts if p.volts is not None else (
            p.field_vcm / (profile.nominal_e_per_volt() * stark.impedance_factor))
        spec = build_frequency(comb, volts, profile, inp)
    elif cfg.variant == "bandwidth":
        half = resonator.effective_length_um / 2
        vin = p.in_volts if p.in_volts is not None else volts_for_edge_field(
            p.in_edge_kv_per_cm * 1e3, profile, half, stark.impedance_factor)
        vout = p.out_volts if p.out_volts is not None else volts_for_edge_field(
            p.out_edge_kv_per_cm * 1e3, profile, half, stark.impedance_factor)
        spec = build_bandwidth(comb, vin, vout, profile, inp, p.max_volts)
    else:
        spec = build_echo(p.tau_ns * 1e-9, p.with_field_pair, comb, inp, stark,
                          (p.pulse_kv_per_cm or 2.0) * 1e3, p.second_area_factor, profile)
    ensemble = sample_ensemble(comb, cfg.n_ions, resonator, stark, seed=seed,
                               g_total=cavity.g_total, sampling=cfg.sampling)
    s = cfg.solver
    dt = dt_ns if dt_ns is not None else s.dt_ns
    t_end = t_end_ns if t_end_ns is not None else s.t_end_ns
    return PreparedRun(cfg, spec, cavity, stark, ensemble,
                       dt * 1e-9 if dt is not None else None,
                       t_end * 1e-9 if t_end is not None else None,
                       s.record_dt_ns * 1e-9)
