"""Command-line entry point: simulate, analytic, sweep, spectroscopy, validate."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import AnalyticParams, emission_amplitudes, suppressed_efficiency
from .config import ConfigError, build_run, load_config, parse_config, set_path
from .dynamics import SimulationInstabilityError, trace_metrics
from .protocols import run_protocol, tune_compensation
from .spectroscopy import fit_splitting_slope, four_tooth_comb, run_stark_sweep
from .stark import FieldProfile, StarkModel
from .validate import run_invariants

log = logging.getLogger("afcstark")

EXIT_CONFIG, EXIT_VALUE, EXIT_UNSTABLE, EXIT_IO, EXIT_CHECKS = 2, 3, 4, 5, 6


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _write_json(path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default)
    if path in (None, "-"):
        print(text)
    else:
        Path(path).write_text(text + "\n", encoding="utf-8")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


# ------------------------------------------------------------------ simulate

def _simulate_config(cfg, base_dir, args):
    run = build_run(cfg, base_dir, args.seed, args.dt_ns, args.t_end_ns)

    def go(spec):
        return run_protocol(spec, run.cavity, run.ensemble, run.stark, run.dt, run.t_end,
                            run.record_dt)

    spec = run.spec
    if cfg.variant == "bandwidth" and cfg.protocol.compensation == "energy":
        p1, _, p3 = spec.e_pulses
        spec = tune_compensation(run.spec.comb, p1.volts, p3.volts, go,
                                 profile=p1.profile, input=spec.input,
                                 max_volts=cfg.protocol.max_volts)
    trace = go(spec)
    metrics = trace_metrics(trace, spec.analysis_window)
    out = metrics.to_json(trace.energy_bins)
    out.update(variant=cfg.variant, seed=run.ensemble.rng_seed, config=cfg.to_dict(),
               solver=trace.metadata, emission_ns=spec.emission_time * 1e9,
               window_ns=[w * 1e9 for w in spec.analysis_window],
               e_pulses=[{"t_center_ns": p.t_center * 1e9, "duration_ns": p.duration * 1e9,
                          "volts": p.volts, "profile": p.profile.kind} for p in spec.e_pulses])
    return trace, out


def cmd_simulate(args):
    cfg = load_config(args.config)
    trace, out = _simulate_config(cfg, Path(args.config).parent, args)
    if args.out_trace:
        trace.write_csv(args.out_trace)
    _write_json(args.out_metrics, out)
    return 0


# ------------------------------------------------------------------ analytic

def cmd_analytic(args):
    p = AnalyticParams.from_ratios(args.kappa_in_ratio, args.gamma_ratio, args.finesse,
                                   gamma_h=args.gamma_h_ratio, delta=args.delta_ratio)
    if args.suppress == "lower":
        amps = [emission_amplitudes(p, m, range(1, m))[-1] for m in range(1, args.m_max + 1)]
    else:
        sup = () if args.suppress == "none" else {int(v) for v in args.suppress.split(",") if v}
        amps = emission_amplitudes(p, args.m_max, sup)
    table = {str(m): {"re": a.real, "im": a.imag, "energy": abs(a) ** 2,
                      "eta_suppressed": suppressed_efficiency(p, m)}
             for m, a in enumerate(amps, start=1)}
    _write_json(args.out, {"params": {"kappa_in_ratio": args.kappa_in_ratio,
                                      "gamma_ratio": args.gamma_ratio,
                                      "finesse": args.finesse, "suppress": args.suppress},
                           "emissions": table})
    return 0


# --------------------------------------------------------------------- sweep

def _sweep_point(job):
    cfg_dict, base_dir, param, value, ns = job
    d = json.loads(json.dumps(cfg_dict))
    set_path(d, param, value)
    cfg = parse_config(d)
    _, out = _simulate_config(cfg, base_dir, argparse.Namespace(**ns))
    return out


def cmd_sweep(args):
    cfg = load_config(args.config)
    base_dir = str(Path(args.config).parent)
    ns = {"seed": args.seed, "dt_ns": args.dt_ns, "t_end_ns": args.t_end_ns}
    values = [int(v) if args.param.split(".")[-1] in ("m", "seed", "n_ions") else v
              for v in args.values]
    jobs = [(cfg.to_dict(), base_dir, args.param, v, ns) for v in values]
    # fail fast on a bad parameter name before spawning workers
    set_path(cfg.to_dict(), args.param, values[0])
    if args.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    keys = ["fwhm_ns", "fwhm_mhz", "fwhm_mhz_from_time", "center_mhz", "center_ns", "energy",
            "converged"]
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([args.param] + keys)
        for v, r in zip(values, rows):
            w.writerow([v] + [r[k] for k in keys])
    meta = {"config": cfg.to_dict(), "param": args.param, "values": values,
            "seed": args.seed if args.seed is not None else cfg.seed,
            "rows": rows}
    _write_json(str(args.out) + ".meta.json", meta)
    return 0


# -------------------------------------------------------------- spectroscopy

def cmd_spectroscopy(args):
    stark = StarkModel(args.s_b_khz * 1e3, args.gamma_s_khz * 1e3)
    profile = FieldProfile.from_csv(args.profile_csv) if args.profile_csv else None
    comb = four_tooth_comb(args.spacing_mhz * 1e6, args.tooth_fwhm_mhz * 1e6)
    seed = 0 if args.seed is None else args.seed
    sweep = run_stark_sweep(comb, args.fields, stark, profile, n=args.n_ions, seed=seed)
    if args.out_csv:
        sweep.write_csv(args.out_csv)
    fit = fit_splitting_slope(sweep)
    out = fit.to_json()
    out.update(seed=seed, n_ions=args.n_ions, fields_vcm=list(args.fields),
               s_b_khz_per_vcm_configured=args.s_b_khz,
               gamma_s_khz_per_vcm=args.gamma_s_khz)
    _write_json(args.out_fit, out)
    return 0


# ------------------------------------------------------------------ validate

def cmd_validate(args):
    seed = 0 if args.seed is None else args.seed
    results = run_invariants(args.n_ions, seed)
    ok = all(r.passed for r in results)
    _write_json(args.out, {"passed": ok, "seed": seed, "n_ions": args.n_ions,
                           "checks": [r.to_json() for r in results]})
    return 0 if ok else EXIT_CHECKS


# --------------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--dt-ns", type=float, default=None, help="integration step")
    common.add_argument("--t-end-ns", type=float, default=None, help="integration end time")
    common.add_argument("--log-level", default="WARNING")

    ap = argparse.ArgumentParser(prog="afcstark", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run one protocol")
    s.add_argument("--config", required=True)
    s.add_argument("--out-trace")
    s.add_argument("--out-metrics", default="-")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analytic", parents=[common], help="closed-form emission table")
    a.add_argument("--kappa-in-ratio", type=float, default=0.2)
    a.add_argument("--gamma-ratio", type=float, default=0.05, help="Gamma_comb / kappa")
    a.add_argument("--finesse", type=float, default=12.2)
    a.add_argument("--gamma-h-ratio", type=float, default=0.0, help="gamma_h / kappa")
    a.add_argument("--delta-ratio", type=float, default=1.0,
                   help="comb period (Hz) in units of kappa")
    a.add_argument("--m-max", type=int, default=8)
    a.add_argument("--suppress", default="none",
                   help="'none', 'lower' (all earlier emissions) or a list like 1,2")
    a.add_argument("--out", default="-")
    a.set_defaults(func=cmd_analytic)

    w = sub.add_parser("sweep", parents=[common], help="vary one config parameter")
    w.add_argument("--config", required=True)
    w.add_argument("--param", required=True, help="dotted key or unique bare name")
    w.add_argument("--values", type=_floats, required=True)
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectroscopy", parents=[common], help="Stark splitting sweep and fit")
    p.add_argument("--fields", type=_floats,
                   default=[-700.0, -500.0, -283.0, -100.0, 0.0, 100.0, 283.0, 500.0, 700.0])
    p.add_argument("--s-b-khz", type=float, default=11.8)
    p.add_argument("--gamma-s-khz", type=float, default=0.0)
    p.add_argument("--spacing-mhz", type=float, default=27.5)
    p.add_argument("--tooth-fwhm-mhz", type=float, default=1.0)
    p.add_argument("--profile-csv")
    p.add_argument("--n-ions", type=int, default=40000)
    p.add_argument("--out-csv")
    p.add_argument("--out-fit", default="-")
    p.set_defaults(func=cmd_spectroscopy)

    v = sub.add_parser("validate", parents=[common], help="invariant suite")
    v.add_argument("--n-ions", type=int, default=200)
    v.add_argument("--out", default="-")
    v.set_defaults(func=cmd_validate)
    return ap


def _fail(code, kind, message, **extra):
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)
    return code


def run(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), key=exc.key)
    except SimulationInstabilityError as exc:
        return _fail(EXIT_UNSTABLE, "instability", str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, "io", str(exc))
    except (ValueError, KeyError) as exc:
        return _fail(EXIT_VALUE, "value", str(exc))


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
