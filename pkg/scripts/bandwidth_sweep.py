"""Output bandwidth versus output/input gradient ratio, with the ideal-gradient oracle."""
import argparse
import csv
import math

import numpy as np

from afcstark.comb import CombSpec, Resonator, sample_ensemble
from afcstark.dynamics import CavityParams, bandwidth_from_duration, fit_gaussian, trace_metrics
from afcstark.protocols import build_bandwidth, ideal_gradient_envelope, run_protocol
from afcstark.stark import FieldProfile, StarkModel, volts_for_edge_field


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ratios", default="1,2,3,4")
    ap.add_argument("--in-edge-kv", type=float, default=0.67)
    ap.add_argument("--n-ions", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--out", default="bandwidth_sweep.csv")
    args = ap.parse_args()

    comb = CombSpec.from_finesse(1.6e6, 8.0, 144e6)
    cav = CavityParams.from_quality(g_total=2 * math.pi * 0.6e9)
    stark, res, prof = StarkModel(), Resonator(), FieldProfile.ideal_quadrupole()
    ens = sample_ensemble(comb, args.n_ions, res, stark, seed=args.seed, g_total=cav.g_total)
    edge = args.in_edge_kv * 1e3
    vin = volts_for_edge_field(edge, prof, res.effective_length_um / 2)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ratio", "fwhm_ns", "bandwidth_mhz", "bandwidth_ratio", "oracle_ratio", "energy"])
        for r in (float(v) for v in args.ratios.split(",")):
            spec = build_bandwidth(comb, vin, r * vin, prof)
            m = trace_metrics(run_protocol(spec, cav, ens, stark), spec.analysis_window)
            inp = spec.input
            t = np.linspace(-2.5 * inp.fwhm, 2.5 * inp.fwhm, 4001)
            env = ideal_gradient_envelope(t, inp, edge, r, stark)
            oracle = inp.fwhm / fit_gaussian(t, np.abs(env) ** 2)[2]
            ratio = m.fwhm_freq_from_time / bandwidth_from_duration(inp.fwhm)
            w.writerow([r, m.fwhm_time * 1e9, m.fwhm_freq_from_time / 1e6, ratio, oracle, m.energy])
            print(f"ratio={r:.1f}  fwhm={m.fwhm_time * 1e9:.1f} ns  bandwidth x{ratio:.2f}  "
                  f"oracle x{oracle:.2f}", flush=True)


if __name__ == "__main__":
    main()
