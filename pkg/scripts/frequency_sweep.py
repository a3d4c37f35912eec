"""Output-frequency shift versus applied field for the single-subclass comb."""
import argparse
import csv
import math

import numpy as np

from afcstark.comb import CombSpec, Resonator, sample_ensemble
from afcstark.dynamics import CavityParams, trace_metrics
from afcstark.protocols import build_frequency, expected_frequency_shift, run_protocol
from afcstark.stark import StarkModel, volts_for_field


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fields-kv", default="-3,-2,-1,0,1,2,3")
    ap.add_argument("--gamma-s-khz", type=float, default=0.0)
    ap.add_argument("--n-ions", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=2)
    ap.add_argument("--out", default="frequency_sweep.csv")
    args = ap.parse_args()

    stark = StarkModel(gamma_s=args.gamma_s_khz * 1e3)
    comb = CombSpec.from_finesse(5e6, 10.0, 40e6, subclass_weights=(1.0, 0.0))
    cav = CavityParams.from_quality(g_total=2 * math.pi * 0.3e9)
    ens = sample_ensemble(comb, args.n_ions, Resonator(), stark, seed=args.seed, g_total=cav.g_total)
    fields = np.array([float(v) for v in args.fields_kv.split(",")]) * 1e3
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["field_vcm", "center_mhz", "expected_mhz", "fwhm_mhz", "energy"])
        for e in fields:
            v = volts_for_field(e)
            spec = build_frequency(comb, v)
            m = trace_metrics(run_protocol(spec, cav, ens, stark), spec.analysis_window)
            exp = expected_frequency_shift(stark, v)
            w.writerow([e, m.center_freq / 1e6, exp / 1e6, m.fwhm_freq_from_time / 1e6, m.energy])
            print(f"E={e:7.0f} V/cm  center={m.center_freq / 1e6:7.2f} MHz  "
                  f"expected={exp / 1e6:7.2f} MHz  energy={m.energy:.3e}", flush=True)


if __name__ == "__main__":
    main()
