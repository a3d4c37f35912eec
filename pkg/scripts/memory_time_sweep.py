"""Storage-time sweep: emission energy for m = 1..8 and the fitted comb finesse."""
import argparse
import csv
import math

import numpy as np

from afcstark.analytic import fit_finesse
from afcstark.comb import CombSpec, Resonator, sample_ensemble
from afcstark.dynamics import CavityParams, trace_metrics
from afcstark.protocols import build_memory_time, run_protocol
from afcstark.stark import StarkModel


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta-mhz", type=float, default=19.7)
    ap.add_argument("--finesse", type=float, default=12.2)
    ap.add_argument("--g-ghz", type=float, default=0.6)
    ap.add_argument("--field-kv", type=float, default=2.0)
    ap.add_argument("--m-max", type=int, default=8)
    ap.add_argument("--n-ions", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="memory_time.csv")
    args = ap.parse_args()

    comb = CombSpec.from_finesse(args.delta_mhz * 1e6, args.finesse, 140e6)
    cav = CavityParams.from_quality(g_total=2 * math.pi * args.g_ghz * 1e9)
    stark = StarkModel()
    ens = sample_ensemble(comb, args.n_ions, Resonator(), stark, seed=args.seed, g_total=cav.g_total)
    ms = np.arange(2, args.m_max + 1)
    rows = []
    for m in ms:
        spec = build_memory_time(comb, int(m), args.field_kv * 1e3, stark)
        met = trace_metrics(run_protocol(spec, cav, ens, stark), spec.analysis_window)
        rows.append((int(m), m / args.delta_mhz * 1e3, met.energy))
        print(f"m={m}  t={rows[-1][1]:.1f} ns  energy={met.energy:.4e}", flush=True)
    finesse, _, err = fit_finesse(ms, [r[2] for r in rows])
    print(f"fitted finesse {finesse:.3f} +/- {err:.3f}")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "storage_ns", "energy"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
