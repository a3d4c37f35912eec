"""Holeburning Stark sweep of a four-tooth comb and the fitted Stark coefficient."""
import argparse
import json

import numpy as np

from afcstark.spectroscopy import fit_splitting_slope, four_tooth_comb, run_stark_sweep
from afcstark.stark import FieldProfile, StarkModel


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fields", default="-700,-500,-300,-100,0,100,283,500,700")
    ap.add_argument("--s-b-khz", type=float, default=11.8)
    ap.add_argument("--gamma-s-khz", type=float, default=0.0)
    ap.add_argument("--profile-csv")
    ap.add_argument("--n-ions", type=int, default=40000)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--out-csv", default="stark_sweep.csv")
    args = ap.parse_args()

    fields = np.array([float(v) for v in args.fields.split(",")])
    stark = StarkModel(args.s_b_khz * 1e3, args.gamma_s_khz * 1e3)
    profile = FieldProfile.from_csv(args.profile_csv) if args.profile_csv else None
    sweep = run_stark_sweep(four_tooth_comb(), fields, stark, profile, n=args.n_ions, seed=args.seed)
    sweep.write_csv(args.out_csv)
    print(json.dumps(fit_splitting_slope(sweep, args.s_b_khz * 1e3).to_json(), indent=2))


if __name__ == "__main__":
    main()
