"""Histogram of sampled probabilities with the mixture-density overlay, the
expected/observed frequency scatter and the chi-square report for one simulated file.
"""
import argparse
import json
from pathlib import Path

from xebstats.gof import HistogramSpec, chi_square, freq_scatter, histogram, min_chisq_phi, scatter_csv
from xebstats.io import atomic_write
from xebstats.noise import Basic, sample_model, sampling_probs
from xebstats.probmodel import SeedSpec, gen_porter_thomas


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--phi", type=float, default=0.3862)
    ap.add_argument("--N", type=int, default=500_000)
    ap.add_argument("--bins", type=int, default=200)
    ap.add_argument("--seed", type=int, default=8)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = SeedSpec(args.seed, 0)
    pv = gen_porter_thomas(args.n, seed)
    model = Basic(args.phi)
    s = sample_model(model, pv, args.N, seed)
    for scale in ("w", "z"):
        h = histogram(s.sampled_w, HistogramSpec(bins=args.bins, scale=scale), pv.M, args.phi)
        atomic_write(out / f"histogram_{scale}.csv", h.to_csv())
    pi = sampling_probs(model, pv)
    atomic_write(out / "scatter.csv", scatter_csv(freq_scatter(s, pi)))
    report = chi_square(s, pi).to_dict()
    report["min_chisq_phi"] = min_chisq_phi(s, pv)
    atomic_write(out / "chi_square.json", json.dumps(report, indent=2) + "\n")
    print(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()
