"""N times the variance over random circuits of U, V, the log estimator and the
MLE on a grid of phi, for one choice of n and N.
"""
import argparse
from pathlib import Path

import numpy as np

from xebstats.io import atomic_write
from xebstats.uncertainty import mle_asymptotic_var, var_unconditional


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=500_000)
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--points", type=int, default=99)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    N, M = args.N, 1 << args.n
    lines = ["phi,N_var_U,N_var_V,N_var_LogU,N_var_MLE"]
    for phi in np.linspace(0.0, 0.98, args.points):
        vals = [N * var_unconditional(m, phi, M, N) for m in ("U", "V", "LogU")]
        vals.append(N * mle_asymptotic_var(phi, N))
        lines.append(f"{phi:.4f}," + ",".join(f"{v:.8g}" for v in vals))
    atomic_write(out / "variance_curves.csv", "\n".join(lines) + "\n")
    print(f"wrote {len(lines) - 1} rows to {out / 'variance_curves.csv'}")


if __name__ == "__main__":
    main()
