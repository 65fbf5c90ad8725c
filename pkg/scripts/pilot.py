"""50-replicate pilot of the stochastic acceptance tolerances.

Prints, for each check, the median and 95th percentile of the absolute
deviation across replicates, and the 95th percentile of the statistic the
acceptance suite actually thresholds (the median over 20 replicates,
resampled from the pilot), next to the tolerance.
"""

import argparse
import time

import numpy as np

from taylorlaw import (AR1, IID, Equicorrelated, GaussianModulated, Heterogeneous, LimitSpec,
                       NetworkProcess, TailModel)
from taylorlaw.analysis import convergence_diagnostic


def cases():
    par = TailModel.pareto
    yield "variance a=0.2", IID(par(1, 0.2)), LimitSpec.variance(0.2), 0.35, 10**6
    yield "variance a=0.5", IID(par(1, 0.5)), LimitSpec.variance(0.5), 0.35, 10**6
    yield "variance a=0.8", IID(par(1, 0.8)), LimitSpec.variance(0.8), 0.35, 10**6
    yield "M3 vs M1 a=0.5", IID(par(1, 0.5)), LimitSpec.moment_ratio(3, 1, 0.5), 0.5, 10**6
    yield "local upper h=2", IID(par(1, 0.5)), LimitSpec.local_upper_vs_mean(2, 0.5), 0.5, 10**6
    yield "ar1 0.8", AR1(0.8, par(1, 0.5)), LimitSpec.variance(0.5), 0.45, 10**6
    yield "hetero", Heterogeneous(0.6, par(1, 0.5), par(1, 0.8)), LimitSpec.variance(0.5), 0.4, 10**6
    yield "equicorrelated", Equicorrelated(0.5, 0.1), LimitSpec.variance(0.5), 0.45, 10**6
    yield "gaussian", GaussianModulated(0.5, 100), LimitSpec.variance(0.5), 0.45, 10**6
    yield "network n=1e4", NetworkProcess(par(1, 0.5)), LimitSpec.variance(0.5), 0.5, 10**4


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--replicates", type=int, default=50)
    ap.add_argument("--seed", type=int, default=20240501)
    args = ap.parse_args()
    for name, spec, limit, tol, n in cases():
        t0 = time.time()
        row = convergence_diagnostic(spec, limit, [n], args.replicates, args.seed)[0]
        dev = np.abs(np.array(row["deviations"]))
        rng = np.random.default_rng(0)
        med20 = [np.median(rng.choice(dev, 20, replace=False)) for _ in range(2000)]
        print(f"{name:18s} median|dev|={np.nanmedian(dev):.3f} p95={np.nanquantile(dev, 0.95):.3f} "
              f"p95(median of 20)={np.quantile(med20, 0.95):.3f} "
              f"signed median={row['median']:+.3f} tol={tol} failed={row['failed']} ({time.time() - t0:.1f}s)",
              flush=True)


if __name__ == "__main__":
    main()
