"""Low temperature: the free energy follows the top eigenvalue.

At beta = 1 + 5 sqrt(log n) n^{-1/3} the rescaled free energy is driven by
N^{2/3}(lambda_1 - 2).  This prints their sample correlation and the KS
distance of the edge statistic to a Tracy-Widom (beta = 1) quantile table.

Usage:  python3 demos/low_temperature.py [n] [samples] [table.csv]
"""

import sys
from pathlib import Path

import numpy as np

from ssklab.fluctuations import ExperimentManifest, load_reference_table, run_experiment
from ssklab.persistence import summarize

DEFAULT_TABLE = Path(__file__).resolve().parent.parent / "tests" / "data" / "tw1.csv"


def main(n=500, samples=200, table_path=DEFAULT_TABLE):
    table = load_reference_table(table_path)
    man = ExperimentManifest(base_seed=12, n_grid=(n,), m_samples=samples, alphas=(5.0,))
    recs = [r for r in run_experiment(man) if r.ok]
    tw = np.array([r.tw_stat for r in recs])
    edge = np.array([r.lambda1_scaled for r in recs])
    (row,) = summarize(recs, table)
    print(f"n={n}, beta={recs[0].beta:.4f}, {len(recs)} samples")
    print(f"corr(tw statistic, edge)   {np.corrcoef(tw, edge)[0, 1]:.4f}")
    print(f"edge mean / var            {row['lambda1_scaled_mean']:.3f} / {row['lambda1_scaled_var']:.3f}"
          "   (limit: -1.207 / 1.608)")
    print(f"KS(edge, TW1 table)        {row['ks_lambda1_table']:.3f}")
    lt = np.array([r.lt_residual for r in recs])
    print(f"median |lt residual|       {np.median(np.abs(lt)):.3f}")


if __name__ == "__main__":
    args = sys.argv[1:]
    main(int(args[0]) if args else 500, int(args[1]) if len(args) > 1 else 200,
         args[2] if len(args) > 2 else DEFAULT_TABLE)
