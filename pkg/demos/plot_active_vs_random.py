"""
Active queries versus random queries
====================================

A small version of the accuracy-vs-budget experiment. Both strategies
start from the same unsupervised solution; active picks anchors first and
then the node with the largest expected model change.
"""

import numpy as np

from activecd.bench import ExperimentConfig, format_csv, run_experiment

cfg = ExperimentConfig(n=150, r=2, a=6.0, b=1.5, seeds=(0, 1, 2), grid=(0.0, 0.05, 0.10))
curves = run_experiment(cfg)
print(format_csv(curves))

for c in curves:
    pct = np.round(100 * c.pct_queried).astype(int)
    print(c.algorithm.ljust(7), dict(zip(pct.tolist(), np.round(c.acc_mean, 3).tolist())))
