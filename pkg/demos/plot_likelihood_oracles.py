"""
The trace score is the block-model log-likelihood
=================================================

On a tiny graph, compare score differences with exact Bernoulli
log-likelihood ratios, and check how the relaxation compares with the
exhaustive maximum.
"""

import numpy as np

from activecd import DiscreteLabeling, Graph, build_modified_adjacency
from activecd.active_learning import relax
from activecd.likelihood import (
    approx_ratio_certificate,
    bernoulli_log_likelihood,
    brute_force_ml,
    labeling_score,
)
from activecd.simplex import round_labeling

graph = Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (2, 3)])
p, q = 0.7, 0.2
M = build_modified_adjacency(graph, p, q)

x = np.array([0, 0, 0, 1, 1, 1])
y = np.array([0, 0, 1, 1, 1, 1])
print("score difference  :", labeling_score(M, x, 2) - labeling_score(M, y, 2))
ll = bernoulli_log_likelihood(graph, p, q, np.vstack([x, y]))
print("log-likelihood gap:", ll[0] - ll[1])

# relaxation, rounding, and the computable bound on the rounding loss
lab = DiscreteLabeling.partial(6, 2, {0: 0})
rel = relax(M, lab)
rounded = round_labeling(rel.X, rel.basis, lab)
cert = approx_ratio_certificate(M, rounded, rel.X)
best = brute_force_ml(M, lab, 2)
print("rounded:", rounded.assignments, " exhaustive ML:", best.assignments)
print("certificate:", round(cert.value, 6))
