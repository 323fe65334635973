"""
Semi-supervised labeling from a handful of anchors
==================================================

Sample a two-community block model, reveal one node per community, and
label the rest with the constrained relaxation.
"""

import numpy as np

from activecd import (
    DiscreteLabeling,
    SbmParams,
    accuracy,
    build_modified_adjacency,
    sbm_sample,
    semi_supervised,
)

# sparse regime: p = a/n inside, q = b/n across
params = SbmParams.sparse(n=200, r=2, a=12, b=2)
graph, truth = sbm_sample(params, seed=0)
print("edges:", graph.num_edges, " snr:", round(params.snr, 3))

M = build_modified_adjacency(graph, params.p, params.q)

# no supervision: labels are only defined up to a permutation
pred = semi_supervised(M, DiscreteLabeling.unlabeled(graph.n, 2))
print("unsupervised accuracy (best permutation):", accuracy(pred, truth))

# one anchor per community fixes the label identities; a low-degree node
# with most neighbors across the cut makes a poor anchor, so take the
# best-connected node of each community
deg = graph.degrees
anchors = {}
for c in range(2):
    members = np.flatnonzero(truth.labels == c)
    anchors[int(members[np.argmax(deg[members])])] = c
pred = semi_supervised(M, DiscreteLabeling.partial(graph.n, 2, anchors))
print("anchored accuracy on the other nodes:", accuracy(pred, truth, anchors))
