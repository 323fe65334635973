"""
Recovering a rotated simplex from noisy unit vectors
====================================================
"""

import numpy as np
from scipy.stats import special_ortho_group

from activecd import best_fit_simplex, canonical_simplex

r, d = 3, 5
rng = np.random.default_rng(1)

# rotate the regular simplex to an unknown orientation
truth = canonical_simplex(r, d).vectors @ special_ortho_group.rvs(d, random_state=1)
rows = truth[np.arange(60) % r] + 0.05 * rng.standard_normal((60, d))
rows /= np.linalg.norm(rows, axis=1, keepdims=True)

found = best_fit_simplex(rows, r)
print("Gram matrix of the fit:\n", np.round(found.gram(), 6))

# angle from each true vertex to its closest fitted vertex
angles = np.arccos(np.clip(truth @ found.vectors.T, -1, 1)).min(axis=1)
print("vertex errors (rad):", np.round(angles, 4))
