"""Exact HMM posteriors by enumeration over all label sequences.

Model mirrored from the clustering module's contract: initial distribution =
weights, transition i->j = loop*[i==j] + (1-loop)*weights[j], spherical
shared-variance Gaussian emissions over the embedding vectors.
"""

import itertools
import math

import numpy as np


def enumerate_posteriors(X, means, variance, weights, loop_prob):
    """Returns (per-step state marginals, log total likelihood)."""
    n, d = X.shape
    k = len(means)
    log_norm = -0.5 * d * math.log(2.0 * math.pi * variance)

    def emission(t, s):
        diff = X[t] - means[s]
        return math.exp(log_norm - 0.5 * float(diff @ diff) / variance)

    emis = [[emission(t, s) for s in range(k)] for t in range(n)]
    total = 0.0
    marginals = [[0.0] * k for _ in range(n)]
    for seq in itertools.product(range(k), repeat=n):
        p = weights[seq[0]] * emis[0][seq[0]]
        for t in range(1, n):
            stay = loop_prob if seq[t] == seq[t - 1] else 0.0
            p *= (stay + (1.0 - loop_prob) * weights[seq[t]]) * emis[t][seq[t]]
        total += p
        for t, s in enumerate(seq):
            marginals[t][s] += p
    return np.array(marginals) / total, math.log(total)
