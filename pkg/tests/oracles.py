"""
Brute-force reference implementations used as test oracles.

Deliberately loop-based and independent of the vectorised engine code.
"""

import math

import numpy as np


def matmul(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            total = 0.0
            for p in range(k):
                total += a[i, p] * b[p, j]
            out[i, j] = total
    return out


def causal_conv(x, kernel, bias):
    """x [C_in × T], kernel [C_out × C_in × K]; tap K-1 is the current step."""
    c_in, steps = x.shape
    c_out, _, k = kernel.shape
    out = np.zeros((c_out, steps))
    for o in range(c_out):
        for t in range(steps):
            total = bias[o]
            for c in range(c_in):
                for j in range(k):
                    src = t - (k - 1) + j
                    if src >= 0:
                        total += kernel[o, c, j] * x[c, src]
            out[o, t] = total
    return out


def normalized_adjacency(adjacency):
    n = len(adjacency)
    a_tilde = [[adjacency[i][j] + (1.0 if i == j else 0.0) for j in range(n)] for i in range(n)]
    degree = [sum(row) for row in a_tilde]
    return np.array([[a_tilde[i][j] / math.sqrt(degree[i] * degree[j]) for j in range(n)] for i in range(n)])


def collision_pct(positions, threshold):
    n = len(positions)
    if n < 2:
        return 0.0
    hits = 0
    for i in range(n):
        for j in range(n):
            if i != j and math.dist(positions[i], positions[j]) < threshold:
                hits += 1
                break
    return 100.0 * hits / n


def ols_extrapolate(series, t_pred):
    """Closed-form simple linear regression of one coordinate vs time."""
    t = list(range(len(series)))
    t_mean = sum(t) / len(t)
    y_mean = sum(series) / len(series)
    slope = sum((ti - t_mean) * (yi - y_mean) for ti, yi in zip(t, series)) / sum((ti - t_mean) ** 2 for ti in t)
    intercept = y_mean - slope * t_mean
    return [intercept + slope * (len(series) + k) for k in range(t_pred)]


def reconstruction_bce(embeddings, adjacency):
    """(1/n²) Σ_ij BCE(Ã_ij, sigmoid(h_i · h_j)) by direct enumeration."""
    n = len(embeddings)
    total = 0.0
    for i in range(n):
        for j in range(n):
            target = adjacency[i][j] + (1.0 if i == j else 0.0)
            p = 1.0 / (1.0 + math.exp(-float(np.dot(embeddings[i], embeddings[j]))))
            total += -(target * math.log(p) + (1 - target) * math.log(1 - p))
    return total / (n * n)
