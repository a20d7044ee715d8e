"""Small numerical helpers: extrapolation of convergent sequences."""

import numpy as np


def neville_to_zero(xs, ys):
    """Polynomial extrapolation of samples (x_i, y_i) to x = 0.

    Standard Neville tableau; with nodes x_i -> 0 this is Richardson
    extrapolation for a function with a power-series error model.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or len(xs) == 0:
        raise ValueError("need equal-length non-empty sample arrays")
    p = ys.copy()
    n = len(xs)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i])
    return p[0]


def geometric_tail(values, atol=0.0):
    """Fit the tail of a monotone sequence by geometric increments.

    Returns (limit, q, residual). q is the ratio of the last two
    increments; limit = v_n + q/(1-q) * (v_n - v_{n-1}). If the last
    increment is below atol (already converged, e.g. exact subdivision)
    the last value is returned with q = 0. residual is the spread of q
    over the available increment triples, 0 when fewer than 3 increments.
    """
    v = np.asarray(values, dtype=float)
    if len(v) == 0:
        raise ValueError("empty sequence")
    if len(v) == 1:
        return float(v[0]), 0.0, 0.0
    inc = np.diff(v)
    if abs(inc[-1]) <= atol:
        return float(v[-1]), 0.0, 0.0
    if len(inc) == 1:
        return float(v[-1]), 0.0, 0.0
    qs = []
    for i in range(1, len(inc)):
        if abs(inc[i - 1]) > atol:
            qs.append(inc[i] / inc[i - 1])
    if not qs:
        return float(v[-1]), 0.0, 0.0
    q = qs[-1]
    residual = float(max(qs) - min(qs)) if len(qs) > 1 else 0.0
    if not 0.0 < q < 1.0:
        # no geometric contraction visible; report the last value
        return float(v[-1]), float(q), residual
    limit = float(v[-1] + inc[-1] * q / (1.0 - q))
    return limit, float(q), residual
