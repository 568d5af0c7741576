"""Independent reference implementations used only by the tests.

These are deliberately naive: direct loops over every pair of subsets,
covariance-form filtering with explicit inverses, and permutation search.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

DENOM_TOL = 1e-12
CLAMP_TOL = 1e-9


def _snap(x):
    if abs(x) <= CLAMP_TOL:
        return 0.0
    if abs(x - 1.0) <= CLAMP_TOL:
        return 1.0
    return x


def naive_ratios(vals):
    """(gamma, kappa, alpha, alpha_ext) of a table by scanning all (A, B, v)."""
    N = len(vals)
    k = N.bit_length() - 1

    def d(v, S):
        return vals[S | (1 << v)] - vals[S]

    gamma = math.inf
    for A in range(N):
        for B in range(N):
            D = A & ~B
            den = vals[A | B] - vals[B]
            if D == 0 or not den > DENOM_TOL:
                continue
            num = 0.0
            for v in range(k):
                if D >> v & 1:
                    num = num + d(v, B)
            gamma = min(gamma, num / den)
    kappa, alpha, alpha_ext = math.inf, -math.inf, -math.inf
    for A in range(N):
        for B in range(N):
            for v in range(k):
                bit = 1 << v
                if A & bit or B & bit:
                    continue
                den = d(v, B)
                if not den > DENOM_TOL:
                    continue
                r = d(v, A) / den
                alpha_ext = max(alpha_ext, 1.0 - r)
                if B & ~A == 0:
                    alpha = max(alpha, 1.0 - r)
    for A in range(N):
        for B in range(N):
            if A & ~B:
                continue
            for v in range(k):
                bit = 1 << v
                if B & bit:
                    continue
                den = d(v, B)
                if not den > DENOM_TOL:
                    continue
                kappa = min(kappa, d(v, A) / den)
    gamma = 1.0 if math.isinf(gamma) else gamma
    kappa = 1.0 if math.isinf(kappa) else kappa
    alpha = 0.0 if math.isinf(alpha) else alpha
    alpha_ext = 0.0 if math.isinf(alpha_ext) else alpha_ext
    return _snap(gamma), _snap(kappa), _snap(alpha), _snap(alpha_ext)


def naive_trace_cov(A_seq, C_seq, W, sigma, Pi0, selected):
    """Trace of the final a-posteriori covariance, covariance-form Kalman filter.

    ``selected[k]`` lists the sensor rows used at step ``k``.
    """
    P = np.array(Pi0, dtype=float)
    ell = len(A_seq)
    for k in range(ell + 1):
        rows = list(selected[k])
        if rows:
            C = np.asarray(C_seq[k])[rows]
            R = np.diag([sigma[k][r] ** 2 for r in rows])
            S = C @ P @ C.T + R
            K = P @ C.T @ np.linalg.inv(S)
            P = P - K @ C @ P
        if k < ell:
            A = np.asarray(A_seq[k])
            P = A @ P @ A.T + W
    return float(np.trace(P))


def fold_latency(order, c, t):
    total = 0.0
    for v in order:
        total = max(total, c[v]) + t[v]
    return total


def min_perm_latency(items, c, t):
    best = math.inf
    for perm in itertools.permutations(items):
        best = min(best, fold_latency(perm, c, t))
    return 0.0 if best == math.inf else best


def feasible_sets(n, feasible):
    """All feasible bitmasks of an n-item ground set, ascending."""
    return [m for m in range(1 << n) if feasible(m)]
