"""Numba-jitted implementations of the hot kernels.

Default backend when numba is importable; contracts match kernels_numpy.
Parallel loops only ever write disjoint slots, so results are independent of
NUMBA_NUM_THREADS; reductions that feed reported numbers stay serial.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True)
def cooccurrence_counts(labels, n_classes):
    n_items, p = labels.shape
    counts = np.zeros((p, p, n_classes, n_classes), dtype=np.int64)
    observed = np.empty(p, dtype=np.int64)
    for n in range(n_items):
        m = 0
        for i in range(p):
            if labels[n, i] > 0:
                observed[m] = i
                m += 1
        for s in range(m):
            i = observed[s]
            a = labels[n, i] - 1
            for t in range(s + 1, m):
                j = observed[t]
                b = labels[n, j] - 1
                counts[i, j, a, b] += 1
    for i in range(p):
        for j in range(i + 1, p):
            for a in range(n_classes):
                for b in range(n_classes):
                    counts[j, i, b, a] = counts[i, j, a, b]
    return counts


@njit(cache=True, parallel=True)
def em_estep(labels, log_weights, log_cond):
    n_items, p = labels.shape
    k = log_weights.shape[0]
    post = np.empty((n_items, k))
    item_ll = np.empty(n_items)
    for n in prange(n_items):
        acc = np.empty(k)
        for kk in range(k):
            acc[kk] = log_weights[kk]
        for i in range(p):
            r = labels[n, i]
            if r > 0:
                for kk in range(k):
                    acc[kk] += log_cond[i, r - 1, kk]
        m = acc[0]
        for kk in range(1, k):
            if acc[kk] > m:
                m = acc[kk]
        if m == -np.inf:
            item_ll[n] = -np.inf
            for kk in range(k):
                post[n, kk] = np.nan
        else:
            s = 0.0
            for kk in range(k):
                s += np.exp(acc[kk] - m)
            ll = m + np.log(s)
            item_ll[n] = ll
            for kk in range(k):
                post[n, kk] = np.exp(acc[kk] - ll)
    return post, item_ll


@njit(cache=True)
def em_mstep_counts(labels, post, n_classes):
    n_items, p = labels.shape
    k = post.shape[1]
    counts = np.zeros((p, n_classes, k))
    for n in range(n_items):
        for i in range(p):
            r = labels[n, i]
            if r > 0:
                for kk in range(k):
                    counts[i, r - 1, kk] += post[n, kk]
    return counts


@njit(cache=True, parallel=True)
def pair_conditional_mi(labels, post, n_classes):
    n_items, p = labels.shape
    k = post.shape[1]
    out = np.zeros((p, p))
    n_pairs = p * (p - 1) // 2
    left = np.empty(n_pairs, dtype=np.int64)
    right = np.empty(n_pairs, dtype=np.int64)
    q = 0
    for i in range(p):
        for j in range(i + 1, p):
            left[q] = i
            right[q] = j
            q += 1
    for q in prange(n_pairs):
        i = left[q]
        j = right[q]
        joint = np.zeros((n_classes, n_classes, k))
        mass = np.zeros(k)
        cnt = 0
        for n in range(n_items):
            a = labels[n, i]
            b = labels[n, j]
            if a > 0 and b > 0:
                cnt += 1
                for kk in range(k):
                    w = post[n, kk]
                    joint[a - 1, b - 1, kk] += w
                    mass[kk] += w
        if cnt > 0:
            total = 0.0
            for kk in range(k):
                if mass[kk] > 0.0:
                    mi_k = 0.0
                    for a in range(n_classes):
                        pr = 0.0
                        for b in range(n_classes):
                            pr += joint[a, b, kk]
                        for b in range(n_classes):
                            jab = joint[a, b, kk]
                            if jab > 0.0:
                                pc = 0.0
                                for a2 in range(n_classes):
                                    pc += joint[a2, b, kk]
                                mi_k += (jab / mass[kk]) * np.log(
                                    (jab / mass[kk]) / ((pr / mass[kk]) * (pc / mass[kk]))
                                )
                    total += (mass[kk] / cnt) * mi_k
            out[i, j] = total
    for i in range(p):
        for j in range(i + 1, p):
            out[j, i] = out[i, j]
    return out
