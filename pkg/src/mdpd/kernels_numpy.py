"""Pure-numpy implementations of the hot kernels.

Fallback path for environments without numba (or with MDPD_BACKEND=numpy).
Same contracts as kernels_numba; see backend.py for selection.

All label arrays are (n_items, n_workers) int16 with 0 marking a missing
observation and values 1..n_classes otherwise.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.special import logsumexp


def cooccurrence_counts(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """Co-observed label counts for every ordered worker pair.

    Returns an (p, p, C, C) int64 array where ``counts[i, j, a-1, b-1]`` is
    the number of items on which worker i gave label a and worker j gave
    label b. Diagonal blocks (i == j) are zeroed.
    """
    n_items, p = labels.shape
    rows, cols_w = np.nonzero(labels)
    col_idx = cols_w.astype(np.int64) * n_classes + (labels[rows, cols_w].astype(np.int64) - 1)
    z = sparse.csr_matrix(
        (np.ones(len(rows), dtype=np.int64), (rows, col_idx)),
        shape=(n_items, p * n_classes),
    )
    gram = (z.T @ z).toarray()
    counts = np.ascontiguousarray(
        gram.reshape(p, n_classes, p, n_classes).transpose(0, 2, 1, 3)
    )
    diag = np.arange(p)
    counts[diag, diag] = 0
    return counts


def em_estep(labels: np.ndarray, log_weights: np.ndarray, log_cond: np.ndarray):
    """Posterior over components and per-item log-likelihood.

    ``log_cond`` is (p, C, K); missing cells contribute no factor.
    Returns (post (N, K), item_ll (N,)).
    """
    n_items, p = labels.shape
    k = log_weights.shape[0]
    post = np.empty((n_items, k))
    item_ll = np.empty(n_items)
    worker_idx = np.arange(p)
    chunk = max(1, 4_000_000 // max(1, p * k))
    for start in range(0, n_items, chunk):
        lab = labels[start : start + chunk]
        obs = lab > 0
        idx = np.where(obs, lab - 1, 0)
        g = log_cond[worker_idx[None, :], idx, :]  # (m, p, K)
        g = np.where(obs[:, :, None], g, 0.0)
        acc = g.sum(axis=1) + log_weights[None, :]
        ll = logsumexp(acc, axis=1)
        with np.errstate(invalid="ignore"):
            post[start : start + chunk] = np.exp(acc - ll[:, None])
        item_ll[start : start + chunk] = ll
    return post, item_ll


def em_mstep_counts(labels: np.ndarray, post: np.ndarray, n_classes: int) -> np.ndarray:
    """Posterior-weighted label counts, (p, C, K)."""
    p = labels.shape[1]
    k = post.shape[1]
    counts = np.empty((p, n_classes, k))
    for r in range(1, n_classes + 1):
        mask = (labels == r).astype(np.float64)
        # einsum keeps the reduction single-threaded and deterministic
        counts[:, r - 1, :] = np.einsum("ni,nk->ik", mask, post)
    return counts


def pair_conditional_mi(labels: np.ndarray, post: np.ndarray, n_classes: int) -> np.ndarray:
    """Component-conditional mutual information for every worker pair.

    For each pair the weighted joint over (label_i, label_j, component) is
    built from their co-observed items, each component renormalized over that
    item subset; pairs with no co-observed item yield 0. Returns a symmetric
    (p, p) float64 matrix with zero diagonal.
    """
    n_items, p = labels.shape
    k = post.shape[1]
    c = n_classes
    out = np.zeros((p, p))
    obs = labels > 0
    for i in range(p):
        obs_i = obs[:, i]
        for j in range(i + 1, p):
            both = obs_i & obs[:, j]
            cnt = int(both.sum())
            if cnt == 0:
                continue
            code = (labels[both, i].astype(np.intp) - 1) * c + (labels[both, j].astype(np.intp) - 1)
            w = post[both]
            joint = np.zeros((c * c, k))
            np.add.at(joint, code, w)
            mass = w.sum(axis=0)
            total = 0.0
            for kk in range(k):
                if mass[kk] <= 0.0:
                    continue
                jk = joint[:, kk].reshape(c, c) / mass[kk]
                pr = jk.sum(axis=1)
                pc = jk.sum(axis=0)
                nz = jk > 0
                ratio = jk[nz] / (pr[:, None] * pc[None, :])[nz]
                total += (mass[kk] / cnt) * float(np.sum(jk[nz] * np.log(ratio)))
            out[i, j] = out[j, i] = total
    return out
