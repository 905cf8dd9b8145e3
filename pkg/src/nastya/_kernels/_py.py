"""Numpy implementation of the hot loops.

Fallback used when the compiled extension is unavailable. The local pass is
inherently sequential in the step index, so this version vectorizes across
the cohort instead: all participating clients advance in lockstep.

All per-sample gradient math goes through one flat helper per problem
family. This keeps the single-sample case of a local pass bitwise identical
to the full-dataset gradient restricted to one sample, which the reduction
tests rely on.
"""

from __future__ import annotations

import numpy as np


def _sigmoid_of_neg(z: np.ndarray) -> np.ndarray:
    """Elementwise 1 / (1 + exp(z)), computed without overflow."""
    out = np.empty_like(z)
    pos = z >= 0
    ez = np.exp(-z[pos])
    out[pos] = ez / (1.0 + ez)
    ez = np.exp(z[~pos])
    out[~pos] = 1.0 / (1.0 + ez)
    return out


# -- quadratic: f(x) = 0.5 (x - c)^T A (x - c) --------------------------------


def _quad_grads(H: np.ndarray, diff: np.ndarray) -> np.ndarray:
    # H (N, d, d), diff (N, d) -> per-sample gradients (N, d)
    return np.einsum("nij,nj->ni", H, diff)


def quad_value_grad(hessians, centers, x):
    """Mean value and gradient over all M*n quadratic samples."""
    M, n, d = centers.shape
    H = np.ascontiguousarray(hessians.reshape(M * n, d, d))
    diff = np.ascontiguousarray(x[None, :] - centers.reshape(M * n, d))
    g = _quad_grads(H, diff)
    vals = 0.5 * np.einsum("ni,ni->n", diff, g)
    return float(vals.sum() / (M * n)), g.sum(axis=0) / (M * n)


def quad_pass(hessians, centers, clients, idx, x0, gamma):
    """Sequential local pass for each listed client, vectorized across clients.

    idx[c, i] is the sample index client clients[c] visits at step i.
    Returns the end iterates (C, d) and the per-client mean of the gradients
    actually applied (C, d).
    """
    C, n = idx.shape
    d = x0.shape[0]
    X = np.tile(x0, (C, 1))
    gsum = np.zeros((C, d))
    Hc = hessians[clients]
    cc = centers[clients]
    rows = np.arange(C)
    for i in range(n):
        sel = idx[:, i]
        Hs = np.ascontiguousarray(Hc[rows, sel])
        diff = np.ascontiguousarray(X - cc[rows, sel])
        g = _quad_grads(Hs, diff)
        gsum += g
        X = X - gamma * g
    return X, gsum / n


# -- logistic: f(x) = log(1 + exp(-y a^T x)) + lam/2 ||x||^2 ------------------


def _logreg_grads(A: np.ndarray, y: np.ndarray, X: np.ndarray, lam: float) -> np.ndarray:
    # A (N, d), y (N,), X (N, d) -> per-sample gradients (N, d)
    z = y * np.einsum("nd,nd->n", A, X)
    s = _sigmoid_of_neg(z)
    return (-(y * s))[:, None] * A + lam * X


def logreg_value_grad(features, labels, lam, x):
    """Mean value and gradient over all M*n logistic samples."""
    M, n, d = features.shape
    A = np.ascontiguousarray(features.reshape(M * n, d))
    y = np.ascontiguousarray(labels.reshape(M * n))
    X = np.ascontiguousarray(np.broadcast_to(x, (M * n, d)))
    g = _logreg_grads(A, y, X, lam)
    z = y * (A @ x)
    vals = np.logaddexp(0.0, -z) + 0.5 * lam * float(x @ x)
    return float(vals.sum() / (M * n)), g.sum(axis=0) / (M * n)


def logreg_pass(features, labels, lam, clients, idx, x0, gamma):
    C, n = idx.shape
    d = x0.shape[0]
    X = np.tile(x0, (C, 1))
    gsum = np.zeros((C, d))
    Ac = features[clients]
    yc = labels[clients]
    rows = np.arange(C)
    for i in range(n):
        sel = idx[:, i]
        A = np.ascontiguousarray(Ac[rows, sel])
        y = np.ascontiguousarray(yc[rows, sel])
        g = _logreg_grads(A, y, X, lam)
        gsum += g
        X = X - gamma * g
    return X, gsum / n


# -- rational: f(x) = s^2 / (1 + s^2), s = a^T x - b --------------------------


def _rat_grads(A: np.ndarray, b: np.ndarray, X: np.ndarray) -> np.ndarray:
    s = np.einsum("nd,nd->n", A, X) - b
    q = 1.0 + s * s
    dval = 2.0 * s / (q * q)
    return dval[:, None] * A


def rat_value_grad(slopes, offsets, x):
    """Mean value and gradient over all M*n bounded-rational samples."""
    M, n, d = slopes.shape
    A = np.ascontiguousarray(slopes.reshape(M * n, d))
    b = np.ascontiguousarray(offsets.reshape(M * n))
    X = np.ascontiguousarray(np.broadcast_to(x, (M * n, d)))
    g = _rat_grads(A, b, X)
    s = A @ x - b
    vals = s * s / (1.0 + s * s)
    return float(vals.sum() / (M * n)), g.sum(axis=0) / (M * n)


def rat_pass(slopes, offsets, clients, idx, x0, gamma):
    C, n = idx.shape
    d = x0.shape[0]
    X = np.tile(x0, (C, 1))
    gsum = np.zeros((C, d))
    Ac = slopes[clients]
    bc = offsets[clients]
    rows = np.arange(C)
    for i in range(n):
        sel = idx[:, i]
        A = np.ascontiguousarray(Ac[rows, sel])
        b = np.ascontiguousarray(bc[rows, sel])
        g = _rat_grads(A, b, X)
        gsum += g
        X = X - gamma * g
    return X, gsum / n
