"""Pure-numpy pair-sum kernels, the fallback for the compiled core.

Same contracts as scorelandau._core: inputs are C-contiguous float64 arrays,
pairs with |z|^2 <= floor^2 contribute nothing, and the 1/N (or 1/N^2)
normalization is applied inside.  Row blocks keep the pairwise temporaries
at a bounded memory footprint; reductions run in a fixed order.
"""

import numpy as np

_BLOCK_ELEMENTS = 2_097_152


def _block_size(n):
    return max(1, _BLOCK_ELEMENTS // max(n, 1))


def _pair_weights(r2, c, gamma, floor2):
    """c * |z|^gamma with zeros at masked (sub-floor) pairs."""
    mask = r2 > floor2
    if gamma == 0.0:
        return np.where(mask, c, 0.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        w = c * r2 ** (0.5 * gamma)
    return np.where(mask, w, 0.0)


def drift_sum(V, S, c, gamma, floor, identity):
    """G_i = (1/N) sum_j A(v_i - v_j)(s_i - s_j)."""
    V = np.asarray(V, dtype=float)
    S = np.asarray(S, dtype=float)
    n, d = V.shape
    if identity:
        return S - S.mean(axis=0)
    floor2 = floor * floor
    G = np.empty_like(V)
    b = _block_size(n)
    for i0 in range(0, n, b):
        i1 = min(i0 + b, n)
        Z = V[i0:i1, None, :] - V[None, :, :]
        X = S[i0:i1, None, :] - S[None, :, :]
        r2 = np.einsum("bjd,bjd->bj", Z, Z)
        zx = np.einsum("bjd,bjd->bj", Z, X)
        w = _pair_weights(r2, c, gamma, floor2)
        G[i0:i1] = np.einsum("bj,bjd->bd", w * r2, X) - np.einsum(
            "bj,bjd->bd", w * zx, Z
        )
    G /= n
    return G


def logdet_rate_sum(V, S, J, c, gamma, floor, identity):
    """rate_i = -(1/N) sum_j [A(z_ij) : J_i - c (d-1)|z_ij|^gamma z_ij.(s_i-s_j)].

    A symmetric makes A : J_i = A : J_i^T; the contraction expands to
    c |z|^gamma (|z|^2 tr J_i - z^T J_i z).
    """
    V = np.asarray(V, dtype=float)
    S = np.asarray(S, dtype=float)
    J = np.asarray(J, dtype=float)
    n, d = V.shape
    tr = np.trace(J, axis1=1, axis2=2)
    if identity:
        return -tr.copy()
    floor2 = floor * floor
    rates = np.empty(n)
    b = _block_size(n)
    for i0 in range(0, n, b):
        i1 = min(i0 + b, n)
        Z = V[i0:i1, None, :] - V[None, :, :]
        X = S[i0:i1, None, :] - S[None, :, :]
        r2 = np.einsum("bjd,bjd->bj", Z, Z)
        zx = np.einsum("bjd,bjd->bj", Z, X)
        zJz = np.einsum("bjd,bde,bje->bj", Z, J[i0:i1], Z)
        w = _pair_weights(r2, c, gamma, floor2)
        term1 = w * (r2 * tr[i0:i1, None] - zJz)
        term2 = w * (d - 1.0) * zx
        rates[i0:i1] = (term1 - term2).sum(axis=1)
    return -rates / n


def entropy_rate_sum(V, S, c, gamma, floor, identity):
    """-(1/N^2) sum_{i,j} s_i . A(v_i - v_j)(s_i - s_j).

    Accumulated over ordered pairs fused with their transposes, i.e. as
    -(1/2N^2) sum_{i,j} (s_i - s_j) . A (s_i - s_j).
    """
    V = np.asarray(V, dtype=float)
    S = np.asarray(S, dtype=float)
    n, d = V.shape
    floor2 = floor * floor
    total = 0.0
    b = _block_size(n)
    for i0 in range(0, n, b):
        i1 = min(i0 + b, n)
        X = S[i0:i1, None, :] - S[None, :, :]
        x2 = np.einsum("bjd,bjd->bj", X, X)
        if identity:
            total += x2.sum()
            continue
        Z = V[i0:i1, None, :] - V[None, :, :]
        r2 = np.einsum("bjd,bjd->bj", Z, Z)
        zx = np.einsum("bjd,bjd->bj", Z, X)
        w = _pair_weights(r2, c, gamma, floor2)
        total += (w * (r2 * x2 - zx * zx)).sum()
    return -0.5 * total / (n * n)
