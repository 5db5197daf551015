"""Truncated Taylor-series arithmetic.

Coefficients are normalized: a[j] stands for d_t^j a / j! (and a[j, k] for
d_t^j d_x^k a / (j! k!)), so products are plain Cauchy convolutions.
"""
import numpy as np


def series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of two series along axis 0, truncated to len(a) terms; trailing axes are pointwise."""
    n = a.shape[0]
    out = np.zeros_like(a, dtype=float)
    for j in range(n):
        for i in range(j + 1):
            out[j] += a[i] * b[j - i]
    return out


def series_sqrt(g: np.ndarray) -> np.ndarray:
    """Square root of a series along axis 0; needs g[0] > 0."""
    s = np.zeros_like(g, dtype=float)
    s[0] = np.sqrt(g[0])
    for j in range(1, g.shape[0]):
        acc = g[j].copy()
        for i in range(1, j):
            acc -= s[i] * s[j - i]
        s[j] = acc / (2.0 * s[0])
    return s


def jet_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of two bivariate jets, truncated to the shape of a."""
    J, K = a.shape
    out = np.zeros((J, K))
    for i in range(J):
        for k in range(K):
            if a[i, k] == 0.0:
                continue
            out[i:, k:] += a[i, k] * b[: J - i, : K - k]
    return out


def jet_sqrt(g: np.ndarray) -> np.ndarray:
    """Square root of a bivariate jet; needs g[0, 0] > 0."""
    J, K = g.shape
    s = np.zeros((J, K))
    s[0, 0] = np.sqrt(g[0, 0])
    for j in range(J):
        for k in range(K):
            if j == 0 and k == 0:
                continue
            acc = g[j, k]
            for a in range(j + 1):
                for b in range(k + 1):
                    if (a, b) in ((0, 0), (j, k)):
                        continue
                    acc -= s[a, b] * s[j - a, k - b]
            s[j, k] = acc / (2.0 * s[0, 0])
    return s


def jet_dx(a: np.ndarray) -> np.ndarray:
    """x-derivative of a bivariate jet (the last column becomes zero)."""
    out = np.zeros_like(a)
    K = a.shape[1]
    out[:, : K - 1] = a[:, 1:] * np.arange(1, K)
    return out
