"""Finite-difference stencils on uniform grids."""
from functools import lru_cache

import numpy as np

from .errors import TraceOrderError


def fornberg_weights(x0: float, nodes, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives 0..m at x0 on arbitrary nodes.

    Returns an array of shape (m+1, len(nodes)); row d holds the weights of
    the d-th derivative. Standard Fornberg recursion.
    """
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    c = np.zeros((m + 1, n))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = nodes[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


@lru_cache(maxsize=None)
def _one_sided_unit(order: int, accuracy: int) -> np.ndarray:
    npts = order + accuracy
    w = fornberg_weights(0.0, np.arange(npts, dtype=float), order)[order]
    w.setflags(write=False)
    return w


def one_sided_weights(order: int, accuracy: int, h: float) -> np.ndarray:
    """Weights of a forward stencil for d^order/ds^order at s=0 with error O(h^accuracy)."""
    if order == 0:
        return np.ones(1)
    return _one_sided_unit(order, accuracy) / h**order


def one_sided_derivative(a_bf: np.ndarray, h: float, order: int, accuracy: int) -> float:
    """d^order a / ds^order at the first node of a boundary-first array."""
    if order == 0:
        return float(a_bf[0])
    w = one_sided_weights(order, accuracy, h)
    if len(w) > len(a_bf):
        raise TraceOrderError(
            f"derivative of order {order} at accuracy {accuracy} needs {len(w)} nodes, "
            f"segment has {len(a_bf)}"
        )
    return float(np.dot(w, a_bf[: len(w)]))


def d1(a: np.ndarray, h: float) -> np.ndarray:
    """Second-order first derivative: centered inside, 3-point one-sided at both ends."""
    out = np.empty_like(a, dtype=float)
    out[1:-1] = (a[2:] - a[:-2]) / (2.0 * h)
    out[0] = (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * h)
    out[-1] = (3.0 * a[-1] - 4.0 * a[-2] + a[-3]) / (2.0 * h)
    return out


def d2(a: np.ndarray, h: float) -> np.ndarray:
    """Three-point second difference on interior nodes; end values are zero."""
    out = np.zeros_like(a, dtype=float)
    out[1:-1] = (a[2:] - 2.0 * a[1:-1] + a[:-2]) / (h * h)
    return out
