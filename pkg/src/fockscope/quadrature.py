"""Quadrature helpers: tanh-sinh rules, Gauss rules, radial transforms."""

from __future__ import annotations

import numpy as np


def tanh_sinh_nodes(order, h=None):
    """Tanh-sinh (double exponential) nodes and weights on (-1, 1).

    ``order`` is the number of positive abscissae; 2*order+1 points total.
    Endpoint-singular but integrable integrands are handled well because
    nodes accumulate doubly exponentially at the ends.
    """
    if h is None:
        # shrink the mesh as the node count grows so the rule converges
        h = 3.8 / order
    k = np.arange(-order, order + 1)
    t = k * h
    sinh_t = np.sinh(t)
    x = np.tanh(0.5 * np.pi * sinh_t)
    w = h * 0.5 * np.pi * np.cosh(t) / np.cosh(0.5 * np.pi * sinh_t) ** 2
    return x, w


def integrate_tanh_sinh(f, a, b, order=200):
    """Integrate ``f`` over [a, b] with a fixed tanh-sinh rule.

    ``f`` must accept a numpy array and may return complex values.
    """
    if a == b:
        return 0.0
    x, w = tanh_sinh_nodes(order)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    vals = f(mid + half * x)
    return half * np.sum(w * vals)


def gauss_legendre(n, a=-1.0, b=1.0):
    """Gauss-Legendre nodes/weights mapped to [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return mid + half * x, half * w


def gauss_hermite(n):
    """Gauss-Hermite rule for integral over R with weight exp(-u^2)."""
    return np.polynomial.hermite.hermgauss(n)


def radial_fourier_3d(kernel, k_nodes, k_weights, r):
    """3-d Fourier transform of a radial function at radii ``r``.

    Computes (2 pi)^{-3/2} * 4 pi / r * int k sin(k r) kernel(k) dk
    from samples of ``kernel`` on a 1-d radial rule; at r = 0 the limit
    (2 pi)^{-3/2} * 4 pi * int k^2 kernel dk is used.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    k = np.asarray(k_nodes)
    w = np.asarray(k_weights)
    out = np.empty(r.shape, dtype=complex)
    small = np.abs(r) < 1e-12
    if np.any(~small):
        rr = r[~small]
        phase = np.sin(np.outer(rr, k))
        out[~small] = (phase * (k * w * kernel)).sum(axis=1) / rr
    if np.any(small):
        out[small] = np.sum(k ** 2 * w * kernel)
    return out * 4.0 * np.pi / (2.0 * np.pi) ** 1.5


def midpoint_nodes(a, b, n):
    """Midpoint rule nodes and weights on [a, b]."""
    h = (b - a) / n
    x = a + (np.arange(n) + 0.5) * h
    w = np.full(n, h)
    return x, w
