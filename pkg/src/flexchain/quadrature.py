"""Gauss-Legendre quadrature helpers shared by the modal machinery."""

import numpy as np


def gauss_legendre(a, b, npts):
    """Nodes and weights of the npts-point Gauss-Legendre rule on [a, b]."""
    if npts < 1:
        raise ValueError("need at least one quadrature point")
    x, w = np.polynomial.legendre.leggauss(int(npts))
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    return mid + half * x, half * w


def integrate(f, a, b, npts=16):
    """Integrate a vectorized callable on [a, b] with Gauss-Legendre."""
    x, w = gauss_legendre(a, b, npts)
    fx = np.asarray(f(x), dtype=float)
    return np.tensordot(w, fx, axes=(0, 0)) if fx.ndim > 1 else w @ fx
