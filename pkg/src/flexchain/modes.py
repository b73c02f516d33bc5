"""Separation-of-variables machinery for the deformation field.

A link's transverse/axial displacement is written r_xi(xi, t) = phi(xi) eta(t)
with phi a 3 x 3r block layout: mode p occupies columns 3(p-1)..3p-1 with the
axial shape on row x and one bending shape on each of rows y and z.  Two
boundary families are provided:

* ``clamped-free``      -- geometric clamp at the joint-side end (l1),
* ``free-free-elastic`` -- natural (moment/shear-free) ends, rigid modes
                           excluded (the body frame carries them).

Shapes are evaluated in closed form to the fourth derivative.  The hyperbolic
parts are evaluated through an exponential split with cancellation-free
coefficients so high modes stay accurate (naive cosh-cos combinations lose
all digits beyond beta*l ~ 20).
"""

import numpy as np
from scipy.optimize import brentq

from .quadrature import gauss_legendre

CLAMPED_FREE = "clamped-free"
FREE_FREE = "free-free-elastic"
KINDS = (CLAMPED_FREE, FREE_FREE)

# trig coefficient cycle under d/du: (C cos + D sin)' = D cos - C sin
# d/du maps (C cos u + D sin u) -> (D cos u - C sin u): coefficient cycle
# (C, D) -> (D, -C) -> (-C, -D) -> (-D, C), encoded as (tc, td) multipliers
_TRIG_CYCLE = ((1, 0), (0, 1), (-1, 0), (0, -1))


def bending_roots(kind, r):
    """First r positive roots of the bending characteristic equation.

    clamped-free: cos(x) cosh(x) = -1, conditioned as cos(x) + sech(x) = 0;
    free-free:    cos(x) cosh(x) = +1, conditioned as cos(x) - sech(x) = 0.
    Returned values are beta_p * l.
    """
    if kind == CLAMPED_FREE:
        centers = [(2 * p - 1) * np.pi / 2.0 for p in range(1, r + 1)]

        def g(x):
            return np.cos(x) + 1.0 / np.cosh(x)
    elif kind == FREE_FREE:
        centers = [(2 * p + 1) * np.pi / 2.0 for p in range(1, r + 1)]

        def g(x):
            return np.cos(x) - 1.0 / np.cosh(x)
    else:
        raise ValueError("unknown basis kind %r" % kind)

    roots = []
    for c in centers:
        a, b = c - 0.8, c + 0.8
        if g(a) * g(b) > 0.0:
            raise RuntimeError(
                "characteristic root bracket [%g, %g] does not straddle a root"
                % (a, b))
        roots.append(brentq(g, a, b, xtol=1e-14, rtol=8.9e-16))
    return np.asarray(roots)


def _bending_coefficients(kind, x):
    """Stable closed-form coefficients of one bending shape.

    The shape in u = beta (xi - l1) is
        A cosh u + B sinh u + C cos u + D sin u
    returned as (cp, cm, C, D) with cp = (A+B)/2 and cm = (A-B)/2 the
    coefficients of e^u and e^-u.  cp is computed in a cancellation-free
    form (A + B = 1 - sigma underflows catastrophically otherwise).
    """
    sinh, cosh = np.sinh(x), np.cosh(x)
    sin, cos = np.sin(x), np.cos(x)
    if kind == CLAMPED_FREE:
        sigma = (cosh + cos) / (sinh + sin)
        one_minus_sigma = (sin - cos - np.exp(-x)) / (sinh + sin)
        C, D = -1.0, sigma
    else:
        sigma = (cosh - cos) / (sinh - sin)
        one_minus_sigma = (cos - sin - np.exp(-x)) / (sinh - sin)
        C, D = 1.0, -sigma
    cp = 0.5 * one_minus_sigma
    cm = 0.5 * (1.0 + sigma)
    return cp, cm, C, D


class LinkBasis:
    """Orthonormal assumed-modes basis of one link.

    Parameters: kind in KINDS, r modes per axis, and the endpoint offsets
    l1 < l2 of the link's material interval.  All shapes are normalized to
    unit L2 norm on [l1, l2].
    """

    def __init__(self, kind, r, l1, l2):
        if kind not in KINDS:
            raise ValueError("unknown basis kind %r" % kind)
        if r < 0:
            raise ValueError("mode count must be nonnegative")
        if not l2 > l1:
            raise ValueError("l2 must exceed l1")
        self.kind = kind
        self.r = int(r)
        self.l1 = float(l1)
        self.l2 = float(l2)
        self.length = self.l2 - self.l1

        x = bending_roots(kind, self.r)          # beta_p * l
        self.bl = x
        self.beta = x / self.length
        self._bcoef = [_bending_coefficients(kind, xp) for xp in x]

        if kind == CLAMPED_FREE:
            self.kappa = (2.0 * np.arange(1, self.r + 1) - 1.0) * np.pi \
                / (2.0 * self.length)
        else:
            self.kappa = np.arange(1, self.r + 1) * np.pi / self.length

        # unit L2 normalization (high-order rule; shapes are smooth)
        self._scale_b = np.ones(self.r)
        self._scale_a = np.ones(self.r)
        xi, w = gauss_legendre(self.l1, self.l2, 128)
        fb = self.eval_bending(xi, 0)
        fa = self.eval_axial(xi, 0)
        self._scale_b = 1.0 / np.sqrt(w @ fb**2)
        self._scale_a = 1.0 / np.sqrt(w @ fa**2)

    # -- per-axis shape evaluation ---------------------------------------

    def eval_bending(self, xi, order=0):
        """Bending shapes (and derivatives) at xi: array (len(xi), r)."""
        if order < 0 or order > 4:
            raise ValueError("derivative order must be in 0..4")
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        self._check_range(xi)
        out = np.empty((xi.size, self.r))
        tc, td = _TRIG_CYCLE[order % 4]
        for p in range(self.r):
            cp, cm, C0, D0 = self._bcoef[p]
            u = self.beta[p] * (xi - self.l1)
            Cd = tc * C0 + td * D0
            Dd = tc * D0 - td * C0
            val = (cp * np.exp(u) + (-1.0) ** order * cm * np.exp(-u)
                   + Cd * np.cos(u) + Dd * np.sin(u))
            out[:, p] = self.beta[p] ** order * self._scale_b[p] * val
        return out

    def eval_axial(self, xi, order=0):
        """Axial rod shapes (and derivatives) at xi: array (len(xi), r)."""
        if order < 0 or order > 4:
            raise ValueError("derivative order must be in 0..4")
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        self._check_range(xi)
        out = np.empty((xi.size, self.r))
        for p in range(self.r):
            k = self.kappa[p]
            u = k * (xi - self.l1)
            if self.kind == CLAMPED_FREE:
                cyc = (np.sin, np.cos, lambda t: -np.sin(t),
                       lambda t: -np.cos(t))
            else:
                cyc = (np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t),
                       np.sin)
            out[:, p] = k ** order * self._scale_a[p] * cyc[order % 4](u)
        return out

    def _check_range(self, xi):
        eps = 1e-9 * self.length
        if np.any(xi < self.l1 - eps) or np.any(xi > self.l2 + eps):
            raise ValueError("xi outside [l1, l2]")

    # -- block layout ------------------------------------------------------

    def evaluate(self, xi, order=0):
        """3 x 3r shape matrix (or spatial derivative) at scalar xi."""
        return self.evaluate_nodes(np.array([float(xi)]), order)[0]

    def evaluate_nodes(self, xi, order=0):
        """Shape matrices at an array of stations: (len(xi), 3, 3r)."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        fa = self.eval_axial(xi, order)
        fb = self.eval_bending(xi, order)
        out = np.zeros((xi.size, 3, 3 * self.r))
        cols = 3 * np.arange(self.r)
        out[:, 0, cols] = fa
        out[:, 1, cols + 1] = fb
        out[:, 2, cols + 2] = fb
        return out

    def check_coordinates(self, eta):
        eta = np.asarray(eta, dtype=float).reshape(-1)
        if eta.size != 3 * self.r:
            raise ValueError(
                "modal coordinate length %d does not match 3r = %d"
                % (eta.size, 3 * self.r))
        return eta


class ModalField:
    """Deformation field r_xi = phi eta backed by a basis and coordinates."""

    def __init__(self, basis, eta, etadot=None):
        self.basis = basis
        self.eta = basis.check_coordinates(eta)
        if etadot is None:
            etadot = np.zeros_like(self.eta)
        self.etadot = basis.check_coordinates(etadot)

    def r_xi(self, xi, order=0):
        """Displacement (order=0) or its xi-derivatives; shape (..., 3)."""
        phi = self.basis.evaluate_nodes(np.atleast_1d(xi), order)
        out = phi @ self.eta
        return out[0] if np.isscalar(xi) else out

    def v_xi(self, xi):
        """Displacement rate; shape (..., 3)."""
        phi = self.basis.evaluate_nodes(np.atleast_1d(xi), 0)
        out = phi @ self.etadot
        return out[0] if np.isscalar(xi) else out


def reconstruct_deformation(basis, eta, etadot=None):
    """Bind modal coordinates to a basis, yielding an evaluable field."""
    return ModalField(basis, eta, etadot)


def project_field(basis, f, npts=128):
    """L2-project a displacement field f(xi) -> (..., 3) onto the basis."""
    xi, w = gauss_legendre(basis.l1, basis.l2, npts)
    phi = basis.evaluate_nodes(xi, 0)            # (N, 3, 3r)
    fx = np.asarray(f(xi), dtype=float)          # (N, 3)
    gram = np.einsum("n,nij,nik->jk", w, phi, phi)
    rhs = np.einsum("n,nij,ni->j", w, phi, fx)
    return np.linalg.solve(gram, rhs)


class ModalCache:
    """Quadrature nodes, tabulated shapes, and constant modal integrals.

    One cache per link; every integral the dynamics assembles for that link
    uses this cache's single quadrature rule, which is what keeps the
    semi-discrete system exactly conservative (the equations are then the
    Euler-Lagrange system of the quadrature-perturbed Lagrangian).
    """

    def __init__(self, basis, params, npts=None):
        if npts is None:
            npts = max(16, 8 * basis.r)
        self.basis = basis
        self.params = params
        self.npts = int(npts)
        self.xi, self.w = gauss_legendre(basis.l1, basis.l2, self.npts)
        self.phi = [basis.evaluate_nodes(self.xi, d) for d in range(5)]

        w, phi0 = self.w, self.phi[0]
        self.Phi0 = np.einsum("n,nij->ij", w, phi0)          # int phi
        self.Gram = np.einsum("n,nij,nik->jk", w, phi0, phi0)

        iv1 = np.array([params.E * params.A, 0.0, 0.0])
        iv2 = np.array([0.0, params.E * params.Iz, params.E * params.Iy])
        self.K = (np.einsum("n,nij,i,nik->jk", w, self.phi[2], iv2,
                            self.phi[2])
                  + np.einsum("n,nij,i,nik->jk", w, self.phi[1], iv1,
                              self.phi[1]))
        self.K = 0.5 * (self.K + self.K.T)
        self.K_literal = (np.einsum("n,nij,i,nik->jk", w, phi0, iv2,
                                    self.phi[4])
                          - np.einsum("n,nij,i,nik->jk", w, phi0, iv1,
                                      self.phi[2]))
        self.iv1 = iv1
        self.iv2 = iv2

        # endpoint shape values to third derivative order
        self.phi_l1 = [basis.evaluate(basis.l1, d) for d in range(4)]
        self.phi_l2 = [basis.evaluate(basis.l2, d) for d in range(4)]

        # undeformed centerline stations [xi, 0, 0]
        self.rb = np.zeros((self.npts, 3))
        self.rb[:, 0] = self.xi

        # quadrature-weighted shapes, reused by every assembly call
        self.wphi0 = w[:, None, None] * phi0


def natural_frequencies(basis, params):
    """Per-mode angular frequencies (rad/s): axial, bending-y, bending-z."""
    mu = params.mu
    wy = (basis.bl / basis.length) ** 2 * np.sqrt(params.E * params.Iz / mu)
    wz = (basis.bl / basis.length) ** 2 * np.sqrt(params.E * params.Iy / mu)
    wx = basis.kappa * np.sqrt(params.E / params.rho)
    return wx, wy, wz
