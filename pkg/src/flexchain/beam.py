"""Continuous-form single flexible link.

Everything here is expressed in the link's own body frame.  A material point
of the link sits at r_ob(xi) = r_i + r_b(xi) + r_xi(xi) where r_i locates the
body origin relative to the inertial origin (body coordinates), r_b = [xi,0,0]
is the undeformed centerline station (slender-rod reduction: the cross-section
is collapsed onto the centerline) and r_xi is the deformation field.

The rigid-channel blocks (mass matrix, modal coupling, bias vector) are the
exact momentum balances about the inertial origin of the kinetic energy
functional; the bias vector therefore carries Coriolis/centrifugal and gravity
moments only.  The quadratic interior moments of the linearized elastic force
density (a known non-objective remainder of linear beam theory) are exposed
separately as `internal_elastic_moment` for diagnostics; adding them to the
bias would leak angular momentum on free links.

Gravity convention: the bias vector carries +m R^T g, so free fall accelerates
along -g.  With the default g = [0, -9.81, 0] weight pulls toward +y and the
gravitational potential of a link is +g . (R S1) with S1 its first mass
moment.
"""

import numpy as np

from .quadrature import gauss_legendre
from .screws import skew

# bending-torque coupling: (H tau) swaps the y/z torque components onto the
# curvature rows and annihilates the axial (torsion) component, which the
# displacement field does not carry
H_BENDING = np.array([[0.0, 0.0, 0.0],
                      [0.0, 0.0, 1.0],
                      [0.0, 1.0, 0.0]])


class LinkParameters:
    """Geometric and material constants of one uniform link."""

    def __init__(self, rho, E, A, l1, l2, Iy, Iz, m=None):
        self.rho = float(rho)
        self.E = float(E)
        self.A = float(A)
        self.l1 = float(l1)
        self.l2 = float(l2)
        self.Iy = float(Iy)
        self.Iz = float(Iz)
        if not self.l2 > self.l1:
            raise ValueError("l2 must exceed l1")
        for name in ("rho", "E", "A", "Iy", "Iz"):
            if getattr(self, name) <= 0.0:
                raise ValueError("%s must be positive" % name)
        m_geom = self.rho * self.A * (self.l2 - self.l1)
        if m is None:
            m = m_geom
        elif abs(m - m_geom) > 1e-12 * m_geom:
            raise ValueError("m inconsistent with rho*A*(l2-l1)")
        self.m = float(m)

    @property
    def mu(self):
        """Mass per unit length rho*A."""
        return self.rho * self.A

    @property
    def length(self):
        return self.l2 - self.l1


class LinkState:
    """Rigid-channel state of one link: R, r (body frame), twist (v, w)."""

    def __init__(self, R, r=(0.0, 0.0, 0.0), v=(0.0, 0.0, 0.0),
                 w=(0.0, 0.0, 0.0), validate=True):
        self.R = np.asarray(R, dtype=float).reshape(3, 3)
        if validate:
            err = np.max(np.abs(self.R.T @ self.R - np.eye(3)))
            if err > 1e-6 or np.linalg.det(self.R) < 0.0:
                raise ValueError("R is not a rotation (orthonormality "
                                 "residual %g)" % err)
        self.r = np.asarray(r, dtype=float).reshape(3)
        self.v = np.asarray(v, dtype=float).reshape(3)
        self.w = np.asarray(w, dtype=float).reshape(3)

    @property
    def z(self):
        return np.concatenate([self.v, self.w])


def elasticity_matrices(params):
    """(Iv1, Iv2, H): axial stiffness, bending stiffness, torque coupling."""
    Iv1 = np.diag([params.E * params.A, 0.0, 0.0])
    Iv2 = np.diag([0.0, params.E * params.Iz, params.E * params.Iy])
    return Iv1, Iv2, H_BENDING


def _stations(params, npts, cache):
    if cache is not None:
        return cache.xi, cache.w
    return gauss_legendre(params.l1, params.l2, npts)


def _check_xi(params, xi):
    xi = np.asarray(xi, dtype=float)
    eps = 1e-9 * params.length
    if np.any(xi < params.l1 - eps) or np.any(xi > params.l2 + eps):
        raise ValueError("xi outside [l1, l2]")
    return xi


def centerline_position(params, state, defo, xi):
    """Material position r_ob = r_i + [xi,0,0] + r_xi(xi), body frame."""
    xi = _check_xi(params, xi)
    rb = np.zeros(np.shape(xi) + (3,))
    rb[..., 0] = xi
    return state.r + rb + defo.r_xi(xi)


def _rob_nodes(params, state, defo, xi):
    rb = np.zeros((xi.size, 3))
    rb[:, 0] = xi
    return state.r + rb + defo.r_xi(xi)


def mass_matrix(params, state, defo, npts=16, cache=None):
    """6x6 rigid-channel mass matrix about the inertial origin, body frame.

    [[m I, -skew(S1)], [skew(S1), J]] with S1 = mu int r_ob and
    J = mu int skew(r_ob) skew(r_ob)^T (slender-rod section reduction).
    Symmetric by construction; positive definite whenever the mass
    distribution is not a straight zero-thickness line.
    """
    xi, w = _stations(params, npts, cache)
    rob = _rob_nodes(params, state, defo, xi)
    if not np.all(np.isfinite(rob)):
        raise ValueError("non-finite deformation field at quadrature nodes")
    mu = params.mu
    S1 = mu * (w @ rob)
    J = mu * ((w @ np.einsum("ni,ni->n", rob, rob)) * np.eye(3)
              - np.einsum("n,ni,nj->ij", w, rob, rob))
    M = np.zeros((6, 6))
    M[:3, :3] = params.m * np.eye(3)
    sk = skew(S1)
    M[:3, 3:] = -sk
    M[3:, :3] = sk
    M[3:, 3:] = J
    return M


def first_moment(params, state, defo, npts=16, cache=None):
    """S1 = mu int r_ob dxi (kg m, body frame)."""
    xi, w = _stations(params, npts, cache)
    return params.mu * (w @ _rob_nodes(params, state, defo, xi))


def coupling_vector(params, state, defo, vdot_xi, npts=16, cache=None):
    """Rigid-channel load of a modal acceleration field vdot_xi(xi).

    [mu int vdot_xi ; mu int r_ob x vdot_xi] -- the exact rate the modal
    channel feeds the link's linear/angular momentum about the origin.
    """
    xi, w = _stations(params, npts, cache)
    rob = _rob_nodes(params, state, defo, xi)
    a = np.asarray(vdot_xi(xi), dtype=float)
    mu = params.mu
    return np.concatenate([mu * (w @ a),
                           mu * (w @ np.cross(rob, a))])


def bias_vector(params, state, defo, gravity, npts=16, cache=None):
    """Velocity-dependent and gravity loads of the rigid channel.

    linear : mu int (2 w x v_ob + w x (w x r_ob)) + m R^T g
    angular: mu int r_ob x (2 w x v_ob + w x (w x r_ob)) + S1 x (R^T g)
    with v_ob = v + v_xi.  Placed on the left-hand side of the dynamics.
    """
    xi, w = _stations(params, npts, cache)
    rob = _rob_nodes(params, state, defo, xi)
    vob = state.v + defo.v_xi(xi)
    wvec = state.w
    acc = (2.0 * np.cross(wvec, vob)
           + np.cross(wvec, np.cross(wvec, rob)))
    mu = params.mu
    g_body = state.R.T @ np.asarray(gravity, dtype=float)
    S1 = mu * (w @ rob)
    out = np.zeros(6)
    out[:3] = mu * (w @ acc) + params.m * g_body
    out[3:] = mu * (w @ np.cross(rob, acc)) + np.cross(S1, g_body)
    return out


def internal_elastic_moment(params, defo, npts=16, cache=None):
    """Quadratic interior moment of the linearized elastic force density.

    int [ r_xi' x (Iv1 r_xi') + r_xi'' x (Iv2 r_xi'') ] dxi.  Identically
    zero for planar bending with Iy = Iz; nonzero when axial stretch and
    bending coexist.  Diagnostic only -- not part of the dynamics (see module
    docstring).
    """
    xi, w = _stations(params, npts, cache)
    d1 = defo.r_xi(xi, 1)
    d2 = defo.r_xi(xi, 2)
    Iv1, Iv2, _ = elasticity_matrices(params)
    return (w @ np.cross(d1, d1 @ Iv1.T)
            + w @ np.cross(d2, d2 @ Iv2.T))


def end_wrench_vector(params, defo, F_B, F_T):
    """Rigid-channel load of the two end wrenches (boundary convention).

    F_B is the wrench applied at the base end; F_T carries the tip wrench in
    internal-force sign (the scenario layer maps a physically applied tip
    wrench W to F_T = -W).  Torque arms use the endpoint deformation only.
    """
    F_B = np.asarray(F_B, dtype=float).reshape(6)
    F_T = np.asarray(F_T, dtype=float).reshape(6)
    rxi1 = defo.r_xi(params.l1)
    rxi2 = defo.r_xi(params.l2)
    out = np.zeros(6)
    out[:3] = F_B[:3] - F_T[:3]
    out[3:] = (F_B[3:] - F_T[3:]
               - np.cross(rxi1, F_B[:3]) + np.cross(rxi2, F_T[:3]))
    return out


def displacement_residual(params, state, defo, vdot, wdot, vdot_xi, gravity,
                          xi):
    """Pointwise residual of the displacement equation of motion.

    vdot + vdot_xi - r_ob x^T ... explicitly:
      vdot + vdot_xi(xi) - skew(r_ob) wdot + 2 w x v_ob + w x (w x r_ob)
      + R^T g + (Iv2 r_xi'''' - Iv1 r_xi'') / mu
    Zero for exact solutions of the continuous model.
    """
    scalar = np.isscalar(xi) or np.ndim(xi) == 0
    xi = np.atleast_1d(_check_xi(params, xi))
    rob = _rob_nodes(params, state, defo, xi)
    vob = state.v + defo.v_xi(xi)
    w = state.w
    Iv1, Iv2, _ = elasticity_matrices(params)
    elastic = (defo.r_xi(xi, 4) @ Iv2.T - defo.r_xi(xi, 2) @ Iv1.T) / params.mu
    g_body = state.R.T @ np.asarray(gravity, dtype=float)
    res = (np.asarray(vdot, dtype=float) + np.asarray(vdot_xi(xi), dtype=float)
           - np.cross(rob, wdot) + 2.0 * np.cross(w, vob)
           + np.cross(w, np.cross(w, rob)) + g_body + elastic)
    return res[0] if scalar else res


def boundary_residuals(params, defo, F_B, F_T):
    """Residuals of the four natural boundary conditions.

    returns (shear_base, shear_tip, moment_base, moment_tip):
      Iv2 r_xi'''(l1) - Iv1 r_xi'(l1) - F_B.force
      Iv2 r_xi'''(l2) - Iv1 r_xi'(l2) - F_T.force
      -Iv2 r_xi''(l1) - H F_B.torque
      -Iv2 r_xi''(l2) - H F_T.torque
    For a clamped-side basis the base rows report the clamp reaction rather
    than an error; the tip rows vanish for any natural-end family.
    """
    F_B = np.asarray(F_B, dtype=float).reshape(6)
    F_T = np.asarray(F_T, dtype=float).reshape(6)
    Iv1, Iv2, H = elasticity_matrices(params)
    out = []
    for xi_end, F in ((params.l1, F_B), (params.l2, F_T)):
        d1 = defo.r_xi(xi_end, 1)
        d3 = defo.r_xi(xi_end, 3)
        out.append(Iv2 @ d3 - Iv1 @ d1 - F[:3])
    for xi_end, F in ((params.l1, F_B), (params.l2, F_T)):
        d2 = defo.r_xi(xi_end, 2)
        out.append(-Iv2 @ d2 - H @ F[3:])
    return tuple(out)
