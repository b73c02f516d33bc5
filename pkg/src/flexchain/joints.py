"""Holonomic joint layer: endpoint screws/twists, projection matrices, and
constraint rows at velocity and acceleration level.

The enforced constraint equates, on both sides of a joint, the inertial
twist of the floating-frame station the joint is mounted on (the rigid
channel's endpoint, at material coordinate l2 of the parent and l1 of the
child):

    jt(link, end) = [ R (v + w x r_e) ; R w ],   r_e = r + [xi_e, 0, 0]
    C = P (jt_child - jt_parent) = 0

with P = blockdiag(I3, I3 - A A^T) the revolute projector (A the joint axis
in inertial coordinates; P = I6 for a fixed joint).  Fixed joints weld the
frames rigidly; revolute joints pin the station while freeing the axis
rotation.

The joint deliberately rides the floating frame, not the deformed material
point: the interaction wrench appears in the rigid momentum balances only,
never in the modal equations, and that structure is energy-consistent only
when the deformation field is absent from the constraint as well.  (A
deformed-point constraint with no dual wrench term in the modal equations
pumps energy through the interface at the rate the wrench works against the
parent-tip modal velocity; two flexible links coupled that way blow up
within milliseconds.)  Deformation still crosses the joint physically,
through the coupling blocks of the momentum balance.

Because P annihilates the axis direction, the six constraint rows alone are
rank 5 for a revolute joint while its interaction wrench keeps six unknowns;
the system is closed by the ideal-joint condition that the wrench transmits
no couple about the axis (referenced at the joint station), which is exactly
the zero-work statement dual to the enforced constraint.  The closure row
replaces the projected-out angular direction, keeping the block square.

Joint wrenches are stored in the parent link's frame with torques referenced
at the inertial origin; transport to the child frame is then the pure
rotation blockdiag(R_c^T R_p, R_c^T R_p).
"""

import numpy as np

from .screws import skew, rotation_log


def _cross3(a, b):
    """Cross product of two 3-vectors (np.cross is slow on scalars)."""
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])

KINDS = ("fixed", "revolute", "free")


class JointSpec:
    """Joint between a link and its parent (the ground for the base joint).

    kind: 'fixed' (weld), 'revolute' (one rotational axis, given in the
    child link's body frame, time-invariant there), or 'free' (no joint:
    the link floats; no wrench unknowns, no constraint rows).
    """

    def __init__(self, kind, axis=None):
        if kind not in KINDS:
            raise ValueError("unknown joint kind %r" % kind)
        self.kind = kind
        if kind == "revolute":
            if axis is None:
                raise ValueError("revolute joint needs an axis")
            axis = np.asarray(axis, dtype=float).reshape(3)
            n = np.linalg.norm(axis)
            if n == 0.0:
                raise ValueError("zero joint axis")
            self.axis = axis / n
        else:
            if axis is not None and kind != "revolute":
                raise ValueError("%s joint takes no axis" % kind)
            self.axis = None

    @property
    def m(self):
        """Number of allowed rotational directions."""
        return 1 if self.kind == "revolute" else 0


def _end_station(params, end):
    if end == "base":
        return params.l1
    if end == "tip":
        return params.l2
    raise ValueError("end must be 'base' or 'tip'")


def endpoint_screw(params, state, defo, end):
    """Body-frame endpoint screw: [r_i + r_b(end) + r_xi(end); log(R)]."""
    xi = _end_station(params, end)
    rb = np.array([xi, 0.0, 0.0])
    return np.concatenate([state.r + rb + defo.r_xi(xi),
                           rotation_log(state.R)])


def endpoint_twist(params, state, defo, end):
    """Body-frame endpoint twist [v + v_xi(end); w] (r_b contributes nothing)."""
    xi = _end_station(params, end)
    return np.concatenate([state.v + defo.v_xi(xi), state.w])


def station_twist_inertial(params, state, end):
    """Inertial twist of the joint station: [p_dot(end); R w]."""
    xi = _end_station(params, end)
    re = state.r.copy()
    re[0] += xi
    lin = state.R @ (state.v + _cross3(state.w, re))
    return np.concatenate([lin, state.R @ state.w])


def endpoint_blocks(params, state, end):
    """Coefficient blocks of d/dt of the joint-station twist.

    The joint station is the rigid channel's endpoint r_e = r + [xi_e,0,0]
    (see the module docstring for why the deformation field stays out of
    the joint constraint).  With jt = [R (v + w x r_e); R w]:

      d/dt jt = Blk @ zdot + bias
      Blk  = [[R, -R skew(r_e)], [0, R]]
      bias = [R (2 w x v + w x (w x r_e)); 0]

    Returns (Blk, bias, jt, p_inertial).
    """
    xi = _end_station(params, end)
    R = state.R
    re = state.r.copy()
    re[0] += xi
    w = state.w
    blk = np.zeros((6, 6))
    blk[:3, :3] = R
    blk[:3, 3:] = -R @ skew(re)
    blk[3:, 3:] = R
    bias = np.zeros(6)
    bias[:3] = R @ (2.0 * _cross3(w, state.v)
                    + _cross3(w, _cross3(w, re)))
    jt = np.concatenate([R @ (state.v + _cross3(w, re)), R @ w])
    return blk, bias, jt, R @ re


def projection(joint, R_child, w_child=None):
    """Projector P onto the constrained directions and its rate Q = dP/dt.

    P = [[I,0],[0, I - A A^T]] with A = R_child @ axis (inertial coords);
    Q = [[0,0],[0, -(Adot A^T + A Adot^T)]] with Adot = R skew(w) axis.
    Fixed joints: P = I, Q = 0.
    """
    P = np.eye(6)
    Q = np.zeros((6, 6))
    if joint.kind == "revolute":
        A = R_child @ joint.axis
        P[3:, 3:] -= np.outer(A, A)
        if w_child is not None:
            Adot = R_child @ _cross3(w_child, joint.axis)
            Q[3:, 3:] = -(np.outer(Adot, A) + np.outer(A, Adot))
    return P, Q


def velocity_constraint_residual(joint, child, parent=None):
    """P (jt_child - jt_parent); parent=None means the (stationary) ground.

    child/parent are (params, state) pairs; the child's base station meets
    the parent's tip station.
    """
    cp, cs = child[0], child[1]
    d = station_twist_inertial(cp, cs, "base")
    if parent is not None:
        d = d - station_twist_inertial(parent[0], parent[1], "tip")
    P, _ = projection(joint, cs.R)
    return P @ d


def position_gap(joint, child, parent=None, anchor=None):
    """Translational constraint gap: inertial child base station minus the
    parent tip station (or minus the stored anchor for the base joint)."""
    cp, cs = child[0], child[1]
    re = cs.r + np.array([cp.l1, 0.0, 0.0])
    p_child = cs.R @ re
    if parent is not None:
        pp, ps = parent[0], parent[1]
        re_p = ps.r + np.array([pp.l2, 0.0, 0.0])
        p_ref = ps.R @ re_p
    else:
        p_ref = np.zeros(3) if anchor is None else np.asarray(anchor, float)
    return p_child - p_ref


def constraint_rows(joint, child, parent=None, anchor=None,
                    alpha=0.0, beta=0.0):
    """Acceleration-level row blocks of one joint.

    child/parent are (params, state) pairs.  Returns a dict with:
      'child'    6x6   coefficient of the child twist rate
      'parent'   6x6   coefficient of the parent twist rate (None for ground)
      'wrench'   6x6   ideal-joint closure coefficient of this joint's wrench
                       (zero for fixed joints)
      'bias'     6     left-hand-side bias (includes velocity/position
                       feedback with gains alpha/beta)
      'c_vel'    6     monitored velocity residual P (jt_c - jt_p)
      'c_pos'    3     translational gap
    Row semantics: rows @ unknowns + bias = 0.  Modal accelerations carry
    no coefficients here by construction (the joint rides the floating
    frame; see the module docstring).
    """
    if joint.kind == "free":
        raise ValueError("free joints contribute no constraint rows")
    cp, cs = child[0], child[1]
    blk_c, bias_c, jt_c, p_c = endpoint_blocks(cp, cs, "base")
    if parent is not None:
        blk_p, bias_p, jt_p, p_p = endpoint_blocks(parent[0], parent[1],
                                                   "tip")
    else:
        blk_p = None
        bias_p = np.zeros(6)
        jt_p = np.zeros(6)
        p_p = np.zeros(3) if anchor is None else np.asarray(anchor, float)

    P, Q = projection(joint, cs.R, cs.w)
    d_jt = jt_c - jt_p
    c_vel = P @ d_jt
    c_pos = p_c - p_p
    feedback = alpha * d_jt
    feedback = feedback + beta * np.concatenate([c_pos, np.zeros(3)])
    bias = P @ (bias_c - bias_p + feedback) + Q @ d_jt

    rows = {
        "child": P @ blk_c,
        "parent": None if blk_p is None else -(P @ blk_p),
        "bias": bias,
        "c_vel": c_vel,
        "c_pos": c_pos,
        "wrench": np.zeros((6, 6)),
    }
    if joint.kind == "revolute":
        A = cs.R @ joint.axis
        R_p = np.eye(3) if parent is None else parent[1].R
        AAt = np.outer(A, A)
        # couple about the joint point carried by this joint's wrench
        # (wrench stored in the parent frame, torque referenced at the
        # inertial origin): tau_J = R_p tau - skew(p_J) R_p f
        closure = np.zeros((6, 6))
        closure[3:, :3] = -AAt @ skew(p_c) @ R_p
        closure[3:, 3:] = AAt @ R_p
        rows["wrench"] = closure
    return rows
