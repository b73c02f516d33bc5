"""Chain assembly: one square linear system per evaluation of the dynamics.

Unknown vector (rigid part first, then modal accelerations):

    x = [ F_J0, zdot_1, F_J1, zdot_2, ..., zdot_n | etaddot_1, ..., etaddot_n ]

Each non-free joint contributes a 6-slot wrench block immediately before its
child link's twist-rate block; 'free' joints contribute neither wrench
unknowns nor constraint rows (the link simply floats).  Rows mirror the
columns: per link, the joint's six constraint rows (when present) followed
by the link's six momentum-balance rows; the modal rows come last.

Block content:
  constraint rows   P Blk_c zdot_c - P Blk_p zdot_p + P Mod_c etadd_c
                    - P Mod_p etadd_p + closure(F_J) = -(bias)
  momentum rows     T_base F_J(base) - F_J(tip) + M* zdot + M_Wdyn etadd
                    = F* - H*
  modal rows        Phi_w^T zblocks + Gram etadd = -(K eta / mu
                    + weighted phi^T (2 w x v_ob + w x (w x r_ob))
                    + Phi0^T R^T g)

Joint wrenches are stored in the parent frame with torques referenced at
the inertial origin, so the transport into the child frame is the pure
rotation blockdiag(R_c^T R_p, R_c^T R_p).  Modal rows carry no wrench
columns and no applied-force term: boundary wrenches act on the rigid
channel only, and the elastic boundary conditions are homogeneous in the
assumed field.  The modal/rigid coupling blocks are exact transposes of
each other (both are the same weighted integrals), which keeps the kinetic
energy consistent between the two channels.
"""

import numpy as np
import scipy.linalg
import scipy.linalg.lapack

from . import beam, joints
from .modes import ModalCache


class SingularSystem(RuntimeError):
    """The assembled system could not be solved to the required residual."""


class ChainLink:
    """One link plus the joint connecting it to its parent."""

    def __init__(self, params, joint, basis, quad_points=None):
        if abs(basis.l1 - params.l1) > 1e-12 or abs(basis.l2 - params.l2) > 1e-12:
            raise ValueError("basis interval does not match link interval")
        self.params = params
        self.joint = joint
        self.basis = basis
        self.cache = ModalCache(basis, params, quad_points)
        self.nmodal = 3 * basis.r


class Chain:
    """Serial chain of flexible links.

    gravity follows the momentum-balance sign convention used throughout:
    the configured vector enters the equations as +m R^T g on the left-hand
    side, so free bodies accelerate along -gravity and a hanging chain
    settles along +gravity.  The default (0, -9.81, 0) therefore makes +y
    the 'down' of the simulation.
    """

    def __init__(self, links, gravity=(0.0, -9.81, 0.0),
                 alpha=0.0, beta=0.0):
        if not links:
            raise ValueError("chain needs at least one link")
        self.links = list(links)
        self.n = len(self.links)
        self.gravity = np.asarray(gravity, dtype=float).reshape(3)
        self.alpha = float(alpha)
        self.beta = float(beta)

        col = 0
        self.wcols = []
        self.zcols = []
        for ln in self.links:
            if ln.joint.kind != "free":
                self.wcols.append(slice(col, col + 6))
                col += 6
            else:
                self.wcols.append(None)
            self.zcols.append(slice(col, col + 6))
            col += 6
        self.nq = col
        self.mcols = []
        for ln in self.links:
            self.mcols.append(slice(col, col + ln.nmodal))
            col += ln.nmodal
        self.nphi = col - self.nq
        self.size = col

    def base_point(self, states):
        """Inertial position of link 1's base joint station."""
        ln = self.links[0]
        re = states[0].r + np.array([ln.params.l1, 0.0, 0.0])
        return states[0].R @ re


def _cross_rows(a, b):
    """Row-wise cross product of (N,3) arrays (np.cross overhead matters
    in the per-step assembly loop)."""
    out = np.empty(np.broadcast(a, b).shape)
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def _link_terms(ln, state, defo, gravity):
    """Node-quadrature evaluation of one link's momentum-balance pieces."""
    cache = ln.cache
    mu = ln.params.mu
    w = cache.w
    phi0 = cache.phi[0]
    eta = defo.eta
    etadot = defo.etadot
    rxi = phi0 @ eta if ln.nmodal else np.zeros((cache.npts, 3))
    vxi = phi0 @ etadot if ln.nmodal else np.zeros((cache.npts, 3))
    rob = state.r + cache.rb + rxi
    if not np.all(np.isfinite(rob)):
        raise ValueError("non-finite deformation field")
    vob = state.v + vxi
    wv = state.w

    wrob = rob * w[:, None]
    S1 = mu * wrob.sum(axis=0)
    rr = wrob.T @ rob
    rr = 0.5 * (rr + rr.T)
    J = mu * (np.trace(rr) * np.eye(3) - rr)
    Mstar = np.zeros((6, 6))
    Mstar[:3, :3] = ln.params.m * np.eye(3)
    sk = np.array([[0.0, -S1[2], S1[1]],
                   [S1[2], 0.0, -S1[0]],
                   [-S1[1], S1[0], 0.0]])
    Mstar[:3, 3:] = -sk
    Mstar[3:, :3] = sk
    Mstar[3:, 3:] = J

    acc = 2.0 * _cross_rows(wv, vob) + _cross_rows(wv, _cross_rows(wv, rob))
    g_body = state.R.T @ gravity
    h = np.zeros(6)
    h[:3] = mu * (w @ acc) + ln.params.m * g_body
    h[3:] = mu * (w @ _cross_rows(rob, acc)) + joints._cross3(S1, g_body)

    MW = np.zeros((6, ln.nmodal))
    hphi = np.zeros(ln.nmodal)
    if ln.nmodal:
        wphi = cache.wphi0
        MW[:3] = mu * cache.Phi0
        MW[3] = mu * (rob[:, 1, None] * wphi[:, 2]
                      - rob[:, 2, None] * wphi[:, 1]).sum(axis=0)
        MW[4] = mu * (rob[:, 2, None] * wphi[:, 0]
                      - rob[:, 0, None] * wphi[:, 2]).sum(axis=0)
        MW[5] = mu * (rob[:, 0, None] * wphi[:, 1]
                      - rob[:, 1, None] * wphi[:, 0]).sum(axis=0)
        hphi = (cache.K @ eta) / mu \
            + (wphi * acc[:, :, None]).sum(axis=(0, 1)) \
            + cache.Phi0.T @ g_body
    return {"Mstar": Mstar, "MW": MW, "h": h, "hphi": hphi,
            "S1": S1, "J": J, "rob": rob, "vob": vob}


def assemble(chain, states, defos, loads=None, alpha=None, beta=None,
             anchor=None):
    """Build the square acceleration/wrench system at one instant.

    states, defos: per-link LinkState and deformation fields.
    loads: optional per-link (F_B, F_T) boundary wrench pairs (6-vectors,
    body frame, None entries allowed).
    anchor: inertial reference point for the base joint's translational
    position feedback; defaults to the current base point (zero gap).
    alpha, beta: velocity/position feedback gains, defaulting to the
    chain's values (both zero unless configured: feedback is opt-in).

    Returns a dict holding the full matrix, the right-hand side, the
    partition sizes, the column maps, and the monitored constraint
    residuals.
    """
    n = chain.n
    if len(states) != n or len(defos) != n:
        raise ValueError("need one state and one deformation field per link")
    alpha = chain.alpha if alpha is None else float(alpha)
    beta = chain.beta if beta is None else float(beta)
    g = chain.gravity

    M = np.zeros((chain.size, chain.size))
    rhs = np.zeros(chain.size)
    c_vel = [None] * n
    c_pos = [None] * n

    terms = [_link_terms(ln, states[i], defos[i], g)
             for i, ln in enumerate(chain.links)]

    for i, ln in enumerate(chain.links):
        zc = chain.zcols[i]
        mc = chain.mcols[i]
        dr = zc  # momentum rows share the twist-rate block's offsets

        M[dr, zc] = terms[i]["Mstar"]
        if ln.nmodal:
            M[dr, mc] = terms[i]["MW"]
        fstar = np.zeros(6)
        if loads is not None and loads[i] is not None:
            F_B, F_T = loads[i]
            fb = np.zeros(6) if F_B is None else np.asarray(F_B, float)
            ft = np.zeros(6) if F_T is None else np.asarray(F_T, float)
            fstar = beam.end_wrench_vector(ln.params, defos[i], fb, ft)
        rhs[dr] = fstar - terms[i]["h"]

        if chain.wcols[i] is not None:
            R_p = np.eye(3) if i == 0 else states[i - 1].R
            Rrel = states[i].R.T @ R_p
            T = np.zeros((6, 6))
            T[:3, :3] = Rrel
            T[3:, 3:] = Rrel
            M[dr, chain.wcols[i]] = T
        if i + 1 < n and chain.wcols[i + 1] is not None:
            M[dr, chain.wcols[i + 1]] = -np.eye(6)

        # modal rows (scaled by 1/mu)
        if ln.nmodal:
            mr = mc
            M[mr, zc] = terms[i]["MW"].T / ln.params.mu
            M[mr, mc] = ln.cache.Gram
            rhs[mr] = -terms[i]["hphi"]

        # constraint rows of this link's base joint (rigid-channel
        # stations only: the modal columns of these rows are identically
        # zero, the dual of the wrench never entering the modal rows)
        if ln.joint.kind == "free":
            continue
        child = (ln.params, states[i])
        parent = None
        if i > 0:
            parent = (chain.links[i - 1].params, states[i - 1])
        anchor_i = anchor if i == 0 else None
        rows = joints.constraint_rows(ln.joint, child, parent,
                                      anchor=anchor_i, alpha=alpha,
                                      beta=beta)
        cr = chain.wcols[i]
        M[cr, zc] = rows["child"]
        if i > 0:
            M[cr, chain.zcols[i - 1]] = rows["parent"]
        M[cr, cr] += rows["wrench"]
        rhs[cr] = -rows["bias"]
        c_vel[i] = rows["c_vel"]
        c_pos[i] = rows["c_pos"]

    if not np.all(np.isfinite(M)) or not np.all(np.isfinite(rhs)):
        raise ValueError("non-finite entries in the assembled system")
    return {"M": M, "rhs": rhs, "nq": chain.nq, "nphi": chain.nphi,
            "wcols": chain.wcols, "zcols": chain.zcols,
            "mcols": chain.mcols, "c_vel": c_vel, "c_pos": c_pos}


def solve(system, tol=1e-9, cond_limit=1e12):
    """Solve the assembled system by dense LU with partial pivoting.

    Rejects ill-conditioned systems (1-norm condition estimate above
    cond_limit) and verifies the relative residual of every accepted
    solution against tol.

    Systems containing a free-floating link are solved in the minimum-norm
    sense instead.  A line-density rod carries no inertia about its own
    centerline, and rotating the body frame about that axis while
    counter-rotating the transverse modal pair (whose y and z shape
    functions are identical) moves no material at all, so the mass matrix
    of an unanchored link has an exact structural null direction.  That
    direction is a pure coordinate redundancy -- every observable (material
    positions, velocities, energy, momentum) is unaffected by it -- and the
    truncated-SVD solution is the unique representative with zero
    acceleration along it.  The residual check still applies, so a
    genuinely inconsistent system is rejected rather than smoothed over.
    """
    M = system["M"]
    rhs = system["rhs"]
    if any(c is None for c in system.get("wcols", ())):
        x, _, _, sv = np.linalg.lstsq(M, rhs, rcond=1e-10)
        res = np.linalg.norm(M @ x - rhs)
        scale = max(1.0, np.linalg.norm(rhs))
        if not np.isfinite(res) or res > tol * scale:
            raise SingularSystem(
                "free-link solve residual %.3e exceeds %.1e (relative)"
                % (res / scale, tol))
        return x
    try:
        lu, piv = scipy.linalg.lu_factor(M)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystem(str(exc)) from exc
    anorm = np.linalg.norm(M, 1)
    rcond = scipy.linalg.lapack.dgecon(lu, anorm, norm="1")[0]
    if not np.isfinite(rcond) or rcond <= 0.0 or 1.0 / rcond > cond_limit:
        raise SingularSystem(
            "condition estimate %.3e exceeds %.1e"
            % (np.inf if rcond <= 0.0 else 1.0 / rcond, cond_limit))
    x = scipy.linalg.lu_solve((lu, piv), rhs)
    res = np.linalg.norm(M @ x - rhs)
    scale = max(1.0, np.linalg.norm(rhs))
    if not np.isfinite(res) or res > tol * scale:
        raise SingularSystem(
            "solve residual %.3e exceeds %.1e (relative); condition %.3e"
            % (res / scale, tol, 1.0 / rcond))
    return x


def extract(chain, x):
    """Split a solution vector into per-joint wrenches, twist rates and
    modal accelerations."""
    wrench = [None if c is None else x[c].copy() for c in chain.wcols]
    zdot = [x[c].copy() for c in chain.zcols]
    etadd = [x[c].copy() for c in chain.mcols]
    return {"wrench": wrench, "zdot": zdot, "etaddot": etadd}


def schur_check(system):
    """Well-posedness probes on the assembled partition.

    Forms the Schur complement that eliminates the rigid block,
        S = M_Wphi - M_Dphi M_q^{-1} M_W,
    verifies the determinant factorization det(M) = det(M_q) det(S) in
    sign/log form, reports the modal rows' wrench-column mass (a
    structural zero), and estimates the conditioning of M, M_q and S.
    """
    nq = system["nq"]
    M = system["M"]
    Mq = M[:nq, :nq]
    MW = M[:nq, nq:]
    MD = M[nq:, :nq]
    MP = M[nq:, nq:]

    sign_full, log_full = np.linalg.slogdet(M)
    sign_q, log_q = np.linalg.slogdet(Mq)
    if MP.size:
        S = MP - MD @ np.linalg.solve(Mq, MW)
        sign_s, log_s = np.linalg.slogdet(S)
        cond_s = np.linalg.cond(S)
    else:
        sign_s, log_s = 1.0, 0.0
        cond_s = 1.0
    log_parts = log_q + log_s
    rel = abs(log_full - log_parts) / max(1.0, abs(log_full))

    wmass = 0.0
    for c in system["wcols"]:
        if c is not None and MD.size and MD[:, c].size:
            wmass = max(wmass, np.abs(MD[:, c]).max())
    singular = (sign_full == 0.0 or sign_q == 0.0 or sign_s == 0.0
                or not np.isfinite(log_full))
    return {"sign_full": sign_full, "log_full": log_full,
            "sign_parts": sign_q * sign_s, "log_parts": log_parts,
            "rel_err": rel, "wrench_col_mass": wmass,
            "singular": singular,
            "cond_full": np.linalg.cond(M),
            "cond_rigid": np.linalg.cond(Mq),
            "cond_schur": cond_s}


def system_energy(chain, states, defos):
    """Kinetic, elastic and gravitational energy from the assembly's own
    quadrature (the same nodes the equations of motion use)."""
    KE = 0.0
    PE_el = 0.0
    PE_g = 0.0
    for i, ln in enumerate(chain.links):
        st = states[i]
        cache = ln.cache
        mu = ln.params.mu
        phi0 = cache.phi[0]
        eta = defos[i].eta
        etadot = defos[i].etadot
        rxi = phi0 @ eta if ln.nmodal else 0.0
        vxi = phi0 @ etadot if ln.nmodal else 0.0
        rob = st.r + cache.rb + rxi
        vpt = st.v + vxi + np.cross(st.w, rob)
        KE += 0.5 * mu * (cache.w @ np.einsum("ni,ni->n", vpt, vpt))
        if ln.nmodal:
            PE_el += 0.5 * (eta @ (cache.K @ eta))
        S1 = mu * (cache.w @ rob)
        PE_g += chain.gravity @ (st.R @ S1)
    return {"kinetic": KE, "elastic": PE_el, "gravity": PE_g,
            "total": KE + PE_el + PE_g}


def system_momentum(chain, states, defos):
    """Inertial linear momentum and angular momentum about the origin."""
    lin = np.zeros(3)
    ang = np.zeros(3)
    for i, ln in enumerate(chain.links):
        st = states[i]
        cache = ln.cache
        mu = ln.params.mu
        phi0 = cache.phi[0]
        rxi = phi0 @ defos[i].eta if ln.nmodal else 0.0
        vxi = phi0 @ defos[i].etadot if ln.nmodal else 0.0
        rob = st.r + cache.rb + rxi
        vpt = st.v + vxi + np.cross(st.w, rob)
        lin += st.R @ (mu * (cache.w @ vpt))
        ang += st.R @ (mu * (cache.w @ np.cross(rob, vpt)))
    return {"linear": lin, "angular": ang}
