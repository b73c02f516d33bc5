"""Trajectory serialization: delimited text, summary JSON, and figures.

Column order of the trajectory file (fixed):

    t;
    per link:  position of the body origin in inertial coordinates (3),
               rotation as a unit quaternion w,x,y,z with w >= 0 (4),
               body-frame velocity (3), body-frame angular velocity (3),
               modal coordinates (3r), modal rates (3r);
    per joint: interaction wrench in the parent frame, torque referenced
               to the inertial origin (6; zeros for a free base);
    per joint: velocity-constraint residual norm (1);
    energy ledger: kinetic, elastic, gravitational potential, total (4).

All floats are written as '%.17e' so repeated runs of the same config are
byte-identical; nothing time- or host-dependent goes into the data file.
"""

import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .screws import quaternion_from_rotation

FLOAT_FMT = "%.17e"


def trajectory_header(chain):
    """Column names, in the exact order of the data columns."""
    names = ["t"]
    for i, ln in enumerate(chain.links, start=1):
        names += ["p%d%s" % (i, ax) for ax in "xyz"]
        names += ["q%d%s" % (i, c) for c in "wxyz"]
        names += ["v%d%s" % (i, ax) for ax in "xyz"]
        names += ["w%d%s" % (i, ax) for ax in "xyz"]
        names += ["eta%d_%d" % (i, k + 1) for k in range(ln.nmodal)]
        names += ["etadot%d_%d" % (i, k + 1) for k in range(ln.nmodal)]
    for i in range(1, chain.n + 1):
        names += ["FJ%d_%s" % (i, c) for c in ("fx", "fy", "fz",
                                               "tx", "ty", "tz")]
    names += ["cvel%d" % i for i in range(1, chain.n + 1)]
    names += ["E_kin", "E_elastic", "E_grav", "E_total"]
    return names


def _trajectory_matrix(chain, traj):
    K = traj["t"].size
    n = chain.n
    cols = [traj["t"].reshape(K, 1)]
    for i in range(n):
        R = traj["R"][:, i]
        r = traj["r"][:, i]
        p = np.einsum("kab,kb->ka", R, r)
        q = np.empty((K, 4))
        for k in range(K):
            q[k] = quaternion_from_rotation(R[k])
        cols += [p, q, traj["v"][:, i], traj["w"][:, i],
                 traj["eta"][i], traj["etadot"][i]]
    for i in range(n):
        cols.append(traj["wrench"][:, i])
    cols.append(traj["c_vel_norm"])
    cols.append(traj["energy"])
    return np.hstack(cols)


def write_trajectory_csv(path, chain, traj):
    """Write the delimited trajectory; an empty trajectory yields a
    header-only file."""
    names = trajectory_header(chain)
    K = traj["t"].size
    if K == 0:
        data = np.zeros((0, len(names)))
    else:
        data = _trajectory_matrix(chain, traj)
        if data.shape[1] != len(names):
            raise ValueError("column mismatch: %d data vs %d names"
                             % (data.shape[1], len(names)))
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",",
               header=",".join(names), comments="")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_summary_json(path, raw_config, chain, traj):
    K = traj["t"].size
    final = []
    if K:
        for i in range(chain.n):
            R = traj["R"][-1, i]
            final.append({
                "position": (R @ traj["r"][-1, i]),
                "quaternion": quaternion_from_rotation(R),
                "v": traj["v"][-1, i],
                "omega": traj["w"][-1, i],
                "eta": traj["eta"][i][-1],
                "etadot": traj["etadot"][i][-1],
            })
    summary = {
        "config": raw_config,
        "method": traj["method"],
        "step": traj["h"],
        "steps": traj["steps"],
        "t_end": traj["t_end"],
        "wall_time": traj["wall_time"],
        "rows": int(K),
        "final_state": final,
        "max_velocity_residual": (traj["c_vel_norm"].max(axis=0)
                                  if K else np.zeros(chain.n)),
        "final_energy": (dict(zip(("kinetic", "elastic", "gravity", "total"),
                                  traj["energy"][-1]))
                         if K else None),
        "energy_drift": (float(traj["energy"][:, 3].max()
                               - traj["energy"][:, 3].min()) if K else 0.0),
    }
    with open(path, "w") as fh:
        json.dump(_jsonable(summary), fh, indent=2)
    return path


def write_figures(out_dir, chain, traj):
    """Render motion, energy and constraint-residual plots to PNG files."""
    paths = []
    t = traj["t"]
    n = chain.n

    fig, ax = plt.subplots(figsize=(7, 4))
    for i in range(n):
        p = np.einsum("kab,kb->ka", traj["R"][:, i], traj["r"][:, i])
        for j, lab in enumerate("xyz"):
            ax.plot(t, p[:, j], label="link %d %s" % (i + 1, lab))
    ax.set_xlabel("t [s]")
    ax.set_ylabel("body-origin position [m]")
    ax.legend(fontsize=8, ncol=max(1, n))
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = os.path.join(out_dir, "motion.png")
    fig.savefig(path, dpi=110)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(7, 4))
    for j, lab in enumerate(("kinetic", "elastic", "gravitational", "total")):
        ax.plot(t, traj["energy"][:, j], label=lab)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("energy [J]")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = os.path.join(out_dir, "energy.png")
    fig.savefig(path, dpi=110)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(7, 4))
    any_positive = False
    for i in range(n):
        res = traj["c_vel_norm"][:, i]
        any_positive = any_positive or np.any(res > 0)
        ax.plot(t, res, label="joint %d" % (i + 1))
    if any_positive:
        ax.set_yscale("log")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("velocity-constraint residual")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = os.path.join(out_dir, "residual.png")
    fig.savefig(path, dpi=110)
    plt.close(fig)
    paths.append(path)
    return paths
