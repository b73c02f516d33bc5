"""Scenario front end: config parsing with error accumulation, chain
construction, external load schedules, and run orchestration.

Config schema (YAML, one document; unknown keys are reported as errors):

    name: pendulum                  # optional run label
    gravity: [0.0, -9.81, 0.0]      # optional; see the sign note below
    baumgarte: {alpha: 0.0, beta: 0.0}   # optional; defaults off
    integrator:                     # optional block, defaults shown
      method: rk4                   # rk4 | euler
      step: 1.0e-4
      t_end: 1.0
      stride: 1                     # record every stride-th step
    links:                          # one entry per link, base first
      - rho: 2700.0                 # density [kg/m^3]
        E: 7.0e10                   # Young's modulus [Pa]
        A: 1.0e-4                   # cross-section area [m^2]
        Iy: 1.0e-9                  # area moments [m^4]
        Iz: 1.0e-9
        l1: 0.0                     # material interval [l1, l2];
        l2: 1.0                     # 'length' may replace l2 (l1 stays 0)
        modes: 2                    # shape functions per axis (0 = rigid)
        basis: clamped-free         # or free-free-elastic
        joint:
          kind: revolute            # fixed | revolute | free
          axis: [0, 0, 1]           # child-frame axis, revolute only
        initial:                    # optional; two mutually exclusive forms
          angle: 0.5                # planar: from the hanging direction,
          angle_rate: 0.0           # base placed at the parent tip
          # -- or explicit pose --
          # rotation: [[...],[...],[...]]   (or quaternion: [w,x,y,z])
          # r: [0,0,0]  v: [0,0,0]  omega: [0,0,0]
          eta: [0, ...]             # 3*modes entries, optional
          etadot: [0, ...]
        loads:                      # optional endpoint wrench schedules
          tip:                      # and/or 'base'
            type: sinusoid          # constant | sinusoid
            force: [0, -1, 0]       # body-frame physical force
            torque: [0, 0, 0]       # body-frame physical torque
            frequency: 2.0          # Hz, sinusoid only
            phase: 0.0              # rad, sinusoid only
            window: [0.0, 0.5]      # active interval, optional

Sign note: the configured gravity vector enters the momentum balance on the
left-hand side, so bodies accelerate along -gravity; with the default
(0, -9.81, 0) a chain hangs along +y.

Axial torques (body-frame x component) on flexible links are rejected: the
deformation field carries no twist degree of freedom, so such a torque
would be silently lost.
"""

import json
import logging
import os
import time

import numpy as np
import yaml

from . import integrator, outputs, validation
from .assembly import (Chain, ChainLink, SingularSystem, assemble,
                       schur_check, solve)
from .beam import LinkParameters
from .beam import LinkState
from .joints import JointSpec
from .modes import KINDS as BASIS_KINDS
from .modes import LinkBasis, ModalField, natural_frequencies

log = logging.getLogger("flexchain")

DEFAULT_METHOD = "rk4"
DEFAULT_STEP = 1e-4
DEFAULT_T_END = 1.0
DEFAULT_STRIDE = 1
DEFAULT_MODES = 2
DEFAULT_BASIS = "clamped-free"


class ConfigError(ValueError):
    """Carries every validation error found in one parsing pass."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class WrenchSchedule:
    """Piecewise-constant or sinusoidal endpoint wrench (body frame)."""

    def __init__(self, kind, force, torque, frequency=0.0, phase=0.0,
                 window=None):
        self.kind = kind
        self.force = np.asarray(force, float).reshape(3)
        self.torque = np.asarray(torque, float).reshape(3)
        self.frequency = float(frequency)
        self.phase = float(phase)
        self.window = None if window is None else (float(window[0]),
                                                   float(window[1]))

    def __call__(self, t):
        if self.window is not None and not (self.window[0] <= t <= self.window[1]):
            return np.zeros(6)
        amp = np.concatenate([self.force, self.torque])
        if self.kind == "sinusoid":
            amp = amp * np.sin(2.0 * np.pi * self.frequency * t + self.phase)
        return amp


class LinkConfig:
    def __init__(self, params, basis_kind, modes, joint, initial, loads):
        self.params = params
        self.basis_kind = basis_kind
        self.modes = modes
        self.joint = joint
        self.initial = initial
        self.loads = loads


class ScenarioConfig:
    def __init__(self, name, gravity, alpha, beta, links, method, step,
                 t_end, stride, raw):
        self.name = name
        self.gravity = gravity
        self.alpha = alpha
        self.beta = beta
        self.links = links
        self.method = method
        self.step = step
        self.t_end = t_end
        self.stride = stride
        self.raw = raw

    @property
    def n(self):
        return len(self.links)


def _vec(value, length, errors, path):
    try:
        arr = np.asarray(value, dtype=float).reshape(length)
    except (TypeError, ValueError):
        errors.append("%s: expected %d numbers" % (path, length))
        return None
    if not np.all(np.isfinite(arr)):
        errors.append("%s: non-finite entry" % path)
        return None
    return arr


def _positive(value, errors, path):
    try:
        v = float(value)
    except (TypeError, ValueError):
        errors.append("%s: expected a number" % path)
        return None
    if not np.isfinite(v) or v <= 0.0:
        errors.append("%s: must be positive and finite" % path)
        return None
    return v


def _check_keys(mapping, allowed, errors, path):
    for key in mapping:
        if key not in allowed:
            errors.append("%s: unknown key %r" % (path, key))


def _parse_schedule(raw, errors, path, flexible):
    if not isinstance(raw, dict):
        errors.append("%s: expected a mapping" % path)
        return None
    _check_keys(raw, {"type", "force", "torque", "frequency", "phase",
                      "window"}, errors, path)
    kind = raw.get("type", "constant")
    if kind not in ("constant", "sinusoid"):
        errors.append("%s.type: expected constant or sinusoid" % path)
        return None
    force = _vec(raw.get("force", [0, 0, 0]), 3, errors, path + ".force")
    torque = _vec(raw.get("torque", [0, 0, 0]), 3, errors, path + ".torque")
    if force is None or torque is None:
        return None
    if flexible and torque[0] != 0.0:
        errors.append("%s.torque: axial torque on a flexible link is not "
                      "supported (no twist deformation channel)" % path)
        return None
    freq = raw.get("frequency", 0.0)
    phase = raw.get("phase", 0.0)
    window = raw.get("window")
    try:
        freq = float(freq)
        phase = float(phase)
    except (TypeError, ValueError):
        errors.append("%s: frequency/phase must be numbers" % path)
        return None
    if kind == "sinusoid" and (not np.isfinite(freq) or freq < 0.0):
        errors.append("%s.frequency: must be nonnegative and finite" % path)
        return None
    if window is not None:
        w = _vec(window, 2, errors, path + ".window")
        if w is None:
            return None
        if not w[0] < w[1]:
            errors.append("%s.window: start must precede end" % path)
            return None
        window = (w[0], w[1])
    return WrenchSchedule(kind, force, torque, freq, phase, window)


def _parse_initial(raw, modes, errors, path):
    init = {"eta": np.zeros(3 * modes), "etadot": np.zeros(3 * modes)}
    if raw is None:
        init["angle"] = 0.0
        init["angle_rate"] = 0.0
        return init
    if not isinstance(raw, dict):
        errors.append("%s: expected a mapping" % path)
        return init
    allowed = {"angle", "angle_rate", "rotation", "quaternion", "r", "v",
               "omega", "eta", "etadot"}
    _check_keys(raw, allowed, errors, path)
    planar = "angle" in raw or "angle_rate" in raw
    explicit = any(k in raw for k in ("rotation", "quaternion", "r", "v",
                                      "omega"))
    if planar and explicit:
        errors.append("%s: give either angle/angle_rate or an explicit "
                      "pose, not both" % path)
    if explicit:
        if "rotation" in raw and "quaternion" in raw:
            errors.append("%s: rotation and quaternion are exclusive" % path)
        if "rotation" in raw:
            R = _vec(raw["rotation"], 9, errors, path + ".rotation")
            if R is not None:
                init["rotation"] = R.reshape(3, 3)
        elif "quaternion" in raw:
            q = _vec(raw["quaternion"], 4, errors, path + ".quaternion")
            if q is not None:
                nrm = np.linalg.norm(q)
                if nrm < 1e-12:
                    errors.append("%s.quaternion: zero norm" % path)
                else:
                    from .screws import rotation_from_quaternion
                    init["rotation"] = rotation_from_quaternion(q / nrm)
        for key in ("r", "v", "omega"):
            if key in raw:
                vec = _vec(raw[key], 3, errors, "%s.%s" % (path, key))
                if vec is not None:
                    init[key] = vec
    else:
        init["angle"] = 0.0
        init["angle_rate"] = 0.0
        for key in ("angle", "angle_rate"):
            if key in raw:
                try:
                    init[key] = float(raw[key])
                except (TypeError, ValueError):
                    errors.append("%s.%s: expected a number" % (path, key))
    for key in ("eta", "etadot"):
        if key in raw:
            vec = _vec(raw[key], 3 * modes, errors, "%s.%s" % (path, key))
            if vec is not None:
                init[key] = vec
    return init


def parse_config(text):
    """Parse and validate a scenario document.

    Raises ConfigError carrying *all* problems found, each prefixed with
    the offending field path.
    """
    errors = []
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(["document: %s" % exc])
    if not isinstance(raw, dict):
        raise ConfigError(["document: expected a mapping at top level"])

    _check_keys(raw, {"name", "gravity", "baumgarte", "integrator", "links"},
                errors, "config")
    name = str(raw.get("name", "run"))
    gravity = _vec(raw.get("gravity", [0.0, -9.81, 0.0]), 3, errors,
                   "gravity")

    alpha = beta = 0.0
    bg = raw.get("baumgarte")
    if bg is not None:
        if not isinstance(bg, dict):
            errors.append("baumgarte: expected a mapping")
        else:
            _check_keys(bg, {"alpha", "beta"}, errors, "baumgarte")
            for key in ("alpha", "beta"):
                if key in bg:
                    try:
                        val = float(bg[key])
                        if not np.isfinite(val) or val < 0.0:
                            raise ValueError
                        if key == "alpha":
                            alpha = val
                        else:
                            beta = val
                    except (TypeError, ValueError):
                        errors.append("baumgarte.%s: must be a nonnegative "
                                      "number" % key)

    method = DEFAULT_METHOD
    step = DEFAULT_STEP
    t_end = DEFAULT_T_END
    stride = DEFAULT_STRIDE
    integ = raw.get("integrator")
    if integ is not None:
        if not isinstance(integ, dict):
            errors.append("integrator: expected a mapping")
        else:
            _check_keys(integ, {"method", "step", "t_end", "stride"},
                        errors, "integrator")
            method = integ.get("method", DEFAULT_METHOD)
            if method not in ("rk4", "euler"):
                errors.append("integrator.method: expected rk4 or euler")
            if "step" in integ:
                step = _positive(integ["step"], errors, "integrator.step")
            if "t_end" in integ:
                try:
                    t_end = float(integ["t_end"])
                    if not np.isfinite(t_end) or t_end < 0.0:
                        raise ValueError
                except (TypeError, ValueError):
                    errors.append("integrator.t_end: must be >= 0")
            if "stride" in integ:
                try:
                    stride = int(integ["stride"])
                    if stride < 1:
                        raise ValueError
                except (TypeError, ValueError):
                    errors.append("integrator.stride: must be an integer >= 1")

    links_raw = raw.get("links")
    links = []
    if not isinstance(links_raw, list) or not links_raw:
        errors.append("links: need a non-empty list")
        links_raw = []
    link_keys = {"rho", "E", "A", "Iy", "Iz", "l1", "l2", "length", "modes",
                 "basis", "joint", "initial", "loads"}
    for idx, lr in enumerate(links_raw):
        path = "links[%d]" % idx
        if not isinstance(lr, dict):
            errors.append("%s: expected a mapping" % path)
            continue
        _check_keys(lr, link_keys, errors, path)
        rho = _positive(lr.get("rho"), errors, path + ".rho")
        E = _positive(lr.get("E"), errors, path + ".E")
        A = _positive(lr.get("A"), errors, path + ".A")
        Iy = _positive(lr.get("Iy"), errors, path + ".Iy")
        Iz = _positive(lr.get("Iz"), errors, path + ".Iz")
        l1 = 0.0
        if "l1" in lr:
            try:
                l1 = float(lr["l1"])
            except (TypeError, ValueError):
                errors.append("%s.l1: expected a number" % path)
        if "length" in lr and "l2" in lr:
            errors.append("%s: give either l2 or length, not both" % path)
        if "length" in lr:
            ln_val = _positive(lr.get("length"), errors, path + ".length")
            l2 = None if ln_val is None else l1 + ln_val
        else:
            try:
                l2 = float(lr.get("l2"))
            except (TypeError, ValueError):
                errors.append("%s.l2: expected a number" % path)
                l2 = None
        if l2 is not None and not l2 > l1:
            errors.append("%s.l2: must exceed l1" % path)
            l2 = None

        modes = lr.get("modes", DEFAULT_MODES)
        try:
            modes = int(modes)
            if modes < 0:
                raise ValueError
        except (TypeError, ValueError):
            errors.append("%s.modes: must be an integer >= 0" % path)
            modes = 0
        basis_kind = lr.get("basis", DEFAULT_BASIS)
        if basis_kind not in BASIS_KINDS:
            errors.append("%s.basis: expected one of %s"
                          % (path, ", ".join(BASIS_KINDS)))
            basis_kind = DEFAULT_BASIS

        joint_raw = lr.get("joint", {"kind": "fixed"})
        joint = None
        if not isinstance(joint_raw, dict):
            errors.append("%s.joint: expected a mapping" % path)
        else:
            _check_keys(joint_raw, {"kind", "axis"}, errors, path + ".joint")
            kind = joint_raw.get("kind", "fixed")
            axis = joint_raw.get("axis")
            if axis is not None:
                axis = _vec(axis, 3, errors, path + ".joint.axis")
            try:
                joint = JointSpec(kind, axis)
            except ValueError as exc:
                errors.append("%s.joint: %s" % (path, exc))

        initial = _parse_initial(lr.get("initial"), modes, errors,
                                 path + ".initial")

        loads = {"base": None, "tip": None}
        loads_raw = lr.get("loads")
        if loads_raw is not None:
            if not isinstance(loads_raw, dict):
                errors.append("%s.loads: expected a mapping" % path)
            else:
                _check_keys(loads_raw, {"base", "tip"}, errors,
                            path + ".loads")
                for end in ("base", "tip"):
                    if end in loads_raw:
                        loads[end] = _parse_schedule(
                            loads_raw[end], errors,
                            "%s.loads.%s" % (path, end), modes > 0)

        if None in (rho, E, A, Iy, Iz, l2) or joint is None:
            continue
        try:
            params = LinkParameters(rho=rho, E=E, A=A, l1=l1, l2=l2,
                                    Iy=Iy, Iz=Iz)
        except ValueError as exc:
            errors.append("%s: %s" % (path, exc))
            continue
        links.append(LinkConfig(params, basis_kind, modes, joint, initial,
                                loads))

    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(name, gravity, alpha, beta, links, method, step,
                          t_end, stride, raw)


def build(config):
    """Construct the chain, initial states/fields, and the load schedule
    function from a validated config."""
    links = []
    for lc in config.links:
        basis = LinkBasis(lc.basis_kind, lc.modes, lc.params.l1,
                          lc.params.l2)
        links.append(ChainLink(lc.params, lc.joint, basis))
    chain = Chain(links, gravity=config.gravity, alpha=config.alpha,
                  beta=config.beta)

    states = []
    defos = []
    p = np.zeros(3)       # running joint station (inertial)
    pdot = np.zeros(3)
    for i, lc in enumerate(config.links):
        basis = links[i].basis
        init = lc.initial
        defo = ModalField(basis, init["eta"], init["etadot"])
        if "angle" in init:
            th = init["angle"]
            thd = init["angle_rate"]
            R = validation.pendulum_rotation(th)
            w = np.array([0.0, 0.0, -thd])
            re1 = R.T @ p
            r = re1 - np.array([lc.params.l1, 0.0, 0.0])
            v = R.T @ pdot - np.cross(w, re1)
        else:
            R = init.get("rotation", np.eye(3))
            r = init.get("r", np.zeros(3))
            v = init.get("v", np.zeros(3))
            w = init.get("omega", np.zeros(3))
        state = LinkState(R, r, v, w)
        states.append(state)
        defos.append(defo)
        # advance the joint station to this link's tip
        re2 = r + np.array([lc.params.l2, 0.0, 0.0])
        p = R @ re2
        pdot = R @ (v + np.cross(w, re2))

    schedules = [(lc.loads["base"], lc.loads["tip"]) for lc in config.links]
    if all(b is None and t is None for b, t in schedules):
        loads_fn = None
    else:
        def loads_fn(t):
            out = []
            for b, tp in schedules:
                if b is None and tp is None:
                    out.append(None)
                    continue
                # engine boundary convention: base wrench enters with the
                # physical sign, tip wrench with the opposite sign
                F_B = b(t) if b is not None else np.zeros(6)
                F_T = -tp(t) if tp is not None else np.zeros(6)
                out.append((F_B, F_T))
            return out

    return chain, states, defos, loads_fn


def _dump_failure(out_dir, config, exc):
    payload = {
        "error": str(exc),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "config": config.raw,
    }
    if getattr(exc, "time", None) is not None:
        payload["sim_time"] = float(exc.time)
    state = getattr(exc, "state", None)
    if state is not None:
        payload["state_vector"] = np.asarray(state).tolist()
    path = os.path.join(out_dir, "failure_dump.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
    return path


def run(config, subcommand, out_dir=".", seed=0, quad_points=None):
    """Execute one subcommand; returns the process exit status."""
    os.makedirs(out_dir, exist_ok=True)
    if subcommand == "validate":
        checks = validation.property_suites(seed)
        report = {"seed": seed, "checks": checks,
                  "passed": all(c["passed"] for c in checks)}
        path = os.path.join(out_dir, "validation.json")
        with open(path, "w") as fh:
            json.dump(report, fh, indent=2)
        width = max(len(c["name"]) for c in checks)
        for c in checks:
            print("%-*s  %-4s  error %.3e  bound %.3e"
                  % (width, c["name"], "pass" if c["passed"] else "FAIL",
                     c["error"], c["bound"]))
        print("report: %s" % path)
        return 0 if report["passed"] else 1

    chain, states, defos, loads_fn = build(config)

    if subcommand == "modes":
        report = []
        for i, ln in enumerate(chain.links):
            wx, wy, wz = natural_frequencies(ln.basis, ln.params)
            entry = {"link": i + 1, "basis": ln.basis.kind,
                     "modes": ln.basis.r,
                     "beta_l": (ln.basis.bl).tolist(),
                     "omega_axial": wx.tolist(),
                     "omega_bending_y": wy.tolist(),
                     "omega_bending_z": wz.tolist()}
            report.append(entry)
            print("link %d (%s, %d modes per axis)"
                  % (i + 1, ln.basis.kind, ln.basis.r))
            for p in range(ln.basis.r):
                print("  mode %d: beta*l = %.6f  omega_axial = %.6e  "
                      "omega_bend_y = %.6e  omega_bend_z = %.6e"
                      % (p + 1, ln.basis.bl[p], wx[p], wy[p], wz[p]))
        path = os.path.join(out_dir, "modes.json")
        with open(path, "w") as fh:
            json.dump(report, fh, indent=2)
        print("report: %s" % path)
        return 0

    if subcommand == "check":
        try:
            system = assemble(chain, states, defos,
                              loads=None if loads_fn is None else loads_fn(0.0))
            x = solve(system)
        except SingularSystem as exc:
            print("singular system at the initial state: %s" % exc)
            _dump_failure(out_dir, config, exc)
            return 1
        chk = schur_check(system)
        crows = [c for c in chain.wcols if c is not None]
        if crows:
            rows = np.vstack([system["M"][c, :] for c in crows])
            crank = int(np.linalg.matrix_rank(rows))
            cexp = 6 * len(crows)
        else:
            crank, cexp = 0, 0
        report = {
            "nonsingular": not chk["singular"],
            "determinant_identity_rel_err": chk["rel_err"],
            "wrench_column_mass": chk["wrench_col_mass"],
            "cond_full": chk["cond_full"],
            "cond_rigid": chk["cond_rigid"],
            "cond_schur": chk["cond_schur"],
            "constraint_rows_rank": crank,
            "constraint_rows": cexp,
            "solve_residual_ok": True,
        }
        path = os.path.join(out_dir, "check.json")
        with open(path, "w") as fh:
            json.dump(report, fh, indent=2)
        print("system: %s"
              % ("nonsingular" if report["nonsingular"] else "SINGULAR"))
        print("det identity rel err: %.3e" % chk["rel_err"])
        print("cond(M_sys) = %.3e  cond(M_q) = %.3e  cond(S) = %.3e"
              % (chk["cond_full"], chk["cond_rigid"], chk["cond_schur"]))
        print("constraint rows rank %d of %d" % (crank, cexp))
        print("report: %s" % path)
        return 0 if report["nonsingular"] else 1

    if subcommand != "simulate":
        raise ValueError("unknown subcommand %r" % subcommand)

    log.info("simulate: n=%d t_end=%g h=%g method=%s", chain.n,
             config.t_end, config.step, config.method)
    try:
        traj = integrator.simulate(chain, states, defos, config.t_end,
                                   config.step, method=config.method,
                                   loads_fn=loads_fn,
                                   record_stride=config.stride)
    except (SingularSystem, integrator.IntegrationError) as exc:
        dump = _dump_failure(out_dir, config, exc)
        print("solver failure: %s" % exc)
        print("state dump: %s" % dump)
        return 1
    csv_path = os.path.join(out_dir, "trajectory.csv")
    outputs.write_trajectory_csv(csv_path, chain, traj)
    summary_path = os.path.join(out_dir, "summary.json")
    outputs.write_summary_json(summary_path, config.raw, chain, traj)
    figures = outputs.write_figures(out_dir, chain, traj)
    print("trajectory: %s (%d rows)" % (csv_path, traj["t"].size))
    print("summary: %s" % summary_path)
    for fig in figures:
        print("figure: %s" % fig)
    return 0
