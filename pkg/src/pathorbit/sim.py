"""Fixed-step closed-loop integration, trajectory recording, and run metrics.

Everything here is deterministic: classical RK4 with a fixed step, the
feedback evaluated at every integrator stage, and bit-identical output
for identical inputs.  Runs that leave a configurable multiple of the
curve's length scale are truncated and flagged instead of raising, so
callers can report partial data.
"""
import json
from dataclasses import dataclass

import numpy as np

__all__ = ["DivergenceError", "SimConfig", "Trajectory", "Metrics",
           "rk4_step", "run_closed_loop", "compute_metrics", "save_trajectory_csv"]


class DivergenceError(Exception):
    """A trajectory escaped the configured simulation bounds."""


@dataclass
class SimConfig:
    """Integration settings for one run.

    step and horizon are in seconds; record_stride is the number of
    integrator steps per recorded row; divergence_bound is a multiple of
    the curve length scale beyond which the run is truncated.
    """

    step: float = 0.01
    horizon: float = 30.0
    record_stride: int = 1
    divergence_bound: float = 100.0

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.horizon != 0 and self.horizon < self.step:
            raise ValueError("horizon must be zero or at least one step")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.divergence_bound <= 0:
            raise ValueError("divergence_bound must be positive")


def rk4_step(deriv, state, t, h):
    """One classical 4th-order Runge-Kutta step of ``deriv(state, t)``."""
    if h <= 0:
        raise ValueError("step must be positive")
    k1 = deriv(state, t)
    k2 = deriv(state + 0.5 * h * k1, t + 0.5 * h)
    k3 = deriv(state + 0.5 * h * k2, t + 0.5 * h)
    k4 = deriv(state + h * k3, t + h)
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class Trajectory:
    """Recorded closed-loop run.

    Arrays are row-aligned: t (n,), q (n,3), p (n,3), q_y (n,2),
    q_y_dot (n,2), z (n,2), phi (n,), u (n,2), theta (n,2) or None,
    gain_margin (n,) or None.  ``qn_dot`` keeps the internal velocity for
    metrics and is not serialized.
    """

    CORE_COLUMNS = ["t", "q1", "q2", "q3", "p1", "p2", "p3", "qy1", "qy2",
                    "qydot1", "qydot2", "z1", "z2", "phi", "u1", "u2"]

    def __init__(self, t, q, p, q_y, q_y_dot, z, phi, u,
                 theta=None, gain_margin=None, qn_dot=None,
                 diverged=False, meta=None):
        self.t = np.asarray(t)
        self.q = np.asarray(q)
        self.p = np.asarray(p)
        self.q_y = np.asarray(q_y)
        self.q_y_dot = np.asarray(q_y_dot)
        self.z = np.asarray(z)
        self.phi = np.asarray(phi)
        self.u = np.asarray(u)
        self.theta = None if theta is None else np.asarray(theta)
        self.gain_margin = None if gain_margin is None else np.asarray(gain_margin)
        self.qn_dot = None if qn_dot is None else np.asarray(qn_dot)
        self.diverged = bool(diverged)
        self.meta = dict(meta or {})
        if len(self.t) == 0:
            raise ValueError("trajectory must contain at least one row")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def columns(self):
        cols = list(self.CORE_COLUMNS)
        if self.theta is not None:
            cols += ["theta1", "theta2"]
        if self.gain_margin is not None:
            cols += ["K"]
        return cols

    def row_matrix(self):
        parts = [self.t[:, None], self.q, self.p, self.q_y, self.q_y_dot,
                 self.z, self.phi[:, None], self.u]
        if self.theta is not None:
            parts.append(self.theta)
        if self.gain_margin is not None:
            parts.append(self.gain_margin[:, None])
        return np.hstack(parts)

    def __len__(self):
        return len(self.t)


def run_closed_loop(plant, controller, target, config, x0, theta0=None):
    """Integrate the plant under static (or integral) state feedback.

    The feedback is evaluated at every RK4 stage; the integral state, if
    the controller carries one, is integrated as part of the state
    vector.  Recording happens every ``config.record_stride`` steps, with
    the vessel heading wrapped to (-pi, pi] in the output while the
    integration itself runs on the unwrapped angle.
    """
    if hasattr(x0, "flat_state"):
        x0 = x0.flat_state()
    x0 = np.asarray(x0, float)
    if x0.shape != (6,) or not np.all(np.isfinite(x0)):
        raise ValueError("initial state must be 6 finite numbers (q, p)")
    dim_theta = getattr(controller, "dim_theta", 0)
    if dim_theta:
        theta0 = np.zeros(dim_theta) if theta0 is None else np.asarray(theta0, float)
        state = np.concatenate([x0, theta0])
    else:
        state = x0.copy()

    def deriv(s, t):
        x = s[:6]
        if dim_theta:
            u, theta_dot = controller.control(x, s[6:], t)
            return np.concatenate([plant.rhs(x, u, t), theta_dot])
        u, _ = controller.control(x, None, t)
        return plant.rhs(x, u, t)

    h = config.step
    n_steps = int(round(config.horizon / h))
    limit = config.divergence_bound * target.curve.scale()
    wrap_angle = getattr(plant, "wrap_heading", False)

    rows = {k: [] for k in ("t", "q", "p", "qy", "qyd", "z", "phi", "u", "theta", "K", "qnd")}

    def record(t, s):
        x = s[:6]
        theta = s[6:] if dim_theta else None
        u, _ = controller.control(x, theta, t)
        qy, _ = plant.output(x[:3])
        q_out = x[:3].copy()
        if wrap_angle:
            q_out[2] = _wrap_pi(q_out[2])
        rows["t"].append(t)
        rows["q"].append(q_out)
        rows["p"].append(x[3:6].copy())
        rows["qy"].append(qy)
        rows["qyd"].append(plant.output_velocity(x))
        rows["z"].append(controller.z(x, theta))
        rows["phi"].append(float(target.curve.phi(qy)))
        rows["u"].append(np.asarray(u, float))
        if dim_theta:
            rows["theta"].append(np.asarray(theta, float).copy())
        if hasattr(plant, "internal_gain"):
            rows["K"].append(plant.internal_gain(x).margin)
        rows["qnd"].append(plant.internal_velocity(x))

    record(0.0, state)
    diverged = False
    for i in range(n_steps):
        new_state = rk4_step(deriv, state, i * h, h)
        if (not np.all(np.isfinite(new_state))
                or np.hypot(new_state[0], new_state[1]) > limit):
            diverged = True
            break
        state = new_state
        if (i + 1) % config.record_stride == 0:
            record((i + 1) * h, state)

    return Trajectory(
        t=rows["t"], q=rows["q"], p=rows["p"], q_y=rows["qy"], q_y_dot=rows["qyd"],
        z=rows["z"], phi=rows["phi"], u=rows["u"],
        theta=np.array(rows["theta"]) if rows["theta"] else None,
        gain_margin=np.array(rows["K"]) if rows["K"] else None,
        qn_dot=rows["qnd"], diverged=diverged,
        meta={"step": h, "horizon": config.horizon, "stride": config.record_stride},
    )


def _wrap_pi(angle):
    w = (angle + np.pi) % (2.0 * np.pi) - np.pi
    return np.pi if w == -np.pi else w


@dataclass
class Metrics:
    """Deterministic summary of one trajectory.

    Fields that cannot be computed (no settling, not enough decay
    samples) are None rather than guessed.
    """

    final_abs_phi: float
    max_abs_state: float
    settling_time: float | None
    z_decay_rate: float | None
    min_speed_on_path: float | None
    invariance_drift: float | None
    qn_dot_bound: float | None
    diverged: bool

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def compute_metrics(traj, tol):
    """Boundedness, convergence/invariance, and forward-motion numbers.

    tol is the |Phi| threshold defining "on path" for this curve's scale.
    The z decay rate is a log-linear fit on the window where |z| lies in
    [1e-8, half its initial value]; it needs at least eight samples.
    """
    absphi = np.abs(traj.phi)
    final_abs_phi = float(absphi[-1])
    max_abs_state = float(max(np.max(np.abs(traj.q)), np.max(np.abs(traj.p))))

    settling_time = None
    above = np.flatnonzero(absphi >= tol)
    if len(above) == 0:
        settling_time = float(traj.t[0])
    elif above[-1] + 1 < len(traj.t):
        settling_time = float(traj.t[above[-1] + 1])

    zn = np.hypot(traj.z[:, 0], traj.z[:, 1])
    z_decay_rate = None
    if zn[0] > 0:
        mask = (zn > 1e-8) & (zn < 0.5 * zn[0])
        if np.count_nonzero(mask) >= 8:
            slope = np.polyfit(traj.t[mask], np.log(zn[mask]), 1)[0]
            z_decay_rate = float(-slope)

    min_speed_on_path = None
    invariance_drift = None
    on_path = np.flatnonzero(absphi < tol)
    if len(on_path) > 0:
        invariance_drift = float(np.max(absphi[on_path[0]:]))
    if settling_time is not None:
        sel = traj.t >= settling_time
        if np.any(sel):
            speed = np.hypot(traj.q_y_dot[sel, 0], traj.q_y_dot[sel, 1])
            min_speed_on_path = float(np.min(speed))

    qn_dot_bound = None
    if traj.qn_dot is not None:
        qn_dot_bound = float(np.max(np.abs(traj.qn_dot)))

    if traj.diverged:
        settling_time = None
        min_speed_on_path = None

    return Metrics(
        final_abs_phi=final_abs_phi,
        max_abs_state=max_abs_state,
        settling_time=settling_time,
        z_decay_rate=z_decay_rate,
        min_speed_on_path=min_speed_on_path,
        invariance_drift=invariance_drift,
        qn_dot_bound=qn_dot_bound,
        diverged=traj.diverged,
    )


def save_trajectory_csv(traj, path, header=None):
    """Write the trajectory with a '#'-prefixed header block echoing the config."""
    lines = []
    meta = dict(header or {})
    meta.update(traj.meta)
    for key in sorted(meta):
        lines.append(f"# {key} = {meta[key]}")
    lines.append(",".join(traj.columns()))
    mat = traj.row_matrix()
    for row in mat:
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
