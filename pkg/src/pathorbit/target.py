"""Guiding oscillator whose attractive limit cycle is an implicit curve.

The oscillator shapes a sombrero-style energy

    V(xi) = 1/2 Phi(xi)^2,        grad V = Phi grad Phi,

whose zero minimum set is exactly the desired curve, and flows along

    xi_dot = w J0 grad Phi - R Phi grad Phi,     J0 = [[0, 1], [-1, 0]],

the sum of a tangential drive of speed |w| |grad Phi| and a damped
descent of V.  Written this way the field is polynomial in Phi and its
derivatives, so it is defined on the curve itself (the equivalent
product form (J - R) grad V, with w/Phi inside the skew part J, cancels
the same way but divides by Phi; it exists here only for tests).

Along solutions V decreases monotonically,

    dV/dt = -(grad V)^T R grad V <= 0,

so |Phi| contracts at the pointwise exponential rate lam_min(R) |grad Phi|^2
and every trajectory approaches either the curve or the (unstable)
critical set of Phi.
"""
import numpy as np

from .sim import DivergenceError, rk4_step

__all__ = ["J0", "TargetOscillator", "TargetTrajectory", "phase_portrait",
           "save_portrait_csv", "save_portrait_svg"]

J0 = np.array([[0.0, 1.0], [-1.0, 0.0]])


class TargetOscillator:
    """Planar oscillator attracted to ``curve``'s zero level set.

    Parameters
    ----------
    curve : ImplicitCurve
    damping : 2x2 symmetric positive definite array, or callable xi -> 2x2.
        Sets the transversal contraction rate.  Default: identity.
    speed : float, or callable (xi, x) -> float.
        Tangential drive along the curve; must not vanish on the curve.
        The second argument carries the plant state when the oscillator
        is embedded in a closed loop and may be ignored.  Default: 1.
    """

    def __init__(self, curve, damping=None, speed=1.0):
        self.curve = curve
        if damping is None:
            damping = np.eye(2)
        self.damping = damping
        self.speed = speed
        self._validate()

    # -- construction checks -------------------------------------------------

    def _validate(self):
        from .curves import sample_zero_points

        if not callable(self.damping):
            self.damping = np.asarray(self.damping, float)
            if self.damping.shape != (2, 2):
                raise ValueError("damping must be a 2x2 matrix")
            if not np.allclose(self.damping, self.damping.T):
                raise ValueError("damping must be symmetric")
            if np.any(np.linalg.eigvalsh(self.damping) <= 0):
                raise ValueError("damping must be positive definite")
        samples = sample_zero_points(self.curve, n=200)
        if callable(self.damping):
            for p in samples[:: max(1, len(samples) // 20)]:
                if np.any(np.linalg.eigvalsh(np.asarray(self.damping(p))) <= 0):
                    raise ValueError(f"damping not positive definite at {p}")
        for p in samples:
            if abs(self._speed_at(p, None)) < 1e-12:
                raise ValueError(f"speed vanishes on the curve at {np.round(p, 6)}")

    def _speed_at(self, xi, x):
        if callable(self.speed):
            return self.speed(xi, x)
        return self.speed

    def constant_speed(self):
        """The speed as a float; raises if it is state dependent."""
        if callable(self.speed):
            raise ValueError("this operation requires a constant speed")
        return float(self.speed)

    def constant_damping(self):
        """The damping as a 2x2 array; raises if it is state dependent."""
        if callable(self.damping):
            raise ValueError("this operation requires a constant damping matrix")
        return self.damping

    # -- pointwise maps -------------------------------------------------------

    def potential(self, xi):
        """Sombrero energy 1/2 Phi^2; zero exactly on the curve."""
        phi = np.asarray(self.curve.phi(np.asarray(xi, float)))
        return 0.5 * phi**2

    def potential_grad(self, xi):
        """Gradient Phi grad Phi of the sombrero energy."""
        xi = np.asarray(xi, float)
        phi = np.asarray(self.curve.phi(xi))
        g = np.asarray(self.curve.grad(xi))
        return phi[..., None] * g

    def field(self, xi, x=None):
        """Oscillator velocity w J0 grad Phi - R Phi grad Phi (division-free).

        Accepts a single point (2,) or a batch (..., 2) when speed and
        damping are constant.
        """
        xi = np.asarray(xi, float)
        phi = np.asarray(self.curve.phi(xi))
        g = np.asarray(self.curve.grad(xi))
        w = self._speed_at(xi, x)
        rot = g @ J0.T
        if callable(self.damping):
            if xi.ndim == 1:
                damp = np.asarray(self.damping(xi)) @ g * phi
            else:
                damp = np.stack(
                    [np.asarray(self.damping(p)) @ gi * f for p, gi, f in zip(xi, g, phi)]
                )
        else:
            damp = (g @ self.damping.T) * phi[..., None]
        return np.asarray(w)[..., None] * rot - damp

    def field_jacobian(self, xi):
        """Jacobian of the oscillator field in xi, for constant speed and damping:

            w J0 H - R (grad Phi grad Phi^T + Phi H),   H = hess Phi.
        """
        w = self.constant_speed()
        R = self.constant_damping()
        xi = np.asarray(xi, float)
        g = np.asarray(self.curve.grad(xi))
        H = np.asarray(self.curve.hess(xi))
        return w * (J0 @ H) - R @ (np.outer(g, g) + float(self.curve.phi(xi)) * H)

    # -- integration -----------------------------------------------------------

    def simulate(self, xi0, horizon, step=0.01, x=None):
        """Fixed-step RK4 trajectory, recording |Phi| at every step.

        ``xi0`` may be one point (2,) or a batch (N, 2); batches integrate
        in lockstep through vectorized field evaluations.  Raises
        DivergenceError if any trajectory leaves ten times the curve's
        domain box.
        """
        if step <= 0:
            raise ValueError("step must be positive")
        if horizon < 0:
            raise ValueError("horizon must be nonnegative")
        xi0 = np.asarray(xi0, float)
        single = xi0.ndim == 1
        state = xi0[None, :].copy() if single else xi0.copy()
        n = int(round(horizon / step))

        (x0, x1), (y0, y1) = 10.0 * (self.curve.domain_box - self.curve.domain_box.mean(axis=1, keepdims=True)) + self.curve.domain_box.mean(axis=1, keepdims=True)

        def f(s, t):
            return self.field(s, x)

        ts = np.empty(n + 1)
        path = np.empty((n + 1,) + state.shape)
        phis = np.empty((n + 1, state.shape[0]))
        ts[0] = 0.0
        path[0] = state
        phis[0] = self.curve.phi(state)
        for i in range(n):
            state = rk4_step(f, state, i * step, step)
            bad = (
                (state[:, 0] < x0)
                | (state[:, 0] > x1)
                | (state[:, 1] < y0)
                | (state[:, 1] > y1)
                | ~np.isfinite(state).all(axis=1)
            )
            if np.any(bad):
                raise DivergenceError(
                    f"oscillator trajectory left 10x the domain box at t={ (i + 1) * step:g}"
                    f" (seed indices {np.flatnonzero(bad).tolist()})"
                )
            ts[i + 1] = (i + 1) * step
            path[i + 1] = state
            phis[i + 1] = self.curve.phi(state)
        if single:
            return TargetTrajectory(ts, path[:, 0, :], phis[:, 0])
        return TargetTrajectory(ts, path, phis)

    def __repr__(self):
        w = "callable" if callable(self.speed) else f"{self.speed:g}"
        return f"TargetOscillator({self.curve.name}, speed={w})"


class TargetTrajectory:
    """Time, oscillator states, and per-step Phi values of one simulate() call."""

    def __init__(self, t, xi, phi):
        self.t = np.asarray(t)
        self.xi = np.asarray(xi)
        self.phi = np.asarray(phi)

    @property
    def final_abs_phi(self):
        return float(np.max(np.abs(np.atleast_1d(self.phi[-1]))))

    def __len__(self):
        return len(self.t)


def phase_portrait(oscillator, seeds, horizon, step=0.01):
    """One trajectory per seed, integrated in a single vectorized batch."""
    seeds = np.asarray(seeds, float)
    if seeds.size == 0:
        raise ValueError("phase_portrait needs at least one seed")
    batch = oscillator.simulate(seeds, horizon, step=step)
    return [
        TargetTrajectory(batch.t, batch.xi[:, k, :], batch.phi[:, k])
        for k in range(seeds.shape[0])
    ]


def save_portrait_csv(trajectories, path):
    """CSV rows (seed_id, t, xi1, xi2, phi) for a list of trajectories."""
    with open(path, "w") as fh:
        fh.write("seed_id,t,xi1,xi2,phi\n")
        for k, traj in enumerate(trajectories):
            for t, xi, phi in zip(traj.t, traj.xi, traj.phi):
                fh.write(f"{k},{t:.17g},{xi[0]:.17g},{xi[1]:.17g},{phi:.17g}\n")


def save_portrait_svg(oscillator, trajectories, path, title=None):
    """Trajectories overlaid on the zero level set, with critical points marked."""
    from . import svgplot
    from .curves import find_critical_points

    try:
        crit = find_critical_points(oscillator.curve)
    except Exception:
        crit = []
    svgplot.render_portrait(
        oscillator.curve,
        trajectories,
        crit,
        path,
        title=title or f"phase portrait on {oscillator.curve.name}",
    )
