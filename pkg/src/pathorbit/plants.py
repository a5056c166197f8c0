"""Port-Hamiltonian mechanical plants: a 3-DOF linear benchmark and a surface vessel.

Both plants have state x = (q, p) with configuration q in R^3 and
momenta p in R^3, dynamics

    q_dot =  A(q) dH/dp
    p_dot = -A(q)^T dH/dq - R(x) dH/dp + G u,      H = 1/2 p^T M^-1 p + U(q),

and a two-dimensional regulated output q_y = h(q) plus one internal
coordinate q_N completing a change of coordinates T = (h, N).

Linear benchmark: A = I, constant M and R, h(q) = C q, q_N the
annihilator coordinate.  Momenta live in the inertial frame.

Vessel: A(q) is the yaw rotation, so p and v = M^-1 p live in the body
frame (surge, sway, yaw); R(x) collects the Coriolis-centripetal matrix
and linear hydrodynamic damping (see Fossen, Handbook of Marine Craft
Hydrodynamics and Motion Control, for the standard 3-DOF model).  The
output is a hand point a lever ``ell`` ahead on the centerline, which
restores vector relative degree (2, 2) despite sway being unactuated.
An optional constant ocean current enters the kinematics only:
q_dot = A v + (V_c, 0).

Inputs are normalized so that M^-1 G u = (u1, 0, u2); physical thrust
allocation is out of scope.
"""
from dataclasses import dataclass
from math import atan2, cos, hypot, isfinite, sin

import numpy as np

__all__ = ["PlantState", "LtiPlant", "VesselPlant", "GainReport"]


@dataclass
class PlantState:
    """Configuration and momenta of a 3-DOF plant."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, float)
        self.p = np.asarray(self.p, float)
        if self.q.shape != (3,) or self.p.shape != (3,):
            raise ValueError("q and p must each have three components")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))):
            raise ValueError("plant state entries must be finite")

    def flat_state(self):
        return np.concatenate([self.q, self.p])


def _check_finite(x, u):
    # a sum of floats is finite iff every term is (inf - inf gives nan)
    if not isfinite(float(np.sum(x)) + float(u[0]) + float(u[1])):
        raise ValueError("non-finite state or input")


class LtiPlant:
    """Linear underactuated benchmark: three masses, two inputs.

    Defaults: M = I, R = diag(0, 0, r3), G = [[1,0],[0,1],[1,0]],
    C = [[1,0,0],[0,1,0]], zero potential.  The input-output coupling
    C M^-1 G must have rank 2 and C rank 2.
    """

    wrap_heading = False

    def __init__(self, M=None, R=None, G=None, C=None, r3=1.0):
        self.M = np.eye(3) if M is None else np.asarray(M, float)
        self.R = np.diag([0.0, 0.0, float(r3)]) if R is None else np.asarray(R, float)
        self.G = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]) if G is None else np.asarray(G, float)
        self.C = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]) if C is None else np.asarray(C, float)

        if np.any(np.linalg.eigvalsh(0.5 * (self.M + self.M.T)) <= 0):
            raise ValueError("inertia matrix must be positive definite")
        if np.any(np.linalg.eigvalsh(0.5 * (self.R + self.R.T)) < -1e-12):
            raise ValueError("damping matrix must be positive semidefinite")
        if np.linalg.matrix_rank(self.C) != 2:
            raise ValueError("output matrix C must have rank 2")
        self.Minv = np.linalg.inv(self.M)
        self.CMG = self.C @ self.Minv @ self.G
        if np.linalg.matrix_rank(self.CMG) != 2:
            raise ValueError("C M^-1 G must have rank 2 (input-output coupling)")

        # annihilator row: unit vector spanning the null space of C
        _, _, vt = np.linalg.svd(self.C)
        cperp = vt[-1]
        k = int(np.argmax(np.abs(cperp)))
        self.Cperp = cperp if cperp[k] > 0 else -cperp
        self.T = np.vstack([self.C, self.Cperp])
        self.Tinv = np.linalg.inv(self.T)

    def rhs(self, x, u, t=0.0):
        _check_finite(x, u)
        p = x[3:]
        v = self.Minv @ p
        return np.concatenate([v, -self.R @ v + self.G @ u])

    def energy(self, x):
        p = x[3:]
        return 0.5 * float(p @ self.Minv @ p)

    def output(self, q):
        return self.C @ q, float(self.Cperp @ q)

    def output_velocity(self, x):
        return self.C @ (self.Minv @ x[3:])

    def output_velocity_from_momenta(self, x):
        return self.C @ (self.Minv @ x[3:])

    def internal_velocity(self, x):
        return float(self.Cperp @ (self.Minv @ x[3:]))

    # maps used by the manifold verifiers -----------------------------------

    def configuration_from_outputs(self, q_y, q_n):
        return self.Tinv @ np.array([q_y[0], q_y[1], q_n])

    def coordinate_jacobian(self, q):
        return self.T

    def rotation(self, q):
        return np.eye(3)

    def __repr__(self):
        return "LtiPlant()"


@dataclass
class GainReport:
    """Internal-dynamics gain sample from the vessel's yaw subsystem.

    margin is the printed damping coefficient using |q_y_dot|^(1/2);
    margin_linear uses |q_y_dot| instead (the dimensionally consistent
    variant, reported side by side).  heading_defined is False at rest,
    where the course angle is undefined and reported as zero.
    """

    margin: float
    margin_linear: float
    course: float
    speed: float
    heading_defined: bool


_VESSEL_DEFAULTS = dict(
    m11=1.2e5, m22=1.8e5, m23=-1.0e4, m33=6.0e6,
    d11=2.2e4, d22=1.5e5, d23=-3.0e4, d32=-3.0e4, d33=4.2e6,
)


class VesselPlant:
    """3-DOF surface vessel with hand-point output and optional ocean current.

    Inertia and damping follow the standard sway-yaw coupled structure

        M = [[m11, 0, 0], [0, m22, m23], [0, m23, m33]]
        D = [[d11, 0, 0], [0, d22, d23], [0, d32, d33]]

    with Coriolis matrix built from the body velocity.  Construction
    enforces: M positive definite with m0 = m22 m33 - m23^2 > 0, D + D^T
    positive definite, and the hand lever

        ell > -(d33 m23 - d23 m33) / (d22 m33 - d32 m23)

    which makes the yaw subsystem's damping coefficient positive at rest.
    """

    wrap_heading = True

    def __init__(self, ell=18.0, current=(0.0, 0.0), **params):
        p = dict(_VESSEL_DEFAULTS)
        if "m32" in params:
            m32 = params.pop("m32")
            params.setdefault("m23", m32)
            if params["m23"] != m32:
                raise ValueError("inertia must be symmetric: m23 must equal m32")
        unknown = set(params) - set(_VESSEL_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown vessel parameters: {sorted(unknown)}")
        p.update(params)
        self.params = p
        m11, m22, m23, m33 = p["m11"], p["m22"], p["m23"], p["m33"]
        d11, d22, d23, d32, d33 = p["d11"], p["d22"], p["d23"], p["d32"], p["d33"]

        self.m0 = m22 * m33 - m23 * m23
        if m11 <= 0 or m22 <= 0 or self.m0 <= 0:
            raise ValueError("inertia matrix must be positive definite (m11, m22, m22*m33 - m23^2 > 0)")
        D = np.array([[d11, 0, 0], [0, d22, d23], [0, d32, d33]])
        if np.any(np.linalg.eigvalsh(D + D.T) <= 0):
            raise ValueError("damping must satisfy D + D^T > 0")
        bound = self.ell_lower_bound(p)
        if ell <= 0:
            raise ValueError("hand lever ell must be positive")
        if ell <= bound:
            raise ValueError(
                f"hand lever ell={ell:g} violates the yaw-damping bound ell > {bound:g}"
            )
        self.ell = float(ell)
        self.current = np.asarray(current, float)
        if self.current.shape != (2,):
            raise ValueError("current must be a plane vector")
        self._cur1, self._cur2 = float(self.current[0]), float(self.current[1])

        self.M = np.array([[m11, 0, 0], [0, m22, m23], [0, m23, m33]])
        self.D = D
        self.Minv = np.linalg.inv(self.M)
        # M^-1 G u = (u1, 0, u2): normalized inputs enter surge and yaw
        self.G = self.M @ np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])

        # parameter floats as attributes; dict access is too slow for the
        # integration hot path
        self.m11, self.m22, self.m23, self.m33 = m11, m22, m23, m33
        self.d11, self.d22, self.d23, self.d32, self.d33 = d11, d22, d23, d32, d33
        self._im11 = 1.0 / m11
        self._im0 = 1.0 / self.m0

        # yaw-subsystem coefficients
        self.delta1 = (m11 * m33 - m23 * m23) / self.m0
        self.delta2 = (d33 * m23 - d23 * m33) / self.m0
        self.delta3 = (m11 - m22) * m23 / self.m0
        self.delta4 = (d22 * m33 - d32 * m23) / self.m0

    @staticmethod
    def ell_lower_bound(params):
        p = params
        return -(p["d33"] * p["m23"] - p["d23"] * p["m33"]) / (
            p["d22"] * p["m33"] - p["d32"] * p["m23"]
        )

    # -- body velocity --------------------------------------------------------

    def velocity(self, x):
        p1, p2, p3 = float(x[3]), float(x[4]), float(x[5])
        v1 = p1 * self._im11
        v2 = (self.m33 * p2 - self.m23 * p3) * self._im0
        v3 = (-self.m23 * p2 + self.m22 * p3) * self._im0
        return v1, v2, v3

    def coriolis(self, v):
        p = self.params
        c13 = -p["m22"] * v[1] - p["m23"] * v[2]
        c23 = p["m11"] * v[0]
        return np.array([[0.0, 0.0, c13], [0.0, 0.0, c23], [-c13, -c23, 0.0]])

    def rotation(self, q):
        c, s = cos(q[2]), sin(q[2])
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    def grad_potential(self, q):
        """Configuration gradient of the potential energy; zero for the vessel.

        Kept as a hook so subclasses with nonzero U(q) inherit the full
        p_dot = -A^T dU/dq - ... evaluation.
        """
        return None

    def rhs(self, x, u, t=0.0):
        if isinstance(x, np.ndarray):
            q1, q2, q3, p1, p2, p3 = x.tolist()
        else:
            q1, q2, q3, p1, p2, p3 = (float(v) for v in x)
        u1, u2 = float(u[0]), float(u[1])
        if not isfinite(q1 + q2 + q3 + p1 + p2 + p3 + u1 + u2):
            raise ValueError("non-finite state or input")
        v1 = p1 * self._im11
        v2 = (self.m33 * p2 - self.m23 * p3) * self._im0
        v3 = (-self.m23 * p2 + self.m22 * p3) * self._im0
        c, s = cos(q3), sin(q3)

        qd1 = c * v1 - s * v2 + self._cur1
        qd2 = s * v1 + c * v2 + self._cur2

        c13 = -self.m22 * v2 - self.m23 * v3
        c23 = self.m11 * v1
        pd1 = -c13 * v3 - self.d11 * v1 + self.m11 * u1
        pd2 = -c23 * v3 - self.d22 * v2 - self.d23 * v3 + self.m23 * u2
        pd3 = c13 * v1 + c23 * v2 - self.d32 * v2 - self.d33 * v3 + self.m33 * u2
        gU = self.grad_potential(np.array([q1, q2, q3]))
        if gU is not None:
            aU = self.rotation((q1, q2, q3)).T @ np.asarray(gU, float)
            pd1 -= aU[0]
            pd2 -= aU[1]
            pd3 -= aU[2]
        return np.array([qd1, qd2, v3, pd1, pd2, pd3])

    def energy(self, x):
        v = np.array(self.velocity(x))
        return 0.5 * float(x[3:] @ v)

    # -- outputs ---------------------------------------------------------------

    def output(self, q):
        qy = np.array([q[0] + self.ell * cos(q[2]), q[1] + self.ell * sin(q[2])])
        return qy, float(q[2])

    def output_velocity(self, x):
        """True hand-point velocity, including the ocean current."""
        return self.output_velocity_from_momenta(x) + self.current

    def output_velocity_from_momenta(self, x):
        """Hand-point velocity as seen through the momenta, grad h^T A M^-1 p."""
        v1, v2, v3 = self.velocity(x)
        c, s = cos(x[2]), sin(x[2])
        sway = v2 + self.ell * v3
        return np.array([c * v1 - s * sway, s * v1 + c * sway])

    def internal_velocity(self, x):
        return self.velocity(x)[2]

    def internal_gain(self, x):
        """Damping coefficient of the yaw subsystem at the current state.

        A positive margin certifies the input-to-state stable regime of
        the internal (heading) dynamics.  The course angle follows the
        atan2(qydot_x, qydot_y) convention of the hand-point construction.
        """
        qyd = self.output_velocity(x)
        speed = hypot(qyd[0], qyd[1])
        if speed > 0.0:
            course = atan2(qyd[0], qyd[1])
            defined = True
        else:
            course = 0.0
            defined = False
        slope = self.delta3 - (self.delta1 - 1.0) / self.ell
        base = self.delta4 + self.delta2 / self.ell
        windup = cos(x[2] - course)
        return GainReport(
            margin=slope * np.sqrt(speed) * windup + base,
            margin_linear=slope * speed * windup + base,
            course=course,
            speed=speed,
            heading_defined=defined,
        )

    # maps used by the manifold verifiers -------------------------------------

    def configuration_from_outputs(self, q_y, q_n):
        return np.array([q_y[0] - self.ell * cos(q_n), q_y[1] - self.ell * sin(q_n), q_n])

    def coordinate_jacobian(self, q):
        c, s = cos(q[2]), sin(q[2])
        return np.array([[1.0, 0.0, -self.ell * s], [0.0, 1.0, self.ell * c], [0.0, 0.0, 1.0]])

    def __repr__(self):
        return f"VesselPlant(ell={self.ell:g}, current={tuple(self.current)})"
