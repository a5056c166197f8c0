import numpy as np
import pytest

from pathorbit.curves import cassini_oval, circle
from pathorbit.plants import LtiPlant, VesselPlant
from pathorbit.control import LtiPathController, VesselPathController
from pathorbit.sim import SimConfig, run_closed_loop
from pathorbit.target import TargetOscillator


@pytest.fixture(scope="session")
def unit_circle():
    return circle(1.0)


@pytest.fixture(scope="session")
def cassini():
    return cassini_oval(1.0, 1.2)


@pytest.fixture(scope="session")
def big_circle():
    return circle(100.0)


@pytest.fixture(scope="session")
def lti_plant():
    return LtiPlant(r3=1.0)


@pytest.fixture(scope="session")
def vessel_plant():
    return VesselPlant(ell=18.0)


@pytest.fixture(scope="session")
def lti_target(unit_circle):
    return TargetOscillator(unit_circle, damping=0.5 * np.eye(2), speed=0.5)


@pytest.fixture(scope="session")
def vessel_target(big_circle):
    return TargetOscillator(big_circle, damping=1e-5 * np.eye(2), speed=0.04)


@pytest.fixture(scope="session")
def lti_controller(lti_target, lti_plant):
    return LtiPathController(lti_target, lti_plant, gain=2.0)


@pytest.fixture(scope="session")
def vessel_controller(vessel_target, vessel_plant):
    return VesselPathController(vessel_target, vessel_plant, gain=0.1)


@pytest.fixture(scope="session")
def lti_benchmark_run(lti_plant, lti_controller, lti_target):
    """Benchmark run: q(0) = (2, 0.5, 1), p(0) = (0, 0, 1), 30 s at 10 ms."""
    cfg = SimConfig(step=0.01, horizon=30.0, record_stride=1)
    x0 = np.array([2.0, 0.5, 1.0, 0.0, 0.0, 1.0])
    return run_closed_loop(lti_plant, lti_controller, lti_target, cfg, x0)


@pytest.fixture(scope="session")
def vessel_benchmark_run(vessel_plant, vessel_controller, vessel_target):
    """Vessel run: rest at q(0) = (120, -90, 0), 2000 s at 50 ms."""
    cfg = SimConfig(step=0.05, horizon=2000.0, record_stride=4)
    x0 = np.array([120.0, -90.0, 0.0, 0.0, 0.0, 0.0])
    return run_closed_loop(vessel_plant, vessel_controller, vessel_target, cfg, x0)


def fd_gradient(f, x, h=1e-6):
    """Central-difference gradient of a scalar function on the plane."""
    x = np.asarray(x, float)
    g = np.zeros(2)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def fd_jacobian(f, x, h=1e-6):
    """Central-difference Jacobian of a vector function on the plane."""
    x = np.asarray(x, float)
    cols = []
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)
