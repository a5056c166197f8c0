import numpy as np
import pytest

from pathorbit.curves import ImplicitCurve, circle
from pathorbit.sim import DivergenceError
from pathorbit.target import J0, TargetOscillator, phase_portrait, save_portrait_csv


def naive_product_field(osc, xi):
    """(J - R) grad V with the speed-over-level skew term, for off-curve points."""
    phi = float(osc.curve.phi(xi))
    grad_v = phi * np.asarray(osc.curve.grad(xi))
    w = osc.constant_speed()
    J = np.array([[0.0, w / phi], [-w / phi, 0.0]])
    return (J - osc.constant_damping()) @ grad_v


@pytest.fixture(scope="module")
def std_circle_osc(unit_circle):
    return TargetOscillator(unit_circle, damping=np.eye(2), speed=1.0)


@pytest.fixture(scope="module")
def cassini_osc(cassini):
    return TargetOscillator(cassini, damping=np.eye(2), speed=1.0)


# ---------------------------------------------------------------------------
# pointwise maps
# ---------------------------------------------------------------------------

def test_potential_values(std_circle_osc, cassini_osc):
    assert std_circle_osc.potential((1.0, 0.0)) == pytest.approx(0.0, abs=1e-14)
    assert std_circle_osc.potential((2.0, 0.0)) == pytest.approx(4.5)
    assert cassini_osc.potential((0.0, 0.0)) == pytest.approx(0.57630848, abs=1e-9)


def test_potential_grad_values(std_circle_osc, cassini_osc):
    assert np.allclose(std_circle_osc.potential_grad((1.0, 0.0)), (0.0, 0.0), atol=1e-14)
    assert np.allclose(std_circle_osc.potential_grad((2.0, 0.0)), (12.0, 0.0))
    # gradient of the level function vanishes on the critical set
    for p in [(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0)]:
        assert np.allclose(cassini_osc.potential_grad(p), (0.0, 0.0), atol=1e-12)


def test_potential_grad_matches_finite_differences(cassini_osc):
    from conftest import fd_gradient

    rng = np.random.default_rng(3)
    for _ in range(100):
        p = rng.uniform(-1.8, 1.8, 2)
        g_fd = fd_gradient(lambda q: float(cassini_osc.potential(q)), p, h=1e-6)
        assert np.allclose(cassini_osc.potential_grad(p), g_fd, rtol=1e-5, atol=1e-6)


def test_field_values_on_unit_circle(std_circle_osc):
    assert np.allclose(std_circle_osc.field(np.array([1.0, 0.0])), (0.0, -2.0), atol=1e-14)
    assert np.allclose(std_circle_osc.field(np.array([2.0, 0.0])), (-12.0, -4.0))
    assert np.allclose(std_circle_osc.field(np.array([0.0, 0.0])), (0.0, 0.0), atol=1e-14)


def test_field_matches_product_form(std_circle_osc, cassini_osc):
    rng = np.random.default_rng(4)
    for osc, span in ((std_circle_osc, 2.0), (cassini_osc, 1.8)):
        count = 0
        while count < 1000:
            xi = rng.uniform(-span, span, 2)
            if abs(float(osc.curve.phi(xi))) < 1e-3:
                continue
            count += 1
            a = osc.field(xi)
            b = naive_product_field(osc, xi)
            assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


def test_field_batch_matches_pointwise(cassini_osc):
    rng = np.random.default_rng(5)
    pts = rng.uniform(-1.5, 1.5, (64, 2))
    batch = cassini_osc.field(pts)
    rows = np.stack([cassini_osc.field(p) for p in pts])
    assert np.array_equal(batch, rows)


def test_field_jacobian_matches_finite_differences(std_circle_osc, cassini_osc):
    from conftest import fd_jacobian

    rng = np.random.default_rng(6)
    for osc in (std_circle_osc, cassini_osc):
        for _ in range(100):
            xi = rng.uniform(-1.5, 1.5, 2)
            J_fd = fd_jacobian(lambda q: osc.field(q), xi, h=1e-6)
            assert np.allclose(osc.field_jacobian(xi), J_fd, rtol=1e-5, atol=1e-5)


def test_tangential_speed_on_curve(std_circle_osc):
    theta = np.linspace(0.0, 2 * np.pi, 50, endpoint=False)
    for th in theta:
        xi = np.array([np.cos(th), np.sin(th)])
        vel = std_circle_osc.field(xi)
        grad = std_circle_osc.curve.grad(xi)
        assert np.hypot(*vel) == pytest.approx(np.hypot(*grad), abs=1e-9)
        assert abs(vel @ grad) < 1e-9


# ---------------------------------------------------------------------------
# construction checks
# ---------------------------------------------------------------------------

def test_speed_must_not_vanish_on_curve(unit_circle):
    with pytest.raises(ValueError, match="speed"):
        TargetOscillator(unit_circle, speed=0.0)
    # a spot check cannot catch isolated zeros, but it catches a speed that
    # dies on a whole arc
    with pytest.raises(ValueError, match="speed"):
        TargetOscillator(unit_circle, speed=lambda xi, x: max(0.0, xi[0]))


def test_damping_must_be_spd(unit_circle):
    with pytest.raises(ValueError):
        TargetOscillator(unit_circle, damping=np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(ValueError):
        TargetOscillator(unit_circle, damping=np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        TargetOscillator(unit_circle, damping=np.zeros((2, 2)))


def test_state_extended_speed_defaults_to_ignoring_state(unit_circle):
    osc = TargetOscillator(unit_circle, speed=lambda xi, x: 1.0 if x is None else 2.0)
    xi = np.array([2.0, 0.0])
    assert np.allclose(osc.field(xi), TargetOscillator(unit_circle, speed=1.0).field(xi))
    assert np.allclose(osc.field(xi, x="plant"),
                       TargetOscillator(unit_circle, speed=2.0).field(xi))


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def test_descent_of_potential(std_circle_osc):
    traj = std_circle_osc.simulate((2.0, 0.0), horizon=20.0, step=0.01)
    v = 0.5 * traj.phi**2
    assert np.all(np.diff(v) <= 1e-9)
    assert traj.final_abs_phi < 1e-6


def test_on_curve_trajectory_stays(std_circle_osc):
    traj = std_circle_osc.simulate((1.0, 0.0), horizon=20.0, step=0.01)
    assert np.max(np.abs(traj.phi)) < 1e-9


def test_critical_point_is_equilibrium(cassini_osc):
    traj = cassini_osc.simulate((1.0, 0.0), horizon=5.0, step=0.01)
    assert np.array_equal(traj.xi[-1], traj.xi[0])


def test_near_critical_seed_escapes_and_converges(cassini_osc):
    traj = cassini_osc.simulate((1.0 + 1e-6, 0.0), horizon=20.0, step=0.005)
    dist = np.hypot(traj.xi[:, 0] - 1.0, traj.xi[:, 1])
    assert np.max(dist) > 0.3
    assert traj.final_abs_phi < 1e-4


@pytest.mark.parametrize("rate", [0.5, 1.0])
def test_orbital_contraction_rate(unit_circle, rate):
    # transversal contraction of |Phi| at rate lam(R) |grad Phi|^2 = 4 r
    # on the unit circle; fitted on a window clear of the discrete floor
    osc = TargetOscillator(unit_circle, damping=rate * np.eye(2), speed=1.0)
    rng = np.random.default_rng(7)
    slopes = []
    for _ in range(6):
        r0 = rng.uniform(0.55, 1.45)
        th = rng.uniform(0.0, 2 * np.pi)
        traj = osc.simulate((r0 * np.cos(th), r0 * np.sin(th)), horizon=12.0, step=0.005)
        absphi = np.abs(traj.phi)
        mask = (absphi > 1e-7) & (absphi < 0.1)
        slopes.append(np.polyfit(traj.t[mask], np.log(absphi[mask]), 1)[0])
    expected = -4.0 * rate
    for s in slopes:
        assert abs(s - expected) / abs(expected) < 0.15


def test_batch_simulation_matches_single(std_circle_osc):
    seeds = np.array([[2.0, 0.0], [0.3, 0.4], [-1.2, 0.7]])
    batch = std_circle_osc.simulate(seeds, horizon=1.0, step=0.01)
    for k in range(3):
        single = std_circle_osc.simulate(seeds[k], horizon=1.0, step=0.01)
        assert np.array_equal(batch.xi[:, k, :], single.xi)
        assert np.array_equal(batch.phi[:, k], single.phi)


def test_divergent_field_raises():
    # zero set q1 = +-1 is a pair of lines, not a Jordan curve: the drive
    # along the level lines never turns and leaves any bounded box
    def phi(p):
        return p[..., 0] ** 2 - 1.0

    def grad(p):
        p = np.asarray(p, float)
        g = np.zeros(p.shape)
        g[..., 0] = 2.0 * p[..., 0]
        return g

    def hess(p):
        p = np.asarray(p, float)
        h = np.zeros(p.shape + (2,))
        h[..., 0, 0] = 2.0
        return h

    strip = ImplicitCurve(phi, grad, hess, ((-1.5, 1.5), (-1.5, 1.5)), name="strip")
    osc = TargetOscillator.__new__(TargetOscillator)
    osc.curve = strip
    osc.damping = np.eye(2)
    osc.speed = 1.0
    with pytest.raises(DivergenceError):
        osc.simulate((1.0, 0.0), horizon=40.0, step=0.01)


def test_simulate_validates_arguments(std_circle_osc):
    with pytest.raises(ValueError):
        std_circle_osc.simulate((1.0, 0.0), horizon=1.0, step=0.0)
    with pytest.raises(ValueError):
        std_circle_osc.simulate((1.0, 0.0), horizon=-1.0)


def test_phase_portrait_structure(std_circle_osc):
    seeds = [[2.0, 0.0], [0.5, 0.5]]
    trajs = phase_portrait(std_circle_osc, seeds, horizon=1.0, step=0.01)
    assert len(trajs) == 2
    assert all(len(t) == 101 for t in trajs)
    with pytest.raises(ValueError):
        phase_portrait(std_circle_osc, np.empty((0, 2)), horizon=1.0)


def test_portrait_csv_roundtrip(std_circle_osc, tmp_path):
    trajs = phase_portrait(std_circle_osc, [[2.0, 0.0], [0.5, 0.5]], horizon=0.1)
    f = tmp_path / "portrait.csv"
    save_portrait_csv(trajs, f)
    lines = f.read_text().splitlines()
    assert lines[0] == "seed_id,t,xi1,xi2,phi"
    assert len(lines) == 1 + 2 * 11
    first = lines[1].split(",")
    assert first[0] == "0"
    assert float(first[2]) == pytest.approx(2.0)
