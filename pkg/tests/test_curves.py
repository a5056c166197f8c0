import numpy as np
import pytest

from pathorbit.curves import (AmbiguousSignError, DegenerateCurveError, ImplicitCurve,
                              cassini_oval, check_critical_levels, circle, ellipse,
                              eval_phi, find_critical_points, sample_zero_points)
from conftest import fd_gradient, fd_jacobian


def two_circle_product():
    """Phi = (|q|^2 - 1)(|q|^2 - 4): critical set contains a whole ring."""

    def phi(p):
        s = p[..., 0] ** 2 + p[..., 1] ** 2
        return (s - 1.0) * (s - 4.0)

    def grad(p):
        p = np.asarray(p, float)
        s = p[..., 0] ** 2 + p[..., 1] ** 2
        return (2.0 * s - 5.0)[..., None] * (2.0 * p)

    def hess(p):
        p = np.asarray(p, float)
        s = p[..., 0] ** 2 + p[..., 1] ** 2
        eye = np.zeros(p.shape + (2,))
        eye[..., 0, 0] = eye[..., 1, 1] = 1.0
        outer = 8.0 * p[..., :, None] * p[..., None, :]
        return outer + (2.0 * (2.0 * s - 5.0))[..., None, None] * eye

    return ImplicitCurve(phi, grad, hess, ((-3.0, 3.0), (-3.0, 3.0)), name="two-circle")


def point_curve():
    """Phi = |q|^2: the zero set is a single point, not a regular curve."""
    c = circle(1.0)

    def phi(p):
        return c.phi(p) + 1.0

    return ImplicitCurve(phi, c.grad, c.hess, ((-2.0, 2.0), (-2.0, 2.0)), name="point")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def test_circle_levels(unit_circle):
    assert eval_phi(unit_circle, (1.0, 0.0)) == pytest.approx(0.0, abs=1e-15)
    assert eval_phi(unit_circle, (2.0, 0.0)) == pytest.approx(3.0)


def test_cassini_level_at_origin(cassini):
    # 1.2^4 = 2.0736, so Phi(0,0) = 1 - 2.0736
    assert eval_phi(cassini, (0.0, 0.0)) == pytest.approx(-1.0736, abs=1e-12)


def test_eval_phi_rejects_bad_points(unit_circle):
    with pytest.raises(ValueError):
        eval_phi(unit_circle, (np.nan, 0.0))
    with pytest.raises(ValueError):
        eval_phi(unit_circle, (np.inf, 1.0))
    with pytest.raises(ValueError):
        eval_phi(unit_circle, (1.0, 2.0, 3.0))


def test_sign_partitions_interior_exterior(cassini):
    assert eval_phi(cassini, (0.5, 0.1)) < 0       # inside the oval
    assert eval_phi(cassini, (2.0, 1.0)) > 0       # outside


@pytest.mark.parametrize("maker", [lambda: circle(1.0), lambda: circle(2.5, (1.0, -2.0)),
                                   lambda: cassini_oval(1.0, 1.2),
                                   lambda: ellipse(2.0, 1.0), two_circle_product])
def test_gradient_matches_finite_differences(maker):
    curve = maker()
    rng = np.random.default_rng(0)
    (x0, x1), (y0, y1) = curve.domain_box
    for _ in range(100):
        p = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
        g = np.asarray(curve.grad(p))
        g_fd = fd_gradient(curve.phi, p)
        assert np.allclose(g, g_fd, rtol=1e-6, atol=1e-7)


@pytest.mark.parametrize("maker", [lambda: circle(1.0), lambda: cassini_oval(1.0, 1.2),
                                   lambda: ellipse(2.0, 1.0), two_circle_product])
def test_hessian_matches_finite_differences(maker):
    curve = maker()
    rng = np.random.default_rng(1)
    (x0, x1), (y0, y1) = curve.domain_box
    for _ in range(100):
        p = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
        H = np.asarray(curve.hess(p))
        H_fd = fd_jacobian(curve.grad, p)
        assert np.allclose(H, H_fd, rtol=1e-5, atol=1e-5)


def test_jet_agrees_with_parts(cassini):
    rng = np.random.default_rng(2)
    for _ in range(20):
        p = rng.uniform(-1.5, 1.5, 2)
        phi, g, H = cassini.jet(p)
        assert phi == pytest.approx(float(cassini.phi(p)), abs=1e-14)
        assert np.allclose(g, cassini.grad(p))
        assert np.allclose(H, cassini.hess(p))


def test_circle_parametrization_is_zero_level():
    for radius, center in ((1.0, (0.0, 0.0)), (2.5, (1.0, -2.0))):
        c = circle(radius, center)
        theta = np.linspace(0.0, 2.0 * np.pi, 1000, endpoint=False)
        pts = np.stack([center[0] + radius * np.cos(theta),
                        center[1] + radius * np.sin(theta)], axis=-1)
        assert np.max(np.abs(c.phi(pts))) < 1e-12


# ---------------------------------------------------------------------------
# critical set
# ---------------------------------------------------------------------------

def test_critical_points_circle(unit_circle):
    pts = find_critical_points(unit_circle)
    assert len(pts) == 1
    assert np.allclose(pts[0], (0.0, 0.0), atol=1e-10)


def test_critical_points_cassini(cassini):
    pts = find_critical_points(cassini)
    assert len(pts) == 3
    expected = [(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]
    for found, want in zip(pts, expected):
        assert np.allclose(found, want, atol=1e-8)
    for p in pts:
        assert np.hypot(*cassini.grad(p)) < 1e-10


def test_critical_points_ellipse():
    pts = find_critical_points(ellipse(2.0, 1.0))
    assert len(pts) == 1
    assert np.allclose(pts[0], (0.0, 0.0), atol=1e-10)


def test_two_circle_product_is_degenerate():
    with pytest.raises(DegenerateCurveError):
        find_critical_points(two_circle_product())
    report = check_critical_levels(two_circle_product())
    assert not report.holds
    assert "non-isolated" in report.reason


def test_critical_levels_circle(unit_circle):
    report = check_critical_levels(unit_circle)
    assert report.holds
    assert len(report.values) == 1
    assert report.values[0] == pytest.approx(-1.0)


def test_critical_levels_cassini(cassini):
    report = check_critical_levels(cassini)
    assert report.holds
    assert np.allclose(sorted(report.values), sorted([-1.0736, -2.0736, -2.0736]), atol=1e-9)
    assert all(v < 0 for v in report.values)


def test_ambiguous_critical_value_raises():
    with pytest.raises(AmbiguousSignError):
        check_critical_levels(point_curve())


def test_boundary_critical_point_warns(unit_circle):
    shifted = ImplicitCurve(unit_circle.phi, unit_circle.grad, unit_circle.hess,
                            ((0.0, 2.0), (-1.5, 1.5)), name="clipped")
    with pytest.warns(UserWarning, match="boundary"):
        find_critical_points(shifted)


# ---------------------------------------------------------------------------
# construction and geometry helpers
# ---------------------------------------------------------------------------

def test_constructor_validation():
    with pytest.raises(ValueError):
        circle(0.0)
    with pytest.raises(ValueError):
        circle(-1.0)
    with pytest.raises(ValueError):
        cassini_oval(1.2, 1.0)     # needs b0 > a0
    with pytest.raises(ValueError):
        cassini_oval(0.0, 1.0)
    with pytest.raises(ValueError):
        ellipse(0.0, 1.0)
    with pytest.raises(ValueError):
        ImplicitCurve(lambda p: 0.0, lambda p: p, lambda p: p,
                      ((1.0, -1.0), (-1.0, 1.0)))


def test_domain_box_inflation():
    c = circle(2.0, center=(1.0, 0.0))
    assert np.allclose(c.curve_box, ((-1.0, 3.0), (-2.0, 2.0)))
    assert np.allclose(c.domain_box, ((-2.0, 4.0), (-3.0, 3.0)))


def test_zero_contour_tracks_curve(cassini):
    pts = sample_zero_points(cassini, n=200)
    assert len(pts) >= 150
    assert np.max(np.abs(cassini.phi(pts))) < 0.05
