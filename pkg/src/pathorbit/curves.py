"""Implicit planar closed curves and their critical-set diagnostics.

A desired path is represented as the zero level set of a smooth scalar
field Phi on the plane,

    C = { p in R^2 : Phi(p) = 0 },

together with its analytic gradient and Hessian.  The sign of Phi
separates the interior of the curve from the exterior, so |Phi| acts as
a (non-metric) distance to the path.

Points where the gradient vanishes are equilibria of any controller
built on grad Phi, so this module also locates the critical set and
checks that it consists of finitely many isolated points, all carrying
the same strict sign of Phi.  Curves failing that check (for example a
product of two concentric circles, whose critical set contains a whole
ring) are rejected as degenerate.
"""
import warnings

import numpy as np

__all__ = [
    "ImplicitCurve",
    "CriticalSetReport",
    "DegenerateCurveError",
    "AmbiguousSignError",
    "circle",
    "ellipse",
    "cassini_oval",
    "eval_phi",
    "find_critical_points",
    "check_critical_levels",
    "zero_contour_segments",
    "sample_zero_points",
]


class DegenerateCurveError(Exception):
    """The critical set of Phi is not a finite collection of isolated points."""


class AmbiguousSignError(Exception):
    """A critical value of Phi is numerically zero, so the curve is not regular."""


class ImplicitCurve:
    """A planar curve Phi(p) = 0 with analytic derivatives.

    Parameters
    ----------
    phi : callable
        Scalar field; must accept points of shape (..., 2) and return (...).
    grad : callable
        Gradient of phi, shape (..., 2).
    hess : callable
        Hessian of phi, shape (..., 2, 2).
    domain_box : ((xmin, xmax), (ymin, ymax))
        Axis-aligned bounds known to contain the curve and its critical set.
    name : str
        Display name used in plots and CSV headers.
    """

    def __init__(self, phi, grad, hess, domain_box, name="custom", jet=None,
                 curve_box=None):
        self.phi = phi
        self.grad = grad
        self.hess = hess
        self.domain_box = np.asarray(domain_box, dtype=float)
        if self.domain_box.shape != (2, 2) or np.any(
            self.domain_box[:, 1] <= self.domain_box[:, 0]
        ):
            raise ValueError("domain_box must be ((xmin, xmax), (ymin, ymax)) with min < max")
        # tight bounds of the zero set itself; the domain box is inflated
        # beyond it so the critical-set search has room
        self.curve_box = self.domain_box if curve_box is None else np.asarray(curve_box, float)
        self.name = name
        # fused (phi, grad, hess) at one point; shipped curves provide a
        # scalar fast path for controller loops
        self.jet = jet if jet is not None else self._default_jet

    def _default_jet(self, point):
        p = np.asarray(point, float)
        return (float(self.phi(p)), np.asarray(self.grad(p), float),
                np.asarray(self.hess(p), float))

    def value(self, point):
        """Evaluate Phi at one point, rejecting non-finite input."""
        p = np.asarray(point, dtype=float)
        if p.shape != (2,) or not np.all(np.isfinite(p)):
            raise ValueError(f"point must be a finite plane point, got {point!r}")
        return float(self.phi(p))

    def scale(self):
        """Characteristic length of the curve (half diagonal of the box)."""
        w = self.domain_box[:, 1] - self.domain_box[:, 0]
        return 0.5 * float(np.hypot(w[0], w[1]))

    def contains_point(self, p, margin=0.0):
        lo = self.domain_box[:, 0] - margin
        hi = self.domain_box[:, 1] + margin
        return bool(np.all(p >= lo) and np.all(p <= hi))

    def __repr__(self):
        return f"ImplicitCurve({self.name})"


def eval_phi(curve, point):
    """Value of the curve's level function at a single validated point."""
    return curve.value(point)


def _inflated_box(lo, hi, factor=1.5):
    """Box scaled about its center; the critical set sits inside the curve."""
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    c = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo) * factor
    return tuple((c[i] - half[i], c[i] + half[i]) for i in range(2))


def circle(radius=1.0, center=(0.0, 0.0)):
    """Circle of given radius: Phi = |p - c|^2 - radius^2."""
    if radius <= 0:
        raise ValueError("circle radius must be positive")
    cx, cy = float(center[0]), float(center[1])
    r2 = float(radius) ** 2

    def phi(p):
        p = np.asarray(p, float)
        return (p[..., 0] - cx) ** 2 + (p[..., 1] - cy) ** 2 - r2

    def grad(p):
        p = np.asarray(p, float)
        g = np.empty(p.shape)
        g[..., 0] = 2.0 * (p[..., 0] - cx)
        g[..., 1] = 2.0 * (p[..., 1] - cy)
        return g

    def hess(p):
        p = np.asarray(p, float)
        h = np.zeros(p.shape + (2,))
        h[..., 0, 0] = 2.0
        h[..., 1, 1] = 2.0
        return h

    def jet(p):
        dx = float(p[0]) - cx
        dy = float(p[1]) - cy
        return (dx * dx + dy * dy - r2,
                np.array([2.0 * dx, 2.0 * dy]),
                np.array([[2.0, 0.0], [0.0, 2.0]]))

    tight = ((cx - radius, cx + radius), (cy - radius, cy + radius))
    box = _inflated_box((cx - radius, cy - radius), (cx + radius, cy + radius))
    return ImplicitCurve(phi, grad, hess, box, name=f"circle(r={radius:g})", jet=jet,
                         curve_box=tight)


def ellipse(semi_x=2.0, semi_y=1.0, center=(0.0, 0.0)):
    """Axis-aligned ellipse: Phi = ((x-cx)/a)^2 + ((y-cy)/b)^2 - 1."""
    if semi_x <= 0 or semi_y <= 0:
        raise ValueError("ellipse semi-axes must be positive")
    cx, cy = float(center[0]), float(center[1])
    ia2, ib2 = 1.0 / semi_x**2, 1.0 / semi_y**2

    def phi(p):
        p = np.asarray(p, float)
        return (p[..., 0] - cx) ** 2 * ia2 + (p[..., 1] - cy) ** 2 * ib2 - 1.0

    def grad(p):
        p = np.asarray(p, float)
        g = np.empty(p.shape)
        g[..., 0] = 2.0 * ia2 * (p[..., 0] - cx)
        g[..., 1] = 2.0 * ib2 * (p[..., 1] - cy)
        return g

    def hess(p):
        p = np.asarray(p, float)
        h = np.zeros(p.shape + (2,))
        h[..., 0, 0] = 2.0 * ia2
        h[..., 1, 1] = 2.0 * ib2
        return h

    def jet(p):
        dx = float(p[0]) - cx
        dy = float(p[1]) - cy
        return (dx * dx * ia2 + dy * dy * ib2 - 1.0,
                np.array([2.0 * ia2 * dx, 2.0 * ib2 * dy]),
                np.array([[2.0 * ia2, 0.0], [0.0, 2.0 * ib2]]))

    tight = ((cx - semi_x, cx + semi_x), (cy - semi_y, cy + semi_y))
    box = _inflated_box((cx - semi_x, cy - semi_y), (cx + semi_x, cy + semi_y))
    return ImplicitCurve(phi, grad, hess, box, name=f"ellipse({semi_x:g},{semi_y:g})",
                         jet=jet, curve_box=tight)


def cassini_oval(a0=1.0, b0=1.2):
    """Quartic oval Phi = x^4 + y^4 - 2 a0^2 (x^2 - y^2) + a0^4 - b0^4.

    Requires b0 > a0 > 0, which yields a single closed curve enclosing
    three critical points of Phi: a saddle at the origin and two minima
    at (+-a0, 0).
    """
    if not (b0 > a0 > 0):
        raise ValueError("cassini oval requires b0 > a0 > 0 for a single closed curve")
    a2 = a0 * a0
    const = a0**4 - b0**4

    def phi(p):
        p = np.asarray(p, float)
        x, y = p[..., 0], p[..., 1]
        return x**4 + y**4 - 2.0 * a2 * (x * x - y * y) + const

    def grad(p):
        p = np.asarray(p, float)
        x, y = p[..., 0], p[..., 1]
        g = np.empty(p.shape)
        g[..., 0] = 4.0 * x**3 - 4.0 * a2 * x
        g[..., 1] = 4.0 * y**3 + 4.0 * a2 * y
        return g

    def hess(p):
        p = np.asarray(p, float)
        x, y = p[..., 0], p[..., 1]
        h = np.zeros(p.shape + (2,))
        h[..., 0, 0] = 12.0 * x * x - 4.0 * a2
        h[..., 1, 1] = 12.0 * y * y + 4.0 * a2
        return h

    def jet(p):
        x, y = float(p[0]), float(p[1])
        x2, y2 = x * x, y * y
        return (x2 * x2 + y2 * y2 - 2.0 * a2 * (x2 - y2) + const,
                np.array([4.0 * x * (x2 - a2), 4.0 * y * (y2 + a2)]),
                np.array([[12.0 * x2 - 4.0 * a2, 0.0], [0.0, 12.0 * y2 + 4.0 * a2]]))

    # Axis extents of the zero set: x^2 = a0^2 + b0^2 at y = 0, and the
    # largest |y| occurs at x = +-a0 with y^2 = sqrt(a0^4 + b0^4) - a0^2.
    xmax = np.sqrt(a2 + b0 * b0)
    ymax = np.sqrt(np.sqrt(a0**4 + b0**4) - a2)
    box = _inflated_box((-xmax, -ymax), (xmax, ymax))
    return ImplicitCurve(phi, grad, hess, box, name=f"cassini({a0:g},{b0:g})", jet=jet,
                         curve_box=((-xmax, xmax), (-ymax, ymax)))


# ---------------------------------------------------------------------------
# critical-set search
# ---------------------------------------------------------------------------

def _refine_newton(curve, seed, tol=1e-12, max_iter=50):
    """Damped Newton iteration on grad Phi = 0; None when it fails to lock on."""
    p = np.asarray(seed, float)
    g = np.asarray(curve.grad(p), float)
    gn = float(np.hypot(g[0], g[1]))
    for _ in range(max_iter):
        if gn < tol:
            break
        H = np.asarray(curve.hess(p), float)
        # lstsq handles rank-deficient Hessians (flat directions) gracefully
        step = np.linalg.lstsq(H, -g, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            return None
        lam = 1.0
        for _ in range(30):
            trial = p + lam * step
            gt = np.asarray(curve.grad(trial), float)
            gtn = float(np.hypot(gt[0], gt[1]))
            if gtn < gn:
                p, g, gn = trial, gt, gtn
                break
            lam *= 0.5
        else:
            return None
    return p if gn < 1e-10 else None


def _grid_values(func, xs, ys, vector_dim=None):
    """Evaluate func on a meshgrid, falling back to a loop for scalar-only callables."""
    pts = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1)
    try:
        out = np.asarray(func(pts), float)
        expect = pts.shape[:-1] if vector_dim is None else pts.shape[:-1] + (vector_dim,)
        if out.shape != expect:
            raise ValueError
        return out
    except Exception:
        flat = pts.reshape(-1, 2)
        rows = [func(p) for p in flat]
        out = np.asarray(rows, float)
        if vector_dim is None:
            return out.reshape(pts.shape[:-1])
        return out.reshape(pts.shape[:-1] + (vector_dim,))


def find_critical_points(curve, grid=101, merge_tol=1e-6):
    """Isolated zeros of grad Phi inside the curve's domain box.

    Seeds are grid nodes where |grad Phi| is a local minimum; each seed is
    refined by damped Newton to |grad| < 1e-10 and duplicates within
    `merge_tol` are merged.  If the merged representatives chain together
    along a direction (cluster wider than the merge tolerance), the zeros
    are not isolated and a DegenerateCurveError is raised.
    """
    (x0, x1), (y0, y1) = curve.domain_box
    xs = np.linspace(x0, x1, grid)
    ys = np.linspace(y0, y1, grid)
    g = _grid_values(curve.grad, xs, ys, vector_dim=2)
    gn = np.hypot(g[..., 0], g[..., 1])

    # local minima of |grad| over the 8-neighborhood, boundary included
    pad = np.pad(gn, 1, mode="constant", constant_values=np.inf)
    is_min = np.ones_like(gn, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            is_min &= gn <= pad[1 + di : 1 + di + grid, 1 + dj : 1 + dj + grid]
    seeds_idx = np.argwhere(is_min)

    spacing = max((x1 - x0) / (grid - 1), (y1 - y0) / (grid - 1))
    reps = []
    for i, j in seeds_idx:
        p = _refine_newton(curve, (xs[i], ys[j]))
        if p is None or not curve.contains_point(p, margin=spacing):
            continue
        for r in reps:
            if np.hypot(*(p - r)) < merge_tol:
                break
        else:
            reps.append(p)

    # isolation: distinct representatives closer than a few grid cells mean
    # Newton walked along a one-dimensional zero set of grad Phi
    link_tol = 5.0 * spacing
    for a in range(len(reps)):
        for b in range(a + 1, len(reps)):
            d = np.hypot(*(reps[a] - reps[b]))
            if d < link_tol:
                raise DegenerateCurveError(
                    "non-isolated critical set: zeros of grad Phi "
                    f"{np.round(reps[a], 6)} and {np.round(reps[b], 6)} lie {d:.3g} apart"
                )

    for r in reps:
        if not curve.contains_point(r, margin=-spacing):
            warnings.warn(
                f"critical point {np.round(r, 6)} sits on the domain box boundary; "
                "the box may be too small",
                stacklevel=2,
            )

    reps.sort(key=lambda p: (p[0], p[1]))
    return [np.array(r) for r in reps]


class CriticalSetReport:
    """Outcome of the critical-set sign check."""

    def __init__(self, holds, values, points, reason=None):
        self.holds = bool(holds)
        self.values = list(values)
        self.points = list(points)
        self.reason = reason

    def __repr__(self):
        status = "ok" if self.holds else f"failed ({self.reason})"
        return f"CriticalSetReport({status}, values={np.round(self.values, 6)})"


def check_critical_levels(curve, grid=101):
    """Check that all critical values of Phi share one strict sign.

    Returns a report with ``holds`` false when the critical set is
    degenerate or the values have mixed signs.  A critical value within
    1e-12 of zero means the curve passes through its own critical point
    and raises AmbiguousSignError.
    """
    try:
        points = find_critical_points(curve, grid=grid)
    except DegenerateCurveError as exc:
        return CriticalSetReport(False, [], [], reason=str(exc))
    values = [curve.value(p) for p in points]
    for p, v in zip(points, values):
        if abs(v) < 1e-12:
            raise AmbiguousSignError(
                f"critical value {v:.3e} at {np.round(p, 6)} is numerically zero"
            )
    holds = all(v > 0 for v in values) or all(v < 0 for v in values)
    reason = None if holds else "critical values have mixed signs"
    return CriticalSetReport(holds, values, points, reason=reason)


# ---------------------------------------------------------------------------
# zero-set extraction (marching squares)
# ---------------------------------------------------------------------------

def zero_contour_segments(curve, grid=201, box=None):
    """Line segments approximating Phi = 0 on a regular grid.

    Classic marching squares with linear interpolation on cell edges;
    ambiguous saddle cells are split using the cell-center value.
    Returns a list of ((x1, y1), (x2, y2)) tuples.
    """
    if box is None:
        box = curve.domain_box
    (x0, x1), (y0, y1) = box
    xs = np.linspace(x0, x1, grid)
    ys = np.linspace(y0, y1, grid)
    f = _grid_values(curve.phi, xs, ys)

    segments = []
    for i in range(grid - 1):
        for j in range(grid - 1):
            f00, f10 = f[i, j], f[i + 1, j]
            f01, f11 = f[i, j + 1], f[i + 1, j + 1]
            corners = (f00, f10, f11, f01)
            if all(v > 0 for v in corners) or all(v < 0 for v in corners):
                continue

            def lerp(pa, pb, fa, fb):
                t = fa / (fa - fb)
                return (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))

            p00 = (xs[i], ys[j])
            p10 = (xs[i + 1], ys[j])
            p01 = (xs[i], ys[j + 1])
            p11 = (xs[i + 1], ys[j + 1])
            crossings = []
            for (pa, fa), (pb, fb) in (
                ((p00, f00), (p10, f10)),
                ((p10, f10), (p11, f11)),
                ((p11, f11), (p01, f01)),
                ((p01, f01), (p00, f00)),
            ):
                if (fa > 0) != (fb > 0):
                    crossings.append(lerp(pa, pb, fa, fb))
            if len(crossings) == 2:
                segments.append((crossings[0], crossings[1]))
            elif len(crossings) == 4:
                center = 0.25 * (f00 + f10 + f11 + f01)
                if (center > 0) == (f00 > 0):
                    segments.append((crossings[0], crossings[3]))
                    segments.append((crossings[1], crossings[2]))
                else:
                    segments.append((crossings[0], crossings[1]))
                    segments.append((crossings[2], crossings[3]))
    return segments


def sample_zero_points(curve, n=200, grid=201):
    """About n points on the zero level set, from contour segment midpoints."""
    segs = zero_contour_segments(curve, grid=grid)
    if not segs:
        raise ValueError(f"no zero level set of {curve.name} found in its domain box")
    mids = np.array([[0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])] for a, b in segs])
    if len(mids) <= n:
        return mids
    idx = np.linspace(0, len(mids) - 1, n).astype(int)
    return mids[idx]
