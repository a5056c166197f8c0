"""Hand-emitted SVG figures: output-plane plots plus time-series panels.

No plotting dependency; the curve's zero level set comes from the
marching-squares extractor in curves.py and everything else is
polylines.  Axes auto-scale to the data with a 10% margin.
"""
import numpy as np

from .curves import zero_contour_segments

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2"]


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


class Axes:
    """Maps a data rectangle into a screen rectangle (y flipped)."""

    def __init__(self, parts, screen, data, label=""):
        self.parts = parts
        self.x0, self.y0, self.w, self.h = screen
        (self.dx0, self.dx1), (self.dy0, self.dy1) = data
        if self.dx1 <= self.dx0:
            self.dx1 = self.dx0 + 1.0
        if self.dy1 <= self.dy0:
            self.dy1 = self.dy0 + 1.0
        self.label = label

    def sx(self, x):
        return self.x0 + (x - self.dx0) / (self.dx1 - self.dx0) * self.w

    def sy(self, y):
        return self.y0 + self.h - (y - self.dy0) / (self.dy1 - self.dy0) * self.h

    def frame(self):
        self.parts.append(
            f'<rect x="{self.x0:.1f}" y="{self.y0:.1f}" width="{self.w:.1f}" '
            f'height="{self.h:.1f}" fill="white" stroke="#444" stroke-width="1"/>'
        )
        for t in np.linspace(self.dx0, self.dx1, 5):
            sx = self.sx(t)
            self.parts.append(
                f'<line x1="{sx:.1f}" y1="{self.y0 + self.h:.1f}" x2="{sx:.1f}" '
                f'y2="{self.y0 + self.h + 4:.1f}" stroke="#444"/>'
            )
            self.parts.append(
                f'<text x="{sx:.1f}" y="{self.y0 + self.h + 15:.1f}" font-size="10" '
                f'text-anchor="middle" fill="#333">{t:.4g}</text>'
            )
        for t in np.linspace(self.dy0, self.dy1, 5):
            sy = self.sy(t)
            self.parts.append(
                f'<line x1="{self.x0 - 4:.1f}" y1="{sy:.1f}" x2="{self.x0:.1f}" '
                f'y2="{sy:.1f}" stroke="#444"/>'
            )
            self.parts.append(
                f'<text x="{self.x0 - 6:.1f}" y="{sy + 3:.1f}" font-size="10" '
                f'text-anchor="end" fill="#333">{t:.4g}</text>'
            )
        if self.label:
            self.parts.append(
                f'<text x="{self.x0 + 4:.1f}" y="{self.y0 + 13:.1f}" font-size="11" '
                f'fill="#222">{_esc(self.label)}</text>'
            )

    def polyline(self, xs, ys, color, width=1.2, dash=None):
        pts = " ".join(f"{self.sx(x):.2f},{self.sy(y):.2f}" for x, y in zip(xs, ys))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"{extra}/>'
        )

    def segments(self, segs, color, width=1.5):
        d = " ".join(
            f"M {self.sx(a[0]):.2f} {self.sy(a[1]):.2f} L {self.sx(b[0]):.2f} {self.sy(b[1]):.2f}"
            for a, b in segs
        )
        self.parts.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def marker(self, x, y, color, r=4.0, shape="x"):
        sx, sy = self.sx(x), self.sy(y)
        if shape == "x":
            self.parts.append(
                f'<path d="M {sx - r:.1f} {sy - r:.1f} L {sx + r:.1f} {sy + r:.1f} '
                f'M {sx - r:.1f} {sy + r:.1f} L {sx + r:.1f} {sy - r:.1f}" '
                f'stroke="{color}" stroke-width="1.5"/>'
            )
        else:
            self.parts.append(f'<circle cx="{sx:.1f}" cy="{sy:.1f}" r="{r:.1f}" fill="{color}"/>')


def _data_range(arrays, margin=0.1):
    lo = min(float(np.min(a)) for a in arrays if np.size(a))
    hi = max(float(np.max(a)) for a in arrays if np.size(a))
    if hi <= lo:
        hi = lo + 1.0
    pad = margin * (hi - lo)
    return lo - pad, hi + pad


def _save(parts, path, width, height, title):
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
        f'<rect width="{width}" height="{height}" fill="#fafafa"/>'
    )
    if title:
        head += (
            f'<text x="{width / 2:.0f}" y="20" font-size="14" text-anchor="middle" '
            f'fill="#111">{_esc(title)}</text>'
        )
    with open(path, "w") as fh:
        fh.write(head + "".join(parts) + "</svg>\n")


def render_portrait(curve, trajectories, critical_points, path, title=""):
    """Oscillator trajectories over the curve, critical points marked with x."""
    parts = []
    xs_all = [t.xi[:, 0] for t in trajectories]
    ys_all = [t.xi[:, 1] for t in trajectories]
    segs = zero_contour_segments(curve)
    if segs:
        pts = np.array([p for seg in segs for p in seg])
        xs_all.append(pts[:, 0])
        ys_all.append(pts[:, 1])
    ax = Axes(parts, (60, 40, 520, 520), (_data_range(xs_all), _data_range(ys_all)))
    ax.frame()
    ax.segments(segs, "#111", width=2.0)
    for k, traj in enumerate(trajectories):
        ax.polyline(traj.xi[:, 0], traj.xi[:, 1], PALETTE[k % len(PALETTE)], width=1.0)
        ax.marker(traj.xi[0, 0], traj.xi[0, 1], PALETTE[k % len(PALETTE)], r=2.0, shape="dot")
    for p in critical_points:
        ax.marker(p[0], p[1], "#d62728", r=5.0, shape="x")
    _save(parts, path, 640, 600, title)


def _panel(parts, rect, runs, label, logabs=False):
    """One time-series panel holding a (t, series) pair per run."""
    prepared = []
    for t, series in runs:
        y = np.asarray(series, float)
        if logabs:
            y = np.log10(np.maximum(np.abs(y), 1e-16))
        prepared.append((t, y))
    t_lo = min(float(t[0]) for t, _ in prepared)
    t_hi = max(float(t[-1]) for t, _ in prepared)
    ax = Axes(parts, rect, ((t_lo, t_hi), _data_range([y for _, y in prepared])), label=label)
    ax.frame()
    for k, (t, y) in enumerate(prepared):
        ax.polyline(t, y, PALETTE[k % len(PALETTE)])


def render_closed_loop(curve, trajectories, path, title=""):
    """Output-plane view plus |Phi|, |z|, heading panels for one or more runs."""
    if not isinstance(trajectories, (list, tuple)):
        trajectories = [trajectories]
    parts = []
    xs_all = [tr.q_y[:, 0] for tr in trajectories]
    ys_all = [tr.q_y[:, 1] for tr in trajectories]
    segs = zero_contour_segments(curve)
    if segs:
        pts = np.array([p for seg in segs for p in seg])
        xs_all.append(pts[:, 0])
        ys_all.append(pts[:, 1])
    ax = Axes(parts, (60, 40, 520, 520), (_data_range(xs_all), _data_range(ys_all)),
              label="output plane")
    ax.frame()
    ax.segments(segs, "#111", width=2.0)
    for k, tr in enumerate(trajectories):
        color = PALETTE[k % len(PALETTE)]
        ax.polyline(tr.q_y[:, 0], tr.q_y[:, 1], color)
        ax.marker(tr.q_y[0, 0], tr.q_y[0, 1], color, r=3.0, shape="dot")
    _panel(parts, (660, 40, 280, 150),
           [(tr.t, tr.phi) for tr in trajectories], "log10 |Phi|", logabs=True)
    _panel(parts, (660, 230, 280, 150),
           [(tr.t, np.hypot(tr.z[:, 0], tr.z[:, 1])) for tr in trajectories],
           "log10 |z|", logabs=True)
    _panel(parts, (660, 420, 280, 150),
           [(tr.t, tr.q[:, 2]) for tr in trajectories], "heading q3")
    _save(parts, path, 980, 610, title)
