"""Minimal SVG line charts.

Every chart here is rendered from CSV text alone, so a figure can always be
regenerated from the data file that accompanies it.
"""
from __future__ import annotations

import csv
import io
from collections import defaultdict
from xml.sax.saxutils import escape

PALETTE = {
    "fourier_spectrum": "#d62728",
    "peres_schlag": "#1f77b4",
    "mattila": "#2ca02c",
    "kaufman": "#9467bd",
    "kaufman_general": "#8c564b",
    "bourgain_oberlin": "#e377c2",
    "ren_wang": "#ff7f0e",
    "he": "#17becf",
    "spectrum": "#d62728",
    "lower": "#555555",
    "upper": "#555555",
}
_FALLBACK = ("#7f7f7f", "#bcbd22", "#393b79", "#637939")

WIDTH, HEIGHT = 360, 280
MARGIN = 44


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


class _Panel:
    """Maps data coordinates onto one panel of the drawing."""

    def __init__(self, x0, y0, xlim, ylim):
        self.x0, self.y0 = x0, y0
        self.xlim, self.ylim = xlim, ylim

    def px(self, x):
        lo, hi = self.xlim
        return self.x0 + MARGIN + (x - lo) / ((hi - lo) or 1.0) * (WIDTH - 2 * MARGIN)

    def py(self, y):
        lo, hi = self.ylim
        return self.y0 + HEIGHT - MARGIN - (y - lo) / ((hi - lo) or 1.0) * (HEIGHT - 2 * MARGIN)

    def axes(self, title, xlabel, ylabel):
        x_lo, x_hi = self.xlim
        y_lo, y_hi = self.ylim
        out = [
            f'<rect x="{self.x0}" y="{self.y0}" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<line x1="{_fmt(self.px(x_lo))}" y1="{_fmt(self.py(y_lo))}" x2="{_fmt(self.px(x_hi))}" '
            f'y2="{_fmt(self.py(y_lo))}" stroke="black"/>',
            f'<line x1="{_fmt(self.px(x_lo))}" y1="{_fmt(self.py(y_lo))}" x2="{_fmt(self.px(x_lo))}" '
            f'y2="{_fmt(self.py(y_hi))}" stroke="black"/>',
        ]
        for i in range(5):
            tx = x_lo + (x_hi - x_lo) * i / 4
            ty = y_lo + (y_hi - y_lo) * i / 4
            out.append(f'<text x="{_fmt(self.px(tx))}" y="{_fmt(self.py(y_lo) + 14)}" font-size="9" '
                       f'text-anchor="middle">{_fmt(tx)}</text>')
            out.append(f'<text x="{_fmt(self.px(x_lo) - 4)}" y="{_fmt(self.py(ty) + 3)}" font-size="9" '
                       f'text-anchor="end">{_fmt(ty)}</text>')
        out.append(f'<text x="{_fmt(self.x0 + WIDTH / 2)}" y="{self.y0 + 16}" font-size="12" '
                   f'text-anchor="middle">{escape(title)}</text>')
        out.append(f'<text x="{_fmt(self.x0 + WIDTH / 2)}" y="{self.y0 + HEIGHT - 8}" font-size="10" '
                   f'text-anchor="middle">{escape(xlabel)}</text>')
        out.append(f'<text x="{self.x0 + 12}" y="{_fmt(self.y0 + HEIGHT / 2)}" font-size="10" '
                   f'text-anchor="middle" transform="rotate(-90 {self.x0 + 12} '
                   f'{_fmt(self.y0 + HEIGHT / 2)})">{escape(ylabel)}</text>')
        return out

    def polyline(self, xs, ys, color, dash=False):
        pts = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys))
        extra = ' stroke-dasharray="4 3"' if dash else ""
        return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{extra}/>'

    def polygon(self, xs, lower, upper, color):
        ring = list(zip(xs, upper)) + list(zip(reversed(xs), reversed(lower)))
        pts = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in ring)
        return f'<polygon points="{pts}" fill="{color}" fill-opacity="0.25" stroke="none"/>'

    def legend(self, names):
        out = []
        for i, name in enumerate(names):
            y = self.y0 + 30 + 12 * i
            x = self.x0 + MARGIN + 6
            out.append(f'<line x1="{x}" y1="{y}" x2="{x + 14}" y2="{y}" stroke="{color_of(name, i)}" '
                       f'stroke-width="2"/>')
            out.append(f'<text x="{x + 18}" y="{y + 3}" font-size="9">{escape(name)}</text>')
        return out


def color_of(name, i=0):
    return PALETTE.get(name, _FALLBACK[i % len(_FALLBACK)])


def _document(n_panels, body):
    w, h = WIDTH * n_panels, HEIGHT
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
            f'viewBox="0 0 {w} {h}">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _read(csv_text):
    return list(csv.DictReader(io.StringIO(csv_text)))


def _limits(values, pad_zero=True):
    lo, hi = min(values), max(values)
    if pad_zero:
        lo = min(lo, 0.0)
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


def curves_svg(csv_text, *, x="u", y="value", series="method", panel=None, title="",
               ylabel="value", only_valid=False) -> str:
    """Overlay one polyline per ``series`` value; one panel per distinct ``panel`` value."""
    rows = _read(csv_text)
    if only_valid:
        rows = [r for r in rows if r.get("valid", "true").lower() == "true"]
    if not rows:
        raise ValueError("no rows to plot")
    groups = defaultdict(lambda: defaultdict(list))
    for r in rows:
        groups[r[panel] if panel else ""][r[series]].append((float(r[x]), float(r[y])))
    xs = [float(r[x]) for r in rows]
    ys = [float(r[y]) for r in rows]
    xlim, ylim = _limits(xs), _limits(ys)
    body = []
    for p, key in enumerate(groups):
        pan = _Panel(p * WIDTH, 0, xlim, ylim)
        label = f"{title} {panel}={key}".strip() if panel else title
        body += pan.axes(label, x, ylabel)
        names = list(groups[key])
        for i, name in enumerate(names):
            pts = sorted(groups[key][name])
            body.append(pan.polyline([a for a, _ in pts], [b for _, b in pts], color_of(name, i)))
        body += pan.legend(names)
    return _document(len(groups), body)


def figure3_svg(csv_text) -> str:
    """Both exceptional-bound panels from ``k, u, method, value`` rows."""
    return curves_svg(csv_text, panel="k", title="exceptional set bound", ylabel="dimension bound")


def regions_svg(csv_text) -> str:
    """Shaded region the spectrum must enter, from ``theta, lower, upper, spectrum`` rows."""
    rows = _read(csv_text)
    if not rows:
        raise ValueError("no rows to plot")
    th = [float(r["theta"]) for r in rows]
    lower = [float(r["lower"]) for r in rows]
    upper = [float(r["upper"]) for r in rows]
    spectrum_line = [float(r["spectrum"]) for r in rows]
    finite = [v for v in lower + upper + spectrum_line if v == v and abs(v) != float("inf")]
    ylim = _limits(finite)
    pan = _Panel(0, 0, _limits(th), ylim)
    body = pan.axes(f"improvement over {rows[0]['baseline']}", "theta", "dimension")
    keep = [i for i in range(len(th)) if lower[i] < upper[i]]
    if keep:
        body.append(pan.polygon([th[i] for i in keep], [lower[i] for i in keep],
                                [upper[i] for i in keep], "#1f77b4"))
    body.append(pan.polyline(th, [min(max(v, ylim[0]), ylim[1]) for v in lower], color_of("lower"), dash=True))
    body.append(pan.polyline(th, spectrum_line, color_of("spectrum")))
    body += pan.legend(["spectrum", "lower"])
    return _document(1, body)
