"""Dependency-free SVG charts: line curves, grouped bars and dendrograms.

Output is a pure function of the input data, so identical inputs give
byte-identical files.
"""

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

RESPONDER = "#d62728"
NON_RESPONDER = "#2ca02c"
MIXED = "#7f7f7f"
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2")


class EmissionError(ValueError):
    pass


@dataclass
class Series:
    name: str
    x: list
    y: list


@dataclass
class LineChart:
    series: list
    title: str = ""
    x_label: str = ""
    y_label: str = ""


@dataclass
class BarChart:
    categories: list  # one group of bars per category
    groups: dict  # bar name -> one value per category
    title: str = ""
    y_label: str = ""
    y_max: float = 1.0


@dataclass
class DendrogramPlot:
    truncated: object  # clustering.TruncatedDendrogram
    labels: object = None  # 0/1 per original row, for leaf colouring
    title: str = ""
    y_label: str = "distance"


@dataclass
class Style:
    width: int = 640
    height: int = 400
    margin_left: int = 70
    margin_right: int = 20
    margin_top: int = 40
    margin_bottom: int = 60
    font_size: int = 12
    colors: tuple = field(default=PALETTE)


def _f(v):
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, style):
        self.s = style
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.width}" height="{style.height}" '
            f'viewBox="0 0 {style.width} {style.height}" font-family="sans-serif" font-size="{style.font_size}">',
            f'<rect x="0" y="0" width="{style.width}" height="{style.height}" fill="white"/>',
        ]

    @property
    def plot_box(self):
        s = self.s
        return s.margin_left, s.margin_top, s.width - s.margin_right, s.height - s.margin_bottom

    def line(self, x1, y1, x2, y2, stroke="black", width=1):
        self.parts.append(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                          f'stroke="{stroke}" stroke-width="{width}"/>')

    def polyline(self, points, stroke, width=1.5):
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in points)
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="{width}"/>')

    def rect(self, x, y, w, h, fill):
        self.parts.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" fill="{fill}"/>')

    def text(self, x, y, body, anchor="middle", fill="black", rotate=None, size=None):
        extra = f' transform="rotate({rotate} {_f(x)} {_f(y)})"' if rotate is not None else ""
        extra += f' font-size="{size}"' if size else ""
        self.parts.append(f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}" fill="{fill}"{extra}>'
                          f'{escape(str(body))}</text>')

    def axes(self, title, x_label, y_label, y_lo, y_hi, ticks=5):
        x0, y0, x1, y1 = self.plot_box
        self.line(x0, y1, x1, y1)
        self.line(x0, y0, x0, y1)
        for t in range(ticks + 1):
            v = y_lo + (y_hi - y_lo) * t / ticks
            y = y1 - (y1 - y0) * t / ticks
            self.line(x0 - 4, y, x0, y)
            self.text(x0 - 6, y + 4, f"{v:.3g}", anchor="end")
        if title:
            self.text((x0 + x1) / 2, y0 - 15, title, size=self.s.font_size + 2)
        if x_label:
            self.text((x0 + x1) / 2, self.s.height - 15, x_label)
        if y_label:
            self.text(18, (y0 + y1) / 2, y_label, rotate=-90)

    def finish(self):
        return ("\n".join(self.parts + ["</svg>"]) + "\n").encode("utf-8")


def _span(values):
    lo, hi = min(values), max(values)
    if lo == hi:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def line_chart_svg(chart, style):
    if not chart.series or any(len(s.x) == 0 or len(s.x) != len(s.y) for s in chart.series):
        raise EmissionError("line chart needs non-empty series with matching x/y lengths")
    xs = [v for s in chart.series for v in s.x]
    ys = [v for s in chart.series for v in s.y]
    xlo, xhi = _span(xs)
    ylo, yhi = _span(ys)
    c = _Canvas(style)
    c.axes(chart.title, chart.x_label, chart.y_label, ylo, yhi)
    x0, y0, x1, y1 = c.plot_box

    def px(v):
        return x0 + (x1 - x0) * (v - xlo) / (xhi - xlo)

    def py(v):
        return y1 - (y1 - y0) * (v - ylo) / (yhi - ylo)

    for v in sorted(set(xs)):
        c.line(px(v), y1, px(v), y1 + 4)
        c.text(px(v), y1 + 16, f"{v:g}")
    for k, s in enumerate(chart.series):
        color = style.colors[k % len(style.colors)]
        c.polyline([(px(a), py(b)) for a, b in zip(s.x, s.y)], color)
        if len(chart.series) > 1:
            c.text(x1 - 4, y0 + 14 * (k + 1), s.name, anchor="end", fill=color)
    return c.finish()


def bar_chart_svg(chart, style):
    if not chart.categories or not chart.groups:
        raise EmissionError("bar chart needs categories and at least one group")
    names = list(chart.groups)
    if any(len(chart.groups[n]) != len(chart.categories) for n in names):
        raise EmissionError("each bar group needs one value per category")
    c = _Canvas(style)
    c.axes(chart.title, "", chart.y_label, 0.0, chart.y_max)
    x0, y0, x1, y1 = c.plot_box
    slot = (x1 - x0) / len(chart.categories)
    bar_w = slot * 0.8 / len(names)
    for i, cat in enumerate(chart.categories):
        left = x0 + slot * i + slot * 0.1
        for k, name in enumerate(names):
            v = max(0.0, min(float(chart.groups[name][i]), chart.y_max))
            h = (y1 - y0) * v / chart.y_max
            c.rect(left + k * bar_w, y1 - h, bar_w * 0.95, h, style.colors[k % len(style.colors)])
        c.text(x0 + slot * (i + 0.5), y1 + 16, cat)
    for k, name in enumerate(names):
        c.text(x1 - 4, y0 + 14 * (k + 1), name, anchor="end", fill=style.colors[k % len(style.colors)])
    return c.finish()


def _leaf_color(members, labels):
    if labels is None:
        return "black"
    ones = sum(int(labels[i]) for i in members)
    zeros = len(members) - ones
    return RESPONDER if ones > zeros else NON_RESPONDER if zeros > ones else MIXED


def dendrogram_svg(plot, style):
    t = plot.truncated
    if not t.leaves:
        raise EmissionError("dendrogram has no leaves")
    c = _Canvas(style)
    heights = [m[2] for m in t.merges] or [0.0]
    top = max(heights) or 1.0
    c.axes(plot.title, "samples (collapsed subtree size)", plot.y_label, 0.0, top)
    x0, y0, x1, y1 = c.plot_box
    slot = (x1 - x0) / len(t.leaves)
    pos = {node: (x0 + slot * (i + 0.5), y1) for i, node in enumerate(t.leaves)}

    def py(v):
        return y1 - (y1 - y0) * v / top

    # kept merges are the last ones, so the first gets id 2n - 1 - len(merges)
    first_id = 2 * sum(t.leaf_sizes.values()) - 1 - len(t.merges)
    for k, (a, b, d, _) in enumerate(t.merges):
        (xa, ya), (xb, yb) = pos[a], pos[b]
        h = py(d)
        c.polyline([(xa, ya), (xa, h), (xb, h), (xb, yb)], "#333333", 1)
        pos[first_id + k] = ((xa + xb) / 2, h)
    for node in t.leaves:
        x, _ = pos[node]
        color = _leaf_color(t.leaf_members[node], plot.labels)
        c.rect(x - 3, y1 - 3, 6, 6, color)
        c.text(x, y1 + 16, f"({t.leaf_sizes[node]})", fill=color, rotate=-60 if len(t.leaves) > 20 else None,
               size=max(7, style.font_size - 3))
    return c.finish()


def emit_svg(chart, style=None):
    """Render a :class:`LineChart`, :class:`BarChart` or :class:`DendrogramPlot` to SVG bytes."""
    style = style or Style()
    if isinstance(chart, LineChart):
        return line_chart_svg(chart, style)
    if isinstance(chart, BarChart):
        return bar_chart_svg(chart, style)
    if isinstance(chart, DendrogramPlot):
        return dendrogram_svg(chart, style)
    raise EmissionError(f"cannot render {type(chart).__name__}")
