"""Minimal deterministic SVG emitters for result figures.

No plotting toolkit: output bytes are a pure function of the data (fixed
float formatting, no timestamps or generated ids), which keeps reports
byte-reproducible under a fixed seed.
"""

from __future__ import annotations

import numpy as np

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _esc(s: str) -> str:
    return (
        str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def _document(width: float, height: float, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">'
    )
    style = (
        "<style>text{font-family:sans-serif;font-size:11px}"
        ".title{font-size:14px;font-weight:bold}</style>"
    )
    return "\n".join([head, style, *body, "</svg>"]) + "\n"


def _vtext(x, y, s):
    return (
        f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="middle" '
        f'transform="rotate(-90 {_fmt(x)} {_fmt(y)})">{_esc(s)}</text>'
    )


def _text(x, y, s, cls="", anchor="middle", fill="#000"):
    cls_attr = f' class="{cls}"' if cls else ""
    return (
        f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" '
        f'fill="{fill}"{cls_attr}>{_esc(s)}</text>'
    )


def _blue_shade(v: float) -> str:
    """White (0) to dark blue (1)."""
    v = min(max(float(v), 0.0), 1.0)
    r = int(round(255 - 224 * v))
    g = int(round(255 - 180 * v))
    b = int(round(255 - 75 * v))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(
    matrix: np.ndarray,
    row_labels: list[str],
    col_labels: list[str],
    title: str,
    cell: float = 36.0,
) -> str:
    """Row-normalized style heat map with per-cell values."""
    m = np.asarray(matrix, dtype=np.float64)
    n_rows, n_cols = m.shape
    left, top = 70.0, 50.0
    width = left + n_cols * cell + 20.0
    height = top + n_rows * cell + 40.0
    vmax = m.max() if m.size and m.max() > 0 else 1.0
    body = [_text(width / 2, 24, title, cls="title")]
    for i in range(n_rows):
        body.append(
            _text(left - 8, top + i * cell + cell / 2 + 4, row_labels[i],
                  anchor="end")
        )
        for j in range(n_cols):
            v = m[i, j]
            color = _blue_shade(v / vmax)
            x, y = left + j * cell, top + i * cell
            body.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(cell)}" '
                f'height="{_fmt(cell)}" fill="{color}" stroke="#ccc"/>'
            )
            text_fill = "#fff" if v / vmax > 0.6 else "#000"
            body.append(
                _text(x + cell / 2, y + cell / 2 + 4, _fmt(round(v, 2)),
                      fill=text_fill)
            )
    for j in range(n_cols):
        body.append(_text(left + j * cell + cell / 2, top - 8, col_labels[j]))
    return _document(width, height, body)


def line_plot(
    series: list[tuple[str, np.ndarray, np.ndarray]],
    title: str,
    xlabel: str,
    ylabel: str,
    width: float = 680.0,
    height: float = 420.0,
) -> str:
    """Polyline chart; one (label, x, y) tuple per trace."""
    left, right, top, bottom = 60.0, 120.0, 50.0, 50.0
    plot_w, plot_h = width - left - right, height - top - bottom
    all_x = np.concatenate([np.asarray(x, dtype=np.float64) for _, x, _ in series])
    all_y = np.concatenate([np.asarray(y, dtype=np.float64) for _, _, y in series])
    x0, x1 = float(all_x.min()), float(all_x.max())
    y0, y1 = float(all_y.min()), float(all_y.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(x):
        return left + (x - x0) / (x1 - x0) * plot_w

    def sy(y):
        return top + plot_h - (y - y0) / (y1 - y0) * plot_h

    body = [
        _text(width / 2, 24, title, cls="title"),
        f'<rect x="{_fmt(left)}" y="{_fmt(top)}" width="{_fmt(plot_w)}" '
        f'height="{_fmt(plot_h)}" fill="none" stroke="#999"/>',
        _text(left + plot_w / 2, height - 12, xlabel),
        _vtext(left - 44, top + plot_h / 2, ylabel),
        _text(left, top + plot_h + 16, _fmt(x0)),
        _text(left + plot_w, top + plot_h + 16, _fmt(x1)),
        _text(left - 6, top + plot_h + 4, _fmt(y0), anchor="end"),
        _text(left - 6, top + 4, _fmt(y1), anchor="end"),
    ]
    for k, (label, xs, ys) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(
            f"{_fmt(sx(float(x)))},{_fmt(sy(float(y)))}" for x, y in zip(xs, ys)
        )
        body.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        ly = top + 14 + 16 * k
        body.append(
            f'<line x1="{_fmt(width - right + 8)}" y1="{_fmt(ly - 4)}" '
            f'x2="{_fmt(width - right + 28)}" y2="{_fmt(ly - 4)}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        body.append(_text(width - right + 34, ly, label, anchor="start"))
    return _document(width, height, body)


def significance_grid(
    labels: list[str],
    direction: np.ndarray,
    title: str,
    cell: float = 34.0,
) -> str:
    """Symmetric channel-pair grid: +1 red (increase), -1 blue (decrease),
    0 white (not significant)."""
    n = len(labels)
    left, top = 70.0, 50.0
    width = left + n * cell + 160.0
    height = top + n * cell + 30.0
    body = [_text((left + n * cell) / 2 + 20, 24, title, cls="title")]
    for i in range(n):
        body.append(
            _text(left - 8, top + i * cell + cell / 2 + 4, labels[i], anchor="end")
        )
        body.append(_text(left + i * cell + cell / 2, top - 8, labels[i]))
        for j in range(n):
            v = direction[i, j]
            color = "#d62728" if v > 0 else ("#1f77b4" if v < 0 else "#ffffff")
            x, y = left + j * cell, top + i * cell
            body.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(cell)}" '
                f'height="{_fmt(cell)}" fill="{color}" stroke="#ccc"/>'
            )
    lx = left + n * cell + 16
    body.append(_text(lx, top + 10, "increase", anchor="start", fill="#d62728"))
    body.append(_text(lx, top + 28, "decrease", anchor="start", fill="#1f77b4"))
    body.append(_text(lx, top + 46, "n.s.", anchor="start", fill="#666"))
    return _document(width, height, body)


def bar_chart(
    labels: list[str],
    values: list[float],
    errors: list[float] | None,
    title: str,
    ylabel: str,
    width: float = 640.0,
    height: float = 400.0,
) -> str:
    """Vertical bars with optional symmetric error whiskers."""
    left, top, bottom = 60.0, 50.0, 60.0
    plot_w, plot_h = width - left - 30.0, height - top - bottom
    vmax = max(
        [v + (e or 0.0) for v, e in zip(values, errors or [0.0] * len(values))]
        + [1e-9]
    )
    bw = plot_w / max(len(values), 1)
    body = [
        _text(width / 2, 24, title, cls="title"),
        f'<line x1="{_fmt(left)}" y1="{_fmt(top + plot_h)}" '
        f'x2="{_fmt(left + plot_w)}" y2="{_fmt(top + plot_h)}" stroke="#333"/>',
        _text(left - 6, top + 4, _fmt(vmax), anchor="end"),
        _text(left - 6, top + plot_h + 4, "0", anchor="end"),
        _vtext(left - 44, top + plot_h / 2, ylabel),
    ]
    for k, (label, v) in enumerate(zip(labels, values)):
        x = left + k * bw + bw * 0.15
        h = v / vmax * plot_h
        y = top + plot_h - h
        color = PALETTE[k % len(PALETTE)]
        body.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(bw * 0.7)}" '
            f'height="{_fmt(h)}" fill="{color}"/>'
        )
        if errors is not None:
            cx = x + bw * 0.35
            e = errors[k] / vmax * plot_h
            body.append(
                f'<line x1="{_fmt(cx)}" y1="{_fmt(y - e)}" x2="{_fmt(cx)}" '
                f'y2="{_fmt(min(y + e, top + plot_h))}" stroke="#333"/>'
            )
        body.append(_text(x + bw * 0.35, top + plot_h + 16, label))
        body.append(_text(x + bw * 0.35, y - 6, _fmt(round(v, 2))))
    return _document(width, height, body)
