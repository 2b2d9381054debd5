"""Plain-text SVG figures: section heatmaps, trace overlays, loss curves."""

from xml.sax.saxutils import escape

import numpy as np

# viridis anchors
_CMAP = np.array([
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
], dtype=float)
_LEVELS = 64
_SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _color(t):
    t = min(max(t, 0.0), 1.0) * (len(_CMAP) - 1)
    i = min(int(t), len(_CMAP) - 2)
    c = _CMAP[i] + (t - i) * (_CMAP[i + 1] - _CMAP[i])
    return "#%02x%02x%02x" % tuple(int(round(v)) for v in c)


def _doc(width, height, body, title):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n'
            f'<title>{escape(title)}</title>\n'
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
            + "".join(body) + "</svg>\n")


def _text(x, y, s, size=12, anchor="start"):
    return f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" text-anchor="{anchor}">{escape(str(s))}</text>\n'


def section_svg(grid, title="section", cell=3, vmin=None, vmax=None):
    """Heatmap of a SectionGrid, depth downwards. Equal-colour runs along a
    row are merged into one rectangle."""
    v = grid.values
    d, n = v.shape
    lo = float(v.min()) if vmin is None else vmin
    hi = float(v.max()) if vmax is None else vmax
    span = hi - lo if hi > lo else 1.0
    levels = np.clip(((v - lo) / span * (_LEVELS - 1)).round().astype(int), 0, _LEVELS - 1)
    palette = [_color(k / (_LEVELS - 1)) for k in range(_LEVELS)]
    left, top = 50, 30
    body = [_text(left, 18, title, 14)]
    for i in range(d):
        j = 0
        while j < n:
            k = levels[i, j]
            j2 = j + 1
            while j2 < n and levels[i, j2] == k:
                j2 += 1
            body.append(f'<rect x="{left + j * cell}" y="{top + i * cell}" width="{(j2 - j) * cell}" '
                        f'height="{cell}" fill="{palette[k]}"/>\n')
            j = j2
    w, h = left + n * cell + 90, top + d * cell + 30
    # colour bar
    bx = left + n * cell + 15
    for k in range(_LEVELS):
        y = top + (d * cell) * (1 - (k + 1) / _LEVELS)
        body.append(f'<rect x="{bx}" y="{y:.2f}" width="12" height="{d * cell / _LEVELS + 0.5:.2f}" '
                    f'fill="{palette[k]}"/>\n')
    body.append(_text(bx + 16, top + 10, f"{hi:.4g}", 10))
    body.append(_text(bx + 16, top + d * cell, f"{lo:.4g}", 10))
    body.append(_text(left, h - 8, "trace", 11))
    return _doc(w, h, body, title)


def _polyline(xs, ys, color, width=1.2):
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    return f'<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{pts}"/>\n'


def overlay_svg(pairs, picks, title="trace overlays", panel=(140, 320)):
    """One panel per picked trace with exactly two polylines: truth (black)
    and prediction (red). ``pairs`` are (truth, prediction) arrays."""
    if len(pairs) != len(picks):
        raise ValueError("need one (truth, prediction) pair per pick")
    if not pairs:
        raise ValueError("no traces to plot")
    pw, ph = panel
    top = 40
    body = [_text(10, 18, title, 14)]
    for p, ((truth, pred), j) in enumerate(zip(pairs, picks)):
        x0 = 20 + p * (pw + 20)
        both = np.concatenate([truth, pred])
        lo, hi = float(both.min()), float(both.max())
        span = hi - lo if hi > lo else 1.0
        d = len(truth)
        ys = top + np.arange(d) / max(d - 1, 1) * ph
        body.append(f'<rect x="{x0}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#999"/>\n')
        body.append(_text(x0 + pw / 2, top - 6, f"trace {j}", 11, "middle"))
        for arr, color in ((truth, "black"), (pred, "#d62728")):
            xs = x0 + (np.asarray(arr) - lo) / span * pw
            body.append(_polyline(xs, ys, color))
    w = 20 + len(picks) * (pw + 20)
    return _doc(w, top + ph + 20, body, title)


def loss_svg(history, series=("total", "l_reg", "l_recon", "l_wml"), title="training losses",
             size=(640, 360)):
    """log10 loss curves against epoch."""
    if len(history) == 0:
        raise ValueError("history is empty")
    w, h = size
    left, top, right, bottom = 60, 30, 120, 40
    pw, ph = w - left - right, h - top - bottom
    epochs = history.column("epoch")
    curves = []
    for name in series:
        vals = history.column(name)
        ok = vals > 0
        if ok.any():
            curves.append((name, epochs[ok], np.log10(vals[ok])))
    if not curves:
        raise ValueError("no positive loss values to plot")
    ymin = min(c[2].min() for c in curves)
    ymax = max(c[2].max() for c in curves)
    yspan = ymax - ymin if ymax > ymin else 1.0
    e0, e1 = float(epochs.min()), float(epochs.max())
    espan = e1 - e0 if e1 > e0 else 1.0
    body = [_text(left, 18, title, 14),
            f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#999"/>\n']
    for k, (name, ex, ly) in enumerate(curves):
        xs = left + (ex - e0) / espan * pw
        ys = top + (1 - (ly - ymin) / yspan) * ph
        color = _SERIES_COLORS[k % len(_SERIES_COLORS)]
        body.append(_polyline(xs, ys, color))
        body.append(_text(left + pw + 10, top + 14 + 16 * k, name, 11))
        body.append(f'<line x1="{left + pw + 60}" y1="{top + 10 + 16 * k}" x2="{left + pw + 80}" '
                    f'y2="{top + 10 + 16 * k}" stroke="{color}" stroke-width="2"/>\n')
    body.append(_text(left, h - 10, f"epoch {int(e0)}..{int(e1)}", 11))
    body.append(_text(5, top + 10, f"1e{ymax:.1f}", 10))
    body.append(_text(5, top + ph, f"1e{ymin:.1f}", 10))
    return _doc(w, h, body, title)


def write_svg(path, svg):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)
