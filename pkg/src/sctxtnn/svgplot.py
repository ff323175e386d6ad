"""Minimal self-contained SVG emission for the two study figures.

No plotting dependency: figures are assembled from polylines, rects, lines
and text. Output is deterministic for identical inputs.
"""

from __future__ import annotations

import math

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

WIDTH = 640
HEIGHT = 440
MARGIN_L = 70
MARGIN_R = 20
MARGIN_T = 30
MARGIN_B = 50


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _header(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="{MARGIN_T - 10}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{_esc(title)}</text>',
    ]


def _text(x: float, y: float, s: str, anchor: str = "middle", size: int = 11) -> str:
    return (f'<text x="{x:.2f}" y="{y:.2f}" text-anchor="{anchor}" '
            f'font-family="sans-serif" font-size="{size}">{_esc(s)}</text>')


def _line(x1, y1, x2, y2, color="#444444", width=1.0, dash: str | None = None) -> str:
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return (f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{color}" stroke-width="{width}"{extra}/>')


def _polyline(points: list[tuple[float, float]], color: str, dash: str | None = None) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{extra}/>'


def _fmt_pow10(e: int) -> str:
    return f"1e{e}"


def loss_curves_svg(curves: dict[str, tuple[list[float], list[float]]]) -> str:
    """Mean train/val MSE vs epoch per model, log-scaled y axis.

    curves maps model name to (train_mse_per_epoch, val_mse_per_epoch);
    train is drawn solid, validation dashed.
    """
    if not curves or all(len(tr) == 0 for tr, _ in curves.values()):
        raise ValueError("no curve data")
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    n_epochs = max(len(tr) for tr, _ in curves.values())
    vals = [v for tr, va in curves.values() for v in list(tr) + list(va) if v > 0]
    lo = math.floor(math.log10(min(vals)))
    hi = math.ceil(math.log10(max(vals)))
    if hi == lo:
        hi += 1
    floor_v = 10.0 ** (lo - 1)  # nonpositive losses clamp to the bottom decade

    def sx(e):
        return x0 + (x1 - x0) * (e - 1) / max(n_epochs - 1, 1)

    def sy(v):
        lv = math.log10(max(v, floor_v))
        return y0 - (y0 - y1) * (lv - lo) / (hi - lo)

    parts = _header("Mean training and validation MSE over epochs")
    parts.append(_line(x0, y0, x1, y0))
    parts.append(_line(x0, y0, x0, y1))
    for e in range(lo, hi + 1):
        y = sy(10.0 ** e)
        parts.append(_line(x0 - 4, y, x0, y))
        parts.append(_line(x0, y, x1, y, color="#dddddd", width=0.5))
        parts.append(_text(x0 - 8, y + 4, _fmt_pow10(e), anchor="end"))
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        e = 1 + frac * (n_epochs - 1)
        x = sx(e)
        parts.append(_line(x, y0, x, y0 + 4))
        parts.append(_text(x, y0 + 18, str(int(round(e)))))
    parts.append(_text((x0 + x1) / 2, HEIGHT - 10, "epoch"))

    ly = MARGIN_T + 12
    for idx, (name, (tr, va)) in enumerate(curves.items()):
        color = _COLORS[idx % len(_COLORS)]
        if len(tr):
            parts.append(_polyline([(sx(e + 1), sy(v)) for e, v in enumerate(tr)], color))
        if len(va):
            parts.append(_polyline([(sx(e + 1), sy(v)) for e, v in enumerate(va)],
                                   color, dash="5,3"))
        parts.append(_line(x1 - 150, ly, x1 - 120, ly, color=color, width=1.5))
        parts.append(_text(x1 - 114, ly + 4, f"{name} (train, dashed=val)", anchor="start", size=10))
        ly += 16
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def box_plot_svg(stats: dict[str, dict[str, float]], title: str = "Excess test MSE") -> str:
    """Box-and-whisker per model from {q1, median, q3, min, max, mean} stats.

    Whiskers span min..max; the mean is marked with an x.
    """
    if not stats:
        raise ValueError("no box statistics")
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    names = list(stats)
    vals = [stats[n][k] for n in names for k in ("min", "max", "mean")]
    vlo, vhi = min(vals), max(vals)
    if vhi == vlo:
        vhi = vlo + 1.0
    pad = 0.08 * (vhi - vlo)
    vlo, vhi = vlo - pad, vhi + pad

    def sy(v):
        return y0 - (y0 - y1) * (v - vlo) / (vhi - vlo)

    parts = _header(title)
    parts.append(_line(x0, y0, x1, y0))
    parts.append(_line(x0, y0, x0, y1))
    for i in range(6):
        v = vlo + i * (vhi - vlo) / 5
        y = sy(v)
        parts.append(_line(x0 - 4, y, x0, y))
        parts.append(_text(x0 - 8, y + 4, f"{v:.3g}", anchor="end"))

    slot = (x1 - x0) / len(names)
    half = min(slot * 0.25, 50)
    for idx, name in enumerate(names):
        s = stats[name]
        cx = x0 + (idx + 0.5) * slot
        color = _COLORS[idx % len(_COLORS)]
        parts.append(_line(cx, sy(s["min"]), cx, sy(s["q1"]), color="#444444"))
        parts.append(_line(cx, sy(s["q3"]), cx, sy(s["max"]), color="#444444"))
        parts.append(_line(cx - half / 2, sy(s["min"]), cx + half / 2, sy(s["min"])))
        parts.append(_line(cx - half / 2, sy(s["max"]), cx + half / 2, sy(s["max"])))
        top, bot = sy(s["q3"]), sy(s["q1"])
        parts.append(f'<rect x="{cx - half:.2f}" y="{top:.2f}" width="{2 * half:.2f}" '
                     f'height="{bot - top:.2f}" fill="{color}" fill-opacity="0.35" '
                     f'stroke="{color}"/>')
        parts.append(_line(cx - half, sy(s["median"]), cx + half, sy(s["median"]),
                           color=color, width=2.0))
        mx, my = cx, sy(s["mean"])
        parts.append(_line(mx - 4, my - 4, mx + 4, my + 4, color="#000000", width=1.5))
        parts.append(_line(mx - 4, my + 4, mx + 4, my - 4, color="#000000", width=1.5))
        parts.append(_text(cx, y0 + 18, name))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
