"""Static SVG line charts of a simulation trace (velocity, position, gaps)."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from platoon_fdi.csvio import atomic_write_text
from platoon_fdi.simulator import SimulationTrace

SVG_NS = "http://www.w3.org/2000/svg"
WIDTH, HEIGHT = 800, 480
LEFT, RIGHT, TOP, BOTTOM = 80, 150, 40, 60
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    span = hi - lo
    raw = span / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return ticks


def _range(values: np.ndarray) -> tuple[float, float]:
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return -1.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi - lo < 1e-9 * max(1.0, abs(hi)):
        pad = max(1.0, abs(hi) * 0.05)
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def line_chart(
    series: dict[str, np.ndarray],
    title: str,
    xlabel: str,
    ylabel: str,
    window: tuple[int, int] | None = None,
) -> ET.Element:
    """One polyline per named series, x being the sample index."""
    steps = max(len(v) for v in series.values())
    x_lo, x_hi = (0.0, float(steps - 1)) if steps > 1 else (-0.5, 0.5)
    y_lo, y_hi = _range(np.concatenate([np.asarray(v, dtype=float) for v in series.values()]))
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    svg = ET.Element(
        "svg",
        xmlns=SVG_NS,
        width=str(WIDTH),
        height=str(HEIGHT),
        viewBox=f"0 0 {WIDTH} {HEIGHT}",
        **{"font-family": "sans-serif", "font-size": "12"},
    )
    ET.SubElement(svg, "title").text = title
    ET.SubElement(svg, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")

    if window is not None:
        onset, duration = window
        a, b = max(x_lo, onset), min(x_hi, onset + duration)
        if b >= a:
            ET.SubElement(
                svg, "rect", x=f"{px(a):.2f}", y=str(TOP), width=f"{max(px(b) - px(a), 1.0):.2f}",
                height=str(plot_h), fill="#f4c7c3", opacity="0.5", **{"class": "attack-window"},
            )
            ET.SubElement(svg, "text", x=f"{px(a) + 4:.2f}", y=str(TOP + 14), fill="#a33").text = "attack window"

    axes = ET.SubElement(svg, "g", stroke="black", **{"stroke-width": "1", "class": "axes"})
    ET.SubElement(axes, "line", x1=str(LEFT), y1=str(TOP + plot_h), x2=str(LEFT + plot_w), y2=str(TOP + plot_h))
    ET.SubElement(axes, "line", x1=str(LEFT), y1=str(TOP), x2=str(LEFT), y2=str(TOP + plot_h))
    for t in _nice_ticks(x_lo, x_hi):
        x = px(t)
        ET.SubElement(axes, "line", x1=f"{x:.2f}", y1=str(TOP + plot_h), x2=f"{x:.2f}", y2=str(TOP + plot_h + 5))
        ET.SubElement(svg, "text", x=f"{x:.2f}", y=str(TOP + plot_h + 20), **{"text-anchor": "middle"}).text = f"{t:g}"
    for t in _nice_ticks(y_lo, y_hi):
        y = py(t)
        ET.SubElement(axes, "line", x1=str(LEFT - 5), y1=f"{y:.2f}", x2=str(LEFT), y2=f"{y:.2f}")
        ET.SubElement(svg, "text", x=str(LEFT - 8), y=f"{y + 4:.2f}", **{"text-anchor": "end"}).text = f"{t:g}"

    ET.SubElement(svg, "text", x=str(LEFT + plot_w / 2), y=str(HEIGHT - 15), **{"text-anchor": "middle"}).text = xlabel
    ET.SubElement(
        svg, "text", x="20", y=str(TOP + plot_h / 2), transform=f"rotate(-90 20 {TOP + plot_h / 2})",
        **{"text-anchor": "middle"},
    ).text = ylabel
    ET.SubElement(svg, "text", x=str(LEFT + plot_w / 2), y="24", **{"text-anchor": "middle", "font-size": "15"}).text = title

    legend = ET.SubElement(svg, "g", **{"class": "legend"})
    for idx, (name, values) in enumerate(series.items()):
        color = PALETTE[idx % len(PALETTE)]
        values = np.asarray(values, dtype=float)
        points = " ".join(
            f"{px(k if steps > 1 else 0.0):.2f},{py(v):.2f}" for k, v in enumerate(values) if math.isfinite(v)
        )
        ET.SubElement(
            svg, "polyline", points=points, fill="none", stroke=color,
            **{"stroke-width": "1.5", "data-series": name},
        )
        ly = TOP + 10 + idx * 18
        lx = WIDTH - RIGHT + 15
        ET.SubElement(legend, "line", x1=str(lx), y1=str(ly), x2=str(lx + 20), y2=str(ly), stroke=color,
                      **{"stroke-width": "2"})
        ET.SubElement(legend, "text", x=str(lx + 26), y=str(ly + 4)).text = name
    return svg


def _write(svg: ET.Element, path: Path) -> Path:
    body = ET.tostring(svg, encoding="unicode")
    return atomic_write_text(path, '<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n")


def emit_plots(trace: SimulationTrace, out_dir, window: tuple[int, int] | None = None) -> list[Path]:
    """Write ``velocity.svg``, ``position.svg`` and ``gaps.svg`` into ``out_dir``."""
    out_dir = Path(out_dir)
    if trace.states.shape[0] == 0:
        raise ValueError("cannot plot an empty trace")
    window = window if window is not None else trace.window
    n = trace.n
    xlabel = "time step k"
    charts = {
        "velocity.svg": line_chart(
            {f"vehicle {i}": trace.states[:, i, 1] for i in range(n + 1)},
            "Velocity", xlabel, "velocity (m/s)", window,
        ),
        "position.svg": line_chart(
            {f"vehicle {i}": trace.states[:, i, 0] for i in range(n + 1)},
            "Position", xlabel, "position (m)", window,
        ),
        "gaps.svg": line_chart(
            {f"vehicle {i}": trace.gaps[:, i] for i in range(1, n + 1)},
            "Gap to predecessor", xlabel, "gap (m)", window,
        ),
    }
    return [_write(svg, out_dir / name) for name, svg in charts.items()]
