from pathlib import Path
from typing import List, Sequence, TextIO, Union
from xml.sax.saxutils import escape

import numpy as np

from debye import params_to_components, spectrum_model
from models import DecompositionResult, Spectrum

WIDTH = 800
HEIGHT = 620
MARGIN_LEFT = 80
MARGIN_RIGHT = 30
MAIN_TOP, MAIN_BOTTOM = 50, 420
RESIDUAL_TOP, RESIDUAL_BOTTOM = 470, 570
COMPONENT_COLOURS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"]


class SvgCanvas:
    """Minimal SVG 1.1 document builder."""

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.elements: List[str] = []

    def line(self, x1, y1, x2, y2, stroke="black", width=1.0):
        self.elements.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{stroke}" stroke-width="{width}"/>'
        )

    def circle(self, x, y, r, fill, css_class=""):
        self.elements.append(f'<circle class="{css_class}" cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{fill}"/>')

    def polyline_path(self, xs: Sequence[float], ys: Sequence[float], stroke: str, css_class: str,
                      dashed: bool = False, width: float = 1.5):
        d = " ".join(
            f"{'M' if i == 0 else 'L'}{x:.2f},{y:.2f}" for i, (x, y) in enumerate(zip(xs, ys))
        )
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        self.elements.append(
            f'<path class="{css_class}" d="{d}" fill="none" stroke="{stroke}" stroke-width="{width}"{dash}/>'
        )

    def text(self, x, y, content: str, anchor="middle", size=12, rotate=None):
        transform = f' transform="rotate({rotate} {x:.2f} {y:.2f})"' if rotate is not None else ""
        self.elements.append(
            f'<text x="{x:.2f}" y="{y:.2f}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}"{transform}>{escape(content)}</text>'
        )

    def render(self) -> str:
        header = (
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
            f'<svg version="1.1" xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
        )
        return header + "\n".join(self.elements) + "\n</svg>\n"


class _Axis:
    def __init__(self, low: float, high: float, pixel_low: float, pixel_high: float):
        if high <= low:
            high = low + 1.0
        self.low, self.high = low, high
        self.pixel_low, self.pixel_high = pixel_low, pixel_high

    def __call__(self, values):
        values = np.asarray(values, dtype=float)
        return self.pixel_low + (values - self.low) / (self.high - self.low) * (self.pixel_high - self.pixel_low)

    def ticks(self, count: int = 5) -> np.ndarray:
        return np.linspace(self.low, self.high, count)


def _draw_frame(canvas: SvgCanvas, x_axis: _Axis, y_axis: _Axis, top: float, bottom: float, y_label: str):
    left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    canvas.line(left, bottom, right, bottom)
    canvas.line(left, top, left, bottom)
    for tick in y_axis.ticks():
        y = float(y_axis(tick))
        canvas.line(left - 4, y, left, y)
        canvas.text(left - 8, y + 4, f"{tick:.3g}", anchor="end", size=10)
    canvas.text(24, (top + bottom) / 2, y_label, rotate=-90)
    for tick in x_axis.ticks():
        x = float(x_axis(tick))
        canvas.line(x, bottom, x, bottom + 4)
        canvas.text(x, bottom + 16, f"{tick:.0f}", size=10)


def render_plot_svg(spectrum: Spectrum, result: DecompositionResult) -> str:
    """Measured points, total fit, dashed components, and residuals in a lower panel."""
    temperatures = spectrum.temperatures
    measured = spectrum.intensities
    attempt = result.best_attempt
    fit = attempt.fit if attempt is not None else None

    canvas = SvgCanvas(WIDTH, HEIGHT)
    x_axis = _Axis(float(temperatures.min()), float(temperatures.max()), MARGIN_LEFT, WIDTH - MARGIN_RIGHT)

    curves = []
    if fit is not None:
        components = params_to_components(fit.params, result.frequency, result.constants)
        curves = [spectrum_model(temperatures, [comp], result.constants) for comp in components]
        total = measured - fit.residuals
    drawn = [measured] + curves + ([total] if fit is not None else [])
    low = min(0.0, *(float(c.min()) for c in drawn))
    high = max(float(c.max()) for c in drawn)
    y_axis = _Axis(low, high * 1.05 if high > 0 else high + 1.0, MAIN_BOTTOM, MAIN_TOP)

    title = "no fitted model"
    if fit is not None:
        verdict = "adequate" if attempt.adequate else "not adequate"
        title = f"{fit.n_components} component(s), {verdict}"
    canvas.text(WIDTH / 2, 28, title, size=14)

    _draw_frame(canvas, x_axis, y_axis, MAIN_TOP, MAIN_BOTTOM, "Q")
    for x, y in zip(x_axis(temperatures), y_axis(measured)):
        canvas.circle(x, y, 1.8, "#555555", "measured")

    if fit is not None:
        for index, curve in enumerate(curves):
            colour = COMPONENT_COLOURS[index % len(COMPONENT_COLOURS)]
            canvas.polyline_path(x_axis(temperatures), y_axis(curve), colour, "component", dashed=True)
        canvas.polyline_path(x_axis(temperatures), y_axis(total), "black", "total", width=2.0)

        residuals = fit.residuals
        bound = float(np.max(np.abs(residuals))) or 1.0
        r_axis = _Axis(-bound * 1.1, bound * 1.1, RESIDUAL_BOTTOM, RESIDUAL_TOP)
        _draw_frame(canvas, x_axis, r_axis, RESIDUAL_TOP, RESIDUAL_BOTTOM, "residual")
        zero = float(r_axis(0.0))
        canvas.line(MARGIN_LEFT, zero, WIDTH - MARGIN_RIGHT, zero, stroke="#999999", width=0.5)
        for x, y in zip(x_axis(temperatures), r_axis(residuals)):
            canvas.circle(x, y, 1.5, "#d62728", "residual")

    canvas.text((MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2, HEIGHT - 12, "T (K)")
    return canvas.render()


def emit_plot_svg(spectrum: Spectrum, result: DecompositionResult, path: Union[str, Path, TextIO]):
    text = render_plot_svg(spectrum, result)
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
