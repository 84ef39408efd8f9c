import json
import math
import re
from pathlib import Path
from typing import Optional, TextIO, Union

from debye import activation_energy
from models import (
    AdequacyReport,
    Attempt,
    DecompositionResult,
    DurbinWatsonResult,
    TestResult,
)
from svg_plot import emit_plot_svg


def _number(value: float) -> Optional[float]:
    value = float(value)
    return value if math.isfinite(value) else None


class ResultSerializer:
    """Turns decomposition results into JSON-ready dictionaries."""

    @staticmethod
    def test(result: Optional[TestResult]) -> Optional[dict]:
        if result is None:
            return None
        return {
            "statistic": _number(result.statistic),
            "p_value": _number(result.p_value),
            "passed": result.passed,
            "alpha": result.alpha,
        }

    @staticmethod
    def durbin_watson(result: Optional[DurbinWatsonResult]) -> Optional[dict]:
        if result is None:
            return None
        return {
            "passed": result.passed,
            "alpha": result.alpha,
            "lags": [
                {"lag": lag.lag, "statistic": _number(lag.statistic), "p_value": _number(lag.p_value)}
                for lag in result.lags
            ],
        }

    @classmethod
    def report(cls, report: Optional[AdequacyReport]) -> Optional[dict]:
        if report is None:
            return None
        return {
            "adequate": report.adequate,
            "normality": cls.test(report.normality),
            "zero_mean": cls.test(report.zero_mean),
            "autocorrelation": cls.durbin_watson(report.autocorrelation),
            "variance": cls.test(report.variance),
            "notes": list(report.notes),
        }

    @classmethod
    def attempt(cls, attempt: Optional[Attempt], result: DecompositionResult) -> Optional[dict]:
        if attempt is None:
            return None
        payload = {
            "n_components": attempt.n_components,
            "components": [],
            "sse": None,
            "iterations": None,
            "converged": None,
            "termination_reason": None,
            "report": cls.report(attempt.report),
            "error": attempt.error,
            "warnings": list(attempt.warnings),
        }
        fit = attempt.fit
        if fit is not None:
            payload.update({
                "components": [
                    {
                        "Q0": _number(q0),
                        "T0": _number(t0),
                        "E": _number(activation_energy(t0, result.frequency, result.constants)),
                    }
                    for q0, t0 in zip(fit.amplitudes, fit.peak_temperatures)
                ],
                "sse": _number(fit.sse),
                "iterations": fit.iterations,
                "converged": fit.converged,
                "termination_reason": fit.termination_reason.value,
            })
        return payload

    @classmethod
    def serialize(cls, result: DecompositionResult) -> dict:
        return {
            "status": result.status.value,
            "frequency": _number(result.frequency),
            "accepted": cls.attempt(result.accepted, result),
            "attempts": [cls.attempt(attempt, result) for attempt in result.attempts],
        }


# Floats travel through json.dumps as marked strings, then lose their quotes.
_FLOAT_MARK = "\ue000"
_MARKED_FLOAT = re.compile(r'"\\ue000([^"]*)"')


def _mark_floats(node):
    if isinstance(node, float):
        if not math.isfinite(node):
            raise ValueError(f"non-finite number {node!r} cannot be written as JSON")
        return f"{_FLOAT_MARK}{node:.17g}"
    if isinstance(node, dict):
        return {key: _mark_floats(value) for key, value in node.items()}
    if isinstance(node, list):
        return [_mark_floats(value) for value in node]
    return node


def render_result_json(result: DecompositionResult) -> str:
    """Deterministic JSON text: sorted keys, floats with 17 significant digits."""
    text = json.dumps(_mark_floats(ResultSerializer.serialize(result)), indent=2, sort_keys=True)
    return _MARKED_FLOAT.sub(r"\1", text) + "\n"


def write_result_json(result: DecompositionResult, destination: Union[str, Path, TextIO]):
    text = render_result_json(result)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)


class ResultWriter:

    def __init__(self, output_path: Union[str, Path], plot_path: Optional[Union[str, Path]] = None):
        self.output_path = Path(output_path)
        self.plot_path = Path(plot_path) if plot_path else None

    def write_result(self, result: DecompositionResult) -> Path:
        write_result_json(result, self.output_path)
        return self.output_path

    def write_plot(self, spectrum, result: DecompositionResult) -> Optional[Path]:
        if self.plot_path is None:
            return None
        emit_plot_svg(spectrum, result, self.plot_path)
        return self.plot_path
