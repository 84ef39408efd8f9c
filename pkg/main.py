import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

from csv_repository import CsvSpectrumRepository, write_spectrum_csv
from debye import components_to_params
from decomposer import SpectrumDecomposer
from exceptions import DecompositionError
from models import (
    Attempt,
    DecompositionConfig,
    DecompositionResult,
    DecompositionStatus,
    DofMode,
    LMOptions,
    SolverMethod,
    SynthSpec,
)
from repository import SpectrumRepository
from results import ResultWriter
from selftest import run_selftest
from synth import CANONICAL_NOISE_SD, CANONICAL_POINTS, CANONICAL_RANGE, generate, parse_peaks

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_ADEQUATE_MODEL = 2

DEFAULT_CONFIG_PATH = "decomposition_config.json"
CANONICAL_PEAKS_ARG = "1:450,1:550,1:650"


@dataclass(frozen=True)
class Config:
    frequency: Optional[float] = None
    alpha: float = 0.05
    max_components: int = 8
    var_eps: Optional[float] = None
    seed: int = 42
    dw_reps: int = 1000
    dof_mode: str = DofMode.CORRECTED.value
    max_lag: int = 5
    method: str = SolverMethod.LEVENBERG_MARQUARDT.value
    out: str = "result.json"
    plot: Optional[str] = None
    show_progress: bool = True

    def to_decomposition_config(self) -> DecompositionConfig:
        if self.frequency is None:
            raise ValueError("measurement frequency is required")
        return DecompositionConfig(
            frequency=self.frequency,
            alpha=self.alpha,
            max_components=self.max_components,
            lm=LMOptions(method=SolverMethod(self.method)),
            dw_reps=self.dw_reps,
            seed=self.seed,
            dof_mode=DofMode(self.dof_mode),
            max_lag=self.max_lag,
            show_progress=self.show_progress,
        )


class ConfigLoader:

    FILE_KEYS = ("alpha", "max_components", "seed", "dw_reps", "dof_mode", "max_lag", "method", "out")

    @staticmethod
    def from_json(path: str = DEFAULT_CONFIG_PATH) -> Config:
        config_path = Path(path)
        if not config_path.exists():
            return Config()
        with open(config_path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return Config(**{key: data[key] for key in ConfigLoader.FILE_KEYS if key in data})


class DecompositionOrchestrator:
    """
    Facade over loading, decomposition and output.
    The repository is injected so tests can supply spectra directly.
    """

    def __init__(self, config: Config, repository: SpectrumRepository):
        self.config = config
        self.repository = repository
        self.decomposer = SpectrumDecomposer(config.to_decomposition_config())
        self.result_writer = ResultWriter(config.out, config.plot)

    def run_analysis(self, start: Optional[Sequence[float]] = None) -> DecompositionResult:
        spectrum = self.repository.load()
        print(f"Loaded {len(spectrum)} points from {self.repository.describe()}.")
        if spectrum.var_eps is None:
            print("⚠️ No var_eps given: the variance criterion is skipped.")

        if start is None:
            result = self.decomposer.decompose(spectrum)
        else:
            result = self.decomposer.evaluate(spectrum, start)

        print(SummaryTable.render(result.attempts))
        if result.status is DecompositionStatus.ADEQUATE:
            print(f"✅ Adequate model with {result.accepted.n_components} component(s)")
        else:
            print("⚠️ No adequate model found")

        saved = [self.result_writer.write_result(result), self.result_writer.write_plot(spectrum, result)]
        print("\n📁 Saved files:")
        for path in saved:
            if path is not None:
                print(f" - {path}")
        return result

    def cleanup(self):
        self.repository.close()


class SummaryTable:

    HEADER = f"{'n':>3} {'sse':>12} {'AD p':>8} {'t p':>8} {'DW min p':>9} {'F p':>8}  verdict"

    @staticmethod
    def _p(test) -> str:
        return f"{test.p_value:8.4f}" if test is not None else f"{'-':>8}"

    @classmethod
    def row(cls, attempt: Attempt) -> str:
        if attempt.fit is None:
            return f"{attempt.n_components:>3} {'failed':>12}  {attempt.error}"
        report = attempt.report
        dw = report.autocorrelation
        dw_p = f"{dw.min_p_value:9.4f}" if dw is not None else f"{'-':>9}"
        verdict = "adequate" if report.adequate else "inadequate"
        return (
            f"{attempt.n_components:>3} {attempt.fit.sse:12.5e} {cls._p(report.normality)} "
            f"{cls._p(report.zero_mean)} {dw_p} {cls._p(report.variance)}  {verdict}"
        )

    @classmethod
    def render(cls, attempts: Sequence[Attempt]) -> str:
        return "\n".join([cls.HEADER] + [cls.row(attempt) for attempt in attempts])


# ------------------------------------------------------------------ #
#  Command line
# ------------------------------------------------------------------ #

class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with EXIT_ERROR; 2 is reserved for 'no adequate model'."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _probability(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return value


def _non_negative_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="debye-decompose",
        description="Decompose a relaxation spectrum into an automatically chosen number of Debye peaks.",
    )
    parser.add_argument("--verbose", action="store_true", help="Log solver and loop progress")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    fit = commands.add_parser("fit", help="Decompose a measured spectrum")
    fit.add_argument("input", help="CSV file with columns T,Q[,var_eps]")
    fit.add_argument("--freq", type=_positive_float, required=True, help="Measurement frequency, Hz")
    fit.add_argument("--alpha", type=_probability, help="Significance level of every criterion")
    fit.add_argument("--max-components", type=_positive_int, help="Largest component count to try")
    fit.add_argument("--var-eps", type=_non_negative_float, help="Known measurement-error variance")
    fit.add_argument("--seed", type=int, help="Seed of the Durbin-Watson bootstrap")
    fit.add_argument("--dw-reps", type=_positive_int, help="Bootstrap replications")
    fit.add_argument("--dof-mode", choices=[m.value for m in DofMode],
                     help="Free parameters per component in the variance test: corrected=2, paper=1")
    fit.add_argument("--method", choices=[m.value for m in SolverMethod], help="Least-squares solver")
    fit.add_argument("--start", help="Fit once from Q0:T0,Q0:T0,... instead of growing the model")
    fit.add_argument("--out", help="Result JSON path")
    fit.add_argument("--plot", help="Optional SVG plot path")
    fit.add_argument("--config", default=DEFAULT_CONFIG_PATH, help="JSON file with run defaults")
    fit.add_argument("--quiet", action="store_true", help="Hide progress bars")

    synth = commands.add_parser("synth", help="Write a synthetic spectrum fixture")
    synth.add_argument("output", help="CSV file to write")
    synth.add_argument("--freq", type=_positive_float, required=True, help="Measurement frequency, Hz")
    synth.add_argument("--peaks", default=CANONICAL_PEAKS_ARG, help="Components as Q0:T0,Q0:T0,...")
    synth.add_argument("--t-min", type=_positive_float, default=CANONICAL_RANGE[0])
    synth.add_argument("--t-max", type=_positive_float, default=CANONICAL_RANGE[1])
    synth.add_argument("--points", type=_positive_int, default=CANONICAL_POINTS)
    synth.add_argument("--noise-sd", type=_non_negative_float, default=CANONICAL_NOISE_SD)
    synth.add_argument("--seed", type=int, default=42)

    selftest = commands.add_parser("selftest", help="Run the statistical oracle suite")
    selftest.add_argument("--rounds", type=int, default=100, help="Monte-Carlo fits for the false-positive check")
    selftest.add_argument("--quiet", action="store_true", help="Hide progress bars")
    return parser


def load_config(args) -> Config:
    config = ConfigLoader.from_json(args.config)
    overrides = {
        "frequency": args.freq,
        "alpha": args.alpha,
        "max_components": args.max_components,
        "var_eps": args.var_eps,
        "seed": args.seed,
        "dw_reps": args.dw_reps,
        "dof_mode": args.dof_mode,
        "method": args.method,
        "out": args.out,
        "plot": args.plot,
    }
    config = dataclasses.replace(config, **{k: v for k, v in overrides.items() if v is not None})
    return dataclasses.replace(config, show_progress=not args.quiet)


def _run_fit(args) -> int:
    config = load_config(args)
    start = None
    if args.start:
        start = components_to_params(parse_peaks(args.start, config.frequency))

    orchestrator = DecompositionOrchestrator(config, CsvSpectrumRepository(args.input, config.var_eps))
    try:
        result = orchestrator.run_analysis(start)
    finally:
        orchestrator.cleanup()
    return EXIT_OK if result.status is DecompositionStatus.ADEQUATE else EXIT_NO_ADEQUATE_MODEL


def _run_synth(args) -> int:
    spec = SynthSpec(
        components=tuple(parse_peaks(args.peaks, args.freq)),
        t_range=(args.t_min, args.t_max),
        n_points=args.points,
        noise_sd=args.noise_sd,
        frequency=args.freq,
        seed=args.seed,
    )
    synthetic = generate(spec)
    write_spectrum_csv(synthetic.spectrum, args.output, comments=[
        f"synthetic Debye spectrum, f={args.freq} Hz, peaks {args.peaks}, "
        f"noise_sd={args.noise_sd}, seed={args.seed}",
    ])
    print(f"📁 Wrote {args.points} points to {args.output}")
    return EXIT_OK


def _run_selftest(args) -> int:
    outcomes = run_selftest(rounds=args.rounds, show_progress=not args.quiet)
    for outcome in outcomes:
        mark = "✅" if outcome.passed else "❌"
        print(f"{mark} {outcome.name:<24} {outcome.detail}")
    return EXIT_OK if all(outcome.passed for outcome in outcomes) else EXIT_ERROR


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else EXIT_OK

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    handlers = {"fit": _run_fit, "synth": _run_synth, "selftest": _run_selftest}
    try:
        return handlers[args.command](args)
    except (DecompositionError, ValueError, OSError) as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
