"""
Command-line front end.

    python -m app.cli validate --scenario scenarios/default.json
    python -m app.cli run --scenario scenarios/default.json --out runs/default
    python -m app.cli compare --scenario scenarios/sustained_overload.json --out runs/cmp

Exit status: 0 on success, 1 on configuration faults or unwritable output,
2 when a run aborts.
"""
import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from app.config import configure_logging, settings
from app.errors import ConfigError, SimulationError
from app.models.scenario import ScenarioConfig
from app.models.trace import CompareReport, VariantDelta
from app.services.scenarios import parse_config
from app.services.sim_engine import RunResult, simulate
from app.utils.output import write_atomic, write_run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

VERBS = ("validate", "run", "compare")

# (mape_enabled, ml_enabled) per comparison variant
VARIANTS = {
    "baseline_ct_only": (False, False),
    "mape": (True, False),
    "mape_ml": (True, True),
}
BASELINE = "baseline_ct_only"


@dataclass
class Command:
    verb: str
    scenario_path: Path
    output_dir: Optional[Path] = None
    overrides: List[str] = field(default_factory=list)


def load_config(cmd: Command) -> ScenarioConfig:
    try:
        text = Path(cmd.scenario_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {cmd.scenario_path}: {exc.strerror}") from exc
    seed = settings.SEED if cmd.verb != "validate" else None
    return parse_config(text, cmd.overrides, seed_override=seed)


def _write_result(out_dir: Path, config: ScenarioConfig, result: RunResult) -> None:
    write_run(
        out_dir,
        result.trace,
        config.n_tiers,
        result.summary.model_dump_json(indent=2),
        result.adaptations,
    )


def compare_variants(config: ScenarioConfig) -> Dict[str, RunResult]:
    """Run the three variants on one seed; only the enable flags differ."""
    configs = {
        name: config.model_copy(update={"mape_enabled": mape, "ml_enabled": ml})
        for name, (mape, ml) in VARIANTS.items()
    }
    with ThreadPoolExecutor(max_workers=max(1, settings.MAX_WORKERS)) as pool:
        futures = {name: pool.submit(simulate, cfg) for name, cfg in configs.items()}
        return {name: future.result() for name, future in futures.items()}


def build_report(results: Dict[str, RunResult]) -> CompareReport:
    summaries = {name: result.summary for name, result in results.items()}
    base = summaries[BASELINE]
    deltas = {
        name: VariantDelta(
            sla=summary.sla_compliance_fraction - base.sla_compliance_fraction,
            cost=summary.total_cost - base.total_cost,
        )
        for name, summary in summaries.items()
        if name != BASELINE
    }
    return CompareReport(variants=summaries, deltas=deltas)


def execute_command(cmd: Command) -> int:
    """Run one command and return its exit status."""
    if cmd.verb not in VERBS:
        print(f"unknown command '{cmd.verb}'", file=sys.stderr)
        return EXIT_CONFIG

    try:
        config = load_config(cmd)
    except ConfigError as exc:
        print(f"[CLI] config fault: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if cmd.verb == "validate":
        print("ok")
        return EXIT_OK

    out_dir = Path(cmd.output_dir or settings.OUTPUT_DIR)
    try:
        if cmd.verb == "run":
            result = simulate(config)
        else:
            results = compare_variants(config)
    except SimulationError as exc:
        print(f"[CLI] run aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    try:
        if cmd.verb == "run":
            _write_result(out_dir, config, result)
        else:
            for name, variant in results.items():
                _write_result(out_dir / name, config, variant)
            report = build_report(results)
            write_atomic(out_dir / "compare.json", report.model_dump_json(indent=2))
    except OSError as exc:
        print(f"[CLI] cannot write outputs to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    logger.info("[CLI] %s finished, outputs in %s", cmd.verb, out_dir)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hiersim",
        description="Multi-tier cloud application under MAPE-K supervision and PI control",
    )
    parser.add_argument("--log-level", default=None, help="Overrides HIERSIM_LOG_LEVEL")
    sub = parser.add_subparsers(dest="verb", required=True)

    validate = sub.add_parser("validate", help="Parse and validate a scenario file")
    validate.add_argument("--scenario", required=True, type=Path)

    for verb, help_text in (
        ("run", "Run one scenario and write its trace and summary"),
        ("compare", "Run CT-only, MAPE and MAPE+ML variants on one seed"),
    ):
        p = sub.add_parser(verb, help=help_text)
        p.add_argument("--scenario", required=True, type=Path)
        p.add_argument("--out", type=Path, default=None, help="Output directory")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="Dotted-path override, e.g. goal.sla_response_time=0.9 (repeatable)",
        )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    cmd = Command(
        verb=args.verb,
        scenario_path=args.scenario,
        output_dir=getattr(args, "out", None),
        overrides=list(getattr(args, "overrides", [])),
    )
    return execute_command(cmd)


if __name__ == "__main__":
    sys.exit(main())
