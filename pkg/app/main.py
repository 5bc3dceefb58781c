"""
Command-line runner for the BSDE laboratory.

    python -m app.main <subcommand> <config.json> [--output DIR]

Every subcommand writes report.json plus its CSV data products below
<output>/<subcommand>. Exit codes: 0 pass, 2 config error, 3 numerical or statistical failure.
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add parent directory to Python path
parent_dir = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(parent_dir))

from app.pipeline.checks import SUBCOMMANDS, Experiment
from app.pipeline.state import ExperimentConfig, Verdict, load_experiment
from app.storage.artifact_store import ArtifactStore
from app.utils.config import config
from app.utils.errors import ConfigError, NumericalError, ParameterRejection
from app.utils.logger import logger

FULL_SUITE = "full-suite"
EXIT_PASS = 0
EXIT_CONFIG = 2
EXIT_FAILURE = 3


def output_root(cfg: ExperimentConfig, subcommand: str, override: Optional[str] = None) -> Path:
    """--output wins over the config's output_dir, which wins over BSDE_LAB_OUTPUT_DIR"""
    return Path(override or cfg.output_dir or config.output_dir) / subcommand


def _report(store: ArtifactStore, subcommand: str, cfg: ExperimentConfig, verdicts: List[Verdict],
            passed: bool, rejection: Optional[str] = None) -> None:
    store.write_report(
        {
            "subcommand": subcommand,
            "config": cfg.model_dump(mode="json"),
            "rejection": rejection,
            "passed": passed,
            "verdicts": verdicts,
        }
    )


def _run_full_suite(config_path: str, exp: Experiment) -> int:
    # Imported here so that single subcommands do not compile the workflow
    from app.pipeline.graph import initial_state, suite_graph

    final_state = suite_graph.invoke(initial_state(config_path, exp))
    if not final_state["params_valid"]:
        logger.error(f"❌ Parameters rejected: {final_state['rejection']}")
        return EXIT_CONFIG
    return EXIT_PASS if final_state["passed"] else EXIT_FAILURE


def run(subcommand: str, config_path: str, output: Optional[str] = None) -> int:
    """Run one subcommand on one experiment file and return the process exit code"""
    logger.info(f"🔧 {subcommand} on {config_path}")
    try:
        cfg = load_experiment(config_path)
    except ConfigError as e:
        logger.error(f"❌ {e}")
        return EXIT_CONFIG

    store = ArtifactStore(output_root(cfg, subcommand, output))
    exp = Experiment(cfg, store)
    try:
        if subcommand == FULL_SUITE:
            return _run_full_suite(config_path, exp)

        if subcommand != "validate-params":
            try:
                exp.param
            except ParameterRejection as e:
                logger.error(f"❌ Parameters rejected: {e}")
                _report(store, subcommand, cfg, [], False, rejection=f"{e.code}: {e.reason}")
                return EXIT_CONFIG

        verdicts = SUBCOMMANDS[subcommand](exp)
        passed = all(v.passed for v in verdicts)
        _report(store, subcommand, cfg, verdicts, passed)
        logger.info(f"{'✅' if passed else '❌'} {subcommand}: {sum(v.passed for v in verdicts)}/{len(verdicts)} checks passed")
        return EXIT_PASS if passed else EXIT_FAILURE
    except NumericalError as e:
        logger.error(f"❌ {subcommand} aborted: {e}")
        store.write_json("diagnostic", {"subcommand": subcommand, "error": type(e).__name__, "message": str(e)})
        return EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bsde-lab",
        description="Numerical laboratory for BSDEs with distributional drivers",
    )
    parser.add_argument("subcommand", choices=sorted(SUBCOMMANDS) + [FULL_SUITE])
    parser.add_argument("config", help="JSON experiment file")
    parser.add_argument("--output", default=None, help="Output directory (overrides the config)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.subcommand, args.config, args.output)


if __name__ == "__main__":
    sys.exit(main())
