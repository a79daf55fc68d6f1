"""
MAIN ORCHESTRATOR
Purpose: Command-line entry for all tasks
Workflow: Load configuration → Run task → Write manifest
Usage: amech <validate|integrate|jacobi|conjugate|secondvar|crosscheck> --config <path> [--out <dir>]
Exit codes: 0 success, 1 numerical failure, 2 configuration error
"""

import argparse
import logging
import sys
import time
import traceback
from pathlib import Path

from src import __version__
from src.cli.config import SUBCOMMANDS, load_config
from src.cli.runner import run
from src.utils.artifacts import write_manifest
from src.utils.config_loader import get_default_output_dir
from src.utils.errors import AmechError, ConfigError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

DESCRIPTIONS = {
    "validate": "Checking the almost-Lie and Lie conditions on sample points",
    "integrate": "Integrating the Euler-Lagrange equations",
    "jacobi": "Integrating a Jacobi field along the EL solution",
    "conjugate": "Scanning the EL solution for conjugate points",
    "secondvar": "Assembling the second variation over the hat basis",
    "crosscheck": "Comparing Jacobi fields with the lifted EL equation and a finite-difference oracle",
}


# ============================================================================
# HELPER FUNCTIONS
# ============================================================================

def print_step_header(step_num, step_name, description):
    """Print formatted step header"""
    print("\n" + "=" * 80)
    print(f"STEP {step_num}: {step_name}")
    print("=" * 80)
    print(description)
    print("=" * 80)


def run_pipeline_step(step_func, step_name):
    """Run one stage; returns (result, error, elapsed)."""
    print(f"\n▶️  Executing: {step_name}")
    print("-" * 80)

    start_time = time.time()
    try:
        result = step_func()
        elapsed_time = time.time() - start_time
        print("-" * 80)
        print(f"✓ {step_name} completed successfully")
        print(f"  Execution time: {elapsed_time:.2f} seconds")
        return result, None, elapsed_time

    except AmechError as e:
        elapsed_time = time.time() - start_time
        print("-" * 80)
        print(f"✗ {step_name} failed!")
        print(f"  Error ({type(e).__name__}): {e}")
        print(f"  Execution time: {elapsed_time:.2f} seconds")
        return None, e, elapsed_time

    except Exception as e:
        elapsed_time = time.time() - start_time
        print("-" * 80)
        print(f"✗ {step_name} failed with exception!")
        print(f"  Error: {e}")
        print(f"  Execution time: {elapsed_time:.2f} seconds")
        traceback.print_exc()
        return None, e, elapsed_time


def exit_code_for(error):
    if error is None:
        return EXIT_OK
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    return EXIT_NUMERICAL


def print_summary(summary):
    if not summary:
        return
    print("\n📊 Results:")
    for key, value in summary.items():
        shown = f"{value:.3e}" if isinstance(value, float) else value
        print(f"  {key:22}: {shown}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="amech",
        description="Lagrangian mechanics on skew-symmetric algebroids",
    )
    parser.add_argument("--version", action="version", version=f"amech {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub = subparsers.add_parser(name, help=DESCRIPTIONS[name])
        sub.add_argument("--config", required=True, help="JSON or YAML run configuration")
        sub.add_argument("--out", default=None, help="output directory (default: config 'out' or out/<config>)")
        sub.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    return parser


def resolve_output_dir(args, config):
    if args.out:
        return Path(args.out)
    if config.out_dir is not None:
        return config.out_dir
    stem = config.source.stem if config.source is not None else args.command
    return get_default_output_dir() / stem


# ============================================================================
# MAIN ORCHESTRATION
# ============================================================================

def main(argv=None):
    """Parse arguments, run one task and return the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format=LOG_FORMAT, force=True)

    print("=" * 80)
    print(f"AMECH {args.command.upper()}")
    print("=" * 80)
    timeline = []

    # STEP 1: CONFIGURATION
    print_step_header(1, "LOAD CONFIGURATION", f"Reading and validating {args.config}")
    config, error, elapsed = run_pipeline_step(lambda: load_config(args.config), "Configuration")
    timeline.append(("config", error is None, elapsed))
    if error is not None:
        print("\n❌ Run aborted: invalid configuration")
        return exit_code_for(error)

    out_dir = resolve_output_dir(args, config)
    print(f"\n⚙️  Algebroid: {config.algebroid.label} (n={config.algebroid.n}, k={config.algebroid.k})")
    print(f"   Lagrangian: {config.lagrangian.label}")
    print(f"   Output:     {out_dir}")

    # STEP 2: TASK
    print_step_header(2, args.command.upper(), DESCRIPTIONS[args.command])
    result, error, elapsed = run_pipeline_step(lambda: run(config, args.command, out_dir), args.command)
    timeline.append((args.command, error is None, elapsed))

    # STEP 3: MANIFEST
    print_step_header(3, "MANIFEST", "Recording version, configuration hash and residuals")
    artifacts = result.artifacts if result is not None else []
    residuals = result.residuals if result is not None else {}
    status = "ok" if error is None else f"failed: {type(error).__name__}"
    _, manifest_error, elapsed = run_pipeline_step(
        lambda: write_manifest(out_dir, args.command, config.document, artifacts, residuals, status), "Manifest")
    timeline.append(("manifest", manifest_error is None, elapsed))

    print("\n" + "=" * 80)
    print("RUN SUMMARY")
    print("=" * 80)
    print("\n⏱️  Execution Timeline:")
    for i, (name, success, seconds) in enumerate(timeline, 1):
        print(f"  {'✓' if success else '✗'} Step {i} ({name.upper():15}): {seconds:.2f}s")
    if result is not None:
        print_summary(result.summary)
        print("\n📁 Artifacts:")
        for path in artifacts:
            print(f"  ✓ {Path(path).name}")

    error = error or manifest_error
    print("\n" + "=" * 80)
    if error is None:
        print("✅ RUN COMPLETED SUCCESSFULLY!")
    else:
        print("❌ RUN FAILED")
    print("=" * 80)
    return exit_code_for(error)


if __name__ == "__main__":
    sys.exit(main())
