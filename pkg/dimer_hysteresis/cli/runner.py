import argparse
import asyncio
import logging
import sys
from typing import List, Optional

from colorama import Fore

from ..common.config import RunConfig
from ..common.dispatch import max_workers_from_env
from ..common.errors import HysteresisError
from ..common.logger import setup_logging
from .commands import cmd_entropy, cmd_kruskal, cmd_render, cmd_run_classical, cmd_run_quantum, cmd_scan
from .outputs import RunDirectory

logger = logging.getLogger(__name__)

COMMANDS = ("run-quantum", "run-classical", "scan", "entropy", "kruskal")

# Flag -> config entry it overrides
OVERRIDES = {
    "omega": "params.omega",
    "interaction": "params.interaction",
    "nonlinearity": "params.nonlinearity",
    "total_particles": "params.total_particles",
    "delta_initial": "protocol.delta_initial",
    "delta_turn": "protocol.delta_turn",
    "half_time": "protocol.half_time",
    "index": "initial.index",
    "q_points": "grid.q_points",
    "p_points": "grid.p_points",
    "samples": "ensemble.samples",
    "seed": "ensemble.seed",
    "checkpoints": "checkpoints",
    "output_dir": "outputs.directory",
}


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, help="Run configuration JSON file")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    parser.add_argument("--output-dir", type=str, help="Directory receiving the run directory")
    parser.add_argument("--run-name", type=str, help="Run directory name (default: command and start time)")
    parser.add_argument("--max-workers", type=int, help="Worker cap for scans (default: DIMER_HYSTERESIS_MAX_WORKERS)")
    parser.add_argument("--omega", type=float, help="Tunneling rate")
    interaction = parser.add_mutually_exclusive_group()
    interaction.add_argument("--interaction", type=float, help="On-site interaction U")
    interaction.add_argument("--nonlinearity", type=float, help="Effective nonlinearity u = U N / omega")
    parser.add_argument("--total-particles", type=int, help="Particle number N")
    parser.add_argument("--delta-initial", type=float, help="Detuning at t = -T and t = +T")
    parser.add_argument("--delta-turn", type=float, help="Detuning at the turning point t = 0")
    parser.add_argument("--half-time", type=float, help="Half sweep time T")
    parser.add_argument("--index", type=int, help="1-based initial eigenstate index")
    parser.add_argument(
        "--eigenstate-range",
        nargs=2,
        type=int,
        metavar=("FIRST", "LAST"),
        help="Start from the uniform mixture of eigenstates FIRST..LAST",
    )
    parser.add_argument("--q-points", type=int, help="Husimi grid points along q")
    parser.add_argument("--p-points", type=int, help="Husimi grid points along p")
    parser.add_argument("--samples", type=int, help="Classical ensemble size")
    parser.add_argument("--seed", type=int, help="Run seed")
    parser.add_argument("--checkpoints", type=int, help="Number of observation times over [-T, T]")


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Probabilistic hysteresis in the swept Bose-Hubbard dimer")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run-quantum": "Propagate the quantum state through one sweep cycle",
        "run-classical": "Evolve the classical ensemble through one sweep cycle",
        "scan": "Return probability against the total sweep time",
        "entropy": "Wehrl, diagonal and classical entropy traces",
        "kruskal": "Quasi-static return probability from separatrix areas",
    }
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=helps[name])
        _add_run_arguments(cmd)
        if name == "scan":
            cmd.add_argument("--sweep-times", nargs="+", type=float, help="Total sweep times 2T")
    render = sub.add_parser("render", help="Render exported CSV files to PNG")
    render.add_argument("inputs", nargs="+", help="CSV files written by the other commands")
    render.add_argument("--style", choices=("auto", "heatmap", "lines"), default="auto")
    render.add_argument("--debug", action="store_true", help="Enable debug logging")
    return parser.parse_args(argv)


def build_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.load_config(args.config)
    logger.info(f"{Fore.GREEN}Loading configuration...")
    if config.source:
        logger.info(f"{Fore.CYAN}Using config file: {config.source}")
    else:
        logger.info(f"{Fore.YELLOW}Using default configuration")

    # Override with command line arguments
    for flag, name in OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            config.override(name, value)
    if getattr(args, "eigenstate_range", None):
        first, last = args.eigenstate_range
        config.override("initial", {"kind": "eigenstate_range", "first": first, "last": last})
    elif getattr(args, "index", None) is not None and config.initial.get("kind") != "eigenstate":
        config.override("initial", {"kind": "eigenstate", "index": args.index})
    return config


def _log_configuration(config: RunConfig) -> None:
    params, protocol = config.dimer_params, config.sweep_protocol
    logger.info(f"\n{Fore.GREEN}Run configuration:")
    logger.info(
        f"{Fore.CYAN}N={params.total_particles}, omega={params.omega}, U={params.interaction:.6g} "
        f"(u={params.nonlinearity:.4g})"
    )
    logger.info(
        f"{Fore.CYAN}Sweep: delta {protocol.delta_initial} -> {protocol.delta_turn} -> "
        f"{protocol.delta_initial} over 2T={2 * protocol.half_time:.6g}"
    )
    logger.info(f"{Fore.CYAN}Initial state: {config.initial}")
    logger.info(f"{Fore.CYAN}Checkpoints: {config.checkpoints}, grid: {config.grid_spec.to_dict()}")
    logger.info(f"{Fore.CYAN}Ensemble: {config.ensemble}")


async def run(args: argparse.Namespace) -> int:
    """Run one subcommand; returns the process exit status"""
    if args.command == "render":
        try:
            cmd_render(args.inputs, args.style)
        except (OSError, ValueError, KeyError) as e:
            logger.error(f"{Fore.RED}Rendering failed: {e}")
            return 1
        return 0

    try:
        config = build_config(args)
    except (ValueError, OSError) as e:
        logger.error(f"{Fore.RED}Configuration rejected: {e}")
        return 2
    _log_configuration(config)
    run_dir = RunDirectory.create(config.output_dir, args.command, args.run_name)
    workers = args.max_workers if args.max_workers is not None else max_workers_from_env()

    try:
        if args.command == "run-quantum":
            results = await cmd_run_quantum(config, run_dir)
        elif args.command == "run-classical":
            results = await cmd_run_classical(config, run_dir)
        elif args.command == "scan":
            results = await cmd_scan(config, run_dir, workers, args.sweep_times)
        elif args.command == "entropy":
            results = await cmd_entropy(config, run_dir, workers)
        else:
            results = await cmd_kruskal(config, run_dir)
    except KeyboardInterrupt:
        logger.info(f"{Fore.YELLOW}Interrupted")
        run_dir.write_manifest(config.to_dict(), "interrupted")
        return 130
    except (HysteresisError, ValueError) as e:
        logger.error(f"{Fore.RED}Fatal error: {e}")
        run_dir.write_manifest(config.to_dict(), "failed", error=f"{type(e).__name__}: {e}")
        return 1
    run_dir.write_manifest(config.to_dict(), "ok", results)
    logger.info(f"{Fore.GREEN}Done: {run_dir.path}")
    return 0


def main(argv: Optional[List[str]] = None) -> None:
    args = parse_args(argv)
    setup_logging(args.debug)
    sys.exit(asyncio.run(run(args)))


if __name__ == "__main__":
    main()
