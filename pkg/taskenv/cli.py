#!/usr/bin/env python3
"""
Command-line interface: validate, simulate, analyse and batch-evaluate tasks
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from .analysis import (
    ActionGrid,
    DistanceConfig,
    TaskProfile,
    dimension_deltas,
    distance,
    distance_matrix,
    enumerate_task,
    monte_carlo,
    profile,
    write_distance_csv,
)
from .config import ConfigManager, Settings
from .controllers import BaseController, ControllerManager
from .errors import EnumerationCapExceeded, TaskEnvError
from .harness import BatchSpec, run_batch
from .simulator import SimConfig, run
from .taskdl import TaskDocument, check, load, serialize
from .tasks.variants import expand_variants
from .world import AgentBody

EXIT_OK = 0
EXIT_TASK_FAILED = 1
EXIT_USAGE = 2


def setup_logging(verbose: bool = False) -> None:
    """Setup logging configuration

    Args:
        verbose: Enable verbose logging
    """
    level = logging.INFO if verbose else logging.WARNING
    logging.basicConfig(
        level=level, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )


def _text_lines(data: Any, indent: int = 0) -> List[str]:
    pad = "  " * indent
    lines = []
    for key, value in data.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(_text_lines(value, indent + 1))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"{pad}{key}:")
            for item in value:
                lines.append(f"{pad}  -")
                lines.extend(_text_lines(item, indent + 2))
        elif isinstance(value, float):
            lines.append(f"{pad}{key}: {value:.6g}")
        else:
            lines.append(f"{pad}{key}: {value}")
    return lines


def format_output(data: Dict[str, Any], output_format: str) -> str:
    """Format output according to specified format

    Args:
        data: Data to format
        output_format: Output format (text, json)

    Returns:
        Formatted output string
    """
    if output_format == "json":
        return json.dumps(data, indent=2, ensure_ascii=False)
    return "\n".join(_text_lines(data))


def _parse_weights(text: Optional[str]) -> Dict[str, float]:
    if not text:
        return {}
    weights = {}
    for part in text.split(","):
        name, sep, value = part.partition("=")
        if not sep:
            raise ValueError(f"Weight {part!r} is not of the form name=value")
        weights[name.strip()] = float(value)
    return weights


def _grid(args: argparse.Namespace, body: AgentBody) -> ActionGrid:
    levels = tuple(float(v) for v in args.levels.split(","))
    actuators = [args.actuator] if args.actuator else list(body.actuator_names)
    return ActionGrid(levels={a: levels for a in actuators}, period=args.period)


def _sim_config(doc: TaskDocument, args: argparse.Namespace) -> SimConfig:
    return SimConfig.from_document(
        doc,
        delta=getattr(args, "delta", None),
        master_seed=getattr(args, "seed", None),
        horizon=getattr(args, "horizon", None),
        clamp_actuators=True if getattr(args, "clamp", False) else None,
    )


def _controller(spec: str, settings: Settings) -> BaseController:
    manager = ControllerManager(settings.controller_directory)
    manager.load_external_controllers()
    preset = settings.preset(spec)
    return manager.create(preset if preset is not None else spec)


def cmd_validate(args: argparse.Namespace, settings: Settings) -> int:
    text = Path(args.file).read_bytes()
    diagnostics = check(text)
    if diagnostics:
        for d in diagnostics:
            print(f"{args.file}:{d}", file=sys.stderr)
        return EXIT_USAGE
    doc = load(args.file)
    print(
        format_output(
            {
                "file": args.file,
                "valid": True,
                "world": doc.world.name,
                "tasks": list(doc.task_names),
                "variants": [v.name for v in doc.variants],
            },
            settings.output_format,
        )
    )
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    doc = load(args.file)
    task = doc.task(args.task) if args.task else doc.default_task
    cfg = _sim_config(doc, args)
    controller = _controller(args.controller, settings)
    try:
        history, status = run(doc, task, controller, cfg, args.run_index)
    finally:
        controller.close()
    if args.history:
        if args.history.endswith(".csv"):
            history.to_csv(args.history)
        else:
            history.to_jsonl(args.history)
    energy = task.energy.variable
    left = history.final_state[energy]
    print(
        format_output(
            {
                "task": task.name,
                "controller": args.controller,
                "status": status.outcome.value,
                "cause": status.cause.value if status.cause else None,
                "time": status.time,
                "energy_left": left,
                "energy_spent": history.initial_state[energy] - left,
                "steps": len(history),
            },
            settings.output_format,
        )
    )
    return EXIT_OK if status.is_success else EXIT_TASK_FAILED


def cmd_enumerate(args: argparse.Namespace, settings: Settings) -> int:
    doc = load(args.file)
    task = doc.task(args.task) if args.task else doc.default_task
    _, body = doc.resolve(task)
    grid = _grid(args, body)
    cfg = _sim_config(doc, args)
    workers = args.workers or settings.workers
    if args.samples:
        result = monte_carlo(doc, task, grid, cfg, args.samples, workers)
    else:
        cap = args.cap or settings.enumeration_cap
        try:
            result = enumerate_task(doc, task, grid, cfg, cap=cap, workers=workers)
        except EnumerationCapExceeded as e:
            logging.getLogger(__name__).info(f"{e}; sampling instead")
            result = monte_carlo(
                doc, task, grid, cfg, settings.monte_carlo_samples, workers
            )
    data = {"task": task.name, **result.to_dict(grid)}
    print(format_output(data, settings.output_format))
    return EXIT_OK


def cmd_profile(args: argparse.Namespace, settings: Settings) -> int:
    doc = load(args.file)
    task = doc.task(args.task) if args.task else doc.default_task
    _, body = doc.resolve(task)
    result = profile(
        doc,
        task,
        _grid(args, body),
        _sim_config(doc, args),
        cap=args.cap or settings.enumeration_cap,
        samples=settings.monte_carlo_samples,
        determinism_runs=settings.determinism_runs,
        workers=args.workers or settings.workers,
    )
    if args.output:
        result.save(args.output)
    print(format_output(result.model_dump(), settings.output_format))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, settings: Settings) -> int:
    profiles = [TaskProfile.load(path) for path in args.profiles]
    cfg = DistanceConfig(weights=_parse_weights(args.weights))
    if len(profiles) == 2:
        a, b = profiles
        data: Dict[str, Any] = {
            "a": a.task,
            "b": b.task,
            "deltas": dimension_deltas(a, b),
            "distance": distance(a, b, cfg),
        }
    else:
        matrix = distance_matrix(profiles, cfg)
        data = {
            "tasks": [p.task for p in profiles],
            "distances": {
                p.task: {q.task: float(matrix[i, j]) for j, q in enumerate(profiles)}
                for i, p in enumerate(profiles)
            },
        }
    if args.csv:
        write_distance_csv(args.csv, profiles, distance_matrix(profiles, cfg))
    print(format_output(data, settings.output_format))
    return EXIT_OK


def cmd_variants(args: argparse.Namespace, settings: Settings) -> int:
    doc = load(args.file)
    spec = doc.variant(args.variant) if args.variant else None
    if spec is None:
        if not doc.variants:
            raise ValueError(f"{args.file} defines no variants")
        spec = doc.variants[0]
    tasks = expand_variants(doc, spec, args.count, args.seed)
    derived = doc.with_tasks(tuple(tasks))
    if args.output:
        Path(args.output).write_text(serialize(derived), encoding="utf-8")
    print(
        format_output(
            {
                "variant": spec.name,
                "base": spec.base,
                "tasks": [{"name": t.name, **dict(t.tags)} for t in tasks],
            },
            settings.output_format,
        )
    )
    return EXIT_OK


def cmd_batch(args: argparse.Namespace, settings: Settings) -> int:
    spec = BatchSpec.load(args.spec)
    if args.workers:
        spec = spec.model_copy(update={"workers": args.workers})
    if args.output:
        spec = spec.model_copy(update={"output": args.output})
    result = run_batch(spec, settings)
    print(
        format_output(
            {
                "output": str(result.path),
                "records": len(result.records),
                "cells": [cell.model_dump() for cell in result.summary],
            },
            settings.output_format,
        )
    )
    return EXIT_OK


def _add_sim_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--task", help="Task name (default: first task)")
    parser.add_argument("--delta", type=float, help="Step size in seconds")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--horizon", type=float, help="Max simulated time")


def _add_grid_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--levels", required=True, help="Comma-separated action levels")
    parser.add_argument("--actuator", help="Grid actuator (default: every actuator)")
    parser.add_argument(
        "--period", type=float, default=0.5, help="Decision period in seconds"
    )
    parser.add_argument("--cap", type=int, help="Largest sequence count to enumerate")
    parser.add_argument("--workers", type=int, help="Worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taskenv",
        description="Model, simulate and analyse task-environments",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s validate samples/driving.taskdl
  %(prog)s simulate samples/driving.taskdl --controller constant:0.15 --delta 0.001
  %(prog)s enumerate samples/driving.taskdl --task drive_by_5 --levels 0,5,10
  %(prog)s compare base.profile.json friction.profile.json
  %(prog)s batch samples/batch.yaml
        """,
    )
    parser.add_argument("--config", help="Path to configuration file")
    parser.add_argument("--verbose", action="store_true", help="Enable verbose logging")
    parser.add_argument(
        "--output-format", choices=["text", "json"], help="Output format"
    )
    parser.add_argument(
        "--controllers-help", action="store_true", help="Show help for all controllers"
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("validate", help="Parse and check a .taskdl document")
    p.add_argument("file")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("simulate", help="Run one task with one controller")
    p.add_argument("file")
    _add_sim_flags(p)
    p.add_argument("--controller", default="constant", help="Controller spec or preset")
    p.add_argument(
        "--run-index", type=int, default=0, help="Run index for noise streams"
    )
    p.add_argument("--clamp", action="store_true", help="Clip out-of-domain commands")
    p.add_argument("--history", help="Write the history to a .jsonl or .csv file")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("enumerate", help="Count solving action sequences on a grid")
    p.add_argument("file")
    _add_sim_flags(p)
    _add_grid_flags(p)
    p.add_argument("--samples", type=int, help="Sample this many sequences instead")
    p.set_defaults(handler=cmd_enumerate)

    p = sub.add_parser("profile", help="Measure a task profile")
    p.add_argument("file")
    _add_sim_flags(p)
    _add_grid_flags(p)
    p.add_argument("--output", help="Write the profile as JSON")
    p.set_defaults(handler=cmd_profile)

    p = sub.add_parser("compare", help="Distance between task profiles")
    p.add_argument("profiles", nargs="+", help="Profile JSON files (at least two)")
    p.add_argument(
        "--weights", help="Dimension weights, e.g. success_ratio=2,min_time=1"
    )
    p.add_argument("--csv", help="Write the distance matrix as CSV")
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("variants", help="Generate task variants")
    p.add_argument("file")
    p.add_argument("--variant", help="Variant name (default: first)")
    p.add_argument("--count", type=int, help="Number of variants")
    p.add_argument("--seed", type=int, help="Generation seed")
    p.add_argument("--output", help="Write the document with the variants added")
    p.set_defaults(handler=cmd_variants)

    p = sub.add_parser("batch", help="Evaluate controllers on tasks in batch")
    p.add_argument("spec", help="Batch spec (YAML)")
    p.add_argument("--workers", type=int, help="Worker processes")
    p.add_argument("--output", help="Override the result path")
    p.set_defaults(handler=cmd_batch)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI

    Returns:
        0 on success, 1 when a simulated task fails, 2 on usage or
        validation errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if args.command == "compare" and len(args.profiles) < 2:
        parser.print_usage(sys.stderr)
        print("Error: compare needs at least two profiles", file=sys.stderr)
        return EXIT_USAGE

    verbose = args.verbose
    try:
        config_manager = ConfigManager(args.config)
        settings = config_manager.load_config()

        # Command line overrides file and environment
        if args.verbose:
            settings.verbose = True
        if args.output_format:
            settings.output_format = args.output_format
        verbose = settings.verbose

        setup_logging(settings.verbose)
        logger = logging.getLogger(__name__)

        if args.controllers_help:
            manager = ControllerManager(settings.controller_directory)
            manager.load_external_controllers()
            print(manager.get_controller_help())
            return EXIT_OK

        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE

        logger.info(f"Running {args.command}")
        return int(args.handler(args, settings))

    except (TaskEnvError, ValidationError, ValueError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        if verbose:
            import traceback

            traceback.print_exc()
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
