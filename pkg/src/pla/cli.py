"""Command line entry point: ``pla gen|fuse|plan|rollout|eval|run``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import BackendSettings, RunConfig, load_config
from .errors import ConfigError
from .pipeline import (
    FRAMES_FILE,
    FrameError,
    backend_from_config,
    eval_stage,
    fuse_stage,
    plan_stage,
    rollout_stage,
    run_pipeline,
    snapshot_frames,
)
from .scenario import FrameIOError, SchemaError, dumps_frames, generate_following_scenario, load_frames, sample_frame, save_frames

logger = logging.getLogger("pla")

EXIT_OK, EXIT_FRAME_ERROR, EXIT_CONFIG_ERROR = 0, 1, 2


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="run configuration (YAML or JSON)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--workers", type=int, help="frames processed in parallel")
    parser.add_argument("--keep-going", action="store_true", default=None, help="record per-frame errors and continue")
    parser.add_argument("--seed", type=int, help="scenario seed")
    parser.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pla", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate the synthetic following scenario")
    _common(p)
    p.add_argument("--frame-count", type=int)
    p.add_argument("--sigma", type=float, help="radar noise std-dev")
    p.add_argument("--dropout", type=float, help="per-object LiDAR dropout probability")
    p.add_argument("--sample", action="store_true", help="write the single reference frame instead")

    p = sub.add_parser("fuse", help="write <frame_id>.fuse.txt scene descriptions")
    _common(p)
    p.add_argument("--frames", help="frame bundle JSON")

    p = sub.add_parser("plan", help="prompts, raw responses and parsed commands")
    _common(p)
    p.add_argument("--frames", help="frame bundle JSON (default: <out>/frames.json)")
    p.add_argument("--backend", choices=("http", "rule", "replay"))
    p.add_argument("--replay-dir")
    p.add_argument("--model")

    p = sub.add_parser("rollout", help="roll commands out into trajectories")
    _common(p)
    p.add_argument("--frames", help="frame bundle JSON (default: <out>/frames.json)")
    p.add_argument("--commands", help="directory holding <frame_id>.command.json (default: --out)")

    p = sub.add_parser("eval", help="metrics report and plots")
    _common(p)
    p.add_argument("--run-dir", help="directory with stage outputs (default: --out)")
    p.add_argument("--frames", help="frame bundle JSON (default: <run-dir>/frames.json)")
    p.add_argument("--no-plots", action="store_true")

    p = sub.add_parser("run", help="full pipeline")
    _common(p)
    p.add_argument("--frames", help="frame bundle JSON (default: generate from the config scenario)")
    p.add_argument("--backend", choices=("http", "rule", "replay"))
    p.add_argument("--replay-dir")
    return parser


def _resolve(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    changes = {}
    for name in ("out", "workers", "keep_going"):
        value = getattr(args, name, None)
        if value is not None:
            changes[name] = value
    if getattr(args, "frames", None):
        changes["frames"] = args.frames
    if args.seed is not None:
        changes["scenario"] = dataclasses.replace(config.scenario, seed=args.seed)
    backend = {}
    for arg, key in (("backend", "kind"), ("replay_dir", "replay_dir"), ("model", "model")):
        if getattr(args, arg, None) is not None:
            backend[key] = getattr(args, arg)
    if backend:
        changes["backend"] = BackendSettings(**{**dataclasses.asdict(config.backend), **backend})
    return dataclasses.replace(config, **changes)


def _frames_for(config: RunConfig, out: Path):
    path = Path(config.frames) if config.frames else out / FRAMES_FILE
    if not path.is_file():
        raise ConfigError(f"frames file not found: {path}")
    return path, load_frames(path)


def _cmd_gen(args, config: RunConfig) -> int:
    target = Path(config.out or ".")
    if target.suffix != ".json":
        target = target / FRAMES_FILE
    target.parent.mkdir(parents=True, exist_ok=True)
    if args.sample:
        frames = [sample_frame()]
    else:
        changes = {}
        if args.frame_count is not None:
            changes["frame_count"] = args.frame_count
        if args.sigma is not None:
            changes["radar_sigma"] = args.sigma
        if args.dropout is not None:
            changes["dropout"] = args.dropout
        try:
            params = dataclasses.replace(config.scenario, **changes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        frames = generate_following_scenario(params)
    save_frames(frames, target)
    print(target)
    return EXIT_OK


def _cmd_fuse(args, config: RunConfig) -> int:
    out = Path(config.out)
    source, frames = _frames_for(config, out)
    snapshot_frames(frames, out, source)
    fuse_stage(frames, out, config.fusion, workers=config.workers, keep_going=config.keep_going)
    return EXIT_OK


def _cmd_plan(args, config: RunConfig) -> int:
    out = Path(config.out)
    backend = backend_from_config(config, image_root=Path(config.frames).parent if config.frames else out)
    _, frames = _frames_for(config, out)
    plan_stage(frames, out, backend, config.task, workers=config.workers, keep_going=config.keep_going)
    return EXIT_OK


def _cmd_rollout(args, config: RunConfig) -> int:
    out = Path(config.out)
    _, frames = _frames_for(config, out)
    rollout_stage(frames, out, config.rollout, commands_dir=args.commands, workers=config.workers, keep_going=config.keep_going)
    return EXIT_OK


def _cmd_eval(args, config: RunConfig) -> int:
    run_dir = Path(args.run_dir or config.out)
    _, frames = _frames_for(config, run_dir)
    eval_stage(
        run_dir,
        out=config.out,
        frames=frames,
        backend_kind=config.backend.kind,
        config_hash=config.fingerprint(dumps_frames(frames)),
        plots=config.plots and not args.no_plots,
        keep_going=config.keep_going,
    )
    return EXIT_OK


def _cmd_run(args, config: RunConfig) -> int:
    _, errors = run_pipeline(config)
    return EXIT_FRAME_ERROR if errors else EXIT_OK


COMMANDS = {
    "gen": _cmd_gen,
    "fuse": _cmd_fuse,
    "plan": _cmd_plan,
    "rollout": _cmd_rollout,
    "eval": _cmd_eval,
    "run": _cmd_run,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _resolve(args)
        if args.command == "gen" and args.out is None and not args.config:
            config = dataclasses.replace(config, out=".")
        return COMMANDS[args.command](args, config)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG_ERROR
    except (SchemaError, FrameIOError) as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG_ERROR
    except FrameError as exc:
        logger.error("%s", exc)
        return EXIT_FRAME_ERROR


if __name__ == "__main__":
    sys.exit(main())
