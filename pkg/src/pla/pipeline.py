"""Pipeline stages over a run directory.

Each stage reads the previous stage's per-frame artifacts from the run
directory and writes its own as ``<frame_id>.<stage>.<ext>``.  Frames run on
a thread pool; results are written in frame order.
"""

from __future__ import annotations

import json
import logging
import math
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from .config import RunConfig
from .errors import ConfigError
from .evaluation import FrameRecord, emit_heatmap, emit_scatter, evaluate_run, write_report
from .motion import RolloutParams, Trajectory, rollout
from .perception import FusionConfig, cluster_radar, fuse_frame
from .reasoning import Backend, TaskSpec, build_prompt, make_backend, parse_command, plan
from .reasoning.command import DrivingCommand
from .scenario import FrameBundle, dumps_frames, generate_following_scenario, load_frames, save_frames
from .scene import norm3, parse_scene, serialize_scene

logger = logging.getLogger(__name__)

FRAMES_FILE = "frames.json"
PLOT_FILES = ("speed_scatter.svg", "steering_scatter.svg", "steering_heatmap.svg", "ade_heatmap.svg", "fde_heatmap.svg")


class FrameError(RuntimeError):
    def __init__(self, frame_id: str, stage: str, error: BaseException):
        self.frame_id = frame_id
        self.stage = stage
        self.error = error
        super().__init__(f"frame {frame_id}: {stage}: {type(error).__name__}: {error}")


@dataclass
class StageResult:
    stage: str
    done: List[str] = field(default_factory=list)
    errors: Dict[str, str] = field(default_factory=dict)


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _run_frames(
    stage: str,
    frames: Sequence[FrameBundle],
    work: Callable[[FrameBundle], None],
    out: Path,
    workers: int,
    keep_going: bool,
    skip: Sequence[str] = (),
) -> StageResult:
    result = StageResult(stage)
    todo = [f for f in frames if f.frame_id not in set(skip)]

    def guarded(frame: FrameBundle) -> Optional[BaseException]:
        try:
            work(frame)
        except ConfigError:
            raise
        except Exception as exc:  # noqa: BLE001 -- recorded per frame
            return exc
        return None

    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(guarded, todo))
    for frame, exc in zip(todo, outcomes):
        if exc is None:
            result.done.append(frame.frame_id)
        else:
            result.errors[frame.frame_id] = f"{type(exc).__name__}: {exc}"
    errors_path = out / f"{stage}.errors.json"
    if result.errors:
        _write(errors_path, _dump(result.errors))
        first = next(iter(result.errors))
        logger.error("%s: %d frame(s) failed, first %s: %s", stage, len(result.errors), first, result.errors[first])
        if not keep_going:
            exc = outcomes[[f.frame_id for f in todo].index(first)]
            raise FrameError(first, stage, exc)
    elif errors_path.exists():
        errors_path.unlink()
    return result


def fuse_stage(frames, out, fusion: FusionConfig = FusionConfig(), workers=1, keep_going=False, skip=()):
    out = Path(out)

    def work(frame: FrameBundle) -> None:
        objects = cluster_radar(frame.radar_points, fusion)
        scene = fuse_frame(
            (frame.ego.position, frame.ego.yaw),
            frame.ego.velocity,
            frame.lidar_detections,
            objects,
            fusion,
            frame.ego.dimensions,
            frame.frame_id,
        )
        _write(out / f"{frame.frame_id}.fuse.txt", serialize_scene(scene))

    return _run_frames("fuse", frames, work, out, workers, keep_going, skip)


def plan_stage(frames, out, backend: Backend, task: TaskSpec = TaskSpec(), workers=1, keep_going=False, skip=()):
    out = Path(out)

    def work(frame: FrameBundle) -> None:
        fid = frame.frame_id
        scene_path = out / f"{fid}.fuse.txt"
        if not scene_path.is_file():
            raise FileNotFoundError(f"missing {scene_path.name}; run the fuse stage first")
        scene = parse_scene(scene_path.read_text(encoding="utf-8"))
        prompt = build_prompt(scene, task, frame.camera_images)
        _write(out / f"{fid}.prompt.json", _dump(prompt.to_dict()))
        raw = plan(backend, prompt)
        _write(out / f"{fid}.response.txt", raw)
        command = parse_command(raw)
        _write(out / f"{fid}.command.json", _dump(command.to_dict()))

    return _run_frames("plan", frames, work, out, workers, keep_going, skip)


def rollout_stage(frames, out, params: RolloutParams = RolloutParams(), commands_dir=None, workers=1, keep_going=False, skip=()):
    out = Path(out)
    commands_dir = Path(commands_dir) if commands_dir is not None else out

    def work(frame: FrameBundle) -> None:
        fid = frame.frame_id
        path = commands_dir / f"{fid}.command.json"
        if not path.is_file():
            raise FileNotFoundError(f"missing {path.name}; run the plan stage first")
        data = json.loads(path.read_text(encoding="utf-8"))
        command = DrivingCommand(data["speed_action"], data["steering_direction"], data["steering_angle"], data["explanation"])
        traj = rollout(norm3(frame.ego.velocity), math.degrees(frame.ego.steer), command, params)
        _write(out / f"{fid}.rollout.json", _dump(traj.to_dict()))

    return _run_frames("rollout", frames, work, out, workers, keep_going, skip)


def _ground_truth_trajectory(frame: FrameBundle, pred: Trajectory) -> Trajectory:
    gt = frame.ground_truth
    dt = pred.waypoints[0].t if pred.waypoints else 0.1
    return Trajectory.from_xy(gt.waypoints, dt=dt)


def _plots(report, frames_by_id) -> Dict[str, str]:
    rows = report.frames
    path = [frames_by_id[r["frame_id"]].ego.position[:2] for r in rows]
    return {
        "speed_scatter.svg": emit_scatter([r["speed_pred"] for r in rows], [r["speed_gt"] for r in rows], "speed (m/s)"),
        "steering_scatter.svg": emit_scatter([r["steer_pred"] for r in rows], [r["steer_gt"] for r in rows], "steering angle (deg)"),
        "steering_heatmap.svg": emit_heatmap(path, [r["steer_pred"] for r in rows], "predicted steering angle (deg)"),
        "ade_heatmap.svg": emit_heatmap(path, [r["ade"] for r in rows], "ADE (m)"),
        "fde_heatmap.svg": emit_heatmap(path, [r["fde"] for r in rows], "FDE (m)"),
    }


def eval_stage(run_dir, out=None, frames=None, backend_kind="unknown", config_hash="", plots=True, keep_going=False):
    """Score rollouts in ``run_dir`` against frame ground truth."""
    run_dir = Path(run_dir)
    out = Path(out) if out is not None else run_dir
    out.mkdir(parents=True, exist_ok=True)
    if frames is None:
        frames = load_frames(run_dir / FRAMES_FILE)
    records, errors = [], {}
    for frame in frames:
        fid = frame.frame_id
        if frame.ground_truth is None:
            continue
        try:
            pred = Trajectory.from_dict(json.loads((run_dir / f"{fid}.rollout.json").read_text(encoding="utf-8")))
            raw_path = run_dir / f"{fid}.response.txt"
            raw = raw_path.read_text(encoding="utf-8") if raw_path.is_file() else ""
            gt = _ground_truth_trajectory(frame, pred)
            records.append(
                FrameRecord(
                    frame_id=fid,
                    predicted=pred,
                    ground_truth=gt,
                    speed_pred=pred.waypoints[-1].speed,
                    speed_gt=frame.ground_truth.speed,
                    steer_pred=pred.steer[-1] if pred.steer else 0.0,
                    steer_gt=frame.ground_truth.steering_deg,
                    raw_response=raw,
                )
            )
        except Exception as exc:  # noqa: BLE001 -- recorded per frame
            errors[fid] = f"{type(exc).__name__}: {exc}"
    errors_path = out / "eval.errors.json"
    if errors:
        _write(errors_path, _dump(errors))
        if not keep_going:
            first = next(iter(errors))
            raise FrameError(first, "eval", RuntimeError(errors[first]))
    elif errors_path.exists():
        errors_path.unlink()
    report = evaluate_run(records, backend=backend_kind, config_hash=config_hash)
    write_report(report, out)
    if plots:
        by_id = {f.frame_id: f for f in frames}
        for name, svg in _plots(report, by_id).items():
            _write(out / name, svg)
    return report, errors


def snapshot_frames(frames: Sequence[FrameBundle], out: Path, source: Optional[Path] = None) -> None:
    """Keep a copy of the input frames in the run directory."""
    out.mkdir(parents=True, exist_ok=True)
    target = out / FRAMES_FILE
    if source is not None and source.resolve() == target.resolve():
        return
    if source is not None:
        shutil.copyfile(source, target)
    else:
        save_frames(frames, target)


def backend_from_config(config: RunConfig, image_root=None) -> Backend:
    b = config.backend
    return make_backend(
        b.kind,
        config.task,
        model=b.model,
        base_url=b.base_url,
        timeout=b.timeout,
        retries=b.retries,
        max_in_flight=b.max_in_flight,
        replay_dir=b.replay_dir,
        image_root=image_root,
    )


def run_pipeline(config: RunConfig):
    """Run every stage; returns (report, {stage: errors})."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    if config.frames is not None:
        source = Path(config.frames)
        frames = load_frames(source)
    else:
        source = None
        frames = generate_following_scenario(config.scenario)
    # Construct the backend before any stage so configuration errors surface first.
    backend = backend_from_config(config, image_root=source.parent if source is not None else out)
    snapshot_frames(frames, out, source)

    failed: List[str] = []
    errors: Dict[str, Dict[str, str]] = {}
    common = dict(workers=config.workers, keep_going=config.keep_going)
    for name, stage in (
        ("fuse", lambda skip: fuse_stage(frames, out, config.fusion, skip=skip, **common)),
        ("plan", lambda skip: plan_stage(frames, out, backend, config.task, skip=skip, **common)),
        ("rollout", lambda skip: rollout_stage(frames, out, config.rollout, skip=skip, **common)),
    ):
        result = stage(tuple(failed))
        if result.errors:
            errors[name] = result.errors
            failed.extend(result.errors)
    usable = [f for f in frames if f.frame_id not in set(failed)]
    report, eval_errors = eval_stage(
        out,
        frames=usable,
        backend_kind=config.backend.kind,
        config_hash=config.fingerprint(dumps_frames(frames)),
        plots=config.plots,
        keep_going=config.keep_going,
    )
    if eval_errors:
        errors["eval"] = eval_errors
    return report, errors
