import json
import math

import pytest
import yaml

from pla.cli import main
from pla.motion import RolloutParams, rollout
from pla.reasoning import DrivingCommand
from pla.scene import norm3
from pla.pipeline import PLOT_FILES
from pla.scenario import load_frames
from runs import snapshot


@pytest.fixture
def frames(tmp_path):
    path = tmp_path / "in" / "frames.json"
    assert main(["gen", "--out", str(path), "--frame-count", "6"]) == 0
    return path


def test_gen_writes_frames(tmp_path, capsys):
    out = tmp_path / "g"
    assert main(["gen", "--out", str(out), "--seed", "5", "--frame-count", "3", "--sigma", "0", "--dropout", "0"]) == 0
    frames = load_frames(out / "frames.json")
    assert [f.frame_id for f in frames] == ["f00", "f01", "f02"]
    assert capsys.readouterr().out.strip() == str(out / "frames.json")


def test_gen_bad_params_exit_2(tmp_path):
    assert main(["gen", "--out", str(tmp_path), "--dropout", "2"]) == 2


def test_fuse_reference_frame(tmp_path):
    src = tmp_path / "sample.json"
    assert main(["gen", "--sample", "--out", str(src)]) == 0
    out = tmp_path / "run"
    assert main(["fuse", "--frames", str(src), "--out", str(out)]) == 0
    text = (out / "sample.fuse.txt").read_text()
    assert "distance_m: 33.20" in text and "partition: front-right" in text


def test_plan_http_without_key_is_config_error(tmp_path, frames, monkeypatch):
    monkeypatch.delenv("PLA_API_KEY", raising=False)
    monkeypatch.setenv("PLA_API_BASE", "http://127.0.0.1:9")
    out = tmp_path / "run"
    assert main(["fuse", "--frames", str(frames), "--out", str(out)]) == 0
    assert main(["plan", "--out", str(out), "--backend", "http"]) == 2
    assert not list(out.glob("*.prompt.json"))


def test_run_rule_backend(tmp_path, frames):
    out = tmp_path / "run"
    assert main(["run", "--frames", str(frames), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["frame_count"] == 6
    assert all(math.isfinite(v) for v in report["aggregates"].values() if v is not None)
    for name in PLOT_FILES:
        assert (out / name).read_text().startswith("<svg")
    for suffix in ("fuse.txt", "prompt.json", "response.txt", "command.json", "rollout.json"):
        assert (out / f"f03.{suffix}").is_file()


def test_stages_compose_to_run(tmp_path, frames):
    whole, staged = tmp_path / "whole", tmp_path / "staged"
    assert main(["run", "--frames", str(frames), "--out", str(whole)]) == 0
    for cmd in (["fuse", "--frames", str(frames)], ["plan"], ["rollout"], ["eval"]):
        assert main(cmd + ["--out", str(staged)]) == 0
    assert snapshot(whole) == snapshot(staged)


def test_rerun_stage_is_byte_identical(tmp_path, frames):
    out = tmp_path / "run"
    assert main(["run", "--frames", str(frames), "--out", str(out)]) == 0
    before = snapshot(out)
    assert main(["plan", "--out", str(out), "--workers", "1"]) == 0
    assert main(["rollout", "--out", str(out)]) == 0
    assert snapshot(out) == before


def test_replay_backend_reproduces_rule_run(tmp_path, frames):
    rule_out = tmp_path / "rule"
    assert main(["run", "--frames", str(frames), "--out", str(rule_out)]) == 0
    store = tmp_path / "store"
    store.mkdir()
    for path in rule_out.glob("*.response.txt"):
        (store / path.name.replace(".response", "")).write_bytes(path.read_bytes())
    replay_out = tmp_path / "replay"
    assert main(["run", "--frames", str(frames), "--out", str(replay_out), "--backend", "replay", "--replay-dir", str(store)]) == 0
    for name in ("f00.command.json", "f05.rollout.json", "frames.csv"):
        assert (replay_out / name).read_bytes() == (rule_out / name).read_bytes()


def test_frame_error_and_keep_going(tmp_path, frames):
    store = tmp_path / "store"
    store.mkdir()
    good = '{"speed_action":"maintain","steering_direction":"straight","steering_angle":0,"explanation":"ok"}'
    for k in range(6):
        (store / f"f{k:02d}.txt").write_text("I cannot help with that." if k == 2 else good)
    out = tmp_path / "strict"
    args = ["run", "--frames", str(frames), "--backend", "replay", "--replay-dir", str(store)]
    assert main(args + ["--out", str(out)]) == 1
    errors = json.loads((out / "plan.errors.json").read_text())
    assert list(errors) == ["f02"] and errors["f02"].startswith("MalformedResponse")
    assert not (out / "report.json").exists()

    out = tmp_path / "lenient"
    assert main(args + ["--out", str(out), "--keep-going"]) == 1
    report = json.loads((out / "report.json").read_text())
    assert report["frame_count"] == 5


def test_config_file(tmp_path, frames):
    cfg = tmp_path / "cfg" / "run.yaml"
    cfg.parent.mkdir()
    cfg.write_text(
        yaml.safe_dump(
            {
                "frames": str(frames),
                "out": "out",
                "workers": 2,
                "plots": False,
                "rollout": {"accel": 0.5},
                "task": {"task_text": "follow the front white car", "lane_info": "single lane"},
            }
        )
    )
    assert main(["run", "--config", str(cfg)]) == 0
    out = cfg.parent / "out"
    frame = load_frames(frames)[0]
    cmd = DrivingCommand(**json.loads((out / "f00.command.json").read_text()))
    expected = rollout(norm3(frame.ego.velocity), math.degrees(frame.ego.steer), cmd, RolloutParams(accel=0.5))
    assert json.loads((out / "f00.rollout.json").read_text()) == json.loads(json.dumps(expected.to_dict()))
    assert not (out / "speed_scatter.svg").exists()
    assert "follow the front white car" in (out / "f00.prompt.json").read_text()


@pytest.mark.parametrize(
    "doc",
    [{"bogus": 1}, {"backend": {"kind": "oracle"}}, {"rollout": {"dt": -1}}, {"frames": "missing.json"}, {"workers": 0}],
)
def test_bad_config_exit_2(tmp_path, doc):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(yaml.safe_dump(doc))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_missing_inputs_exit_2(tmp_path):
    assert main(["plan", "--out", str(tmp_path / "empty")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"version": "pla-frames/1", "frames": [{}]}')
    assert main(["fuse", "--frames", str(bad), "--out", str(tmp_path / "o")]) == 2
