from .backends import (
    AuthError,
    Backend,
    BackendUnavailable,
    HttpBackend,
    ReplayBackend,
    ReplayMiss,
    RuleBackend,
    make_backend,
    plan,
)
from .command import DrivingCommand, MalformedResponse, SchemaViolation, SpeedAction, SteeringDirection, parse_command
from .prompt import PromptBundle, TaskSpec, build_prompt, extract_scene_text, scene_from_prompt
from .rules import rule_plan

__all__ = [
    "AuthError",
    "Backend",
    "BackendUnavailable",
    "DrivingCommand",
    "HttpBackend",
    "MalformedResponse",
    "PromptBundle",
    "ReplayBackend",
    "ReplayMiss",
    "RuleBackend",
    "SchemaViolation",
    "SpeedAction",
    "SteeringDirection",
    "TaskSpec",
    "build_prompt",
    "extract_scene_text",
    "make_backend",
    "parse_command",
    "plan",
    "rule_plan",
    "scene_from_prompt",
]
