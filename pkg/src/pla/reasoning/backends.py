"""Reasoning backends: remote chat completion, rule follower, and replay."""

from __future__ import annotations

import base64
import logging
import mimetypes
import os
import threading
import time
from pathlib import Path
from typing import Callable, Optional, Protocol

import httpx

from ..errors import ConfigError
from .prompt import PromptBundle, TaskSpec, scene_from_prompt
from .rules import rule_plan

logger = logging.getLogger(__name__)

ENV_API_BASE = "PLA_API_BASE"
ENV_API_KEY = "PLA_API_KEY"
BACKEND_KINDS = ("http", "rule", "replay")


class BackendUnavailable(RuntimeError):
    pass


class AuthError(RuntimeError):
    pass


class ReplayMiss(KeyError):
    pass


class Backend(Protocol):
    kind: str

    def plan(self, prompt: PromptBundle) -> str: ...


def plan(backend: Backend, prompt: PromptBundle) -> str:
    """Send ``prompt`` to ``backend`` and return its raw text response."""
    return backend.plan(prompt)


class RuleBackend:
    """Offline stand-in for the language model.

    Reads the scene back out of the prompt, so it sees exactly what a remote
    model would see, and answers with the command JSON.
    """

    kind = "rule"

    def __init__(self, task: TaskSpec = TaskSpec()):
        self.task = task

    def plan(self, prompt: PromptBundle) -> str:
        return rule_plan(scene_from_prompt(prompt), self.task).to_json()


class ReplayBackend:
    """Serves stored responses from ``<directory>/<frame_id>.txt``."""

    kind = "replay"

    def __init__(self, directory):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise ConfigError(f"replay directory not found: {self.directory}")

    def plan(self, prompt: PromptBundle) -> str:
        frame_id = scene_from_prompt(prompt).frame_id
        path = self.directory / f"{frame_id}.txt"
        try:
            data = path.read_bytes()
        except FileNotFoundError:
            raise ReplayMiss(frame_id) from None
        return data.decode("utf-8")


def _image_part(ref: str, root: Optional[Path] = None) -> Optional[dict]:
    if ref.startswith(("http://", "https://", "data:")):
        return {"type": "image_url", "image_url": {"url": ref}}
    path = Path(ref)
    if root is not None and not path.is_absolute():
        path = root / path
    if not path.is_file():
        logger.debug("image %s not found; omitted from request", ref)
        return None
    mime = mimetypes.guess_type(path.name)[0] or "image/jpeg"
    payload = base64.b64encode(path.read_bytes()).decode("ascii")
    return {"type": "image_url", "image_url": {"url": f"data:{mime};base64,{payload}"}}


class HttpBackend:
    """Client for an OpenAI-style ``/chat/completions`` endpoint.

    Network failures, timeouts, 429 and 5xx responses are retried with
    exponential backoff; 401/403 raise :class:`AuthError` immediately.  A
    semaphore caps the number of requests in flight across threads.
    """

    kind = "http"

    def __init__(
        self,
        base_url: Optional[str],
        api_key: Optional[str],
        model: str = "gpt-4.1",
        timeout: float = 60.0,
        retries: int = 2,
        backoff: float = 1.0,
        max_in_flight: int = 4,
        temperature: float = 0.0,
        image_root=None,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if not api_key:
            raise ConfigError(f"http backend needs an API key (set {ENV_API_KEY})")
        if not base_url:
            raise ConfigError(f"http backend needs a base URL (set {ENV_API_BASE})")
        if max_in_flight < 1 or retries < 0 or timeout <= 0:
            raise ConfigError("http backend: need max_in_flight >= 1, retries >= 0, timeout > 0")
        self.url = base_url.rstrip("/") + "/chat/completions"
        self.model = model
        self.retries = retries
        self.backoff = backoff
        self.temperature = temperature
        self.image_root = Path(image_root) if image_root is not None else None
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._client = httpx.Client(
            timeout=timeout,
            transport=transport,
            headers={"Authorization": f"Bearer {api_key}"},
        )

    @classmethod
    def from_env(cls, **kwargs) -> "HttpBackend":
        kwargs.setdefault("base_url", os.environ.get(ENV_API_BASE))
        return cls(api_key=os.environ.get(ENV_API_KEY), **kwargs)

    def request_body(self, prompt: PromptBundle) -> dict:
        content = [{"type": "text", "text": prompt.user_text}]
        for name, ref in prompt.image_refs:
            part = _image_part(ref, self.image_root)
            if part is not None:
                content.append({"type": "text", "text": f"[{name}]"})
                content.append(part)
        return {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": content},
            ],
        }

    def plan(self, prompt: PromptBundle) -> str:
        body = self.request_body(prompt)
        last_error = "no attempt made"
        for attempt in range(self.retries + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                with self._slots:
                    response = self._client.post(self.url, json=body)
            except httpx.TransportError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                logger.warning("request to %s failed (attempt %d): %s", self.url, attempt + 1, last_error)
                continue
            if response.status_code in (401, 403):
                raise AuthError(f"credentials rejected ({response.status_code})")
            if response.status_code == 429 or response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
                logger.warning("request to %s returned %s (attempt %d)", self.url, last_error, attempt + 1)
                continue
            if response.status_code != 200:
                raise BackendUnavailable(f"HTTP {response.status_code}: {response.text[:200]}")
            try:
                content = response.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendUnavailable(f"unexpected response payload: {exc!r}") from None
            if not isinstance(content, str):
                raise BackendUnavailable("response message carries no text content")
            return content
        raise BackendUnavailable(f"{self.url} unavailable after {self.retries + 1} attempts: {last_error}")

    def close(self) -> None:
        self._client.close()


def make_backend(kind: str, task: TaskSpec = TaskSpec(), **settings) -> Backend:
    """Construct a backend by kind.  Credentials come from the environment."""
    if kind == "rule":
        return RuleBackend(task)
    if kind == "replay":
        if "replay_dir" not in settings or settings["replay_dir"] is None:
            raise ConfigError("replay backend needs replay_dir")
        return ReplayBackend(settings["replay_dir"])
    if kind == "http":
        allowed = {"model", "base_url", "timeout", "retries", "backoff", "max_in_flight", "temperature", "image_root", "transport"}
        return HttpBackend.from_env(**{k: v for k, v in settings.items() if k in allowed and v is not None})
    raise ConfigError(f"unknown backend kind {kind!r}; expected one of {BACKEND_KINDS}")
