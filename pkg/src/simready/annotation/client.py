"""Chat-completion clients: HTTP backend and a deterministic mock.

The live client targets an OpenAI-style chat completions endpoint configured
through SIMREADY_VLM_URL / SIMREADY_VLM_KEY. The mock replays canned responses
in order and records every request, which makes session flows testable and
powers the service's offline mode.
"""

from __future__ import annotations

import base64
import json
import mimetypes
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

ENV_VLM_URL = "SIMREADY_VLM_URL"
ENV_VLM_KEY = "SIMREADY_VLM_KEY"


class ChatClientError(Exception):
    """Transport or protocol failure talking to the chat backend."""


@dataclass(frozen=True)
class ChatMessage:
    """One message in a chat thread; images are file paths or URLs."""

    role: str
    text: str
    images: tuple[str, ...] = ()

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown chat role {self.role!r}")
        object.__setattr__(self, "images", tuple(self.images))

    def to_dict(self) -> dict:
        return {"role": self.role, "text": self.text, "images": list(self.images)}

    @classmethod
    def from_dict(cls, d: dict) -> "ChatMessage":
        return cls(d["role"], d["text"], tuple(d.get("images", ())))


class ChatClient(Protocol):
    def complete(self, messages: Sequence[ChatMessage]) -> str: ...


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    backoff_s: float = 1.0
    timeout_s: float = 120.0

    def __post_init__(self):
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")
        if self.backoff_s < 0 or self.timeout_s <= 0:
            raise ValueError("backoff_s must be >= 0 and timeout_s > 0")


def _image_payload(ref: str) -> dict:
    path = Path(ref)
    if path.is_file():
        mime = mimetypes.guess_type(path.name)[0] or "image/png"
        data = base64.b64encode(path.read_bytes()).decode("ascii")
        url = f"data:{mime};base64,{data}"
    else:
        url = ref
    return {"type": "image_url", "image_url": {"url": url}}


def _encode_message(m: ChatMessage) -> dict:
    content: list[dict] = [{"type": "text", "text": m.text}]
    content.extend(_image_payload(ref) for ref in m.images)
    return {"role": m.role, "content": content}


def _extract_text(payload: dict) -> str:
    try:
        content = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as e:
        raise ChatClientError(f"malformed completion payload: {e!r}") from e
    if isinstance(content, str):
        return content
    if isinstance(content, list):
        return "".join(part.get("text", "") for part in content if isinstance(part, dict))
    raise ChatClientError(f"unsupported content type {type(content).__name__}")


class HttpChatClient:
    """Chat client for an OpenAI-style /chat/completions endpoint."""

    def __init__(
        self,
        url: str | None = None,
        api_key: str | None = None,
        model: str = "gpt-4o",
        retry: RetryPolicy = RetryPolicy(),
    ):
        self.url = url or os.environ.get(ENV_VLM_URL, "")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_VLM_KEY, "")
        self.model = model
        self.retry = retry
        if not self.url:
            raise ChatClientError(
                f"no endpoint configured: pass url= or set {ENV_VLM_URL}"
            )

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        import httpx

        payload = {
            "model": self.model,
            "messages": [_encode_message(m) for m in messages],
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_error: Exception | None = None
        for attempt in range(self.retry.attempts):
            try:
                resp = httpx.post(
                    self.url, json=payload, headers=headers, timeout=self.retry.timeout_s
                )
                resp.raise_for_status()
                return _extract_text(resp.json())
            except (httpx.HTTPError, json.JSONDecodeError, ChatClientError) as e:
                last_error = e
                if attempt + 1 < self.retry.attempts:
                    time.sleep(self.retry.backoff_s * (2**attempt))
        raise ChatClientError(
            f"request failed after {self.retry.attempts} attempts: {last_error!r}"
        ) from last_error


@dataclass
class MockChatClient:
    """Replays canned responses in order; records every request it receives."""

    responses: list[str] = field(default_factory=list)
    requests: list[tuple[ChatMessage, ...]] = field(default_factory=list)

    @classmethod
    def from_dir(cls, fixtures_dir: str | Path) -> "MockChatClient":
        """Load responses from a directory, one file each, sorted by name."""
        root = Path(fixtures_dir)
        if not root.is_dir():
            raise ChatClientError(f"fixture directory not found: {root}")
        files = sorted(p for p in root.iterdir() if p.is_file())
        return cls(responses=[p.read_text() for p in files])

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        index = len(self.requests)
        self.requests.append(tuple(messages))
        if index >= len(self.responses):
            raise ChatClientError(
                f"mock response list exhausted after {len(self.responses)} requests"
            )
        return self.responses[index]


def client_from_env(
    mock_responses: Iterable[str] | None = None,
    mock_dir: str | Path | None = None,
) -> ChatClient:
    """Build a client: explicit mock data wins, else the configured endpoint."""
    if mock_responses is not None:
        return MockChatClient(responses=list(mock_responses))
    if mock_dir is not None:
        return MockChatClient.from_dir(mock_dir)
    return HttpChatClient()
