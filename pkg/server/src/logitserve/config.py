"""Server configuration."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ServerConfig:
    """Settings for one model-serving process.

    ``model`` is a Hugging Face checkpoint id or a local directory.
    ``max_context`` caps prompt + generated length per request; pick it
    at least as large as your longest prompt plus the client's
    generation budget, or long requests will be rejected with 400.  The
    engine additionally clamps it to the model's own position limit.
    """

    model: str
    device: str = "cpu"
    max_context: int = 1024
    port: int = 8901
    host: str = "127.0.0.1"

    def __post_init__(self) -> None:
        if not self.model:
            raise ValueError("model must be a checkpoint id or path")
        if not self.device:
            raise ValueError("device must be non-empty")
        if self.max_context < 1:
            raise ValueError(f"max_context must be >= 1, got {self.max_context}")
        if not 0 <= self.port <= 65535:
            raise ValueError(f"port out of range: {self.port}")
