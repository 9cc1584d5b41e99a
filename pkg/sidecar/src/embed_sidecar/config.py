import os
from dataclasses import dataclass
from typing import Mapping

DEFAULT_MODEL = "hashed-512"
DEFAULT_LISTEN = "127.0.0.1:8800"
DEFAULT_MAX_BATCH = 32
MAX_TEXT_BYTES = 100 * 1024


@dataclass(frozen=True)
class SidecarConfig:
    """Service settings; read once at startup, immutable afterwards."""

    model_name: str = DEFAULT_MODEL
    listen_address: str = DEFAULT_LISTEN
    max_batch: int = DEFAULT_MAX_BATCH
    max_text_bytes: int = MAX_TEXT_BYTES

    def __post_init__(self) -> None:
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")
        if self.max_text_bytes < 1:
            raise ValueError(f"max_text_bytes must be >= 1, got {self.max_text_bytes}")
        self.port  # validates the address eagerly

    @property
    def host(self) -> str:
        host, _, _ = self.listen_address.rpartition(":")
        if not host:
            raise ValueError(f"listen_address must be host:port, got {self.listen_address!r}")
        return host

    @property
    def port(self) -> int:
        _, _, port = self.listen_address.rpartition(":")
        try:
            value = int(port)
        except ValueError:
            raise ValueError(f"listen_address must end in a port, got {self.listen_address!r}")
        if not 0 <= value <= 65535:
            raise ValueError(f"port out of range: {value}")
        return value

    @classmethod
    def from_env(cls, environ: Mapping[str, str] | None = None) -> "SidecarConfig":
        env = os.environ if environ is None else environ
        return cls(
            model_name=env.get("MODEL_NAME", DEFAULT_MODEL),
            listen_address=env.get("LISTEN_ADDR", DEFAULT_LISTEN),
            max_batch=int(env.get("MAX_BATCH", str(DEFAULT_MAX_BATCH))),
        )
