"""Run the service: ``python -m embed_sidecar`` or the ``embed-sidecar`` script.

Configuration comes from the environment: MODEL_NAME (default hashed-512),
LISTEN_ADDR (default 127.0.0.1:8800), MAX_BATCH (default 32).
"""
import logging

import uvicorn

from embed_sidecar.app import create_app
from embed_sidecar.config import SidecarConfig


def main() -> None:
    logging.basicConfig(level=logging.INFO)
    config = SidecarConfig.from_env()
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
