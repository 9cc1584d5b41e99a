"""Embedding microservice.

Serves POST /embed and GET /health over the same wire protocol the
ranking package's remote backend speaks. The two packages share nothing
but that protocol; either side can be swapped for any conforming
implementation.
"""

from embed_sidecar.app import create_app
from embed_sidecar.config import SidecarConfig
from embed_sidecar.encoder import HashedEncoder, load_encoder

__all__ = ["SidecarConfig", "HashedEncoder", "create_app", "load_encoder"]
