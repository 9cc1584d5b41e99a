import pytest
from fastapi.testclient import TestClient

from embed_sidecar.app import create_app
from embed_sidecar.config import SidecarConfig


@pytest.fixture(scope="session")
def client():
    """Client against the default (hashed-512) service, lifespan started."""
    with TestClient(create_app(SidecarConfig())) as c:
        yield c
