import pytest

from docfactory import doc, job
from rankattack.embeddings import TfIdfBackend
from rankattack.text import Document


@pytest.fixture
def tiny_corpus() -> list[Document]:
    return [
        doc("r1", "python developer with flask and sql experience"),
        doc("r2", "java engineer spring hibernate sql"),
        doc("r3", "frontend developer react javascript css"),
        job("j1", "looking for python flask developer with sql skills"),
    ]


@pytest.fixture
def tiny_backend(tiny_corpus) -> TfIdfBackend:
    return TfIdfBackend.fit(tiny_corpus)
