import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from rodiac.dataset import build_char_vocab
from rodiac.embeddings import EmbeddingTable
from rodiac.textnorm import make_sentence, normalize

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def load_romanian_corpus() -> list[str]:
    with open(os.path.join(DATA_DIR, "romanian_50.txt"), encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]


def random_embeddings_for(sentences, dim=16, seed=0) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    words = sorted({t.stripped_lower for s in sentences for t in s.tokens})
    return EmbeddingTable(
        dim=dim, entries={w: rng.normal(size=dim).astype(np.float32) for w in words})


@pytest.fixture(scope="session")
def romanian_sentences():
    return [make_sentence(normalize(s)) for s in load_romanian_corpus()]


@pytest.fixture(scope="session")
def small_vocab(romanian_sentences):
    return build_char_vocab(romanian_sentences)


@pytest.fixture(scope="session")
def small_embeddings(romanian_sentences):
    return random_embeddings_for(romanian_sentences, dim=16, seed=0)
