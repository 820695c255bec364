from __future__ import annotations

import numpy as np
import pytest

from mentionvec import MentionStore


def random_store(
    rng: np.random.Generator,
    n_words: int,
    max_mentions: int = 8,
    n_layers: int = 1,
    dim: int = 4,
    masked: bool = True,
    layer_indices=None,
) -> MentionStore:
    if layer_indices is None:
        layer_indices = list(range(1, n_layers + 1))
    items = []
    for i in range(n_words):
        n_mentions = int(rng.integers(1, max_mentions + 1))
        sids = rng.integers(0, 2**63, size=n_mentions, dtype=np.uint64)
        vecs = rng.standard_normal((n_mentions, len(layer_indices), dim)).astype(np.float32)
        items.append((f"word{i:04d}", [int(s) for s in sids], vecs))
    return MentionStore.build(items, layer_indices=layer_indices, masked=masked)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
