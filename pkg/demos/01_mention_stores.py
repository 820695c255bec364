"""Build a mention store, round-trip it through the binary format, and slice
layers.

A mention store holds one contextualized vector per (word, mention, layer).
Everything downstream -- filtering, aggregation, evaluation -- reads these
stores, so extraction runs once and experiments iterate cheaply.
"""

import tempfile
from pathlib import Path

import numpy as np

from mentionvec import (
    MentionStore,
    average_first_layers,
    read_store,
    slice_layer,
    write_store,
)

rng = np.random.default_rng(7)
words = ["banana", "sardine", "typewriter"]

print("Building a store: 3 words, 4 mentions each, layers [1, 2, 3], dim 6")
items = []
for i, word in enumerate(words):
    sentence_ids = rng.integers(0, 10_000, size=4)
    vectors = rng.standard_normal((4, 3, 6)).astype(np.float32)
    items.append((word, [int(s) for s in sentence_ids], vectors))
store = MentionStore.build(items, layer_indices=[1, 2, 3], masked=True)
print(store)

workdir = Path(tempfile.mkdtemp())
path = workdir / "demo.mvs"
write_store(store, path)
print(f"\nWrote {path.stat().st_size} bytes to {path}")

back = read_store(path)
print("Round-trip equal:", back == store)
print("Vector block bit-identical:", back.vectors.tobytes() == store.vectors.tobytes())

print("\nSlicing to the last layer (what the plain averaging strategies consume):")
last = slice_layer(store, 3)
print(last)

print("\nAveraging the first 2 layers per mention (layer-prefix pooling):")
prefix = average_first_layers(store, 2)
manual = store.vectors[:, :2, :].mean(axis=1)
print("matches manual mean:", np.allclose(prefix.vectors[:, 0, :], manual, atol=1e-6))

print("\nPer-word access:")
for word in words:
    vecs = last.mention_vectors(word)
    print(f"  {word}: {vecs.shape[0]} mentions, first vector {np.round(vecs[0], 3)}")
