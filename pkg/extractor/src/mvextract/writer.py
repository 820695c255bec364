"""Standalone writer for the binary mention-store wire format.

Layout (little-endian): magic "MVS1"; u8 version = 1; u8 masked flag;
u16 reserved zero; u32 dim; u32 layer_count; layer_count ascending u32 layer
indices; u64 word_count; per word a u16-length UTF-8 surface, u32
mention_count and mention_count u64 sentence ids; then the float32 vector
block nested word -> mention -> layer -> dim.

Deliberately independent of the consumer package: the file format is the
interface between extraction and analysis.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"MVS1"
FORMAT_VERSION = 1


@dataclass
class WordBlock:
    surface: str
    sentence_ids: list[int]
    vectors: np.ndarray  # (n_mentions, n_layers, dim) float32


def write_mention_store(
    path, words: list[WordBlock], layer_indices: list[int], masked: bool
) -> None:
    if not words:
        raise ValueError("refusing to write an empty store")
    layer_indices = [int(l) for l in layer_indices]
    if any(l < 1 for l in layer_indices) or any(
        b <= a for a, b in zip(layer_indices, layer_indices[1:])
    ):
        raise ValueError(f"bad layer indices: {layer_indices}")
    dim = int(words[0].vectors.shape[2])
    seen = set()
    for w in words:
        if w.surface in seen:
            raise ValueError(f"duplicate surface {w.surface!r}")
        seen.add(w.surface)
        expected = (len(w.sentence_ids), len(layer_indices), dim)
        if w.vectors.shape != expected:
            raise ValueError(
                f"{w.surface!r}: vector shape {w.vectors.shape} != {expected}"
            )
        if len(w.sentence_ids) == 0:
            raise ValueError(f"{w.surface!r} has no mentions")
        if not np.isfinite(w.vectors).all():
            raise ValueError(f"{w.surface!r} has non-finite vectors")

    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<BBH", FORMAT_VERSION, int(masked), 0))
        f.write(struct.pack("<II", dim, len(layer_indices)))
        f.write(struct.pack(f"<{len(layer_indices)}I", *layer_indices))
        f.write(struct.pack("<Q", len(words)))
        for w in words:
            raw = w.surface.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(struct.pack("<I", len(w.sentence_ids)))
            f.write(np.asarray(w.sentence_ids, dtype="<u8").tobytes())
        for w in words:
            f.write(np.ascontiguousarray(w.vectors, dtype="<f4").tobytes())
    os.replace(tmp, path)


def write_text_embedding(path, entries: dict[str, np.ndarray]) -> None:
    """One ``word v1 ... vd`` line per word; float32 values round-trip exactly."""
    if not entries:
        raise ValueError("no embedding rows to write")
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as f:
        for word, vec in entries.items():
            if any(ch.isspace() for ch in word):
                raise ValueError(f"word with whitespace cannot be serialized: {word!r}")
            vals = " ".join(f"{float(v):.9g}" for v in np.asarray(vec, dtype=np.float32))
            f.write(f"{word} {vals}\n")
    os.replace(tmp, path)
