"""Mention-vector data model and on-disk formats.

A mention store holds, for every word in a vocabulary, the contextualized
vectors collected from sampled corpus mentions of that word, with one vector
per requested model layer.  The store is immutable after construction and is
the single interchange point between model-side extraction and everything
downstream (filtering, aggregation, evaluation).

Binary store format (little-endian)::

    bytes 0-3   magic "MVS1"
    byte  4     format version (1)
    byte  5     masked flag (0/1)
    bytes 6-7   reserved, zero
    u32         dim
    u32         layer_count
    u32 x layer_count   layer indices, strictly ascending
    u64         word_count
    per word:
        u16     surface byte length
        ...     surface, UTF-8
        u32     mention_count
        u64 x mention_count   sentence ids
    vector block: for each word, mention, layer (in that nesting order),
        dim float32 values

Text embedding format: one record per line, ``word v1 v2 ... vd``,
UTF-8, space-separated, '.'-decimal floats.
"""

from __future__ import annotations

import logging
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import StoreFormatError

logger = logging.getLogger(__name__)

MAGIC = b"MVS1"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class WordEntry:
    """One vocabulary word with provenance for its sampled mentions."""

    surface: str
    sentence_ids: tuple[int, ...]

    def __post_init__(self):
        if not self.surface:
            raise ValueError("word surface must be non-empty")
        if len(self.surface.encode("utf-8")) > 0xFFFF:
            raise ValueError(f"word surface too long: {self.surface[:32]!r}...")
        if len(self.sentence_ids) == 0:
            raise ValueError(f"word {self.surface!r} has no mentions")
        for sid in self.sentence_ids:
            if not 0 <= sid < 2**64:
                raise ValueError(f"sentence id {sid} out of u64 range for {self.surface!r}")

    @property
    def mention_count(self) -> int:
        return len(self.sentence_ids)


class MentionStore:
    """Immutable collection of per-word mention vectors with a layer axis.

    ``vectors`` is a float32 array of shape (total_mentions, n_layers, dim);
    mentions are laid out word-major, in ``words`` order.
    """

    def __init__(self, dim, layer_indices, masked, words, vectors):
        self.dim = int(dim)
        self.layer_indices = tuple(int(l) for l in layer_indices)
        self.masked = bool(masked)
        self.words = tuple(words)
        vectors = np.ascontiguousarray(vectors, dtype=np.float32)
        self.vectors = vectors

        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if not self.layer_indices:
            raise ValueError("layer_indices must be non-empty")
        if any(l <= 0 for l in self.layer_indices):
            raise ValueError("layer indices must be positive")
        if any(b <= a for a, b in zip(self.layer_indices, self.layer_indices[1:])):
            raise ValueError("layer indices must be strictly increasing")
        if not self.words:
            raise ValueError("empty store")
        surfaces = [w.surface for w in self.words]
        if len(set(surfaces)) != len(surfaces):
            raise ValueError("duplicate word surface")

        counts = np.array([w.mention_count for w in self.words], dtype=np.int64)
        total = int(counts.sum())
        expected = (total, len(self.layer_indices), self.dim)
        if vectors.shape != expected:
            raise ValueError(f"vector block shape {vectors.shape} != expected {expected}")
        if not np.isfinite(vectors).all():
            raise ValueError("non-finite vector value")

        self._counts = counts
        self._offsets = np.concatenate([[0], np.cumsum(counts)])
        self._index = {s: i for i, s in enumerate(surfaces)}
        self.vectors.setflags(write=False)

    @classmethod
    def build(cls, items, layer_indices, masked):
        """Assemble a store from (surface, sentence_ids, vectors) triples.

        Per-word vectors may be (n_mentions, n_layers, dim) or, for
        single-layer stores, (n_mentions, dim).
        """
        layer_indices = tuple(layer_indices)
        words = []
        blocks = []
        for surface, sentence_ids, vecs in items:
            vecs = np.asarray(vecs, dtype=np.float32)
            if vecs.ndim == 2:
                vecs = vecs[:, None, :]
            words.append(WordEntry(surface, tuple(int(s) for s in sentence_ids)))
            blocks.append(vecs)
        if not blocks:
            raise ValueError("empty store")
        vectors = np.concatenate(blocks, axis=0)
        return cls(vectors.shape[2], layer_indices, masked, words, vectors)

    @property
    def n_words(self) -> int:
        return len(self.words)

    @property
    def total_mentions(self) -> int:
        return int(self._counts.sum())

    @property
    def mention_counts(self) -> np.ndarray:
        return self._counts

    @property
    def offsets(self) -> np.ndarray:
        """Prefix offsets into the mention axis, length n_words + 1."""
        return self._offsets

    @property
    def surfaces(self) -> list[str]:
        return [w.surface for w in self.words]

    def word_index(self, surface: str) -> int:
        try:
            return self._index[surface]
        except KeyError:
            raise KeyError(f"word not in store: {surface!r}") from None

    def layer_position(self, layer: int) -> int:
        try:
            return self.layer_indices.index(layer)
        except ValueError:
            raise ValueError(
                f"layer {layer} not present (store has {list(self.layer_indices)})"
            ) from None

    def mention_vectors(self, word, layer=None) -> np.ndarray:
        """Vectors for one word: (n_mentions, dim) view at the given layer.

        ``layer`` may be omitted for single-layer stores.
        """
        idx = word if isinstance(word, int) else self.word_index(word)
        if layer is None:
            if len(self.layer_indices) != 1:
                raise ValueError("multi-layer store: specify a layer")
            pos = 0
        else:
            pos = self.layer_position(layer)
        lo, hi = self._offsets[idx], self._offsets[idx + 1]
        return self.vectors[lo:hi, pos, :]

    def __eq__(self, other):
        if not isinstance(other, MentionStore):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.layer_indices == other.layer_indices
            and self.masked == other.masked
            and self.words == other.words
            and self.vectors.tobytes() == other.vectors.tobytes()
        )

    def __repr__(self):
        return (
            f"MentionStore(words={self.n_words}, mentions={self.total_mentions}, "
            f"layers={list(self.layer_indices)}, dim={self.dim}, masked={self.masked})"
        )


@dataclass
class StaticEmbedding:
    """Word -> dense float32 vector map, the toolkit's main output."""

    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)
    method_tag: str = ""

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        fixed = {}
        for word, vec in self.entries.items():
            vec = np.ascontiguousarray(vec, dtype=np.float32)
            if vec.shape != (self.dim,):
                raise ValueError(f"vector for {word!r} has shape {vec.shape}, expected ({self.dim},)")
            if not np.isfinite(vec).all():
                raise ValueError(f"non-finite vector for {word!r}")
            fixed[word] = vec
        self.entries = fixed

    @property
    def words(self) -> list[str]:
        return list(self.entries)

    def vector(self, word: str) -> np.ndarray:
        try:
            return self.entries[word]
        except KeyError:
            raise KeyError(f"word not in embedding: {word!r}") from None

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def write_store(store: MentionStore, path) -> None:
    """Write a store in the binary format; the result round-trips bit-exactly."""
    if not isinstance(store, MentionStore):
        raise TypeError("write_store expects a MentionStore")
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<BBH", FORMAT_VERSION, int(store.masked), 0))
        f.write(struct.pack("<II", store.dim, len(store.layer_indices)))
        f.write(struct.pack(f"<{len(store.layer_indices)}I", *store.layer_indices))
        f.write(struct.pack("<Q", store.n_words))
        for w in store.words:
            raw = w.surface.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(struct.pack("<I", w.mention_count))
            f.write(np.asarray(w.sentence_ids, dtype="<u8").tobytes())
        f.write(store.vectors.astype("<f4", copy=False).tobytes())
    os.replace(tmp, path)


class _Reader:
    """Bounds-checked cursor over the store file bytes."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise StoreFormatError(f"truncated payload while reading {what}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def read_store(path) -> MentionStore:
    """Read and validate a binary store file.

    Malformed files raise :class:`StoreFormatError` with a message naming
    the offending field.
    """
    with open(path, "rb") as f:
        data = f.read()
    r = _Reader(data)

    if r.take(4, "magic") != MAGIC:
        raise StoreFormatError("bad magic")
    version, masked, reserved = r.unpack("<BBH", "header")
    if version != FORMAT_VERSION:
        raise StoreFormatError(f"unsupported format version {version}")
    if masked not in (0, 1):
        raise StoreFormatError(f"invalid masked flag {masked}")
    if reserved != 0:
        raise StoreFormatError("reserved header bytes must be zero")

    dim, layer_count = r.unpack("<II", "dim/layer_count")
    if dim == 0:
        raise StoreFormatError("dim must be positive")
    if layer_count == 0:
        raise StoreFormatError("layer_count must be positive")
    layers = r.unpack(f"<{layer_count}I", "layer indices")
    if any(l == 0 for l in layers):
        raise StoreFormatError("layer index must be positive")
    if any(b <= a for a, b in zip(layers, layers[1:])):
        raise StoreFormatError("layer indices not strictly increasing")

    (word_count,) = r.unpack("<Q", "word_count")
    if word_count == 0:
        raise StoreFormatError("empty store")

    words = []
    seen = set()
    total_mentions = 0
    for i in range(word_count):
        (slen,) = r.unpack("<H", f"surface length of word {i}")
        if slen == 0:
            raise StoreFormatError(f"empty surface for word {i}")
        raw = r.take(slen, f"surface of word {i}")
        try:
            surface = raw.decode("utf-8")
        except UnicodeDecodeError:
            raise StoreFormatError(f"surface of word {i} is not valid UTF-8") from None
        if surface in seen:
            raise StoreFormatError(f"duplicate word surface {surface!r}")
        seen.add(surface)
        (mcount,) = r.unpack("<I", f"mention_count of {surface!r}")
        if mcount == 0:
            raise StoreFormatError(f"mention_count of {surface!r} must be positive")
        sid_bytes = r.take(8 * mcount, f"sentence ids of {surface!r}")
        sids = tuple(int(s) for s in np.frombuffer(sid_bytes, dtype="<u8"))
        words.append(WordEntry(surface, sids))
        total_mentions += mcount

    vec_bytes = r.take(total_mentions * layer_count * dim * 4, "vector block")
    if r.pos != len(data):
        raise StoreFormatError(f"trailing bytes after vector block ({len(data) - r.pos})")
    vectors = np.frombuffer(vec_bytes, dtype="<f4").reshape(total_mentions, layer_count, dim)
    if not np.isfinite(vectors).all():
        raise StoreFormatError("non-finite vector value")

    try:
        return MentionStore(dim, layers, bool(masked), words, vectors)
    except ValueError as e:
        raise StoreFormatError(str(e)) from None


def slice_layer(store: MentionStore, layer: int) -> MentionStore:
    """Project a store down to a single layer, preserving all metadata."""
    pos = store.layer_position(layer)
    vectors = np.ascontiguousarray(store.vectors[:, pos : pos + 1, :])
    return MentionStore(store.dim, (layer,), store.masked, store.words, vectors)


def average_first_layers(store: MentionStore, ell: int) -> MentionStore:
    """Replace each mention's vectors by the mean of its layers 1..ell.

    All of layers 1..ell must be present.  The result is a single-layer store
    labelled with layer index ``ell`` (meaning: mean of the first ell layers).
    """
    if ell <= 0:
        raise ValueError("ell must be positive")
    missing = [l for l in range(1, ell + 1) if l not in store.layer_indices]
    if missing:
        raise ValueError(f"layers missing for prefix mean: {missing}")
    positions = [store.layer_position(l) for l in range(1, ell + 1)]
    mean = store.vectors[:, positions, :].astype(np.float64).mean(axis=1)
    vectors = mean.astype(np.float32)[:, None, :]
    return MentionStore(store.dim, (ell,), store.masked, store.words, vectors)


def load_text_embedding(path, method_tag=None) -> StaticEmbedding:
    """Load a whitespace-separated text embedding file."""
    entries = {}
    dim = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: record has no vector values")
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ValueError(
                    f"{path}:{lineno}: ragged rows ({len(values)} values, expected {dim})"
                )
            if word in entries:
                raise ValueError(f"{path}:{lineno}: duplicate word {word!r}")
            try:
                vec = np.array([float(v) for v in values], dtype=np.float32)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric token") from None
            if not np.isfinite(vec).all():
                raise ValueError(f"{path}:{lineno}: non-finite value")
            entries[word] = vec
    if dim is None:
        raise ValueError(f"{path}: empty embedding file")
    if method_tag is None:
        method_tag = os.path.splitext(os.path.basename(str(path)))[0]
    return StaticEmbedding(dim, entries, method_tag)


def save_text_embedding(emb: StaticEmbedding, path) -> None:
    """Write the text embedding format; float32 values round-trip exactly."""
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as f:
        for word, vec in emb.entries.items():
            if any(ch.isspace() for ch in word):
                raise ValueError(f"word with whitespace cannot be serialized: {word!r}")
            vals = " ".join(f"{float(v):.9g}" for v in vec)
            f.write(f"{word} {vals}\n")
    os.replace(tmp, path)
