"""Static word vectors from a mention store, under every supported strategy.

The masked/unmasked distinction is a property of the input store, not of the
method: the same strategies serve both families.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .knn import FilterReport, filter_idiosyncratic, filter_outliers
from .store import MentionStore, StaticEmbedding, average_first_layers, slice_layer

logger = logging.getLogger(__name__)

KINDS = ("avg_last", "avg_filt", "avg_outl", "layer_single", "layer_prefix_mean")


@dataclass(frozen=True)
class AggregationMethod:
    """How to pool a word's mention vectors into one static vector.

    kind:
      avg_last           plain arithmetic mean of all mentions
      avg_filt           mean of mentions surviving the kNN idiosyncrasy filter
      avg_outl           mean after dropping a fixed fraction farthest from the mean
      layer_single       plain mean over the vectors of one specific layer
      layer_prefix_mean  plain mean over per-mention means of layers 1..layer
    """

    kind: str
    k: int | None = None
    fraction: float | None = None
    layer: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown aggregation kind {self.kind!r}")
        if self.kind == "avg_filt" and (self.k is None or self.k < 1):
            raise ValueError("avg_filt requires a positive k")
        if self.kind == "avg_outl":
            if self.fraction is None or not 0.0 <= self.fraction <= 0.9:
                raise ValueError("avg_outl requires fraction in [0, 0.9]")
        if self.kind in ("layer_single", "layer_prefix_mean"):
            if self.layer is None or self.layer < 1:
                raise ValueError(f"{self.kind} requires a positive layer")

    @classmethod
    def avg_last(cls):
        return cls("avg_last")

    @classmethod
    def avg_filt(cls, k: int):
        return cls("avg_filt", k=int(k))

    @classmethod
    def avg_outl(cls, fraction: float):
        return cls("avg_outl", fraction=float(fraction))

    @classmethod
    def layer_single(cls, layer: int):
        return cls("layer_single", layer=int(layer))

    @classmethod
    def layer_prefix_mean(cls, layer: int):
        return cls("layer_prefix_mean", layer=int(layer))

    @property
    def tag(self) -> str:
        if self.kind == "avg_filt":
            return f"avg_filt_k{self.k}"
        if self.kind == "avg_outl":
            return f"avg_outl_f{self.fraction:g}"
        if self.kind == "layer_single":
            return f"layer_single_l{self.layer}"
        if self.kind == "layer_prefix_mean":
            return f"layer_prefix_mean_l{self.layer}"
        return "avg_last"


def _require_single_layer(store: MentionStore, method: AggregationMethod):
    if len(store.layer_indices) != 1:
        raise ValueError(
            f"{method.kind} expects a single-layer store; slice_layer() it first"
        )


def _word_means(store: MentionStore, survivors=None) -> dict[str, np.ndarray]:
    """Per-word float64 mean over (optionally a subset of) mentions, as float32."""
    out = {}
    for i, entry in enumerate(store.words):
        vecs = store.mention_vectors(i).astype(np.float64)
        if survivors is not None:
            keep = survivors.get(entry.surface)
            if keep is not None:
                vecs = vecs[keep]
        out[entry.surface] = vecs.mean(axis=0).astype(np.float32)
    return out


def aggregate(
    store: MentionStore, method: AggregationMethod, threads: int = 1
) -> tuple[StaticEmbedding, FilterReport | None]:
    """One static vector per store word; a FilterReport is returned for avg_filt."""
    report = None
    if method.kind == "avg_last":
        _require_single_layer(store, method)
        entries = _word_means(store)
    elif method.kind == "avg_filt":
        _require_single_layer(store, method)
        report = filter_idiosyncratic(store, method.k, threads=threads)
        survivors = {}
        for i, entry in enumerate(store.words):
            dropped = set(report.removed[entry.surface])
            if dropped:
                survivors[entry.surface] = np.array(
                    [j for j in range(entry.mention_count) if j not in dropped],
                    dtype=np.int64,
                )
        entries = _word_means(store, survivors)
    elif method.kind == "avg_outl":
        _require_single_layer(store, method)
        survivors = {}
        for i, entry in enumerate(store.words):
            keep = filter_outliers(store.mention_vectors(i), method.fraction)
            if keep.size == 0:
                # fraction <= 0.9 guarantees at least one survivor for n >= 1
                raise AssertionError("outlier filter removed every mention")
            survivors[entry.surface] = keep
        entries = _word_means(store, survivors)
    elif method.kind == "layer_single":
        entries = _word_means(slice_layer(store, method.layer))
    elif method.kind == "layer_prefix_mean":
        entries = _word_means(average_first_layers(store, method.layer))
    else:  # pragma: no cover - guarded by AggregationMethod
        raise ValueError(method.kind)
    return StaticEmbedding(store.dim, entries, method.tag), report


def concat_normalized(a: StaticEmbedding, b: StaticEmbedding) -> StaticEmbedding:
    """Concatenate two embeddings word-wise after unit-normalizing each part.

    Only words present in both vocabularies are emitted; the number of
    non-shared words is logged.  In the concatenated space the cosine of two
    words equals the mean of the two component cosines.
    """
    shared = [w for w in a.entries if w in b.entries]
    n_only = (len(a) - len(shared)) + (len(b) - len(shared))
    if n_only:
        logger.warning("concat_normalized: %d words not shared were dropped", n_only)
    entries = {}
    for w in shared:
        va = a.entries[w].astype(np.float64)
        vb = b.entries[w].astype(np.float64)
        na, nb = np.linalg.norm(va), np.linalg.norm(vb)
        if na == 0.0 or nb == 0.0:
            raise ValueError(f"zero-norm vector for {w!r}")
        entries[w] = np.concatenate([va / na, vb / nb]).astype(np.float32)
    return StaticEmbedding(a.dim + b.dim, entries, f"{a.method_tag}+{b.method_tag}")


def nearest_words(emb: StaticEmbedding, query: str, n: int) -> list[tuple[str, float]]:
    """Top-n other words by cosine to the query, ties broken by word string."""
    if n < 1:
        raise ValueError("n must be positive")
    q = emb.vector(query).astype(np.float64)
    nq = np.linalg.norm(q)
    if nq == 0.0:
        raise ValueError(f"zero-norm vector for {query!r}")
    scored = []
    for word, vec in emb.entries.items():
        if word == query:
            continue
        v = vec.astype(np.float64)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            raise ValueError(f"zero-norm vector for {word!r}")
        sim = float(np.clip(np.dot(q, v) / (nq * nv), -1.0, 1.0))
        scored.append((word, sim))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:n]
