"""Exact cosine k-nearest-neighbour search over mention vectors and the
idiosyncrasy filter built on top of it.

The search is exact blocked brute force: rows are normalized once in float64
and similarities computed block-by-block as dot products.  Query blocks have a
fixed size, so results are bit-identical regardless of how many worker threads
process them.  Ties in similarity are broken by ascending (word index, mention
index), which equals ascending global mention index for the word-major layout.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .store import MentionStore

logger = logging.getLogger(__name__)

_BLOCK = 256  # fixed query block size; must not depend on the thread count


@dataclass(frozen=True)
class NeighborResult:
    """Top-k neighbours of one mention, descending similarity."""

    query: tuple[int, int]
    neighbors: tuple[tuple[int, int, float], ...]


@dataclass
class FilterReport:
    """Which mention indices the idiosyncrasy filter removed, per word.

    Words whose mentions were all flagged keep every mention (plain-average
    fallback) and are listed in ``fallbacks`` with an empty removal set.
    """

    k: int
    removed: dict[str, tuple[int, ...]]
    fallbacks: set[str]

    def removed_total(self) -> int:
        return sum(len(v) for v in self.removed.values())

    def flagged_total(self, store: MentionStore) -> int:
        """Mentions the kNN rule flagged, counting fallback words' mentions."""
        total = self.removed_total()
        for w in self.fallbacks:
            total += store.words[store.word_index(w)].mention_count
        return total

    def removed_fraction(self, store: MentionStore) -> float:
        return self.removed_total() / store.total_mentions

    def flagged_fraction(self, store: MentionStore) -> float:
        return self.flagged_total(store) / store.total_mentions

    def to_tsv(self) -> str:
        lines = []
        for word, idxs in self.removed.items():
            cell = ",".join(str(i) for i in idxs)
            fb = 1 if word in self.fallbacks else 0
            lines.append(f"{word}\t{cell}\t{fb}")
        return "\n".join(lines) + "\n"


def cosine(u, v) -> float:
    """Cosine similarity of two equal-length vectors, clipped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("zero-norm vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _normalized_matrix(store: MentionStore) -> np.ndarray:
    if len(store.layer_indices) != 1:
        raise ValueError("multi-layer store: slice to a single layer first")
    x = store.vectors[:, 0, :].astype(np.float64)
    norms = np.linalg.norm(x, axis=1)
    if (norms == 0.0).any():
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise ValueError(f"zero-norm vector (global mention {bad})")
    return x / norms[:, None]


def _word_of(store: MentionStore) -> np.ndarray:
    return np.repeat(np.arange(store.n_words, dtype=np.int64), store.mention_counts)


def _top_k_indices(sims: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest entries, ordered by (-value, index)."""
    n = sims.size
    if k >= n:
        return np.argsort(-sims, kind="stable")[:k]
    kth = np.partition(sims, n - k)[n - k]
    above = np.flatnonzero(sims > kth)
    order = above[np.argsort(-sims[above], kind="stable")]
    need = k - order.size
    equal = np.flatnonzero(sims == kth)[:need]
    return np.concatenate([order, equal])


def _topk_blocks(store: MentionStore, k: int, threads: int):
    """Exact top-k neighbour indices for every mention.

    Returns (indices, sims): int64 and float64 arrays of shape (n, k), row r
    holding the neighbours of global mention r in final order.
    """
    xn = _normalized_matrix(store)
    n = xn.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < total mentions ({n}), got {k}")
    out_idx = np.empty((n, k), dtype=np.int64)
    out_sim = np.empty((n, k), dtype=np.float64)

    def run_block(start: int) -> None:
        stop = min(start + _BLOCK, n)
        sims = np.clip(xn[start:stop] @ xn.T, -1.0, 1.0)
        for r in range(start, stop):
            row = sims[r - start]
            row[r] = -np.inf  # exclude the query itself
            top = _top_k_indices(row, k)
            out_idx[r] = top
            out_sim[r] = row[top]

    starts = range(0, n, _BLOCK)
    if threads <= 1:
        for s in starts:
            run_block(s)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_block, starts))
    return out_idx, out_sim


def knn_all(store: MentionStore, k: int, threads: int = 1) -> list[NeighborResult]:
    """Exact top-k cosine neighbours of every mention over the full union.

    The query mention itself is excluded from its own neighbour list.
    Requires a single-layer store and k < total mention count.
    """
    idx, sim = _topk_blocks(store, k, threads)
    word_of = _word_of(store)
    offsets = store.offsets
    local = np.arange(store.total_mentions, dtype=np.int64) - offsets[word_of]
    results = []
    for r in range(store.total_mentions):
        neigh = tuple(
            (int(word_of[g]), int(local[g]), float(s)) for g, s in zip(idx[r], sim[r])
        )
        results.append(NeighborResult((int(word_of[r]), int(local[r])), neigh))
    return results


def filter_idiosyncratic(store: MentionStore, k: int, threads: int = 1) -> FilterReport:
    """Flag mentions whose k nearest neighbours are all mentions of the same word.

    Flagged mentions are removed, except that a word with every mention
    flagged keeps all of them and is recorded as a fallback.
    """
    idx, _ = _topk_blocks(store, k, threads)
    word_of = _word_of(store)
    flagged = (word_of[idx] == word_of[:, None]).all(axis=1)

    removed: dict[str, tuple[int, ...]] = {}
    fallbacks: set[str] = set()
    offsets = store.offsets
    for i, entry in enumerate(store.words):
        word_flags = flagged[offsets[i] : offsets[i + 1]]
        if word_flags.all():
            fallbacks.add(entry.surface)
            removed[entry.surface] = ()
        else:
            removed[entry.surface] = tuple(int(j) for j in np.flatnonzero(word_flags))
    return FilterReport(k=k, removed=removed, fallbacks=fallbacks)


def filter_outliers(vectors, fraction: float) -> np.ndarray:
    """Drop the floor(fraction * n) vectors farthest from their mean.

    Returns the surviving indices in ascending (original) order.  Distance is
    Euclidean from the arithmetic mean; ties are broken by removing the
    lowest-index vector first.
    """
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("filter_outliers expects a non-empty list of vectors")
    if not 0.0 <= fraction <= 0.9:
        raise ValueError(f"fraction must be in [0, 0.9], got {fraction}")
    n = arr.shape[0]
    n_remove = int(np.floor(fraction * n + 1e-9))
    if n_remove == 0:
        return np.arange(n, dtype=np.int64)
    d2 = ((arr - arr.mean(axis=0)) ** 2).sum(axis=1)
    order = np.argsort(-d2, kind="stable")
    keep = np.ones(n, dtype=bool)
    keep[order[:n_remove]] = False
    return np.flatnonzero(keep).astype(np.int64)
