"""Word-similarity benchmark evaluation: cosine ranking vs. gold ratings."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError
from .knn import cosine
from .store import StaticEmbedding

logger = logging.getLogger(__name__)


@dataclass
class SimDataset:
    """Word pairs with gold similarity ratings."""

    name: str
    pairs: list[tuple[str, str, float]]

    def __post_init__(self):
        seen = set()
        for w1, w2, rating in self.pairs:
            if not math.isfinite(rating):
                raise ValueError(f"non-finite rating for pair ({w1!r}, {w2!r})")
            key = frozenset((w1, w2))
            if key in seen:
                raise ValueError(f"duplicate pair ({w1!r}, {w2!r})")
            seen.add(key)


def load_sim_dataset(path, name: str) -> SimDataset:
    """Load a TSV of ``word1<TAB>word2<TAB>rating`` lines."""
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
            w1, w2, raw = parts
            try:
                rating = float(raw)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric rating {raw!r}") from None
            pairs.append((w1, w2, rating))
    return SimDataset(name, pairs)


def average_ranks(xs) -> np.ndarray:
    """Fractional 1-based ranks, ties receiving the average of their ranks."""
    x = np.asarray(xs, dtype=np.float64)
    _, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts).astype(np.float64)
    group_rank = ends - (counts - 1) / 2.0
    return group_rank[inverse]


def spearman(xs, ys) -> float:
    """Spearman rank correlation: Pearson correlation of average ranks."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ValueError("need at least 2 observations")
    if (x == x[0]).all() or (y == y[0]).all():
        raise ValueError("constant input")
    rx = average_ranks(x)
    ry = average_ranks(y)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    return float(np.clip(float(rx @ ry) / denom, -1.0, 1.0))


def _lookup_table(emb: StaticEmbedding, lowercase: bool) -> dict[str, np.ndarray]:
    if not lowercase:
        return emb.entries
    table = {}
    for word, vec in emb.entries.items():
        table.setdefault(word.lower(), vec)  # first case-variant wins
    return table


def _covered_pairs(emb: StaticEmbedding, ds: SimDataset, lowercase: bool):
    table = _lookup_table(emb, lowercase)
    covered = []
    skipped = 0
    for w1, w2, rating in ds.pairs:
        k1 = w1.lower() if lowercase else w1
        k2 = w2.lower() if lowercase else w2
        if k1 in table and k2 in table:
            covered.append((w1, w2, rating, cosine(table[k1], table[k2])))
        else:
            skipped += 1
    return covered, skipped


def eval_similarity(
    emb: StaticEmbedding, ds: SimDataset, lowercase: bool = True
) -> tuple[float, int, int]:
    """Spearman correlation between pair cosines and gold ratings.

    Pairs with either word missing from the embedding are skipped and counted.
    Returns (spearman, covered, skipped).
    """
    covered, skipped = _covered_pairs(emb, ds, lowercase)
    if len(covered) < 2:
        raise EvaluationError(
            f"insufficient coverage: {len(covered)} of {len(ds.pairs)} pairs covered"
        )
    gold = [c[2] for c in covered]
    sims = [c[3] for c in covered]
    return spearman(sims, gold), len(covered), skipped


def quartile_disagreements(
    emb: StaticEmbedding, ds: SimDataset, lowercase: bool = True
) -> tuple[list, list]:
    """Pairs ranked in the top quartile by gold but bottom quartile by cosine,
    and vice versa.

    Quartiles take the first/last ceil(n/4) pairs of each ranking, ties broken
    by original pair order.  Each returned entry is (word1, word2, gold, cosine);
    the first list is ordered by descending gold, the second by ascending gold.
    """
    covered, _ = _covered_pairs(emb, ds, lowercase)
    n = len(covered)
    if n < 8:
        raise EvaluationError(f"insufficient pairs for quartile analysis: {n}")
    q = math.ceil(n / 4)
    by_gold = sorted(range(n), key=lambda i: (-covered[i][2], i))
    by_cos = sorted(range(n), key=lambda i: (-covered[i][3], i))
    top_gold, bottom_gold = by_gold[:q], by_gold[-q:]
    top_cos, bottom_cos = set(by_cos[:q]), set(by_cos[-q:])
    high_gold_low_cos = [covered[i] for i in top_gold if i in bottom_cos]
    low_gold_high_cos = [covered[i] for i in reversed(bottom_gold) if i in top_cos]
    return high_gold_low_cos, low_gold_high_cos
