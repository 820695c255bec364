"""Lexical-classification evaluation: datasets, deterministic splits with
negative sampling, a per-class linear SVM, MAP/F1 scoring, and grid search
on the tuning split.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError
from .store import StaticEmbedding

logger = logging.getLogger(__name__)

MIN_CLASS_POSITIVES = 10  # classes below this are dropped at load time
MIN_SPLIT_POSITIVES = 5  # below this a class cannot be split 60/20/20


@dataclass
class LexDataset:
    """Named classes with positive word lists, optionally explicit negatives."""

    name: str
    classes: dict[str, list[str]]
    explicit_negatives: dict[str, list[str]] | None = None

    def __post_init__(self):
        for cname, words in self.classes.items():
            if len(set(words)) != len(words):
                raise ValueError(f"duplicate word within class {cname!r}")
            if len(words) < MIN_CLASS_POSITIVES:
                raise ValueError(
                    f"class {cname!r} has {len(words)} positives, "
                    f"need at least {MIN_CLASS_POSITIVES}"
                )


@dataclass(frozen=True)
class SplitSpec:
    """Split fractions, negative-sampling ratios, and the sampling pool."""

    seed: int
    neg_pool: tuple[str, ...]
    train_frac: float = 0.6
    tune_frac: float = 0.2
    test_frac: float = 0.2
    train_neg_ratio: float = 2.0
    test_neg_ratio: float = 5.0

    def __post_init__(self):
        if abs(self.train_frac + self.tune_frac + self.test_frac - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")
        if self.train_neg_ratio <= 0 or self.test_neg_ratio <= 0:
            raise ValueError("negative ratios must be positive")
        if not self.neg_pool:
            raise ValueError("empty negative-sampling pool")


@dataclass
class ClassSplit:
    class_name: str
    train_pos: list[str]
    tune_pos: list[str]
    test_pos: list[str]
    train_neg: list[str]
    tune_neg: list[str]
    test_neg: list[str]


@dataclass
class SvmModel:
    """Linear decision function w . x + b with the C it was trained at."""

    weights: np.ndarray
    bias: float
    C: float

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias)):
            raise ValueError("non-finite SVM parameters")


def load_dataset(path, name: str) -> LexDataset:
    """Load a TSV of ``class<TAB>word`` lines; a third field ``neg`` marks
    explicit negatives.  Classes with fewer than 10 positives are dropped."""
    classes: dict[str, list[str]] = {}
    negatives: dict[str, list[str]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) == 2:
                cname, word = parts
                bucket = classes
            elif len(parts) == 3 and parts[2] == "neg":
                cname, word = parts[0], parts[1]
                bucket = negatives
            else:
                raise ValueError(f"{path}:{lineno}: malformed line {line!r}")
            if not cname or not word:
                raise ValueError(f"{path}:{lineno}: empty class or word")
            members = bucket.setdefault(cname, [])
            if word in members:
                raise ValueError(f"{path}:{lineno}: duplicate {word!r} in class {cname!r}")
            members.append(word)

    kept = {}
    for cname, words in classes.items():
        if len(words) < MIN_CLASS_POSITIVES:
            logger.warning(
                "dataset %s: dropping class %r with %d < %d positives",
                name, cname, len(words), MIN_CLASS_POSITIVES,
            )
        else:
            kept[cname] = words
    if not kept:
        raise ValueError(f"{path}: no class has {MIN_CLASS_POSITIVES} or more positives")
    negatives = {c: ws for c, ws in negatives.items() if c in kept}
    return LexDataset(name, kept, negatives or None)


def _class_rng(seed: int, class_name: str) -> np.random.Generator:
    """Per-class RNG stream; stable across processes and class ordering."""
    digest = hashlib.sha256(class_name.encode("utf-8")).digest()
    return np.random.default_rng(
        [seed & 0xFFFFFFFFFFFFFFFF, int.from_bytes(digest[:8], "big")]
    )


def _floor(x: float) -> int:
    return int(np.floor(x + 1e-9))


def _cut(words: list[str], spec: SplitSpec) -> tuple[list[str], list[str], list[str]]:
    n = len(words)
    n_train = _floor(n * spec.train_frac)
    n_tune = _floor(n * spec.tune_frac)
    return words[:n_train], words[n_train : n_train + n_tune], words[n_train + n_tune :]


def make_splits(ds: LexDataset, spec: SplitSpec, vocab) -> list[ClassSplit]:
    """Deterministic per-class train/tune/test splits with sampled negatives.

    Positives are shuffled per class (seeded) and cut by the configured fractions.
    Test negatives come from other classes' positives, excluding target-class
    members, test_neg_ratio per test positive.  Train/tune negatives come from
    the pool, excluding target-class positives and all test words, at
    train_neg_ratio per positive.
    """
    vocab_set = set(vocab)
    splits = []
    dropped_words = 0
    for cname, members in ds.classes.items():
        rng = _class_rng(spec.seed, cname)
        pos = [w for w in members if w in vocab_set]
        dropped_words += len(members) - len(pos)
        if len(pos) < MIN_SPLIT_POSITIVES:
            logger.warning(
                "dataset %s: skipping class %r with %d in-vocabulary positives",
                ds.name, cname, len(pos),
            )
            continue
        pos = [pos[i] for i in rng.permutation(len(pos))]
        train_pos, tune_pos, test_pos = _cut(pos, spec)

        explicit = (ds.explicit_negatives or {}).get(cname)
        if explicit is not None:
            negs = [w for w in explicit if w in vocab_set]
            negs = [negs[i] for i in rng.permutation(len(negs))]
            train_neg, tune_neg, test_neg = _cut(negs, spec)
        else:
            target = set(members)
            others = {w for c2, ws in ds.classes.items() if c2 != cname for w in ws}
            other_pos = sorted((others - target) & vocab_set)
            n_test_neg = _floor(spec.test_neg_ratio * len(test_pos))
            if len(other_pos) < n_test_neg:
                logger.warning(
                    "class %r: only %d other-class words for %d test negatives",
                    cname, len(other_pos), n_test_neg,
                )
            take = min(n_test_neg, len(other_pos))
            perm = rng.permutation(len(other_pos))
            test_neg = [other_pos[i] for i in perm[:take]]

            excluded = target | set(test_neg)
            pool = sorted(w for w in spec.neg_pool if w in vocab_set and w not in excluded)
            need_train = _floor(spec.train_neg_ratio * len(train_pos))
            need_tune = _floor(spec.train_neg_ratio * len(tune_pos))
            need = need_train + need_tune
            if len(pool) < need:
                logger.warning(
                    "class %r: pool has %d words for %d train/tune negatives",
                    cname, len(pool), need,
                )
            take = min(need, len(pool))
            perm = rng.permutation(len(pool))
            drawn = [pool[i] for i in perm[:take]]
            train_neg = drawn[: min(need_train, len(drawn))]
            tune_neg = drawn[len(train_neg) :]

        split = ClassSplit(cname, train_pos, tune_pos, test_pos, train_neg, tune_neg, test_neg)
        _check_split(split)
        splits.append(split)
    if dropped_words:
        logger.info("dataset %s: %d dataset words absent from vocabulary", ds.name, dropped_words)
    if not splits:
        raise EvaluationError(f"dataset {ds.name}: every class was skipped")
    return splits


def _check_split(s: ClassSplit) -> None:
    pos_sets = [set(s.train_pos), set(s.tune_pos), set(s.test_pos)]
    for i in range(3):
        for j in range(i + 1, 3):
            if pos_sets[i] & pos_sets[j]:
                raise AssertionError(f"class {s.class_name!r}: positives shared across splits")
    for pos, neg in zip(pos_sets, [set(s.train_neg), set(s.tune_neg), set(s.test_neg)]):
        if pos & neg:
            raise AssertionError(f"class {s.class_name!r}: positives overlap negatives")
    train_words = set(s.train_pos) | set(s.train_neg)
    test_words = set(s.test_pos) | set(s.test_neg)
    if train_words & test_words:
        raise AssertionError(f"class {s.class_name!r}: train/test leakage")


def train_svm(X, y, C: float, tol: float = 1e-3, max_iter: int | None = None) -> SvmModel:
    """Train a binary linear SVM minimizing 0.5 ||w||^2 + C * sum hinge(y, w.x + b).

    Deterministic SMO on the dual: the first working variable is the maximal
    KKT violator, the second minimizes the second-order objective decrease
    (ties to the lowest index in both cases).  The bias is set afterwards by
    exact minimization of the hinge sum given w.  Stops when the KKT violation
    gap drops below ``tol`` or when a window of iterations improves the dual
    objective by less than 1e-4 relative, whichever comes first.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError(f"bad shapes: X {X.shape}, y {y.shape}")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise ValueError("labels must be -1/+1")
    if (y > 0).sum() == 0 or (y < 0).sum() == 0:
        raise ValueError("single-class input")
    if C <= 0:
        raise ValueError("C must be positive")

    n = y.size
    if max_iter is None:
        max_iter = max(50_000, 200 * n)
    alpha = np.zeros(n)
    w = np.zeros(X.shape[1])
    qd = (X * X).sum(axis=1)
    grad = -np.ones(n)  # gradient of the dual objective at alpha = 0

    objective_tol = 1e-4
    check_every = max(200, n)
    dual_prev = 0.0

    for it in range(max_iter):
        if it and it % check_every == 0:
            dual = float(alpha.sum() - 0.5 * (w @ w))
            if dual - dual_prev <= objective_tol * max(1.0, abs(dual)):
                break
            dual_prev = dual
        minus_yg = -(y * grad)
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        if not up.any() or not low.any():
            break
        i = int(np.argmax(np.where(up, minus_yg, -np.inf)))
        m_up = minus_yg[i]
        m_low = np.where(low, minus_yg, np.inf).min()
        if m_up - m_low < tol:
            break

        # second variable: largest second-order decrease among violators
        ki = X @ X[i]
        b_t = m_up - minus_yg
        a_t = np.maximum(qd[i] + qd - 2.0 * ki, 1e-12)
        usable = low & (b_t > 0)
        score = np.where(usable, -(b_t * b_t) / a_t, np.inf)
        j = int(np.argmin(score))

        kij = float(ki[j])
        old_i, old_j = alpha[i], alpha[j]
        # both branches: quad = ||x_i - x_j||^2 (label-adjusted kernel cancels)
        if y[i] != y[j]:
            quad = qd[i] + qd[j] - 2.0 * kij
            if quad <= 0:
                quad = 1e-12
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = qd[i] + qd[j] - 2.0 * kij
            if quad <= 0:
                quad = 1e-12
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total
        w += (alpha[i] - old_i) * y[i] * X[i] + (alpha[j] - old_j) * y[j] * X[j]
        grad = y * (X @ w) - 1.0
    else:
        logger.warning("train_svm: iteration cap %d reached before tolerance", max_iter)

    bias = _optimal_bias(X, y, w)
    return SvmModel(weights=w, bias=bias, C=float(C))


def _optimal_bias(X, y, w) -> float:
    """Exact minimizer of sum hinge(1 - y (f + b)) over b, given f = X w.

    The hinge sum is convex piecewise-linear in b with breakpoints at
    b = y_i - f_i; the smallest minimizing breakpoint is returned.
    """
    f = X @ w
    candidates = np.unique(y - f)
    best_b, best_val = 0.0, np.inf
    for b in candidates:
        val = np.maximum(0.0, 1.0 - y * (f + b)).sum()
        if val < best_val - 1e-12:
            best_val = val
            best_b = float(b)
    return best_b


def svm_objective(model: SvmModel, X, y) -> float:
    """Primal objective 0.5 ||w||^2 + C * sum hinge."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    margins = 1.0 - y * (X @ model.weights + model.bias)
    return 0.5 * float(model.weights @ model.weights) + model.C * float(
        np.maximum(0.0, margins).sum()
    )


def decision_values(model: SvmModel, X) -> np.ndarray:
    """w . x + b per row; empty input yields an empty array."""
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        return np.zeros(0)
    if X.ndim != 2 or X.shape[1] != model.weights.size:
        raise ValueError(f"dimension mismatch: X {X.shape} vs weights {model.weights.size}")
    return X @ model.weights + model.bias


def average_precision(scores, labels) -> float:
    """AP of ranking by score descending, ties broken by original index."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length 1-D")
    positive = labels.astype(bool)
    if not positive.any():
        raise ValueError("no positive labels")
    order = np.argsort(-scores, kind="stable")
    hits = positive[order]
    precision_at = np.cumsum(hits) / np.arange(1, scores.size + 1)
    return float(precision_at[hits].mean())


def f1_score(pred, gold) -> float:
    """F1 = 2PR / (P + R), zero when precision + recall is zero."""
    pred = np.asarray(pred).astype(bool)
    gold = np.asarray(gold).astype(bool)
    if pred.shape != gold.shape or pred.ndim != 1:
        raise ValueError("pred and gold must be equal-length 1-D")
    tp = int((pred & gold).sum())
    fp = int((pred & ~gold).sum())
    fn = int((~pred & gold).sum())
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


@dataclass
class ClassResult:
    class_name: str
    test_map: float
    test_f1: float
    tune_map: float
    tune_f1: float
    chosen_c_map: float
    chosen_c_f1: float
    n_train: int = 0
    n_tune: int = 0
    n_test: int = 0


@dataclass
class EvalResult:
    dataset: str
    per_class: list[ClassResult] = field(default_factory=list)
    skipped_classes: list[str] = field(default_factory=list)

    @property
    def macro_map(self) -> float:
        return float(np.mean([c.test_map for c in self.per_class]))

    @property
    def macro_f1(self) -> float:
        return float(np.mean([c.test_f1 for c in self.per_class]))

    @property
    def macro_tune_map(self) -> float:
        return float(np.mean([c.tune_map for c in self.per_class]))

    @property
    def macro_tune_f1(self) -> float:
        return float(np.mean([c.tune_f1 for c in self.per_class]))

    def to_tsv(self) -> str:
        lines = []
        for c in self.per_class:
            lines.append(f"{c.class_name}\tmap\t{c.test_map:.6f}")
            lines.append(f"{c.class_name}\tf1\t{c.test_f1:.6f}")
        lines.append(f"MACRO\tmap\t{self.macro_map:.6f}")
        lines.append(f"MACRO\tf1\t{self.macro_f1:.6f}")
        return "\n".join(lines) + "\n"


def _features(emb: StaticEmbedding, words: list[str]) -> np.ndarray:
    return np.stack([emb.entries[w] for w in words]).astype(np.float64)


def evaluate(
    emb: StaticEmbedding, ds: LexDataset, spec: SplitSpec, grid
) -> EvalResult:
    """Per-class SVM evaluation with C selected on the tuning split.

    For each class and each C in the grid, an SVM is trained on the train
    split and scored on the tune split; the C maximizing tune MAP (resp. F1)
    is selected independently per metric.  The selected models (trained on
    train only) are then scored on the test split.  Macro scores are unweighted
    means over classes.
    """
    grid = [float(c) for c in grid]
    if not grid:
        raise ValueError("empty hyperparameter grid")
    splits = make_splits(ds, spec, set(emb.entries))
    result = EvalResult(dataset=ds.name)
    evaluated = {s.class_name for s in splits}
    result.skipped_classes = [c for c in ds.classes if c not in evaluated]

    for split in splits:
        xs = {
            part: _features(emb, getattr(split, f"{part}_pos") + getattr(split, f"{part}_neg"))
            for part in ("train", "tune", "test")
        }
        ys = {
            part: np.concatenate(
                [
                    np.ones(len(getattr(split, f"{part}_pos"))),
                    -np.ones(len(getattr(split, f"{part}_neg"))),
                ]
            )
            for part in ("train", "tune", "test")
        }
        tune_maps, tune_f1s, models = [], [], []
        for C in grid:
            model = train_svm(xs["train"], ys["train"], C)
            models.append(model)
            scores = decision_values(model, xs["tune"])
            tune_maps.append(average_precision(scores, ys["tune"] > 0))
            tune_f1s.append(f1_score(scores > 0, ys["tune"] > 0))
        i_map = int(np.argmax(tune_maps))
        i_f1 = int(np.argmax(tune_f1s))
        test_scores_map = decision_values(models[i_map], xs["test"])
        test_scores_f1 = decision_values(models[i_f1], xs["test"])
        result.per_class.append(
            ClassResult(
                class_name=split.class_name,
                test_map=average_precision(test_scores_map, ys["test"] > 0),
                test_f1=f1_score(test_scores_f1 > 0, ys["test"] > 0),
                tune_map=tune_maps[i_map],
                tune_f1=tune_f1s[i_f1],
                chosen_c_map=grid[i_map],
                chosen_c_f1=grid[i_f1],
                n_train=ys["train"].size,
                n_tune=ys["tune"].size,
                n_test=ys["test"].size,
            )
        )
    return result
