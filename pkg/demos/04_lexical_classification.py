"""Lexical classification end to end: does filtering idiosyncratic mentions
produce better static vectors?

The synthetic store plants 20% idiosyncratic mentions per word (a tight
word-private cluster far from the word's class direction).  Classes align
with the clean cluster directions, so a linear SVM separates them easily --
unless the planted mentions have polluted the averages.
"""

import numpy as np

from mentionvec import (
    AggregationMethod,
    LexDataset,
    MentionStore,
    SplitSpec,
    aggregate,
    evaluate,
)


def build(seed, n_classes=5, words_per_class=15, n_mentions=20, dim=8):
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_classes, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    items, classes = [], {}
    for c in range(n_classes):
        members = []
        for wi in range(words_per_class):
            word = f"c{c}w{wi}"
            members.append(word)
            offset = 0.1 * rng.standard_normal(dim)
            idio_dir = rng.standard_normal(dim)
            idio_dir /= np.linalg.norm(idio_dir)
            normal = dirs[c] + offset + 0.35 * rng.standard_normal((16, dim))
            idio = 0.5 * dirs[c] + 6.0 * idio_dir + 0.1 * rng.standard_normal((4, dim))
            items.append((word, list(range(n_mentions)),
                          np.vstack([normal, idio]).astype(np.float32)))
        classes[f"class{c}"] = members
    return MentionStore.build(items, layer_indices=[1], masked=True), LexDataset("demo", classes)


grid = [0.1, 1.0, 10.0, 100.0]
print("seed | macro MAP avg_last | macro MAP avg_filt(k=3) | removed")
print("-----+--------------------+-------------------------+--------")
for seed in range(5):
    store, ds = build(seed)
    emb_last, _ = aggregate(store, AggregationMethod.avg_last())
    emb_filt, report = aggregate(store, AggregationMethod.avg_filt(3))
    spec = SplitSpec(seed=seed, neg_pool=tuple(emb_last.words))
    res_last = evaluate(emb_last, ds, spec, grid)
    res_filt = evaluate(emb_filt, ds, spec, grid)
    print(
        f"  {seed}  |       {res_last.macro_map:.4f}       |"
        f"         {res_filt.macro_map:.4f}          |"
        f"  {report.removed_fraction(store):.1%}"
    )

store, ds = build(0)
emb_filt, _ = aggregate(store, AggregationMethod.avg_filt(3))
spec = SplitSpec(seed=0, neg_pool=tuple(emb_filt.words))
res = evaluate(emb_filt, ds, spec, grid)
print("\nPer-class report for avg_filt, seed 0 (TSV form consumed by the CLI):")
print(res.to_tsv())
print("Hyperparameters are chosen on the tuning split, independently per")
print("metric; test scores come from the train-split model only.")
