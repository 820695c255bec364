"""Word-similarity evaluation: Spearman ranking, coverage accounting,
quartile disagreement inspection, and representation concatenation.
"""

import numpy as np

from mentionvec import (
    SimDataset,
    StaticEmbedding,
    concat_normalized,
    cosine,
    eval_similarity,
    quartile_disagreements,
    spearman,
)

rng = np.random.default_rng(23)
dim = 12
vocab = [f"n{i:02d}" for i in range(40)]
emb = StaticEmbedding(dim, {w: rng.standard_normal(dim).astype(np.float32) for w in vocab}, "demo")

print("Gold ratings = true cosines pushed through a monotone warp, plus noise")
pairs = []
for i in range(0, 38):
    w1, w2 = vocab[i], vocab[i + 1]
    true = cosine(emb.vector(w1), emb.vector(w2))
    gold = float(np.tanh(2.0 * true) * 5 + 5 + 0.15 * rng.standard_normal())
    pairs.append((w1, w2, round(gold, 4)))
ds = SimDataset("warped", pairs)

rho, covered, skipped = eval_similarity(emb, ds)
print(f"spearman = {rho:.4f} over {covered} covered pairs ({skipped} skipped)")

print("\nDrop some words from the embedding to see coverage accounting:")
small = StaticEmbedding(dim, {w: emb.vector(w) for w in vocab[:30]}, "demo-small")
rho, covered, skipped = eval_similarity(small, ds)
print(f"spearman = {rho:.4f}, covered = {covered}, skipped = {skipped}")

print("\nPairs the embedding ranks in the opposite quartile from gold:")
noisy_pairs = [(a, b, g + float(6 * rng.standard_normal())) for a, b, g in pairs]
noisy = SimDataset("noisy", noisy_pairs)
top, bottom = quartile_disagreements(emb, noisy)
print("  gold-high but cosine-low:")
for w1, w2, gold, cos in top:
    print(f"    ({w1}, {w2}) gold={gold:.2f} cosine={cos:.3f}")
print("  gold-low but cosine-high:")
for w1, w2, gold, cos in bottom:
    print(f"    ({w1}, {w2}) gold={gold:.2f} cosine={cos:.3f}")

print("\nConcatenating two normalized representations averages their cosines:")
other = StaticEmbedding(8, {w: rng.standard_normal(8).astype(np.float32) for w in vocab}, "other")
combo = concat_normalized(emb, other)
w1, w2 = vocab[0], vocab[1]
lhs = cosine(combo.vector(w1), combo.vector(w2))
rhs = 0.5 * (cosine(emb.vector(w1), emb.vector(w2)) + cosine(other.vector(w1), other.vector(w2)))
print(f"  cos_concat = {lhs:.6f}  vs  mean of parts = {rhs:.6f}")

xs = [1, 2, 3, 4]
ys = [1, 3, 2, 4]
print(f"\nSanity fixture: spearman({xs}, {ys}) = {spearman(xs, ys):.4f} (one swapped pair)")
