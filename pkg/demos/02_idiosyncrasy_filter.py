"""Watch the kNN idiosyncrasy filter in action on constructed 2-D geometry.

A mention is flagged when all of its k nearest neighbours (cosine, over the
union of every word's mentions) belong to the same word: the sentence behind
it likely expresses something true of that word alone.  Contrast with the
distance-from-mean outlier baseline, which removes a fixed quota per word no
matter how the mentions are arranged.
"""

import math

import numpy as np

from mentionvec import MentionStore, filter_idiosyncratic, filter_outliers, knn_all


def store_from_angles(word_angles):
    items = []
    for word, angles in word_angles.items():
        vecs = np.array([[math.cos(a), math.sin(a)] for a in angles], dtype=np.float32)
        items.append((word, list(range(len(angles))), vecs))
    return MentionStore.build(items, layer_indices=[1], masked=True)


print("Geometry: word 'a' has 4 mentions bunched at angle ~0 plus one stray")
print("mention sitting inside word 'b's range around angle ~1.5 rad.\n")
store = store_from_angles(
    {
        "a": [0.00, 0.01, 0.02, 0.03, 1.50],
        "b": [1.44, 1.47, 1.53, 1.56, 1.41, 1.59],
    }
)

print("k = 3 nearest neighbours of each of a's mentions:")
results = knn_all(store, 3)
for r in results[:5]:
    names = [f"{store.words[w].surface}[{m}]" for w, m, _ in r.neighbors]
    print(f"  a[{r.query[1]}] -> {', '.join(names)}")

report = filter_idiosyncratic(store, 3)
print("\nFilter report (k=3):")
for word, removed in report.removed.items():
    fb = " (fallback: every mention flagged, all kept)" if word in report.fallbacks else ""
    print(f"  {word}: removed mentions {list(removed)}{fb}")
print(f"Removed fraction: {report.removed_fraction(store):.3f}")

print("\nThe bunched mentions 0-3 only ever meet each other, so they are")
print("flagged; the stray mention 4 survives because its neighbours are b's.")

print("\nOutlier baseline on a's mentions (fraction = 0.4):")
keep = filter_outliers(store.mention_vectors("a"), 0.4)
print(f"  survivors: {keep.tolist()}")
print("It removes whatever lies farthest from the mean -- here the stray")
print("mention plus one of the bunch -- blind to the cross-word structure.")

print("\nIf every mention of a word is idiosyncratic, the filter falls back")
print("to keeping all of them rather than dropping the word:")
isolated = store_from_angles(
    {"a": [0.00, 0.01, 0.02, 0.03], "b": [1.50, 1.51, 1.52, 1.53]}
)
report = filter_idiosyncratic(isolated, 2)
print(f"  fallbacks: {sorted(report.fallbacks)}")
