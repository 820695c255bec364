"""Drive the whole pipeline through the command-line interface.

Writes a synthetic store plus YAML configs into a temp directory, then runs:
inspect-store -> aggregate -> eval-lexclass -> eval-sim -> neighbors.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
import yaml

from mentionvec import MentionStore, write_store

rng = np.random.default_rng(3)
dim, n_classes, per_class = 8, 4, 15
dirs = rng.standard_normal((n_classes, dim))
dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

items, class_rows, words = [], [], []
for c in range(n_classes):
    for wi in range(per_class):
        word = f"c{c}w{wi}"
        words.append(word)
        class_rows.append(f"class{c}\t{word}")
        idio_dir = rng.standard_normal(dim)
        idio_dir /= np.linalg.norm(idio_dir)
        normal = dirs[c] + 0.1 * rng.standard_normal(dim) + 0.35 * rng.standard_normal((16, dim))
        idio = 6.0 * idio_dir + 0.1 * rng.standard_normal((4, dim))
        items.append((word, list(range(20)), np.vstack([normal, idio]).astype(np.float32)))
store = MentionStore.build(items, layer_indices=[1], masked=True)

work = Path(tempfile.mkdtemp())
store_path = work / "store.mvs"
write_store(store, store_path)
(work / "classes.tsv").write_text("\n".join(class_rows) + "\n")
sim_rows = [f"{words[i]}\t{words[i+1]}\t{(i * 7 % 10) + 0.5}" for i in range(20)]
(work / "pairs.tsv").write_text("\n".join(sim_rows) + "\n")

(work / "run.yaml").write_text(yaml.safe_dump({
    "store": str(store_path),
    "method": {"kind": "avg_filt", "k": 3},
    "output": str(work / "vectors.txt"),
    "filter_report": str(work / "filter_report.tsv"),
    "lexclass": {
        "seed": 11,
        "datasets": [{"name": "demo", "path": str(work / "classes.tsv"),
                      "output": str(work / "lexclass_report.tsv")}],
        "grid": {"C": [0.1, 1.0, 10.0, 100.0], "k": [3, 5]},
    },
    "similarity": {"datasets": [{"name": "demo", "path": str(work / "pairs.tsv")}]},
}))


def run(*argv):
    print(f"\n$ mentionvec {' '.join(argv)}")
    proc = subprocess.run(
        [sys.executable, "-m", "mentionvec", *argv], capture_output=True, text=True
    )
    print(proc.stdout, end="")
    if proc.returncode != 0:
        print(proc.stderr, end="")
        raise SystemExit(proc.returncode)


run("inspect-store", str(store_path))
run("aggregate", "--config", str(work / "run.yaml"))
run("eval-lexclass", "--config", str(work / "run.yaml"))
run("eval-sim", "--config", str(work / "run.yaml"))
run("neighbors", str(work / "vectors.txt"), words[0], "-n", "5")

print(f"\nReports written under {work}")
print((work / "lexclass_report.tsv").read_text())
