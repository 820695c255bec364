"""Command-line interface: aggregate, eval-lexclass, eval-sim, neighbors,
inspect-store.

Configuration is a YAML file (see README for the schema).  Progress and
warnings go to stderr; results go to files and stdout, so pipelines stay
clean.  All commands are deterministic: identical config and seed produce
byte-identical outputs regardless of --threads.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np
import yaml

from .aggregate import AggregationMethod, aggregate, nearest_words
from .errors import EvaluationError, MentionVecError
from .lexclass import SplitSpec, evaluate, load_dataset
from .similarity import eval_similarity, load_sim_dataset
from .store import load_text_embedding, read_store, save_text_embedding

logger = logging.getLogger("mentionvec")

DEFAULT_C_GRID = [0.1, 1.0, 10.0, 100.0]
DEFAULT_K_GRID = [3, 5, 10, 20, 50, 100]
DEFAULT_FRACTION_GRID = [round(0.1 * i, 1) for i in range(1, 10)]


def _load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        cfg = yaml.safe_load(f)
    if not isinstance(cfg, dict):
        raise ValueError(f"config {path} must be a mapping")
    return cfg


def method_from_config(spec) -> AggregationMethod:
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("method must be a mapping with a 'kind' key")
    known = {"kind", "k", "fraction", "layer"}
    extra = set(spec) - known
    if extra:
        raise ValueError(f"unknown method keys: {sorted(extra)}")
    return AggregationMethod(
        kind=spec["kind"],
        k=spec.get("k"),
        fraction=spec.get("fraction"),
        layer=spec.get("layer"),
    )


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def cmd_inspect_store(args) -> int:
    store = read_store(args.store)
    counts = store.mention_counts
    lines = [
        f"dim\t{store.dim}",
        f"layer_indices\t{','.join(str(l) for l in store.layer_indices)}",
        f"masked\t{int(store.masked)}",
        f"words\t{store.n_words}",
        f"total_mentions\t{store.total_mentions}",
        f"min_mentions\t{int(counts.min())}",
        f"mean_mentions\t{counts.mean():.2f}",
        f"max_mentions\t{int(counts.max())}",
    ]
    print("\n".join(lines))
    return 0


def cmd_aggregate(args) -> int:
    cfg = _load_config(args.config)
    store = read_store(cfg["store"])
    method = method_from_config(cfg.get("method", "avg_last"))
    output = args.output or cfg.get("output")
    if not output:
        raise ValueError("no output path (config 'output' or --output)")
    emb, report = aggregate(store, method, threads=args.threads)
    save_text_embedding(emb, output)
    summary = [f"words\t{len(emb)}", f"dim\t{emb.dim}", f"method\t{emb.method_tag}"]
    if report is not None:
        summary += [
            f"removed_fraction\t{report.removed_fraction(store):.6f}",
            f"flagged_fraction\t{report.flagged_fraction(store):.6f}",
            f"fallbacks\t{len(report.fallbacks)}",
        ]
        if cfg.get("filter_report"):
            _write_text(cfg["filter_report"], report.to_tsv())
    summary.append(f"output\t{output}")
    print("\n".join(summary))
    return 0


def _embedding_points(cfg, grids, threads):
    """Embeddings to evaluate: one per outer hyperparameter grid point.

    The method's tunable parameter may come from the grid instead of the
    method mapping; an explicit parameter pins a single point unless a grid
    overrides it.
    """
    if "embedding" in cfg:
        if "store" in cfg:
            raise ValueError("config has both 'embedding' and 'store'")
        return [load_text_embedding(cfg["embedding"])]
    store = read_store(cfg["store"])
    raw = cfg.get("method", "avg_last")
    if isinstance(raw, str):
        raw = {"kind": raw}
    kind = raw.get("kind")
    if kind == "avg_filt":
        values = grids.get("k") or ([raw["k"]] if raw.get("k") else DEFAULT_K_GRID)
        methods = [AggregationMethod.avg_filt(int(v)) for v in values]
    elif kind == "avg_outl":
        values = grids.get("fraction") or (
            [raw["fraction"]] if raw.get("fraction") is not None else DEFAULT_FRACTION_GRID
        )
        methods = [AggregationMethod.avg_outl(float(v)) for v in values]
    elif kind in ("layer_single", "layer_prefix_mean"):
        values = grids.get("layer") or (
            [raw["layer"]] if raw.get("layer") else list(store.layer_indices)
        )
        factory = getattr(AggregationMethod, kind)
        methods = [factory(int(v)) for v in values]
    else:
        methods = [method_from_config(raw)]
    points = []
    for m in methods:
        logger.info("aggregating %s", m.tag)
        emb, _ = aggregate(store, m, threads=threads)
        points.append(emb)
    return points


def _merged_lexclass_tsv(res_map, res_f1) -> str:
    lines = []
    f1_by_class = {c.class_name: c for c in res_f1.per_class}
    for c in res_map.per_class:
        lines.append(f"{c.class_name}\tmap\t{c.test_map:.6f}")
        lines.append(f"{c.class_name}\tf1\t{f1_by_class[c.class_name].test_f1:.6f}")
    lines.append(f"MACRO\tmap\t{res_map.macro_map:.6f}")
    lines.append(f"MACRO\tf1\t{res_f1.macro_f1:.6f}")
    return "\n".join(lines) + "\n"


def cmd_eval_lexclass(args) -> int:
    cfg = _load_config(args.config)
    block = cfg.get("lexclass")
    if not isinstance(block, dict) or not block.get("datasets"):
        raise ValueError("config needs a 'lexclass' section with 'datasets'")
    grids = dict(block.get("grid") or {})
    if "gamma" in grids:
        logger.warning("gamma grid ignored: the SVM is linear and has no kernel width")
        grids.pop("gamma")
    c_grid = [float(c) for c in grids.get("C", DEFAULT_C_GRID)]
    seed = args.seed if args.seed is not None else int(block.get("seed", 0))

    points = _embedding_points(cfg, grids, args.threads)
    pool = tuple(points[0].words)
    spec = SplitSpec(seed=seed, neg_pool=pool)

    datasets = block["datasets"]
    if args.output and len(datasets) != 1:
        raise ValueError("--output is only valid with a single dataset")
    for entry in datasets:
        ds = load_dataset(entry["path"], entry.get("name", entry["path"]))
        results = [evaluate(emb, ds, spec, c_grid) for emb in points]
        i_map = int(np.argmax([r.macro_tune_map for r in results]))
        i_f1 = int(np.argmax([r.macro_tune_f1 for r in results]))
        logger.info(
            "dataset %s: selected %s for MAP, %s for F1",
            ds.name, points[i_map].method_tag, points[i_f1].method_tag,
        )
        tsv = _merged_lexclass_tsv(results[i_map], results[i_f1])
        output = args.output or entry.get("output")
        if output:
            _write_text(output, tsv)
            print(f"{ds.name}\tMACRO\tmap\t{results[i_map].macro_map:.6f}\t{points[i_map].method_tag}")
            print(f"{ds.name}\tMACRO\tf1\t{results[i_f1].macro_f1:.6f}\t{points[i_f1].method_tag}")
        else:
            sys.stdout.write(tsv)
    return 0


def cmd_eval_sim(args) -> int:
    cfg = _load_config(args.config)
    block = cfg.get("similarity")
    if not isinstance(block, dict) or not block.get("datasets"):
        raise ValueError("config needs a 'similarity' section with 'datasets'")
    if "embedding" in cfg:
        emb = load_text_embedding(cfg["embedding"])
    else:
        store = read_store(cfg["store"])
        emb, _ = aggregate(store, method_from_config(cfg.get("method", "avg_last")), threads=args.threads)
    lowercase = bool(block.get("lowercase", True))
    lines = []
    for entry in block["datasets"]:
        ds = load_sim_dataset(entry["path"], entry.get("name", entry["path"]))
        rho, covered, skipped = eval_similarity(emb, ds, lowercase=lowercase)
        lines.append(f"{ds.name}\t{rho:.4f}\t{covered}\t{skipped}")
    text = "\n".join(lines) + "\n"
    output = args.output or block.get("output")
    if output:
        _write_text(output, text)
    sys.stdout.write(text)
    return 0


def cmd_neighbors(args) -> int:
    emb = load_text_embedding(args.embedding)
    found = nearest_words(emb, args.word, args.n)
    for word, sim in found:
        print(f"{word}\t{sim:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mentionvec",
        description="Distill and evaluate static word vectors from mention-vector stores.",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect-store", help="print store header and vocabulary stats")
    p.add_argument("store")
    p.set_defaults(func=cmd_inspect_store)

    for name, func, needs_config in [
        ("aggregate", cmd_aggregate, True),
        ("eval-lexclass", cmd_eval_lexclass, True),
        ("eval-sim", cmd_eval_sim, True),
    ]:
        p = sub.add_parser(name)
        p.add_argument("--config", required=needs_config)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--output", default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("neighbors", help="print nearest words by cosine")
    p.add_argument("embedding")
    p.add_argument("word")
    p.add_argument("-n", type=int, default=10)
    p.set_defaults(func=cmd_neighbors)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except EvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MentionVecError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
