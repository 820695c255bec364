"""Extraction command line: sample corpus mentions and emit stores.

    mvextract --config run.yaml --mode masked   --out masked.mvs
    mvextract --config run.yaml --mode unmasked --out unmasked.mvs
    mvextract --config run.yaml --mode input    --out input_vectors.txt

A provenance sidecar (``sentence_id<TAB>text``) is written next to store
outputs, or to --sidecar.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .config import load_config, load_vocab
from .encoder import ModelEncoder, export_input_vectors, extract_masked, extract_unmasked
from .sampling import sample_mentions, write_sidecar
from .writer import write_mention_store, write_text_embedding

logger = logging.getLogger("mvextract")


def run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.batch_size is not None:
        config = dataclasses.replace(config, batch_size=args.batch_size)
    encoder = ModelEncoder(config.model_name, device=config.device)

    if args.mode == "input":
        vocab = load_vocab(config.vocab_path)
        entries = export_input_vectors(vocab, encoder)
        write_text_embedding(args.out, entries)
        print(f"words\t{len(entries)}")
        print(f"dim\t{encoder.hidden_size}")
        print(f"output\t{args.out}")
        return 0

    config = dataclasses.replace(config, masked=(args.mode == "masked"))
    samples, sampling_report = sample_mentions(config)
    sidecar = args.sidecar or f"{args.out}.sentences.tsv"
    write_sidecar(samples, sidecar)

    extract = extract_masked if config.masked else extract_unmasked
    blocks, encode_report = extract(config, samples, encoder)
    layers = encoder.resolve_layers(config.layer_indices)
    write_mention_store(args.out, blocks, layers, masked=config.masked)

    total_mentions = sum(len(b.sentence_ids) for b in blocks)
    print(f"mode\t{args.mode}")
    print(f"words\t{len(blocks)}")
    print(f"mentions\t{total_mentions}")
    print(f"layers\t{','.join(str(l) for l in layers)}")
    print(f"dropped_short\t{len(sampling_report.dropped_words)}")
    print(f"downsampled\t{len(sampling_report.downsampled_words)}")
    print(f"skipped_mentions\t{encode_report.n_skipped}")
    print(f"output\t{args.out}")
    print(f"sidecar\t{sidecar}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mvextract",
        description="Extract mention-vector stores from a corpus with a masked language model.",
    )
    parser.add_argument("--config", required=True)
    parser.add_argument("--mode", required=True, choices=["masked", "unmasked", "input"])
    parser.add_argument("--out", required=True)
    parser.add_argument("--sidecar", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--batch-size", type=int, default=None)
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return run(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
