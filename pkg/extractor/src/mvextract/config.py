"""Extraction run configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml


@dataclass
class ExtractionConfig:
    corpus_path: str
    vocab_path: str
    model_name: str
    max_sentence_words: int = 64
    min_mentions: int = 10
    max_mentions: int = 500
    masked: bool = True
    layer_indices: list[int] | None = None  # None = last layer only
    seed: int = 0
    batch_size: int = 32
    device: str = "cpu"

    def __post_init__(self):
        if not 0 < self.min_mentions <= self.max_mentions:
            raise ValueError(
                f"need 0 < min_mentions <= max_mentions, got "
                f"{self.min_mentions}/{self.max_mentions}"
            )
        if self.max_sentence_words < 1:
            raise ValueError("max_sentence_words must be positive")
        if self.layer_indices is not None:
            layers = [int(l) for l in self.layer_indices]
            if not layers or any(l < 1 for l in layers):
                raise ValueError("layer indices must be positive")
            if any(b <= a for a, b in zip(layers, layers[1:])):
                raise ValueError("layer indices must be strictly increasing")
            self.layer_indices = layers
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


def load_config(path) -> ExtractionConfig:
    with open(path, "r", encoding="utf-8") as f:
        raw = yaml.safe_load(f)
    if not isinstance(raw, dict):
        raise ValueError(f"config {path} must be a mapping")
    known = {
        "corpus": "corpus_path",
        "vocab": "vocab_path",
        "model": "model_name",
        "max_sentence_words": "max_sentence_words",
        "min_mentions": "min_mentions",
        "max_mentions": "max_mentions",
        "masked": "masked",
        "layer_indices": "layer_indices",
        "seed": "seed",
        "batch_size": "batch_size",
        "device": "device",
    }
    unknown = set(raw) - set(known)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {dest: raw[src] for src, dest in known.items() if src in raw}
    for required in ("corpus_path", "vocab_path", "model_name"):
        if required not in kwargs:
            raise ValueError(f"config is missing '{required.removesuffix('_path').removesuffix('_name')}'")
    return ExtractionConfig(**kwargs)


def load_vocab(path) -> list[str]:
    """One target word per line; order is preserved, duplicates rejected."""
    words = []
    seen = set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            word = line.strip()
            if not word or word.startswith("#"):
                continue
            if word in seen:
                raise ValueError(f"{path}:{lineno}: duplicate vocabulary word {word!r}")
            seen.add(word)
            words.append(word)
    if not words:
        raise ValueError(f"{path}: empty vocabulary")
    return words
