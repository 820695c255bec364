from __future__ import annotations

import numpy as np
import pytest
import torch

from mvextract import ExtractionConfig, ModelEncoder

# Targets present in the tiny tokenizer vocabulary (single word-piece) and
# targets deliberately absent from it (split into several pieces).
TARGETS_SINGLE = [
    "apple", "banana", "cherry", "grape", "melon", "peach", "olive",
    "hammer", "wrench", "chisel", "trout", "salmon", "herring", "chair", "table",
]
TARGETS_MULTI = [
    "plum", "fig", "sofa", "stool", "bench", "desk", "lamp",
    "drill", "pliers", "sardine", "anchovy", "mackerel", "rug", "kettle", "spoon",
]
TARGETS = TARGETS_SINGLE + TARGETS_MULTI

FILLERS = ["kitchen", "garden", "market", "river", "shelf", "road", "house", "farm", "shop", "port"]

TEMPLATES = [
    "the {w} is on the {f}",
    "a {w} was found near the {f}",
    "people in the {f} like the {w}",
    "that {w} from the {f} looks very old",
    "someone left a {w} by the {f}",
    "the {f} was full of {w} crates",
    "every {w} in the {f} was counted twice",
    "nobody wanted the {w} from the {f}",
    "a small {w} sat beside the {f}",
    "the old {w} near the {f} fell over",
    "we sold the {w} at the {f} yesterday",
    "one {w} rolled from the {f} to the {f2}",
]


def write_corpus(path, n_sentences, seed, targets=TARGETS, extra_lines=()):
    rng = np.random.default_rng(seed)
    lines = []
    for i in range(n_sentences):
        w = targets[int(rng.integers(0, len(targets)))]
        t = TEMPLATES[int(rng.integers(0, len(TEMPLATES)))]
        f = FILLERS[int(rng.integers(0, len(FILLERS)))]
        f2 = FILLERS[int(rng.integers(0, len(FILLERS)))]
        lines.append(t.format(w=w, f=f, f2=f2))
    lines.extend(extra_lines)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_vocab(path, words):
    path.write_text("\n".join(words) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A randomly initialized 4-layer BERT with a letter-level wordpiece
    vocabulary plus the single-piece targets; fully offline."""
    from transformers import BertConfig, BertModel, BertTokenizerFast

    d = tmp_path_factory.mktemp("tiny_model")
    letters = list("abcdefghijklmnopqrstuvwxyz")
    pieces = (
        ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
        + letters
        + ["##" + c for c in letters]
        + TARGETS_SINGLE
        + FILLERS
        + ["sar", "##dine"]  # makes "sardine" exactly two pieces
    )
    (d / "vocab.txt").write_text("\n".join(pieces) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast.from_pretrained(str(d))
    torch.manual_seed(12345)
    config = BertConfig(
        vocab_size=len(pieces),
        hidden_size=32,
        num_hidden_layers=4,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=128,
    )
    model = BertModel(config)
    model.eval()
    tokenizer.save_pretrained(str(d))
    model.save_pretrained(str(d))
    return str(d)


@pytest.fixture(scope="session")
def encoder(tiny_model_dir):
    return ModelEncoder(tiny_model_dir, device="cpu")


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """A few hundred sentences plus targeted edge cases."""
    d = tmp_path_factory.mktemp("small_corpus")
    long_sentence = "apple " + " ".join(["filler"] * 70)
    extra = [
        "the zeppelin flew over the market",  # rare word: 7 mentions total
        *["a zeppelin was seen near the river"] * 6,
        long_sentence,  # > 64 words, must be excluded
        "the apple and the apple sat together",  # duplicate occurrence
        "",  # blank line
    ]
    corpus = write_corpus(d / "corpus.txt", 900, seed=5, extra_lines=extra)
    vocab = write_vocab(d / "vocab.txt", TARGETS + ["zeppelin"])
    return corpus, vocab


def make_config(corpus, vocab, model, **kw):
    defaults = dict(
        corpus_path=str(corpus),
        vocab_path=str(vocab),
        model_name=str(model),
        min_mentions=8,
        max_mentions=20,
        seed=0,
        batch_size=16,
    )
    defaults.update(kw)
    return ExtractionConfig(**defaults)
