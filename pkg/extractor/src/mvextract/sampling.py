"""Corpus scanning and mention sampling.

A mention candidate is a corpus sentence (one per line) of at most
``max_sentence_words`` whitespace words containing a whole-token,
case-insensitive match of a target word.  Words below ``min_mentions``
candidates are dropped; words above ``max_mentions`` are downsampled with a
per-word seeded RNG, so results do not depend on vocabulary order or
parallelism.  Sentence ids are 0-based corpus line numbers.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from .config import ExtractionConfig, load_vocab

logger = logging.getLogger(__name__)

_PUNCT = ".,;:!?\"'()[]{}<>`“”‘’-–—/\\"


@dataclass(frozen=True)
class Mention:
    """One sampled occurrence of a target word in one corpus sentence."""

    sentence_id: int
    text: str
    char_start: int
    char_end: int

    @property
    def surface(self) -> str:
        return self.text[self.char_start : self.char_end]


@dataclass
class SamplingReport:
    n_sentences: int = 0
    n_too_long: int = 0
    dropped_words: dict[str, int] = None
    downsampled_words: dict[str, int] = None

    def __post_init__(self):
        self.dropped_words = self.dropped_words or {}
        self.downsampled_words = self.downsampled_words or {}


def _word_rng(seed: int, word: str) -> np.random.Generator:
    digest = hashlib.sha256(word.encode("utf-8")).digest()
    return np.random.default_rng(
        [seed & 0xFFFFFFFFFFFFFFFF, int.from_bytes(digest[:8], "big")]
    )


def _token_spans(line: str):
    """(start, end) character spans of whitespace tokens, punctuation trimmed."""
    spans = []
    pos = 0
    n = len(line)
    while pos < n:
        while pos < n and line[pos].isspace():
            pos += 1
        if pos >= n:
            break
        start = pos
        while pos < n and not line[pos].isspace():
            pos += 1
        end = pos
        while start < end and line[start] in _PUNCT:
            start += 1
        while end > start and line[end - 1] in _PUNCT:
            end -= 1
        if end > start:
            spans.append((start, end))
    return spans


def sample_mentions(
    config: ExtractionConfig,
) -> tuple[dict[str, list[Mention]], SamplingReport]:
    """Scan the corpus and sample mentions per vocabulary word.

    In a sentence with several occurrences of the word, one occurrence is
    chosen by the word's RNG stream.
    """
    vocab = load_vocab(config.vocab_path)
    targets = {w.lower(): w for w in vocab}
    if len(targets) != len(vocab):
        raise ValueError("vocabulary contains words identical up to case")

    occurrences: dict[str, list[tuple[int, str, list[tuple[int, int]]]]] = {
        w: [] for w in vocab
    }
    report = SamplingReport()
    with open(config.corpus_path, "r", encoding="utf-8") as f:
        for sentence_id, line in enumerate(f):
            line = line.rstrip("\n")
            report.n_sentences += 1
            if not line.strip():
                continue
            if len(line.split()) > config.max_sentence_words:
                report.n_too_long += 1
                continue
            found: dict[str, list[tuple[int, int]]] = {}
            for start, end in _token_spans(line):
                token = line[start:end].lower()
                word = targets.get(token)
                if word is not None:
                    found.setdefault(word, []).append((start, end))
            for word, spans in found.items():
                occurrences[word].append((sentence_id, line, spans))
    if report.n_sentences == 0:
        raise ValueError(f"empty corpus: {config.corpus_path}")

    samples: dict[str, list[Mention]] = {}
    for word in vocab:
        cands = occurrences[word]
        if len(cands) < config.min_mentions:
            report.dropped_words[word] = len(cands)
            logger.warning(
                "dropping %r: %d mention(s), need %d", word, len(cands), config.min_mentions
            )
            continue
        rng = _word_rng(config.seed, word)
        if len(cands) > config.max_mentions:
            report.downsampled_words[word] = len(cands)
            keep = np.sort(rng.choice(len(cands), size=config.max_mentions, replace=False))
            cands = [cands[i] for i in keep]
        mentions = []
        for sentence_id, text, spans in cands:
            start, end = spans[int(rng.integers(0, len(spans)))] if len(spans) > 1 else spans[0]
            mentions.append(Mention(sentence_id, text, start, end))
        samples[word] = mentions
    if not samples:
        raise ValueError("no vocabulary word has enough mentions")
    return samples, report


def write_sidecar(samples: dict[str, list[Mention]], path) -> None:
    """Provenance TSV: one ``sentence_id<TAB>text`` line per distinct sentence."""
    rows = {}
    for mentions in samples.values():
        for m in mentions:
            rows[m.sentence_id] = m.text
    with open(path, "w", encoding="utf-8") as f:
        for sid in sorted(rows):
            f.write(f"{sid}\t{rows[sid]}\n")
