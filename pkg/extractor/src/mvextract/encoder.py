"""Contextualized vector extraction from a masked language model.

Masked mode replaces the sampled occurrence with the model's mask token and
takes the hidden state at the mask position; unmasked mode averages the
hidden states of the word-pieces spanning the occurrence.  Both collect the
requested 1-based encoder layers (hidden_states[l]; index 0 is the embedding
output and is never emitted).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import torch

from .config import ExtractionConfig
from .sampling import Mention
from .writer import WordBlock

logger = logging.getLogger(__name__)


@dataclass
class EncodeReport:
    skipped: dict[str, int] = field(default_factory=dict)
    dropped_words: list[str] = field(default_factory=list)

    def skip(self, word: str) -> None:
        self.skipped[word] = self.skipped.get(word, 0) + 1

    @property
    def n_skipped(self) -> int:
        return sum(self.skipped.values())


class ModelEncoder:
    """A loaded masked-LM encoder plus its tokenizer."""

    def __init__(self, model_name: str, device: str = "cpu"):
        from transformers import AutoModel, AutoTokenizer

        self.tokenizer = AutoTokenizer.from_pretrained(model_name, use_fast=True)
        if not getattr(self.tokenizer, "is_fast", False):
            raise ValueError(f"model {model_name!r} has no fast tokenizer (offsets needed)")
        if self.tokenizer.mask_token is None:
            raise ValueError(f"model {model_name!r} has no mask token")
        self.model = AutoModel.from_pretrained(model_name, output_hidden_states=True)
        self.model.to(device)
        self.model.eval()
        self.device = device
        self.num_layers = int(self.model.config.num_hidden_layers)
        self.hidden_size = int(self.model.config.hidden_size)
        self.max_length = min(int(getattr(self.model.config, "max_position_embeddings", 512)), 512)

    def resolve_layers(self, layer_indices) -> list[int]:
        if layer_indices is None:
            return [self.num_layers]
        bad = [l for l in layer_indices if l > self.num_layers]
        if bad:
            raise ValueError(f"layer indices {bad} exceed model depth {self.num_layers}")
        return list(layer_indices)

    @torch.no_grad()
    def hidden_states(self, texts: list[str]):
        """Tokenize a batch and return (encoding, hidden_states tuple)."""
        enc = self.tokenizer(
            texts,
            return_tensors="pt",
            padding=True,
            truncation=True,
            max_length=self.max_length,
            return_offsets_mapping=True,
            return_special_tokens_mask=True,
        )
        offsets = enc.pop("offset_mapping")
        specials = enc.pop("special_tokens_mask")
        model_inputs = {k: v.to(self.device) for k, v in enc.items()}
        out = self.model(**model_inputs)
        return enc, offsets, specials, out.hidden_states

    def input_embedding_table(self) -> np.ndarray:
        return self.model.get_input_embeddings().weight.detach().cpu().numpy()


def mask_occurrence(mention: Mention, mask_token: str) -> str:
    """Replace exactly the sampled occurrence with the mask token."""
    return (
        mention.text[: mention.char_start]
        + mask_token
        + mention.text[mention.char_end :]
    )


def _collect_word_blocks(
    config: ExtractionConfig,
    samples: dict[str, list[Mention]],
    encoder: ModelEncoder,
    per_mention_vector,
    prepare_text,
) -> tuple[list[WordBlock], EncodeReport]:
    layers = encoder.resolve_layers(config.layer_indices)
    report = EncodeReport()
    blocks = []
    for word, mentions in samples.items():
        vectors = []
        kept_ids = []
        for lo in range(0, len(mentions), config.batch_size):
            batch = mentions[lo : lo + config.batch_size]
            texts = [prepare_text(m) for m in batch]
            enc, offsets, specials, hidden = encoder.hidden_states(texts)
            for bi, mention in enumerate(batch):
                vec = per_mention_vector(bi, mention, enc, offsets, specials, hidden, layers)
                if vec is None:
                    report.skip(word)
                    logger.warning(
                        "skipping a mention of %r (sentence %d): position not found",
                        word, mention.sentence_id,
                    )
                    continue
                vectors.append(vec)
                kept_ids.append(mention.sentence_id)
        if not vectors:
            report.dropped_words.append(word)
            logger.warning("dropping %r: every mention failed to encode", word)
            continue
        blocks.append(WordBlock(word, kept_ids, np.stack(vectors)))
    if not blocks:
        raise ValueError("no word survived encoding")
    return blocks, report


def extract_masked(
    config: ExtractionConfig, samples: dict[str, list[Mention]], encoder: ModelEncoder
) -> tuple[list[WordBlock], EncodeReport]:
    """One vector per mention: the hidden state at the [MASK] position."""
    mask_id = encoder.tokenizer.mask_token_id

    def prepare(mention: Mention) -> str:
        return mask_occurrence(mention, encoder.tokenizer.mask_token)

    def vector(bi, mention, enc, offsets, specials, hidden, layers):
        row = enc["input_ids"][bi]
        positions = (row == mask_id).nonzero(as_tuple=True)[0]
        if len(positions) != 1:
            return None  # sentence already contained mask text, or truncated away
        pos = int(positions[0])
        return np.stack(
            [hidden[l][bi, pos].cpu().numpy().astype(np.float32) for l in layers]
        )

    return _collect_word_blocks(config, samples, encoder, vector, prepare)


def extract_unmasked(
    config: ExtractionConfig, samples: dict[str, list[Mention]], encoder: ModelEncoder
) -> tuple[list[WordBlock], EncodeReport]:
    """One vector per mention: the mean hidden state over the occurrence's
    word-pieces (single-piece words need no averaging)."""

    def prepare(mention: Mention) -> str:
        return mention.text

    def vector(bi, mention, enc, offsets, specials, hidden, layers):
        span_tokens = []
        for ti in range(offsets.shape[1]):
            if specials[bi, ti]:
                continue
            start, end = int(offsets[bi, ti, 0]), int(offsets[bi, ti, 1])
            if start == end:
                continue
            if start < mention.char_end and end > mention.char_start:
                span_tokens.append(ti)
        if not span_tokens:
            return None  # occurrence truncated away
        out = []
        for l in layers:
            piece_vecs = hidden[l][bi, span_tokens].cpu().numpy().astype(np.float64)
            out.append(piece_vecs.mean(axis=0).astype(np.float32))
        return np.stack(out)

    return _collect_word_blocks(config, samples, encoder, vector, prepare)


def export_input_vectors(
    vocab: list[str], encoder: ModelEncoder
) -> dict[str, np.ndarray]:
    """The model's static input embedding per word, word-pieces averaged."""
    table = encoder.input_embedding_table()
    entries = {}
    for word in vocab:
        ids = encoder.tokenizer(word, add_special_tokens=False)["input_ids"]
        if not ids:
            logger.warning("skipping %r: tokenizer produced no pieces", word)
            continue
        entries[word] = table[ids].astype(np.float64).mean(axis=0).astype(np.float32)
    if not entries:
        raise ValueError("no vocabulary word could be embedded")
    return entries
