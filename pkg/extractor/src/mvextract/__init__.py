"""Produce mention-vector stores from a corpus and a masked language model."""

from .config import ExtractionConfig, load_config, load_vocab
from .encoder import (
    EncodeReport,
    ModelEncoder,
    export_input_vectors,
    extract_masked,
    extract_unmasked,
    mask_occurrence,
)
from .sampling import Mention, SamplingReport, sample_mentions, write_sidecar
from .writer import WordBlock, write_mention_store, write_text_embedding

__version__ = "0.1.0"

__all__ = [
    "EncodeReport",
    "ExtractionConfig",
    "Mention",
    "ModelEncoder",
    "SamplingReport",
    "WordBlock",
    "export_input_vectors",
    "extract_masked",
    "extract_unmasked",
    "load_config",
    "load_vocab",
    "mask_occurrence",
    "sample_mentions",
    "write_mention_store",
    "write_sidecar",
    "write_text_embedding",
]
