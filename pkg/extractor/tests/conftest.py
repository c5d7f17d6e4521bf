import os

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizerFast

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

# word stems the fixture draws from; "abcd"/"abef" split into two pieces each
VOCAB = [
    "[PAD]",
    "[UNK]",
    "[CLS]",
    "[SEP]",
    "[MASK]",
    "run",
    "walk",
    "jump",
    "see",
    "stop",
    "ab",
    "##cd",
    "##ef",
    "##gh",
    "xy",
    "##z",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> str:
    """A deterministic randomly initialized BERT small enough for CPU tests."""
    model_dir = tmp_path_factory.mktemp("tiny-bert")
    tokenizer = BertTokenizerFast(
        vocab={w: i for i, w in enumerate(VOCAB)}, do_lower_case=False
    )
    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=128,
    )
    model = BertModel(config)
    model.save_pretrained(model_dir)
    tokenizer.save_pretrained(model_dir)
    return str(model_dir)
