import json
from pathlib import Path

import pytest

MINI_DATA = (Path(__file__).resolve().parents[2] / "src" / "trusteq" / "data")


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    """A tiny random-weight BERT classifier saved as a local checkpoint.

    Public hub checkpoints are unreachable in this environment, so the
    bridge is exercised against a locally fabricated one: same file
    format, same loading path.
    """
    import torch
    from transformers import BertConfig, BertForSequenceClassification
    from transformers import BertTokenizerFast

    out = tmp_path_factory.mktemp("checkpoint")

    words = set()
    with open(MINI_DATA / "mini_sentiment.jsonl", encoding="utf-8") as fh:
        for line in fh:
            words.update(json.loads(line)["text_a"].split())
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + sorted(words)
    vocab_file = out / "vocab.txt"
    vocab_file.write_text("\n".join(vocab) + "\n")
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file),
                                  do_lower_case=True)

    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
        num_labels=2,
        id2label={0: "negative", 1: "positive"},
        label2id={"negative": 0, "positive": 1},
    )
    model = BertForSequenceClassification(config)
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return str(out)
