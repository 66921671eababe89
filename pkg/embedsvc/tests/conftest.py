import pytest

# small enough to initialize in milliseconds, real enough to exercise the
# full tokenize-forward-gather path
VOCAB = [
    "[PAD]",
    "[UNK]",
    "[CLS]",
    "[SEP]",
    "[MASK]",
    "the",
    "a",
    "is",
    "to",
    "what",
    "was",
    "founded",
    "by",
    "of",
    "in",
    "and",
    "city",
    "company",
    "married",
    "relation",
    "between",
    "different",
    "pair",
    "analogous",
    ".",
    ",",
    "##s",
    "##ing",
    "alpha",
    "beta",
    "gamma",
    "delta",
]


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    """A tiny randomly initialized masked LM saved to disk, loadable offline."""
    import torch
    from transformers import BertConfig, BertModel, BertTokenizerFast

    root = tmp_path_factory.mktemp("tinybert")
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file), do_lower_case=True)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=16,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=64,
    )
    torch.manual_seed(7)
    model = BertModel(config)
    target = root / "model"
    model.save_pretrained(str(target))
    tokenizer.save_pretrained(str(target))
    return str(target)


@pytest.fixture(scope="session")
def encoder(model_dir):
    from embedsvc import MaskedEncoder

    return MaskedEncoder(model_dir)
