"""Masked-language-model encoder yielding mask-position vectors.

A text is accepted when, after rewriting the canonical ``[MASK]`` literal to
the tokenizer's own mask token and tokenizing, exactly two mask tokens remain.
Each mask's vector is the hidden state at its position from one model layer
(the final layer unless configured otherwise), and the pair vector is the
elementwise mean of the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MASK_LITERAL = "[MASK]"


class ModelLoadError(RuntimeError):
    """The configured model id could not be loaded."""


class MaskCountError(ValueError):
    """A text did not hold exactly two mask tokens after tokenization."""

    def __init__(self, index: int, found: int) -> None:
        super().__init__(
            f"text {index}: expected exactly 2 mask tokens, found {found}"
        )
        self.index = index
        self.found = found


def normalize_masks(text: str, mask_token: str) -> str:
    """Rewrite the canonical mask literal to the tokenizer's mask token."""
    if mask_token == MASK_LITERAL:
        return text
    return text.replace(MASK_LITERAL, mask_token)


@dataclass(frozen=True)
class TextVectors:
    """Vectors for one accepted text.

    ``mask_vectors`` holds the two mask rows in sentence order as a
    (2, dim) float32 array; ``pair_vector`` is their elementwise mean.
    """

    mask_vectors: np.ndarray
    pair_vector: np.ndarray


class MaskedEncoder:
    """Loads a pre-trained masked LM once and embeds probe texts with it.

    There is deliberately no default model id; the caller names one (a hub id
    or a local directory). ``layer`` selects which hidden-states entry to
    read: 0 is the embedding output, -1 the final layer.
    """

    def __init__(self, model_id: str, *, device: str = "cpu", layer: int = -1) -> None:
        # torch/transformers imports stay local so argument errors and
        # load failures both surface here, where callers map them to
        # exit codes or a 503.
        try:
            from transformers import AutoModel, AutoTokenizer

            self._tokenizer = AutoTokenizer.from_pretrained(model_id)
            self._model = AutoModel.from_pretrained(model_id)
        except Exception as exc:
            raise ModelLoadError(f"cannot load model {model_id!r}: {exc}") from exc
        if self._tokenizer.mask_token is None or self._tokenizer.mask_token_id is None:
            raise ModelLoadError(f"model {model_id!r} advertises no mask token")
        depth = int(getattr(self._model.config, "num_hidden_layers"))
        # hidden_states has depth+1 entries (embeddings first)
        if not -(depth + 1) <= layer <= depth:
            raise ValueError(
                f"layer {layer} out of range for a {depth}-layer model"
            )
        self._model.to(device)
        self._model.eval()
        self._device = device
        self.layer = int(layer)
        self.model_id = str(model_id)
        self.dim = int(self._model.config.hidden_size)
        self.mask_token = str(self._tokenizer.mask_token)

    def encode(
        self, texts: Sequence[str], deterministic: bool = True
    ) -> list[TextVectors]:
        """Embed a batch of two-mask texts, order-preserving.

        Deterministic mode runs the model in evaluation mode (dropout off)
        with fixed seeds, so identical requests yield identical vectors.
        Without it dropout stays live and repeated calls differ.
        """
        import torch

        if not texts:
            raise ValueError("no texts to embed")
        rewritten = [normalize_masks(text, self.mask_token) for text in texts]
        batch = self._tokenizer(
            rewritten, return_tensors="pt", padding=True, truncation=True
        )
        mask_id = self._tokenizer.mask_token_id
        positions = []
        for i in range(len(texts)):
            where = (batch["input_ids"][i] == mask_id).nonzero(as_tuple=True)[0]
            if int(where.numel()) != 2:
                raise MaskCountError(i, int(where.numel()))
            positions.append(where)
        if deterministic:
            self._model.eval()
            torch.manual_seed(0)
        else:
            self._model.train()
        with torch.no_grad():
            output = self._model(
                **{k: v.to(self._device) for k, v in batch.items()},
                output_hidden_states=True,
            )
        hidden = output.hidden_states[self.layer]
        results = []
        for i, where in enumerate(positions):
            rows = hidden[i, where].to(torch.float32).cpu().numpy()
            pair = rows.mean(axis=0, dtype=np.float64).astype(np.float32)
            results.append(TextVectors(rows, pair))
        return results
