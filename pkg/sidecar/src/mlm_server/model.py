"""Masked-LM wrapper computing full-vocabulary distributions at one position.

Inference always runs in deterministic evaluation mode (no dropout); the
token at the masked index is replaced with the model's mask token before the
forward pass, and the softmax over the vocabulary at that position is
returned in float32.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import torch
from pydantic import BaseModel, Field
from transformers import AutoModelForMaskedLM, AutoTokenizer


class ServerConfig(BaseModel):
    model_path: str
    backend_id: str | None = None  # defaults to model_path
    host: str = "127.0.0.1"
    port: int = 8301
    max_batch_size: int = Field(default=32, ge=1)
    device: str = "cpu"

    model_config = {"extra": "forbid", "protected_namespaces": ()}

    def resolved_backend_id(self) -> str:
        return self.backend_id or self.model_path


class MaskedLmModel:
    def __init__(self, config: ServerConfig):
        self.config = config
        self.backend_id = config.resolved_backend_id()
        tokenizer = AutoTokenizer.from_pretrained(config.model_path)
        if tokenizer.mask_token_id is None:
            raise ValueError(f"{config.model_path} has no mask token")
        self.mask_token_id = int(tokenizer.mask_token_id)
        pad = tokenizer.pad_token_id
        self.pad_token_id = int(pad) if pad is not None else 0
        self._model = AutoModelForMaskedLM.from_pretrained(config.model_path)
        self._model.to(torch.device(config.device))
        self._model.eval()
        self.vocab_size = int(self._model.config.vocab_size)
        self.max_positions = int(getattr(self._model.config,
                                         "max_position_embeddings", 512))

    def validate_query(self, tokens: Sequence[int], masked_index: int) -> str | None:
        """Return an error message for a malformed query, else None."""
        if not tokens:
            return "tokens must be non-empty"
        if not 0 <= masked_index < len(tokens):
            return f"masked_index {masked_index} out of range for {len(tokens)} tokens"
        if len(tokens) > self.max_positions:
            return f"sequence length {len(tokens)} exceeds model limit {self.max_positions}"
        bad = [t for t in tokens if not 0 <= t < self.vocab_size]
        if bad:
            return f"token ids out of vocabulary range: {bad[:5]}"
        return None

    def distributions(self, queries: Sequence[tuple[Sequence[int], int]]) -> list[np.ndarray]:
        """Float32 distributions for (tokens, masked_index) queries, in order."""
        out: list[np.ndarray] = []
        for lo in range(0, len(queries), self.config.max_batch_size):
            out.extend(self._forward(queries[lo:lo + self.config.max_batch_size]))
        return out

    def _forward(self, chunk: Sequence[tuple[Sequence[int], int]]) -> list[np.ndarray]:
        width = max(len(tokens) for tokens, _ in chunk)
        input_ids = torch.full((len(chunk), width), self.pad_token_id, dtype=torch.long)
        attention = torch.zeros((len(chunk), width), dtype=torch.long)
        for row, (tokens, masked_index) in enumerate(chunk):
            ids = list(tokens)
            ids[masked_index] = self.mask_token_id
            input_ids[row, :len(ids)] = torch.tensor(ids, dtype=torch.long)
            attention[row, :len(ids)] = 1
        device = next(self._model.parameters()).device
        with torch.no_grad():
            logits = self._model(input_ids=input_ids.to(device),
                                 attention_mask=attention.to(device)).logits
        results = []
        for row, (_, masked_index) in enumerate(chunk):
            probs = torch.softmax(logits[row, masked_index].float(), dim=-1)
            results.append(probs.cpu().numpy().astype(np.float32))
        return results
