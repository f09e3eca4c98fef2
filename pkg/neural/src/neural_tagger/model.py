"""Two-head masked language model for tag prediction.

A compact transformer encoder with a generation head over the tokenizer
vocabulary and a tag head over the MetaTag vocabulary (one logit per tag,
so multi-subword vocabulary tags still fill a single mask slot). The
default configuration is deliberately small for CPU-scale training; a
larger pretrained checkpoint can be dropped in by raising the dimensions
and loading its weights.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    n_tags: int
    d_model: int = 96
    n_heads: int = 4
    n_layers: int = 2
    ffn_dim: int = 192
    max_len: int = 256
    dropout: float = 0.1
    seed: int = 0


class MaskedTagger(nn.Module):
    def __init__(self, config: ModelConfig):
        torch.manual_seed(config.seed)
        super().__init__()
        self.config = config
        self.token_embedding = nn.Embedding(config.vocab_size, config.d_model)
        self.position_embedding = nn.Embedding(config.max_len, config.d_model)
        layer = nn.TransformerEncoderLayer(
            d_model=config.d_model,
            nhead=config.n_heads,
            dim_feedforward=config.ffn_dim,
            dropout=config.dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=config.n_layers)
        self.norm = nn.LayerNorm(config.d_model)
        self.generation_head = nn.Linear(config.d_model, config.vocab_size)
        self.tag_head = nn.Linear(config.d_model, config.n_tags)

    def forward(self, input_ids: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        """input_ids, pad_mask: (batch, seq); True in pad_mask marks padding."""
        positions = torch.arange(input_ids.shape[1], device=input_ids.device)
        hidden = self.token_embedding(input_ids) + self.position_embedding(positions)[None, :, :]
        hidden = self.encoder(hidden, src_key_padding_mask=pad_mask)
        return self.norm(hidden)


def save_checkpoint(model: MaskedTagger, tokenizer_payload: dict, tags: list[str], path) -> None:
    torch.save(
        {
            "model_config": asdict(model.config),
            "state_dict": model.state_dict(),
            "tokenizer": tokenizer_payload,
            "tags": tags,
        },
        path,
    )


def load_checkpoint(path) -> tuple[MaskedTagger, dict, list[str]]:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    config = ModelConfig(**payload["model_config"])
    model = MaskedTagger(config)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload["tokenizer"], payload["tags"]
