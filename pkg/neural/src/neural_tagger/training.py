"""Training loop: joint loss of tag prediction and refined-tag generation.

The vocabulary-only mode optimizes the tag-head loss alone; the joint mode
adds the generation-head loss over refined and boundary slots, with the
total always the plain sum of the two parts. Optimized with AdamW under a
linear warmup then linear decay schedule. A NaN loss aborts with
diagnostics rather than training onward.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import torch
from torch import nn

from .model import MaskedTagger, ModelConfig
from .templates import MaskingTemplate
from .tokenizer import SubwordTokenizer

MODE_MP = "mp"
MODE_MRPG = "mrpg"


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainingLoss:
    l_p: float
    l_g: float

    @property
    def total(self) -> float:
        return self.l_p + self.l_g


@dataclass
class TrainConfig:
    mode: str = MODE_MRPG
    epochs: int = 3
    batch_size: int = 32
    lr: float = 1e-3
    weight_decay: float = 0.01
    warmup_fraction: float = 0.1
    seed: int = 0
    checkpoint: str | None = None  # reserved for loading pretrained weights


@dataclass
class TrainHistory:
    step_losses: list[TrainingLoss] = field(default_factory=list)

    def epoch_means(self, steps_per_epoch: int) -> list[float]:
        totals = [loss.total for loss in self.step_losses]
        return [
            sum(totals[i : i + steps_per_epoch]) / len(totals[i : i + steps_per_epoch])
            for i in range(0, len(totals), steps_per_epoch)
        ]


def _collate(batch: list[MaskingTemplate], pad_id: int, device) -> dict:
    width = max(len(t.input_ids) for t in batch)
    input_ids = torch.full((len(batch), width), pad_id, dtype=torch.long)
    pad_mask = torch.ones((len(batch), width), dtype=torch.bool)
    meta_index: list[tuple[int, int, int]] = []  # row, position, tag target
    gen_index: list[tuple[int, int, int]] = []  # row, position, token target
    for row, template in enumerate(batch):
        ids = torch.tensor(template.input_ids, dtype=torch.long)
        input_ids[row, : len(ids)] = ids
        pad_mask[row, : len(ids)] = False
        for slot in template.slots:
            if slot.kind == "meta":
                meta_index.append((row, slot.position, slot.target))
            else:
                gen_index.append((row, slot.position, slot.target))
    return {
        "input_ids": input_ids.to(device),
        "pad_mask": pad_mask.to(device),
        "meta_index": meta_index,
        "gen_index": gen_index,
    }


def batch_losses(model: MaskedTagger, batch: dict, mode: str) -> tuple[torch.Tensor, torch.Tensor]:
    """(tag-head loss, generation-head loss) for one collated batch.

    Each head's loss is the mean cross entropy over its slots; a head with
    no slots in the batch contributes exactly zero.
    """
    hidden = model(batch["input_ids"], batch["pad_mask"])
    ce = nn.CrossEntropyLoss()
    zero = hidden.sum() * 0.0
    l_p = zero
    if batch["meta_index"]:
        rows = torch.tensor([i[0] for i in batch["meta_index"]])
        cols = torch.tensor([i[1] for i in batch["meta_index"]])
        targets = torch.tensor([i[2] for i in batch["meta_index"]])
        logits = model.tag_head(hidden[rows, cols])
        l_p = ce(logits, targets)
    l_g = zero
    if mode == MODE_MRPG and batch["gen_index"]:
        rows = torch.tensor([i[0] for i in batch["gen_index"]])
        cols = torch.tensor([i[1] for i in batch["gen_index"]])
        targets = torch.tensor([i[2] for i in batch["gen_index"]])
        logits = model.generation_head(hidden[rows, cols])
        l_g = ce(logits, targets)
    return l_p, l_g


def train(
    instances: list[MaskingTemplate],
    tokenizer: SubwordTokenizer,
    tags: list[str],
    model_config: ModelConfig | None = None,
    train_config: TrainConfig = TrainConfig(),
) -> tuple[MaskedTagger, TrainHistory]:
    if not instances:
        raise ValueError("no training instances")
    if model_config is None:
        model_config = ModelConfig(vocab_size=len(tokenizer), n_tags=len(tags))
    torch.manual_seed(train_config.seed)
    model = MaskedTagger(model_config)
    model.train()
    device = torch.device("cpu")

    optimizer = torch.optim.AdamW(
        model.parameters(), lr=train_config.lr, weight_decay=train_config.weight_decay
    )
    steps_per_epoch = (len(instances) + train_config.batch_size - 1) // train_config.batch_size
    total_steps = max(steps_per_epoch * train_config.epochs, 1)
    warmup = max(int(total_steps * train_config.warmup_fraction), 1)

    def lr_lambda(step):
        if step < warmup:
            return (step + 1) / warmup
        remaining = total_steps - warmup
        if remaining <= 0:
            return 1.0
        return max(0.0, (total_steps - step) / remaining)

    scheduler = torch.optim.lr_scheduler.LambdaLR(optimizer, lr_lambda)

    rng = random.Random(train_config.seed)
    history = TrainHistory()
    order = list(range(len(instances)))
    step = 0
    for _epoch in range(train_config.epochs):
        rng.shuffle(order)
        for start in range(0, len(order), train_config.batch_size):
            chunk = [instances[i] for i in order[start : start + train_config.batch_size]]
            batch = _collate(chunk, tokenizer.pad_id, device)
            l_p, l_g = batch_losses(model, batch, train_config.mode)
            total = l_p + l_g
            if not torch.isfinite(total):
                raise TrainingDiverged(
                    f"loss became non-finite at step {step} "
                    f"(l_p={l_p.item()}, l_g={l_g.item()}, lr={scheduler.get_last_lr()[0]:.2e}, "
                    f"batch_size={len(chunk)})"
                )
            optimizer.zero_grad()
            total.backward()
            optimizer.step()
            scheduler.step()
            history.step_losses.append(
                TrainingLoss(l_p=float(l_p.detach()), l_g=float(l_g.detach()))
            )
            step += 1
    model.eval()
    return model, history
