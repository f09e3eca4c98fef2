"""Command line: train a tagging model on pipeline-produced files, then run
inference to emit the meta-prediction and token-stream files the decoder
consumes.

Config file (JSON):
{
  "corpus": "out/askubuntu/corpus.jsonl",
  "split": "out/askubuntu/split.json",
  "vocab": "out/askubuntu/vocab_90.json",
  "mode": "mrpg",                // or "mp"
  "checkpoint": null,            // optional pretrained weights
  "lr": 1e-3, "batch_size": 32, "epochs": 3,
  "max_len": 256, "n_refined": 12, "seed": 0,
  "d_model": 96, "n_layers": 2, "n_heads": 4, "ffn_dim": 192
}
"""

from __future__ import annotations

import argparse
import json
import sys

from . import dataio
from .inference import infer_many
from .model import MaskedTagger, ModelConfig, load_checkpoint, save_checkpoint
from .templates import build_mp_instance, build_mrpg_instance
from .tokenizer import SubwordTokenizer
from .training import MODE_MP, MODE_MRPG, TrainConfig, train


def load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _questions_for(config: dict, part: str) -> list[dataio.Question]:
    questions = dataio.read_questions(config["corpus"])
    split = dataio.read_split(config["split"])
    wanted = split[part]
    return sorted((q for q in questions if q.id in wanted), key=lambda q: q.id)


def cmd_train(args) -> int:
    config = load_config(args.config)
    mode = config.get("mode", MODE_MRPG)
    max_len = config.get("max_len", 256)
    train_questions = _questions_for(config, "train")
    vocab_tags = dataio.read_vocab_tags(config["vocab"])
    tag_index = {t: i for i, t in enumerate(vocab_tags)}
    vocab_set = set(vocab_tags)

    tokenizer = SubwordTokenizer.build(
        texts=[f"{q.title} {q.body}" for q in train_questions],
        tags=[t for q in train_questions for t in q.tags],
        max_words=config.get("max_words", 4000),
    )
    build = build_mp_instance if mode == MODE_MP else build_mrpg_instance
    instances = []
    skipped = 0
    for q in train_questions:
        template = build(q, vocab_set, tokenizer, tag_index, max_len=max_len)
        if template is None:
            skipped += 1
        else:
            instances.append(template)
    print(f"built {len(instances)} {mode} instances ({skipped} posts skipped)")

    model_config = ModelConfig(
        vocab_size=len(tokenizer),
        n_tags=len(vocab_tags),
        d_model=config.get("d_model", 96),
        n_heads=config.get("n_heads", 4),
        n_layers=config.get("n_layers", 2),
        ffn_dim=config.get("ffn_dim", 192),
        max_len=max_len,
        seed=config.get("seed", 0),
    )
    train_config = TrainConfig(
        mode=mode,
        epochs=config.get("epochs", 3),
        batch_size=config.get("batch_size", 32),
        lr=config.get("lr", 1e-3),
        seed=config.get("seed", 0),
        checkpoint=config.get("checkpoint"),
    )
    model, history = train(instances, tokenizer, vocab_tags, model_config, train_config)
    first = history.step_losses[0].total
    last = history.step_losses[-1].total
    print(f"loss: first step {first:.4f} -> last step {last:.4f} over {len(history.step_losses)} steps")
    save_checkpoint(model, tokenizer.to_payload(), vocab_tags, args.model_out)
    print(f"saved model -> {args.model_out}")
    return 0


def cmd_infer(args) -> int:
    config = load_config(args.config)
    mode = config.get("mode", MODE_MRPG)
    model, tokenizer_payload, tags = load_checkpoint(args.model)
    tokenizer = SubwordTokenizer.from_payload(tokenizer_payload)
    questions = _questions_for(config, args.part)
    results = infer_many(
        questions,
        model,
        tokenizer,
        tags,
        mode=mode,
        n_refined=config.get("n_refined", 12),
        max_len=config.get("max_len", model.config.max_len),
    )
    dataio.write_meta_predictions(((r.post_id, r.meta_tags) for r in results), args.out_meta)
    print(f"wrote meta predictions for {len(results)} posts -> {args.out_meta}")
    if args.out_streams:
        dataio.write_token_streams(((r.post_id, r.stream) for r in results), args.out_streams)
        print(f"wrote token streams -> {args.out_streams}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neural-tagger")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on the corpus/vocab files")
    p.add_argument("--config", required=True)
    p.add_argument("--model-out", required=True)

    p = sub.add_parser("infer", help="emit meta predictions and token streams")
    p.add_argument("--config", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--part", default="test", choices=["train", "dev", "test"])
    p.add_argument("--out-meta", required=True)
    p.add_argument("--out-streams")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(args)
        if args.command == "infer":
            return cmd_infer(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
