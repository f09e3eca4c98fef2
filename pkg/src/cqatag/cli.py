"""Command-line pipeline: ingest, analyze, vocab, train-baseline, predict,
eval, report.

Every command is deterministic given identical inputs (no timestamps, seeded
randomness, sorted output), so reruns produce byte-identical artifacts.
Exit codes: 0 ok, 1 user/configuration error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from dataclasses import dataclass, field

from . import __version__, reports
from .analytics import build_tag_frequency
from .baselines import (
    FeatureConfig,
    SgdHyperparams,
    featurize,
    load_model,
    majority_predict,
    majority_prediction_set,
    predict_topk_batch,
    save_model,
    train_ovr_sgd,
    transform,
)
from .corpus import (
    DomainCorpus,
    build_corpus,
    load_corpus,
    load_split,
    save_corpus,
    save_split,
    split_corpus,
    split_manifest_hash,
)
from .decoder import assemble_tags, merge_predictions, read_token_streams, select_topk_refined
from .errors import ConfigError, CqatagError
from .evaluate import (
    aggregate_runs,
    evaluate_hits,
    head_contributions,
    oov_stats,
    wilcoxon_one_sided,
)
from .ingest import RejectsReport, parse_posts_stream, strip_html
from .predictions import (
    SOURCE_G_HEAD,
    SOURCE_P_HEAD,
    PredictionSet,
    load_predictions,
    save_predictions,
)
from .vocab import build_meta_vocab, load_vocab, save_vocab

MODE_TFIDF = "tfidf"
MODE_BOW = "bow"
MODE_MAJORITY = "majority"
MODE_NEURAL = "neural"


@dataclass
class DomainConfig:
    name: str
    dump: str | None = None


@dataclass
class PipelineConfig:
    output_dir: str
    domains: list[DomainConfig]
    seed: int = 13
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)
    coverage_targets: list[float] = field(default_factory=lambda: [85.0, 90.0, 95.0])
    stability_deltas: list[float] = field(default_factory=lambda: [80.0, 90.0, 99.0])
    eval_ks: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    n_meta: int = 2
    n_refined: int = 3
    feature: FeatureConfig = field(default_factory=FeatureConfig)
    sgd_alpha: float = 1e-5
    sgd_penalty: str = "l2"
    sgd_epochs: int = 20

    @classmethod
    def from_file(cls, path: str) -> "PipelineConfig":
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
        try:
            domains = [
                DomainConfig(name=d["name"], dump=d.get("dump")) for d in raw.get("domains", [])
            ]
            baseline = raw.get("baseline", {})
            config = cls(
                output_dir=raw["output_dir"],
                domains=domains,
                seed=raw.get("seed", 13),
                ratios=tuple(raw.get("ratios", (0.7, 0.1, 0.2))),
                coverage_targets=[float(t) for t in raw.get("coverage_targets", [85, 90, 95])],
                stability_deltas=[float(d) for d in raw.get("stability_deltas", [80, 90, 99])],
                eval_ks=[int(k) for k in raw.get("eval_ks", [1, 2, 3, 4, 5])],
                n_meta=raw.get("n_meta", 2),
                n_refined=raw.get("n_refined", 3),
                feature=FeatureConfig(
                    ngram_range=tuple(baseline.get("ngram_range", (1, 2))),
                    min_document_frequency=baseline.get("min_document_frequency", 0.00009),
                    max_features=baseline.get("max_features", 200000),
                ),
                sgd_alpha=baseline.get("alpha", 1e-5),
                sgd_penalty=baseline.get("penalty", "l2"),
                sgd_epochs=baseline.get("epochs", 20),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad config: {exc}") from exc
        config.validate()
        return config

    def validate(self) -> None:
        names = [d.name for d in self.domains]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate domain names in config: {names}")
        for target in self.coverage_targets:
            if not 0 < target <= 100:
                raise ConfigError(f"coverage target {target} outside (0, 100]")
        for delta in self.stability_deltas:
            if not 0 < delta <= 100:
                raise ConfigError(f"stability delta {delta} outside (0, 100]")
        if self.n_meta + self.n_refined > 5:
            raise ConfigError("n_meta + n_refined must not exceed 5")

    def domain(self, name: str) -> DomainConfig:
        for d in self.domains:
            if d.name == name:
                return d
        raise ConfigError(f"domain {name!r} not in config ({[d.name for d in self.domains]})")

    def domain_dir(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def corpus_path(self, name: str) -> str:
        return os.path.join(self.domain_dir(name), "corpus.jsonl")

    def split_path(self, name: str) -> str:
        return os.path.join(self.domain_dir(name), "split.json")

    def vocab_path(self, name: str, target: float) -> str:
        return os.path.join(self.domain_dir(name), f"vocab_{target:g}.json")

    def model_path(self, name: str, mode: str, seed: int) -> str:
        return os.path.join(self.domain_dir(name), f"model_{mode}_seed{seed}.json")

    def predictions_path(self, name: str, mode: str, seed: int) -> str:
        return os.path.join(self.domain_dir(name), f"predictions_{mode}_seed{seed}.jsonl")


def _selected_domains(config: PipelineConfig, only: str | None) -> list[DomainConfig]:
    if only is None:
        return list(config.domains)
    return [config.domain(only)]


def _load_domain_corpus(config: PipelineConfig, name: str) -> DomainCorpus:
    path = config.corpus_path(name)
    if not os.path.exists(path):
        raise ConfigError(f"no corpus for domain {name!r} at {path}; run `cqatag ingest` first")
    return load_corpus(path)


def _load_domain_split(config: PipelineConfig, name: str):
    path = config.split_path(name)
    if not os.path.exists(path):
        raise ConfigError(f"no split for domain {name!r} at {path}; run `cqatag ingest` first")
    return load_split(path)


def _stripped_text(post) -> str:
    title = post.title or ""
    return f"{title} {strip_html(post.body)}".strip()


# ---------------------------------------------------------------------------
# Commands


def cmd_ingest(config: PipelineConfig, only: str | None = None) -> int:
    domains = _selected_domains(config, only)
    if not domains:
        print("warning: no domains configured; nothing to ingest", file=sys.stderr)
        return 0
    # Fail fast on every missing dump before doing any work.
    for domain in domains:
        if not domain.dump:
            raise ConfigError(f"domain {domain.name!r} has no dump path")
        if not os.path.exists(domain.dump):
            raise ConfigError(f"dump for domain {domain.name!r} not found: {domain.dump}")
    for domain in domains:
        out_dir = config.domain_dir(domain.name)
        os.makedirs(out_dir, exist_ok=True)
        rejects = RejectsReport()
        posts = parse_posts_stream(domain.dump, rejects)
        corpus = build_corpus(posts, domain.name)
        split = split_corpus(corpus, ratios=config.ratios, seed=config.seed)
        save_corpus(corpus, config.corpus_path(domain.name))
        save_split(split, config.split_path(domain.name))
        with open(os.path.join(out_dir, "rejects.json"), "w", encoding="utf-8") as fh:
            json.dump(rejects.to_json(), fh, sort_keys=True, indent=1)
            fh.write("\n")
        manifest = {
            "tool_version": __version__,
            "domain": domain.name,
            "seed": config.seed,
            "ratios": list(config.ratios),
            "n_questions": len(corpus.questions),
            "n_answers": len(corpus.answers),
            "n_orphan_answers": len(corpus.orphan_answer_ids),
            "rejects": rejects.to_json(),
            "split_hash": split_manifest_hash(split),
        }
        with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=1)
            fh.write("\n")
        print(
            f"{domain.name}: {len(corpus.questions)} questions, {len(corpus.answers)} answers, "
            f"{rejects.total} rejected rows"
        )
    return 0


def cmd_analyze(config: PipelineConfig, only: str | None = None) -> int:
    domains = _selected_domains(config, only)
    if not domains:
        print("warning: no domains configured; nothing to analyze", file=sys.stderr)
        return 0
    domain_reports = []
    for domain in domains:
        corpus = _load_domain_corpus(config, domain.name)
        domain_reports.append(
            reports.analyze_domain(
                corpus, deltas=config.stability_deltas, example_seed=config.seed
            )
        )
        print(f"{domain.name}: analyzed {len(corpus.questions)} questions")
    out_dir = os.path.join(config.output_dir, "reports")
    written = reports.write_analysis_reports(domain_reports, out_dir)
    reports.write_schema_doc(out_dir)
    print(f"wrote {len(written)} report files to {out_dir}")
    return 0


def cmd_vocab(config: PipelineConfig, only: str | None = None, coverage: float | None = None) -> int:
    targets = [coverage] if coverage is not None else config.coverage_targets
    for domain in _selected_domains(config, only):
        corpus = _load_domain_corpus(config, domain.name)
        split = _load_domain_split(config, domain.name)
        train = corpus.restrict(split.train)
        built_from = f"{split_manifest_hash(split)}/train"
        for target in targets:
            vocab = build_meta_vocab(train, target, built_from=built_from)
            path = config.vocab_path(domain.name, target)
            save_vocab(vocab, path)
            print(
                f"{domain.name}: vocab target {target:g}% -> {len(vocab.tags)} tags "
                f"(achieved {vocab.achieved_coverage:.2f}%)"
            )
    return 0


def _feature_mode_config(config: PipelineConfig, mode: str) -> FeatureConfig:
    weighting = "tfidf" if mode == MODE_TFIDF else "counts"
    return FeatureConfig(
        ngram_range=config.feature.ngram_range,
        min_document_frequency=config.feature.min_document_frequency,
        max_features=config.feature.max_features,
        weighting=weighting,
    )


def cmd_train_baseline(
    config: PipelineConfig, mode: str, seed: int | None = None, only: str | None = None
) -> int:
    if mode not in (MODE_TFIDF, MODE_BOW):
        raise ConfigError(f"train-baseline mode must be tfidf or bow, got {mode!r}")
    seed = config.seed if seed is None else seed
    for domain in _selected_domains(config, only):
        corpus = _load_domain_corpus(config, domain.name)
        split = _load_domain_split(config, domain.name)
        train_questions = [q for q in corpus.questions if q.id in split.train]
        texts = [_stripped_text(q) for q in train_questions]
        labels = [list(q.tags) for q in train_questions]
        space, matrix = featurize(texts, _feature_mode_config(config, mode))
        hp = SgdHyperparams(
            alpha=config.sgd_alpha,
            penalty=config.sgd_penalty,
            epochs=config.sgd_epochs,
            seed=seed,
        )
        model = train_ovr_sgd(matrix, labels, space, hp)
        path = config.model_path(domain.name, mode, seed)
        save_model(model, path)
        print(
            f"{domain.name}: trained {mode} over {len(model.classes)} tags, "
            f"{len(space.terms)} features -> {path}"
        )
    return 0


def _neural_predict(
    config: PipelineConfig,
    meta_path: str,
    streams_path: str | None,
    n_meta: int,
    n_refined: int,
    out_path: str,
) -> int:
    """Fuse a meta-prediction file and an optional token-stream file into
    prediction sets (the decode step for the neural component's outputs)."""
    if not os.path.exists(meta_path):
        raise ConfigError(f"meta predictions not found: {meta_path}")
    refined_by_post: dict[int, list] = {}
    if streams_path:
        if not os.path.exists(streams_path):
            raise ConfigError(f"token streams not found: {streams_path}")
        for stream in read_token_streams(streams_path):
            tags = assemble_tags(stream)
            refined_by_post[stream.post_id] = select_topk_refined(tags, n_refined)
    merged = []
    with open(meta_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            pid = record["post_id"]
            meta = [(e["tag"], float(e["score"])) for e in record["tags"]]
            merged.append(
                merge_predictions(
                    meta,
                    refined_by_post.get(pid, []),
                    n_meta=n_meta,
                    n_refined=n_refined,
                    post_id=pid,
                )
            )
    merged.sort(key=lambda p: p.post_id)
    save_predictions(merged, out_path)
    print(f"decoded {len(merged)} posts -> {out_path}")
    return 0


def cmd_predict(
    config: PipelineConfig,
    mode: str,
    only: str | None = None,
    seed: int | None = None,
    k: int = 5,
    meta_path: str | None = None,
    streams_path: str | None = None,
    n_meta: int | None = None,
    n_refined: int | None = None,
    out_path: str | None = None,
) -> int:
    if mode == MODE_NEURAL:
        if meta_path is None:
            raise ConfigError("predict --mode neural needs --meta (and usually --streams)")
        if out_path is None:
            raise ConfigError("predict --mode neural needs --out")
        return _neural_predict(
            config,
            meta_path,
            streams_path,
            config.n_meta if n_meta is None else n_meta,
            config.n_refined if n_refined is None else n_refined,
            out_path,
        )

    seed = config.seed if seed is None else seed
    for domain in _selected_domains(config, only):
        corpus = _load_domain_corpus(config, domain.name)
        split = _load_domain_split(config, domain.name)
        test_questions = sorted(
            (q for q in corpus.questions if q.id in split.test), key=lambda q: q.id
        )
        if mode == MODE_MAJORITY:
            train = corpus.restrict(split.train)
            top5 = majority_predict(train, k=k)
            counts = build_tag_frequency(train).counts
            prediction_sets = [majority_prediction_set(top5, counts, q.id) for q in test_questions]
        elif mode in (MODE_TFIDF, MODE_BOW):
            model_file = config.model_path(domain.name, mode, seed)
            if not os.path.exists(model_file):
                raise ConfigError(
                    f"no trained {mode} model at {model_file}; run `cqatag train-baseline` first"
                )
            model = load_model(model_file)
            matrix = transform(model.feature_space, [_stripped_text(q) for q in test_questions])
            prediction_sets = predict_topk_batch(
                model, matrix, [q.id for q in test_questions], k=k
            )
        else:
            raise ConfigError(f"unknown predict mode {mode!r}")
        path = out_path or config.predictions_path(domain.name, mode, seed)
        save_predictions(prediction_sets, path)
        print(f"{domain.name}: wrote {len(prediction_sets)} {mode} predictions -> {path}")
    return 0


def cmd_eval(
    config: PipelineConfig,
    domain: str,
    model_name: str,
    prediction_files: list[str],
    compare_name: str | None = None,
    compare_files: list[str] | None = None,
    vocab_file: str | None = None,
    out_prefix: str | None = None,
) -> int:
    corpus = _load_domain_corpus(config, domain)
    split = _load_domain_split(config, domain)
    gold = {q.id: set(q.tags) for q in corpus.questions if q.id in split.test}

    def hits_per_run(files: list[str]) -> list[dict[int, float]]:
        runs = []
        for path in files:
            if not os.path.exists(path):
                raise ConfigError(f"prediction file not found: {path}")
            preds = list(load_predictions(path))
            runs.append(evaluate_hits(preds, gold, ks=config.eval_ks))
        return runs

    runs = hits_per_run(prediction_files)
    aggregated = {
        k: aggregate_runs([run[k] for run in runs]) for k in config.eval_ks
    }
    payload: dict = {
        "domain": domain,
        "model": model_name,
        "n_runs": len(runs),
        "hit_at_k": {
            str(k): {"mean": agg.mean, "std": agg.std, "runs": [run[k] for run in runs]}
            for k, agg in aggregated.items()
        },
    }

    hit_rows = [{"domain": domain, "model": model_name, "hits": aggregated}]
    wilcoxon_rows = []
    if compare_name:
        compare_runs = hits_per_run(compare_files or [])
        if len(compare_runs) != len(runs):
            raise ConfigError(
                f"paired runs required: {len(runs)} vs {len(compare_runs)} prediction files"
            )
        compare_agg = {k: aggregate_runs([run[k] for run in compare_runs]) for k in config.eval_ks}
        hit_rows.append({"domain": domain, "model": compare_name, "hits": compare_agg})
        top_k = max(config.eval_ks)
        result = wilcoxon_one_sided(
            [run[top_k] for run in compare_runs], [run[top_k] for run in runs]
        )
        payload["wilcoxon"] = {
            "baseline": compare_name,
            "improved": model_name,
            "metric": f"hit@{top_k}",
            "p_value": result.p_value,
            "exact": result.exact,
            "degenerate": result.degenerate,
            "significant_at_0.05": result.p_value < 0.05,
        }
        wilcoxon_rows.append(
            {
                "domain": domain,
                "baseline": compare_name,
                "improved": model_name,
                "p_value": result.p_value,
            }
        )

    head_rows = []
    oov_rows = []
    last_preds = list(load_predictions(prediction_files[-1]))
    sources = {entry.source for pred in last_preds for entry in pred.tags}
    if sources and sources <= {SOURCE_P_HEAD, SOURCE_G_HEAD}:
        contrib = head_contributions(last_preds, gold)
        payload["head_contributions"] = {"p_only": contrib.p_only, "g_only": contrib.g_only}
        head_rows.append(
            {
                "domain": domain,
                "model": model_name,
                "p_only": contrib.p_only,
                "g_only": contrib.g_only,
            }
        )
    if vocab_file:
        if not os.path.exists(vocab_file):
            raise ConfigError(f"vocab file not found: {vocab_file}")
        vocab = load_vocab(vocab_file)
        stats = oov_stats(last_preds, gold, vocab)
        payload["oov"] = {
            "pct_posts": stats.pct_posts,
            "pct_all_tags": stats.pct_all_tags,
            "pct_oov_tags": stats.pct_oov_tags,
        }
        oov_rows.append(
            {
                "domain": domain,
                "model": model_name,
                "pct_posts": stats.pct_posts,
                "pct_all_tags": stats.pct_all_tags,
                "pct_oov_tags": stats.pct_oov_tags,
            }
        )

    prefix = out_prefix or os.path.join(config.domain_dir(domain), f"eval_{model_name}")
    os.makedirs(os.path.dirname(prefix) or ".", exist_ok=True)
    reports.write_eval_json(payload, prefix + ".json")
    reports.write_hit_report(hit_rows, prefix + "_hits.csv")
    if wilcoxon_rows:
        reports.write_wilcoxon_csv(wilcoxon_rows, prefix + "_wilcoxon.csv")
    if head_rows:
        reports.write_head_contrib_csv(head_rows, prefix + "_heads.csv")
    if oov_rows:
        reports.write_oov_csv(oov_rows, prefix + "_oov.csv")
    for k in sorted(aggregated):
        agg = aggregated[k]
        std = f" +/- {agg.std:.2f}" if agg.std is not None else ""
        print(f"{domain} {model_name} hit@{k}: {agg.mean:.2f}{std}")
    return 0


def cmd_report(config: PipelineConfig) -> int:
    out_dir = os.path.join(config.output_dir, "reports")
    path = reports.write_schema_doc(out_dir)
    index = {"tool_version": __version__, "domains": sorted(d.name for d in config.domains), "files": {}}
    for root, _dirs, files in os.walk(config.output_dir):
        for name in sorted(files):
            rel = os.path.relpath(os.path.join(root, name), config.output_dir)
            if rel != "index.json":
                index["files"][rel] = os.path.getsize(os.path.join(root, name))
    with open(os.path.join(config.output_dir, "index.json"), "w", encoding="utf-8") as fh:
        json.dump(index, fh, sort_keys=True, indent=1)
        fh.write("\n")
    print(f"schema doc: {path}")
    print(f"artifact index: {os.path.join(config.output_dir, 'index.json')}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqatag",
        description="StackExchange question-tagging analytics and prediction pipeline",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="pipeline config JSON")
        p.add_argument("--domain", help="restrict to one configured domain")

    p = sub.add_parser("ingest", help="parse dumps into corpus/split/rejects files")
    add_common(p)

    p = sub.add_parser("analyze", help="emit the tag-statistics report CSVs")
    add_common(p)

    p = sub.add_parser("vocab", help="build coverage-targeted tag vocabularies")
    add_common(p)
    p.add_argument("--coverage", type=float, help="single coverage target (default: config list)")

    p = sub.add_parser("train-baseline", help="train tf-idf or bag-of-words OvR SGD")
    add_common(p)
    p.add_argument("--mode", required=True, choices=[MODE_TFIDF, MODE_BOW])
    p.add_argument("--seed", type=int, help="training seed (default: config seed)")

    p = sub.add_parser("predict", help="produce top-k predictions on the test split")
    add_common(p)
    p.add_argument(
        "--mode", required=True, choices=[MODE_MAJORITY, MODE_TFIDF, MODE_BOW, MODE_NEURAL]
    )
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--meta", help="neural meta-prediction file (mode=neural)")
    p.add_argument("--streams", help="neural token-stream file (mode=neural)")
    p.add_argument("--n-meta", type=int, dest="n_meta")
    p.add_argument("--n-refined", type=int, dest="n_refined")
    p.add_argument("--out", help="output predictions file")

    p = sub.add_parser("eval", help="score prediction files against the test split")
    p.add_argument("--config", required=True)
    p.add_argument("--domain", required=True)
    p.add_argument("--model", required=True, help="model name for the report")
    p.add_argument("--predictions", required=True, nargs="+", help="one file per run")
    p.add_argument("--compare", help="baseline model name for significance testing")
    p.add_argument("--compare-predictions", nargs="+", default=[])
    p.add_argument("--vocab", help="vocab file for OOV statistics")
    p.add_argument("--out-prefix")

    p = sub.add_parser("report", help="write the schema doc and artifact index")
    p.add_argument("--config", required=True)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = PipelineConfig.from_file(args.config)
        if args.command == "ingest":
            return cmd_ingest(config, args.domain)
        if args.command == "analyze":
            return cmd_analyze(config, args.domain)
        if args.command == "vocab":
            return cmd_vocab(config, args.domain, args.coverage)
        if args.command == "train-baseline":
            return cmd_train_baseline(config, args.mode, args.seed, args.domain)
        if args.command == "predict":
            return cmd_predict(
                config,
                args.mode,
                only=args.domain,
                seed=args.seed,
                k=args.k,
                meta_path=args.meta,
                streams_path=args.streams,
                n_meta=args.n_meta,
                n_refined=args.n_refined,
                out_path=args.out,
            )
        if args.command == "eval":
            return cmd_eval(
                config,
                domain=args.domain,
                model_name=args.model,
                prediction_files=args.predictions,
                compare_name=args.compare,
                compare_files=args.compare_predictions,
                vocab_file=args.vocab,
                out_prefix=args.out_prefix,
            )
        if args.command == "report":
            return cmd_report(config)
        parser.error(f"unknown command {args.command}")
    except CqatagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
