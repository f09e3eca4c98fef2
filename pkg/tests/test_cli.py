"""End-to-end pipeline runs over a synthetic dump, via the CLI entry point."""

import hashlib
import json
import random

import pytest

from cqatag.cli import main
from cqatag.decoder import KIND_SEP, KIND_TAG, StreamToken, TokenStream, write_token_streams
from cqatag.predictions import load_predictions

TAG_WORDS = {
    "boot": "machine will not boot after the update",
    "grub2": "grub2 rescue prompt appears",
    "networking": "networking drops every few minutes",
    "wireless": "wireless card is not detected",
    "bash": "bash script exits with an error",
    "apt": "apt reports unmet dependencies",
    "drivers": "drivers fail to load",
    "sound": "sound is distorted",
    "usb": "usb stick is not recognized",
    "kernel": "kernel panic on resume",
}


def synth_dump(path, n_questions=120, seed=5):
    """Questions whose bodies mention their tags, so baselines have signal."""
    rng = random.Random(seed)
    tags = sorted(TAG_WORDS)
    rows = []
    next_id = 1
    for _ in range(n_questions):
        qid = next_id
        next_id += 1
        chosen = rng.sample(tags, rng.randint(1, 3))
        body_text = " ".join(TAG_WORDS[t] for t in chosen)
        tag_field = "".join(f"&lt;{t}&gt;" for t in chosen)
        rows.append(
            f'  <row Id="{qid}" PostTypeId="1" CreationDate="2020-01-01T00:00:00.000"'
            f' Score="{rng.randint(0, 5)}" ViewCount="{rng.randint(0, 300)}"'
            f' Body="&lt;p&gt;{body_text}&lt;/p&gt;" OwnerUserId="{rng.randint(1, 40)}"'
            f' Title="problem with {chosen[0]}" Tags="{tag_field}" />\n'
        )
        if rng.random() < 0.5:
            rows.append(
                f'  <row Id="{next_id}" PostTypeId="2" ParentId="{qid}"'
                f' CreationDate="2020-01-02T00:00:00.000" Score="1"'
                f' Body="&lt;p&gt;try rebooting&lt;/p&gt;" OwnerUserId="{rng.randint(1, 40)}" />\n'
            )
            next_id += 1
    path.write_text('<?xml version="1.0" encoding="utf-8"?>\n<posts>\n' + "".join(rows) + "</posts>\n")


@pytest.fixture
def pipeline(tmp_path):
    dump = tmp_path / "Posts.xml"
    synth_dump(dump)
    out_dir = tmp_path / "out"
    config = {
        "output_dir": str(out_dir),
        "seed": 13,
        "coverage_targets": [85, 90],
        "baseline": {"min_document_frequency": 0.005, "max_features": 5000, "epochs": 30},
        "domains": [{"name": "synthetic", "dump": str(dump)}],
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    return config_path, out_dir


def tree_hash(root):
    digest = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        digest.update(str(path.relative_to(root)).encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()


class TestPipeline:
    def test_full_pipeline(self, pipeline, capsys):
        config_path, out_dir = pipeline
        assert main(["ingest", "--config", str(config_path)]) == 0
        assert (out_dir / "synthetic" / "corpus.jsonl").exists()
        assert (out_dir / "synthetic" / "split.json").exists()
        assert (out_dir / "synthetic" / "rejects.json").exists()

        assert main(["analyze", "--config", str(config_path)]) == 0
        report_dir = out_dir / "reports"
        assert (report_dir / "domain_stats.csv").exists()
        assert (report_dir / "tag_post_overlap.csv").exists()
        assert (report_dir / "reports_schema.md").exists()

        assert main(["vocab", "--config", str(config_path)]) == 0
        assert (out_dir / "synthetic" / "vocab_85.json").exists()
        assert (out_dir / "synthetic" / "vocab_90.json").exists()

        assert main(["train-baseline", "--config", str(config_path), "--mode", "tfidf"]) == 0
        assert main(["train-baseline", "--config", str(config_path), "--mode", "bow"]) == 0

        for mode in ("majority", "tfidf", "bow"):
            assert main(["predict", "--config", str(config_path), "--mode", mode]) == 0
            assert (out_dir / "synthetic" / f"predictions_{mode}_seed13.jsonl").exists()

        majority_file = str(out_dir / "synthetic" / "predictions_majority_seed13.jsonl")
        tfidf_file = str(out_dir / "synthetic" / "predictions_tfidf_seed13.jsonl")
        assert (
            main(
                [
                    "eval",
                    "--config",
                    str(config_path),
                    "--domain",
                    "synthetic",
                    "--model",
                    "tfidf",
                    "--predictions",
                    tfidf_file,
                    "--compare",
                    "majority",
                    "--compare-predictions",
                    majority_file,
                    "--vocab",
                    str(out_dir / "synthetic" / "vocab_90.json"),
                ]
            )
            == 0
        )
        eval_payload = json.loads((out_dir / "synthetic" / "eval_tfidf.json").read_text())
        hit5_tfidf = eval_payload["hit_at_k"]["5"]["mean"]
        assert 0.0 <= hit5_tfidf <= 100.0
        assert "wilcoxon" in eval_payload
        assert "oov" in eval_payload

        assert main(["report", "--config", str(config_path)]) == 0
        assert (out_dir / "index.json").exists()

        out = capsys.readouterr().out
        assert "hit@5" in out

    def test_feature_models_beat_majority_on_planted_signal(self, pipeline):
        config_path, out_dir = pipeline
        main(["ingest", "--config", str(config_path)])
        main(["train-baseline", "--config", str(config_path), "--mode", "bow"])
        for mode in ("majority", "bow"):
            main(["predict", "--config", str(config_path), "--mode", mode])
        for model in ("majority", "bow"):
            main(
                [
                    "eval",
                    "--config",
                    str(config_path),
                    "--domain",
                    "synthetic",
                    "--model",
                    model,
                    "--predictions",
                    str(out_dir / "synthetic" / f"predictions_{model}_seed13.jsonl"),
                    "--out-prefix",
                    str(out_dir / "synthetic" / f"eval_{model}"),
                ]
            )
        majority = json.loads((out_dir / "synthetic" / "eval_majority.json").read_text())
        bow = json.loads((out_dir / "synthetic" / "eval_bow.json").read_text())
        assert bow["hit_at_k"]["5"]["mean"] > majority["hit_at_k"]["5"]["mean"]

    def test_ingest_idempotent(self, pipeline):
        config_path, out_dir = pipeline
        main(["ingest", "--config", str(config_path)])
        first = tree_hash(out_dir)
        main(["ingest", "--config", str(config_path)])
        assert tree_hash(out_dir) == first

    def test_analyze_idempotent(self, pipeline):
        config_path, out_dir = pipeline
        main(["ingest", "--config", str(config_path)])
        main(["analyze", "--config", str(config_path)])
        first = tree_hash(out_dir / "reports")
        main(["analyze", "--config", str(config_path)])
        assert tree_hash(out_dir / "reports") == first

    def test_missing_dump_fails_before_work(self, tmp_path):
        config = {
            "output_dir": str(tmp_path / "out"),
            "domains": [{"name": "ghost", "dump": str(tmp_path / "missing.xml")}],
        }
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(config))
        assert main(["ingest", "--config", str(config_path)]) == 1
        assert not (tmp_path / "out").exists()

    def test_empty_domain_list_warns_and_exits_zero(self, tmp_path, capsys):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"output_dir": str(tmp_path / "out"), "domains": []}))
        assert main(["analyze", "--config", str(config_path)]) == 0
        assert "no domains" in capsys.readouterr().err

    def test_bad_config_is_user_error(self, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text("{not json")
        assert main(["analyze", "--config", str(config_path)]) == 1

    def test_neural_decode_path(self, pipeline, tmp_path):
        config_path, out_dir = pipeline
        main(["ingest", "--config", str(config_path)])
        # Fabricate neural outputs for three posts of the test split.
        split = json.loads((out_dir / "synthetic" / "split.json").read_text())
        post_ids = split["test"][:3]
        meta_path = tmp_path / "meta.jsonl"
        with open(meta_path, "w") as fh:
            for pid in post_ids:
                record = {
                    "post_id": pid,
                    "tags": [
                        {"tag": "boot", "score": 0.9},
                        {"tag": "grub2", "score": 0.7},
                        {"tag": "boot", "score": 0.6},
                        {"tag": "apt", "score": 0.5},
                        {"tag": "bash", "score": 0.4},
                    ],
                }
                fh.write(json.dumps(record) + "\n")
        streams_path = tmp_path / "streams.jsonl"
        sep = StreamToken("<tagsep>", 0.9, KIND_SEP)
        streams = [
            TokenStream(
                post_id=pid,
                tokens=[sep, StreamToken("visa", 0.8, KIND_TAG), StreamToken("-refusals", 0.6, KIND_TAG), sep],
            )
            for pid in post_ids
        ]
        write_token_streams(streams, streams_path)
        out_file = tmp_path / "neural_predictions.jsonl"
        assert (
            main(
                [
                    "predict",
                    "--config",
                    str(config_path),
                    "--mode",
                    "neural",
                    "--meta",
                    str(meta_path),
                    "--streams",
                    str(streams_path),
                    "--out",
                    str(out_file),
                ]
            )
            == 0
        )
        merged = list(load_predictions(out_file))
        assert len(merged) == 3
        for pred in merged:
            names = pred.tag_names()
            assert names[:2] == ["boot", "grub2"]
            assert "visa-refusals" in names
            assert len(names) == len(set(names))


class TestEvalSignificancePaths:
    def _write_run_files(self, out_dir, gold, correct_counts, prefix):
        """Fabricate one prediction file per run; run i answers the first
        correct_counts[i] posts correctly and misses the rest."""
        paths = []
        post_ids = sorted(gold)
        for run, n_correct in enumerate(correct_counts):
            path = out_dir / f"{prefix}_run{run}.jsonl"
            with open(path, "w") as fh:
                for idx, pid in enumerate(post_ids):
                    tag = sorted(gold[pid])[0] if idx < n_correct else "zz-not-a-tag"
                    record = {
                        "post_id": pid,
                        "predictions": [{"tag": tag, "score": 1.0, "source": "baseline"}],
                    }
                    fh.write(json.dumps(record) + "\n")
            paths.append(str(path))
        return paths

    def _gold(self, out_dir):
        split = json.loads((out_dir / "synthetic" / "split.json").read_text())
        corpus = {}
        with open(out_dir / "synthetic" / "corpus.jsonl") as fh:
            next(fh)
            for line in fh:
                record = json.loads(line)
                if record["type"] == "question":
                    corpus[record["id"]] = record["tags"]
        return {pid: corpus[pid] for pid in split["test"]}

    def test_identical_inputs_give_p_one(self, pipeline, tmp_path):
        config_path, out_dir = pipeline
        main(["ingest", "--config", str(config_path)])
        gold = self._gold(out_dir)
        n = len(gold)
        files = self._write_run_files(tmp_path, gold, [n // 2] * 5, "same")
        code = main(
            [
                "eval", "--config", str(config_path), "--domain", "synthetic",
                "--model", "mrpg", "--predictions", *files,
                "--compare", "mp", "--compare-predictions", *files,
                "--out-prefix", str(tmp_path / "eval_same"),
            ]
        )
        assert code == 0
        payload = json.loads((tmp_path / "eval_same.json").read_text())
        assert payload["wilcoxon"]["p_value"] == 1.0
        assert payload["wilcoxon"]["degenerate"] is True

    def test_five_all_positive_runs_give_p_03125_in_csv(self, pipeline, tmp_path):
        config_path, out_dir = pipeline
        main(["ingest", "--config", str(config_path)])
        gold = self._gold(out_dir)
        n = len(gold)
        better = self._write_run_files(tmp_path, gold, [n - 1, n - 2, n - 3, n - 4, n - 5], "hi")
        worse = self._write_run_files(tmp_path, gold, [n // 2, n // 2 - 1, n // 2 - 2, n // 2 + 1, n // 2 + 2], "lo")
        code = main(
            [
                "eval", "--config", str(config_path), "--domain", "synthetic",
                "--model", "mrpg", "--predictions", *better,
                "--compare", "mp", "--compare-predictions", *worse,
                "--out-prefix", str(tmp_path / "eval_sig"),
            ]
        )
        assert code == 0
        csv_text = (tmp_path / "eval_sig_wilcoxon.csv").read_text()
        assert "0.03125" in csv_text
        assert "Yes" in csv_text


def test_analyze_csv_matches_direct_calls(pipeline):
    config_path, out_dir = pipeline
    import csv as csv_mod

    from cqatag.analytics import compute_domain_stats
    from cqatag.corpus import load_corpus

    main(["ingest", "--config", str(config_path)])
    main(["analyze", "--config", str(config_path)])
    corpus = load_corpus(out_dir / "synthetic" / "corpus.jsonl")
    stats = compute_domain_stats(corpus)
    with open(out_dir / "reports" / "domain_stats.csv") as fh:
        row = next(csv_mod.DictReader(fh))
    assert int(row["#Q"]) == stats.q_count
    assert int(row["#T"]) == stats.tag_count
    assert float(row["PPT"]) == round(stats.ppt, 2)
    assert float(row["AvgT"]) == round(stats.avg_tags, 2)
    assert float(row["QPA"]) == round(stats.qpa, 2)
