import json
import random
import subprocess
import sys

import pytest

# Frequent tags with distinctive signature phrases; the model learns to map
# the phrases back to tags. Hyphenated rare tags are generation targets.
FREQUENT_TAGS = {
    "boot": "machine hangs early during startup sequence",
    "grub2": "bootloader menu shows rescue prompt",
    "networking": "ethernet link drops and reconnects",
    "wireless": "wifi adapter vanishes after suspend",
    "bash": "shell script loop prints garbage",
    "apt": "package manager reports unmet dependencies",
    "drivers": "device module refuses to load",
    "nvidia": "graphics card renders artifacts",
    "sound": "audio output crackles loudly",
    "usb": "flash stick not recognized anywhere",
    "kernel": "panic trace appears on resume",
    "unity": "desktop launcher icons disappear",
    "gnome": "session settings reset each login",
    "upgrade": "release migration stalls halfway",
    "installation": "installer freezes at partition step",
    "server": "headless box times out remotely",
    "partitioning": "disk layout table looks corrupted",
    "dual-boot": "windows entry gone from menu",
    "command-line": "terminal command exits with error",
    "mysql": "database daemon refuses connections",
}

RARE_TAGS = {
    "wine-compat": "wine compat layer breaks the game",
    "disk-quota": "disk quota limit blocks saving",
    "login-loop": "login loop returns to greeter",
    "screen-tear": "screen tear lines during video",
    "pxe-netboot": "pxe netboot image never loads",
    "snap-rollback": "snap rollback restores old revision",
    "fan-curve": "fan curve stays at maximum speed",
    "touch-gesture": "touch gesture swipes stop working",
}


def synth_rows(n_questions, seed=11, oov_rate=0.4):
    rng = random.Random(seed)
    frequent = sorted(FREQUENT_TAGS)
    rare = sorted(RARE_TAGS)
    weights = [1.0 / (i + 3) for i in range(len(frequent))]
    rows = []
    for qid in range(1, n_questions + 1):
        k = rng.randint(1, 2)
        tags = []
        while len(tags) < k:
            tag = rng.choices(frequent, weights=weights, k=1)[0]
            if tag not in tags:
                tags.append(tag)
        if rng.random() < oov_rate:
            tags.append(rng.choice(rare))
        phrases = [FREQUENT_TAGS.get(t) or RARE_TAGS[t] for t in tags]
        body = " ".join(phrases) + f" noise{rng.randint(0, 30)}"
        tag_field = "".join(f"&lt;{t}&gt;" for t in tags)
        rows.append(
            f'  <row Id="{qid}" PostTypeId="1" CreationDate="2020-01-01T00:00:00.000"'
            f' Score="1" ViewCount="10" Body="&lt;p&gt;{body}&lt;/p&gt;"'
            f' OwnerUserId="{rng.randint(1, 200)}" Title="{phrases[0]}" Tags="{tag_field}" />\n'
        )
    return rows


def write_dump(path, n_questions, seed=11, oov_rate=0.4):
    rows = synth_rows(n_questions, seed=seed, oov_rate=oov_rate)
    path.write_text(
        '<?xml version="1.0" encoding="utf-8"?>\n<posts>\n' + "".join(rows) + "</posts>\n"
    )


def run_pipeline_cli(args):
    """Invoke the analytics pipeline CLI in a subprocess; files are the
    only coupling between the two packages."""
    result = subprocess.run(
        [sys.executable, "-m", "cqatag.cli", *args],
        capture_output=True,
        text=True,
    )
    if result.returncode != 0:
        raise AssertionError(
            f"pipeline CLI failed ({result.returncode}): {' '.join(args)}\n"
            f"stdout: {result.stdout}\nstderr: {result.stderr}"
        )
    return result.stdout


@pytest.fixture(scope="session")
def pipeline_files(tmp_path_factory):
    """Corpus, split, and vocab files produced by the analytics pipeline
    over a 2000-question synthetic dump."""
    root = tmp_path_factory.mktemp("pipeline")
    dump = root / "Posts.xml"
    write_dump(dump, n_questions=2000)
    out_dir = root / "out"
    config = {
        "output_dir": str(out_dir),
        "seed": 13,
        "coverage_targets": [90],
        "domains": [{"name": "synthetic", "dump": str(dump)}],
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config))
    run_pipeline_cli(["ingest", "--config", str(config_path)])
    run_pipeline_cli(["vocab", "--config", str(config_path)])
    domain_dir = out_dir / "synthetic"
    return {
        "config": config_path,
        "out_dir": out_dir,
        "corpus": domain_dir / "corpus.jsonl",
        "split": domain_dir / "split.json",
        "vocab": domain_dir / "vocab_90.json",
        "domain_dir": domain_dir,
    }
