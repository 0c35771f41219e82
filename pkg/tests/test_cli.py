import json
import subprocess
import sys

import pytest

CONFIG = """
[run]
seed = 7
out_dir = {out}

[synth]
accounts = 240
n_spans = 4
pool_size = 20

[forest]
n_trees = 10
max_depth = 5

[train]
cv_folds = 3
test_fraction = 0.2
"""

TWEETS_HEADER = (
    "tweetid,userid,user_profile_description,tweet_time,is_retweet,"
    "follower_count,following_count,quote_count,reply_count,like_count,retweet_count,"
    "hashtags,user_mentions,urls,poll_choices"
)


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "trollmap", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture
def config_file(tmp_path):
    out = tmp_path / "run"
    path = tmp_path / "config.ini"
    path.write_text(CONFIG.format(out=out), encoding="utf-8")
    return path, out


def test_full_pipeline_smoke(config_file):
    config, out = config_file
    for stage in ("synth", "propagate", "train", "evaluate", "compare", "validate"):
        result = run_cli(stage, "--config", str(config))
        assert result.returncode == 0, f"{stage} failed: {result.stderr}"

    evaluation = json.loads((out / "evaluation_report.json").read_text())
    assert 0.0 <= evaluation["report"]["weighted_f1"] <= 1.0
    assert evaluation["seed"] == 7 and evaluation["config_hash"]

    comparison = json.loads((out / "comparison_report.json").read_text())
    assert len(comparison["ranking"]) == 7

    feature_report = json.loads((out / "feature_report.json").read_text())
    assert len(feature_report["ranking"]) == 8
    correlation_grid = (out / "correlation.csv").read_text().splitlines()
    assert correlation_grid[1].startswith("# config_hash=") or correlation_grid[0].startswith("#")

    validation = json.loads((out / "validation_report.json").read_text())
    assert "overlap" in validation and "agreement" in validation
    assert (out / "agreement_counts.csv").exists()


def test_missing_input_file_exits_2(tmp_path):
    config = tmp_path / "c.ini"
    config.write_text(
        f"[run]\nout_dir = {tmp_path/'r'}\n[ingest]\ntweets = {tmp_path/'missing.csv'}\n",
        encoding="utf-8",
    )
    result = run_cli("ingest", "--config", str(config))
    assert result.returncode == 2
    assert "not found" in result.stderr
    assert not (tmp_path / "r").exists()  # no partial outputs


def test_ingest_reports_rejects(tmp_path):
    rows = [
        TWEETS_HEADER,
        't1,u1,bio,2016-01-02 03:04,false,10,5,0,0,0,0,"[maga]","[]",[],[]',
        't2,u1,bio,2016-01-02 03:05,false,10,5,0,0,-4,0,"[]","[]",[],[]',
        't3,u2,,not-a-time,false,10,5,0,0,0,0,"[]","[]",[],[]',
        't4,,other,2016-01-02 03:06,false,10,5,0,0,0,0,"[]","[]",[],[]',
        't5,u2,,2016-01-02 03:07,false,3,2,0,0,0,0,"[vote]","[]",[],[]',
    ]
    tweets = tmp_path / "tweets.csv"
    tweets.write_text("\n".join(rows) + "\n", encoding="utf-8")
    out = tmp_path / "run"
    config = tmp_path / "c.ini"
    config.write_text(f"[run]\nout_dir = {out}\n[ingest]\ntweets = {tweets}\n", encoding="utf-8")

    result = run_cli("ingest", "--config", str(config))
    assert result.returncode == 0, result.stderr
    report = json.loads((out / "ingest_report.json").read_text())
    assert len(report["rejected"]) == 3
    assert report["accepted"] == 2
    assert report["profiles"] == 2


def test_ingest_fatal_schema_error_exits_1(tmp_path):
    tweets = tmp_path / "tweets.csv"
    tweets.write_text("tweetid,tweet_time\nt1,2016-01-01 00:00\n", encoding="utf-8")
    config = tmp_path / "c.ini"
    config.write_text(
        f"[run]\nout_dir = {tmp_path/'r'}\n[ingest]\ntweets = {tweets}\n", encoding="utf-8"
    )
    result = run_cli("ingest", "--config", str(config))
    assert result.returncode == 1
    assert "user_id" in result.stderr


def test_evaluate_before_train_names_the_missing_stage(config_file):
    config, _ = config_file
    assert run_cli("synth", "--config", str(config)).returncode == 0
    result = run_cli("evaluate", "--config", str(config))
    assert result.returncode == 2
    assert "train" in result.stderr


def test_refuses_overwrite_without_force(config_file):
    config, _ = config_file
    assert run_cli("synth", "--config", str(config)).returncode == 0
    result = run_cli("synth", "--config", str(config))
    assert result.returncode == 2
    assert "force" in result.stderr.lower()
    assert run_cli("synth", "--config", str(config), "--force").returncode == 0


def test_unknown_config_key_exits_2(tmp_path):
    config = tmp_path / "c.ini"
    config.write_text("[run]\nseeed = 3\n", encoding="utf-8")
    result = run_cli("synth", "--config", str(config))
    assert result.returncode == 2


def test_pipeline_reruns_byte_identical(config_file):
    config, out = config_file
    stages = ("synth", "propagate", "train", "evaluate", "compare", "validate")
    for stage in stages:
        assert run_cli(stage, "--config", str(config)).returncode == 0

    tracked = [
        "model.json",
        "cv_report.json",
        "evaluation_report.json",
        "comparison_report.json",
        "propagation_report.json",
        "validation_report.json",
        "labels_augmented.csv",
        "labels_predicted.csv",
        "profiles.jsonl",
    ]
    first = {name: (out / name).read_bytes() for name in tracked}
    for stage in stages:
        assert run_cli(stage, "--config", str(config), "--force").returncode == 0, stage
    for name in tracked:
        assert (out / name).read_bytes() == first[name], f"{name} changed between runs"


def test_seed_override_changes_artifacts(config_file):
    config, out = config_file
    assert run_cli("synth", "--config", str(config)).returncode == 0
    baseline = (out / "profiles.jsonl").read_bytes()
    assert run_cli("synth", "--config", str(config), "--seed", "99", "--force").returncode == 0
    assert (out / "profiles.jsonl").read_bytes() != baseline
