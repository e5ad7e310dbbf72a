import csv
import io
import json

import pytest

from conftest import write_change_pipeline

SUBCOMMANDS = ["build-graph", "train", "classify", "track", "hesitancy", "predict-change",
               "agreement", "sweep"]


def graph_args(d):
    return ["--posts", d / "posts.jsonl", "--nodes", d / "nodes.txt", "--edges", d / "edges.csv",
            "--embeddings", d / "embeddings.tsv"]


def small_train(cli, d, tmp_path, tag, *extra, check=0):
    ckpt, log = tmp_path / f"{tag}.ckpt", tmp_path / f"{tag}.csv"
    proc = cli("train", *graph_args(d), "--epochs", 4, "--hidden", 8, "--lr", 0.01, "--seed", 5,
               "--checkpoint", ckpt, "--log", log, *extra, check=check)
    return proc, ckpt, log


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("sub", SUBCOMMANDS)
def test_help_lists_flags(cli, sub):
    proc = cli(sub, "--help", check=0)
    assert "--config" in proc.stdout
    assert "--seed" in proc.stdout


def test_unknown_flag_and_subcommand(cli, data_dir):
    assert cli("agreement", "--ratings", data_dir / "ratings.csv", "--bogus").returncode == 2
    assert cli("no-such-command").returncode == 2
    assert cli().returncode == 2


def test_missing_input_file(cli, corpus, tmp_path):
    proc = cli("train", "--posts", corpus / "posts.jsonl", "--nodes", corpus / "nodes.txt",
               "--edges", corpus / "edges.csv", "--embeddings", tmp_path / "missing.tsv",
               "--checkpoint", tmp_path / "m", "--log", tmp_path / "l")
    assert proc.returncode == 2


def test_build_graph(cli, data_dir, tmp_path):
    out = tmp_path / "g"
    proc = cli("build-graph", "--interactions", data_dir / "interactions.csv", "--out-dir", out,
               check=0)
    stats = json.loads(proc.stdout)
    # a-b has 3 interactions, b-c 2, x-y 2; the rest fall below the default weight 2
    assert stats == {"nodes": 3, "edges": 2, "average_degree": pytest.approx(4 / 3),
                     "pruned_nodes": 7, "pruned_edges": 3}
    assert (out / "nodes.txt").read_text().split() == ["a", "b", "c"]
    assert json.loads((out / "stats.json").read_text())["edges"] == 2


def test_build_graph_with_followers(cli, data_dir, tmp_path):
    proc = cli("build-graph", "--interactions", data_dir / "interactions.csv",
               "--followers", data_dir / "followers.csv", "--out-dir", tmp_path, check=0)
    assert json.loads(proc.stdout)["nodes"] == 2
    assert (tmp_path / "edges.csv").read_text().splitlines() == ["u,v", "a,c"]


def test_build_graph_empty(cli, tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("source,target,kind,timestamp\n")
    proc = cli("build-graph", "--interactions", empty, "--out-dir", tmp_path / "g")
    assert proc.returncode == 2
    assert "empty graph" in proc.stderr


def test_train_is_deterministic(cli, corpus, tmp_path):
    p1, c1, l1 = small_train(cli, corpus, tmp_path, "a")
    p2, c2, l2 = small_train(cli, corpus, tmp_path, "b")
    assert p1.stdout == p2.stdout
    assert c1.read_bytes() == c2.read_bytes()
    assert l1.read_text() == l2.read_text()
    assert len(rows(l1.read_text())) == 4
    assert set(json.loads(p1.stdout)) == {"precision", "recall", "f1", "accuracy"}


def test_seed_changes_result(cli, corpus, tmp_path):
    _, c1, _ = small_train(cli, corpus, tmp_path, "a")
    _, c2, _ = small_train(cli, corpus, tmp_path, "b", "--seed", 6)
    assert c1.read_bytes() != c2.read_bytes()


def test_config_file_and_precedence(cli, corpus, data_dir, tmp_path):
    base = ["train", *graph_args(corpus), "--seed", 5]
    cli(*base, "--config", data_dir / "train.conf", "--checkpoint", tmp_path / "c1",
        "--log", tmp_path / "l1", check=0)
    assert len(rows((tmp_path / "l1").read_text())) == 3
    cli(*base, "--config", data_dir / "train.conf", "--epochs", 2, "--checkpoint", tmp_path / "c2",
        "--log", tmp_path / "l2", check=0)
    assert len(rows((tmp_path / "l2").read_text())) == 2


def test_config_unknown_key(cli, data_dir, tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("no-such-option=1\n")
    proc = cli("agreement", "--ratings", data_dir / "ratings.csv", "--config", conf)
    assert proc.returncode == 2


def test_divergence_exit_code(cli, corpus, tmp_path):
    proc, _, _ = small_train(cli, corpus, tmp_path, "d", "--lr", "1e300", check=3)
    assert "diverged" in proc.stderr


def test_invalid_hyperparameter(cli, corpus, tmp_path):
    small_train(cli, corpus, tmp_path, "k", "--k", 0, check=2)


def test_classify(cli, corpus, tmp_path):
    _, ckpt, _ = small_train(cli, corpus, tmp_path, "m")
    out = tmp_path / "pred.csv"
    cli("classify", "--checkpoint", ckpt, *graph_args(corpus), "--out", out, check=0)
    table = rows(out.read_text())
    posts = [json.loads(line) for line in (corpus / "posts.jsonl").read_text().splitlines()]
    assert len(table) == len(posts)
    for r in table:
        probs = [float(r[f"p_{c}"]) for c in ("PO", "NG", "NE", "PD")]
        assert sum(probs) == pytest.approx(1.0, abs=1e-9)
        assert r["label"] == ("PO", "NG", "NE", "PD")[probs.index(max(probs))]


def test_classify_off_graph(cli, corpus, tmp_path):
    _, ckpt, _ = small_train(cli, corpus, tmp_path, "m")
    nodes = tmp_path / "nodes.txt"
    edges = tmp_path / "edges.csv"
    nodes.write_text("stranger\nother\n")
    edges.write_text("u,v\nstranger,other\n")
    proc = cli("classify", "--checkpoint", ckpt, "--posts", corpus / "posts.jsonl",
               "--nodes", nodes, "--edges", edges, "--embeddings", corpus / "embeddings.tsv")
    assert proc.returncode == 4


def test_agreement(cli, data_dir):
    perfect = json.loads(cli("agreement", "--ratings", data_dir / "ratings_perfect.csv",
                             check=0).stdout)
    assert perfect["overall"] == {"aoa": 1.0, "fleiss_kappa": 1.0, "krippendorff_alpha": 1.0}
    mixed = json.loads(cli("agreement", "--ratings", data_dir / "ratings.csv", check=0).stdout)
    assert mixed["items"] == 4
    # 12 ratings, 3 per item; 8 of 12 ordered rater pairs agree on average
    assert mixed["overall"]["aoa"] == pytest.approx(2 / 3)
    assert mixed["overall"]["fleiss_kappa"] == pytest.approx(29 / 53)
    assert mixed["per_label"]["PO"]["aoa"] == 1.0


def test_track(cli, data_dir):
    posts = data_dir / "dated_posts.jsonl"
    table = rows(cli("track", "--posts", posts, check=0).stdout)
    assert [r["date"] for r in table] == ["2021-01-01", "2021-01-02", "2021-01-03"]
    for r in table:
        assert sum(float(r[c]) for c in ("PO", "NG", "NE", "PD")) == pytest.approx(1.0)
    one = rows(cli("track", "--posts", posts, "--start", "2021-01-02", "--end", "2021-01-02",
                   check=0).stdout)
    assert len(one) == 1
    assert float(one[0]["PD"]) == pytest.approx(0.25)


def test_track_empty_days(cli, data_dir):
    table = rows(cli("track", "--posts", data_dir / "dated_posts.jsonl", "--start", "2021-01-03",
                     "--end", "2021-01-05", check=0).stdout)
    assert len(table) == 3
    assert table[1]["PO"] == "" and table[2]["NG"] == ""


def test_hesitancy(cli, data_dir):
    proc = cli("hesitancy", "--posts", data_dir / "dated_posts.jsonl", "--start", "2021-01-01",
               "--end", "2021-01-03", check=0)
    table = {r["user"]: r for r in rows(proc.stdout)}
    assert set(table) == {"alice", "bob"}
    assert float(table["alice"]["score"]) == pytest.approx(0.6)
    assert float(table["bob"]["score"]) == pytest.approx(-1 / 3)


def test_hesitancy_no_eligible_users(cli, data_dir):
    proc = cli("hesitancy", "--posts", data_dir / "dated_posts.jsonl", "--start", "2021-01-01",
               "--end", "2021-01-01")
    assert proc.returncode == 4


def test_bad_date(cli, data_dir):
    proc = cli("hesitancy", "--posts", data_dir / "dated_posts.jsonl", "--start", "Jan 1",
               "--end", "2021-01-03")
    assert proc.returncode == 2


def test_predict_change_from_table(cli, corpus):
    args = ["predict-change", "--data", corpus / "change.csv", "--rounds", 10, "--seed", 3]
    first = cli(*args, check=0).stdout
    assert first == cli(*args, check=0).stdout
    report = json.loads(first)
    assert report["sessions"] == 5
    assert 0.0 <= report["accuracy"] <= 1.0


def test_predict_change_pipeline(cli, tmp_path):
    d = write_change_pipeline(tmp_path)
    features = tmp_path / "features.csv"
    proc = cli("predict-change", "--posts", d / "posts.jsonl", "--nodes", d / "nodes.txt",
               "--edges", d / "edges.csv", "--themes", d / "themes.csv", "--rounds", 5,
               "--features-out", features, check=0)
    report = json.loads(proc.stdout)
    assert report["users"] == 60
    table = rows(features.read_text())
    assert len(table) == 60
    assert len(table[0]) == 13  # user, 11 themes, label
    assert {r["label"] for r in table} <= {"increased", "decreased", "unchanged"}


def test_predict_change_needs_inputs(cli):
    assert cli("predict-change").returncode == 2


def test_sweep(cli, corpus, tmp_path):
    out = tmp_path / "grid.csv"
    proc = cli("sweep", *graph_args(corpus), "--epochs", 2, "--hidden", 4, "--lr", 0.01,
               "--ks", 1, 2, "--lambdas", 1, 2, "--out", out, check=0)
    grid = rows(out.read_text())
    assert [(r["k"], r["lambda"]) for r in grid] == [("1", "1"), ("1", "2"), ("2", "1"), ("2", "2")]
    best = json.loads(proc.stdout)
    assert best["val_accuracy"] == max(float(r["val_accuracy"]) for r in grid)
