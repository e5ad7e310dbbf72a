import json
import os
import random
import subprocess
from pathlib import Path

import pytest


def _env_path(name):
    value = os.environ.get(name)
    if not value:
        pytest.skip(f"{name} not set")
    return Path(value)


@pytest.fixture(scope="session")
def cli():
    exe = _env_path("STANCEGRAPH_CLI")

    def run(*args, check=None):
        proc = subprocess.run([str(exe), *map(str, args)], capture_output=True, text=True)
        if check is not None:
            assert proc.returncode == check, proc.stderr
        return proc

    return run


@pytest.fixture(scope="session")
def data_dir():
    return _env_path("STANCEGRAPH_TEST_DATA")


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """Synthetic posts, graph, embeddings and change table from make_fixtures."""
    out = tmp_path_factory.mktemp("corpus")
    subprocess.run([str(_env_path("STANCEGRAPH_MAKE_FIXTURES")), str(out), "40", "5"], check=True)
    return out


DAY = 86400
PERIOD_START = 1609027200  # 2020-12-27


def write_change_pipeline(out: Path, users=60, seed=11):
    """Dated posts around the default exposure period, a ring graph and theme annotations."""
    rng = random.Random(seed)
    names = [f"w{i:03d}" for i in range(users)]
    posts, themes = [], []
    labels = ["PO", "NG", "PD"]
    themes_all = ["PositiveNews", "NegativeNews", "Conspiracy", "HealthBeliefs"]

    def post(pid, user, ts, label, retweets=0):
        posts.append({"id": pid, "author_id": user, "timestamp": ts, "text": f"vaccine {pid}",
                      "kind": "original", "source_post_id": None, "retweet_count": retweets,
                      "label": label})

    for i, user in enumerate(names):
        for j in range(4):
            post(f"{user}-b{j}", user, PERIOD_START - (j + 1) * DAY, rng.choice(labels))
            post(f"{user}-a{j}", user, PERIOD_START + 25 * DAY + (j + 1) * DAY, rng.choice(labels))
        if i % 3 == 0:
            pid = f"{user}-pop"
            post(pid, user, PERIOD_START + 2 * DAY, None, retweets=rng.randint(5, 50))
            themes.append((pid, themes_all[i % len(themes_all)]))
    (out / "posts.jsonl").write_text("".join(json.dumps(p) + "\n" for p in posts))
    (out / "nodes.txt").write_text("".join(n + "\n" for n in names))
    edges = [(names[i], names[(i + 1) % users]) for i in range(users)]
    edges += [(names[i], names[(i + 7) % users]) for i in range(0, users, 2)]
    (out / "edges.csv").write_text("u,v\n" + "".join(f"{u},{v}\n" for u, v in edges))
    (out / "themes.csv").write_text("post_id,theme\n" + "".join(f"{p},{t}\n" for p, t in themes))
    return out
