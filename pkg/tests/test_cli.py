import json
from pathlib import Path

import numpy as np
import pytest

from avsrerank.cli import main
from avsrerank.store import EmbeddingStore, save_store

DATA = Path(__file__).parent / "data"


@pytest.fixture
def hand_files(tmp_path):
    """Hand fixture converted to binary stores, values kept exact."""
    store = tmp_path / "hand.embs"
    queries = tmp_path / "handq.embs"
    assert main(["convert", "--in", str(DATA / "hand_store.txt"),
                 "--out", str(store), "--to", "embs", "--raw"]) == 0
    assert main(["convert", "--in", str(DATA / "hand_queries.txt"),
                 "--out", str(queries), "--to", "embs", "--raw"]) == 0
    return store, queries


def test_inspect_empty_store(tmp_path, capsys):
    path = tmp_path / "empty.embs"
    save_store(EmbeddingStore(dim=512), path)
    assert main(["inspect", "--store", str(path)]) == 0
    out = capsys.readouterr().out
    assert "dim: 512" in out
    assert "videos: 0" in out


def test_inspect_hand_store(hand_files, capsys):
    store, _ = hand_files
    assert main(["inspect", "--store", str(store)]) == 0
    out = capsys.readouterr().out
    assert "dim: 4" in out and "videos: 3" in out and "frames: 5" in out
    assert "normalized: no" in out


def test_eval_prints_hand_computed_values(capsys):
    rc = main(["eval", "--run", str(DATA / "fixture.run"),
               "--qrels", str(DATA / "fixture.qrels"), "--metric", "ap"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out == (
        "q1\tap\t0.755556\n"
        "q2\tap\t0.500000\n"
        "MEAN\tap\t0.627778\n"
    )


def test_rerank_hand_fixture(hand_files, capsys):
    store, queries = hand_files
    rc = main(["rerank", "--run", str(DATA / "hand.run"),
               "--store", str(store), "--queries", str(queries),
               "--alpha", "0.4"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out == (
        "q1 Q0 vB 1 0.800000 hand\n"
        "q1 Q0 vA 2 0.660000 hand\n"
        "q1 Q0 vC 3 0.440000 hand\n"
    )


def test_rerank_alpha_one_then_compare_is_all_zero(hand_files, tmp_path, capsys):
    store, queries = hand_files
    out_run = tmp_path / "identity.run"
    rc = main(["rerank", "--run", str(DATA / "hand.run"),
               "--store", str(store), "--queries", str(queries),
               "--alpha", "1.0", "--out", str(out_run)])
    assert rc == 0
    rc = main(["compare", "--before", str(DATA / "hand.run"),
               "--after", str(out_run), "--qrels", str(DATA / "hand.qrels"),
               "--metric", "ap"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1] == "SUMMARY\timproved=0\tunchanged=1\tregressed=0"


def test_rerank_deterministic_and_jobs_invariant(hand_files, tmp_path):
    store, queries = hand_files
    outs = []
    for jobs in ("1", "1", "4"):
        path = tmp_path / f"out{len(outs)}.run"
        rc = main(["rerank", "--run", str(DATA / "hand.run"),
                   "--store", str(store), "--queries", str(queries),
                   "--jobs", jobs, "--out", str(path)])
        assert rc == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_rerank_labelspread_method(hand_files, capsys):
    store, _ = hand_files
    rc = main(["rerank", "--run", str(DATA / "hand.run"),
               "--store", str(store), "--queries", str(store),
               "--method", "labelspread", "--seeds", "1"])
    assert rc == 0
    out = capsys.readouterr().out
    assert len(out.splitlines()) == 3


def test_sweep_endpoints(hand_files, tmp_path, capsys):
    store, queries = hand_files
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"alphas": [1.0, 0.0], "ks": [3], "metric": "ap"}))
    rc = main(["sweep", "--spec", str(spec), "--run", str(DATA / "hand.run"),
               "--store", str(store), "--queries", str(queries),
               "--qrels", str(DATA / "hand.qrels")])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "alpha\tk\tnorm\tmean_ap"
    # baseline: relevant vB,vC at ranks 2,3 -> AP = (1/2 + 2/3)/2
    assert lines[1] == f"1\t3\tnone\t{(0.5 + 2 / 3) / 2:.6f}"
    # pure fine-grained order is vB,vC,vA: relevant at ranks 1,2 -> AP = 1
    assert lines[2] == "0\t3\tnone\t1.000000"
    assert lines[3].startswith("# best alpha=0 ")


def test_convert_round_trip(hand_files, tmp_path):
    store, _ = hand_files
    text_out = tmp_path / "back.txt"
    assert main(["convert", "--in", str(store), "--out", str(text_out),
                 "--to", "text"]) == 0
    embs_again = tmp_path / "again.embs"
    assert main(["convert", "--in", str(text_out), "--out", str(embs_again),
                 "--to", "embs", "--raw"]) == 0
    assert Path(store).read_bytes() == embs_again.read_bytes()


def test_convert_normalizes_by_default(hand_files, tmp_path, capsys):
    normed = tmp_path / "normed.embs"
    assert main(["convert", "--in", str(DATA / "hand_store.txt"),
                 "--out", str(normed), "--to", "embs"]) == 0
    assert main(["inspect", "--store", str(normed)]) == 0
    assert "normalized: yes" in capsys.readouterr().out


def test_unknown_flag_is_usage_error(capsys):
    assert main(["eval", "--run", "x", "--qrels", "y", "--frobnicate"]) == 1
    assert "avsrerank" in capsys.readouterr().err


def test_missing_required_flag_is_usage_error():
    assert main(["eval", "--run", "x"]) == 1


def test_unknown_subcommand_is_usage_error():
    assert main(["transmogrify"]) == 1


def test_malformed_run_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.run"
    bad.write_text("not a run file\n")
    rc = main(["eval", "--run", str(bad), "--qrels", str(DATA / "fixture.qrels")])
    assert rc == 2
    assert "expected 6 fields" in capsys.readouterr().err


def test_corrupt_store_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.embs"
    bad.write_bytes(b"EMBX" + b"\x00" * 24)
    rc = main(["inspect", "--store", str(bad)])
    assert rc == 2
    assert "magic" in capsys.readouterr().err


def test_missing_file_is_data_error(tmp_path):
    assert main(["inspect", "--store", str(tmp_path / "nope.embs")]) == 2


def test_mismatched_qrels_is_data_error(tmp_path):
    lonely = tmp_path / "lonely.qrels"
    lonely.write_text("#stratum zz 0 1 1\nzz 0 yy 1\n")
    rc = main(["eval", "--run", str(DATA / "fixture.run"), "--qrels", str(lonely)])
    assert rc == 2


def test_sweep_missing_query_embedding_is_data_error(hand_files, tmp_path, capsys):
    store, _ = hand_files
    empty_queries = tmp_path / "noq.embs"
    save_store(EmbeddingStore(dim=4), empty_queries)
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"alphas": [0.4], "ks": [3]}))
    rc = main(["sweep", "--spec", str(spec), "--run", str(DATA / "hand.run"),
               "--store", str(store), "--queries", str(empty_queries),
               "--qrels", str(DATA / "hand.qrels")])
    assert rc == 2
    assert "no embedding" in capsys.readouterr().err


def test_log_env_var(monkeypatch, capsys):
    monkeypatch.setenv("AVSRERANK_LOG", "debug")
    assert main(["eval", "--run", str(DATA / "fixture.run"),
                 "--qrels", str(DATA / "fixture.qrels"), "--metric", "ap"]) == 0
    monkeypatch.setenv("AVSRERANK_LOG", "nonsense")
    assert main(["eval", "--run", str(DATA / "fixture.run"),
                 "--qrels", str(DATA / "fixture.qrels"), "--metric", "ap"]) == 0
    assert "ignoring unknown AVSRERANK_LOG" in capsys.readouterr().err


def test_help_exits_zero():
    assert main(["--help"]) == 0


def test_rerank_missing_embedding_error_policy(tmp_path, capsys):
    # store lacking vC: error policy names the offender, exit 2
    run = DATA / "hand.run"
    partial = tmp_path / "partial.embs"
    save_store(
        EmbeddingStore(
            dim=4,
            videos={
                "vA": np.ones((1, 4), np.float32),
                "vB": np.ones((1, 4), np.float32),
            },
        ),
        partial,
    )
    queries = tmp_path / "q.embs"
    save_store(
        EmbeddingStore(dim=4, videos={"q1": np.ones((1, 4), np.float32)}), queries
    )
    rc = main(["rerank", "--run", str(run), "--store", str(partial),
               "--queries", str(queries)])
    assert rc == 2
    assert "vC" in capsys.readouterr().err
