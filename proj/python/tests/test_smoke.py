import json
import math

import pytest

import rgcnqa


def small_corpus(n, seed):
    return rgcnqa.gen_synthetic(n_instances=n, n_docs=6, n_candidates=3, hop_depth=2, seed=seed)


def test_synthetic_is_deterministic_and_well_formed():
    a = small_corpus(5, 4)
    assert a == small_corpus(5, 4)
    assert a != small_corpus(5, 5)
    for inst in a:
        assert inst["answer"] in inst["candidates"]
        assert len(inst["candidates"]) == 3


def test_graph_settings_grow_the_graph():
    inst = small_corpus(1, 9)[0]
    base = rgcnqa.build_graph(inst, "base")
    full = rgcnqa.build_graph(inst, "reason+sents")
    assert len(full["nodes"]) > len(base["nodes"])
    stats = rgcnqa.graph_stats([base, full])
    assert stats["graphs"] == 2
    assert stats["mean_nodes"] == pytest.approx((len(base["nodes"]) + len(full["nodes"])) / 2)


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        rgcnqa.gen_synthetic(n_instances=0)
    with pytest.raises(ValueError, match="nonsense"):
        rgcnqa.build_graph(small_corpus(1, 1)[0], "nonsense")
    broken = dict(small_corpus(1, 1)[0], answer="Nowhere")
    with pytest.raises(rgcnqa.ValidationError):
        rgcnqa.build_graph(broken)
    with pytest.raises(rgcnqa.CheckpointError):
        rgcnqa.evaluate("/nonexistent/checkpoint.bin", small_corpus(1, 1))


def test_train_then_evaluate(tmp_path):
    for name, seed in (("train", 1), ("dev", 2)):
        with open(tmp_path / f"{name}.jsonl", "w") as f:
            for inst in small_corpus(8, seed):
                f.write(json.dumps(inst) + "\n")
    config = {
        "model": {"arch": "entity", "d": 8, "layers": 1, "embed_spec": ["hash"], "graph": "reason"},
        "embeddings": [{"name": "hash", "kind": "hash_fallback", "dim": 16}],
        "train": "train.jsonl",
        "dev": "dev.jsonl",
        "output_dir": "out",
        "epochs": 2,
        "lr": 1e-3,
    }
    (tmp_path / "run.json").write_text(json.dumps(config))
    summary = rgcnqa.train(tmp_path / "run.json")
    assert summary["epochs_run"] == 2
    assert 0.0 <= summary["best_dev_acc"] <= 1.0

    dev = rgcnqa.load_dataset(tmp_path / "dev.jsonl")
    accuracy, predictions = rgcnqa.evaluate(tmp_path / "out" / "checkpoint.bin", dev)
    assert len(predictions) == len(dev)
    assert accuracy == pytest.approx(sum(p["correct"] for p in predictions) / len(dev))
    for p in predictions:
        assert math.isclose(sum(p["probabilities"]), 1.0, rel_tol=1e-9)
