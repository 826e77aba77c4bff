"""Relational-graph multihop question answering.

Thin wrapper over the compiled ``_core`` module. Instances and graphs are
plain dicts in the same JSON layout the command-line tool reads and writes.
"""

import json
from os import PathLike
from typing import Any, Iterable, Union

from . import _core
from ._core import CheckpointError, EmbeddingError, GraphFormatError, NumericError, ValidationError

__all__ = [
    "CheckpointError",
    "EmbeddingError",
    "GraphFormatError",
    "NumericError",
    "ValidationError",
    "build_graph",
    "evaluate",
    "gen_synthetic",
    "graph_stats",
    "load_dataset",
    "train",
]

Path = Union[str, PathLike]


def load_dataset(path: Path) -> list[dict[str, Any]]:
    """Instances of a JSON-lines file, validated."""
    return [json.loads(r) for r in _core.load_dataset(path)]


def gen_synthetic(**spec: Any) -> list[dict[str, Any]]:
    """Synthetic instances; keyword arguments are generator spec fields."""
    return [json.loads(r) for r in _core.gen_synthetic(json.dumps(spec))]


def build_graph(instance: dict[str, Any], setting: str = "base", max_path_docs: int = 3) -> dict[str, Any]:
    """Relational graph of one instance under a graph setting."""
    return json.loads(_core.build_graph(json.dumps(instance), setting, max_path_docs))


def graph_stats(graphs: Iterable[dict[str, Any]]) -> dict[str, Any]:
    return json.loads(_core.graph_stats([json.dumps(g) for g in graphs]))


def train(config_path: Path) -> dict[str, Any]:
    """Train from a run config file. Runs without holding the GIL."""
    return json.loads(_core.train(config_path))


def evaluate(checkpoint: Path, instances: Iterable[dict[str, Any]]) -> tuple[float, list[dict[str, Any]]]:
    """Accuracy and per-instance predictions of a checkpoint."""
    accuracy, lines = _core.evaluate(checkpoint, [json.dumps(i) for i in instances])
    return accuracy, [json.loads(line) for line in lines.splitlines() if line]
