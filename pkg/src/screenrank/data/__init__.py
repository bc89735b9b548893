"""Bundled datasets."""

from importlib import resources
from pathlib import Path


def synthetic_dataset() -> dict[str, Path]:
    """Paths of the bundled 5-topic synthetic dataset."""
    root = resources.files(__package__) / "synthetic"
    return {
        "topics": Path(str(root / "topics.txt")),
        "qrels": Path(str(root / "qrels.txt")),
        "corpus": Path(str(root / "corpus.jsonl")),
    }
