import json
import os
import random

import pytest

os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")
os.environ.setdefault("TRANSFORMERS_VERBOSITY", "error")
os.environ.setdefault("HF_HUB_OFFLINE", "1")

# (criterion name, "PASS"/"FAIL") pairs appended by the acceptance suite.
ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"ACCEPTANCE {status}: {name}")

FILLER = [
    "study", "trial", "review", "cohort", "analysis",
    "clinical", "patients", "outcomes", "therapy", "screening",
]
TOPIC_WORDS = ["cardiac", "renal", "hepatic", "neural", "dermal"]
MARKER = "zzmarker"


def build_marker_dataset(root, n_topics=5, n_docs=20, n_positive=4, seed=0):
    """Separable corpus: every relevant document carries the marker token.

    5 topics x 20 docs = 100 documents, well under the 200-document budget.
    """
    rng = random.Random(seed)
    topics_lines, qrels_lines, corpus_lines = [], [], []
    for ti in range(n_topics):
        word = TOPIC_WORDS[ti % len(TOPIC_WORDS)]
        tid = f"MK{ti + 1:03d}"
        topics_lines += [
            f"Topic: {tid}",
            "",
            f"Title: systematic review of {word} interventions",
            "",
            "Query:",
            "1. opaque boolean line",
            "",
            "Pids:",
        ]
        for di in range(n_docs):
            pmid = f"{80000000 + ti * 100 + di}"
            topics_lines.append(f"    {pmid}")
            relevant = 1 if di < n_positive else 0
            qrels_lines.append(f"{tid} 0 {pmid} {relevant}")
            tokens = rng.choices(FILLER, k=6)
            # positives and negatives have identical lengths: the marker
            # token is the only separating signal
            tail = MARKER if relevant else "common"
            title = f"{word} {' '.join(tokens[:3])} {tail}"
            abstract = f"{' '.join(tokens[3:])} {word} {tail} finding"
            corpus_lines.append(json.dumps({"pmid": pmid, "title": title, "abstract": abstract}))
        topics_lines.append("")
    root.mkdir(parents=True, exist_ok=True)
    (root / "topics.txt").write_text("\n".join(topics_lines) + "\n")
    (root / "qrels.txt").write_text("\n".join(qrels_lines) + "\n")
    (root / "corpus.jsonl").write_text("\n".join(corpus_lines) + "\n")
    return {
        "topics": root / "topics.txt",
        "qrels": root / "qrels.txt",
        "corpus": root / "corpus.jsonl",
    }


def dataset_vocab():
    return sorted(
        set(FILLER)
        | set(TOPIC_WORDS)
        | {"systematic", "review", "of", "interventions", MARKER, "finding", "common"}
    )


@pytest.fixture(scope="session")
def marker_dataset(tmp_path_factory):
    return build_marker_dataset(tmp_path_factory.mktemp("marker"))


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    from neuralrank import create_tiny_checkpoint

    return create_tiny_checkpoint(
        tmp_path_factory.mktemp("ckpt") / "base", dataset_vocab(), seed=3
    )


@pytest.fixture(scope="session")
def headless_checkpoint(tmp_path_factory):
    from neuralrank import create_tiny_checkpoint

    return create_tiny_checkpoint(
        tmp_path_factory.mktemp("ckpt") / "encoder-only", dataset_vocab(), seed=3,
        with_head=False,
    )


@pytest.fixture(scope="session")
def trained(marker_dataset, tiny_checkpoint, tmp_path_factory):
    """One spec-recipe fine-tune shared by the training tests and the
    acceptance suite: group size 10, batch size 3, 100 epochs, checkpoints
    every 100 steps.  Only the learning rate is scaled up for the tiny
    randomly initialised model."""
    from neuralrank import FinetuneConfig, finetune

    out_dir = tmp_path_factory.mktemp("train")
    config = FinetuneConfig(
        checkpoint=tiny_checkpoint,
        topics=str(marker_dataset["topics"]),
        qrels=str(marker_dataset["qrels"]),
        corpus=str(marker_dataset["corpus"]),
        out_dir=str(out_dir),
        group_size=10,
        batch_size=3,
        epochs=100,
        checkpoint_interval=100,
        learning_rate=1e-3,
        seed=7,
    )
    return config, finetune(config)
