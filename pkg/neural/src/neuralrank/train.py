"""Fine-tuning with the localized contrastive loss.

Each training step scores ``batch_size`` groups of (1 positive +
group_size-1 negatives) query-document pairs and minimises the group
softmax cross-entropy.  Periodic checkpoints are written every
``checkpoint_interval`` steps and the final model is always saved under
``final/`` (the reported artifact), so a run produces
floor(total_steps / interval) + 1 checkpoints.  The log records the exact
learning parameters and one (step, loss, lr) record per step; training
resumes from the newest checkpoint when interrupted.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from . import data
from .loss import lce_loss
from .triples import TrainingTriple, build_triples

log = logging.getLogger(__name__)

CHECKPOINT_PREFIX = "step-"
FINAL_NAME = "final"
STATE_FILE = "trainer_state.pt"


@dataclass
class FinetuneConfig:
    checkpoint: str = ""
    topics: str = ""
    qrels: str = ""
    corpus: str = ""
    out_dir: str = ""
    representation: str = data.TIAB
    group_size: int = 10
    batch_size: int = 3
    epochs: int = 100
    checkpoint_interval: int = 100
    max_length: int = 512
    # framework-default fine-tuning parameters; recorded verbatim in the log
    learning_rate: float = 5e-5
    weight_decay: float = 0.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 42
    resume: bool = False

    def validate(self) -> None:
        if self.group_size < 2:
            raise ValueError("group_size must be >= 2")
        for name in ("batch_size", "epochs", "checkpoint_interval", "max_length"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("checkpoint", "topics", "qrels", "corpus", "out_dir"):
            if not getattr(self, name):
                raise ValueError(f"config is missing {name}")


@dataclass
class TrainResult:
    checkpoints: list[tuple[int, str]] = field(default_factory=list)  # periodic
    final_step: int = 0
    final_path: str = ""
    log_path: str = ""

    def series(self) -> list[tuple[int, str]]:
        """Periodic checkpoints plus the final one, deduplicated by step."""
        steps = dict(self.checkpoints)
        steps.setdefault(self.final_step, self.final_path)
        return sorted(steps.items())


def expected_checkpoint_count(total_steps: int, interval: int) -> int:
    return total_steps // interval + 1


def _stored_step(path: Path) -> int | None:
    state_path = path / STATE_FILE
    if not state_path.is_file():
        return None
    return torch.load(state_path, weights_only=False).get("step")


def _latest_checkpoint(out_dir: Path) -> tuple[int, Path, dict] | None:
    best = None
    if not out_dir.is_dir():
        return None
    for entry in out_dir.iterdir():
        if not entry.is_dir():
            continue
        if entry.name != FINAL_NAME and not entry.name.startswith(CHECKPOINT_PREFIX):
            continue
        state_path = entry / STATE_FILE
        if not state_path.is_file():
            continue
        state = torch.load(state_path, weights_only=False)
        step = state.get("step", -1)
        if best is None or step > best[0]:
            best = (step, entry, state)
    return best


def finetune(config: FinetuneConfig) -> TrainResult:
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    topics = data.read_topics(config.topics)
    grades = data.read_qrels(config.qrels)
    docs = data.read_corpus(config.corpus)

    torch.manual_seed(config.seed)
    random.seed(config.seed)

    start_step = 0
    start_epoch = 0
    model_source = config.checkpoint
    optimizer_state = None
    if config.resume:
        latest = _latest_checkpoint(out_dir)
        if latest is not None:
            start_step, source_dir, state = latest
            model_source = str(source_dir)
            optimizer_state = state.get("optimizer")
            start_epoch = state.get("next_epoch", 0)
            log.info("resuming from %s (step %d, epoch %d)", source_dir, start_step, start_epoch)

    tokenizer = AutoTokenizer.from_pretrained(model_source)
    model = AutoModelForSequenceClassification.from_pretrained(model_source, num_labels=1)
    model.train()
    optimizer = torch.optim.AdamW(
        model.parameters(),
        lr=config.learning_rate,
        betas=(config.adam_beta1, config.adam_beta2),
        eps=config.adam_epsilon,
        weight_decay=config.weight_decay,
    )
    if optimizer_state is not None:
        optimizer.load_state_dict(optimizer_state)

    log_path = out_dir / "train.log.jsonl"
    log_mode = "a" if (config.resume and start_step) else "w"
    result = TrainResult(log_path=str(log_path))

    def save_checkpoint(name: str, step: int, next_epoch: int) -> Path:
        target = out_dir / name
        model.save_pretrained(target)
        tokenizer.save_pretrained(target)
        torch.save(
            {"optimizer": optimizer.state_dict(), "next_epoch": next_epoch, "step": step},
            target / STATE_FILE,
        )
        return target

    step = start_step
    with open(log_path, log_mode, encoding="utf-8") as log_file:
        if log_mode == "w":
            log_file.write(json.dumps({"record": "config", **asdict(config)}, sort_keys=True) + "\n")
        for epoch in range(start_epoch, config.epochs):
            triples = build_triples(
                topics, grades, docs, config.representation,
                group_size=config.group_size, seed=config.seed, epoch=epoch,
            )
            if not triples:
                raise ValueError("no training triples could be built")
            for start in range(0, len(triples), config.batch_size):
                batch = triples[start : start + config.batch_size]
                encoded = _encode_groups(tokenizer, batch, config.max_length)
                logits = model(**encoded).logits.squeeze(-1)
                scores = logits.view(len(batch), config.group_size)
                loss = lce_loss(scores)
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                step += 1
                log_file.write(
                    json.dumps(
                        {"record": "step", "step": step, "epoch": epoch,
                         "loss": round(float(loss.detach()), 6), "lr": config.learning_rate},
                        sort_keys=True,
                    ) + "\n"
                )
                if step % config.checkpoint_interval == 0:
                    epoch_done = start + config.batch_size >= len(triples)
                    path = save_checkpoint(
                        f"{CHECKPOINT_PREFIX}{step}", step, epoch + (1 if epoch_done else 0)
                    )
                    result.checkpoints.append((step, str(path)))

    final = save_checkpoint(FINAL_NAME, step, next_epoch=config.epochs)
    result.final_step = step
    result.final_path = str(final)
    return result


def _encode_groups(tokenizer, triples: list[TrainingTriple], max_length: int):
    queries, texts = [], []
    for triple in triples:
        for doc_text in (triple.positive, *triple.negatives):
            queries.append(triple.query)
            texts.append(doc_text.replace(data.SEPARATOR, tokenizer.sep_token))
    return tokenizer(
        queries,
        texts,
        padding=True,
        truncation="only_second",
        max_length=max_length,
        return_tensors="pt",
    )
