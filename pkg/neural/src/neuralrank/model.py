"""Cross-encoder relevance model: joint query-document encoding, one logit.

Checkpoints are standard sequence-classification models with a single
relevance logit.  Raw encoders (no scoring head) get a freshly initialised
head under a fixed seed; such zero-shot scores are architecture-faithful
but seed-dependent, and the seed is recorded so runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from transformers import (
    AutoModelForSequenceClassification,
    AutoTokenizer,
    BertConfig,
    BertForSequenceClassification,
    BertModel,
    BertTokenizerFast,
)

from .data import SEPARATOR, TIAB


@dataclass(frozen=True)
class EncoderConfig:
    checkpoint: str
    representation: str = TIAB
    max_length: int = 512
    head_seed: int = 42


class CrossEncoder:
    def __init__(self, model, tokenizer, config: EncoderConfig):
        self.model = model
        self.tokenizer = tokenizer
        self.config = config
        self.model.eval()

    @classmethod
    def load(cls, config: EncoderConfig) -> "CrossEncoder":
        # Seeding before load fixes the head init for checkpoints that
        # carry no classification head (plain encoders).
        torch.manual_seed(config.head_seed)
        tokenizer = AutoTokenizer.from_pretrained(config.checkpoint)
        model = AutoModelForSequenceClassification.from_pretrained(
            config.checkpoint, num_labels=1
        )
        return cls(model, tokenizer, config)

    def _doc_text(self, text: str) -> str:
        return text.replace(SEPARATOR, self.tokenizer.sep_token)

    def encode(self, queries: list[str], doc_texts: list[str]):
        """Tokenize query-document pairs.

        Truncation removes tokens from the tail of the document segment
        only, so the abstract goes first, then the title; the query is
        never truncated.
        """
        if any(not q.strip() for q in queries):
            raise ValueError("empty query text")
        if any(not self._doc_text(d).strip() for d in doc_texts):
            raise ValueError("empty document text")
        return self.tokenizer(
            queries,
            [self._doc_text(d) for d in doc_texts],
            padding=True,
            truncation="only_second",
            max_length=self.config.max_length,
            return_tensors="pt",
        )

    @torch.no_grad()
    def score_batch(self, query: str, doc_texts: list[str], batch_size: int = 64) -> list[float]:
        scores: list[float] = []
        for start in range(0, len(doc_texts), batch_size):
            chunk = doc_texts[start : start + batch_size]
            encoded = self.encode([query] * len(chunk), chunk)
            logits = self.model(**encoded).logits.squeeze(-1)
            scores.extend(float(v) for v in logits)
        return scores

    def score_pair(self, query: str, doc_text: str) -> float:
        return self.score_batch(query, [doc_text])[0]


def create_tiny_checkpoint(
    out_dir,
    vocab_words,
    hidden_size: int = 32,
    layers: int = 2,
    heads: int = 2,
    seed: int = 0,
    with_head: bool = True,
) -> str:
    """Write a miniature randomly initialised checkpoint for tests and
    synthetic training: whole-word vocabulary, standard file layout.

    with_head=False saves the bare encoder, exercising the zero-shot path
    where the scoring head must be initialised at load time.
    """
    out_dir = str(out_dir)
    specials = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab = specials + sorted({w.lower() for w in vocab_words} - set(specials))
    import inspect
    import os

    os.makedirs(out_dir, exist_ok=True)
    vocab_path = os.path.join(out_dir, "vocab.txt")
    with open(vocab_path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(vocab) + "\n")
    # transformers 5.x takes a vocab dict; 4.x takes a vocab_file path
    if "vocab" in inspect.signature(BertTokenizerFast.__init__).parameters:
        tokenizer = BertTokenizerFast(
            vocab={token: index for index, token in enumerate(vocab)}, do_lower_case=True
        )
    else:
        tokenizer = BertTokenizerFast(vocab_file=vocab_path, do_lower_case=True)
    assert tokenizer.tokenize(vocab[-1]) == [vocab[-1]], "tokenizer vocabulary not loaded"
    tokenizer.save_pretrained(out_dir)

    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=hidden_size,
        num_hidden_layers=layers,
        num_attention_heads=heads,
        intermediate_size=hidden_size * 2,
        max_position_embeddings=512,
        num_labels=1,
    )
    torch.manual_seed(seed)
    model = BertForSequenceClassification(config) if with_head else BertModel(config)
    model.save_pretrained(out_dir)
    return out_dir
