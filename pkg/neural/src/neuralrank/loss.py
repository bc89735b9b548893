"""Localized contrastive loss over groups of one positive and g-1 negatives."""

import torch


def lce_loss(scores: torch.Tensor, positive_index: int = 0) -> torch.Tensor:
    """-ln(exp(s+) / sum_j exp(s_j)) averaged over the batch.

    ``scores`` is (group,) or (batch, group) with the positive's score at
    ``positive_index``; log_softmax performs the max-subtraction so the
    loss is stable and shift-invariant.
    """
    if scores.shape[-1] < 2:
        raise ValueError("a group needs at least one negative")
    log_probs = torch.log_softmax(scores, dim=-1)
    return -log_probs[..., positive_index].mean()
