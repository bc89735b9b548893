"""Cross-encoder run production for screening prioritisation."""

from .data import REPRESENTATIONS, SEPARATOR, TIAB, TITLE, Doc, Topic, represent
from .loss import lce_loss
from .model import CrossEncoder, EncoderConfig, create_tiny_checkpoint
from .runs import format_run, score_topics, write_run_file
from .train import FinetuneConfig, TrainResult, expected_checkpoint_count, finetune
from .triples import TrainingTriple, build_triples

__version__ = "0.1.0"
