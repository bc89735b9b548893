"""Screening-prioritisation ranking, evaluation, and analysis toolkit."""

from .corpus import (
    SEPARATOR,
    TIAB,
    TITLE,
    DocRecord,
    DocStore,
    Qrels,
    Topic,
    parse_qrels,
    parse_topics,
    read_corpus,
    read_qrels,
    read_topics,
    represent,
)
from .errors import (
    AnalysisError,
    ConfigError,
    DataError,
    ParseError,
    ScreenRankError,
)
from .lexical import LexicalParams, bm25_score, build_stats, qlm_score, rank_topic, tokenize
from .metrics import (
    EvalOptions,
    MetricReport,
    TopicEval,
    average_precision,
    evaluate,
    last_rel,
    recall_at_percent,
    wss,
)
from .analysis import (
    GainLossResult,
    PairedComparison,
    convergence,
    gain_loss,
    paired_ttest,
)
from .runio import RankedRun, RunEntry, read_run, validate_against, write_run

__version__ = "0.1.0"
