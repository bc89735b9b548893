"""Run comparison statistics and checkpoint-series convergence analysis.

Carries the Student's paired two-tailed t-test with Bonferroni correction
used for run comparison tables, per-topic gain/loss tables, and the
saturation analysis over fine-tuning checkpoint series.  The t-distribution
CDF is computed from the regularized incomplete beta function (continued
fraction, accurate to well below 1e-10) so no external statistical tables
are needed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from statistics import fmean
from typing import Iterable, Mapping, Sequence

from . import metrics
from .corpus import Qrels, Topic
from .errors import AnalysisError
from .runio import RankedRun

log = logging.getLogger(__name__)

_BETACF_MAX_ITER = 300
_BETACF_EPS = 1e-15
_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta (modified Lentz's method).
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction failed to converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """Two-tailed p-value for a t statistic with df degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


# ---------------------------------------------------------------------------
# Paired t-test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairedComparison:
    measure: str
    n_topics: int
    mean_a: float
    mean_b: float
    mean_delta: float
    t_statistic: float
    df: int
    p_value: float
    corrected_p: float
    n_comparisons: int
    degenerate: str | None = None

    def is_significant(self, alpha: float = 0.05) -> bool:
        return self.corrected_p < alpha


def paired_ttest(
    a: Sequence[float],
    b: Sequence[float],
    n_comparisons: int = 1,
    measure: str = "",
) -> PairedComparison:
    """Student's two-tailed paired t-test with Bonferroni correction.

    t = mean(d) / (sd(d)/sqrt(n)) with d = a - b and the sample standard
    deviation (n-1 denominator).  Degenerate inputs are flagged: identical
    samples give p = 1; zero variance with a nonzero mean gives p = 0.
    """
    if len(a) != len(b):
        raise AnalysisError("paired samples must have equal length")
    n = len(a)
    if n < 2:
        raise AnalysisError("need at least two paired observations")
    if n_comparisons < 1:
        raise AnalysisError("n_comparisons must be >= 1")
    deltas = [x - y for x, y in zip(a, b)]
    mean_delta = fmean(deltas)
    variance = sum((d - mean_delta) ** 2 for d in deltas) / (n - 1)
    sd = math.sqrt(variance)
    degenerate = None
    if all(d == 0.0 for d in deltas):
        t = 0.0
        p = 1.0
        degenerate = "identical runs"
    elif sd == 0.0:
        t = math.inf if mean_delta > 0 else -math.inf
        p = 0.0
        degenerate = "zero variance"
    else:
        t = mean_delta / (sd / math.sqrt(n))
        p = student_t_two_sided_p(t, n - 1)
    return PairedComparison(
        measure=measure,
        n_topics=n,
        mean_a=fmean(a),
        mean_b=fmean(b),
        mean_delta=mean_delta,
        t_statistic=t,
        df=n - 1,
        p_value=p,
        corrected_p=min(1.0, p * n_comparisons),
        n_comparisons=n_comparisons,
        degenerate=degenerate,
    )


def compare_reports(
    reports: Sequence[metrics.MetricReport], measure: str
) -> list[tuple[str, PairedComparison]]:
    """Compare the first (focal) report against every other.

    The Bonferroni family is the number of non-focal runs, matching the
    one-focal-run-versus-m-others convention of comparison tables; the
    family size is recorded on every result so it is auditable.
    """
    if len(reports) < 2:
        raise AnalysisError("need a focal run and at least one other run")
    focal, others = reports[0], reports[1:]
    family = len(others)
    focal_values = focal.per_topic(measure)
    results = []
    for other in others:
        other_values = other.per_topic(measure)
        common = sorted(set(focal_values) & set(other_values))
        if not common:
            raise AnalysisError(
                f"runs {focal.run_tag!r} and {other.run_tag!r} share no evaluated topic"
            )
        comparison = paired_ttest(
            [focal_values[t] for t in common],
            [other_values[t] for t in common],
            n_comparisons=family,
            measure=measure,
        )
        results.append((other.run_tag, comparison))
    return results


# ---------------------------------------------------------------------------
# Gain-loss analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GainLossEntry:
    topic_id: str
    delta: float


@dataclass
class GainLossResult:
    measure: str
    run_a: str
    run_b: str
    entries: list[GainLossEntry]
    wins: int
    losses: int
    ties: int
    dropped: list[str]


def gain_loss(
    report_a: metrics.MetricReport,
    report_b: metrics.MetricReport,
    measure: str,
) -> GainLossResult:
    """Per-topic effectiveness difference (A minus B), sorted descending."""
    values_a = report_a.per_topic(measure)
    values_b = report_b.per_topic(measure)
    common = sorted(set(values_a) & set(values_b))
    dropped = sorted(set(values_a) ^ set(values_b))
    if not common:
        raise AnalysisError("no topic is evaluated by both runs")
    if dropped:
        log.warning(
            "gain-loss drops %d topic(s) not evaluated by both runs: %s",
            len(dropped),
            ", ".join(dropped),
        )
    entries = [GainLossEntry(t, values_a[t] - values_b[t]) for t in common]
    entries.sort(key=lambda e: (-e.delta, e.topic_id))
    wins = sum(1 for e in entries if e.delta > 0)
    losses = sum(1 for e in entries if e.delta < 0)
    return GainLossResult(
        measure=measure,
        run_a=report_a.run_tag,
        run_b=report_b.run_tag,
        entries=entries,
        wins=wins,
        losses=losses,
        ties=len(entries) - wins - losses,
        dropped=dropped,
    )


# ---------------------------------------------------------------------------
# Convergence over checkpoint series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergencePoint:
    step: int
    values: Mapping[str, float]
    mean: float


@dataclass
class ConvergenceResult:
    measure: str
    points: list[ConvergencePoint]
    best_step: int
    saturation_step: int | None
    alpha: float


def convergence(
    series: Sequence[tuple[int, RankedRun]],
    topics: Iterable[Topic],
    qrels: Qrels,
    measure: str = "ap",
    alpha: float = 0.05,
    eval_options: metrics.EvalOptions | None = None,
) -> ConvergenceResult:
    """Evaluate a checkpoint run series and find the saturation step.

    The saturation step is the smallest step s with at least one later
    checkpoint such that every later checkpoint's paired t-test against s
    (Bonferroni over the number of later-step comparisons) is
    non-significant at alpha.  The final checkpoint alone cannot qualify;
    with none qualifying the series has no saturation.
    """
    if len(series) < 2:
        raise AnalysisError("need at least two checkpoints")
    steps = [step for step, _ in series]
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise AnalysisError("checkpoint steps must be strictly increasing")
    topics = list(topics)
    evaluated = []
    for step, run in series:
        report = metrics.evaluate(run, topics, qrels, eval_options)
        evaluated.append((step, report.per_topic(measure)))
    common = sorted(set.intersection(*(set(values) for _, values in evaluated)))
    if not common:
        raise AnalysisError("no topic is evaluated across every checkpoint")

    points = [
        ConvergencePoint(
            step=step,
            values={t: values[t] for t in common},
            mean=fmean(values[t] for t in common),
        )
        for step, values in evaluated
    ]

    best = points[0]
    for point in points[1:]:
        if point.mean > best.mean:
            best = point

    saturation: int | None = None
    for i in range(len(points) - 1):
        later = points[i + 1:]
        family = len(later)
        settled = True
        for other in later:
            comparison = paired_ttest(
                [points[i].values[t] for t in common],
                [other.values[t] for t in common],
                n_comparisons=family,
                measure=measure,
            )
            if comparison.is_significant(alpha):
                settled = False
                break
        if settled:
            saturation = points[i].step
            break

    return ConvergenceResult(
        measure=measure,
        points=points,
        best_step=best.step,
        saturation_step=saturation,
        alpha=alpha,
    )


# ---------------------------------------------------------------------------
# Plot-data emission (CSV-style tables for external plotting)
# ---------------------------------------------------------------------------

def gain_loss_table(result: GainLossResult) -> list[str]:
    """One header row plus one row per topic, largest gain first."""
    rows = [f"topic_id,delta_{result.measure}"]
    rows.extend(f"{e.topic_id},{e.delta:.6f}" for e in result.entries)
    return rows


def convergence_table(result: ConvergenceResult) -> list[str]:
    """One header row plus one row per checkpoint step."""
    rows = [f"step,mean_{result.measure}"]
    rows.extend(f"{p.step},{p.mean:.6f}" for p in result.points)
    return rows
