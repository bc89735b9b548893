import math
import random

import pytest

from oracle import (
    oracle_ap,
    oracle_last_rel,
    oracle_recall_at_percent,
    oracle_wss,
    random_instance,
)
from screenrank.corpus import Topic, parse_qrels
from screenrank.errors import DataError
from screenrank.metrics import (
    EvalOptions,
    TopicExcluded,
    average_precision,
    evaluate,
    format_table,
    last_rel,
    measure_value,
    recall_at_percent,
    report_jsonl,
    wss,
)
from screenrank.runio import RankedRun


class TestLastRel:
    def test_relevant_at_ranks_2_and_5(self):
        ranking = [f"d{i}" for i in range(1, 11)]
        assert last_rel(ranking, {"d2", "d5"}) == 5

    def test_all_relevant(self):
        ranking = ["a", "b", "c"]
        assert last_rel(ranking, {"a", "b", "c"}) == 3

    def test_single_relevant_at_rank_1(self):
        assert last_rel(["a", "b"], {"a"}) == 1

    def test_no_relevant_excluded(self):
        with pytest.raises(TopicExcluded):
            last_rel(["a"], {"z"})


class TestAveragePrecision:
    def test_perfect_prefix(self):
        assert average_precision(["a", "b", "c", "d"], {"a", "b"}) == 1.0

    def test_hand_oracle(self):
        # relevant at ranks 2 and 4: (1/2 + 2/4) / 2 = 0.5
        assert average_precision(["d1", "d2", "d3", "d4"], {"d2", "d4"}) == 0.5

    def test_single_relevant_at_bottom(self):
        n = 17
        ranking = [f"d{i}" for i in range(n)]
        assert average_precision(ranking, {f"d{n - 1}"}) == 1 / n


class TestRecallAtPercent:
    def test_p100_is_one(self):
        ranking = [f"d{i}" for i in range(7)]
        assert recall_at_percent(ranking, {"d3", "d6"}, 100) == 1.0

    def test_hand_oracle_n300(self):
        # N=300, p=1 -> cutoff 3; one of two relevant docs inside -> 0.5
        ranking = [f"d{i:03d}" for i in range(300)]
        relevant = {"d002", "d250"}
        assert recall_at_percent(ranking, relevant, 1) == 0.5

    def test_ceiling_cutoff(self):
        # N=10, p=1 -> ceil(0.1) = 1
        ranking = [f"d{i}" for i in range(10)]
        assert recall_at_percent(ranking, {"d0"}, 1) == 1.0
        assert recall_at_percent(ranking, {"d1"}, 1) == 0.0

    def test_exact_boundary_cutoff(self):
        # 0.95 * 20 is exactly 19; float arithmetic must not push it to 20.
        ranking = [f"d{i:02d}" for i in range(20)]
        relevant = {"d19"}  # only the last document
        assert recall_at_percent(ranking, relevant, 95) == 0.0

    def test_invalid_p(self):
        with pytest.raises(ValueError):
            recall_at_percent(["a"], {"a"}, 0)
        with pytest.raises(ValueError):
            recall_at_percent(["a"], {"a"}, 101)


class TestWss:
    def test_hand_oracle_k95(self):
        # N=100, R=10, relevant at ranks 1..10: need ceil(9.5)=10 found at
        # rank 10 -> (100-10)/100 - 0.05 = 0.85
        ranking = [f"d{i:03d}" for i in range(100)]
        relevant = {f"d{i:03d}" for i in range(10)}
        assert wss(ranking, relevant, 95) == pytest.approx(0.85, abs=1e-12)

    def test_last_rel_at_bottom_gives_zero(self):
        ranking = [f"d{i}" for i in range(10)]
        assert wss(ranking, {"d9"}, 100) == 0.0

    def test_hand_oracle_k100(self):
        # N=100, last_rel=50 -> 0.5
        ranking = [f"d{i:03d}" for i in range(100)]
        assert wss(ranking, {"d049"}, 100) == pytest.approx(0.5, abs=1e-12)

    def test_can_be_negative(self):
        # One relevant document at the very bottom: WSS@95 goes negative.
        ranking = [f"d{i}" for i in range(10)]
        assert wss(ranking, {"d9"}, 95) == pytest.approx(0.0 - 0.05, abs=1e-12)

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            wss(["a"], {"a"}, 0)


class TestOracleEquivalence:
    def test_random_instances_match_brute_force(self):
        rng = random.Random(101)
        for _ in range(200):
            ranking, relevant = random_instance(rng)
            assert last_rel(ranking, relevant) == oracle_last_rel(ranking, relevant)
            assert average_precision(ranking, relevant) == pytest.approx(
                oracle_ap(ranking, relevant), abs=1e-12
            )
            for p in (1, 5, 10, 20):
                assert recall_at_percent(ranking, relevant, p) == pytest.approx(
                    oracle_recall_at_percent(ranking, relevant, p), abs=1e-12
                )
            for k in (95, 100):
                assert wss(ranking, relevant, k) == pytest.approx(
                    oracle_wss(ranking, relevant, k), abs=1e-12
                )

    def test_wss100_identity(self):
        rng = random.Random(103)
        for _ in range(200):
            ranking, relevant = random_instance(rng)
            n = len(ranking)
            assert wss(ranking, relevant, 100) == (n - last_rel(ranking, relevant)) / n

    def test_ap_invariant_under_nonrelevant_swaps(self):
        rng = random.Random(107)
        for _ in range(50):
            ranking, relevant = random_instance(rng, max_n=30)
            nonrel_positions = [i for i, p in enumerate(ranking) if p not in relevant]
            if len(nonrel_positions) < 2:
                continue
            i, j = rng.sample(nonrel_positions, 2)
            swapped = list(ranking)
            swapped[i], swapped[j] = swapped[j], swapped[i]
            assert average_precision(swapped, relevant) == average_precision(
                ranking, relevant
            )


class TestEvaluate:
    def make_dataset(self):
        topics = [
            Topic("T1", "q", "bq", tuple(f"a{i}" for i in range(10))),
            Topic("T2", "q", "bq", tuple(f"b{i}" for i in range(5))),
            Topic("T3", "q", "bq", ("c1", "c2")),
        ]
        qrels = parse_qrels(
            "T1 0 a0 1\nT1 0 a1 2\n"
            "T2 0 b3 1\n"
            "T3 0 c1 0\nT3 0 c2 0\n"
        )
        return topics, qrels

    def perfect_run(self):
        return RankedRun.from_scores(
            "t",
            {
                "T1": [(f"a{i}", 10.0 - i) for i in range(10)],
                "T2": [(f"b{i}", 5.0 - abs(i - 3)) for i in range(5)],
                "T3": [("c1", 2.0), ("c2", 1.0)],
            },
        )

    def test_perfect_topic(self):
        topics, qrels = self.make_dataset()
        report = evaluate(self.perfect_run(), topics, qrels)
        t1 = next(ev for ev in report.topic_evals if ev.topic_id == "T1")
        assert t1.n == 10 and t1.r == 2
        assert t1.ap == 1.0
        assert t1.last_rel == 2
        assert t1.wss[100] == pytest.approx(0.8, abs=1e-12)

    def test_graded_qrels_binarized(self):
        topics, qrels = self.make_dataset()
        report = evaluate(self.perfect_run(), topics, qrels)
        t1 = next(ev for ev in report.topic_evals if ev.topic_id == "T1")
        assert t1.r == 2  # grades 1 and 2 both count once

    def test_zero_relevant_topic_excluded(self):
        topics, qrels = self.make_dataset()
        report = evaluate(self.perfect_run(), topics, qrels)
        assert ("T3", "no relevant candidates") in report.excluded
        assert {ev.topic_id for ev in report.topic_evals} == {"T1", "T2"}

    def test_means_are_arithmetic_over_evaluated(self):
        topics, qrels = self.make_dataset()
        report = evaluate(self.perfect_run(), topics, qrels)
        aps = [ev.ap for ev in report.topic_evals]
        assert report.means["ap"] == pytest.approx(sum(aps) / len(aps), abs=1e-15)

    def test_mean_of_two_topics(self):
        topics = [Topic("T1", "q", "bq", ("a", "b")), Topic("T2", "q", "bq", ("c", "d"))]
        qrels = parse_qrels("T1 0 b 1\nT2 0 c 1\n")
        run = RankedRun.from_scores(
            "t", {"T1": [("a", 2.0), ("b", 1.0)], "T2": [("c", 2.0), ("d", 1.0)]}
        )
        report = evaluate(run, topics, qrels)
        # T1 ap = 0.5, T2 ap = 1.0
        assert report.means["ap"] == pytest.approx(0.75, abs=1e-15)

    def test_no_evaluated_topic_is_error(self):
        topics = [Topic("T3", "q", "bq", ("c1", "c2"))]
        qrels = parse_qrels("T3 0 c1 0\n")
        run = RankedRun.from_scores("t", {"T3": [("c1", 2.0), ("c2", 1.0)]})
        with pytest.raises(DataError, match="no evaluated topic"):
            evaluate(run, topics, qrels)

    def test_qrels_outside_candidates_not_counted_for_r(self):
        topics = [Topic("T1", "q", "bq", ("a", "b"))]
        qrels = parse_qrels("T1 0 a 1\nT1 0 zzz 1\n")
        run = RankedRun.from_scores("t", {"T1": [("a", 2.0), ("b", 1.0)]})
        report = evaluate(run, topics, qrels)
        assert report.topic_evals[0].r == 1

    def test_incomplete_run_appended_documents_participate(self):
        topics = [Topic("T1", "q", "bq", ("a", "b", "c", "d"))]
        qrels = parse_qrels("T1 0 a 1\nT1 0 d 1\n")
        run = RankedRun.from_scores("t", {"T1": [("a", 1.0)]})  # b, c, d appended
        report = evaluate(run, topics, qrels)
        ev = report.topic_evals[0]
        assert ev.n == 4
        assert ev.last_rel == 4  # d lands at the bottom in pmid order
        assert ev.ap == pytest.approx((1.0 + 2 / 4) / 2, abs=1e-12)

    def test_monotone_score_transform_leaves_measures_unchanged(self):
        topics, qrels = self.make_dataset()
        rng = random.Random(113)
        base = {
            t.topic_id: [(p, rng.uniform(-3, 3)) for p in t.pmids] for t in topics
        }
        run = RankedRun.from_scores("t", base)
        transformed = RankedRun.from_scores(
            "t",
            {
                tid: [(p, math.exp(0.5 * s) + 2.0) for p, s in pairs]
                for tid, pairs in base.items()
            },
        )
        rep_a = evaluate(run, topics, qrels)
        rep_b = evaluate(transformed, topics, qrels)
        for ev_a, ev_b in zip(rep_a.topic_evals, rep_b.topic_evals):
            assert ev_a == ev_b

    def test_measure_value_lookup(self):
        topics, qrels = self.make_dataset()
        report = evaluate(self.perfect_run(), topics, qrels)
        ev = report.topic_evals[0]
        assert measure_value(ev, "ap") == ev.ap
        assert measure_value(ev, "recall@10") == ev.recall_at[10]
        assert measure_value(ev, "wss@95") == ev.wss[95]
        assert measure_value(ev, "last_rel") == float(ev.last_rel)
        with pytest.raises(ValueError):
            measure_value(ev, "ndcg")
        with pytest.raises(ValueError):
            measure_value(ev, "recall@37")

    def test_report_rendering(self):
        topics, qrels = self.make_dataset()
        report = evaluate(self.perfect_run(), topics, qrels)
        table = format_table(report)
        assert "MEAN" in table and "T1" in table and "excluded T3" in table
        lines = report_jsonl(report).strip().splitlines()
        assert len(lines) == 3  # two topics + means
        assert '"record": "means"' in lines[-1]
