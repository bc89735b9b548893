import random

import pytest

from screenrank.corpus import Topic, parse_qrels
from screenrank.errors import DataError, ParseError
from screenrank.runio import (
    RankedRun,
    RunEntry,
    complete_run,
    rank_scored,
    read_run,
    validate_against,
    write_run,
)


def random_run(rng, tag="rnd", n_topics=None):
    """Scores are pre-rounded to 6 decimals so write->read is lossless."""
    topics = {}
    for t in range(n_topics or rng.randint(1, 6)):
        pmids = rng.sample(range(10**6), rng.randint(1, 30))
        scores = [(f"{p:06d}", round(rng.uniform(-10, 10), 6)) for p in pmids]
        if len(scores) > 3 and rng.random() < 0.5:
            scores[1] = (scores[1][0], scores[0][1])  # inject a tie
        topics[f"T{t:03d}"] = scores
    return RankedRun.from_scores(tag, topics)


class TestReadRun:
    def test_grouping_and_order(self):
        run = read_run("CD1 NF 111 1 2.5 t\nCD1 NF 222 2 1.5 t\n")
        assert [e.pmid for e in run.topics["CD1"]] == ["111", "222"]
        assert [e.rank for e in run.topics["CD1"]] == [1, 2]

    def test_resort_ties_by_pmid(self):
        run = read_run("CD1 NF 222 1 1.0 t\nCD1 NF 111 2 1.0 t\n")
        assert [e.pmid for e in run.topics["CD1"]] == ["111", "222"]

    def test_resort_by_score_ignoring_file_ranks(self):
        run = read_run("CD1 NF 111 1 1.0 t\nCD1 NF 222 2 9.0 t\n")
        assert [e.pmid for e in run.topics["CD1"]] == ["222", "111"]

    def test_five_columns_is_error(self):
        with pytest.raises(ParseError, match="line 1.*6 columns"):
            read_run("CD1 NF 111 1 2.5\n")

    def test_unknown_flag_is_error(self):
        with pytest.raises(ParseError, match="flag"):
            read_run("CD1 XX 111 1 2.5 t\n")

    def test_trec_flag_accepted(self):
        run = read_run("CD1 Q0 111 1 2.5 t\n")
        assert run.flag == "Q0"

    def test_non_numeric_rank_or_score_is_error(self):
        with pytest.raises(ParseError, match="rank"):
            read_run("CD1 NF 111 one 2.5 t\n")
        with pytest.raises(ParseError, match="score"):
            read_run("CD1 NF 111 1 high t\n")

    def test_nan_score_is_error(self):
        with pytest.raises(ParseError, match="NaN"):
            read_run("CD1 NF 111 1 nan t\n")

    def test_duplicate_topic_pmid_is_error(self):
        with pytest.raises(DataError, match="duplicate run entry"):
            read_run("CD1 NF 111 1 2.5 t\nCD1 NF 111 2 1.5 t\n")


class TestWriteRun:
    def test_score_format_six_decimals(self):
        run = RankedRun.from_scores("t", {"CD1": [("111", 2.5)]})
        assert write_run(run) == "CD1 NF 111 1 2.500000 t\n"

    def test_flag_always_emitted_as_nf(self):
        run = read_run("CD1 Q0 111 1 2.5 t\n")
        assert " NF " in write_run(run)

    def test_topics_in_ascending_order(self):
        run = RankedRun.from_scores("t", {"B": [("1", 1.0)], "A": [("2", 1.0)]})
        lines = write_run(run).splitlines()
        assert [line.split()[0] for line in lines] == ["A", "B"]

    def test_empty_run_is_empty_stream(self):
        assert write_run(RankedRun("t", {})) == ""

    def test_whitespace_tag_rejected(self):
        with pytest.raises(DataError):
            write_run(RankedRun("bad tag", {"A": [RunEntry("1", 1, 1.0)]}))

    def test_roundtrip(self):
        rng = random.Random(23)
        for _ in range(20):
            run = random_run(rng)
            assert read_run(write_run(run)) == run

    def test_write_read_write_idempotent(self):
        rng = random.Random(29)
        for _ in range(10):
            text = write_run(random_run(rng))
            assert write_run(read_run(text)) == text


class TestValidate:
    def setup_method(self):
        self.topics = [Topic("T1", "q", "bq", ("1", "2", "3")), Topic("T2", "q", "bq", ("4", "5"))]
        self.qrels = parse_qrels("T1 0 1 1\nT1 0 2 0\nT2 0 4 1\n")

    def complete(self):
        return RankedRun.from_scores(
            "t", {"T1": [("1", 3.0), ("2", 2.0), ("3", 1.0)], "T2": [("4", 2.0), ("5", 1.0)]}
        )

    def test_permutation_gives_empty_report(self):
        report = validate_against(self.complete(), self.topics, self.qrels)
        assert report.is_complete()
        assert report.gaps == {} and report.unknown_topics == []

    def test_missing_relevant_listed(self):
        run = RankedRun.from_scores(
            "t", {"T1": [("2", 2.0), ("3", 1.0)], "T2": [("4", 2.0), ("5", 1.0)]}
        )
        report = validate_against(run, self.topics, self.qrels)
        gap = report.gaps["T1"]
        assert gap.missing == ["1"]
        assert gap.unranked_relevant == ["1"]
        assert not report.is_complete()

    def test_foreign_docs_listed(self):
        run = self.complete()
        run.topics["T2"] = rank_scored([("4", 3.0), ("5", 2.0), ("99", 1.0)])
        report = validate_against(run, self.topics, self.qrels)
        assert report.gaps["T2"].foreign == ["99"]

    def test_unknown_topic_listed(self):
        run = self.complete()
        run.topics["TX"] = rank_scored([("7", 1.0)])
        report = validate_against(run, self.topics, self.qrels)
        assert report.unknown_topics == ["TX"]
        assert not report.is_complete()


class TestCompleteRun:
    def setup_method(self):
        self.topics = [Topic("T1", "q", "bq", ("1", "2", "3", "4"))]

    def test_appends_after_last_ranked_in_pmid_order(self):
        run = RankedRun.from_scores("t", {"T1": [("3", 5.0)]})
        completed, notes = complete_run(run, self.topics)
        assert [e.pmid for e in completed.topics["T1"]] == ["3", "1", "2", "4"]
        assert [e.rank for e in completed.topics["T1"]] == [1, 2, 3, 4]
        assert notes["appended"] == {"T1": ["1", "2", "4"]}
        scores = [e.score for e in completed.topics["T1"]]
        assert scores == sorted(scores, reverse=True)

    def test_foreign_docs_dropped_and_reported(self):
        run = RankedRun.from_scores("t", {"T1": [("9", 9.0), ("1", 5.0), ("2", 4.0), ("3", 3.0), ("4", 2.0)]})
        completed, notes = complete_run(run, self.topics)
        assert [e.pmid for e in completed.topics["T1"]] == ["1", "2", "3", "4"]
        assert notes["dropped_foreign"] == {"T1": ["9"]}

    def test_absent_topic_reported_not_synthesised(self):
        run = RankedRun.from_scores("t", {})
        completed, notes = complete_run(run, self.topics)
        assert completed.topics == {}
        assert notes["absent_topics"] == ["T1"]

    def test_strict_rejects_gap(self):
        run = RankedRun.from_scores("t", {"T1": [("3", 5.0)]})
        with pytest.raises(DataError, match="strict"):
            complete_run(run, self.topics, strict=True)

    def test_strict_rejects_foreign(self):
        run = RankedRun.from_scores(
            "t", {"T1": [("1", 5.0), ("2", 4.0), ("3", 3.0), ("4", 2.0), ("9", 1.0)]}
        )
        with pytest.raises(DataError, match="strict"):
            complete_run(run, self.topics, strict=True)

    def test_strict_accepts_permutation(self):
        run = RankedRun.from_scores(
            "t", {"T1": [("1", 5.0), ("2", 4.0), ("3", 3.0), ("4", 2.0)]}
        )
        completed, _ = complete_run(run, self.topics, strict=True)
        assert [e.pmid for e in completed.topics["T1"]] == ["1", "2", "3", "4"]
