import pytest

from neuralrank import (
    CrossEncoder,
    EncoderConfig,
    SEPARATOR,
    data,
    format_run,
    score_topics,
)


@pytest.fixture(scope="module")
def encoder(tiny_checkpoint):
    return CrossEncoder.load(EncoderConfig(checkpoint=tiny_checkpoint))


class TestScorePair:
    def test_inference_deterministic(self, encoder):
        query = "systematic review of cardiac interventions"
        doc = f"cardiac study trial {SEPARATOR} outcomes zzmarker finding"
        assert encoder.score_pair(query, doc) == encoder.score_pair(query, doc)

    def test_overlength_tiab_truncated_without_failure(self, encoder):
        doc = f"cardiac study {SEPARATOR} " + " ".join(["outcomes"] * 900)
        score = encoder.score_pair("systematic review", doc)
        assert isinstance(score, float)

    def test_truncation_drops_abstract_tail_first(self, encoder):
        # Same query+title, abstracts that differ only beyond the length
        # limit: identical scores prove truncation is tail-first on the
        # document segment and the query and title survive.
        head = " ".join(["outcomes"] * 600)
        doc_a = f"cardiac study {SEPARATOR} {head} zzmarker"
        doc_b = f"cardiac study {SEPARATOR} {head} finding"
        query = "systematic review of cardiac interventions"
        assert encoder.score_pair(query, doc_a) == encoder.score_pair(query, doc_b)

    def test_short_and_truncated_differ_in_general(self, encoder):
        query = "systematic review"
        assert encoder.score_pair(query, "cardiac study") != encoder.score_pair(
            query, "renal analysis"
        )

    def test_empty_input_rejected(self, encoder):
        with pytest.raises(ValueError):
            encoder.score_pair("", "cardiac study")
        with pytest.raises(ValueError):
            encoder.score_pair("systematic review", "")


class TestZeroShotHead:
    def test_headless_checkpoint_head_seeded(self, headless_checkpoint):
        query = "systematic review of cardiac interventions"
        doc = "cardiac study trial"
        one = CrossEncoder.load(EncoderConfig(checkpoint=headless_checkpoint, head_seed=11))
        two = CrossEncoder.load(EncoderConfig(checkpoint=headless_checkpoint, head_seed=11))
        other = CrossEncoder.load(EncoderConfig(checkpoint=headless_checkpoint, head_seed=12))
        assert one.score_pair(query, doc) == two.score_pair(query, doc)
        assert one.score_pair(query, doc) != other.score_pair(query, doc)


class TestRunProduction:
    def test_run_format(self, encoder, marker_dataset):
        topics = data.read_topics(marker_dataset["topics"])
        docs = data.read_corpus(marker_dataset["corpus"])
        scored = score_topics(topics, docs, encoder)
        text = format_run(scored, "tiny-tiab")
        lines = text.strip().splitlines()
        assert len(lines) == 100
        for line in lines:
            topic_id, flag, pmid, rank, score, tag = line.split()
            assert flag == "NF" and tag == "tiny-tiab"
            int(rank)
            float(score)
            assert len(score.split(".")[1]) == 6

    def test_every_candidate_once_ranks_contiguous(self, encoder, marker_dataset):
        topics = data.read_topics(marker_dataset["topics"])
        docs = data.read_corpus(marker_dataset["corpus"])
        scored = score_topics(topics, docs, encoder)
        for topic in topics:
            pmids = [p for p, _ in scored[topic.topic_id]]
            assert sorted(pmids) == sorted(topic.pmids)
        lines = format_run(scored, "t").strip().splitlines()
        ranks = [int(line.split()[3]) for line in lines if line.startswith("MK001 ")]
        assert ranks == list(range(1, 21))

    def test_missing_document_is_topic_level_error(self, encoder, marker_dataset):
        topics = data.read_topics(marker_dataset["topics"])
        docs = data.read_corpus(marker_dataset["corpus"])
        victim = topics[0].pmids[0]
        del docs[victim]
        with pytest.raises(ValueError, match=victim):
            score_topics(topics, docs, encoder)

    def test_rescore_byte_identical(self, encoder, marker_dataset):
        topics = data.read_topics(marker_dataset["topics"])
        docs = data.read_corpus(marker_dataset["corpus"])
        a = format_run(score_topics(topics, docs, encoder), "t")
        b = format_run(score_topics(topics, docs, encoder), "t")
        assert a == b

    def test_title_and_tiab_tags_distinct(self, tiny_checkpoint, marker_dataset):
        topics = data.read_topics(marker_dataset["topics"])[:1]
        docs = data.read_corpus(marker_dataset["corpus"])
        tags = set()
        for mode in ("title", "tiab"):
            enc = CrossEncoder.load(
                EncoderConfig(checkpoint=tiny_checkpoint, representation=mode)
            )
            tag = f"tiny-{mode}"
            tags.add(tag)
            format_run(score_topics(topics, docs, enc), tag)
        assert len(tags) == 2

    def test_whitespace_tag_rejected(self, encoder, marker_dataset):
        topics = data.read_topics(marker_dataset["topics"])[:1]
        docs = data.read_corpus(marker_dataset["corpus"])
        scored = score_topics(topics, docs, encoder)
        with pytest.raises(ValueError):
            format_run(scored, "bad tag")
