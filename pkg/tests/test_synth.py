import pytest
from pydantic import ValidationError
from src.config import BEHAVIOR_KINDS, DatasetConfig, SynthConfig
from src.dataset import read_ego_network
from src.models import Category, SynthError, TweetKind
from src.pipeline import score_network
from src.scoring import ScoredTweet, build_corpus, fit_tfidf, normalization
from src.synth import (
    IMPLICIT_KINDS,
    GroundTruth,
    TruthEntry,
    brute_force_score,
    evaluate_detection,
    generate,
    generate_many,
    read_truth,
    write_synthetic,
)
from src.windows import build_windows

SMALL = dict(num_followees=3, tweets_per_followee=10, ego_tweet_count=6, vocab_size=12)


def scored_run(config: SynthConfig):
    ego, truth = generate(config)
    result = score_network(ego, DatasetConfig(window_size=config.window_size))
    return ego, truth, result


class TestGenerate:
    def test_deterministic(self):
        config = SynthConfig(seed=7)
        assert generate(config) == generate(config)

    def test_seeds_differ(self):
        assert generate(SynthConfig(seed=1))[0] != generate(SynthConfig(seed=2))[0]

    def test_byte_identical_files(self, tmp_path):
        config = SynthConfig(seed=11)
        paths_a = write_synthetic(tmp_path / "a", *generate(config))
        paths_b = write_synthetic(tmp_path / "b", *generate(config))
        for a, b in zip(paths_a, paths_b):
            assert a.read_bytes() == b.read_bytes()

    def test_written_files_read_back(self, tmp_path):
        ego, truth = generate(SynthConfig(seed=3))
        data_path, truth_path = write_synthetic(tmp_path, ego, truth)
        assert data_path.name == "ego3.jsonl"
        assert read_ego_network(data_path) == ego
        assert read_truth(truth_path) == truth

    def test_shape(self):
        config = SynthConfig(seed=5, num_followees=4, tweets_per_followee=12, ego_tweet_count=10)
        ego, truth = generate(config)
        assert ego.ego_user_id == "ego5"
        assert len(ego.followees) == 4
        assert all(len(r.tweets) == 12 for r in ego.followees.values())
        assert len(ego.ego_tweets) == 10
        assert set(truth.entries) == {t.tweet_id for t in ego.ego_tweets}
        assert truth.seed == 5

    def test_mix_counts_are_exact(self):
        mix = {"implicit_copy": 0.5, "explicit_reply": 0.3, "unrelated": 0.2}
        _, truth = generate(SynthConfig(seed=2, ego_tweet_count=10, behavior_mix=mix))
        kinds = [e.true_kind for e in truth.entries.values()]
        assert (kinds.count("implicit_copy"), kinds.count("explicit_reply"), kinds.count("unrelated")) == (5, 3, 2)

    def test_tagged_kinds_carry_their_source(self):
        ego, truth = generate(SynthConfig(seed=9, ego_tweet_count=25))
        for tweet in ego.ego_tweets:
            entry = truth.entries[tweet.tweet_id]
            if entry.true_kind == "explicit_retweet":
                assert tweet.kind == TweetKind.RETWEET and tweet.retweeted_tweet_id == entry.true_source_id
            elif entry.true_kind == "explicit_reply":
                assert tweet.kind == TweetKind.REPLY and tweet.replied_tweet_id == entry.true_source_id
            else:
                assert tweet.kind == TweetKind.ORIGINAL
            assert (entry.true_source_id is None) == (entry.true_kind == "unrelated")

    def test_sources_sit_in_their_windows(self):
        ego, truth = generate(SynthConfig(seed=4, window_size=10, ego_tweet_count=30))
        windows = build_windows(ego, 10)
        for tweet_id, entry in truth.entries.items():
            if entry.true_source_id is not None:
                assert entry.true_source_id in windows[tweet_id].member_ids

    def test_generate_many_steps_seeds(self):
        networks = generate_many(SynthConfig(seed=20, **SMALL), 3)
        assert [truth.seed for _, truth in networks] == [20, 21, 22]
        assert [ego.ego_user_id for ego, _ in networks] == ["ego20", "ego21", "ego22"]

    def test_username_too_long(self):
        with pytest.raises(SynthError, match="longer than 20"):
            generate(SynthConfig(seed=1, username_prefix="a_rather_long_prefix"))

    def test_vocabulary_too_large(self):
        with pytest.raises(SynthError, match="exceeds"):
            generate(SynthConfig(seed=1, vocab_size=100_000))


class TestScoringOutcomes:
    def test_unrelated_scores_zero(self):
        config = SynthConfig(seed=13, behavior_mix={"unrelated": 1.0})
        _, truth, result = scored_run(config)
        assert {e.true_kind for e in truth.entries.values()} == {"unrelated"}
        assert result.unscored == []
        assert all(s.score == 0.0 for s in result.tweets)

    def test_copies_find_their_source(self):
        config = SynthConfig(seed=17, behavior_mix={"implicit_copy": 1.0}, edit_rate=0.0)
        _, truth, result = scored_run(config)
        for s in result.tweets:
            assert s.score == 1.0
            assert s.best_match_id == truth.entries[s.tweet_id].true_source_id

    def test_uniform_sources_reach_weaker_members(self):
        config = SynthConfig(seed=6, behavior_mix={"implicit_copy": 1.0}, edit_rate=0.0, implicit_source="uniform")
        ego, truth, result = scored_run(config)
        windows = build_windows(ego, config.window_size)
        model = fit_tfidf(build_corpus(ego, windows))
        weaker = 0
        for s in result.tweets:
            window = windows[s.tweet_id]
            source = truth.entries[s.tweet_id].true_source_id
            assert source in window.member_ids
            norm = normalization(model, window)
            if model.self_score[source] < norm:
                weaker += 1
            # the copy holds every term of its source
            assert s.score >= model.self_score[source] / norm
        assert weaker > 0

    def test_unknown_source_policy(self):
        assert SynthConfig(seed=1).implicit_source == "strongest"
        with pytest.raises(ValidationError):
            SynthConfig(seed=1, implicit_source="nearest")

    @pytest.mark.parametrize("seed", range(200))
    def test_matches_naive_oracle(self, seed):
        ego, _, result = scored_run(SynthConfig(seed=seed, window_size=8, **SMALL))
        by_id = {s.tweet_id: s for s in result.all_tweets}
        for tweet in ego.ego_tweets:
            expected = brute_force_score(ego, tweet, 8)
            assert by_id[tweet.tweet_id].score == pytest.approx(expected, rel=1e-9)


class TestDetection:
    def test_copies_fully_recalled(self):
        mix = {"implicit_copy": 0.2, "explicit_retweet": 0.2, "explicit_reply": 0.2, "unrelated": 0.4}
        for seed in range(5):
            _, truth, result = scored_run(SynthConfig(seed=seed, behavior_mix=mix, edit_rate=0.0))
            metrics = evaluate_detection(result.all_tweets, truth, 0.384)
            assert metrics.positives == 4
            assert metrics.recall == 1.0
            assert metrics.best_match_accuracy == 1.0
            assert metrics.fp == 0 and metrics.precision == 1.0

    def test_light_edits_mostly_recalled(self):
        mix = {"implicit_edited": 0.5, "unrelated": 0.5}
        scored, entries = [], {}
        for seed in range(10):
            _, truth, result = scored_run(SynthConfig(seed=seed, behavior_mix=mix, edit_rate=0.2))
            scored.extend(result.all_tweets)
            entries.update(truth.entries)
        metrics = evaluate_detection(scored, entries, 0.384)
        assert metrics.positives == 100
        assert metrics.recall >= 0.9
        assert metrics.per_kind_recall["implicit_edited"] == metrics.recall
        assert metrics.per_kind_recall["implicit_copy"] is None

    def test_recall_never_rises_with_edit_rate(self):
        mix = {"implicit_edited": 1.0}
        for seed in range(3):
            recalls = []
            for rate in (0.0, 0.2, 0.4, 0.6, 0.8):
                _, truth, result = scored_run(SynthConfig(seed=seed, behavior_mix=mix, edit_rate=rate))
                recalls.append(evaluate_detection(result.all_tweets, truth, 0.384).recall)
            assert recalls[0] == 1.0
            assert all(a >= b for a, b in zip(recalls, recalls[1:]))

    def test_no_positives(self):
        _, truth, result = scored_run(SynthConfig(seed=21, behavior_mix={"unrelated": 1.0}))
        metrics = evaluate_detection(result.all_tweets, truth, 0.384)
        assert (metrics.positives, metrics.predicted) == (0, 0)
        assert metrics.recall is None and metrics.precision is None
        assert metrics.per_kind_high_rate["unrelated"] == 0.0
        assert set(metrics.per_kind_high_rate) == set(BEHAVIOR_KINDS)
        assert set(metrics.per_kind_recall) == set(IMPLICIT_KINDS)

    def test_counts_by_hand(self):
        truth = {
            "a": TruthEntry(true_kind="implicit_copy", true_source_id="s1"),
            "b": TruthEntry(true_kind="implicit_edited", true_source_id="s2"),
            "c": TruthEntry(true_kind="unrelated"),
            "d": TruthEntry(true_kind="explicit_reply", true_source_id="s3"),
        }
        scored = [
            ScoredTweet(tweet_id="a", category=Category.NON_TAGGED, score=0.9, best_match_id="s1"),
            ScoredTweet(tweet_id="b", category=Category.NON_TAGGED, score=0.2, best_match_id="s9"),
            ScoredTweet(tweet_id="c", category=Category.NON_TAGGED, score=0.5, best_match_id="s4"),
            ScoredTweet(tweet_id="d", category=Category.REPLY, score=0.7, best_match_id="s3"),
        ]
        m = evaluate_detection(scored, GroundTruth(ego_user_id="e", seed=0, entries=truth), 0.384)
        assert (m.positives, m.predicted, m.tp, m.fp, m.fn) == (2, 2, 1, 1, 1)
        assert (m.precision, m.recall, m.best_match_accuracy) == (0.5, 0.5, 0.5)
        assert m.per_kind_high_rate["explicit_reply"] == 1.0


def test_oracle_rejects_foreign_tweets():
    ego, _ = generate(SynthConfig(seed=1, **SMALL))
    followee_tweet = next(iter(ego.followees.values())).tweets[0]
    with pytest.raises(KeyError):
        brute_force_score(ego, followee_tweet, 100)
