from conftest import ego_tweet, make_network, make_tweet
from src.config import DatasetConfig
from src.pipeline import NetworkScorer, score_network, score_networks
from src.synth import generate
from src.config import SynthConfig


def test_fixture_counts(fixture_network, fixture_manifest):
    result = score_network(fixture_network, DatasetConfig())
    assert result.ego_user_id == "42"
    assert result.corpus_size == fixture_manifest["corpus_size"]
    assert len(result.tweets) == fixture_manifest["scored_tweets"]
    assert [s.tweet_id for s in result.unscored] == ["200"]
    assert (result.replies, result.retweets, result.non_tagged) == (
        fixture_manifest["replies"], fixture_manifest["retweets"], fixture_manifest["non_tagged"]
    )
    assert result.replies_in_windows == fixture_manifest["replies_in_windows"]
    assert set(result.window_hours) == {s.tweet_id for s in result.tweets}
    assert result.window_rows is None
    assert len(result.all_tweets) == fixture_manifest["ego_tweets"]


def test_window_rows_on_request(fixture_network):
    result = NetworkScorer(DatasetConfig(window_size=2), dump_windows=True).run(fixture_network)
    assert len(result.window_rows) == 2 * len(result.tweets)


def test_empty_corpus_network_excluded(fixture_network):
    lonely = make_network([ego_tweet("e1", 0)], [make_tweet("f1", "f", 10)], ego_user_id="lonely")
    results, excluded = score_networks([lonely, fixture_network], DatasetConfig())
    assert [r.ego_user_id for r in results] == ["42"]
    assert excluded[0]["id"] == "lonely"
    assert "empty corpus" in excluded[0]["reason"]


def test_parallel_matches_sequential(fixture_network):
    networks = [fixture_network] + [generate(SynthConfig(seed=s, num_followees=3, tweets_per_followee=15))[0] for s in (1, 2)]
    sequential, _ = score_networks(networks, DatasetConfig(), parallelism=1)
    parallel, _ = score_networks(networks, DatasetConfig(), parallelism=2)
    assert [r.model_dump() for r in parallel] == [r.model_dump() for r in sequential]
