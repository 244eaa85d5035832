from datetime import datetime, timezone
import pytest
from pydantic import ValidationError
from conftest import at, make_network, make_tweet
from src.models import (
    Category,
    DatasetParseError,
    EgoNetwork,
    FolloweeRecord,
    TweetKind,
    format_timestamp,
    to_utc_ms,
)


class TestTweet:
    def test_reply_needs_replied_id(self):
        with pytest.raises(ValidationError, match="missing replied_tweet_id"):
            make_tweet("1", "a", 0, kind=TweetKind.REPLY)

    def test_retweet_needs_retweeted_id(self):
        with pytest.raises(ValidationError, match="missing retweeted_tweet_id"):
            make_tweet("1", "a", 0, kind=TweetKind.RETWEET)

    def test_original_rejects_tags(self):
        with pytest.raises(ValidationError, match="replied_tweet_id set on a original"):
            make_tweet("1", "a", 0, replied="9")

    def test_categories(self):
        assert make_tweet("1", "a", 0).category == Category.NON_TAGGED
        assert make_tweet("1", "a", 0, kind=TweetKind.REPLY, replied="2").category == Category.REPLY
        assert make_tweet("1", "a", 0, kind=TweetKind.RETWEET, retweeted="2").category == Category.RETWEET
        assert not make_tweet("1", "a", 0).is_tagged

    def test_timestamps_truncated_to_ms_utc(self):
        t = make_tweet("1", "a", 0)
        value = to_utc_ms(datetime(2012, 12, 1, 10, 0, 0, 123456))
        assert value == datetime(2012, 12, 1, 10, 0, 0, 123000, tzinfo=timezone.utc)
        assert format_timestamp(value) == "2012-12-01T10:00:00.123Z"
        assert t.created_at.tzinfo is not None


class TestFolloweeRecord:
    def test_span_must_cover_tweets(self):
        tweets = (make_tweet("1", "f", 10),)
        with pytest.raises(ValidationError, match="outside"):
            FolloweeRecord(followee_id="f", username="f", tweets=tweets, first_seen=at(20), last_seen=at(30))

    def test_first_after_last_rejected(self):
        with pytest.raises(ValidationError, match="first_seen after last_seen"):
            FolloweeRecord(followee_id="f", username="f", first_seen=at(30), last_seen=at(20))

    def test_tweets_strictly_ordered(self):
        tweets = (make_tweet("2", "f", 10), make_tweet("1", "f", 10))
        with pytest.raises(ValidationError, match="not strictly ordered"):
            FolloweeRecord(followee_id="f", username="f", tweets=tweets, first_seen=at(10), last_seen=at(10))

    def test_declared_without_tweets(self):
        record = FolloweeRecord(followee_id="f", username="f")
        assert record.first_seen is None and record.tweets == ()


class TestEgoNetwork:
    def test_needs_an_ego_tweet(self):
        with pytest.raises(ValidationError):
            EgoNetwork(ego_user_id="e", ego_username="e", ego_tweets=())

    def test_ego_tweets_strictly_ordered(self):
        tweets = (make_tweet("b", "e", 5), make_tweet("a", "e", 5))
        with pytest.raises(ValidationError, match="ego tweets not strictly ordered"):
            EgoNetwork(ego_user_id="e", ego_username="e", ego_tweets=tweets)

    def test_same_time_ordered_by_id(self):
        ego = make_network([make_tweet("a", "ego", 5), make_tweet("b", "ego", 5)], [])
        assert [t.tweet_id for t in ego.ego_tweets] == ["a", "b"]

    def test_index_and_period(self):
        ego = make_network(
            [make_tweet("e1", "ego", 5), make_tweet("e2", "ego", 50)],
            [make_tweet("f1", "f", 1), make_tweet("f2", "g", 2)],
        )
        assert set(ego.tweet_index) == {"e1", "e2", "f1", "f2"}
        assert ego.ego_tweet_ids == frozenset({"e1", "e2"})
        assert ego.activity_period == (at(5), at(50))
        assert ego.followee_tweet_count == 2


def test_parse_error_carries_location(tmp_path):
    err = DatasetParseError("bad record", tmp_path / "x.jsonl", 7)
    assert err.line == 7
    assert str(err).endswith("x.jsonl:7: bad record")
    assert str(DatasetParseError("oops", line=3)) == "line 3: oops"
