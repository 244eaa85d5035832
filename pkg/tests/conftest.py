import json
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Optional
import pytest
from src.dataset import read_ego_network
from src.models import EgoNetwork, FolloweeRecord, Tweet, TweetKind

FIXTURES = Path(__file__).parent / "fixtures"
BASE = datetime(2012, 12, 1, tzinfo=timezone.utc)


def at(minutes: float) -> datetime:
    return BASE + timedelta(minutes=minutes)


def make_tweet(
    tweet_id: str,
    author_id: str,
    minutes: float,
    text: str = "",
    username: Optional[str] = None,
    kind: TweetKind = TweetKind.ORIGINAL,
    replied: Optional[str] = None,
    retweeted: Optional[str] = None,
) -> Tweet:
    return Tweet(
        tweet_id=tweet_id,
        author_id=author_id,
        author_username=username if username is not None else f"user{author_id}",
        created_at=at(minutes),
        text=text,
        kind=kind,
        replied_tweet_id=replied,
        retweeted_tweet_id=retweeted,
    )


def make_network(
    ego_tweets: list[Tweet],
    followee_tweets: list[Tweet],
    ego_user_id: str = "ego",
    ego_username: str = "ego",
    spans: Optional[dict[str, tuple[datetime, datetime]]] = None,
) -> EgoNetwork:
    """Group followee tweets by author; spans default to each followee's first/last tweet."""
    spans = spans or {}
    by_author: dict[str, list[Tweet]] = {}
    for t in followee_tweets:
        by_author.setdefault(t.author_id, []).append(t)
    for followee_id in spans:
        by_author.setdefault(followee_id, [])

    followees = {}
    for followee_id, tweets in sorted(by_author.items()):
        tweets = sorted(tweets, key=lambda t: t.sort_key)
        first, last = spans.get(followee_id, (None, None))
        if first is None and tweets:
            first, last = tweets[0].created_at, tweets[-1].created_at
        followees[followee_id] = FolloweeRecord(
            followee_id=followee_id,
            username=tweets[0].author_username if tweets else f"user{followee_id}",
            tweets=tuple(tweets),
            first_seen=first,
            last_seen=last,
        )
    return EgoNetwork(
        ego_user_id=ego_user_id,
        ego_username=ego_username,
        ego_tweets=tuple(sorted(ego_tweets, key=lambda t: t.sort_key)),
        followees=followees,
    )


def ego_tweet(tweet_id: str, minutes: float, text: str = "", **kwargs) -> Tweet:
    return make_tweet(tweet_id, "ego", minutes, text, username="ego", **kwargs)


@pytest.fixture
def fixture_path() -> Path:
    return FIXTURES / "three_followees.jsonl"


@pytest.fixture
def fixture_manifest() -> dict:
    with open(FIXTURES / "three_followees.manifest.json", "r", encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture
def fixture_network(fixture_path) -> EgoNetwork:
    return read_ego_network(fixture_path)
