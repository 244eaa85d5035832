from datetime import datetime, timezone
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Optional
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class DatasetParseError(ValueError):
    """Malformed ego-network file. Carries the file and 1-based line number."""

    def __init__(self, message: str, path: Optional[Path] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class EmptyWindowError(ValueError):
    pass


class EmptyCorpusError(ValueError):
    pass


class SynthError(ValueError):
    pass


class TweetKind(str, Enum):
    ORIGINAL = "original"
    RETWEET = "retweet"
    REPLY = "reply"


class Category(str, Enum):
    REPLY = "Reply"
    RETWEET = "Retweet"
    NON_TAGGED = "NonTagged"


CATEGORY_ORDER = (Category.NON_TAGGED, Category.REPLY, Category.RETWEET)


def to_utc_ms(value: datetime) -> datetime:
    """Normalize to an aware UTC datetime with millisecond precision."""
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    value = value.astimezone(timezone.utc)
    return value.replace(microsecond=(value.microsecond // 1000) * 1000)


def format_timestamp(value: datetime) -> str:
    value = to_utc_ms(value)
    return value.strftime("%Y-%m-%dT%H:%M:%S.") + f"{value.microsecond // 1000:03d}Z"


class Tweet(BaseModel):
    model_config = ConfigDict(frozen=True)

    tweet_id: str = Field(min_length=1)
    author_id: str = Field(min_length=1)
    author_username: str
    created_at: datetime
    text: str
    kind: TweetKind = TweetKind.ORIGINAL
    replied_tweet_id: Optional[str] = None
    retweeted_tweet_id: Optional[str] = None

    @field_validator("created_at")
    @classmethod
    def _utc_ms(cls, value: datetime) -> datetime:
        return to_utc_ms(value)

    @model_validator(mode="after")
    def _tags_match_kind(self):
        if self.kind == TweetKind.REPLY and not self.replied_tweet_id:
            raise ValueError("missing replied_tweet_id")
        if self.kind == TweetKind.RETWEET and not self.retweeted_tweet_id:
            raise ValueError("missing retweeted_tweet_id")
        if self.kind != TweetKind.REPLY and self.replied_tweet_id:
            raise ValueError(f"replied_tweet_id set on a {self.kind.value} tweet")
        if self.kind != TweetKind.RETWEET and self.retweeted_tweet_id:
            raise ValueError(f"retweeted_tweet_id set on a {self.kind.value} tweet")
        return self

    @property
    def sort_key(self) -> tuple[datetime, str]:
        return (self.created_at, self.tweet_id)

    @property
    def category(self) -> Category:
        if self.kind == TweetKind.REPLY:
            return Category.REPLY
        if self.kind == TweetKind.RETWEET:
            return Category.RETWEET
        return Category.NON_TAGGED

    @property
    def is_tagged(self) -> bool:
        return self.kind != TweetKind.ORIGINAL


def _check_strict_order(tweets: tuple[Tweet, ...], what: str):
    for prev, cur in zip(tweets, tweets[1:]):
        if not prev.sort_key < cur.sort_key:
            raise ValueError(f"{what} not strictly ordered at tweet {cur.tweet_id}")


class FolloweeRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    followee_id: str = Field(min_length=1)
    username: str
    tweets: tuple[Tweet, ...] = ()
    # None only for a declared followee with no observed tweets
    first_seen: Optional[datetime] = None
    last_seen: Optional[datetime] = None

    @field_validator("first_seen", "last_seen")
    @classmethod
    def _utc_ms(cls, value: Optional[datetime]) -> Optional[datetime]:
        return to_utc_ms(value) if value is not None else None

    @model_validator(mode="after")
    def _span_covers_tweets(self):
        _check_strict_order(self.tweets, f"followee {self.followee_id} tweets")
        if (self.first_seen is None) != (self.last_seen is None):
            raise ValueError(f"followee {self.followee_id}: first_seen and last_seen must be set together")
        if self.first_seen is None:
            if self.tweets:
                raise ValueError(f"followee {self.followee_id}: activity span missing")
            return self
        if self.first_seen > self.last_seen:
            raise ValueError(f"followee {self.followee_id}: first_seen after last_seen")
        if self.tweets and (self.tweets[0].created_at < self.first_seen or self.tweets[-1].created_at > self.last_seen):
            raise ValueError(f"followee {self.followee_id}: tweets outside [first_seen, last_seen]")
        return self


class EgoNetwork(BaseModel):
    """
    One ego user plus the message history of everyone they follow.
    Immutable once built; share it read-only.
    """
    model_config = ConfigDict(frozen=True)

    ego_user_id: str = Field(min_length=1)
    ego_username: str
    ego_tweets: tuple[Tweet, ...] = Field(min_length=1)
    followees: dict[str, FolloweeRecord] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _ordered(self):
        _check_strict_order(self.ego_tweets, "ego tweets")
        return self

    @cached_property
    def tweet_index(self) -> dict[str, Tweet]:
        """Every tweet in the network by id (ego tweets win on id clashes)."""
        index: dict[str, Tweet] = {}
        for record in self.followees.values():
            for tweet in record.tweets:
                index.setdefault(tweet.tweet_id, tweet)
        for tweet in self.ego_tweets:
            index[tweet.tweet_id] = tweet
        return index

    @cached_property
    def ego_tweet_ids(self) -> frozenset[str]:
        return frozenset(t.tweet_id for t in self.ego_tweets)

    @property
    def activity_period(self) -> tuple[datetime, datetime]:
        return (self.ego_tweets[0].created_at, self.ego_tweets[-1].created_at)

    @property
    def followee_tweet_count(self) -> int:
        return sum(len(r.tweets) for r in self.followees.values())
