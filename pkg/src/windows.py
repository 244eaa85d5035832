"""
Influence windows: the n most recent followee tweets before each ego tweet.
"""
import bisect
from datetime import datetime
from typing import Optional
import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict
from .models import EgoNetwork, Tweet, TweetKind, format_timestamp


class Window(BaseModel):
    model_config = ConfigDict(frozen=True)

    target_tweet_id: str
    member_ids: tuple[str, ...] = ()  # newest first
    start_time: Optional[datetime] = None
    end_time: Optional[datetime] = None

    def __len__(self) -> int:
        return len(self.member_ids)


class WindowStats(BaseModel):
    count: int
    mean_length_hours: Optional[float]
    std_length_hours: Optional[float]
    min_length_hours: Optional[float]
    cdf_points: list[tuple[float, float]]


class Timeline:
    """
    Followee tweets of one network merged into a single (created_at, tweet_id)
    ordered feed. Ego-authored tweets are excluded, repeated ids keep the first.
    """

    def __init__(self, ego: EgoNetwork):
        self.ego = ego
        seen: set[str] = set()
        tweets: list[Tweet] = []
        for followee_id in sorted(ego.followees):
            if followee_id == ego.ego_user_id:
                continue
            for tweet in ego.followees[followee_id].tweets:
                if tweet.author_id == ego.ego_user_id or tweet.tweet_id in seen:
                    continue
                seen.add(tweet.tweet_id)
                tweets.append(tweet)
        tweets.sort(key=lambda t: t.sort_key)
        self.tweets = tweets
        self._keys = [t.sort_key for t in tweets]

    def __len__(self) -> int:
        return len(self.tweets)

    def window_for(self, tweet: Tweet, n: int) -> Window:
        if n < 1:
            raise ValueError(f"window size must be >= 1, got {n}")
        cut = bisect.bisect_left(self._keys, tweet.sort_key)
        members = self.tweets[max(0, cut - n):cut][::-1]
        if not members:
            return Window(target_tweet_id=tweet.tweet_id)
        return Window(
            target_tweet_id=tweet.tweet_id,
            member_ids=tuple(t.tweet_id for t in members),
            start_time=members[-1].created_at,
            end_time=members[0].created_at,
        )


def build_window(ego: EgoNetwork, tweet: Tweet, n: int, timeline: Optional[Timeline] = None) -> Window:
    if tweet.tweet_id not in ego.ego_tweet_ids:
        raise KeyError(f"tweet {tweet.tweet_id} is not an ego tweet of {ego.ego_user_id}")
    if timeline is None:
        timeline = Timeline(ego)
    return timeline.window_for(tweet, n)


def build_windows(ego: EgoNetwork, n: int) -> dict[str, Window]:
    """Windows for every ego tweet, keyed by tweet id, in ego-tweet order."""
    timeline = Timeline(ego)
    windows = {t.tweet_id: timeline.window_for(t, n) for t in ego.ego_tweets}
    empty = sum(1 for w in windows.values() if not w.member_ids)
    if empty:
        logger.debug(f"Ego {ego.ego_user_id}: {empty}/{len(windows)} tweets have an empty window")
    return windows


def window_time_length(w: Window) -> float:
    """Span of the window in fractional hours (0 for fewer than two members)."""
    if len(w.member_ids) < 2:
        return 0.0
    return (w.end_time - w.start_time).total_seconds() / 3600.0


def window_statistics(lengths_hours: list[float]) -> WindowStats:
    if not lengths_hours:
        return WindowStats(count=0, mean_length_hours=None, std_length_hours=None, min_length_hours=None, cdf_points=[])
    values = np.asarray(lengths_hours, dtype=np.float64)
    std = float(np.std(values, ddof=1)) if len(values) > 1 else None
    return WindowStats(
        count=len(values),
        mean_length_hours=float(np.mean(values)),
        std_length_hours=std,
        min_length_hours=float(np.min(values)),
        cdf_points=cdf_points(values),
    )


def cdf_points(values) -> list[tuple[float, float]]:
    """Empirical CDF at each distinct value: (value, fraction <= value)."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    if len(values) == 0:
        return []
    distinct, counts = np.unique(values, return_counts=True)
    cumulative = np.cumsum(counts) / len(values)
    return [(float(v), float(c)) for v, c in zip(distinct, cumulative)]


def replies_in_window(ego: EgoNetwork, windows: dict[str, Window]) -> tuple[int, Optional[float]]:
    """(tagged replies whose target sits in their own window, that count / all tagged replies)."""
    replies = [t for t in ego.ego_tweets if t.kind == TweetKind.REPLY]
    if not replies:
        return 0, None
    count = 0
    for tweet in replies:
        window = windows.get(tweet.tweet_id)
        if window is not None and tweet.replied_tweet_id in window.member_ids:
            count += 1
    return count, count / len(replies)


def windows_to_rows(ego: EgoNetwork, windows: dict[str, Window]) -> list[dict]:
    """Debug dump rows: target_tweet_id, member_rank (1 = newest), member_tweet_id, member_created_at."""
    rows = []
    for target_id, window in windows.items():
        for rank, member_id in enumerate(window.member_ids, start=1):
            rows.append({
                "target_tweet_id": target_id,
                "member_rank": rank,
                "member_tweet_id": member_id,
                "member_created_at": format_timestamp(ego.tweet_index[member_id].created_at),
            })
    return rows
