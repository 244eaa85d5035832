"""
Aggregate statistics over scored networks: per-category score distributions,
high-scored counts, per-user response profiles and their 2-D distribution.
"""
from typing import Iterable, Mapping, Optional
import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, model_validator
from .config import DEFAULT_HIGH_SCORE_THRESHOLD, DEFAULT_HISTOGRAM_BINS
from .models import CATEGORY_ORDER, Category
from .pipeline import NetworkResult
from .scoring import ScoredTweet
from .windows import cdf_points, window_statistics

SCORE_THRESHOLD_SWEEP = tuple(round(0.1 * k, 1) for k in range(1, 10))
HIGH_NONTAGGED_PCT_CUTOFF = 10.0


class CategoryStats(BaseModel):
    category: Category
    count: int  # scored tweets
    high_scored_count: int
    mean: Optional[float]
    median: Optional[float]
    std: Optional[float]
    histogram: list[tuple[float, float, int]]


class UserResponseProfile(BaseModel):
    user_id: str
    total_messages: int = Field(ge=1)
    tagged: int
    high_nontagged: int
    tagged_pct: float = Field(ge=0.0, le=100.0)
    high_nontagged_pct: float = Field(ge=0.0, le=100.0)

    @property
    def above_diagonal(self) -> bool:
        return self.high_nontagged_pct > self.tagged_pct

    @property
    def at_origin(self) -> bool:
        return self.tagged == 0 and self.high_nontagged == 0


class GridSpec(BaseModel):
    """Hybrid axis: `linear_bins` uniform cells on [0,1], `log_bins` log cells on (1,100]."""
    linear_bins: int = Field(1, ge=1)
    log_bins: int = Field(10, ge=1)

    @property
    def n_cells(self) -> int:
        return self.linear_bins + self.log_bins

    def edges(self) -> list[float]:
        linear = np.linspace(0.0, 1.0, self.linear_bins + 1)
        log = np.logspace(0.0, 2.0, self.log_bins + 1)[1:]
        return [float(e) for e in np.concatenate([linear, log])]

    def cell(self, pct: float) -> int:
        if pct <= 1.0:
            # [e_k, e_k+1), the last linear cell closed at 1
            k = int(np.searchsorted(np.linspace(0.0, 1.0, self.linear_bins + 1), pct, side="right")) - 1
            return min(max(k, 0), self.linear_bins - 1)
        # (e_k, e_k+1]
        k = int(np.searchsorted(np.logspace(0.0, 2.0, self.log_bins + 1), pct, side="left")) - 1
        return self.linear_bins + min(max(k, 0), self.log_bins - 1)


class ProfileDistributions(BaseModel):
    edges: list[float]
    grid: list[list[int]]  # grid[i][j]: i = tagged_pct cell, j = high_nontagged_pct cell
    cdf: list[tuple[float, float]]  # (high_nontagged_pct, fraction of users <= it)
    users: int
    users_at_origin: int
    users_above_diagonal: int
    users_with_high_nontagged: int
    fraction_zero_high: float
    fraction_at_least_10pct: float


class HighScoredSummary(BaseModel):
    threshold: float
    high: dict[Category, int]
    total: dict[Category, int]  # all authored tweets, scored or not
    non_tagged_pct_of_tagged: Optional[float]  # high NonTagged as % of all tagged tweets
    low_retweet_pct: Optional[float]  # scored retweets below the threshold


class DatasetSummary(BaseModel):
    ego_users: int
    tweets: int
    tweets_per_user_mean: Optional[float]
    tweets_per_user_min: Optional[int]
    tweets_per_user_max: Optional[int]
    non_tagged: int
    replies: int
    retweets: int
    replies_in_windows: int
    replies_in_windows_fraction: Optional[float]
    scored_tweets: int
    unscored_tweets: int
    window_mean_hours: Optional[float]
    window_std_hours: Optional[float]
    window_min_hours: Optional[float]
    window_cdf: list[tuple[float, float]]

    @model_validator(mode="after")
    def _counts_add_up(self):
        if self.non_tagged + self.replies + self.retweets != self.tweets:
            raise ValueError("category counts do not sum to the tweet count")
        if self.scored_tweets + self.unscored_tweets != self.tweets:
            raise ValueError("scored + unscored tweets do not sum to the tweet count")
        return self


class Report(BaseModel):
    dataset: DatasetSummary
    categories: list[CategoryStats]
    high_scored: HighScoredSummary
    profiles: list[UserResponseProfile]
    distributions: Optional[ProfileDistributions]
    threshold_sweep: dict[float, dict[Category, int]]


def _scored_only(scored: Iterable[ScoredTweet]) -> list[ScoredTweet]:
    return [s for s in scored if s.score is not None]


def is_high(s: ScoredTweet, threshold: float) -> bool:
    return s.score is not None and s.score >= threshold


def classify(scored: Iterable[ScoredTweet], threshold: float) -> dict[tuple[Category, bool], list[ScoredTweet]]:
    """
    Partition scored tweets into (category, high) cells, high iff score >= threshold.
    All six cells are present. Unscored tweets are left out.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0,1], got {threshold}")
    cells: dict[tuple[Category, bool], list[ScoredTweet]] = {
        (category, high): [] for category in CATEGORY_ORDER for high in (True, False)
    }
    for s in _scored_only(scored):
        cells[(s.category, s.score >= threshold)].append(s)
    return cells


def _category_stats(category: Category, scores: np.ndarray, high: int, bins: int) -> CategoryStats:
    counts, edges = np.histogram(scores, bins=bins, range=(0.0, 1.0))
    histogram = [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bins)]
    if len(scores) == 0:
        return CategoryStats(
            category=category, count=0, high_scored_count=0, mean=None, median=None, std=None, histogram=histogram
        )
    return CategoryStats(
        category=category,
        count=len(scores),
        high_scored_count=high,
        mean=float(np.mean(scores)),
        median=float(np.median(scores)),
        std=float(np.std(scores, ddof=1)) if len(scores) > 1 else None,
        histogram=histogram,
    )


def category_statistics(
    scored: Iterable[ScoredTweet],
    threshold: float = DEFAULT_HIGH_SCORE_THRESHOLD,
    bins: int = DEFAULT_HISTOGRAM_BINS,
) -> list[CategoryStats]:
    """Mean, median, sample std and histogram per category, ordered NonTagged, Reply, Retweet."""
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    cells = classify(scored, threshold)
    if not any(cells.values()):
        raise ValueError("no scored tweets")
    stats = []
    for category in CATEGORY_ORDER:
        members = cells[(category, True)] + cells[(category, False)]
        scores = np.asarray([s.score for s in members], dtype=np.float64)
        stats.append(_category_stats(category, scores, len(cells[(category, True)]), bins))
    return stats


def _profile(user_id: str, tweets: list[ScoredTweet], threshold: float) -> UserResponseProfile:
    total = len(tweets)
    tagged = sum(1 for s in tweets if s.category != Category.NON_TAGGED)
    high = sum(1 for s in tweets if s.category == Category.NON_TAGGED and is_high(s, threshold))
    return UserResponseProfile(
        user_id=user_id,
        total_messages=total,
        tagged=tagged,
        high_nontagged=high,
        tagged_pct=100.0 * tagged / total,
        high_nontagged_pct=100.0 * high / total,
    )


def user_profiles(
    per_user: Mapping[str, list[ScoredTweet]], threshold: float = DEFAULT_HIGH_SCORE_THRESHOLD
) -> list[UserResponseProfile]:
    """
    p_T and p_N per user over every authored tweet. Unscored tweets only
    count in the denominator. Users without tweets are left out.
    """
    profiles = []
    for user_id, tweets in per_user.items():
        if not tweets:
            logger.debug(f"User {user_id} has no tweets; no profile.")
            continue
        profiles.append(_profile(user_id, tweets, threshold))
    return profiles


def profile_distributions(profiles: list[UserResponseProfile], grid: Optional[GridSpec] = None) -> ProfileDistributions:
    if not profiles:
        raise ValueError("no profiles")
    if grid is None:
        grid = GridSpec()

    cells = np.zeros((grid.n_cells, grid.n_cells), dtype=np.int64)
    for p in profiles:
        cells[grid.cell(p.tagged_pct), grid.cell(p.high_nontagged_pct)] += 1

    n = len(profiles)
    p_n = [p.high_nontagged_pct for p in profiles]
    with_high = sum(1 for v in p_n if v > 0)
    return ProfileDistributions(
        edges=grid.edges(),
        grid=cells.tolist(),
        cdf=cdf_points(p_n),
        users=n,
        users_at_origin=sum(1 for p in profiles if p.at_origin),
        users_above_diagonal=sum(1 for p in profiles if p.above_diagonal),
        users_with_high_nontagged=with_high,
        fraction_zero_high=(n - with_high) / n,
        fraction_at_least_10pct=sum(1 for v in p_n if v >= HIGH_NONTAGGED_PCT_CUTOFF) / n,
    )


def threshold_sweep(
    scored: Iterable[ScoredTweet], thresholds: Iterable[float] = SCORE_THRESHOLD_SWEEP
) -> dict[float, dict[Category, int]]:
    """High-scored count per category at each threshold."""
    scored = _scored_only(scored)
    sweep = {}
    for t in thresholds:
        cells = classify(scored, t)
        sweep[t] = {c: len(cells[(c, True)]) for c in CATEGORY_ORDER}
    return sweep


def high_scored_summary(tweets: list[ScoredTweet], threshold: float) -> HighScoredSummary:
    cells = classify(tweets, threshold)
    high = {c: len(cells[(c, True)]) for c in CATEGORY_ORDER}
    total = {c: sum(1 for s in tweets if s.category == c) for c in CATEGORY_ORDER}
    tagged_total = total[Category.REPLY] + total[Category.RETWEET]
    scored_retweets = len(cells[(Category.RETWEET, True)]) + len(cells[(Category.RETWEET, False)])
    return HighScoredSummary(
        threshold=threshold,
        high=high,
        total=total,
        non_tagged_pct_of_tagged=100.0 * high[Category.NON_TAGGED] / tagged_total if tagged_total else None,
        low_retweet_pct=100.0 * len(cells[(Category.RETWEET, False)]) / scored_retweets if scored_retweets else None,
    )


def dataset_summary(results: list[NetworkResult]) -> DatasetSummary:
    per_user = [len(r.all_tweets) for r in results]
    replies = sum(r.replies for r in results)
    in_windows = sum(r.replies_in_windows for r in results)
    stats = window_statistics([h for r in results for h in r.window_hours.values()])
    return DatasetSummary(
        ego_users=len(results),
        tweets=sum(per_user),
        tweets_per_user_mean=float(np.mean(per_user)) if per_user else None,
        tweets_per_user_min=min(per_user) if per_user else None,
        tweets_per_user_max=max(per_user) if per_user else None,
        non_tagged=sum(r.non_tagged for r in results),
        replies=replies,
        retweets=sum(r.retweets for r in results),
        replies_in_windows=in_windows,
        replies_in_windows_fraction=in_windows / replies if replies else None,
        scored_tweets=sum(len(r.tweets) for r in results),
        unscored_tweets=sum(len(r.unscored) for r in results),
        window_mean_hours=stats.mean_length_hours,
        window_std_hours=stats.std_length_hours,
        window_min_hours=stats.min_length_hours,
        window_cdf=stats.cdf_points,
    )


def build_report(
    results: list[NetworkResult],
    threshold: float = DEFAULT_HIGH_SCORE_THRESHOLD,
    bins: int = DEFAULT_HISTOGRAM_BINS,
    grid: Optional[GridSpec] = None,
    sweep: Iterable[float] = SCORE_THRESHOLD_SWEEP,
) -> Report:
    """
    Reduce network results into one report. Results are ordered by ego id
    first, so the report does not depend on input order.
    """
    if not results:
        raise ValueError("no network results to report on")
    results = sorted(results, key=lambda r: r.ego_user_id)

    per_user: dict[str, list[ScoredTweet]] = {}
    for r in results:
        per_user.setdefault(r.ego_user_id, []).extend(r.all_tweets)
    all_tweets = [s for tweets in per_user.values() for s in tweets]

    profiles = user_profiles(per_user, threshold)
    report = Report(
        dataset=dataset_summary(results),
        categories=category_statistics(all_tweets, threshold, bins),
        high_scored=high_scored_summary(all_tweets, threshold),
        profiles=profiles,
        distributions=profile_distributions(profiles, grid) if profiles else None,
        threshold_sweep=threshold_sweep(all_tweets, sweep),
    )
    logger.info(
        f"Report: {report.dataset.ego_users} users, {report.dataset.scored_tweets} scored tweets, "
        f"{report.high_scored.high[Category.NON_TAGGED]} high-scored non-tagged"
    )
    return report
