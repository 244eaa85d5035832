import json
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, Optional
from loguru import logger
from pydantic import BaseModel, ValidationError
from .config import DatasetConfig, MISSING_THRESHOLD_SWEEP
from .models import (
    DatasetParseError,
    EgoNetwork,
    FolloweeRecord,
    Tweet,
    format_timestamp,
    to_utc_ms,
)

SCHEMA_VERSION = "1"


def _validation_message(exc: ValidationError) -> str:
    return "; ".join(err["msg"] for err in exc.errors())


def _parse_timestamp(value: Any, what: str, path: Optional[Path], line: Optional[int]) -> datetime:
    try:
        return to_utc_ms(datetime.fromisoformat(str(value).replace("Z", "+00:00")))
    except ValueError as e:
        raise DatasetParseError(f"bad {what} timestamp {value!r}: {e}", path, line) from e


def parse_ego_network(lines: Iterable[str], path: Optional[Path] = None) -> EgoNetwork:
    """
    Parse one ego network from JSON Lines.
    First non-blank line is the header, every other line a tweet record.
    Ordering is re-established here, so record order in the file does not matter.
    """
    header: Optional[dict] = None
    header_line = 0
    ego_tweets: list[Tweet] = []
    by_author: dict[str, list[Tweet]] = {}
    seen_ids: dict[str, int] = {}

    for line_no, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as e:
            raise DatasetParseError(f"malformed JSON: {e.msg}", path, line_no) from e
        if not isinstance(record, dict):
            raise DatasetParseError("record is not a JSON object", path, line_no)

        if header is None:
            for key in ("ego_user_id", "ego_username", "schema_version"):
                if key not in record:
                    raise DatasetParseError(f"header missing {key!r}", path, line_no)
            if str(record["schema_version"]) != SCHEMA_VERSION:
                raise DatasetParseError(f"unsupported schema_version {record['schema_version']!r}", path, line_no)
            header = record
            header_line = line_no
            continue

        is_ego = record.get("is_ego")
        if not isinstance(is_ego, bool):
            raise DatasetParseError("'is_ego' must be a boolean", path, line_no)
        fields = {k: v for k, v in record.items() if k != "is_ego"}
        try:
            tweet = Tweet.model_validate(fields)
        except ValidationError as e:
            raise DatasetParseError(_validation_message(e), path, line_no) from e

        if tweet.tweet_id in seen_ids:
            raise DatasetParseError(
                f"duplicate tweet_id {tweet.tweet_id!r} (first seen on line {seen_ids[tweet.tweet_id]})", path, line_no
            )
        seen_ids[tweet.tweet_id] = line_no

        if is_ego:
            if tweet.author_id != str(header["ego_user_id"]):
                raise DatasetParseError(
                    f"ego tweet {tweet.tweet_id!r} authored by {tweet.author_id!r}, not the ego user", path, line_no
                )
            ego_tweets.append(tweet)
        else:
            by_author.setdefault(tweet.author_id, []).append(tweet)

    if header is None:
        raise DatasetParseError("empty file: no header record", path)
    if not ego_tweets:
        raise DatasetParseError("no ego tweets", path)

    declared: dict[str, dict] = {}
    for entry in header.get("followees") or []:
        if not isinstance(entry, dict) or "followee_id" not in entry:
            raise DatasetParseError("header followee entries need a 'followee_id'", path, header_line)
        declared[str(entry["followee_id"])] = entry

    followees: dict[str, FolloweeRecord] = {}
    for followee_id in sorted(set(by_author) | set(declared)):
        tweets = sorted(by_author.get(followee_id, []), key=lambda t: t.sort_key)
        entry = declared.get(followee_id, {})
        username = entry.get("username") or (tweets[0].author_username if tweets else followee_id)
        first_seen = last_seen = None
        if tweets:
            first_seen, last_seen = tweets[0].created_at, tweets[-1].created_at
        if entry.get("first_seen") is not None:
            first_seen = _parse_timestamp(entry["first_seen"], "first_seen", path, header_line)
        if entry.get("last_seen") is not None:
            last_seen = _parse_timestamp(entry["last_seen"], "last_seen", path, header_line)
        try:
            followees[followee_id] = FolloweeRecord(
                followee_id=followee_id,
                username=username,
                tweets=tuple(tweets),
                first_seen=first_seen,
                last_seen=last_seen,
            )
        except ValidationError as e:
            raise DatasetParseError(_validation_message(e), path, header_line) from e

    try:
        return EgoNetwork(
            ego_user_id=str(header["ego_user_id"]),
            ego_username=str(header["ego_username"]),
            ego_tweets=tuple(sorted(ego_tweets, key=lambda t: t.sort_key)),
            followees=followees,
        )
    except ValidationError as e:
        raise DatasetParseError(_validation_message(e), path) from e


def read_ego_network(path: Path) -> EgoNetwork:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        return parse_ego_network(f, path=path)


def expand_input_paths(paths: Iterable[Path], pattern: str = "*.jsonl") -> list[Path]:
    """Directories expand to their matching files (sorted); files pass through."""
    files: list[Path] = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files.extend(sorted(p.glob(pattern)))
        elif p.exists():
            files.append(p)
        else:
            logger.warning(f"Input path does not exist: {p}")
    return files


def read_ego_networks(paths: Iterable[Path], skip_bad_files: bool = False) -> tuple[list[EgoNetwork], list[dict]]:
    networks: list[EgoNetwork] = []
    skipped: list[dict] = []
    for path in expand_input_paths(paths):
        try:
            networks.append(read_ego_network(path))
        except (DatasetParseError, OSError, UnicodeDecodeError) as e:
            if not skip_bad_files:
                raise
            logger.warning(f"Skipping bad file {path}: {e}")
            skipped.append({"path": str(path), "error": str(e)})
    return networks, skipped


def _tweet_record(tweet: Tweet, is_ego: bool) -> dict:
    record = {
        "tweet_id": tweet.tweet_id,
        "author_id": tweet.author_id,
        "author_username": tweet.author_username,
        "created_at": format_timestamp(tweet.created_at),
        "text": tweet.text,
        "kind": tweet.kind.value,
    }
    if tweet.replied_tweet_id is not None:
        record["replied_tweet_id"] = tweet.replied_tweet_id
    if tweet.retweeted_tweet_id is not None:
        record["retweeted_tweet_id"] = tweet.retweeted_tweet_id
    record["is_ego"] = is_ego
    return record


def dump_ego_network(ego: EgoNetwork) -> list[str]:
    """Serialize to JSON Lines (no trailing newlines). Followees are declared in the header."""
    header = {
        "ego_user_id": ego.ego_user_id,
        "ego_username": ego.ego_username,
        "schema_version": SCHEMA_VERSION,
        "followees": [
            {
                "followee_id": r.followee_id,
                "username": r.username,
                "first_seen": format_timestamp(r.first_seen) if r.first_seen else None,
                "last_seen": format_timestamp(r.last_seen) if r.last_seen else None,
            }
            for r in ego.followees.values()
        ],
    }
    records = [(t, True) for t in ego.ego_tweets]
    records += [(t, False) for r in ego.followees.values() for t in r.tweets]
    records.sort(key=lambda pair: pair[0].sort_key)
    lines = [json.dumps(header, ensure_ascii=False)]
    lines += [json.dumps(_tweet_record(t, is_ego), ensure_ascii=False) for t, is_ego in records]
    return lines


def write_ego_network(ego: EgoNetwork, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in dump_ego_network(ego):
            f.write(line + "\n")
    return path


# --- Missing-data estimation ---

def _followee_estimate(record: FolloweeRecord, start: datetime, end: datetime) -> tuple[int, float]:
    """
    (observed tweets inside the period, estimated missing tweets) for one followee.
    Missing = uncovered part of the period x the followee's observed rate.
    """
    if not record.tweets:
        logger.warning(f"Followee {record.followee_id} has no observed tweets; rate undefined, ignored.")
        return 0, 0.0

    observed = sum(1 for t in record.tweets if start <= t.created_at <= end)
    period = (end - start).total_seconds()
    lo, hi = max(start, record.first_seen), min(end, record.last_seen)
    overlap = max(0.0, (hi - lo).total_seconds())
    uncovered = period - overlap
    if uncovered <= 0:
        return observed, 0.0

    if overlap > 0:
        rate = observed / overlap
    else:
        span = (record.last_seen - record.first_seen).total_seconds()
        if span <= 0:
            logger.warning(f"Followee {record.followee_id} has a zero-length activity span; rate undefined, ignored.")
            return observed, 0.0
        rate = len(record.tweets) / span
    return observed, uncovered * rate


def estimate_missing_fraction(ego: EgoNetwork, period: Optional[tuple[datetime, datetime]] = None) -> float:
    start, end = period if period is not None else ego.activity_period
    if start >= end:
        raise ValueError(f"empty activity period for ego {ego.ego_user_id}: {start} >= {end}")

    observed_total = 0
    missing_total = 0.0
    for followee_id in sorted(ego.followees):
        observed, missing = _followee_estimate(ego.followees[followee_id], start, end)
        observed_total += observed
        missing_total += missing

    denominator = observed_total + missing_total
    if denominator <= 0:
        return 0.0
    return missing_total / denominator


class DroppedNetwork(BaseModel):
    id: str
    missing_fraction: float


class FilterReport(BaseModel):
    retained: list[str] = []
    dropped: list[DroppedNetwork] = []


def _missing_fraction_or_zero(ego: EgoNetwork) -> float:
    start, end = ego.activity_period
    if start >= end:
        logger.warning(f"Ego {ego.ego_user_id} has an empty activity period; nothing can be missing, kept.")
        return 0.0
    return estimate_missing_fraction(ego, (start, end))


def filter_dataset(
    networks: list[EgoNetwork], cfg: DatasetConfig, report: Optional[FilterReport] = None
) -> list[EgoNetwork]:
    """
    Keep networks whose estimated missing fraction is <= the threshold, order preserved.
    Pass a FilterReport to have it filled with the retained/dropped breakdown.
    """
    retained: list[EgoNetwork] = []
    for ego in networks:
        fraction = _missing_fraction_or_zero(ego)
        if fraction <= cfg.missing_fraction_threshold:
            retained.append(ego)
            if report is not None:
                report.retained.append(ego.ego_user_id)
        else:
            logger.info(f"Dropping ego {ego.ego_user_id}: {fraction:.1%} of followee tweets estimated missing")
            if report is not None:
                report.dropped.append(DroppedNetwork(id=ego.ego_user_id, missing_fraction=fraction))

    logger.info(
        f"Filter: retained {len(retained)}/{len(networks)} networks "
        f"(missing threshold {cfg.missing_fraction_threshold:.2f})"
    )
    return retained


def threshold_sweep(
    networks: list[EgoNetwork], thresholds: Iterable[float] = MISSING_THRESHOLD_SWEEP
) -> dict[float, int]:
    """Retained-network count per missing-fraction threshold."""
    fractions = [_missing_fraction_or_zero(ego) for ego in networks]
    return {t: sum(1 for f in fractions if f <= t) for t in thresholds}
