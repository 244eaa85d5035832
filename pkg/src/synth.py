"""
Synthetic ego networks with planted response behavior, the naive scoring
oracle, and detection metrics against the planted ground truth.
"""
import itertools
import json
import math
from collections import Counter
from datetime import datetime, timedelta, timezone
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union
import numpy as np
from loguru import logger
from pydantic import BaseModel
from .config import BEHAVIOR_KINDS, SynthConfig
from .dataset import write_ego_network
from .models import Category, EgoNetwork, FolloweeRecord, SynthError, Tweet, TweetKind
from .scoring import ScoredTweet, build_corpus, fit_tfidf
from .textpipe import extract_features, is_stopword, stem
from .windows import Timeline

BASE_TIME = datetime(2012, 12, 1, tzinfo=timezone.utc)
IMPLICIT_KINDS = ("implicit_copy", "implicit_edited")
EXPLICIT_KINDS = ("explicit_retweet", "explicit_reply")

# Pseudo-words are CVCVC over these letters: no English suffix can form, so the
# stemmer leaves them unchanged. The two partitions never share a first letter.
_VOWELS = "aou"
_CONSONANTS = "bdfgkmnprt"
_RELATED_INITIALS = "bdfgk"
_UNRELATED_INITIALS = "mnprt"
_MAX_USERNAME = 20
_REPLY_SOURCE_WORDS = 2
_REPLY_OWN_WORDS = 3


class TruthEntry(BaseModel):
    true_kind: str
    true_source_id: Optional[str] = None


class GroundTruth(BaseModel):
    ego_user_id: str
    seed: int
    entries: dict[str, TruthEntry]


class DetectionMetrics(BaseModel):
    threshold: float
    positives: int
    predicted: int
    tp: int
    fp: int
    fn: int
    precision: Optional[float]
    recall: Optional[float]
    best_match_accuracy: Optional[float]
    per_kind_recall: dict[str, Optional[float]]
    per_kind_high_rate: dict[str, Optional[float]]


@lru_cache(maxsize=None)
def _pseudo_words(initials: str) -> tuple[str, ...]:
    words = []
    for c1, v1, c2, v2, c3 in itertools.product(initials, _VOWELS, _CONSONANTS, _VOWELS, _CONSONANTS):
        word = c1 + v1 + c2 + v2 + c3
        if stem(word) == word and not is_stopword(word):
            words.append(word)
    return tuple(words)


def _vocabulary(rng: np.random.Generator, initials: str, size: int) -> list[str]:
    pool = _pseudo_words(initials)
    if size > len(pool):
        raise SynthError(f"vocab_size {size} exceeds the {len(pool)} available pseudo-words")
    return [pool[i] for i in rng.choice(len(pool), size=size, replace=False)]


def _zipf_weights(size: int, exponent: float) -> np.ndarray:
    weights = 1.0 / np.power(np.arange(1, size + 1, dtype=np.float64), exponent)
    return weights / weights.sum()


def _behavior_counts(mix: dict[str, float], total: int) -> dict[str, int]:
    """Largest-remainder rounding of mix x total; leftover ties go in kind order."""
    exact = {k: mix[k] * total for k in BEHAVIOR_KINDS}
    counts = {k: int(math.floor(v)) for k, v in exact.items()}
    leftover = total - sum(counts.values())
    by_remainder = sorted(BEHAVIOR_KINDS, key=lambda k: (-(exact[k] - counts[k]), BEHAVIOR_KINDS.index(k)))
    for k in by_remainder[:leftover]:
        counts[k] += 1
    return counts


def _ms(value: int) -> datetime:
    return BASE_TIME + timedelta(milliseconds=int(value))


class _Generator:
    def __init__(self, config: SynthConfig):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.ego_user_id = f"ego{config.seed}"
        self.ego_username = f"{config.username_prefix}_ego{config.seed}"
        self._next_id = 0
        for name in [self.ego_username] + [self._followee_username(k) for k in range(config.num_followees)]:
            if len(name) > _MAX_USERNAME:
                raise SynthError(f"username {name!r} is longer than {_MAX_USERNAME} characters")

    def _followee_username(self, k: int) -> str:
        return f"{self.config.username_prefix}_{k:03d}"

    def _tweet_id(self) -> str:
        self._next_id += 1
        return f"{self.config.seed:06d}{self._next_id:08d}"

    def _followees(self) -> dict[str, FolloweeRecord]:
        cfg = self.config
        weights = _zipf_weights(len(self.related), cfg.zipf_exponent)
        followees = {}
        for k in range(cfg.num_followees):
            followee_id = f"{self.ego_user_id}_f{k:03d}"
            username = self._followee_username(k)
            gaps = self.rng.exponential(cfg.time_model * 1000.0, size=cfg.tweets_per_followee)
            times = np.cumsum(np.maximum(1, np.rint(gaps).astype(np.int64)))
            tweets = []
            for t in times:
                n_terms = int(self.rng.integers(cfg.min_terms, cfg.max_terms + 1))
                words = [self.related[i] for i in self.rng.choice(len(self.related), size=n_terms, p=weights)]
                tweets.append(
                    Tweet(
                        tweet_id=self._tweet_id(),
                        author_id=followee_id,
                        author_username=username,
                        created_at=_ms(t),
                        text=" ".join(words),
                    )
                )
            followees[followee_id] = FolloweeRecord(
                followee_id=followee_id,
                username=username,
                tweets=tuple(tweets),
                first_seen=tweets[0].created_at,
                last_seen=tweets[-1].created_at,
            )
        return followees

    def _ego_times(self, followees: dict[str, FolloweeRecord]) -> list[int]:
        """Ego tweet offsets (ms), all strictly after the first followee tweet."""
        offsets = [int((t.created_at - BASE_TIME) / timedelta(milliseconds=1)) for r in followees.values() for t in r.tweets]
        lo, hi = min(offsets), max(offsets)
        hi = max(hi, lo + 1000)
        return sorted(int(v) for v in self.rng.integers(lo + 1, hi + 1, size=self.config.ego_tweet_count))

    def _unrelated_words(self, n: int) -> list[str]:
        return [self.unrelated[i] for i in self.rng.choice(len(self.unrelated), size=n)]

    def _edited_text(self, source: Tweet) -> str:
        words = source.text.split()
        distinct = sorted(set(words))
        # every draw is made regardless of edit_rate, so higher rates edit a superset
        order = self.rng.permutation(len(distinct))
        replace = self.rng.random(len(distinct)) < 0.5
        substitutes = self._unrelated_words(len(distinct))
        n_edit = int(math.floor(self.config.edit_rate * len(distinct) + 0.5))
        edits = {}
        for i in order[:n_edit]:
            edits[distinct[i]] = substitutes[i] if replace[i] else None
        kept = []
        for word in words:
            if word not in edits:
                kept.append(word)
            elif edits[word] is not None:
                kept.append(edits[word])
        return f"{' '.join(kept)} via @{source.author_username}".strip()

    def _reply_text(self, source: Tweet) -> str:
        distinct = sorted(set(source.text.split()))
        picked = [distinct[i] for i in self.rng.choice(len(distinct), size=min(_REPLY_SOURCE_WORDS, len(distinct)), replace=False)]
        return " ".join([f"@{source.author_username}"] + picked + self._unrelated_words(_REPLY_OWN_WORDS))

    def _ego_tweet(self, kind: str, tweet_id: str, created_at: datetime, source: Optional[Tweet]) -> Tweet:
        base = dict(tweet_id=tweet_id, author_id=self.ego_user_id, author_username=self.ego_username, created_at=created_at)
        if kind == "unrelated":
            n_terms = int(self.rng.integers(self.config.min_terms, self.config.max_terms + 1))
            return Tweet(text=" ".join(self._unrelated_words(n_terms)), **base)
        if kind == "implicit_copy":
            return Tweet(text=f"RT @{source.author_username}: {source.text}", **base)
        if kind == "implicit_edited":
            return Tweet(text=self._edited_text(source), **base)
        if kind == "explicit_retweet":
            return Tweet(
                text=f"RT @{source.author_username}: {source.text}",
                kind=TweetKind.RETWEET,
                retweeted_tweet_id=source.tweet_id,
                **base,
            )
        if kind == "explicit_reply":
            return Tweet(text=self._reply_text(source), kind=TweetKind.REPLY, replied_tweet_id=source.tweet_id, **base)
        raise SynthError(f"unknown behavior kind {kind!r}")

    def run(self) -> tuple[EgoNetwork, GroundTruth]:
        cfg = self.config
        self.related = _vocabulary(self.rng, _RELATED_INITIALS, cfg.vocab_size)
        self.unrelated = _vocabulary(self.rng, _UNRELATED_INITIALS, cfg.vocab_size)

        followees = self._followees()
        times = self._ego_times(followees)
        ids = [self._tweet_id() for _ in times]
        counts = _behavior_counts(cfg.behavior_mix, cfg.ego_tweet_count)
        kinds = [k for k in BEHAVIOR_KINDS for _ in range(counts[k])]
        kinds = [kinds[i] for i in self.rng.permutation(len(kinds))]

        # windows and the corpus depend only on followee tweets and ego timestamps,
        # so a placeholder network yields the final model
        placeholder = EgoNetwork(
            ego_user_id=self.ego_user_id,
            ego_username=self.ego_username,
            ego_tweets=tuple(
                Tweet(tweet_id=i, author_id=self.ego_user_id, author_username=self.ego_username, created_at=_ms(t), text="")
                for i, t in zip(ids, times)
            ),
            followees=followees,
        )
        timeline = Timeline(placeholder)
        windows = {t.tweet_id: timeline.window_for(t, cfg.window_size) for t in placeholder.ego_tweets}
        model = fit_tfidf(build_corpus(placeholder, windows))

        ego_tweets, entries = [], {}
        for placeholder_tweet, kind in zip(placeholder.ego_tweets, kinds):
            window = windows[placeholder_tweet.tweet_id]
            source: Optional[Tweet] = None
            if kind != "unrelated":
                if not window.member_ids:
                    raise SynthError(f"no window member to respond to for ego tweet {placeholder_tweet.tweet_id}")
                if kind in IMPLICIT_KINDS and cfg.implicit_source == "strongest":
                    # newest member with the highest self score: a verbatim copy is its own argmax
                    top = max(model.self_score[m] for m in window.member_ids)
                    source_id = next(m for m in window.member_ids if model.self_score[m] == top)
                else:
                    source_id = window.member_ids[int(self.rng.integers(len(window.member_ids)))]
                source = placeholder.tweet_index[source_id]
            ego_tweets.append(self._ego_tweet(kind, placeholder_tweet.tweet_id, placeholder_tweet.created_at, source))
            entries[placeholder_tweet.tweet_id] = TruthEntry(
                true_kind=kind, true_source_id=source.tweet_id if source else None
            )

        ego = EgoNetwork(
            ego_user_id=self.ego_user_id,
            ego_username=self.ego_username,
            ego_tweets=tuple(ego_tweets),
            followees=followees,
        )
        self._check_sources_in_window(ego, entries)
        logger.debug(f"Generated {ego.ego_user_id}: {ego.followee_tweet_count} followee tweets, mix {counts}")
        return ego, GroundTruth(ego_user_id=ego.ego_user_id, seed=cfg.seed, entries=entries)

    def _check_sources_in_window(self, ego: EgoNetwork, entries: dict[str, TruthEntry]):
        timeline = Timeline(ego)
        for tweet in ego.ego_tweets:
            entry = entries[tweet.tweet_id]
            if entry.true_source_id is None:
                continue
            window = timeline.window_for(tweet, self.config.window_size)
            if entry.true_source_id not in window.member_ids:
                raise SynthError(f"planted source {entry.true_source_id} is outside the window of {tweet.tweet_id}")


def generate(config: SynthConfig) -> tuple[EgoNetwork, GroundTruth]:
    """Deterministic under config.seed."""
    return _Generator(config).run()


def generate_many(config: SynthConfig, count: int) -> list[tuple[EgoNetwork, GroundTruth]]:
    """Networks for seeds seed, seed+1, ..., seed+count-1."""
    return [generate(config.model_copy(update={"seed": config.seed + k})) for k in range(count)]


def write_synthetic(output_dir: Path, ego: EgoNetwork, truth: GroundTruth) -> tuple[Path, Path]:
    output_dir = Path(output_dir)
    data_path = write_ego_network(ego, output_dir / f"{ego.ego_user_id}.jsonl")
    truth_path = output_dir / f"{ego.ego_user_id}.truth.json"
    with open(truth_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(truth.model_dump(mode="json"), indent=2, sort_keys=True) + "\n")
    return data_path, truth_path


def read_truth(path: Path) -> GroundTruth:
    with open(path, "r", encoding="utf-8") as f:
        return GroundTruth.model_validate(json.load(f))


# --- Naive oracle: shares only the text pipeline with the main scorer ---

def brute_force_score(ego: EgoNetwork, tweet: Tweet, n: int) -> Optional[float]:
    """
    Score one ego tweet from scratch with plain loops and dicts.
    None when the tweet's window is empty.
    """
    if tweet.tweet_id not in {t.tweet_id for t in ego.ego_tweets}:
        raise KeyError(f"tweet {tweet.tweet_id} is not an ego tweet of {ego.ego_user_id}")

    feed = {}
    for followee_id, record in ego.followees.items():
        if followee_id == ego.ego_user_id:
            continue
        for t in record.tweets:
            if t.author_id != ego.ego_user_id and t.tweet_id not in feed:
                feed[t.tweet_id] = t
    ordered = sorted(feed.values(), key=lambda t: (t.created_at, t.tweet_id))

    def window(target: Tweet) -> list[Tweet]:
        before = [t for t in ordered if (t.created_at, t.tweet_id) < (target.created_at, target.tweet_id)]
        return list(reversed(before[-n:])) if before else []

    corpus_ids = set()
    for ego_tweet in ego.ego_tweets:
        for t in window(ego_tweet):
            corpus_ids.add(t.tweet_id)

    tf = {}
    for doc_id in corpus_ids:
        tf[doc_id] = Counter(extract_features(feed[doc_id].text, feed[doc_id].author_username).terms)
    df = Counter()
    for counts in tf.values():
        for term in counts:
            df[term] += 1
    n_docs = len(corpus_ids)
    idf = {term: math.log((1 + n_docs) / (1 + d)) + 1 for term, d in df.items()}

    def pair(query_terms: set, doc_id: str) -> float:
        total = 0.0
        for term, count in tf[doc_id].items():
            if term in query_terms:
                total += count * idf[term]
        return total

    members = window(tweet)
    if not members:
        return None
    norm = max(pair(set(tf[m.tweet_id]), m.tweet_id) for m in members)
    if norm == 0:
        return 0.0
    query = set(extract_features(tweet.text, tweet.author_username).terms)
    best = max(pair(query, m.tweet_id) for m in members)
    return best / norm


# --- Detection metrics ---

def _rate(hits: int, total: int) -> Optional[float]:
    return hits / total if total else None


def evaluate_detection(
    scored: Iterable[ScoredTweet], truth: Union[GroundTruth, Mapping[str, TruthEntry]], threshold: float
) -> DetectionMetrics:
    """
    Positives are implicit responses among non-tagged tweets; a tweet is
    predicted a response when score >= threshold.
    `truth` is one network's GroundTruth or entries merged across networks.
    """
    entries = truth.entries if isinstance(truth, GroundTruth) else truth
    scored = list(scored)
    by_id = {s.tweet_id: s for s in scored}
    missing = set(entries) ^ set(by_id)
    if missing:
        logger.warning(f"{len(missing)} tweets are in only one of scored/truth; evaluating the overlap.")
    ids = [tid for tid in sorted(entries) if tid in by_id]

    def high(tid: str) -> bool:
        s = by_id[tid]
        return s.score is not None and s.score >= threshold

    non_tagged = [tid for tid in ids if by_id[tid].category == Category.NON_TAGGED]
    positives = [tid for tid in non_tagged if entries[tid].true_kind in IMPLICIT_KINDS]
    predicted = [tid for tid in non_tagged if high(tid)]
    tp = sum(1 for tid in positives if high(tid))
    fp = len(predicted) - tp
    fn = len(positives) - tp
    matched = sum(1 for tid in positives if by_id[tid].best_match_id == entries[tid].true_source_id)

    per_kind_recall = {}
    for kind in IMPLICIT_KINDS:
        of_kind = [tid for tid in positives if entries[tid].true_kind == kind]
        per_kind_recall[kind] = _rate(sum(1 for tid in of_kind if high(tid)), len(of_kind))
    per_kind_high_rate = {}
    for kind in BEHAVIOR_KINDS:
        of_kind = [tid for tid in ids if entries[tid].true_kind == kind]
        per_kind_high_rate[kind] = _rate(sum(1 for tid in of_kind if high(tid)), len(of_kind))

    return DetectionMetrics(
        threshold=threshold,
        positives=len(positives),
        predicted=len(predicted),
        tp=tp,
        fp=fp,
        fn=fn,
        precision=_rate(tp, len(predicted)),
        recall=_rate(tp, len(positives)),
        best_match_accuracy=_rate(matched, len(positives)),
        per_kind_recall=per_kind_recall,
        per_kind_high_rate=per_kind_high_rate,
    )
