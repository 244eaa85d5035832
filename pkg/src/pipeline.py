import multiprocessing as mp
from typing import Optional
from loguru import logger
from pydantic import BaseModel
from .config import DatasetConfig
from .models import EgoNetwork, EmptyCorpusError, TweetKind
from .scoring import ScoredTweet, build_corpus, fit_tfidf, score_tweet
from .textpipe import extract_features
from .windows import build_windows, replies_in_window, window_time_length, windows_to_rows


class NetworkResult(BaseModel):
    ego_user_id: str
    ego_username: str
    corpus_size: int
    tweets: list[ScoredTweet]  # scored only
    unscored: list[ScoredTweet]
    window_hours: dict[str, float]  # nonempty windows, by target tweet id
    replies: int
    retweets: int
    non_tagged: int
    replies_in_windows: int
    window_rows: Optional[list[dict]] = None

    @property
    def all_tweets(self) -> list[ScoredTweet]:
        return self.tweets + self.unscored


class NetworkScorer:
    """
    Runs windows -> corpus -> tf-idf fit -> per-tweet scoring for one ego network.
    """

    def __init__(self, cfg: DatasetConfig, dump_windows: bool = False):
        self.cfg = cfg
        self.dump_windows = dump_windows

    def run(self, ego: EgoNetwork) -> NetworkResult:
        logger.info(f"--- Ego: {ego.ego_username} [{ego.ego_user_id}] ---")

        windows = build_windows(ego, self.cfg.window_size)
        corpus = build_corpus(ego, windows)
        model = fit_tfidf(corpus)
        logger.info(f"Corpus: {corpus.doc_count} window tweets, {len(model.vocabulary)} terms")

        scored, unscored = [], []
        for tweet in ego.ego_tweets:
            window = windows[tweet.tweet_id]
            result = score_tweet(model, tweet, window, extract_features(tweet.text, tweet.author_username))
            (scored if result.scored else unscored).append(result)

        if unscored:
            logger.warning(f"{len(unscored)} tweets of {ego.ego_username} have empty windows; left unscored.")

        in_window, _ = replies_in_window(ego, windows)
        kinds = [t.kind for t in ego.ego_tweets]
        result = NetworkResult(
            ego_user_id=ego.ego_user_id,
            ego_username=ego.ego_username,
            corpus_size=corpus.doc_count,
            tweets=scored,
            unscored=unscored,
            window_hours={tid: window_time_length(w) for tid, w in windows.items() if w.member_ids},
            replies=kinds.count(TweetKind.REPLY),
            retweets=kinds.count(TweetKind.RETWEET),
            non_tagged=kinds.count(TweetKind.ORIGINAL),
            replies_in_windows=in_window,
            window_rows=windows_to_rows(ego, windows) if self.dump_windows else None,
        )
        logger.success(f"Scored {len(scored)} tweets of {ego.ego_username}")
        return result


def score_network(ego: EgoNetwork, cfg: DatasetConfig) -> NetworkResult:
    return NetworkScorer(cfg).run(ego)


def _score_one(args: tuple[EgoNetwork, DatasetConfig, bool]) -> tuple[Optional[NetworkResult], Optional[dict]]:
    ego, cfg, dump_windows = args
    try:
        return NetworkScorer(cfg, dump_windows).run(ego), None
    except EmptyCorpusError as e:
        logger.warning(f"Excluding ego {ego.ego_user_id}: {e}")
        return None, {"id": ego.ego_user_id, "reason": str(e)}


def score_networks(
    networks: list[EgoNetwork], cfg: DatasetConfig, parallelism: int = 1, dump_windows: bool = False
) -> tuple[list[NetworkResult], list[dict]]:
    """
    Score every network; results keep input order. Networks whose windows are
    all empty are excluded and reported, not raised.
    """
    jobs = [(ego, cfg, dump_windows) for ego in networks]
    if parallelism > 1 and len(jobs) > 1:
        with mp.Pool(processes=min(parallelism, len(jobs))) as pool:
            outcomes = pool.map(_score_one, jobs)
    else:
        outcomes = [_score_one(job) for job in jobs]

    results = [r for r, _ in outcomes if r is not None]
    excluded = [x for _, x in outcomes if x is not None]
    logger.info(f"Scored {len(results)} networks, excluded {len(excluded)}")
    return results, excluded
