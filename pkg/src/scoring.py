"""
Per-user tf-idf model over the window corpus and the normalized similarity score.

pairScore(q, d)   = sum of d's tf*idf entries over the distinct terms q and d share
normalization(w)  = max self pairScore among the window members
score(t)          = max over the window of pairScore(t, d) / normalization(w)
"""
from dataclasses import dataclass
from typing import Optional
import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
from scipy.sparse import csr_matrix
from sklearn.feature_extraction.text import TfidfVectorizer
from .models import Category, EgoNetwork, EmptyCorpusError, EmptyWindowError, Tweet
from .textpipe import FeatureSet, extract_features
from .windows import Window


@dataclass(frozen=True)
class Corpus:
    documents: dict[str, FeatureSet]  # tweet_id -> features, ids ascending

    @property
    def doc_count(self) -> int:
        return len(self.documents)


@dataclass(frozen=True)
class TfIdfModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    doc_vectors: csr_matrix
    doc_index: dict[str, int]
    self_score: dict[str, float]

    @property
    def doc_count(self) -> int:
        return self.doc_vectors.shape[0]

    def entry(self, doc_id: str, term: str) -> float:
        col = self.vocabulary.get(term)
        if col is None:
            return 0.0
        return float(self.doc_vectors[self.doc_index[doc_id], col])


class ScoredTweet(BaseModel):
    model_config = ConfigDict(frozen=True)

    tweet_id: str
    category: Category
    score: Optional[float] = Field(None, ge=0.0, le=1.0)  # None = unscored (empty window)
    best_match_id: Optional[str] = None
    window_size: int = 0

    @property
    def scored(self) -> bool:
        return self.score is not None


def build_corpus(ego: EgoNetwork, windows: dict[str, Window]) -> Corpus:
    """Union of all window members of one ego, each featurized with its own author."""
    ids = sorted({m for w in windows.values() for m in w.member_ids})
    if not ids:
        raise EmptyCorpusError(f"empty corpus: every window of ego {ego.ego_user_id} is empty")
    documents = {}
    for tweet_id in ids:
        tweet = ego.tweet_index[tweet_id]
        documents[tweet_id] = extract_features(tweet.text, tweet.author_username)
    return Corpus(documents=documents)


def _analyze(features: FeatureSet) -> list[str]:
    return features.terms


def _row_score(matrix: csr_matrix, row: int, columns: np.ndarray) -> float:
    """Sum of the row's entries whose column is in `columns`, in ascending column order."""
    start, end = matrix.indptr[row], matrix.indptr[row + 1]
    mask = np.isin(matrix.indices[start:end], columns, assume_unique=True)
    return float(np.sum(matrix.data[start:end][mask]))


def fit_tfidf(corpus: Corpus) -> TfIdfModel:
    if corpus.doc_count == 0:
        raise EmptyCorpusError("cannot fit a tf-idf model on an empty corpus")
    if not any(fs.features for fs in corpus.documents.values()):
        raise EmptyCorpusError("corpus has no terms")

    doc_ids = list(corpus.documents)
    # raw counts x smoothed idf = ln((1+N)/(1+df)) + 1, no row normalization
    vectorizer = TfidfVectorizer(
        analyzer=_analyze,
        lowercase=False,
        norm=None,
        use_idf=True,
        smooth_idf=True,
        sublinear_tf=False,
        dtype=np.float64,
    )
    matrix = vectorizer.fit_transform([corpus.documents[i] for i in doc_ids]).tocsr()
    matrix.sort_indices()

    self_score = {}
    for row, doc_id in enumerate(doc_ids):
        start, end = matrix.indptr[row], matrix.indptr[row + 1]
        self_score[doc_id] = _row_score(matrix, row, matrix.indices[start:end])

    logger.debug(f"Fitted tf-idf: {len(doc_ids)} documents, {len(vectorizer.vocabulary_)} terms")
    return TfIdfModel(
        vocabulary=dict(vectorizer.vocabulary_),
        idf=vectorizer.idf_.astype(np.float64),
        doc_vectors=matrix,
        doc_index={doc_id: row for row, doc_id in enumerate(doc_ids)},
        self_score=self_score,
    )


def query_columns(model: TfIdfModel, query: FeatureSet) -> np.ndarray:
    """Vocabulary columns of the query's distinct terms; unknown terms are dropped."""
    cols = sorted(model.vocabulary[t] for t in query.distinct if t in model.vocabulary)
    return np.asarray(cols, dtype=model.doc_vectors.indices.dtype)


def pair_score(model: TfIdfModel, query: FeatureSet, doc_id: str, columns: Optional[np.ndarray] = None) -> float:
    if doc_id not in model.doc_index:
        raise KeyError(f"unknown document {doc_id}")
    if columns is None:
        columns = query_columns(model, query)
    return _row_score(model.doc_vectors, model.doc_index[doc_id], columns)


def normalization(model: TfIdfModel, w: Window) -> float:
    if not w.member_ids:
        raise EmptyWindowError(f"window of {w.target_tweet_id} is empty")
    return max(model.self_score[m] for m in w.member_ids)


def score_tweet(model: TfIdfModel, tweet: Tweet, w: Window, features: Optional[FeatureSet] = None) -> ScoredTweet:
    if not w.member_ids:
        return ScoredTweet(tweet_id=tweet.tweet_id, category=tweet.category)

    query = features if features is not None else extract_features(tweet.text, tweet.author_username)
    columns = query_columns(model, query)
    norm = normalization(model, w)

    best_id: Optional[str] = None
    best = -1.0
    # members are newest first; strict '>' keeps the most recent on ties
    for member_id in w.member_ids:
        value = pair_score(model, query, member_id, columns)
        if value > best:
            best, best_id = value, member_id

    if norm <= 0:
        return ScoredTweet(tweet_id=tweet.tweet_id, category=tweet.category, score=0.0, window_size=len(w.member_ids))
    return ScoredTweet(
        tweet_id=tweet.tweet_id,
        category=tweet.category,
        score=best / norm,
        best_match_id=best_id,
        window_size=len(w.member_ids),
    )
