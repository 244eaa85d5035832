"""
Tweet text -> feature multiset.

Hashtags, @-mentions and Snowball-stemmed non-stopword words are extracted
from the lowercased text, then the author's username is appended. Terms are
matched by value: mentions and author names share the username namespace,
hashtags keep their '#'.
"""
import csv
import hashlib
import re
from collections import Counter
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple
from nltk.stem.snowball import SnowballStemmer
from .config import STEM_FIXTURES_PATH, STOPWORDS_PATH, STOPWORDS_SHA256

HASHTAG_RE = re.compile(r"(?:^|\s)(#\w+)")
MENTION_RE = re.compile(r"\B[@＠](\w{1,20})")
WORD_RE = re.compile(r"(?:^|\s[^@＠#\s\w]*)(\w+)")

_stemmer = SnowballStemmer("english")


class TermKind(str, Enum):
    HASHTAG = "hashtag"
    MENTION = "mention"
    WORD = "word"
    AUTHOR_NAME = "author_name"


class Term(NamedTuple):
    kind: TermKind
    value: str


class FeatureSet(NamedTuple):
    features: tuple[Term, ...]

    @property
    def counts(self) -> Counter:
        """term value -> multiplicity"""
        return Counter(t.value for t in self.features)

    @property
    def distinct(self) -> frozenset[str]:
        return frozenset(t.value for t in self.features)

    @property
    def terms(self) -> list[str]:
        return [t.value for t in self.features]


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_stopwords(path: Path = STOPWORDS_PATH, expected_sha256: str | None = STOPWORDS_SHA256) -> frozenset[str]:
    path = Path(path)
    if expected_sha256 is not None:
        actual = sha256_file(path)
        if actual != expected_sha256:
            raise ValueError(f"stopword list {path} checksum {actual} != expected {expected_sha256}")
    words = path.read_text(encoding="utf-8").splitlines()
    return frozenset(w.strip() for w in words if w.strip())


def load_stem_fixtures(path: Path = STEM_FIXTURES_PATH) -> dict[str, str]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return {row["word"]: row["stem"] for row in csv.DictReader(f)}


STOPWORDS = load_stopwords()


def is_stopword(token: str) -> bool:
    return token in STOPWORDS


@lru_cache(maxsize=65536)
def stem(token: str) -> str:
    return _stemmer.stem(token)


def extract_features(text: str, author_username: str) -> FeatureSet:
    lowered = text.lower()
    terms: list[Term] = [Term(TermKind.HASHTAG, tag) for tag in HASHTAG_RE.findall(lowered)]
    terms += [Term(TermKind.MENTION, name) for name in MENTION_RE.findall(lowered)]
    for word in WORD_RE.findall(lowered):
        if is_stopword(word):
            continue
        stemmed = stem(word)
        # 'ons' -> 'on'
        if is_stopword(stemmed):
            continue
        terms.append(Term(TermKind.WORD, stemmed))
    author = author_username.lower().lstrip("@＠")
    if author:
        terms.append(Term(TermKind.AUTHOR_NAME, author))
    return FeatureSet(tuple(terms))
