"""Corpus ingestion for token/tag datasets.

Reads whitespace-separated column files (token first, tag last, blank line
between sentences), builds vocabularies with number classing, loads
pretrained word vectors restricted to a vocabulary, and computes the
usual corpus statistics (sentence counts, tag inventory, OOV rate).
"""

import io
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

log = logging.getLogger(__name__)

NUMBER_TOKEN = "<number>"
UNKNOWN_TOKEN = "<unk>"

OUTSIDE_TAGS = ("O", "null")

DEFAULT_COLUMNS = ("token", "tag")
_ALLOWED_MIDDLE = ("pos", "lemma")


class ParseError(Exception):
    """Raised for malformed dataset lines; carries the 1-based line number."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class EmbeddingFormatError(Exception):
    pass


def is_outside(tag: str) -> bool:
    """True for the outside label under either of its spellings."""
    return tag in OUTSIDE_TAGS


def validate_tag(tag: str) -> None:
    if is_outside(tag):
        return
    if len(tag) > 2 and tag[:2] in ("B-", "I-"):
        return
    raise ValueError(f"bad tag {tag!r}: expected O/null or B-/I- plus a concept name")


@dataclass(frozen=True)
class Token:
    surface: str
    pos: Optional[str] = None
    lemma: Optional[str] = None

    def __post_init__(self):
        if not self.surface or any(c.isspace() for c in self.surface):
            raise ValueError(f"bad token surface {self.surface!r}")


@dataclass(frozen=True)
class Sentence:
    tokens: tuple
    tags: tuple

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.tokens) != len(self.tags) or not self.tokens:
            raise ValueError(
                f"{len(self.tokens)} tokens vs {len(self.tags)} tags (both must be >= 1)"
            )
        for tag in self.tags:
            validate_tag(tag)

    def __len__(self):
        return len(self.tokens)

    @property
    def surfaces(self):
        return tuple(t.surface for t in self.tokens)


@dataclass(frozen=True)
class Corpus:
    train: tuple
    test: tuple
    tag_inventory: tuple = field(default=())
    vocabulary: dict = field(default_factory=dict)

    @property
    def concept_names(self):
        """Distinct concept names with IOB prefixes stripped, in first-seen order."""
        seen = {}
        for tag in self.tag_inventory:
            if not is_outside(tag):
                seen.setdefault(tag[2:], None)
        return tuple(seen)


def normalize_numbers(token: str) -> str:
    """Collapse purely numeric tokens to the reserved number-class symbol.

    A token is numeric when it is digits optionally separated by single
    '.', ',' or ':' characters ("20", "1,000", "10:30"); anything else is
    returned unchanged ("b757", "3rd"). Idempotent.
    """
    if not token:
        raise ValueError("empty token")
    if not token[0].isdigit() or not token[-1].isdigit():
        return token
    prev_sep = False
    for c in token:
        if c.isdigit():
            prev_sep = False
        elif c in ".,:" and not prev_sep:
            prev_sep = True
        else:
            return token
    return NUMBER_TOKEN


def normalize(token: str) -> str:
    """The lookup form used for vocabularies and embeddings: lowercased,
    numbers classed. Raw surfaces are kept for character-level features."""
    return normalize_numbers(token.lower())


def _check_columns(columns: Sequence[str]) -> tuple:
    columns = tuple(columns)
    if len(columns) < 2 or columns[0] != "token" or columns[-1] != "tag":
        raise ValueError(f"column spec must be ('token', ..., 'tag'), got {columns}")
    for name in columns[1:-1]:
        if name not in _ALLOWED_MIDDLE:
            raise ValueError(f"unknown column {name!r}; middle columns may be {_ALLOWED_MIDDLE}")
    return columns


def _open_text(source):
    """Accept a path, a text stream, or a byte stream (decoded as UTF-8)."""
    if isinstance(source, (str,)) or hasattr(source, "__fspath__"):
        return open(source, "r", encoding="utf-8"), True
    if isinstance(source, io.TextIOBase):
        return source, False
    return io.TextIOWrapper(source, encoding="utf-8"), False


def load_conll(source, columns: Sequence[str] = DEFAULT_COLUMNS) -> list:
    """Parse a two-column (optionally POS/lemma-bearing) dataset.

    Blank lines terminate sentences; a trailing sentence without a final
    blank line is kept. Raises ParseError with the offending line number
    on wrong field counts or invalid tags.
    """
    columns = _check_columns(columns)
    stream, owned = _open_text(source)
    sentences = []
    tokens, tags = [], []
    try:
        for line_no, line in enumerate(stream, start=1):
            line = line.strip()
            if not line:
                if tokens:
                    sentences.append(Sentence(tokens, tags))
                    tokens, tags = [], []
                continue
            fields = line.split()
            if len(fields) != len(columns):
                raise ParseError(
                    f"expected {len(columns)} fields {columns}, got {len(fields)}: {line!r}",
                    line_no,
                )
            record = dict(zip(columns, fields))
            try:
                validate_tag(record["tag"])
                tokens.append(Token(record["token"], record.get("pos"), record.get("lemma")))
            except ValueError as exc:
                raise ParseError(str(exc), line_no) from exc
            tags.append(record["tag"])
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc}") from exc
    finally:
        if owned:
            stream.close()
    if tokens:
        sentences.append(Sentence(tokens, tags))
    return sentences


def write_conll(sentences: Iterable[Sentence], target, columns: Sequence[str] = DEFAULT_COLUMNS):
    """Serialize sentences back to the column format (round-trips exactly)."""
    columns = _check_columns(columns)
    close = False
    if isinstance(target, (str,)) or hasattr(target, "__fspath__"):
        target = open(target, "w", encoding="utf-8")
        close = True
    try:
        for sentence in sentences:
            for token, tag in zip(sentence.tokens, sentence.tags):
                values = {"token": token.surface, "pos": token.pos, "lemma": token.lemma, "tag": tag}
                target.write(" ".join(values[c] for c in columns))
                target.write("\n")
            target.write("\n")
    finally:
        if close:
            target.close()


def build_vocabulary(sentences: Iterable[Sentence]) -> dict:
    """Occurrence counts over normalized surfaces."""
    vocab = {}
    for sentence in sentences:
        for token in sentence.tokens:
            key = normalize(token.surface)
            vocab[key] = vocab.get(key, 0) + 1
    return vocab


def load_corpus(train_source, test_source, columns: Sequence[str] = DEFAULT_COLUMNS) -> Corpus:
    """Load a train/test split and derive the tag inventory and vocabulary.

    Tags found only in the test split are reported as a warning (the
    inventory is defined by the training data).
    """
    train = tuple(load_conll(train_source, columns))
    test = tuple(load_conll(test_source, columns))
    inventory = {}
    for sentence in train:
        for tag in sentence.tags:
            inventory.setdefault(tag, None)
    unseen = sorted({tag for s in test for tag in s.tags} - set(inventory))
    if unseen:
        log.warning("test split uses %d tags absent from training: %s", len(unseen), unseen)
    return Corpus(
        train=train,
        test=test,
        tag_inventory=tuple(inventory),
        vocabulary=build_vocabulary(train),
    )


@dataclass(frozen=True)
class EmbeddingTable:
    dimension: int
    vectors: dict
    missing: tuple

    def get(self, surface: str):
        """Vector for a (raw) surface, or None if it has no embedding."""
        return self.vectors.get(normalize(surface))


def load_embeddings(source, vocab: Iterable[str]) -> EmbeddingTable:
    """Load a textual word-vector file, keeping only words in `vocab`.

    `vocab` holds normalized surfaces (see normalize()). File words are
    lowercased before matching; the first occurrence of a word wins. An
    optional "count dimension" header line is skipped. The dimension is
    taken from the first vector and enforced on every later line.
    """
    import numpy as np

    vocab = set(vocab)
    stream, owned = _open_text(source)
    vectors = {}
    dimension = None
    try:
        for line_no, line in enumerate(stream, start=1):
            fields = line.rstrip("\n").split()
            if not fields:
                continue
            if line_no == 1 and len(fields) == 2 and all(f.isdigit() for f in fields):
                continue  # "count dimension" header
            word, components = fields[0].lower(), fields[1:]
            if dimension is None:
                dimension = len(components)
                if dimension == 0:
                    raise EmbeddingFormatError(f"line {line_no}: no vector components")
            elif len(components) != dimension:
                raise EmbeddingFormatError(
                    f"line {line_no}: expected {dimension} components, got {len(components)}"
                )
            if word not in vocab or word in vectors:
                continue
            try:
                vector = np.array([float(c) for c in components], dtype=np.float64)
            except ValueError as exc:
                raise EmbeddingFormatError(f"line {line_no}: non-numeric component") from exc
            if not np.all(np.isfinite(vector)):
                raise EmbeddingFormatError(f"line {line_no}: non-finite component")
            vectors[word] = vector
    finally:
        if owned:
            stream.close()
    missing = tuple(sorted(vocab - set(vectors)))
    return EmbeddingTable(dimension=0 if dimension is None else dimension,
                          vectors=vectors, missing=missing)


def oov_rate(train_vocab: Iterable[str], test: Sequence[Sentence]) -> float:
    """Fraction of test token occurrences whose normalized surface is
    absent from the training vocabulary."""
    train_vocab = set(train_vocab)
    total = unseen = 0
    for sentence in test:
        for token in sentence.tokens:
            total += 1
            if normalize(token.surface) not in train_vocab:
                unseen += 1
    if total == 0:
        raise ValueError("OOV rate is undefined for an empty test split")
    return unseen / total


def corpus_stats(corpus: Corpus) -> dict:
    """The headline statistics used when describing a dataset."""
    n_train_tokens = sum(len(s) for s in corpus.train)
    return {
        "train_sentences": len(corpus.train),
        "test_sentences": len(corpus.test),
        "tags": len(corpus.tag_inventory),
        "concepts": len(corpus.concept_names),
        "train_tokens": n_train_tokens,
        "train_types": len(corpus.vocabulary),
        "avg_train_length": n_train_tokens / len(corpus.train) if corpus.train else 0.0,
        "oov_rate": oov_rate(set(corpus.vocabulary), corpus.test) if corpus.test else 0.0,
    }
