"""In-memory word-vector store: text parsing, vocabulary cap, binary cache.

The text format is the plain GloVe release layout: one token followed by
``dim`` floats per line, whitespace separated, no header.  Line order is
taken as descending corpus frequency, so capping the vocabulary keeps the
first ``vocab_limit`` lines.
"""

import logging
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .exceptions import (
    CacheFormatError,
    EmbeddingFormatError,
    NotInVocabulary,
    UnresolvableItem,
)

logger = logging.getLogger(__name__)

CACHE_MAGIC = b"SEMPRJ1\x00"
_HEADER = struct.Struct("<8sIQ")
_TOKLEN = struct.Struct("<H")
DEFAULT_VOCAB_LIMIT = 500_000


@dataclass(frozen=True, eq=False)
class EmbeddingStore:
    """Immutable, vocabulary-ordered matrix of word vectors.

    Row ``i`` of ``matrix`` is the vector of ``vocab[i]``.  The matrix is
    float32 and marked read-only.
    """

    vocab: tuple
    matrix: np.ndarray
    source_meta: str = field(default="")
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        vocab = tuple(self.vocab)
        matrix = np.asarray(self.matrix, dtype=np.float32)
        if matrix.ndim != 2:
            raise ValueError("matrix must be 2-D")
        if matrix.shape[0] != len(vocab):
            raise ValueError(f"{len(vocab)} tokens but {matrix.shape[0]} rows")
        if matrix.shape[1] < 1:
            raise ValueError("dim must be positive")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("matrix contains non-finite values")
        index = {}
        for i, tok in enumerate(vocab):
            if not tok:
                raise ValueError(f"empty token at row {i}")
            if tok in index:
                raise ValueError(f"duplicate token {tok!r}")
            index[tok] = i
        if matrix.flags.writeable:
            matrix = matrix.copy()
            matrix.flags.writeable = False
        object.__setattr__(self, "vocab", vocab)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "_index", index)

    @property
    def dim(self):
        return self.matrix.shape[1]

    def __len__(self):
        return len(self.vocab)

    def __contains__(self, token):
        return normalize_token(token) in self._index

    def __eq__(self, other):
        if not isinstance(other, EmbeddingStore):
            return NotImplemented
        return (
            self.vocab == other.vocab
            and self.matrix.shape == other.matrix.shape
            and self.matrix.tobytes() == other.matrix.tobytes()
        )

    __hash__ = None

    # The store is immutable; sklearn's clone() deep-copies parameters.
    def __deepcopy__(self, memo):
        return self

    def __copy__(self):
        return self

    def index_of(self, token):
        try:
            return self._index[normalize_token(token)]
        except KeyError:
            raise NotInVocabulary(normalize_token(token)) from None


def normalize_token(token):
    return token.lower()


def load_embeddings(path, vocab_limit=DEFAULT_VOCAB_LIMIT):
    """Parse a whitespace-separated embedding text file.

    Parameters
    ----------
    path : str or Path
        Text file, one ``token f1 ... fdim`` record per line, UTF-8.
    vocab_limit : int
        Keep at most this many leading lines.

    Returns
    -------
    EmbeddingStore
    """
    if vocab_limit < 1:
        raise ValueError("vocab_limit must be positive")
    path = Path(path)
    tokens = []
    rows = []
    dim = None
    seen = set()
    n_dupes = 0
    n_lines = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if n_lines >= vocab_limit:
                break
            parts = line.split()
            if not parts:
                continue
            n_lines += 1
            if dim is None:
                dim = len(parts) - 1
                if dim < 1:
                    raise EmbeddingFormatError(f"{path}:{lineno}: line has no vector values")
            elif len(parts) - 1 != dim:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dim} values, found {len(parts) - 1}"
                )
            try:
                vec = np.array(parts[1:], dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(f"{path}:{lineno}: unparseable float") from None
            with np.errstate(over="ignore"):
                vec32 = vec.astype(np.float32)
            if not (np.all(np.isfinite(vec)) and np.all(np.isfinite(vec32))):
                raise EmbeddingFormatError(f"{path}:{lineno}: non-finite value")
            tok = normalize_token(parts[0])
            if tok in seen:
                n_dupes += 1
                continue
            seen.add(tok)
            tokens.append(tok)
            rows.append(vec32)
    if not tokens:
        raise EmbeddingFormatError(f"{path}: empty embedding file")
    if n_dupes:
        logger.warning("%s: dropped %d duplicate tokens after lowercasing", path, n_dupes)
    matrix = np.vstack(rows)
    meta = f"text:{path} limit={vocab_limit} lines={n_lines} dropped_duplicates={n_dupes}"
    return EmbeddingStore(tuple(tokens), matrix, meta)


def lookup(store, token):
    """Return the stored row for ``token`` (case-folded), read-only."""
    return store.matrix[store.index_of(token)]


class ResolvedItem(NamedTuple):
    vector: np.ndarray
    provenance: str


_ITEM_SPLIT = re.compile(r"[\s\-]+")


def resolve_item(store, item):
    """Find a vector for a possibly multi-word category item.

    The item is lowercased and internal spaces become hyphens; a direct
    vocabulary hit wins, otherwise the mean of the constituent words is used.
    Returns ``ResolvedItem(vector, provenance)`` where provenance is
    ``"token:<t>"`` or ``"mean:<t1>+<t2>..."``.
    """
    if not item or not item.strip():
        raise ValueError("item must be non-empty")
    joined = "-".join(item.strip().lower().split())
    if joined in store._index:
        return ResolvedItem(store.matrix[store._index[joined]].astype(np.float64), f"token:{joined}")
    parts = [p for p in _ITEM_SPLIT.split(joined) if p]
    missing = [p for p in parts if p not in store._index]
    if len(parts) < 2 or missing:
        raise UnresolvableItem(item, missing or [joined])
    vecs = np.stack([store.matrix[store._index[p]].astype(np.float64) for p in parts])
    return ResolvedItem(vecs.mean(axis=0), "mean:" + "+".join(parts))


def save_cache(store, path):
    """Write ``store`` in the binary cache format (little-endian)."""
    path = Path(path)
    chunks = [_HEADER.pack(CACHE_MAGIC, store.dim, len(store.vocab))]
    for tok in store.vocab:
        raw = tok.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise CacheFormatError(f"token too long for cache: {tok[:40]!r}...")
        chunks.append(_TOKLEN.pack(len(raw)))
        chunks.append(raw)
    with path.open("wb") as fh:
        fh.write(b"".join(chunks))
        fh.write(np.ascontiguousarray(store.matrix, dtype="<f4").tobytes())


def load_cache(path):
    """Read a store written by :func:`save_cache`."""
    path = Path(path)
    buf = path.read_bytes()
    if len(buf) < _HEADER.size:
        raise CacheFormatError(f"{path}: truncated header")
    magic, dim, count = _HEADER.unpack_from(buf, 0)
    if magic != CACHE_MAGIC:
        raise CacheFormatError(f"{path}: bad magic bytes {magic!r}")
    if dim < 1:
        raise CacheFormatError(f"{path}: dim must be positive")
    mv = memoryview(buf)
    off = _HEADER.size
    tokens = []
    end = len(buf)
    for _ in range(count):
        if off + 2 > end:
            raise CacheFormatError(f"{path}: truncated token table")
        (n,) = _TOKLEN.unpack_from(buf, off)
        off += 2
        if off + n > end:
            raise CacheFormatError(f"{path}: truncated token table")
        tokens.append(str(mv[off:off + n], "utf-8"))
        off += n
    expected = count * dim * 4
    if end - off != expected:
        raise CacheFormatError(
            f"{path}: header declares {count}x{dim} matrix ({expected} bytes), "
            f"payload has {end - off} bytes"
        )
    matrix = np.frombuffer(buf, dtype="<f4", count=count * dim, offset=off).reshape(count, dim)
    return EmbeddingStore(tuple(tokens), matrix.astype(np.float32, copy=False), f"cache:{path}")


def open_store(path, vocab_limit=DEFAULT_VOCAB_LIMIT):
    """Load either a binary cache or a text file, sniffing the magic bytes."""
    path = Path(path)
    with path.open("rb") as fh:
        head = fh.read(len(CACHE_MAGIC))
    if head == CACHE_MAGIC:
        store = load_cache(path)
        if len(store) > vocab_limit:
            store = EmbeddingStore(
                store.vocab[:vocab_limit],
                store.matrix[:vocab_limit],
                f"{store.source_meta} limit={vocab_limit}",
            )
        return store
    return load_embeddings(path, vocab_limit)
