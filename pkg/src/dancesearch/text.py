"""Tokenization, vocabulary, and pluggable text-embedding providers.

Two providers produce the raw text vector the adapter projects into the
retrieval space: a trainable fallback (mean of learned token embeddings,
width 64) that keeps the whole pipeline self-contained, and a file-backed
table of precomputed sentence embeddings for users who have a real
pretrained text tower.
"""

import hashlib
import json
import re
from dataclasses import dataclass, field

import numpy as np

from . import ops, tdt
from .errors import CaptionLookupError, InputError
from .tensor import Parameter, Tensor

OOV_ID = 0
OOV_TOKEN = "oov"
_WORD_RE = re.compile(r"[a-z0-9]+")


def tokenize_words(raw):
    """Lowercase words split on non-alphanumerics; empty results are rejected."""
    if not isinstance(raw, str) or not raw:
        raise InputError("cannot tokenize an empty string")
    words = _WORD_RE.findall(raw.lower())
    if not words:
        raise InputError(f"no tokens in {raw!r}")
    return words


@dataclass
class TokenizedText:
    ids: np.ndarray
    raw: str
    caption_id: str = ""


class Vocabulary:
    """Token -> id map built from training captions; id 0 is out-of-vocabulary."""

    def __init__(self, token_to_id):
        self.token_to_id = dict(token_to_id)
        self._id_to_token = {i: t for t, i in self.token_to_id.items()}

    @classmethod
    def build(cls, captions):
        words = set()
        for caption in captions:
            words.update(tokenize_words(caption))
        words.discard(OOV_TOKEN)
        return cls({w: i + 1 for i, w in enumerate(sorted(words))})

    @property
    def size(self):
        return len(self.token_to_id) + 1  # plus the OOV slot

    def encode(self, raw, caption_id=""):
        ids = np.array([self.token_to_id.get(w, OOV_ID) for w in tokenize_words(raw)],
                       dtype=np.int64)
        return TokenizedText(ids=ids, raw=raw, caption_id=caption_id)

    def decode(self, ids):
        return " ".join(self._id_to_token.get(int(i), OOV_TOKEN) for i in ids)

    def to_json(self):
        return json.dumps(self.token_to_id, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(json.loads(text))

    def sha256(self):
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


class TrainableTextProvider:
    """Mean of learned token embeddings: order-blind but fully trainable."""

    kind = "trainable"

    def __init__(self, vocab_size, dim, rng, name="text.provider"):
        self.dim = dim
        self.table = Parameter(rng.normal(0.0, 0.02, size=(vocab_size, dim)),
                               name=f"{name}.table")

    def embed(self, tokens):
        if len(tokens.ids) == 0:
            raise InputError("cannot embed an empty token sequence")
        return ops.row_vector(ops.mean_rows(ops.embedding_rows(self.table, tokens.ids)))

    def parameters(self):
        return [self.table]


class FileBackedTextProvider:
    """Precomputed sentence embeddings: a TDT1 matrix plus a caption-id index."""

    kind = "file"

    def __init__(self, matrix, index):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise InputError(f"embedding matrix must be 2-D, got shape {matrix.shape}")
        bad = [cid for cid, row in index.items() if not (0 <= int(row) < matrix.shape[0])]
        if bad:
            raise InputError(f"index rows out of range for {matrix.shape[0]}-row matrix: {bad[:5]}")
        self.matrix = matrix
        self.index = {str(k): int(v) for k, v in index.items()}
        self.dim = matrix.shape[1]

    @classmethod
    def load(cls, matrix_path, index_path):
        with open(index_path, "r", encoding="utf-8") as fh:
            index = json.load(fh)
        return cls(tdt.read_tensor(matrix_path), index)

    def save(self, matrix_path, index_path):
        tdt.write_tensor(matrix_path, self.matrix)
        with open(index_path, "w", encoding="utf-8") as fh:
            json.dump(self.index, fh, sort_keys=True)

    def embed(self, tokens):
        row = self.index.get(tokens.caption_id)
        if row is None:
            raise CaptionLookupError(f"caption id {tokens.caption_id!r} not in embedding index")
        # constant w.r.t. training: no tape node needed
        return Tensor(self.matrix[row].reshape(1, -1).copy())

    def parameters(self):
        return []
