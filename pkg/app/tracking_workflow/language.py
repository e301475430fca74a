"""Target description tokenizer, vocabulary and convolutional sentence encoder."""

import re
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from app.core.exception import LanguageError
from app.infrastructure.blob_manager import BaseBlobManager
from app.tracking_workflow.constants import (
    MAX_SENTENCE_LENGTH,
    NUM_SPECIAL_TOKENS,
    PAD_ID,
    PAD_TOKEN,
    UNK_ID,
    UNK_TOKEN,
)
from app.tracking_workflow.numerics import Conv1d, Embedding, Module, ReLU

_WORD = re.compile(r"[a-z0-9]+")


def split_words(sentence: str) -> list[str]:
    """小文字化して空白・記号で分割."""
    return _WORD.findall(sentence.lower())


class Vocabulary:
    """トークン ↔ ID の対応表. ID 0 は pad、ID 1 は unk に固定."""

    def __init__(self, tokens: Iterable[str] = ()) -> None:
        self.id_to_token: list[str] = [PAD_TOKEN, UNK_TOKEN]
        self.token_to_id: dict[str, int] = {PAD_TOKEN: PAD_ID, UNK_TOKEN: UNK_ID}
        for token in tokens:
            self.add(token)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def add(self, token: str) -> int:
        if token in self.token_to_id:
            return self.token_to_id[token]
        if not _WORD.fullmatch(token):
            raise LanguageError("Vocabulary", "add", f"token {token!r} is not a lowercase word")
        self.token_to_id[token] = len(self.id_to_token)
        self.id_to_token.append(token)
        return self.token_to_id[token]

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    @classmethod
    def from_sentences(cls, sentences: Iterable[str]) -> "Vocabulary":
        """文集合から語彙を構築（出現語をソートして決定的にIDを振る）."""
        words: set[str] = set()
        for sentence in sentences:
            words.update(split_words(sentence))
        return cls(sorted(words))

    def to_text(self) -> str:
        """1行1トークン、行番号 = ID - 特殊トークン数."""
        return "".join(f"{token}\n" for token in self.id_to_token[NUM_SPECIAL_TOKENS:])

    @classmethod
    def from_text(cls, text: str) -> "Vocabulary":
        return cls(line.strip() for line in text.splitlines() if line.strip())

    def save(self, blob_manager: BaseBlobManager, path: str | Path) -> None:
        blob_manager.save_blob_as_str(self.to_text(), path)

    @classmethod
    def load(cls, blob_manager: BaseBlobManager, path: str | Path) -> "Vocabulary":
        return cls.from_text(blob_manager.read_blob_as_str(path))


def tokenize(sentence: str, vocab: Vocabulary) -> list[int]:
    """文をIDリスト（長さ16）に変換. 16語を超える分は切り捨て、不足分はpadで埋める."""
    ids = [vocab.lookup(word) for word in split_words(sentence)][:MAX_SENTENCE_LENGTH]
    return ids + [PAD_ID] * (MAX_SENTENCE_LENGTH - len(ids))


def detokenize(ids: Iterable[int], vocab: Vocabulary) -> str:
    """pad を除いてトークンを空白で連結."""
    words = []
    for token_id in ids:
        if token_id == PAD_ID:
            continue
        if not 0 <= token_id < len(vocab):
            raise LanguageError("detokenize", str(token_id), "id outside the vocabulary")
        words.append(vocab.id_to_token[token_id])
    return " ".join(words)


def anchor_vector(sentence_feature: np.ndarray) -> np.ndarray:
    """トークン軸の最大値プーリング. 入力 (16, D) または (N, 16, D)."""
    return sentence_feature.max(axis=-2)


def anchor_backward(sentence_feature: np.ndarray, d_anchor: np.ndarray) -> np.ndarray:
    """最大値を取った位置にだけ勾配を流す（同値の場合は最初の位置）."""
    batched = sentence_feature if sentence_feature.ndim == 3 else sentence_feature[None]
    d = d_anchor if d_anchor.ndim == 2 else d_anchor[None]
    argmax = batched.argmax(axis=1)
    grad = np.zeros_like(batched)
    n_idx, d_idx = np.meshgrid(np.arange(batched.shape[0]), np.arange(batched.shape[2]), indexing="ij")
    grad[n_idx, argmax, d_idx] = d
    return grad if sentence_feature.ndim == 3 else grad[0]


@dataclass
class SentenceSpec:
    """トークン化済みの文と、その埋め込み・アンカー."""

    text: str
    tokens: list[int]
    embedding: np.ndarray  # (16, D)
    feature: np.ndarray  # (16, D)
    anchor: np.ndarray  # (D,)


class SentenceEncoder(Module):
    """単語埋め込み + 3層の1次元畳み込み（カーネル3、same、層間ReLU）.

    出力は (N, 16, D) のトークン特徴で、幅 D は全層で一定。
    """

    def __init__(self, vocab_size: int, dim: int, rng: np.random.Generator) -> None:
        self.dim = dim
        self.embedding = Embedding("embedding", vocab_size, dim, rng)
        self.conv1 = Conv1d("conv1", dim, dim, 3, rng)
        self.relu1 = ReLU("relu1")
        self.conv2 = Conv1d("conv2", dim, dim, 3, rng)
        self.relu2 = ReLU("relu2")
        self.conv3 = Conv1d("conv3", dim, dim, 3, rng)

    def children(self) -> dict[str, Module]:
        return {
            "embedding": self.embedding,
            "conv1": self.conv1,
            "conv2": self.conv2,
            "conv3": self.conv3,
        }

    def embed(self, ids: np.ndarray) -> np.ndarray:
        return self.embedding.forward(np.atleast_2d(ids))

    def encode_sentence(self, embedding: np.ndarray) -> np.ndarray:
        """(N, 16, D) または (16, D) の埋め込みを同形のトークン特徴へ."""
        batched = embedding if embedding.ndim == 3 else embedding[None]
        if batched.shape[-1] != self.dim:
            raise LanguageError(
                "SentenceEncoder", "encode_sentence",
                f"expected width {self.dim}, got {batched.shape[-1]}",
            )
        h = batched.transpose(0, 2, 1)
        h = self.relu1.forward(self.conv1.forward(h))
        h = self.relu2.forward(self.conv2.forward(h))
        h = self.conv3.forward(h)
        out = h.transpose(0, 2, 1)
        return out if embedding.ndim == 3 else out[0]

    def encode_backward(self, d_feature: np.ndarray) -> np.ndarray:
        """トークン特徴の勾配から埋め込みの勾配を返す（畳み込みの勾配は加算）."""
        batched = d_feature if d_feature.ndim == 3 else d_feature[None]
        d = batched.transpose(0, 2, 1)
        d = self.conv3.backward(d)
        d = self.conv2.backward(self.relu2.backward(d))
        d = self.conv1.backward(self.relu1.backward(d))
        out = d.transpose(0, 2, 1)
        return out if d_feature.ndim == 3 else out[0]

    def forward(self, ids: np.ndarray) -> np.ndarray:
        """ID (N, 16) → トークン特徴 (N, 16, D)."""
        return self.encode_sentence(self.embed(ids))

    def backward(self, d_feature: np.ndarray) -> None:
        d_embedding = self.encode_backward(d_feature)
        self.embedding.backward(d_embedding)

    def sentence_spec(self, text: str, vocab: Vocabulary) -> SentenceSpec:
        tokens = tokenize(text, vocab)
        embedding = self.embed(np.asarray([tokens]))[0]
        feature = self.encode_sentence(embedding)
        return SentenceSpec(
            text=text, tokens=tokens, embedding=embedding, feature=feature,
            anchor=anchor_vector(feature),
        )
