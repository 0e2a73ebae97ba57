"""Dictionary-learning topic model over entry and challenge text.

Each text is encoded as the mean of its word vectors; dot products with the
rows of a dictionary matrix, softmaxed, give the topic distribution, and the
weighted row average reconstructs the input. Training minimizes a contrastive
hinge against sampled negatives plus an orthogonality penalty on normalized
rows. Topics are read out through nearest lexicon words, and story arcs
through argmax-topic transitions between a character's consecutive entries.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

import numpy as np

from .dataset import Story
from .textproc import TokenizerMode, TokenSequence, tokenize

logger = logging.getLogger(__name__)


class TopicModelError(Exception):
    pass


class NoKnownTokens(TopicModelError):
    """No token of the text appears in the lexicon."""


class DimensionMismatch(TopicModelError):
    pass


class ZeroVector(TopicModelError):
    """Cannot unit-normalize an all-zero vector."""


class TooFewDocuments(TopicModelError):
    pass


class RowOutOfRange(TopicModelError):
    pass


@dataclass
class EmbeddingLexicon:
    """word -> vector lookup; keys are lowercased at load time."""

    vectors: dict[str, np.ndarray]
    width: int

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __getitem__(self, word: str) -> np.ndarray:
        return self.vectors[word]

    def __len__(self) -> int:
        return len(self.vectors)


def lexicon_from_pairs(pairs) -> EmbeddingLexicon:
    vectors: dict[str, np.ndarray] = {}
    width = None
    for word, vec in pairs:
        vec = np.asarray(vec, dtype=np.float64)
        if width is None:
            width = vec.shape[0]
        elif vec.shape[0] != width:
            raise DimensionMismatch(f"vector width {vec.shape[0]} != {width} for {word!r}")
        vectors.setdefault(word.lower(), vec)  # first occurrence wins
    if width is None:
        raise ValueError("empty lexicon")
    return EmbeddingLexicon(vectors, width)


def load_lexicon(path) -> EmbeddingLexicon:
    """Read a text lexicon: one ``word v1 v2 ... vd`` per line."""
    def pairs():
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                parts = line.rstrip("\n").split(" ")
                if len(parts) < 2:
                    continue
                yield parts[0], [float(v) for v in parts[1:]]

    return lexicon_from_pairs(pairs())


@dataclass(frozen=True)
class DictionaryMatrix:
    """K x d matrix; each row is a vector representation of one topic."""

    rows: np.ndarray

    @property
    def k(self) -> int:
        return self.rows.shape[0]

    @property
    def width(self) -> int:
        return self.rows.shape[1]


def save_dictionary(model: DictionaryMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{model.k} {model.width}\n")
        for row in model.rows:
            handle.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_dictionary(path) -> DictionaryMatrix:
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().split()
        k, width = int(header[0]), int(header[1])
        rows = np.array(
            [[float(v) for v in handle.readline().split()] for _ in range(k)], dtype=np.float64
        )
    if rows.shape != (k, width):
        raise DimensionMismatch("model file header disagrees with row data")
    return DictionaryMatrix(rows)


@dataclass(frozen=True)
class TopicModelConfig:
    topics: int = 50
    margin: float = 1.0
    negatives: int = 5
    ortho_weight: float = 1e-3
    learning_rate: float = 0.01
    epochs: int = 30
    seed: int = 13

    def __post_init__(self):
        if min(self.topics, self.negatives) < 1 or self.margin <= 0:
            raise ValueError("topics, negatives, and margin must be positive")
        if self.learning_rate <= 0 or self.epochs < 0 or self.ortho_weight < 0:
            raise ValueError("bad optimizer settings")


def encode_text(tokens: TokenSequence, lexicon: EmbeddingLexicon) -> np.ndarray:
    """Mean of the vectors of in-lexicon tokens; unknown tokens are skipped."""
    found = [lexicon[tok] for tok in tokens if tok in lexicon]
    if not found:
        raise NoKnownTokens("no token of the text is in the lexicon")
    return np.mean(found, axis=0)


def topic_weights(x: np.ndarray, dictionary: DictionaryMatrix) -> np.ndarray:
    """Softmax over row-wise dot products; positive and sums to one."""
    if x.shape[0] != dictionary.width:
        raise DimensionMismatch(f"vector width {x.shape[0]} != dictionary width {dictionary.width}")
    logits = dictionary.rows @ x
    logits = logits - logits.max()
    exp = np.exp(logits)
    return exp / exp.sum()


def reconstruct(weights: np.ndarray, dictionary: DictionaryMatrix) -> np.ndarray:
    """Convex combination of dictionary rows under the given weights."""
    if weights.shape[0] != dictionary.k:
        raise DimensionMismatch(f"{weights.shape[0]} weights for {dictionary.k} topics")
    return dictionary.rows.T @ weights


def _unit(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ZeroVector("cannot normalize a zero vector")
    return v / norm


def _row_normalized(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ZeroVector("dictionary contains a zero row")
    return rows / norms


def loss(
    x: np.ndarray,
    negatives: list[np.ndarray],
    dictionary: DictionaryMatrix,
    config: TopicModelConfig,
) -> float:
    """Contrastive hinge plus orthogonality penalty for one document."""
    if not negatives:
        raise ValueError("need at least one negative sample")
    x_hat = _unit(x)
    r = reconstruct(topic_weights(x_hat, dictionary), dictionary)
    hinge = 0.0
    for neg in negatives:
        n_hat = _unit(neg)
        hinge += max(0.0, config.margin - float(r @ x_hat) + float(r @ n_hat))
    normalized = _row_normalized(dictionary.rows)
    gram = normalized @ normalized.T - np.eye(dictionary.k)
    return hinge + config.ortho_weight * float(np.sum(gram * gram))


def loss_gradient(
    x: np.ndarray,
    negatives: list[np.ndarray],
    dictionary: DictionaryMatrix,
    config: TopicModelConfig,
) -> np.ndarray:
    """Analytic gradient of :func:`loss` with respect to the dictionary rows."""
    rows = dictionary.rows
    k = dictionary.k
    x_hat = _unit(x)
    weights = topic_weights(x_hat, dictionary)
    r = rows.T @ weights

    # d hinge / d r accumulated over active negatives
    g = np.zeros_like(x_hat)
    for neg in negatives:
        n_hat = _unit(neg)
        if config.margin - float(r @ x_hat) + float(r @ n_hat) > 0:
            g += n_hat - x_hat

    grad = np.outer(weights, g)  # r = R^T w, direct path
    u = rows @ g  # path through the softmax weights
    dz = weights * u - weights * float(weights @ u)
    grad += np.outer(dz, x_hat)

    # orthogonality penalty on row-normalized rows
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ZeroVector("dictionary contains a zero row")
    normalized = rows / norms
    gram = normalized @ normalized.T - np.eye(k)
    d_norm = 4.0 * config.ortho_weight * (gram @ normalized)
    for i in range(k):
        row_hat = normalized[i]
        grad[i] += (d_norm[i] - row_hat * float(d_norm[i] @ row_hat)) / norms[i, 0]
    return grad


def initial_dictionary(config: TopicModelConfig, width: int) -> DictionaryMatrix:
    """Seeded unit-scaled random rows."""
    rng = np.random.default_rng(config.seed)
    rows = rng.standard_normal((config.topics, width))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return DictionaryMatrix(rows)


@dataclass(frozen=True)
class TrainResult:
    dictionary: DictionaryMatrix
    epoch_losses: tuple[float, ...]


def train(
    documents: list[TokenSequence],
    lexicon: EmbeddingLexicon,
    config: TopicModelConfig | None = None,
) -> TrainResult:
    """SGD over documents with per-document negative sampling, fully seeded."""
    config = config or TopicModelConfig()
    encoded: list[np.ndarray] = []
    skipped = 0
    for doc in documents:
        try:
            encoded.append(encode_text(doc, lexicon))
        except NoKnownTokens:
            skipped += 1
    if skipped:
        logger.info("skipped %d documents with no lexicon tokens", skipped)
    if len(encoded) < config.topics:
        raise TooFewDocuments(f"need at least {config.topics} encodable documents, got {len(encoded)}")

    dictionary = initial_dictionary(config, lexicon.width)
    rows = dictionary.rows.copy()
    order_rng = random.Random(config.seed)
    sample_rng = random.Random(config.seed + 1)
    n = len(encoded)
    losses = []
    for epoch in range(config.epochs):
        order = list(range(n))
        order_rng.shuffle(order)
        epoch_loss = 0.0
        for doc_index in order:
            x = encoded[doc_index]
            negatives = [
                encoded[sample_rng.randrange(n)] for _ in range(config.negatives)
            ]
            current = DictionaryMatrix(rows)
            epoch_loss += loss(x, negatives, current, config)
            rows = rows - config.learning_rate * loss_gradient(x, negatives, current, config)
        losses.append(epoch_loss / n)
        logger.info("epoch %d mean loss %.6f", epoch, losses[-1])
    return TrainResult(DictionaryMatrix(rows), tuple(losses))


def nearest_words(
    dictionary: DictionaryMatrix, row_index: int, lexicon: EmbeddingLexicon, k: int
) -> list[str]:
    """Top-k lexicon words by cosine similarity to a topic row, ties lexicographic."""
    if not 0 <= row_index < dictionary.k:
        raise RowOutOfRange(f"row {row_index} outside dictionary of {dictionary.k}")
    if k < 1:
        raise ValueError("k must be >= 1")
    row = dictionary.rows[row_index]
    row_norm = np.linalg.norm(row)

    def cosine(vec: np.ndarray) -> float:
        denom = row_norm * np.linalg.norm(vec)
        return float(row @ vec / denom) if denom else 0.0

    ranked = sorted(lexicon.vectors.items(), key=lambda kv: (-cosine(kv[1]), kv[0]))
    return [word for word, _ in ranked[:k]]


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic argmax-topic transitions; rows without observations are flagged."""

    probabilities: np.ndarray
    row_counts: np.ndarray

    def empty_rows(self) -> np.ndarray:
        return self.row_counts == 0

    def records(self) -> list[dict]:
        out = []
        k = self.probabilities.shape[0]
        for i in range(k):
            if self.row_counts[i] == 0:
                continue
            for j in range(k):
                p = float(self.probabilities[i, j])
                if p > 0:
                    out.append({"from": i, "to": j, "probability": p})
        return out


def world_topic_importance(
    stories: list[Story], dictionary: DictionaryMatrix, lexicon: EmbeddingLexicon
) -> dict[str, np.ndarray]:
    """Per-world topic salience: mean topic weight within the world minus the
    overall mean. A reconstruction; "relative importance" has no canonical
    definition. Stories without a world label are counted in the overall mean
    only; entries with no lexicon tokens are skipped.
    """
    all_weights: list[np.ndarray] = []
    by_world: dict[str, list[np.ndarray]] = {}
    for story in stories:
        for scene in story.scenes:
            for entry in scene.entries:
                try:
                    x = encode_text(tokenize(entry.text, TokenizerMode.METRIC), lexicon)
                except NoKnownTokens:
                    continue
                weights = topic_weights(x, dictionary)
                all_weights.append(weights)
                if story.world is not None:
                    by_world.setdefault(story.world, []).append(weights)
    if not all_weights:
        return {}
    overall = np.mean(all_weights, axis=0)
    return {world: np.mean(stack, axis=0) - overall for world, stack in by_world.items()}


def transition_matrix(
    stories: list[Story], dictionary: DictionaryMatrix, lexicon: EmbeddingLexicon
) -> TransitionMatrix:
    """Count argmax-topic transitions between a character's consecutive entries.

    Pairs are formed within one character's entry sequence (story order) and
    only across scene boundaries; entries with no lexicon tokens are skipped.
    """
    k = dictionary.k
    counts = np.zeros((k, k), dtype=np.float64)
    for story in stories:
        sequences: dict[str, list[tuple[int, int]]] = {}
        for scene_index, scene in enumerate(story.scenes):
            for entry in scene.entries:
                if entry.is_narrator:
                    continue
                try:
                    x = encode_text(tokenize(entry.text, TokenizerMode.METRIC), lexicon)
                except NoKnownTokens:
                    continue
                topic = int(np.argmax(topic_weights(x, dictionary)))
                sequences.setdefault(entry.character_id, []).append((scene_index, topic))
        for seq in sequences.values():
            for (scene_a, topic_a), (scene_b, topic_b) in zip(seq, seq[1:]):
                if scene_a != scene_b:
                    counts[topic_a, topic_b] += 1

    row_counts = counts.sum(axis=1)
    probabilities = np.zeros_like(counts)
    for i in range(k):
        if row_counts[i] > 0:
            probabilities[i] = counts[i] / row_counts[i]
    return TransitionMatrix(probabilities=probabilities, row_counts=row_counts)
