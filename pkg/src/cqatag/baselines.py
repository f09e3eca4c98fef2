"""Majority and feature-based tag prediction baselines.

The featurizer is hand-rolled so its contract is pinned: document-frequency
pruning, df-descending truncation with lexicographic ties, smoothed idf with
L2 row normalization. The per-tag binary classifiers are scikit-learn
SGDClassifier instances (logistic loss, L2 penalty), trained independently
per class so one class's weights never depend on the others.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.special import expit
from sklearn.linear_model import SGDClassifier

from .analytics import build_tag_frequency
from .corpus import DomainCorpus
from .errors import EmptyCorpusError
from .predictions import (
    SOURCE_BASELINE,
    SOURCE_MAJORITY,
    PredictionSet,
    RankedTag,
)

WEIGHTING_TFIDF = "tfidf"
WEIGHTING_COUNTS = "counts"

_TOKEN_RE = re.compile(r"[0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics, keep tokens of length >= 2."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]


def ngrams(tokens: Sequence[str], ngram_range: tuple[int, int]) -> list[str]:
    lo, hi = ngram_range
    out: list[str] = []
    for n in range(lo, hi + 1):
        out.extend(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return out


@dataclass(frozen=True)
class FeatureConfig:
    ngram_range: tuple[int, int] = (1, 2)
    min_document_frequency: float = 0.00009
    max_features: int = 200000
    weighting: str = WEIGHTING_TFIDF

    def __post_init__(self):
        if self.max_features <= 0:
            raise ValueError("max_features must be positive")
        if not 0 < self.min_document_frequency < 1:
            raise ValueError("min_document_frequency must be in (0, 1)")
        if self.weighting not in (WEIGHTING_TFIDF, WEIGHTING_COUNTS):
            raise ValueError(f"unknown weighting {self.weighting!r}")


@dataclass
class FeatureSpace:
    """Fitted vocabulary: term order, document frequencies, idf weights."""

    config: FeatureConfig
    terms: list[str]
    document_frequencies: list[int]
    n_documents: int
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.terms)}

    def idf(self) -> np.ndarray:
        # Smoothed idf: ln((1 + N) / (1 + df)) + 1.
        df = np.asarray(self.document_frequencies, dtype=np.float64)
        return np.log((1.0 + self.n_documents) / (1.0 + df)) + 1.0


def _term_counts(text: str, config: FeatureConfig) -> Counter:
    return Counter(ngrams(tokenize(text), config.ngram_range))


def featurize(texts: Sequence[str], config: FeatureConfig) -> tuple[FeatureSpace, sparse.csr_matrix]:
    """Fit a feature space on `texts` and return it with the document matrix.

    Vocabulary: n-grams pruned by minimum document frequency (a fraction of
    the corpus), then truncated to max_features by descending document
    frequency with lexicographic tie-breaking. Matrix rows align with the
    input order. tf-idf mode applies smoothed idf and L2 row normalization;
    counts mode leaves raw counts.
    """
    if not texts:
        raise EmptyCorpusError("cannot featurize an empty corpus")
    per_doc = [_term_counts(text, config) for text in texts]
    df: Counter[str] = Counter()
    for counts in per_doc:
        df.update(counts.keys())
    n = len(texts)
    min_df_count = config.min_document_frequency * n
    surviving = [t for t, c in df.items() if c >= min_df_count]
    surviving.sort(key=lambda t: (-df[t], t))
    terms = surviving[: config.max_features]
    space = FeatureSpace(
        config=config,
        terms=terms,
        document_frequencies=[df[t] for t in terms],
        n_documents=n,
    )
    return space, transform(space, texts, _per_doc=per_doc)


def transform(
    space: FeatureSpace,
    texts: Sequence[str],
    _per_doc: list[Counter] | None = None,
) -> sparse.csr_matrix:
    """Project texts onto a fitted feature space (idf from the fit corpus)."""
    per_doc = _per_doc if _per_doc is not None else [_term_counts(t, space.config) for t in texts]
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    for counts in per_doc:
        for term, count in counts.items():
            col = space.index.get(term)
            if col is not None:
                indices.append(col)
                data.append(float(count))
        indptr.append(len(indices))
    matrix = sparse.csr_matrix(
        (data, indices, indptr), shape=(len(per_doc), len(space.terms)), dtype=np.float64
    )
    matrix.sort_indices()
    if space.config.weighting == WEIGHTING_TFIDF:
        matrix = matrix.multiply(space.idf()).tocsr()
        norms = sparse.linalg.norm(matrix, axis=1)
        norms[norms == 0] = 1.0
        matrix = sparse.diags(1.0 / norms) @ matrix
        matrix = matrix.tocsr()
    return matrix


@dataclass(frozen=True)
class SgdHyperparams:
    loss: str = "log_loss"
    penalty: str = "l2"
    alpha: float = 1e-5
    epochs: int = 20
    seed: int = 0


@dataclass
class OvrModel:
    """One-vs-rest linear model: one weight vector per tag over a shared space."""

    classes: list[str]
    coef: np.ndarray  # shape (n_classes, n_features)
    intercept: np.ndarray  # shape (n_classes,)
    hyperparams: SgdHyperparams
    feature_space: FeatureSpace
    constant_classes: list[str] = field(default_factory=list)

    def decision_scores(self, matrix: sparse.csr_matrix) -> np.ndarray:
        scores = matrix @ self.coef.T + self.intercept
        return np.asarray(scores)

    def probabilities(self, matrix: sparse.csr_matrix) -> np.ndarray:
        return expit(self.decision_scores(matrix))


def train_ovr_sgd(
    matrix,
    label_sets: Sequence[Iterable[str]],
    feature_space: FeatureSpace,
    hyperparams: SgdHyperparams = SgdHyperparams(),
) -> OvrModel:
    """Train one binary logistic SGD classifier per tag.

    `matrix` is the featurized corpus (sparse csr or dense ndarray).

    Deterministic under a fixed seed: every class uses the same seeded
    shuffle schedule, so per-class weights do not depend on which other
    classes exist. A degenerate class present on every post cannot be
    fit and becomes a constant-score stub (flagged in constant_classes).
    """
    classes = sorted({tag for labels in label_sets for tag in labels})
    if not classes:
        raise EmptyCorpusError("no labels to train on")
    n_docs = matrix.shape[0]
    if len(label_sets) != n_docs:
        raise ValueError(f"{len(label_sets)} label sets for {n_docs} matrix rows")

    coef = np.zeros((len(classes), matrix.shape[1]))
    intercept = np.zeros(len(classes))
    constant = []
    membership = [set(labels) for labels in label_sets]
    for row, tag in enumerate(classes):
        y = np.fromiter((1 if tag in labels else 0 for labels in membership), dtype=np.int64, count=n_docs)
        if y.all():
            # Tag on every post: no negatives to learn from.
            constant.append(tag)
            intercept[row] = 25.0  # sigmoid(25) ~ 1.0
            continue
        clf = SGDClassifier(
            loss=hyperparams.loss,
            penalty=hyperparams.penalty,
            alpha=hyperparams.alpha,
            max_iter=hyperparams.epochs,
            tol=None,
            shuffle=True,
            random_state=hyperparams.seed,
            learning_rate="optimal",
        )
        clf.fit(matrix, y)
        coef[row] = clf.coef_[0]
        intercept[row] = clf.intercept_[0]
    return OvrModel(
        classes=classes,
        coef=coef,
        intercept=intercept,
        hyperparams=hyperparams,
        feature_space=feature_space,
        constant_classes=constant,
    )


def predict_topk(model: OvrModel, row: sparse.csr_matrix, k: int = 5, post_id: int | None = None) -> PredictionSet:
    """Rank tags for one featurized post by per-class probability."""
    probs = model.probabilities(row)[0]
    order = sorted(range(len(model.classes)), key=lambda i: (-probs[i], model.classes[i]))
    chosen = order[: max(k, 0)]
    return PredictionSet(
        post_id=post_id,
        tags=[
            RankedTag(tag=model.classes[i], score=float(probs[i]), source=SOURCE_BASELINE)
            for i in chosen
        ],
    )


def predict_topk_batch(
    model: OvrModel,
    matrix: sparse.csr_matrix,
    post_ids: Sequence[int],
    k: int = 5,
) -> list[PredictionSet]:
    probs = model.probabilities(matrix)
    out = []
    for row, post_id in enumerate(post_ids):
        p = probs[row]
        order = sorted(range(len(model.classes)), key=lambda i: (-p[i], model.classes[i]))
        chosen = order[: max(k, 0)]
        out.append(
            PredictionSet(
                post_id=post_id,
                tags=[
                    RankedTag(tag=model.classes[i], score=float(p[i]), source=SOURCE_BASELINE)
                    for i in chosen
                ],
            )
        )
    return out


def majority_predict(train_corpus: DomainCorpus, k: int = 5) -> list[str]:
    """The k most frequent training tags, ties broken lexicographically.

    Returned in rank order; predicted identically for every test post.
    Fewer than k distinct tags yields a shorter list.
    """
    freq = build_tag_frequency(train_corpus)
    if not freq.ranked:
        raise EmptyCorpusError("no training tags")
    return freq.top(k)


def majority_prediction_set(tags: Sequence[str], counts: dict[str, int], post_id: int) -> PredictionSet:
    total = max(sum(counts.values()), 1)
    return PredictionSet(
        post_id=post_id,
        tags=[
            RankedTag(tag=t, score=counts.get(t, 0) / total, source=SOURCE_MAJORITY) for t in tags
        ],
    )


# ---------------------------------------------------------------------------
# Model persistence (versioned JSON with sparse per-class weights)

MODEL_FORMAT_VERSION = 1


def save_model(model: OvrModel, path) -> None:
    classes_payload = []
    for row, tag in enumerate(model.classes):
        nz = np.nonzero(model.coef[row])[0]
        classes_payload.append(
            {
                "tag": tag,
                "indices": nz.tolist(),
                "values": model.coef[row, nz].tolist(),
                "intercept": float(model.intercept[row]),
            }
        )
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "hyperparams": {
            "loss": model.hyperparams.loss,
            "penalty": model.hyperparams.penalty,
            "alpha": model.hyperparams.alpha,
            "epochs": model.hyperparams.epochs,
            "seed": model.hyperparams.seed,
        },
        "feature_space": {
            "config": {
                "ngram_range": list(model.feature_space.config.ngram_range),
                "min_document_frequency": model.feature_space.config.min_document_frequency,
                "max_features": model.feature_space.config.max_features,
                "weighting": model.feature_space.config.weighting,
            },
            "terms": model.feature_space.terms,
            "document_frequencies": model.feature_space.document_frequencies,
            "n_documents": model.feature_space.n_documents,
            "idf_formula": "ln((1+N)/(1+df))+1, L2 row normalization",
        },
        "constant_classes": model.constant_classes,
        "classes": classes_payload,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> OvrModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    space_payload = payload["feature_space"]
    config = FeatureConfig(
        ngram_range=tuple(space_payload["config"]["ngram_range"]),
        min_document_frequency=space_payload["config"]["min_document_frequency"],
        max_features=space_payload["config"]["max_features"],
        weighting=space_payload["config"]["weighting"],
    )
    space = FeatureSpace(
        config=config,
        terms=list(space_payload["terms"]),
        document_frequencies=list(space_payload["document_frequencies"]),
        n_documents=space_payload["n_documents"],
    )
    hp = SgdHyperparams(**payload["hyperparams"])
    classes = [c["tag"] for c in payload["classes"]]
    coef = np.zeros((len(classes), len(space.terms)))
    intercept = np.zeros(len(classes))
    for row, entry in enumerate(payload["classes"]):
        coef[row, entry["indices"]] = entry["values"]
        intercept[row] = entry["intercept"]
    return OvrModel(
        classes=classes,
        coef=coef,
        intercept=intercept,
        hyperparams=hp,
        feature_space=space,
        constant_classes=list(payload["constant_classes"]),
    )
