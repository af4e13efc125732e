"""Lightweight bag-of-words text classifiers and a bootstrap wrapper.

These are the in-repo probabilistic ensemble members and the stochastic
predictor used by triage and cleaning at desk scale: the bootstrap
resampling distribution over predictions plays the role that dropout
sampling plays for large neural models.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Dataset, ProbVector, validate_prob_vector
from .errors import EmptyVocabularyError, SingleClassTrainingError
from .triage import SampleMatrix

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, emit unigrams + bigrams."""
    words = _TOKEN_RE.findall(text.lower())
    return words + [f"{a} {b}" for a, b in zip(words, words[1:])]


@dataclass(frozen=True)
class Hyperparams:
    nb_alpha: float = 1.0    # add-alpha smoothing
    lr_l2: float = 1e-3
    lr_epochs: int = 500
    lr_step: float = 0.1


@dataclass(frozen=True)
class BowModel:
    """A trained bag-of-words classifier with probabilistic outputs."""

    kind: str
    vocabulary: dict[str, int]
    weights: np.ndarray          # NB: (m, V) token log-likelihoods; LR: (m, V+1) incl. bias
    class_log_prior: np.ndarray  # (m,)
    priors: np.ndarray           # (m,) empirical class frequencies
    m: int
    hyperparams: Hyperparams
    seed: int

    def _count_row(self, text: str) -> np.ndarray:
        row = np.zeros(len(self.vocabulary))
        for tok in tokenize(text):
            col = self.vocabulary.get(tok)
            if col is not None:
                row[col] += 1.0
        return row


def _count_matrix(texts, vocabulary) -> np.ndarray:
    X = np.zeros((len(texts), len(vocabulary)))
    for i, text in enumerate(texts):
        for tok in tokenize(text):
            col = vocabulary.get(tok)
            if col is not None:
                X[i, col] += 1.0
    return X


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _fit_arrays(
    texts: Sequence[str],
    labels: np.ndarray,
    m: int,
    kind: str,
    hp: Hyperparams,
    seed: int,
) -> BowModel:
    if len(np.unique(labels)) < 2:
        raise SingleClassTrainingError(
            f"training data covers {len(np.unique(labels))} class(es); need at least 2"
        )
    vocabulary: dict[str, int] = {}
    for text in texts:
        for tok in tokenize(text):
            if tok not in vocabulary:
                vocabulary[tok] = len(vocabulary)
    if not vocabulary:
        raise EmptyVocabularyError("no tokens in training corpus")

    X = _count_matrix(texts, vocabulary)
    counts = np.bincount(labels, minlength=m).astype(float)
    priors = counts / counts.sum()
    # classes absent from a resample keep a tiny floor instead of -inf
    class_log_prior = np.log(np.maximum(priors, 1e-12))

    if kind == "naive_bayes":
        token_counts = np.zeros((m, len(vocabulary)))
        for t in range(m):
            token_counts[t] = X[labels == t].sum(axis=0)
        smoothed = token_counts + hp.nb_alpha
        weights = np.log(smoothed / smoothed.sum(axis=1, keepdims=True))
    else:
        Xb = np.hstack([X, np.ones((X.shape[0], 1))])
        W = np.zeros((m, Xb.shape[1]))
        Y = np.zeros((len(labels), m))
        Y[np.arange(len(labels)), labels] = 1.0
        for _ in range(hp.lr_epochs):
            P = _softmax_rows(Xb @ W.T)
            grad = (P - Y).T @ Xb / len(labels) + hp.lr_l2 * W
            W -= hp.lr_step * grad
        weights = W

    return BowModel(
        kind=kind,
        vocabulary=vocabulary,
        weights=weights,
        class_log_prior=class_log_prior,
        priors=priors,
        m=m,
        hyperparams=hp,
        seed=seed,
    )


def train_baseline(
    train: Dataset,
    kind: str,
    hyperparams: Hyperparams | None = None,
    seed: int = 0,
) -> BowModel:
    """Train a naive Bayes or logistic regression model on gold labels.

    Naive Bayes uses add-1 smoothing; logistic regression is full-batch
    gradient descent on the softmax cross-entropy with a small L2 penalty,
    deterministic from its zero initialization.
    """
    if kind not in ("naive_bayes", "logistic_regression"):
        raise ValueError(f"unknown baseline kind {kind!r}")
    labeled = train.labeled()
    texts = [inst.text for inst in labeled]
    labels = np.array([inst.gold_label for inst in labeled], dtype=int)
    return _fit_arrays(
        texts, labels, train.label_space.m, kind, hyperparams or Hyperparams(), seed
    )


def predict_proba(model: BowModel, texts) -> list[ProbVector]:
    """Class probabilities per text; unknown tokens are ignored.

    Texts with no in-vocabulary token (including empty strings) fall back
    to the empirical class priors.
    """
    out = []
    for text in texts:
        row = model._count_row(text)
        if row.sum() == 0:
            out.append(validate_prob_vector(model.priors, model.m, tol=1e-9))
            continue
        if model.kind == "naive_bayes":
            scores = model.class_log_prior + model.weights @ row
        else:
            scores = model.weights @ np.append(row, 1.0)
        probs = _softmax_rows(scores[None, :])[0]
        out.append(validate_prob_vector(probs, model.m, tol=1e-9))
    return out


def _stratified_bootstrap(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Resample indices with replacement, preserving per-class counts exactly."""
    chosen = []
    for t in np.unique(labels):
        members = np.flatnonzero(labels == t)
        chosen.append(rng.choice(members, size=len(members), replace=True))
    return np.concatenate(chosen)


def bootstrap_sample_predictions(
    train: Dataset,
    kind: str,
    texts: Sequence[str],
    t_samples: int,
    seed: int = 0,
    instance_ids: Sequence[str] | None = None,
    hyperparams: Hyperparams | None = None,
) -> SampleMatrix:
    """Train T models on stratified bootstrap resamples; record all predictions.

    Each resample draws, per class, n_t instances with replacement from that
    class, so class counts are preserved exactly. Per-fit seeds derive as
    seed + fit index; the result is bit-identical across runs with one seed.
    """
    if t_samples < 1:
        raise ValueError("need at least one bootstrap sample (T >= 1)")
    hp = hyperparams or Hyperparams()
    labeled = train.labeled()
    all_texts = [inst.text for inst in labeled]
    labels = np.array([inst.gold_label for inst in labeled], dtype=int)
    m = train.label_space.m

    stacks = np.empty((len(texts), t_samples, m))
    for t_index in range(t_samples):
        rng = np.random.default_rng(seed + t_index)
        idx = _stratified_bootstrap(labels, rng)
        model = _fit_arrays(
            [all_texts[i] for i in idx], labels[idx], m, kind, hp, seed + t_index
        )
        for i, vec in enumerate(predict_proba(model, texts)):
            stacks[i, t_index, :] = vec.values

    if instance_ids is None:
        instance_ids = [f"q{i:06d}" for i in range(len(texts))]
    return SampleMatrix(
        model_id=f"bootstrap-{kind}-s{seed}",
        instance_ids=tuple(instance_ids),
        samples=stacks,
    )


def bootstrap_predictor(kind: str, hyperparams: Hyperparams | None = None):
    """Adapt a baseline kind to the StochasticPredictor protocol."""

    def predictor(train: Dataset, texts, t_samples: int, seed: int) -> SampleMatrix:
        return bootstrap_sample_predictions(
            train, kind, texts, t_samples, seed, hyperparams=hyperparams
        )

    return predictor
