"""Synthetic fixtures with known ground truth.

Two generators live here: labeled ensemble predictions drawn from a known
class-conditional MVN mixture in log-odds space (plus the exact Bayes
posterior that any fitted combiner should approach), and a token-soup text
task whose per-instance ambiguity and injected label flips are known to the
harness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, Instance, LabelSpace
from .errors import DimensionMismatchError, InvalidSpecError, NotPositiveDefiniteError
from .mm import EnsembleFrame, _chol, _mixture_logpdf, inverse_logodds


@dataclass(frozen=True)
class GeneratorSpec:
    """Ground-truth mixture parameters for synthetic ensemble predictions.

    Per class t: mixture weights (K,), means (K, d) and covariances
    (K, d, d) with d = (m-1) * r. ``class_probs`` is the label marginal.
    """

    m: int
    r: int
    k_components: int
    class_probs: np.ndarray    # (m,)
    weights: np.ndarray        # (m, K)
    means: np.ndarray          # (m, K, d)
    covariances: np.ndarray    # (m, K, d, d)
    n: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "class_probs", np.asarray(self.class_probs, float))
        object.__setattr__(self, "weights", np.asarray(self.weights, float))
        object.__setattr__(self, "means", np.asarray(self.means, float))
        object.__setattr__(self, "covariances", np.asarray(self.covariances, float))
        d = (self.m - 1) * self.r
        if self.m < 2 or self.r < 1 or self.k_components < 1 or self.n < 1:
            raise InvalidSpecError("m >= 2, r >= 1, K >= 1, n >= 1 required")
        if self.class_probs.shape != (self.m,):
            raise InvalidSpecError(f"class_probs must have {self.m} entries")
        if np.any(self.class_probs < 0) or abs(self.class_probs.sum() - 1.0) > 1e-9:
            raise InvalidSpecError("class_probs must lie on the simplex")
        if self.weights.shape != (self.m, self.k_components):
            raise InvalidSpecError("weights must be (m, K)")
        if np.any(self.weights < 0) or np.any(np.abs(self.weights.sum(axis=1) - 1) > 1e-9):
            raise InvalidSpecError("each class's weights must lie on the simplex")
        if self.means.shape != (self.m, self.k_components, d):
            raise InvalidSpecError(f"means must be (m, K, {d})")
        if self.covariances.shape != (self.m, self.k_components, d, d):
            raise InvalidSpecError(f"covariances must be (m, K, {d}, {d})")
        for t in range(self.m):
            for k in range(self.k_components):
                try:
                    _chol(self.covariances[t, k])
                except NotPositiveDefiniteError as exc:
                    raise InvalidSpecError(
                        f"covariance for class {t}, component {k} is singular"
                    ) from exc

    @property
    def latent_dim(self) -> int:
        return (self.m - 1) * self.r


def generate(spec: GeneratorSpec) -> EnsembleFrame:
    """Draw a labeled frame from the spec's mixture; deterministic under seed."""
    rng = np.random.default_rng(spec.seed)
    d = spec.latent_dim
    labels = rng.choice(spec.m, size=spec.n, p=spec.class_probs)
    u = np.empty((spec.n, d))
    for t in range(spec.m):
        rows = np.flatnonzero(labels == t)
        if rows.size == 0:
            continue
        comps = rng.choice(spec.k_components, size=rows.size, p=spec.weights[t])
        for k in range(spec.k_components):
            sel = rows[comps == k]
            if sel.size == 0:
                continue
            chol = _chol(spec.covariances[t, k])
            noise = rng.standard_normal((sel.size, d))
            u[sel] = spec.means[t, k] + noise @ chol.T

    blocks = u.reshape(spec.n, spec.r, spec.m - 1)
    predictions = inverse_logodds(blocks, spec.m)  # (n, r, m)
    return EnsembleFrame(
        model_ids=tuple(f"member_{j}" for j in range(spec.r)),
        instance_ids=tuple(f"inst_{i:06d}" for i in range(spec.n)),
        predictions=predictions,
        labels=labels,
    )


def oracle_posterior(u, spec: GeneratorSpec) -> np.ndarray:
    """Exact Bayes posterior over classes for one latent vector."""
    u = np.asarray(u, dtype=float).ravel()
    if u.shape[0] != spec.latent_dim:
        raise DimensionMismatchError(
            f"latent dim {u.shape[0]} does not match spec dim {spec.latent_dim}"
        )
    return oracle_posterior_batch(u[None, :], spec)[0]


def oracle_posterior_batch(u_rows: np.ndarray, spec: GeneratorSpec) -> np.ndarray:
    """Exact Bayes posterior for a batch of latent vectors, shape (N, m)."""
    u_rows = np.atleast_2d(np.asarray(u_rows, dtype=float))
    if u_rows.shape[1] != spec.latent_dim:
        raise DimensionMismatchError(
            f"latent dim {u_rows.shape[1]} does not match spec dim {spec.latent_dim}"
        )
    logd = np.empty((u_rows.shape[0], spec.m))
    for t in range(spec.m):
        chols = [_chol(spec.covariances[t, k]) for k in range(spec.k_components)]
        logd[:, t] = _mixture_logpdf(u_rows, spec.weights[t], spec.means[t], chols)
    logits = logd + np.log(spec.class_probs)[None, :]
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def preset_generator(name: str, n: int, seed: int = 0) -> GeneratorSpec:
    """Named fixture specs used by the CLI and the experiment scripts.

    The latent coordinate of a member is its log-odds of class 0 against
    the reference (last) class, so class 0 gets positive latent means.

    mirror       one symmetric member (m=2, r=1): means +1/-1, unit variance
    correlated3  three members sharing one signal: latent covariance is a
                 rank-one shared-signal block plus per-member noise
    biased3      correlated3 with member 0's log-odds shifted by +1
    """
    if name == "mirror":
        return GeneratorSpec(
            m=2, r=1, k_components=1,
            class_probs=[0.5, 0.5],
            weights=[[1.0], [1.0]],
            means=[[[1.0]], [[-1.0]]],
            covariances=[[[[1.0]]], [[[1.0]]]],
            n=n, seed=seed,
        )
    if name in ("correlated3", "biased3"):
        noise = np.array([0.81, 1.0, 1.21])
        cov = np.ones((3, 3)) + np.diag(noise)  # shared unit signal + member noise
        mean0 = np.array([1.0, 1.0, 1.0])
        mean1 = -mean0.copy()
        if name == "biased3":
            mean0[0] += 1.0
            mean1[0] += 1.0
        return GeneratorSpec(
            m=2, r=3, k_components=1,
            class_probs=[0.5, 0.5],
            weights=[[1.0], [1.0]],
            means=[[mean0], [mean1]],
            covariances=[[cov], [cov]],
            n=n, seed=seed,
        )
    raise InvalidSpecError(f"unknown preset {name!r}")


# ---------------------------------------------------------------------------
# synthetic text task
# ---------------------------------------------------------------------------

def synth_text_dataset(
    n: int,
    seed: int = 0,
    noise: float = 0.0,
    noise_model: str = "subtle",
    subtle_frac: float = 0.2,
    tokens_per_doc: int = 10,
    vocab_per_class: int = 50,
    dialect_vocab: int = 20,
    shared_vocab: int = 30,
    split_tag: str = "unsplit",
) -> tuple[Dataset, np.ndarray, np.ndarray]:
    """Two-class token-soup corpus with a hard-to-annotate subpopulation.

    Most instances are overt: their tokens come from the own-class pool
    plus a small shared pool. A ``subtle_frac`` share of instances belongs
    to a veiled-hostility subpopulation: true class hostile, but nearly
    half of their tokens come from a dialect pool that carries no overt
    class signal, so classifiers see competing evidence for them.

    Exactly round(noise * n) labels are flipped. Under the "subtle" noise
    model the flips land on the veiled subpopulation (annotators under
    time pressure miss veiled hostility), which is what makes the injected
    noise both harmful and detectable through prediction variance; the
    "uniform" model flips uniformly at random instead.

    Returns (dataset-with-observed-labels, true_labels, flip_mask).
    """
    if not 0.0 <= noise < 1.0:
        raise ValueError("noise must lie in [0, 1)")
    if noise_model not in ("subtle", "uniform"):
        raise ValueError(f"unknown noise model {noise_model!r}")
    rng = np.random.default_rng(seed)
    space = LabelSpace(classes=("calm", "hostile"), positive_class=1)

    calm_pool = [f"calm{v}" for v in range(vocab_per_class)]
    rage_pool = [f"rage{v}" for v in range(vocab_per_class)]
    dialect_pool = [f"veil{v}" for v in range(dialect_vocab)]
    shared_pool = [f"word{v}" for v in range(shared_vocab)]

    subtle = rng.random(n) < subtle_frac
    true_labels = np.where(subtle, 1, rng.integers(0, 2, size=n))
    texts = []
    for i in range(n):
        own = rage_pool if true_labels[i] == 1 else calm_pool
        toks = []
        for _ in range(tokens_per_doc):
            roll = rng.random()
            if subtle[i]:
                if roll < 0.45:
                    pool = dialect_pool
                elif roll < 0.60:
                    pool = shared_pool
                else:
                    pool = own
            else:
                pool = shared_pool if roll < 0.15 else own
            toks.append(pool[rng.integers(0, len(pool))])
        texts.append(" ".join(toks))

    flip_mask = np.zeros(n, dtype=bool)
    n_flips = int(round(noise * n))
    if n_flips > 0:
        if noise_model == "subtle":
            w = np.where(subtle, 1.0, 1e-6)
        else:
            w = np.ones(n)
        flip_idx = rng.choice(n, size=n_flips, replace=False, p=w / w.sum())
        flip_mask[flip_idx] = True

    observed = np.where(flip_mask, 1 - true_labels, true_labels)
    instances = [
        Instance(id=f"doc{i:05d}", text=texts[i], gold_label=int(observed[i]))
        for i in range(n)
    ]
    return Dataset(space, tuple(instances), split_tag), true_labels, flip_mask
