"""Bayesian combination of correlated probabilistic classifiers.

Member predictions are mapped to log-odds space against a reference class,
concatenated into one latent vector per instance, and modeled per true
label with a multivariate normal mixture fitted by Gibbs sampling under a
conjugate normal-inverse-Wishart prior. Prediction applies Bayes' rule over
the class-conditional latent densities; a diagonal variance-inflation
vector selected on held-out likelihood damps dimensions that are hard to
model. With a single member (r = 1) the same pipeline acts as a
recalibration layer for that classifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .core import ProbVector
from .errors import (
    ArityMismatchError,
    ChainDivergedError,
    ClassTooSmallError,
    DimensionMismatchError,
    DuplicateIdError,
    EmptyValidationError,
    NotPositiveDefiniteError,
)

LOG_2PI = math.log(2.0 * math.pi)
DELTA_DEFAULT = 1e-6


# ---------------------------------------------------------------------------
# frames and transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleFrame:
    """Aligned point predictions of r models over N instances.

    ``predictions`` has shape (N, r, m); model order is fixed and recorded.
    ``labels`` (class indices) are present on training/validation frames.
    """

    model_ids: tuple[str, ...]
    instance_ids: tuple[str, ...]
    predictions: np.ndarray
    labels: np.ndarray | None = None
    classes: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "model_ids", tuple(self.model_ids))
        object.__setattr__(self, "instance_ids", tuple(self.instance_ids))
        arr = np.asarray(self.predictions, dtype=float)
        if arr.ndim != 3:
            raise ValueError(f"predictions must be N x r x m, got shape {arr.shape}")
        n, r, m = arr.shape
        if len(self.model_ids) != r:
            raise ValueError(f"{len(self.model_ids)} model ids for r={r}")
        if len(self.instance_ids) != n:
            raise ValueError(f"{len(self.instance_ids)} instance ids for N={n}")
        if len(set(self.instance_ids)) != n:
            raise DuplicateIdError("instance ids in a frame must be unique")
        if m < 2:
            raise ValueError("need at least two classes")
        if n > 0:
            if not np.all(np.isfinite(arr)):
                raise ValueError("predictions contain non-finite entries")
            if np.any(arr < 0.0) or np.any(arr > 1.0):
                raise ValueError("probabilities outside [0, 1]")
            sums = arr.sum(axis=2)
            if np.any(np.abs(sums - 1.0) > 1e-6):
                raise ValueError("a prediction does not sum to 1 within 1e-6")
            arr = arr / sums[:, :, None]
        object.__setattr__(self, "predictions", arr)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=int)
            if lab.shape != (n,):
                raise ValueError(f"labels shape {lab.shape} for N={n}")
            if n > 0 and (lab.min() < 0 or lab.max() >= m):
                raise ValueError("a label is outside 0..m-1")
            object.__setattr__(self, "labels", lab)
        if self.classes is not None:
            object.__setattr__(self, "classes", tuple(self.classes))
            if len(self.classes) != m:
                raise ValueError(f"{len(self.classes)} class names for m={m}")

    @property
    def n_instances(self) -> int:
        return self.predictions.shape[0]

    @property
    def r_models(self) -> int:
        return self.predictions.shape[1]

    @property
    def m_classes(self) -> int:
        return self.predictions.shape[2]

    @property
    def latent_dim(self) -> int:
        return (self.m_classes - 1) * self.r_models

    def class_names(self) -> tuple[str, ...]:
        if self.classes is not None:
            return self.classes
        return tuple(f"class_{t}" for t in range(self.m_classes))


def logodds_transform(p, delta: float = DELTA_DEFAULT) -> np.ndarray:
    """Map one probability vector to (m-1) log-odds against the last class.

    Components are clamped to [delta, 1-delta] and the vector renormalized
    before taking logs, so the transform is total and always finite.
    """
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 0.5)")
    v = np.asarray(p.values if isinstance(p, ProbVector) else p, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("expected a probability vector of length >= 2")
    v = np.clip(v, delta, 1.0 - delta)
    v = v / v.sum()
    return np.log(v[:-1] / v[-1])


def inverse_logodds(u, m: int) -> np.ndarray:
    """Softmax with an implicit zero logit for the reference (last) class.

    Exactly inverts :func:`logodds_transform` whenever every component of
    the original vector lies inside the clamp region.
    """
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != m - 1:
        raise DimensionMismatchError(f"expected {m - 1} log-odds, got {u.shape[-1]}")
    logits = np.concatenate([u, np.zeros(u.shape[:-1] + (1,))], axis=-1)
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def merge_predictions(
    vectors: Sequence, delta: float = DELTA_DEFAULT, expected_models: int | None = None
) -> np.ndarray:
    """Concatenate the log-odds of r member predictions, model-major."""
    if expected_models is not None and len(vectors) != expected_models:
        raise ArityMismatchError(f"expected {expected_models} vectors, got {len(vectors)}")
    if len(vectors) == 0:
        raise ArityMismatchError("need at least one member prediction")
    return np.concatenate([logodds_transform(v, delta) for v in vectors])


def frame_to_latent(frame: EnsembleFrame, delta: float = DELTA_DEFAULT) -> np.ndarray:
    """Transform a whole frame to its (N, (m-1)r) latent matrix."""
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 0.5)")
    arr = np.clip(frame.predictions, delta, 1.0 - delta)
    arr = arr / arr.sum(axis=2, keepdims=True)
    u = np.log(arr[:, :, :-1] / arr[:, :, -1:])  # (N, r, m-1)
    return u.reshape(frame.n_instances, frame.latent_dim)


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

def _chol(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            f"covariance is not positive definite: {exc}"
        ) from exc


def _mvn_logpdf(x: np.ndarray, mean: np.ndarray, chol: np.ndarray) -> np.ndarray:
    """Log density of rows of x under N(mean, chol @ chol.T)."""
    x = np.atleast_2d(x)
    d = mean.shape[0]
    z = solve_triangular(chol, (x - mean).T, lower=True)
    return (
        -0.5 * d * LOG_2PI
        - np.log(np.diag(chol)).sum()
        - 0.5 * np.einsum("dn,dn->n", z, z)
    )


def _mixture_logpdf(
    x: np.ndarray, weights: np.ndarray, means: np.ndarray, chols: list[np.ndarray]
) -> np.ndarray:
    """Log of sum_k w_k N(x; mu_k, Sigma_k) for rows of x."""
    parts = np.full((len(weights), np.atleast_2d(x).shape[0]), -np.inf)
    for k, w in enumerate(weights):
        if w > 0.0:
            parts[k] = math.log(w) + _mvn_logpdf(x, means[k], chols[k])
    return logsumexp(parts, axis=0)


def mvn_mixture_density(u, weights, means, covariances) -> float:
    """Evaluate a multivariate normal mixture density at one point.

    Computed in log space through Cholesky factorizations; raises
    ``NotPositiveDefiniteError`` when a component covariance cannot be
    factorized.
    """
    u = np.asarray(u, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    means = np.atleast_2d(np.asarray(means, dtype=float))
    covs = np.asarray(covariances, dtype=float)
    if covs.ndim == 2:
        covs = covs[None, :, :]
    if means.shape[1] != u.shape[0]:
        raise DimensionMismatchError(
            f"point has dim {u.shape[0]}, means have dim {means.shape[1]}"
        )
    chols = [_chol(covs[k]) for k in range(len(weights))]
    return float(np.exp(_mixture_logpdf(u[None, :], weights, means, chols)[0]))


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassMixture:
    """Mixture weights, means and covariances for one class."""

    weights: np.ndarray      # (K,)
    means: np.ndarray        # (K, d)
    covariances: np.ndarray  # (K, d, d)


@dataclass(frozen=True)
class GibbsConfig:
    """Sampler settings and prior hyperparameters.

    ``prior_mean``, ``nu0``, ``psi0`` and ``ridge`` default to None, which
    resolves to per-class empirical values at fit time: prior mean = class
    mean, nu0 = dim + 2, Psi0 = class covariance, ridge = 1e-6 times the
    mean diagonal of the class covariance.
    """

    k_components: int = 1
    iterations: int = 2000
    burn_in: int = 1000
    thinning: int = 2
    prior_mean: np.ndarray | None = None
    kappa0: float = 0.01
    nu0: float | None = None
    psi0: np.ndarray | None = None
    alpha0: float = 1.0
    ridge: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.k_components < 1:
            raise ValueError("need at least one mixture component")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must be smaller than iterations")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.kappa0 <= 0:
            raise ValueError("kappa0 must be positive")
        if self.alpha0 <= 0:
            raise ValueError("alpha0 must be positive")
        if self.ridge is not None and self.ridge <= 0:
            raise ValueError("ridge must be positive")


@dataclass(frozen=True)
class MMParams:
    """Fitted per-class mixtures plus everything prediction needs.

    ``summary`` holds the posterior-mean point estimate per class;
    ``draws`` holds the retained Gibbs draws (per class) used for the
    Rao-Blackwellized predictive. The log-odds reference class (always the
    last class) and the clamp delta are recorded so serialized fits stay
    reproducible.
    """

    classes: tuple[str, ...]
    model_ids: tuple[str, ...]
    m: int
    r: int
    k_components: int
    delta: float
    reference_class: int
    class_counts: np.ndarray             # (m,) n_t
    gamma: np.ndarray                    # (m,) frequency priors
    inflation: np.ndarray                # (d,) variance inflation, all >= 1
    summary: tuple[ClassMixture, ...]
    draws: tuple[tuple[ClassMixture, ...], ...] | None
    prior: dict = field(default_factory=dict)

    @property
    def latent_dim(self) -> int:
        return (self.m - 1) * self.r

    def n_draws(self) -> int:
        return 0 if self.draws is None else len(self.draws[0])


@dataclass(frozen=True)
class GibbsDiagnostics:
    """Per-class observed-data log-likelihood traces and retention info."""

    log_likelihood: tuple[np.ndarray, ...]
    retained: int
    iterations: int
    burn_in: int
    thinning: int
    seed: int


# ---------------------------------------------------------------------------
# Gibbs sampler
# ---------------------------------------------------------------------------

def _sample_invwishart(rng: np.random.Generator, df: float, scale: np.ndarray) -> np.ndarray:
    """Draw from an inverse-Wishart via the Bartlett decomposition.

    Draws W ~ Wishart(df, scale^-1) and returns W^-1.
    """
    d = scale.shape[0]
    l_scale = _chol(scale)
    # factor B with B B^T = scale^-1: solve L B = I gives B = L^-1, and
    # (L^-T)(L^-T)^T = scale^-1
    inv_factor = solve_triangular(l_scale, np.eye(d), lower=True).T
    a = np.zeros((d, d))
    for i in range(d):
        a[i, i] = math.sqrt(rng.chisquare(df - i))
        for j in range(i):
            a[i, j] = rng.standard_normal()
    f = inv_factor @ a
    w = f @ f.T
    l_w = _chol(w)
    inv_l = solve_triangular(l_w, np.eye(d), lower=True)
    return inv_l.T @ inv_l


def _sample_niw(
    rng: np.random.Generator,
    data: np.ndarray,
    mu0: np.ndarray,
    kappa0: float,
    nu0: float,
    psi0: np.ndarray,
    ridge: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One posterior draw of (mean, covariance) given component data."""
    d = mu0.shape[0]
    n = data.shape[0]
    if n == 0:
        kappa_n, nu_n, mu_n, psi_n = kappa0, nu0, mu0, psi0
    else:
        xbar = data.mean(axis=0)
        centered = data - xbar
        scatter = centered.T @ centered
        kappa_n = kappa0 + n
        nu_n = nu0 + n
        mu_n = (kappa0 * mu0 + n * xbar) / kappa_n
        dev = (xbar - mu0)[:, None]
        psi_n = psi0 + scatter + (kappa0 * n / kappa_n) * (dev @ dev.T)
    cov = _sample_invwishart(rng, nu_n, psi_n)
    cov = cov + ridge * np.eye(d)
    mean = mu_n + _chol(cov).dot(rng.standard_normal(d)) / math.sqrt(kappa_n)
    return mean, cov


def _fit_class_mixture(
    data: np.ndarray, config: GibbsConfig, rng: np.random.Generator
) -> tuple[list[ClassMixture], np.ndarray]:
    """Gibbs-sample a K-component MVN mixture over one class's latent vectors.

    Returns the retained (post burn-in, thinned) draws and the per-iteration
    observed-data log-likelihood trace.
    """
    n, d = data.shape
    k_comp = config.k_components

    mu0 = (
        np.asarray(config.prior_mean, dtype=float)
        if config.prior_mean is not None
        else data.mean(axis=0)
    )
    if mu0.shape != (d,):
        raise ValueError(f"prior mean has shape {mu0.shape}, expected ({d},)")
    nu0 = float(config.nu0) if config.nu0 is not None else d + 2.0
    if nu0 <= d - 1:
        raise ValueError(f"nu0 must exceed dim - 1 = {d - 1}")
    if config.psi0 is not None:
        psi0 = np.asarray(config.psi0, dtype=float)
    else:
        centered = data - data.mean(axis=0)
        psi0 = centered.T @ centered / max(n - 1, 1)
    if config.ridge is not None:
        ridge = config.ridge
    else:
        ridge = max(1e-6 * float(np.trace(psi0)) / d, 1e-12)
    psi0 = psi0 + ridge * np.eye(d)
    _chol(psi0)  # fail fast if the prior scale is unusable

    assignments = rng.integers(0, k_comp, size=n)
    weights = np.full(k_comp, 1.0 / k_comp)
    means = np.tile(mu0, (k_comp, 1))
    covs = np.tile(psi0, (k_comp, 1, 1))

    retained: list[ClassMixture] = []
    loglik = np.empty(config.iterations)
    for it in range(config.iterations):
        # params | assignments
        counts = np.bincount(assignments, minlength=k_comp).astype(float)
        weights = rng.dirichlet(config.alpha0 + counts)
        chols = []
        for k in range(k_comp):
            member_rows = data[assignments == k]
            means[k], covs[k] = _sample_niw(
                rng, member_rows, mu0, config.kappa0, nu0, psi0, ridge
            )
            chols.append(_chol(covs[k]))

        # assignments | params
        logw = np.log(np.maximum(weights, 1e-300))
        logp = np.stack(
            [logw[k] + _mvn_logpdf(data, means[k], chols[k]) for k in range(k_comp)]
        )  # (K, n)
        if k_comp > 1:
            gumbel = rng.gumbel(size=logp.shape)
            assignments = np.argmax(logp + gumbel, axis=0)

        loglik[it] = float(logsumexp(logp, axis=0).sum())
        if not math.isfinite(loglik[it]):
            raise ChainDivergedError(f"non-finite log joint at iteration {it}")

        if it >= config.burn_in and (it - config.burn_in) % config.thinning == 0:
            retained.append(
                ClassMixture(
                    weights=weights.copy(), means=means.copy(), covariances=covs.copy()
                )
            )
    return retained, loglik


def _summarize(draws: list[ClassMixture]) -> ClassMixture:
    return ClassMixture(
        weights=np.mean([d.weights for d in draws], axis=0),
        means=np.mean([d.means for d in draws], axis=0),
        covariances=np.mean([d.covariances for d in draws], axis=0),
    )


def fit_mm(
    train: EnsembleFrame,
    config: GibbsConfig | None = None,
    delta: float = DELTA_DEFAULT,
    gamma: Sequence[float] | None = None,
    keep_draws: bool = True,
) -> tuple[MMParams, GibbsDiagnostics]:
    """Fit the class-conditional latent mixtures on a labeled frame.

    Each class is fitted independently (chains use independent spawned
    seeds, so per-class results do not depend on the other classes'
    randomness). ``gamma`` defaults to the empirical class frequencies.
    """
    config = config or GibbsConfig()
    if train.labels is None:
        raise ValueError("training frame must carry labels")
    m = train.m_classes
    d = train.latent_dim
    u_all = frame_to_latent(train, delta)

    counts = np.bincount(train.labels, minlength=m).astype(float)
    minimum = config.k_components + d + 2
    for t in range(m):
        if counts[t] < minimum:
            raise ClassTooSmallError(
                f"class {t} has {int(counts[t])} instances; "
                f"need at least K + dim + 2 = {minimum}"
            )

    if gamma is None:
        gamma_arr = counts / counts.sum()
    else:
        gamma_arr = np.asarray(gamma, dtype=float)
        if gamma_arr.shape != (m,):
            raise ValueError(f"gamma must have {m} entries")
        if np.any(gamma_arr <= 0):
            raise ValueError("gamma entries must be positive")

    seeds = np.random.SeedSequence(config.seed).spawn(m)
    per_class_draws: list[tuple[ClassMixture, ...]] = []
    traces: list[np.ndarray] = []
    for t in range(m):
        rng = np.random.default_rng(seeds[t])
        draws, trace = _fit_class_mixture(u_all[train.labels == t], config, rng)
        per_class_draws.append(tuple(draws))
        traces.append(trace)

    summary = tuple(_summarize(list(draws)) for draws in per_class_draws)
    params = MMParams(
        classes=train.class_names(),
        model_ids=train.model_ids,
        m=m,
        r=train.r_models,
        k_components=config.k_components,
        delta=delta,
        reference_class=m - 1,
        class_counts=counts,
        gamma=gamma_arr,
        inflation=np.ones(d),
        summary=summary,
        draws=tuple(per_class_draws) if keep_draws else None,
        prior={
            "kappa0": config.kappa0,
            "nu0": config.nu0,
            "psi0": None if config.psi0 is None else np.asarray(config.psi0).tolist(),
            "prior_mean": None
            if config.prior_mean is None
            else np.asarray(config.prior_mean).tolist(),
            "alpha0": config.alpha0,
            "ridge": config.ridge,
            "seed": config.seed,
        },
    )
    diagnostics = GibbsDiagnostics(
        log_likelihood=tuple(traces),
        retained=len(per_class_draws[0]),
        iterations=config.iterations,
        burn_in=config.burn_in,
        thinning=config.thinning,
        seed=config.seed,
    )
    return params, diagnostics


# ---------------------------------------------------------------------------
# prediction
# ---------------------------------------------------------------------------

def _inflate(cov: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Scale the covariance diagonal by rho (entrywise); keeps PD for rho >= 1."""
    out = cov.copy()
    idx = np.arange(cov.shape[0])
    out[idx, idx] = out[idx, idx] * rho
    return out


def _class_log_density(
    u_rows: np.ndarray, mixture: ClassMixture, rho: np.ndarray
) -> np.ndarray:
    chols = [_chol(_inflate(mixture.covariances[k], rho)) for k in range(len(mixture.weights))]
    return _mixture_logpdf(u_rows, mixture.weights, mixture.means, chols)


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def mm_predict_batch(
    u_rows: np.ndarray, params: MMParams, use_draws: bool = True
) -> np.ndarray:
    """Posterior class probabilities for a batch of latent vectors.

    Component t is proportional to p(u | theta_t) * gamma_t * n_t, summed
    over classes in the normalizer and computed in log space with the
    max-subtraction trick. When Gibbs draws are retained the predictive is
    the average of the per-draw predictive vectors.
    """
    u_rows = np.atleast_2d(np.asarray(u_rows, dtype=float))
    if u_rows.shape[1] != params.latent_dim:
        raise DimensionMismatchError(
            f"latent dim {u_rows.shape[1]} does not match fitted {params.latent_dim}"
        )
    log_prior = np.log(params.gamma * params.class_counts)

    if use_draws and params.draws is not None and params.n_draws() > 0:
        acc = np.zeros((u_rows.shape[0], params.m))
        n_draws = params.n_draws()
        for s in range(n_draws):
            logd = np.stack(
                [
                    _class_log_density(u_rows, params.draws[t][s], params.inflation)
                    for t in range(params.m)
                ],
                axis=1,
            )
            acc += _softmax_rows(logd + log_prior[None, :])
        return acc / n_draws

    logd = np.stack(
        [
            _class_log_density(u_rows, params.summary[t], params.inflation)
            for t in range(params.m)
        ],
        axis=1,
    )
    return _softmax_rows(logd + log_prior[None, :])


def mm_predict(u_star, params: MMParams, use_draws: bool = True) -> ProbVector:
    """Posterior class probabilities for one latent vector."""
    u = np.asarray(u_star, dtype=float).ravel()
    probs = mm_predict_batch(u[None, :], params, use_draws=use_draws)[0]
    return ProbVector(tuple(float(x) for x in probs))


def predict_frame(
    frame: EnsembleFrame, params: MMParams, use_draws: bool = True
) -> np.ndarray:
    """Transform a frame with the fitted delta and predict every row."""
    if frame.r_models != params.r or frame.m_classes != params.m:
        raise DimensionMismatchError(
            f"frame is r={frame.r_models}, m={frame.m_classes}; "
            f"params fitted with r={params.r}, m={params.m}"
        )
    return mm_predict_batch(frame_to_latent(frame, params.delta), params, use_draws)


# ---------------------------------------------------------------------------
# regularization and calibration
# ---------------------------------------------------------------------------

def _validation_loglik(
    u_rows: np.ndarray, labels: np.ndarray, params: MMParams, rho: np.ndarray
) -> float:
    logd = np.stack(
        [_class_log_density(u_rows, params.summary[t], rho) for t in range(params.m)],
        axis=1,
    )
    logits = logd + np.log(params.gamma * params.class_counts)[None, :]
    log_post = logits - logsumexp(logits, axis=1, keepdims=True)
    return float(log_post[np.arange(len(labels)), labels].sum())


def select_regularization(
    params: MMParams, validation: EnsembleFrame, grid: Sequence[float] = (1.0, 2.0, 5.0, 10.0)
) -> MMParams:
    """Choose a per-dimension variance inflation on held-out log-likelihood.

    One greedy pass in fixed dimension order: for each latent dimension j
    the grid value maximizing the validation predictive log-likelihood
    (with the covariance diagonal at j multiplied by rho_j) is kept. The
    search scores the posterior-mean summary; ties prefer the smallest
    inflation. Returns a copy of ``params`` with the selected vector set.
    """
    if validation.n_instances == 0:
        raise EmptyValidationError("validation frame has no rows")
    if validation.labels is None:
        raise ValueError("validation frame must carry labels")
    grid_vals = sorted(float(g) for g in grid)
    if 1.0 not in grid_vals:
        raise ValueError("grid must contain 1.0")
    if any(g < 1.0 for g in grid_vals):
        raise ValueError("inflation factors must be >= 1")

    u_rows = frame_to_latent(validation, params.delta)
    if u_rows.shape[1] != params.latent_dim:
        raise DimensionMismatchError(
            f"validation latent dim {u_rows.shape[1]} != fitted {params.latent_dim}"
        )
    labels = validation.labels

    rho = np.ones(params.latent_dim)
    for j in range(params.latent_dim):
        best_g, best_ll = None, -np.inf
        for g in grid_vals:
            candidate = rho.copy()
            candidate[j] = g
            ll = _validation_loglik(u_rows, labels, params, candidate)
            if ll > best_ll:
                best_g, best_ll = g, ll
        rho[j] = best_g
    return replace(params, inflation=rho)


def calibrate_single_model(
    frame: EnsembleFrame,
    config: GibbsConfig | None = None,
    delta: float = DELTA_DEFAULT,
    gamma: Sequence[float] | None = None,
) -> MMParams:
    """Learn a single classifier's latent distribution for recalibration.

    Identical pipeline with r = 1; the fitted predictive probabilities act
    as the recalibrated outputs of that classifier.
    """
    if frame.r_models != 1:
        raise ArityMismatchError(
            f"calibration takes a single-model frame (r=1), got r={frame.r_models}"
        )
    params, _ = fit_mm(frame, config, delta=delta, gamma=gamma)
    return params
