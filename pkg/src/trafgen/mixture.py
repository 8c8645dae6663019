"""Gaussian mixture core: EM fitting, low-rank covariances, conditioning, sampling.

Covariances are stored factored as ``F F^T + noise_var I`` so a trained model
stays cheap to hold and sample after per-component rank compression. EM
itself runs full covariance; compression is applied afterwards.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.special import logsumexp

from ._cluster import kmeans
from .errors import DataError, NumericalError

MODEL_FORMAT = "trafgen-mixture/1"

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class GaussianComponent:
    """One mixture component with covariance ``cov_factor cov_factor^T + noise_var I``."""

    weight: float
    mean: np.ndarray        # (n,)
    cov_factor: np.ndarray  # (n, k)
    noise_var: float = 0.0

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov_factor = np.asarray(self.cov_factor, dtype=float)
        if self.cov_factor.ndim != 2 or self.cov_factor.shape[0] != self.mean.shape[0]:
            raise ValueError("cov_factor must be (n, k) with n = len(mean)")
        if not 0.0 <= self.weight <= 1.0 + 1e-12:
            raise ValueError(f"weight {self.weight} outside [0, 1]")
        if self.noise_var < 0.0:
            raise ValueError("noise_var must be nonnegative")

    @property
    def dimension(self) -> int:
        return self.mean.shape[0]

    def covariance(self) -> np.ndarray:
        n = self.dimension
        return self.cov_factor @ self.cov_factor.T + self.noise_var * np.eye(n)


@dataclass
class MixtureModel:
    components: list[GaussianComponent]
    segment_kind: str = "generic"

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("a mixture needs at least one component")
        dims = {c.dimension for c in self.components}
        if len(dims) != 1:
            raise ValueError(f"components disagree on dimension: {sorted(dims)}")
        total = sum(c.weight for c in self.components)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total!r}, expected 1")

    @property
    def dimension(self) -> int:
        return self.components[0].dimension

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    def means(self) -> np.ndarray:
        return np.stack([c.mean for c in self.components])


# ---------------------------------------------------------------------------
# Linear-algebra helpers

def psd_jitter_cholesky(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, escalating diagonal jitter instead of inverting.

    Jitter scales with trace(cov)/n and escalates 1e-10 -> 1e-6; failure
    past the largest jitter raises NumericalError.
    """
    n = cov.shape[0]
    scale = max(float(np.trace(cov)) / n, np.finfo(float).tiny)
    for jitter in (0.0, 1e-10, 1e-8, 1e-6):
        try:
            return cholesky(cov + jitter * scale * np.eye(n), lower=True)
        except np.linalg.LinAlgError:
            continue
    raise NumericalError("covariance is not positive definite after max jitter")


def psd_factor(cov: np.ndarray) -> np.ndarray:
    """Any F with F F^T = cov (PSD projection): Cholesky, else eigh with clipping."""
    try:
        return psd_jitter_cholesky(cov)
    except NumericalError:
        eigvals, eigvecs = np.linalg.eigh((cov + cov.T) / 2.0)
        return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def _component_log_density(data: np.ndarray, mean: np.ndarray,
                           chol_lower: np.ndarray) -> np.ndarray:
    """Gaussian log density of each row given a precomputed Cholesky factor."""
    solved = solve_triangular(chol_lower, (data - mean).T, lower=True)
    log_det = np.sum(np.log(np.diag(chol_lower)))
    n = mean.shape[0]
    with np.errstate(over="ignore"):
        maha = np.sum(solved ** 2, axis=0)
    return -0.5 * (n * _LOG_2PI + maha) - log_det


def _log_densities(model: MixtureModel, data: np.ndarray) -> np.ndarray:
    """(m, K) matrix of log(pi_j) + log N(x_i | mu_j, Sigma_j)."""
    out = np.empty((data.shape[0], len(model.components)))
    for j, comp in enumerate(model.components):
        chol_l = psd_jitter_cholesky(comp.covariance())
        with np.errstate(divide="ignore"):
            out[:, j] = np.log(comp.weight) + _component_log_density(
                data, comp.mean, chol_l)
    return out


def log_likelihood(model: MixtureModel, data: np.ndarray) -> float:
    """Total log-likelihood of the rows of ``data`` under the mixture."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != model.dimension:
        raise ValueError(
            f"data has dimension {data.shape}, model expects (m, {model.dimension})")
    return float(logsumexp(_log_densities(model, data), axis=1).sum())


# ---------------------------------------------------------------------------
# EM fitting

@dataclass
class EMFit:
    model: MixtureModel
    responsibilities: np.ndarray  # (m, K)
    labels: np.ndarray            # (m,) argmax responsibility
    log_likelihoods: list[float]  # one entry per EM iteration

    @property
    def converged(self) -> bool:
        return len(self.log_likelihoods) >= 2


def em_fit(data: np.ndarray, n_components: int, *,
           max_iter: int = 200, tol: float = 1e-6,
           seed: int | np.random.Generator = 0,
           reg: float | None = None,
           segment_kind: str = "generic") -> EMFit:
    """Fit a full-covariance Gaussian mixture with EM.

    Initialization is k-means++ on the data; every M-step adds ``reg * I``
    (default 1e-6 times the mean data variance) to each covariance. Stops on
    relative log-likelihood improvement below ``tol`` or after ``max_iter``.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be a 2-D matrix")
    m, n = data.shape
    if n_components < 1:
        raise ValueError("n_components must be >= 1")
    if m < n_components:
        raise ValueError(f"need at least {n_components} rows, got {m}")
    if not np.all(np.isfinite(data)):
        raise ValueError("data contains non-finite values")
    rng = np.random.default_rng(seed)
    if reg is None:
        reg = 1e-6 * float(np.mean(np.var(data, axis=0)))
    reg = max(reg, 1e-12)

    km = kmeans(data, n_components, rng, restarts=1, max_iter=50)
    resp = np.zeros((m, n_components))
    resp[np.arange(m), km.labels] = 1.0
    # guard against empty k-means clusters: give them a uniform sliver
    empty = resp.sum(axis=0) == 0
    if empty.any():
        resp[:, empty] = 1e-6
        resp /= resp.sum(axis=1, keepdims=True)
    weights, means, covs = _m_step(data, resp, reg)

    history: list[float] = []
    for it in range(max_iter):
        log_dens = np.empty((m, n_components))
        for j in range(n_components):
            chol_l = psd_jitter_cholesky(covs[j])
            with np.errstate(divide="ignore"):
                log_dens[:, j] = np.log(weights[j]) + _component_log_density(
                    data, means[j], chol_l)
        log_norm = logsumexp(log_dens, axis=1)
        ll = float(log_norm.sum())
        resp = np.exp(log_dens - log_norm[:, None])
        history.append(ll)
        if len(history) > 1 and ll - history[-2] < tol * abs(history[-2]):
            break
        if it < max_iter - 1:
            # keep the returned parameters consistent with the last E-step
            weights, means, covs = _m_step(data, resp, reg)

    components = [
        GaussianComponent(weight=float(weights[j]), mean=means[j],
                          cov_factor=psd_factor(covs[j]), noise_var=0.0)
        for j in range(n_components)
    ]
    # weights can drift from 1 by accumulated rounding; renormalize exactly
    total = sum(c.weight for c in components)
    for c in components:
        c.weight /= total
    model = MixtureModel(components=components, segment_kind=segment_kind)
    return EMFit(model=model, responsibilities=resp,
                 labels=resp.argmax(axis=1), log_likelihoods=history)


def _m_step(data: np.ndarray, resp: np.ndarray, reg: float,
            ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    m, n = data.shape
    counts = resp.sum(axis=0)
    counts = np.maximum(counts, 1e-300)
    weights = counts / m
    means = (resp.T @ data) / counts[:, None]
    covs = np.empty((resp.shape[1], n, n))
    for j in range(resp.shape[1]):
        centered = data - means[j]
        cov = (centered * resp[:, j:j + 1]).T @ centered / counts[j]
        covs[j] = (cov + cov.T) / 2.0 + reg * np.eye(n)
    return weights, means, covs


# ---------------------------------------------------------------------------
# Low-rank covariance approximation and PPCA

def low_rank_approx(cov: np.ndarray, rank: int) -> np.ndarray:
    """Best rank-``rank`` factor of a symmetric PSD matrix (Eckart-Young).

    Returns F of shape (n, rank) with F F^T the truncated eigendecomposition;
    eigenvalues are clipped at zero.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    if rank > n or rank < 1:
        raise ValueError(f"rank must be in [1, {n}], got {rank}")
    if not np.allclose(cov, cov.T, atol=1e-9, rtol=1e-9):
        raise ValueError("matrix is not symmetric within 1e-9")
    eigvals, eigvecs = np.linalg.eigh((cov + cov.T) / 2.0)
    top = slice(n - rank, n)
    return eigvecs[:, top] * np.sqrt(np.clip(eigvals[top], 0.0, None))


@dataclass
class PPCAFit:
    mean: np.ndarray       # (n,)
    weights: np.ndarray    # W, (n, k)
    noise_var: float       # sigma^2
    log_likelihood: float  # marginal log-likelihood of the training data


def _ppca_from_eigh(eigvals: np.ndarray, eigvecs: np.ndarray, rank: int,
                    ) -> tuple[np.ndarray, float]:
    """Closed-form PPCA factor from a covariance eigendecomposition.

    ``eigvals`` ascending (as from eigh). W = U_k (L_k - sigma^2 I)^{1/2},
    sigma^2 = mean of the discarded eigenvalues.
    """
    n = eigvals.shape[0]
    eigvals = np.clip(eigvals, 0.0, None)
    top = slice(n - rank, n)
    noise_var = float(np.mean(eigvals[:n - rank])) if rank < n else 0.0
    w = eigvecs[:, top] * np.sqrt(np.clip(eigvals[top] - noise_var, 0.0, None))
    return w, noise_var


def ppca_fit(data: np.ndarray, rank: int) -> PPCAFit:
    """Closed-form maximum-likelihood probabilistic PCA.

    The fitted marginal covariance W W^T + sigma^2 I keeps the sample
    covariance's top-``rank`` eigenvalues; sigma^2 is the mean of the
    discarded ones.
    """
    data = np.asarray(data, dtype=float)
    m, n = data.shape
    if not 1 <= rank < n:
        raise ValueError(f"rank must satisfy 1 <= rank < {n}, got {rank}")
    if m <= rank:
        raise ValueError(f"need more than rank={rank} rows, got {m}")
    mean = data.mean(axis=0)
    centered = data - mean
    sample_cov = centered.T @ centered / m
    eigvals, eigvecs = np.linalg.eigh(sample_cov)
    w, noise_var = _ppca_from_eigh(eigvals, eigvecs, rank)

    # model covariance shares the sample eigenbasis: eigenvalue i maps to
    # max(lambda_i, sigma^2) for kept axes and sigma^2 for discarded ones
    lam = np.clip(eigvals, 0.0, None)
    model_eigs = np.concatenate([
        np.full(n - rank, noise_var), np.maximum(lam[n - rank:], noise_var)])
    with np.errstate(divide="ignore", invalid="ignore"):
        log_det = np.sum(np.log(model_eigs))
        trace_term = np.sum(np.where(model_eigs > 0, lam / model_eigs,
                                     np.where(lam > 0, np.inf, 0.0)))
    ll = -0.5 * m * (n * _LOG_2PI + log_det + trace_term)
    return PPCAFit(mean=mean, weights=w, noise_var=noise_var,
                   log_likelihood=float(ll))


@dataclass
class RankSelection:
    rank: int
    curve: list[tuple[int, float]]  # (rank, held-out log-likelihood)


def select_rank(data: np.ndarray, rank_grid: Sequence[int], *,
                holdout_fraction: float = 0.2,
                seed: int | np.random.Generator = 0) -> RankSelection:
    """Pick the PPCA rank maximizing held-out marginal log-likelihood.

    The data is split (default 80/20, seeded); each grid rank is fitted on
    the training part and scored on the held-out part. Ties break toward the
    smaller rank. The full (rank, log-likelihood) curve is returned for
    reporting.
    """
    data = np.asarray(data, dtype=float)
    m, n = data.shape
    grid = list(rank_grid)
    if not grid:
        raise ValueError("rank grid is empty")
    if any(not 1 <= k < n for k in grid):
        raise ValueError(f"grid ranks must be in [1, {n - 1}]")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m)
    n_holdout = int(round(m * holdout_fraction))
    if n_holdout < 1 or m - n_holdout < 2 or m - n_holdout <= max(grid):
        raise DataError(f"degenerate split for m={m} rows")
    holdout, train = data[perm[:n_holdout]], data[perm[n_holdout:]]

    curve = []
    for k in grid:
        fit = ppca_fit(train, k)
        cov = fit.weights @ fit.weights.T + fit.noise_var * np.eye(n)
        chol_l = psd_jitter_cholesky(cov)
        ll = float(_component_log_density(holdout, fit.mean, chol_l).sum())
        curve.append((int(k), ll))
    best = max(range(len(curve)), key=lambda i: (curve[i][1], -curve[i][0]))
    return RankSelection(rank=curve[best][0], curve=curve)


def compress_model(model: MixtureModel, rank: int) -> MixtureModel:
    """Compress every component covariance to rank + isotropic noise (PPCA form)."""
    compressed = []
    for comp in model.components:
        cov = comp.covariance()
        n = cov.shape[0]
        if not 1 <= rank < n:
            raise ValueError(f"rank must satisfy 1 <= rank < {n}, got {rank}")
        eigvals, eigvecs = np.linalg.eigh((cov + cov.T) / 2.0)
        w, noise_var = _ppca_from_eigh(eigvals, eigvecs, rank)
        compressed.append(GaussianComponent(
            weight=comp.weight, mean=comp.mean.copy(),
            cov_factor=w, noise_var=noise_var))
    return MixtureModel(components=compressed, segment_kind=model.segment_kind)


# ---------------------------------------------------------------------------
# Conditioning (posterior of tau_b given tau_a) and sampling

def condition(model: MixtureModel, observed_idx: Sequence[int],
              observed_vals: Sequence[float]) -> MixtureModel:
    """Condition the mixture on observed coordinates.

    Returns a mixture over the remaining coordinates (in ascending index
    order) with reweighted components; weights use log-sum-exp and each
    Sigma_aa solve goes through a jittered Cholesky, never an explicit
    inverse.
    """
    idx_a = np.asarray(observed_idx, dtype=int)
    vals = np.asarray(observed_vals, dtype=float)
    n = model.dimension
    if idx_a.size == 0:
        raise ValueError("observed index set is empty")
    if idx_a.size != vals.size:
        raise ValueError("observed indices and values differ in length")
    if len(np.unique(idx_a)) != idx_a.size:
        raise ValueError("observed indices repeat")
    if idx_a.min() < 0 or idx_a.max() >= n:
        raise ValueError("observed index out of range")
    mask = np.ones(n, dtype=bool)
    mask[idx_a] = False
    idx_b = np.flatnonzero(mask)
    if idx_b.size == 0:
        raise ValueError("conditioning on every coordinate leaves nothing to sample")

    log_w = np.empty(len(model.components))
    cond_means = []
    cond_factors = []
    for j, comp in enumerate(model.components):
        cov = comp.covariance()
        sigma_aa = cov[np.ix_(idx_a, idx_a)]
        sigma_ba = cov[np.ix_(idx_b, idx_a)]
        sigma_bb = cov[np.ix_(idx_b, idx_b)]
        chol_aa = psd_jitter_cholesky(sigma_aa)
        delta = vals - comp.mean[idx_a]
        with np.errstate(divide="ignore"):
            log_w[j] = np.log(comp.weight) + _component_log_density(
                delta[None, :], np.zeros_like(delta), chol_aa)[0]
        gain = cho_solve((chol_aa, True), sigma_ba.T).T  # Sigma_ba Sigma_aa^-1
        cond_means.append(comp.mean[idx_b] + gain @ delta)
        cond_cov = sigma_bb - gain @ sigma_ba.T
        cond_factors.append(psd_factor((cond_cov + cond_cov.T) / 2.0))

    norm = logsumexp(log_w)
    if np.isneginf(norm):
        # every component assigns zero density to the observation (degenerate
        # covariances): no evidence to reweight on, keep the prior weights
        new_weights = np.array([c.weight for c in model.components])
    elif not np.isfinite(norm):
        raise NumericalError("conditioning weights are not finite")
    else:
        new_weights = np.exp(log_w - norm)
        new_weights /= new_weights.sum()
    components = [
        GaussianComponent(weight=float(new_weights[j]), mean=cond_means[j],
                          cov_factor=cond_factors[j], noise_var=0.0)
        for j in range(len(model.components))
    ]
    return MixtureModel(components=components, segment_kind=model.segment_kind)


def sample(model: MixtureModel, rng: int | np.random.Generator | None = None,
           ) -> tuple[np.ndarray, int]:
    """Draw one vector from the mixture; returns (sample, component index)."""
    x, comp = sample_many(model, 1, rng)
    return x[0], int(comp[0])


def sample_many(model: MixtureModel, size: int,
                rng: int | np.random.Generator | None = None,
                ) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` vectors; returns (samples (size, n), component indices)."""
    rng = np.random.default_rng(rng)
    comps = rng.choice(len(model.components), size=size, p=model.weights)
    out = np.empty((size, model.dimension))
    for j, comp in enumerate(model.components):
        rows = np.flatnonzero(comps == j)
        if rows.size == 0:
            continue
        k = comp.cov_factor.shape[1]
        draws = rng.standard_normal((rows.size, k)) @ comp.cov_factor.T
        if comp.noise_var > 0.0:
            draws += np.sqrt(comp.noise_var) * rng.standard_normal(
                (rows.size, comp.dimension))
        out[rows] = comp.mean + draws
    return out, comps


# ---------------------------------------------------------------------------
# Serialization

def model_to_dict(model: MixtureModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "segment_kind": model.segment_kind,
        "n_components": len(model.components),
        "dimension": model.dimension,
        "components": [
            {
                "weight": comp.weight,
                "mean": comp.mean.tolist(),
                "cov_factor": comp.cov_factor.tolist(),
                "noise_var": comp.noise_var,
            }
            for comp in model.components
        ],
    }


def model_from_dict(doc: dict) -> MixtureModel:
    if doc.get("format") != MODEL_FORMAT:
        raise DataError(f"unsupported model format {doc.get('format')!r}")
    components = [
        GaussianComponent(
            weight=float(c["weight"]), mean=np.asarray(c["mean"], dtype=float),
            cov_factor=np.asarray(c["cov_factor"], dtype=float),
            noise_var=float(c["noise_var"]),
        )
        for c in doc["components"]
    ]
    return MixtureModel(components=components,
                        segment_kind=str(doc.get("segment_kind", "generic")))


def save_model(model: MixtureModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(model_to_dict(model), sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> MixtureModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_dict(doc)
