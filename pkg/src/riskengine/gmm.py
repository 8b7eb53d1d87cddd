"""Gaussian mixture models: density evaluation, EM calibration, sampling.

A mixture is P(x) = sum_j w_j * N(x | mu_j, Sigma_j). All density work goes
through Cholesky factors (never an explicit inverse): for each component,
log N(x) = -0.5 * (k ln 2pi + ln det Sigma + z'z) with L z = x - mu.

EM runs in log space. The E-step shifts each row by its max before
exponentiating, so responsibilities stay finite even when every component
density underflows in linear space. The M-step re-estimates weights, means
and covariances from responsibility-weighted moments and floors each
covariance diagonal with eps = max(1e-8 * trace(Sigma)/k, 1e-10), which keeps
factorizations well posed without visibly perturbing the fit.

Convergence: |delta per-sample log-likelihood| < tol (default 1e-6), at most
max_iter (default 200) iterations. Cold starts come from a k-means pass
(k-means++ style seeding, at most 20 Lloyd iterations); warm starts accept a
previously fitted model, which typically converges in a couple of iterations
when the data has shifted by one observation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    DegenerateDataError,
    InsufficientDataError,
    NumericError,
    ShapeError,
    ValidationError,
)
from .timeseries import ReturnPanel

_LOG_2PI = np.log(2.0 * np.pi)


def _as_matrix(data) -> np.ndarray:
    """Coerce samples to an (N, k) float matrix; 1-D input means k = 1."""
    if isinstance(data, ReturnPanel):
        return data.returns
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ShapeError(f"data must be 1-D or 2-D, got ndim={X.ndim}")
    if X.shape[0] == 0:
        raise InsufficientDataError("data is empty")
    if not np.all(np.isfinite(X)):
        raise ValidationError("data contains non-finite entries")
    return X


def covariance_floor(cov: np.ndarray) -> float:
    """Diagonal floor added after each M-step: max(1e-8 * tr/k, 1e-10)."""
    k = cov.shape[-1]
    return max(1e-8 * float(np.trace(cov)) / k, 1e-10)


def _floored(cov: np.ndarray) -> np.ndarray:
    return cov + covariance_floor(cov) * np.eye(cov.shape[-1])


@dataclass(frozen=True, eq=False)
class GaussianMixtureModel:
    """Immutable mixture parameters plus cached Cholesky factors."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    _chols: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        mu = np.array(self.means, dtype=float)
        cov = np.array(self.covariances, dtype=float)
        if w.ndim != 1 or mu.ndim != 2 or cov.ndim != 3:
            raise ShapeError(
                "expected weights (n,), means (n, k), covariances (n, k, k); "
                f"got ndim {w.ndim}/{mu.ndim}/{cov.ndim}"
            )
        n, k = mu.shape
        if w.shape != (n,) or cov.shape != (n, k, k):
            raise ShapeError(
                f"inconsistent shapes: weights {w.shape}, means {mu.shape}, "
                f"covariances {cov.shape}"
            )
        if n == 0:
            raise ValidationError("mixture needs at least one component")
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite and non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError(f"weights sum to {w.sum()!r}, not 1")
        if not np.all(np.isfinite(mu)) or not np.all(np.isfinite(cov)):
            raise ValidationError("means/covariances contain non-finite entries")
        asym = np.max(np.abs(cov - np.transpose(cov, (0, 2, 1))))
        if asym > 1e-12 * max(1.0, float(np.max(np.abs(cov)))):
            raise ValidationError(f"covariance asymmetry {asym} exceeds tolerance")
        chols = np.linalg.cholesky(cov)  # LinAlgError if any is not PD
        for a in (w, mu, cov):
            a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)
        object.__setattr__(self, "_chols", chols)

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianMixtureModel":
        model = cls(
            weights=np.asarray(d["weights"], dtype=float),
            means=np.asarray(d["means"], dtype=float),
            covariances=np.asarray(d["covariances"], dtype=float),
        )
        if "dim" in d and int(d["dim"]) != model.dim:
            raise ValidationError(
                f"declared dim {d['dim']} does not match means dim {model.dim}"
            )
        return model

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GaussianMixtureModel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class Responsibilities:
    """Posterior component memberships; rows sum to one."""

    r: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        if r.ndim != 2:
            raise ShapeError(f"responsibilities must be 2-D, got ndim={r.ndim}")
        if not np.all(np.isfinite(r)):
            raise ValidationError("responsibilities contain non-finite entries")
        if np.any(r < -1e-12) or np.any(r > 1.0 + 1e-12):
            raise ValidationError("responsibilities outside [0, 1]")
        rows = r.sum(axis=1)
        if np.max(np.abs(rows - 1.0)) > 1e-10:
            raise ValidationError("responsibility rows must sum to 1")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)


@dataclass(frozen=True)
class EmSettings:
    tol: float = 1e-6
    max_iter: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValidationError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class FitReport:
    """EM run summary; the trace is per-sample log-likelihood by iteration."""

    iterations: int
    converged: bool
    final_loglik: float
    loglik_trace: tuple[float, ...]
    init_mode: str

    def __post_init__(self):
        if self.iterations < 1 or self.iterations != len(self.loglik_trace):
            raise ValidationError("iterations must equal the trace length (>= 1)")
        trace = self.loglik_trace
        for i in range(1, len(trace)):
            if trace[i] - trace[i - 1] < -1e-9:
                raise ValidationError(
                    f"log-likelihood decreased at iteration {i + 1}: "
                    f"{trace[i - 1]} -> {trace[i]}"
                )
        if self.final_loglik != trace[-1]:
            raise ValidationError("final_loglik must equal the last trace entry")


def component_density(x, mean, cov) -> float:
    """Multivariate normal density at a single point.

    Evaluated through the Cholesky factor of cov; raises
    numpy.linalg.LinAlgError when cov is not positive definite.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    k = mean.shape[0]
    if x.shape != (k,) or cov.shape != (k, k):
        raise ShapeError(
            f"point {x.shape}, mean {mean.shape} and cov {cov.shape} disagree"
        )
    L = np.linalg.cholesky(cov)
    z = solve_triangular(L, x - mean, lower=True, check_finite=False)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return float(np.exp(-0.5 * (k * _LOG_2PI + logdet + z @ z)))


def _log_component_densities(model: GaussianMixtureModel, X: np.ndarray) -> np.ndarray:
    """Log N(x_i | mu_j, Sigma_j) for every sample/component pair: (N, n)."""
    N, k = X.shape
    out = np.empty((N, model.n_components))
    for j in range(model.n_components):
        L = model._chols[j]
        z = solve_triangular(
            L, (X - model.means[j]).T, lower=True, check_finite=False
        )
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        out[:, j] = -0.5 * (k * _LOG_2PI + logdet + np.sum(z * z, axis=0))
    return out


def _log_weighted(model: GaussianMixtureModel, X: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):  # log(0) for zero weights is fine
        logw = np.log(model.weights)
    return _log_component_densities(model, X) + logw


def _logsumexp_rows(logj: np.ndarray, context: str) -> np.ndarray:
    shift = logj.max(axis=1)
    bad = ~np.isfinite(shift)
    if np.any(bad):
        raise NumericError(
            f"{context}: density underflowed for sample {int(np.argmax(bad))}"
        )
    return shift + np.log(np.sum(np.exp(logj - shift[:, None]), axis=1))


def mixture_density(model: GaussianMixtureModel, x):
    """Mixture density at a point (vector of length dim).

    Convenience: for 1-D models an array of scalars is treated as a batch of
    points and an array is returned; likewise an (N, dim) matrix for any dim.
    """
    x = np.asarray(x, dtype=float)
    scalar = False
    if x.ndim == 0:
        x = x.reshape(1, 1)
        scalar = True
    elif x.ndim == 1:
        if model.dim == 1:
            x = x[:, None]
            scalar = x.shape[0] == 1
        else:
            if x.shape[0] != model.dim:
                raise ShapeError(
                    f"point has dim {x.shape[0]}, model has dim {model.dim}"
                )
            x = x[None, :]
            scalar = True
    if x.shape[1] != model.dim:
        raise ShapeError(f"points have dim {x.shape[1]}, model has dim {model.dim}")
    logj = _log_weighted(model, x)
    shift = logj.max(axis=1)
    dens = np.where(
        np.isfinite(shift),
        np.exp(shift) * np.sum(np.exp(logj - shift[:, None]), axis=1),
        0.0,
    )
    return float(dens[0]) if scalar else dens


def log_likelihood(model: GaussianMixtureModel, data) -> float:
    """Per-sample mean log-likelihood of the data under the model."""
    X = _as_matrix(data)
    if X.shape[1] != model.dim:
        raise ShapeError(f"data has dim {X.shape[1]}, model has dim {model.dim}")
    return float(np.mean(_logsumexp_rows(_log_weighted(model, X), "log_likelihood")))


def e_step(model: GaussianMixtureModel, data) -> Responsibilities:
    """Posterior responsibilities r_ij = w_j N_j(x_i) / sum_l w_l N_l(x_i)."""
    X = _as_matrix(data)
    if X.shape[1] != model.dim:
        raise ShapeError(f"data has dim {X.shape[1]}, model has dim {model.dim}")
    logj = _log_weighted(model, X)
    lse = _logsumexp_rows(logj, "e_step")
    return Responsibilities(r=np.exp(logj - lse[:, None]))


def m_step(data, resp) -> GaussianMixtureModel:
    """Re-estimate mixture parameters from responsibility-weighted moments.

    w_j = sum_i r_ij / N, mu_j = weighted mean, Sigma_j = weighted scatter
    plus the diagonal floor (see covariance_floor). A component whose total
    responsibility falls below 1e-8 * N is considered collapsed and is
    re-seeded at the data point least explained by the surviving components,
    with weight 1/N and the global covariance; weights are renormalized.
    """
    X = _as_matrix(data)
    if not isinstance(resp, Responsibilities):
        resp = Responsibilities(r=np.asarray(resp, dtype=float))
    r = resp.r
    N, k = X.shape
    if r.shape[0] != N:
        raise ShapeError(f"{N} samples but {r.shape[0]} responsibility rows")
    n_c = r.shape[1]
    col = r.sum(axis=0)
    collapsed = np.flatnonzero(col < 1e-8 * N)
    healthy = np.flatnonzero(col >= 1e-8 * N)
    if healthy.size == 0:
        raise DegenerateDataError("all mixture components collapsed")

    weights = np.empty(n_c)
    means = np.empty((n_c, k))
    covs = np.empty((n_c, k, k))
    for j in healthy:
        rj = r[:, j]
        mu = rj @ X / col[j]
        d = X - mu
        S = (d * rj[:, None]).T @ d / col[j]
        means[j] = mu
        covs[j] = _floored(0.5 * (S + S.T))
        weights[j] = col[j] / N

    if collapsed.size:
        ref = GaussianMixtureModel(
            weights=weights[healthy] / weights[healthy].sum(),
            means=means[healthy],
            covariances=covs[healthy],
        )
        order = np.argsort(
            _logsumexp_rows(_log_weighted(ref, X), "m_step reseed"), kind="stable"
        )
        dm = X - X.mean(axis=0)
        global_cov = _floored(dm.T @ dm / N)
        for pick, j in enumerate(collapsed):
            means[j] = X[order[pick]]
            covs[j] = global_cov
            weights[j] = 1.0 / N

    weights /= weights.sum()
    return GaussianMixtureModel(weights=weights, means=means, covariances=covs)


def kmeans_init(X, n_components: int, rng) -> GaussianMixtureModel:
    """Cold-start parameters from a short k-means pass.

    Seeding picks centers with probability proportional to squared distance
    from the chosen set (first one uniform); Lloyd then runs for at most 20
    iterations or until labels stop moving. Empty clusters are re-seeded at
    the point farthest from its current center. Component weights are
    cluster fractions, covariances per-cluster scatter plus the floor.
    """
    X = _as_matrix(X)
    N, k = X.shape
    if n_components < 1:
        raise ValidationError(f"n_components must be >= 1, got {n_components}")
    if N < n_components:
        raise InsufficientDataError(
            f"{N} samples cannot seed {n_components} components"
        )
    gen = np.random.default_rng(rng)

    centers = np.empty((n_components, k))
    centers[0] = X[int(gen.integers(N))]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, n_components):
        total = d2.sum()
        if total > 0.0:
            idx = int(gen.choice(N, p=d2 / total))
        else:
            idx = int(gen.integers(N))
        centers[j] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))

    labels = np.full(N, -1)
    for _ in range(20):
        dist = np.sum((X[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = dist.argmin(axis=1)
        for j in range(n_components):
            if not np.any(new_labels == j):
                assigned = dist[np.arange(N), new_labels]
                new_labels[int(np.argmax(assigned))] = j
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(n_components):
            members = X[labels == j]
            if members.shape[0]:  # stealing a point above may empty a cluster
                centers[j] = members.mean(axis=0)

    weights = np.bincount(labels, minlength=n_components).astype(float) / N
    covs = np.empty((n_components, k, k))
    for j in range(n_components):
        members = X[labels == j]
        if members.shape[0] == 0:
            members = centers[j][None, :]
        d = members - centers[j]
        covs[j] = _floored(d.T @ d / d.shape[0])
    if np.any(weights == 0.0):
        # an empty cluster at the last Lloyd pass gets a nominal seat so the
        # model stays a valid simplex; EM reassigns mass immediately
        weights = (weights * N + 1.0) / (N + n_components)
    return GaussianMixtureModel(weights=weights, means=centers, covariances=covs)


def fit(
    data,
    n_components: int,
    init="kmeans",
    settings: EmSettings | None = None,
) -> tuple[GaussianMixtureModel, FitReport]:
    """Calibrate a mixture by EM.

    init is either the string "kmeans" (cold start, seeded from
    settings.seed) or an existing GaussianMixtureModel to warm-start from.
    Returns the fitted model together with a FitReport whose trace holds the
    per-sample log-likelihood at the top of every iteration.

    The covariance stabiliser makes each M-step very slightly suboptimal, so
    near convergence the objective can wobble below its previous value.  The
    loop therefore never accepts a downhill step: if an iteration lowers the
    log-likelihood the previous iterate is returned instead, converged when
    the dip was within tol.  The reported trace is non-decreasing.
    """
    X = _as_matrix(data)
    N, k = X.shape
    if n_components < 1:
        raise ValidationError(f"n_components must be >= 1, got {n_components}")
    if N < n_components:
        raise InsufficientDataError(
            f"cannot fit {n_components} components to {N} samples"
        )
    if settings is None:
        settings = EmSettings()

    if isinstance(init, GaussianMixtureModel):
        if init.dim != k:
            raise ShapeError(f"warm-start model dim {init.dim} != data dim {k}")
        if init.n_components != n_components:
            raise ShapeError(
                f"warm-start model has {init.n_components} components, "
                f"requested {n_components}"
            )
        model = init
        init_mode = "warm_start"
    elif init == "kmeans":
        model = kmeans_init(X, n_components, np.random.default_rng(settings.seed))
        init_mode = "kmeans"
    else:
        raise ValidationError(f"unknown init {init!r}")

    trace: list[float] = []
    converged = False
    previous = model
    for it in range(1, settings.max_iter + 1):
        logj = _log_weighted(model, X)
        lse = _logsumexp_rows(logj, f"fit iteration {it}")
        ll = float(np.mean(lse))
        if not np.isfinite(ll):
            raise NumericError(f"log-likelihood non-finite at iteration {it}")
        if trace and ll < trace[-1]:
            # The diagonal stabiliser shifts each M-step away from the exact
            # maximiser, so once the true EM increment falls below that
            # perturbation the objective can dip slightly.  Keep the previous,
            # better iterate; a dip below tol is just convergence noise.
            model = previous
            converged = trace[-1] - ll < settings.tol
            break
        trace.append(ll)
        if len(trace) >= 2 and trace[-1] - trace[-2] < settings.tol:
            converged = True
            break
        previous = model
        model = m_step(X, Responsibilities(r=np.exp(logj - lse[:, None])))

    report = FitReport(
        iterations=len(trace),
        converged=converged,
        final_loglik=trace[-1],
        loglik_trace=tuple(trace),
        init_mode=init_mode,
    )
    return model, report


def stratified_counts(weights, n_total: int) -> np.ndarray:
    """Largest-remainder allocation of n_total draws across components."""
    ideal = np.asarray(weights, dtype=float) * n_total
    base = np.floor(ideal).astype(int)
    short = n_total - int(base.sum())
    if short > 0:
        order = np.argsort(-(ideal - base), kind="stable")
        base[order[:short]] += 1
    return base


def sample(
    model: GaussianMixtureModel,
    n_total: int,
    rng,
    allocation: str = "stratified",
) -> np.ndarray:
    """Draw n_total points from the mixture.

    "stratified" allocates round(w_j * n_total) draws per component by
    largest remainder, draws each block as mu_j + L_j z, then shuffles the
    rows; "categorical" samples component labels first. Draw order given one
    Generator: stratified consumes each component's normals in index order
    and then one permutation; categorical consumes the labels then all
    normals.
    """
    if n_total < 1:
        raise ValidationError(f"n_total must be >= 1, got {n_total}")
    gen = np.random.default_rng(rng)
    k = model.dim
    if allocation == "stratified":
        counts = stratified_counts(model.weights, n_total)
        blocks = []
        for j, c in enumerate(counts):
            if c == 0:
                continue
            z = gen.standard_normal((int(c), k))
            blocks.append(model.means[j] + z @ model._chols[j].T)
        out = np.concatenate(blocks, axis=0)
        return out[gen.permutation(n_total)]
    if allocation == "categorical":
        labels = gen.choice(model.n_components, size=n_total, p=model.weights)
        z = gen.standard_normal((n_total, k))
        scaled = np.einsum("nij,nj->ni", model._chols[labels], z)
        return model.means[labels] + scaled
    raise ValidationError(f"unknown allocation {allocation!r}")


def mixture_cdf(model: GaussianMixtureModel, x):
    """CDF of a univariate mixture: sum_j w_j Phi((x - mu_j) / sigma_j)."""
    if model.dim != 1:
        raise ShapeError(f"mixture_cdf needs a 1-D model, got dim {model.dim}")
    from .distributions import normal_cdf

    x = np.asarray(x, dtype=float)
    sds = np.sqrt(model.covariances[:, 0, 0])
    z = (x[..., None] - model.means[:, 0]) / sds
    out = np.sum(model.weights * normal_cdf(z), axis=-1)
    return float(out) if out.ndim == 0 else out
