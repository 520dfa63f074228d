"""Uncorrelated linear discriminant analysis on possibly singular scatter.

The transformation maximizes trace((W' St W)^+ (W' Sb W)) subject to
W' St W = I, solved by whitening with the total-scatter eigenbasis (truncated
at rank tolerance) and diagonalizing the whitened between-class scatter. The
pseudo-inverse is realized by the truncation, never formed explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class ScatterDecomposition:
    """Unnormalized scatter matrices and class statistics."""

    s_total: np.ndarray  # (m, m)
    s_between: np.ndarray  # (m, m)
    s_within: np.ndarray  # (m, m)
    class_means: np.ndarray  # (j, m)
    grand_mean: np.ndarray  # (m,)
    class_counts: np.ndarray  # (j,)
    class_ids: np.ndarray  # (j,) global class indices, ascending


@dataclass(frozen=True)
class UldaModel:
    """Fitted discriminant transformation with posterior machinery.

    `scaling` maps centered feature rows (restricted to `feature_subset`)
    to discriminant scores. Score components are uncorrelated under the total
    scatter and scaled to unit pooled within-class covariance, which makes
    the identity-covariance Gaussian posterior the classical discriminant
    posterior whenever the scatter is nonsingular.
    """

    scaling: np.ndarray  # (m_sub, q)
    center: np.ndarray  # (m_sub,) grand mean of the fitting data
    centroids: np.ndarray  # (j, q) projected class means
    priors: np.ndarray  # (j,) strictly positive, sums to 1
    prior_mode: str  # "estimated" | "equal"
    trace_value: float
    feature_subset: tuple[int, ...]
    class_ids: tuple[int, ...]
    n_features: int  # width of the design matrix this model indexes into

    @property
    def n_components(self) -> int:
        return self.scaling.shape[1]


def compute_scatter(X: np.ndarray, y: np.ndarray) -> ScatterDecomposition:
    """Total, between-class, and within-class scatter of a design matrix."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise ValueError("X must be 2-dimensional")
    class_ids, inverse = np.unique(y, return_inverse=True)
    if class_ids.size < 2:
        raise ValueError("need at least 2 classes present")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 rows")

    counts = np.bincount(inverse).astype(np.float64)
    grand_mean = X.mean(axis=0)
    # Class means via group sums.
    sums = np.zeros((class_ids.size, X.shape[1]))
    np.add.at(sums, inverse, X)
    class_means = sums / counts[:, None]

    centered_total = X - grand_mean
    s_total = centered_total.T @ centered_total
    centered_within = X - class_means[inverse]
    s_within = centered_within.T @ centered_within
    offsets = class_means - grand_mean
    s_between = (offsets * counts[:, None]).T @ offsets
    return ScatterDecomposition(
        s_total=s_total,
        s_between=s_between,
        s_within=s_within,
        class_means=class_means,
        grand_mean=grand_mean,
        class_counts=counts.astype(np.int64),
        class_ids=class_ids.astype(np.int64),
    )


def _rank_tolerance(eigenvalues: np.ndarray, n: int, m: int) -> float:
    top = float(eigenvalues[-1]) if eigenvalues.size else 0.0
    return max(n, m) * np.finfo(np.float64).eps * top


# Scale-free floor for the whitened between-class eigenvalues (which live in
# [0, 1]); below it, class means coincide to machine precision.
_NO_DIRECTION_FLOOR = 1e3 * np.finfo(np.float64).eps


def fit_ulda(
    X: np.ndarray,
    y: np.ndarray,
    priors: str = "estimated",
    subset=None,
) -> UldaModel | None:
    """Fit the discriminant transformation; None if no direction exists.

    `subset` restricts the fit to the given design-matrix column ids; the
    returned model indexes the full matrix via `feature_subset`.
    """
    X = np.asarray(X, dtype=np.float64)
    if priors not in ("estimated", "equal"):
        raise ValueError(f"unknown prior mode {priors!r}")
    if not np.isfinite(X).all():
        raise ValueError("design matrix contains non-finite entries")
    n_features = X.shape[1]
    subset = tuple(range(n_features)) if subset is None else tuple(int(c) for c in subset)
    Xs = X[:, subset]
    scatter = compute_scatter(Xs, y)
    n, m = Xs.shape

    # Whiten against total scatter, truncated at rank tolerance.
    total_eigvals, total_eigvecs = np.linalg.eigh(scatter.s_total)
    tol = _rank_tolerance(total_eigvals, n, m)
    keep = total_eigvals > tol
    if not keep.any():
        return None  # constant design matrix
    whitener = total_eigvecs[:, keep] / np.sqrt(total_eigvals[keep])

    between_white = whitener.T @ scatter.s_between @ whitener
    between_white = 0.5 * (between_white + between_white.T)
    lam, vecs = np.linalg.eigh(between_white)
    lam, vecs = lam[::-1], vecs[:, ::-1]
    if lam.size == 0 or lam[0] <= _NO_DIRECTION_FLOOR:
        return None  # class means coincide: no discriminant direction
    lam_tol = max(_rank_tolerance(lam[::-1], n, m), _NO_DIRECTION_FLOOR)
    q = int(np.count_nonzero(lam > lam_tol))
    trace_value = float(lam[:q].sum())
    # Rescale each component to unit pooled within-class covariance: the
    # scatter-whitened component i carries within-scatter (1 - lam_i), so the
    # identity-covariance posterior below is exactly the classical one.
    # Perfectly separated components (lam -> 1) are floored, which saturates
    # their posteriors instead of dividing by zero.
    within_var = np.maximum(1.0 - lam[:q], _NO_DIRECTION_FLOOR) / max(n - scatter.class_ids.size, 1)
    scaling = (whitener @ vecs[:, :q]) / np.sqrt(within_var)

    centroids = (scatter.class_means - scatter.grand_mean) @ scaling
    if priors == "estimated":
        prior_vec = scatter.class_counts / scatter.class_counts.sum()
    else:
        prior_vec = np.full(scatter.class_ids.size, 1.0 / scatter.class_ids.size)
    return UldaModel(
        scaling=scaling,
        center=scatter.grand_mean,
        centroids=centroids,
        priors=prior_vec,
        prior_mode=priors,
        trace_value=trace_value,
        feature_subset=subset,
        class_ids=tuple(int(c) for c in scatter.class_ids),
        n_features=n_features,
    )


def with_priors(model: UldaModel, priors: str) -> UldaModel:
    """Same transformation with the prior vector swapped (scatter is prior-free)."""
    if priors == model.prior_mode:
        return model
    if priors == "equal":
        prior_vec = np.full(len(model.class_ids), 1.0 / len(model.class_ids))
    else:
        raise ValueError("can only swap to equal priors; refit for estimated")
    return replace(model, priors=prior_vec, prior_mode="equal")


def criterion_trace(W: np.ndarray, scatter: ScatterDecomposition) -> float:
    """trace((W' St W)^+ (W' Sb W)) for an arbitrary transformation."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim == 1:
        W = W[:, None]
    a = W.T @ scatter.s_total @ W
    b = W.T @ scatter.s_between @ W
    return float(np.trace(np.linalg.pinv(a, hermitian=True) @ b))


def transform(model: UldaModel, X: np.ndarray) -> np.ndarray:
    """Project rows of the full design matrix into discriminant scores."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] == model.n_features:
        Xs = X[:, model.feature_subset]
    elif X.shape[1] == len(model.feature_subset):
        Xs = X  # already restricted to the feature subset
    else:
        raise ValueError(
            f"dimension mismatch: got {X.shape[1]} columns, model expects "
            f"{model.n_features} (or {len(model.feature_subset)} restricted)"
        )
    return (Xs - model.center) @ model.scaling


def posterior(model: UldaModel, X: np.ndarray) -> np.ndarray:
    """Class posteriors: prior-weighted Gaussian with identity covariance in
    the discriminant space, via the log-sum-exp-stable route."""
    scores = transform(model, X)
    diff = scores[:, None, :] - model.centroids[None, :, :]
    log_unnorm = np.log(model.priors)[None, :] - 0.5 * np.einsum("njq,njq->nj", diff, diff)
    log_unnorm -= log_unnorm.max(axis=1, keepdims=True)
    probs = np.exp(log_unnorm)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs


def predict(model: UldaModel, X: np.ndarray, allowed_classes=None) -> np.ndarray:
    """Global class indices of the highest-posterior class.

    `allowed_classes` restricts the argmax to a non-empty subset of the
    model's classes; ties break toward the lowest class index (class_ids are
    ascending, so first-argmax wins).
    """
    probs = posterior(model, X)
    class_ids = np.asarray(model.class_ids)
    if allowed_classes is not None:
        allowed = np.asarray(sorted(allowed_classes))
        if allowed.size == 0:
            raise ValueError("allowed_classes must be non-empty")
        positions = np.flatnonzero(np.isin(class_ids, allowed))
        if positions.size == 0:
            raise ValueError("allowed_classes do not intersect the model's classes")
        local = positions[np.argmax(probs[:, positions], axis=1)]
        return class_ids[local]
    return class_ids[np.argmax(probs, axis=1)]
