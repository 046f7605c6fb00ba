"""nu-one-class SVM trained by sequential minimal optimization.

Dual problem solved here, for n training vectors and nu in (0, 1]:

    minimize    (1/2) a' K a
    subject to  0 <= a_i <= 1/(nu * n),   sum_i a_i = 1

Two-coordinate SMO updates with first-order working-set selection run until
the maximum KKT violation falls below tolerance.  The offset rho is recovered
from unbounded support vectors (midpoint of the KKT interval when none
exist), and a probe f is accepted iff  sum_i a_i k(s_i, f) - rho > 0; a score
of exactly zero is rejected.  Features are standardized per dimension by the
statistics of the training originals, stored on the model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "OcSvmModel",
    "SelectionRecord",
    "fit",
    "decision_scores",
    "decide",
    "select_hyperparams",
]

_JITTER = 1e-10  # added to the Gram diagonal for numerical stability
_BOUND_EPS = 1e-9  # alpha closer than this to a box edge counts as bounded


@dataclass(frozen=True)
class OcSvmModel:
    """Fitted boundary: support vectors, duals, offset, and standardization."""

    support_vectors: np.ndarray  # (n_sv, d), standardized feature space
    alphas: np.ndarray  # (n_sv,), strictly positive
    rho: float
    kernel: str  # "rbf" | "linear"
    kernel_gamma: float
    nu: float
    n_train: int
    feature_mean: np.ndarray  # (d,)
    feature_scale: np.ndarray  # (d,), strictly positive

    def __post_init__(self) -> None:
        sv = np.asarray(self.support_vectors, dtype=np.float64)
        al = np.asarray(self.alphas, dtype=np.float64)
        if sv.ndim != 2 or al.shape != (sv.shape[0],):
            raise ValueError(f"inconsistent SV/alpha shapes: {sv.shape} vs {al.shape}")
        if self.kernel not in ("rbf", "linear"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.kernel == "rbf" and not self.kernel_gamma > 0.0:
            raise ValueError("rbf kernel requires positive gamma")
        if not 0.0 < self.nu <= 1.0:
            raise ValueError(f"nu must lie in (0, 1], got {self.nu}")
        if np.any(al <= 0.0):
            raise ValueError("stored alphas must be strictly positive")
        upper = 1.0 / (self.nu * self.n_train)
        if np.any(al > upper + 1e-9) or abs(al.sum() - 1.0) > 1e-6:
            raise ValueError("alphas violate the dual box or simplex constraint")
        mean = np.asarray(self.feature_mean, dtype=np.float64)
        scale = np.asarray(self.feature_scale, dtype=np.float64)
        if mean.shape != (sv.shape[1],) or scale.shape != (sv.shape[1],):
            raise ValueError("standardization parameters do not match feature dimension")
        if np.any(scale <= 0.0):
            raise ValueError("feature scales must be strictly positive")
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "alphas", al)
        object.__setattr__(self, "feature_mean", mean)
        object.__setattr__(self, "feature_scale", scale)


def _kernel_matrix(kernel: str, gamma: float, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if kernel == "linear":
        return a @ b.T
    sq = np.sum(a**2, axis=1)[:, None] + np.sum(b**2, axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


def _solve_dual(K: np.ndarray, nu: float, tol: float, max_iter: int) -> np.ndarray:
    """SMO on the jittered Gram matrix; returns the full alpha vector."""
    n = K.shape[0]
    upper = 1.0 / (nu * n)
    alpha = np.full(n, 1.0 / n)  # uniform start is always feasible for nu <= 1
    grad = K @ alpha
    for _ in range(max_iter):
        can_grow = alpha < upper - _BOUND_EPS
        can_shrink = alpha > _BOUND_EPS
        if not can_grow.any() or not can_shrink.any():
            return alpha
        i = int(np.argmin(np.where(can_grow, grad, np.inf)))
        j = int(np.argmax(np.where(can_shrink, grad, -np.inf)))
        violation = grad[j] - grad[i]
        if violation < tol:
            return alpha
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad < 1e-12:
            quad = 1e-12
        delta = min(violation / quad, upper - alpha[i], alpha[j])
        alpha[i] += delta
        alpha[j] -= delta
        grad += delta * (K[:, i] - K[:, j])
    raise RuntimeError(
        f"SMO failed to reach tolerance {tol} within {max_iter} iterations "
        f"(n={n}, nu={nu}, last violation {violation:.3e})"
    )


def fit(
    features: np.ndarray,
    nu: float = 0.05,
    kernel_gamma: float = 1.0,
    kernel: str = "rbf",
    tol: float = 1e-6,
    max_iter: int = 200_000,
) -> OcSvmModel:
    """Fit the one-class boundary on features of training originals only.

    Features are standardized per dimension (z-score on the given set; a
    zero-variance dimension keeps unit scale), the dual is solved by SMO at
    KKT tolerance ``tol``, and only vectors with positive alpha are stored.
    """
    F = np.asarray(features, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] < 2:
        raise ValueError(f"need at least two feature vectors, got shape {F.shape}")
    if not np.isfinite(F).all():
        raise ValueError("features contain non-finite values")
    if not 0.0 < nu <= 1.0:
        raise ValueError(f"nu must lie in (0, 1], got {nu}")
    n = F.shape[0]
    mean = F.mean(axis=0)
    scale = F.std(axis=0)
    # a constant dimension yields std at float-noise level, not exactly zero
    tiny = 1e-12 * np.maximum(1.0, np.abs(mean))
    scale = np.where(scale > tiny, scale, 1.0)
    Z = (F - mean) / scale

    K = _kernel_matrix(kernel, kernel_gamma, Z, Z)
    K[np.diag_indices_from(K)] += _JITTER
    alpha = _solve_dual(K, nu, tol, max_iter)

    # rho comes from the unjittered Gram so that it matches the kernel
    # evaluated at decision time: free SVs then score exactly zero
    grad = K @ alpha - _JITTER * alpha
    upper = 1.0 / (nu * n)
    free = (alpha > _BOUND_EPS) & (alpha < upper - _BOUND_EPS)
    if free.any():
        rho = float(grad[free].mean())
    else:
        # midpoint of the KKT interval [max over bounded, min over zero]
        at_upper = alpha >= upper - _BOUND_EPS
        at_zero = alpha <= _BOUND_EPS
        lo = float(grad[at_upper].max()) if at_upper.any() else float(grad.min())
        hi = float(grad[at_zero].min()) if at_zero.any() else float(grad.max())
        rho = 0.5 * (lo + hi)

    keep = alpha > _BOUND_EPS
    return OcSvmModel(
        support_vectors=Z[keep],
        alphas=alpha[keep],
        rho=rho,
        kernel=kernel,
        kernel_gamma=kernel_gamma,
        nu=nu,
        n_train=n,
        feature_mean=mean,
        feature_scale=scale,
    )


def decision_scores(model: OcSvmModel, features: np.ndarray) -> np.ndarray:
    """Signed scores for raw (unstandardized) feature rows; positive accepts."""
    F = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if F.shape[1] != model.support_vectors.shape[1]:
        raise ValueError(
            f"feature dimension {F.shape[1]} does not match model "
            f"({model.support_vectors.shape[1]})"
        )
    Z = (F - model.feature_mean) / model.feature_scale
    k = _kernel_matrix(model.kernel, model.kernel_gamma, Z, model.support_vectors)
    return k @ model.alphas - model.rho


def decide(model: OcSvmModel, feature: np.ndarray) -> tuple[bool, float]:
    """Accept/reject one probe.  A score of exactly zero rejects."""
    score = float(decision_scores(model, np.asarray(feature).reshape(1, -1))[0])
    return score > 0.0, score


@dataclass(frozen=True)
class SelectionRecord:
    """One grid point of hyperparameter selection."""

    nu: float
    kernel_gamma: float
    val_p_miss: float


def select_hyperparams(
    train_features: np.ndarray,
    val_features: np.ndarray,
    nus: Sequence[float] = (0.01, 0.05, 0.1),
    gammas: Sequence[float] = (0.1, 1.0, 10.0),
    kernel: str = "rbf",
    tol: float = 1e-6,
) -> tuple[OcSvmModel, list[SelectionRecord]]:
    """Grid-select (nu, gamma) minimizing validation miss rate.

    The validation set must contain genuine probes only; ties prefer the
    smaller nu, then the smaller gamma (the grid is scanned in that order
    and only strict improvements replace the incumbent).
    """
    V = np.atleast_2d(np.asarray(val_features, dtype=np.float64))
    if V.shape[0] < 1:
        raise ValueError("validation set must be non-empty")
    best: OcSvmModel | None = None
    best_p_miss = np.inf
    records: list[SelectionRecord] = []
    for nu in sorted(float(x) for x in nus):
        for gamma in sorted(float(x) for x in gammas):
            model = fit(train_features, nu=nu, kernel_gamma=gamma, kernel=kernel, tol=tol)
            scores = decision_scores(model, V)
            p_miss = float(np.mean(scores <= 0.0))
            records.append(SelectionRecord(nu, gamma, p_miss))
            if p_miss < best_p_miss:
                best = model
                best_p_miss = p_miss
    assert best is not None
    return best, records
