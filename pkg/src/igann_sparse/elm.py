"""Extreme learning machine layers with per-feature sub-networks.

A layer maps each of the ``m`` input columns independently onto ``k``
nonlinear hidden activations, so hidden unit ``(i, j)`` reads only column
``i``. The hidden weights are random and never trained; fitting the model is
a ridge-regularized linear solve on the activation matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _elu(x: np.ndarray) -> np.ndarray:
    out = np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))
    return out


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


ACTIVATIONS = {
    "elu": _elu,
    "tanh": np.tanh,
    "relu": _relu,
}


@dataclass(frozen=True)
class ELMLayer:
    """Random input weights and biases for ``m`` per-feature blocks of ``k`` units."""

    weights: np.ndarray  # (m, k)
    biases: np.ndarray  # (m, k)
    activation: str
    seed: int

    def __post_init__(self) -> None:
        if self.weights.shape != self.biases.shape or self.weights.ndim != 2:
            raise ValueError("weights and biases must both have shape (m, k)")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def m(self) -> int:
        return self.weights.shape[0]

    @property
    def k(self) -> int:
        return self.weights.shape[1]


def init_layer(m: int, k: int, activation: str = "elu", seed: int = 0) -> ELMLayer:
    """Draw a layer: weights i.i.d. standard normal, biases uniform on [-1, 1].

    Fully determined by ``(m, k, activation, seed)``.
    """
    if m < 1 or k < 1:
        raise ValueError(f"need m >= 1 and k >= 1, got m={m}, k={k}")
    rng = np.random.default_rng(seed)
    weights = rng.standard_normal((m, k))
    biases = rng.uniform(-1.0, 1.0, size=(m, k))
    return ELMLayer(weights=weights, biases=biases, activation=activation, seed=seed)


def restrict_layer(layer: ELMLayer, blocks: tuple[int, ...]) -> ELMLayer:
    """Keep only the sub-networks for the given block indices, in order."""
    idx = np.asarray(blocks, dtype=int)
    return ELMLayer(
        weights=layer.weights[idx],
        biases=layer.biases[idx],
        activation=layer.activation,
        seed=layer.seed,
    )


@dataclass(frozen=True)
class BlockActivations:
    """Activation matrix with block layout: columns ``[i*k, (i+1)*k)`` belong to feature ``i``."""

    values: np.ndarray  # (n, m*k)
    m: int
    k: int

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def block_slice(self, i: int) -> slice:
        return slice(i * self.k, (i + 1) * self.k)

    def block(self, i: int) -> np.ndarray:
        return self.values[:, self.block_slice(i)]


def activations(layer: ELMLayer, X: np.ndarray) -> BlockActivations:
    """Evaluate ``act(w_ij * X[:, i] + b_ij)`` for every hidden unit.

    ``X`` must have exactly ``layer.m`` columns. Block ``i`` of the result
    depends only on column ``i`` of ``X``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != layer.m:
        raise ValueError(f"X must have {layer.m} columns, got shape {X.shape}")
    act = ACTIVATIONS[layer.activation]
    pre = X[:, :, None] * layer.weights[None, :, :] + layer.biases[None, :, :]
    values = act(pre.reshape(X.shape[0], layer.m * layer.k))
    return BlockActivations(values=values, m=layer.m, k=layer.k)


@dataclass(frozen=True)
class OutputCoefficients:
    """Fitted output layer: one coefficient per hidden unit plus an intercept."""

    beta: np.ndarray
    intercept: float


def _solve_ridge(H: np.ndarray, r: np.ndarray, lam: float) -> np.ndarray:
    # normal equations with an LU solve; least-squares fallback covers the
    # rank-deficient lam=0 case
    gram = H.T @ H
    gram[np.diag_indices_from(gram)] += lam
    rhs = H.T @ r
    try:
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        beta = np.linalg.lstsq(H, r, rcond=None)[0]
    if not np.all(np.isfinite(beta)):
        beta = np.linalg.lstsq(H, r, rcond=None)[0]
    return beta


def ridge_fit(
    H: BlockActivations | np.ndarray,
    r: np.ndarray,
    lam: float = 1e-3,
    fit_intercept: bool = True,
) -> OutputCoefficients:
    """Solve ``min_beta ||r - H beta||^2 + lam ||beta||^2``.

    With ``fit_intercept`` the intercept is fitted unpenalized by centering
    both sides; without it the solution is exactly
    ``(H^T H + lam I)^{-1} H^T r``.
    """
    if isinstance(H, BlockActivations):
        H = H.values
    H = np.asarray(H, dtype=float)
    r = np.asarray(r, dtype=float)
    if H.ndim != 2 or r.ndim != 1 or H.shape[0] != r.shape[0]:
        raise ValueError(f"shape mismatch: H {H.shape} vs r {r.shape}")
    if lam < 0:
        raise ValueError(f"ridge strength must be nonnegative, got {lam}")
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(r))):
        raise ValueError("non-finite values in ridge_fit inputs")

    if fit_intercept:
        col_mean = H.mean(axis=0)
        r_mean = float(r.mean())
        beta = _solve_ridge(H - col_mean, r - r_mean, lam)
        intercept = r_mean - float(col_mean @ beta)
    else:
        beta = _solve_ridge(H, r, lam)
        intercept = 0.0
    return OutputCoefficients(beta=beta, intercept=intercept)
