"""Block-wise best-subset selection scored by BIC.

Each feature's ``k`` hidden activations form one block; the selector searches
over block sets, refitting ridge coefficients on the retained blocks and
scoring each candidate with ``BIC = |S| ln(n) - 2 ln(L)`` where ``|S|`` counts
blocks, not coefficients. For every support size up to ``s_max`` a candidate
is found by a splicing-style search (greedy grow from the previous size's
support, then best-pairwise-swap exchange passes until no improvement); the
overall BIC minimum across sizes wins.

Classification candidates are scored with a least-squares surrogate on the
one-step working response ``z = logit(p0) + (y - p0) / (p0 (1 - p0))`` with
``p0`` the base rate (a single Fisher-scoring step from the intercept-only
model); the final selected subset is refit exactly by penalized IRLS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import CLASSIFICATION, REGRESSION
from .elm import BlockActivations

PROB_CLIP = 1e-12

# minimum lnL gain for the exchange pass to accept a swap; guards against
# cycling on numerically tied candidates
_SWAP_TOL = 1e-12


@dataclass(frozen=True)
class LossSpec:
    """Loss family used for likelihood scoring."""

    task: str
    epsilon: float = 1e-12

    def __post_init__(self) -> None:
        if self.task not in (CLASSIFICATION, REGRESSION):
            raise ValueError(f"unknown task {self.task!r}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def log_likelihood(spec: LossSpec, y: np.ndarray, pred: np.ndarray) -> float:
    """Log-likelihood of predictions under the loss family.

    Regression uses the Gaussian profile likelihood with variance
    ``max(MSE, epsilon)``; classification treats ``pred`` as Bernoulli
    probabilities, clamped away from 0 and 1.
    """
    y = np.asarray(y, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if y.shape != pred.shape:
        raise ValueError(f"length mismatch: y {y.shape} vs pred {pred.shape}")
    n = y.shape[0]
    if spec.task == REGRESSION:
        sigma2 = max(float(np.mean((y - pred) ** 2)), spec.epsilon)
        return -0.5 * n * (math.log(2.0 * math.pi * sigma2) + 1.0)
    p = np.clip(pred, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(np.sum(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def bic(s: int, n: int, log_lik: float) -> float:
    """``s * ln(n) - 2 * log_lik`` with ``s`` the number of selected blocks."""
    if s < 0:
        raise ValueError(f"selected block count must be nonnegative, got {s}")
    if n < 1:
        raise ValueError(f"need at least one observation, got {n}")
    return s * math.log(n) - 2.0 * log_lik


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True)
class SubsetSelection:
    """Result of the sparsity layer.

    ``blocks`` is the sorted selected block index set; ``beta`` holds the
    refit coefficients for the retained blocks (length ``|S| * k``) and
    ``intercept`` the unpenalized offset, both on the link scale for
    classification. ``trace`` records the best BIC found at each candidate
    support size.
    """

    blocks: tuple[int, ...]
    beta: np.ndarray
    intercept: float
    bic: float
    log_lik: float
    trace: tuple[tuple[int, float], ...]

    @property
    def size(self) -> int:
        return len(self.blocks)


class _Scorer:
    """Candidate evaluation on a shared centered Gram matrix."""

    def __init__(self, acts: BlockActivations, y: np.ndarray, spec: LossSpec, lam: float):
        H = acts.values
        self.k = acts.k
        self.m = acts.m
        self.n = H.shape[0]
        self.spec = spec
        self.lam = lam
        self.y = y

        if spec.task == CLASSIFICATION:
            p0 = min(max(float(np.mean(y)), PROB_CLIP), 1.0 - PROB_CLIP)
            target = math.log(p0 / (1.0 - p0)) + (y - p0) / (p0 * (1.0 - p0))
        else:
            target = y
        self.target_mean = float(np.mean(target))
        self.H_mean = H.mean(axis=0)
        self.Hc = H - self.H_mean
        tc = target - self.target_mean
        self.gram = self.Hc.T @ self.Hc
        self.corr = self.Hc.T @ tc
        if float(np.max(np.abs(self.gram.diagonal()), initial=0.0)) <= 1e-24:
            raise ValueError("degenerate activations: every column is constant")
        self._lnl_cache: dict[tuple[int, ...], float] = {}

    def _cols(self, blocks: tuple[int, ...]) -> np.ndarray:
        k = self.k
        return np.concatenate([np.arange(b * k, (b + 1) * k) for b in blocks])

    def fit(self, blocks: tuple[int, ...]) -> tuple[np.ndarray, float, np.ndarray]:
        """Ridge fit restricted to ``blocks``; returns (beta, intercept, link predictions)."""
        if not blocks:
            beta = np.zeros(0)
            pred = np.full(self.n, self.target_mean)
            return beta, self.target_mean, pred
        cols = self._cols(blocks)
        gram = self.gram[np.ix_(cols, cols)].copy()
        gram[np.diag_indices_from(gram)] += self.lam
        try:
            beta = np.linalg.solve(gram, self.corr[cols])
        except np.linalg.LinAlgError:
            beta = np.linalg.lstsq(gram, self.corr[cols], rcond=None)[0]
        offset = self.target_mean - float(self.H_mean[cols] @ beta)
        pred = self.target_mean + self.Hc[:, cols] @ beta
        return beta, offset, pred

    def log_lik(self, blocks: tuple[int, ...]) -> float:
        cached = self._lnl_cache.get(blocks)
        if cached is not None:
            return cached
        _, _, pred = self.fit(blocks)
        if self.spec.task == CLASSIFICATION:
            value = log_likelihood(self.spec, self.y, sigmoid(pred))
        else:
            value = log_likelihood(self.spec, self.y, pred)
        self._lnl_cache[blocks] = value
        return value


def _grow(scorer: _Scorer, support: tuple[int, ...]) -> tuple[int, ...]:
    """Add the block giving the largest likelihood gain (ties: smallest index)."""
    members = set(support)
    best_lnl = -math.inf
    best_j = -1
    for j in range(scorer.m):
        if j in members:
            continue
        lnl = scorer.log_lik(tuple(sorted(support + (j,))))
        if lnl > best_lnl:
            best_lnl = lnl
            best_j = j
    return tuple(sorted(support + (best_j,)))


def _exchange(scorer: _Scorer, support: tuple[int, ...], max_passes: int) -> tuple[int, ...]:
    """Best-pairwise-swap local search at fixed support size."""
    current = tuple(sorted(support))
    current_lnl = scorer.log_lik(current)
    for _ in range(max_passes):
        best_lnl = current_lnl + _SWAP_TOL
        best_support: tuple[int, ...] | None = None
        members = set(current)
        for drop in current:
            reduced = tuple(b for b in current if b != drop)
            for add in range(scorer.m):
                if add in members:
                    continue
                cand = tuple(sorted(reduced + (add,)))
                lnl = scorer.log_lik(cand)
                if lnl > best_lnl:
                    best_lnl = lnl
                    best_support = cand
        if best_support is None:
            break
        current = best_support
        current_lnl = scorer.log_lik(current)
    return current


def _logistic_ridge(H: np.ndarray, y: np.ndarray, lam: float, max_iter: int = 100) -> tuple[np.ndarray, float]:
    """Penalized logistic regression by Newton's method, intercept unpenalized."""
    n, p = H.shape
    design = np.hstack([np.ones((n, 1)), H])
    params = np.zeros(p + 1)
    p0 = min(max(float(np.mean(y)), PROB_CLIP), 1.0 - PROB_CLIP)
    params[0] = math.log(p0 / (1.0 - p0))
    penalty = np.full(p + 1, lam)
    penalty[0] = 0.0
    nll_prev = None
    for _ in range(max_iter):
        link = design @ params
        prob = sigmoid(link)
        grad = design.T @ (prob - y) + penalty * params
        weights = np.maximum(prob * (1.0 - prob), 1e-10)
        hess = design.T @ (design * weights[:, None])
        hess[np.diag_indices_from(hess)] += np.maximum(penalty, 1e-12)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        # backtracking on the penalized objective
        pc = np.clip(prob, PROB_CLIP, 1.0 - PROB_CLIP)
        nll = -float(np.sum(y * np.log(pc) + (1 - y) * np.log1p(-pc))) + 0.5 * float(penalty @ params**2)
        scale = 1.0
        for _ in range(30):
            trial = params - scale * step
            prob_t = np.clip(sigmoid(design @ trial), PROB_CLIP, 1.0 - PROB_CLIP)
            nll_t = -float(np.sum(y * np.log(prob_t) + (1 - y) * np.log1p(-prob_t))) + 0.5 * float(
                penalty @ trial**2
            )
            if nll_t <= nll:
                break
            scale *= 0.5
        params = params - scale * step
        if float(np.max(np.abs(scale * step))) < 1e-10:
            break
        if nll_prev is not None and abs(nll_prev - nll) < 1e-12 * max(1.0, abs(nll)):
            break
        nll_prev = nll
    return params[1:], float(params[0])


def best_subset(
    acts: BlockActivations,
    y: np.ndarray,
    spec: LossSpec,
    s_max: int | None = None,
    lam: float = 1e-3,
    sizes: list[int] | None = None,
    df_mode: str = "coefficients",
) -> SubsetSelection:
    """Select the block subset minimizing BIC.

    Parameters
    ----------
    acts : BlockActivations
        Activation matrix with block layout.
    y : ndarray
        Target vector ({0,1} for classification).
    spec : LossSpec
        Loss family for likelihood scoring.
    s_max : int, optional
        Largest support size considered; defaults to ``min(m, 50)``.
    lam : float
        Ridge strength for candidate refits.
    sizes : list of int, optional
        Explicit support sizes to search instead of ``0..s_max`` (used by the
        feature-count sweep to force an exact size).
    df_mode : {"coefficients", "blocks"}
        Degrees of freedom charged per selected block in the BIC penalty:
        ``coefficients`` (default) charges the ``k`` coefficients a block
        actually spends, which is what makes noise blocks unprofitable;
        ``blocks`` charges one unit per block. With ``blocks`` the expected
        likelihood gain of a pure-noise block (about ``k`` on the 2-ln-L
        scale) exceeds ``ln(n)`` for practical sizes, so the selector stops
        being sparse; the mode is kept for sensitivity analysis.

    Ties are broken toward smaller supports, then lexicographically smaller
    block sets.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[0] != acts.n:
        raise ValueError(f"length mismatch: activations {acts.n} rows vs y {y.shape[0]}")
    if df_mode not in ("blocks", "coefficients"):
        raise ValueError(f"unknown df_mode {df_mode!r}")
    m = acts.m
    if s_max is None:
        s_max = min(m, 50)
    if s_max > m:
        raise ValueError(f"s_max {s_max} exceeds block count {m}")
    if sizes is None:
        sizes = list(range(0, s_max + 1))
    else:
        sizes = sorted(set(int(s) for s in sizes))
        if sizes and (sizes[0] < 0 or sizes[-1] > m):
            raise ValueError(f"support sizes must lie in [0, {m}]")
    scorer = _Scorer(acts, y, spec, lam)
    n = scorer.n
    max_passes = 10 * m

    def penalized(support: tuple[int, ...]) -> float:
        count = len(support) if df_mode == "blocks" else len(support) * acts.k
        return bic(count, n, scorer.log_lik(support))

    # marginal ranking for the alternative start
    marginal = np.array([scorer.log_lik((j,)) for j in range(m)])
    marginal_order = np.argsort(-marginal, kind="stable")

    trace: list[tuple[int, float]] = []
    best_support: tuple[int, ...] | None = None
    best_bic = math.inf
    prev: tuple[int, ...] = ()
    for s in sizes:
        if s == 0:
            support = ()
        else:
            while len(prev) < s - 1:
                prev = _grow(scorer, prev)
            if len(prev) > s - 1:
                prev = tuple(sorted(marginal_order[: s - 1]))
            candidates = [_exchange(scorer, _grow(scorer, prev), max_passes)]
            alt = tuple(sorted(int(j) for j in marginal_order[:s]))
            if alt != candidates[0]:
                candidates.append(_exchange(scorer, alt, max_passes))
            support = candidates[0]
            if len(candidates) == 2:
                lnl0 = scorer.log_lik(candidates[0])
                lnl1 = scorer.log_lik(candidates[1])
                if lnl1 > lnl0 or (lnl1 == lnl0 and candidates[1] < candidates[0]):
                    support = candidates[1]
        value = penalized(support)
        trace.append((s, value))
        if value < best_bic:
            best_bic = value
            best_support = support
        prev = support

    assert best_support is not None

    # exact refit of the winning subset
    if spec.task == CLASSIFICATION and best_support:
        cols = scorer._cols(best_support)
        beta, intercept = _logistic_ridge(acts.values[:, cols], y, lam)
        pred = sigmoid(acts.values[:, cols] @ beta + intercept)
        final_lnl = log_likelihood(spec, y, pred)
    elif spec.task == CLASSIFICATION:
        p0 = min(max(float(np.mean(y)), PROB_CLIP), 1.0 - PROB_CLIP)
        beta, intercept = np.zeros(0), math.log(p0 / (1.0 - p0))
        final_lnl = log_likelihood(spec, y, np.full(n, p0))
    else:
        beta, intercept, pred = scorer.fit(best_support)
        final_lnl = log_likelihood(spec, y, pred)
    count = len(best_support) if df_mode == "blocks" else len(best_support) * acts.k
    final_bic = bic(count, n, final_lnl)
    return SubsetSelection(
        blocks=best_support,
        beta=beta,
        intercept=intercept,
        bic=final_bic,
        log_lik=final_lnl,
        trace=tuple(trace),
    )
