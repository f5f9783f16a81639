"""Class-weighted RBF soft-margin SVM trained with two-variable SMO.

The dual solved here is::

    min  1/2 a'Qa - sum(a)   s.t.  0 <= a_i <= C * w(y_i),  y'a = 0

with ``Q_ij = y_i y_j exp(-gamma |x_i - x_j|^2)`` and labels mapped to
+1 (trojan) / -1 (non-trojan). Working pairs use second-order selection
(maximal violator first, then the partner with the largest objective
gain) and the bias follows the usual free-vector average.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .metrics import Confusion, get_metric

DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0, 1000.0)
# "1/d" is resolved against the number of features a model consumes.
DEFAULT_GAMMA_GRID = (0.01, 0.1, "1/d", 1.0, 10.0)


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class KernelParams:
    gamma: float
    C: float
    class_weight: Mapping[int, float] = field(default_factory=lambda: {0: 1.0, 1: 1.0})

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.C > 0:
            raise ValueError("C must be positive")
        if any(not w > 0 for w in self.class_weight.values()):
            raise ValueError("class weights must be positive")

    def penalty(self, label: int) -> float:
        return self.C * self.class_weight.get(label, 1.0)


@dataclass(frozen=True)
class Scaler:
    means: tuple[float, ...]
    stds: tuple[float, ...]

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaler":
        means = X.mean(axis=0)
        stds = X.std(axis=0)
        stds = np.where(stds > 0, stds, 1.0)
        return cls(tuple(float(v) for v in means), tuple(float(v) for v in stds))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - np.asarray(self.means)) / np.asarray(self.stds)


def rbf(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass(frozen=True, eq=False)
class TrainedSvm:
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    params: KernelParams
    feature_mask: tuple[bool, ...]
    scaler: Scaler | None = None
    converged: bool = True
    n_iter: int = 0
    dual_objective: float = 0.0

    @property
    def n_features_in(self) -> int:
        return len(self.feature_mask)

    def _prepare(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features_in:
            raise ValueError(f"expected {self.n_features_in} features, got {X.shape[1]}")
        X = X[:, np.asarray(self.feature_mask)]
        if self.scaler is not None:
            X = self.scaler.transform(X)
        return X

    def decision_function(self, X) -> np.ndarray:
        Z = self._prepare(X)
        if len(self.dual_coefs) == 0:
            return np.full(len(Z), self.bias)
        return rbf(Z, self.support_vectors, self.params.gamma) @ self.dual_coefs + self.bias

    def decision_value(self, x: Sequence[float]) -> float:
        return float(self.decision_function([x])[0])

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(int)

    def classify(self, x: Sequence[float]) -> int:
        return int(self.decision_value(x) > 0)

    # serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "mask": list(self.feature_mask),
            "gamma": self.params.gamma,
            "C": self.params.C,
            "class_weight": {str(k): v for k, v in sorted(self.params.class_weight.items())},
            "scaler": None if self.scaler is None else
            {"means": list(self.scaler.means), "stds": list(self.scaler.stds)},
            "svs": self.support_vectors.tolist(),
            "dual_coefs": self.dual_coefs.tolist(),
            "bias": self.bias,
            "converged": self.converged,
            "n_iter": self.n_iter,
            "dual_objective": self.dual_objective,
        }

    def to_json(self) -> str:
        # json emits repr() floats, which round-trip exactly
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrainedSvm":
        mask = tuple(bool(v) for v in d["mask"])
        width = sum(mask)
        svs = np.asarray(d["svs"], dtype=float).reshape(-1, width)
        sc = d.get("scaler")
        return cls(
            support_vectors=svs,
            dual_coefs=np.asarray(d["dual_coefs"], dtype=float),
            bias=float(d["bias"]),
            params=KernelParams(float(d["gamma"]), float(d["C"]),
                                {int(k): float(v) for k, v in d["class_weight"].items()}),
            feature_mask=mask,
            scaler=None if sc is None else Scaler(tuple(sc["means"]), tuple(sc["stds"])),
            converged=bool(d.get("converged", True)),
            n_iter=int(d.get("n_iter", 0)),
            dual_objective=float(d.get("dual_objective", 0.0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "TrainedSvm":
        return cls.from_dict(json.loads(text))


@dataclass
class SmoResult:
    alpha: np.ndarray
    rho: float
    n_iter: int
    converged: bool
    objective: float


@njit(cache=True)
def _smo_loop(Q, y, upper, tol, max_iter, alpha, G):
    n = y.shape[0]
    it = 0
    tau = 1e-12
    while it < max_iter:
        # i: maximal violator in I_up; j: best second-order gain in I_low
        gmax = -np.inf
        i = -1
        for t in range(n):
            if (alpha[t] < upper[t]) if y[t] > 0 else (alpha[t] > 0):
                yg = -y[t] * G[t]
                if yg > gmax:
                    gmax = yg
                    i = t
        gmin = np.inf
        j = -1
        best = np.inf
        for t in range(n):
            if (alpha[t] > 0) if y[t] > 0 else (alpha[t] < upper[t]):
                yg = -y[t] * G[t]
                if yg < gmin:
                    gmin = yg
                if i >= 0 and yg < gmax:
                    b = gmax - yg
                    a = Q[i, i] + Q[t, t] - 2.0 * y[i] * y[t] * Q[i, t]
                    if a <= 0:
                        a = tau
                    gain = -(b * b) / a
                    if gain <= best:
                        best = gain
                        j = t
        if i < 0 or j < 0 or gmax - gmin < tol:
            return it, True
        it += 1
        Ci = upper[i]
        Cj = upper[j]
        ai_old = alpha[i]
        aj_old = alpha[j]
        if y[i] != y[j]:
            quad = max(Q[i, i] + Q[j, j] + 2.0 * Q[i, j], tau)
            delta = (-G[i] - G[j]) / quad
            diff = ai_old - aj_old
            ai = ai_old + delta
            aj = aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            elif ai < 0:
                ai = 0.0
                aj = -diff
            if diff > Ci - Cj:
                if ai > Ci:
                    ai = Ci
                    aj = Ci - diff
            elif aj > Cj:
                aj = Cj
                ai = Cj + diff
        else:
            quad = max(Q[i, i] + Q[j, j] - 2.0 * Q[i, j], tau)
            delta = (G[i] - G[j]) / quad
            total = ai_old + aj_old
            ai = ai_old - delta
            aj = aj_old + delta
            if total > Ci:
                if ai > Ci:
                    ai = Ci
                    aj = total - Ci
            elif aj < 0:
                aj = 0.0
                ai = total
            if total > Cj:
                if aj > Cj:
                    aj = Cj
                    ai = total - Cj
            elif ai < 0:
                ai = 0.0
                aj = total
        alpha[i] = ai
        alpha[j] = aj
        dai = ai - ai_old
        daj = aj - aj_old
        for t in range(n):
            G[t] += Q[i, t] * dai + Q[j, t] * daj
    return it, False


def smo(Q: np.ndarray, y: np.ndarray, upper: np.ndarray, tol: float = 1e-3,
        max_iter: int = 1_000_000, alpha0: np.ndarray | None = None) -> SmoResult:
    """Solve the box- and equality-constrained dual for a precomputed ``Q``.

    ``alpha0`` must be feasible; it seeds the solver (e.g. a solution for a
    smaller C, scaled up).
    """
    Q = np.ascontiguousarray(Q, dtype=float)
    y = np.asarray(y, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if alpha0 is None:
        alpha = np.zeros(len(y))
        G = -np.ones(len(y))
    else:
        alpha = np.minimum(np.asarray(alpha0, dtype=float).copy(), upper)
        G = Q @ alpha - 1.0
    it, converged = _smo_loop(Q, y, upper, float(tol), int(max_iter), alpha, G)
    pos = y > 0
    neg = ~pos

    yG = y * G
    at_upper = alpha >= upper
    at_lower = alpha <= 0
    free = ~at_upper & ~at_lower
    if free.any():
        rho = float(yG[free].mean())
    else:
        ub_mask = (at_upper & neg) | (at_lower & pos)
        lb_mask = (at_upper & pos) | (at_lower & neg)
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        if np.isfinite(ub) and np.isfinite(lb):
            rho = float((ub + lb) / 2)
        else:
            rho = float(ub if np.isfinite(ub) else lb)
    # 1/2 a'Qa - e'a with Qa = G + e
    objective = float(0.5 * alpha @ (G + 1.0) - alpha.sum())
    return SmoResult(alpha, rho, it, converged, objective)


def _as_mask(mask, n_features: int) -> tuple[bool, ...]:
    if mask is None:
        return (True,) * n_features
    mask = tuple(bool(m) for m in mask)
    if len(mask) != n_features or not any(mask):
        raise ValueError("feature mask must match the feature count and select at least one feature")
    return mask


@dataclass
class _Problem:
    """Standardized, de-duplicated training rows for one feature mask."""

    mask: tuple[bool, ...]
    scaler: Scaler | None
    Z: np.ndarray
    y: np.ndarray          # +1 / -1
    counts: np.ndarray

    @classmethod
    def build(cls, X, y, mask, standardize: bool) -> "_Problem":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        if X.ndim != 2 or len(X) != len(y):
            raise ValueError("X must be 2-D with one row per label")
        if set(np.unique(y).tolist()) != {0, 1}:
            raise ValueError("training data must contain both classes")
        mask_t = _as_mask(mask, X.shape[1])
        Xm = X[:, np.asarray(mask_t)]
        scaler = Scaler.fit(Xm) if standardize else None
        Z = scaler.transform(Xm) if scaler is not None else Xm
        # identical (x, y) rows collapse into one with a summed box bound
        uniq, counts = np.unique(np.column_stack([Z, y]), axis=0, return_counts=True)
        return cls(mask_t, scaler, uniq[:, :-1].copy(), np.where(uniq[:, -1] > 0, 1.0, -1.0), counts)

    def upper(self, params: KernelParams) -> np.ndarray:
        w = np.where(self.y > 0, params.penalty(1), params.penalty(0))
        return w * self.counts

    def Q(self, gamma: float) -> np.ndarray:
        return (self.y[:, None] * self.y[None, :]) * rbf(self.Z, self.Z, gamma)

    def solve(self, params: KernelParams, tol: float, max_iter: int, Q=None, alpha0=None):
        Q = self.Q(params.gamma) if Q is None else Q
        res = smo(Q, self.y, self.upper(params), tol=tol, max_iter=max_iter, alpha0=alpha0)
        sv = res.alpha > 0
        model = TrainedSvm(
            support_vectors=self.Z[sv].copy(),
            dual_coefs=(res.alpha * self.y)[sv],
            bias=-res.rho,
            params=params,
            feature_mask=self.mask,
            scaler=self.scaler,
            converged=res.converged,
            n_iter=res.n_iter,
            dual_objective=res.objective,
        )
        return model, res


def train(
    X,
    y,
    params: KernelParams,
    tol: float = 1e-3,
    max_iter: int = 1_000_000,
    *,
    mask: Sequence[bool] | None = None,
    standardize: bool = True,
) -> TrainedSvm:
    """Fit one SVM. Labels are 0/1; class 1 is the positive (trojan) class.

    Identical (x, y) rows are merged before solving, with their box bounds
    summed; this leaves the optimum unchanged.
    """
    problem = _Problem.build(X, y, mask, standardize)
    model, res = problem.solve(params, tol, max_iter)
    if not res.converged:
        warnings.warn(f"SMO stopped after {res.n_iter} updates without converging", ConvergenceWarning,
                      stacklevel=2)
    return model


def decision_value(m: TrainedSvm, x: Sequence[float]) -> float:
    return m.decision_value(x)


# model selection ------------------------------------------------------------


def stratified_folds(y: Sequence[int], folds: int, seed: int = 0) -> list[np.ndarray]:
    """Fold index arrays with each class dealt round-robin after a seeded shuffle."""
    y = np.asarray(y)
    if folds < 2:
        raise ValueError("folds must be at least 2")
    rng = np.random.default_rng(seed)
    assign = np.empty(len(y), dtype=int)
    for label in (0, 1):
        idx = np.flatnonzero(y == label)
        if len(idx) < folds:
            raise ValueError(f"class {label} has {len(idx)} samples, fewer than {folds} folds")
        idx = rng.permutation(idx)
        assign[idx] = np.arange(len(idx)) % folds
    return [np.flatnonzero(assign == f) for f in range(folds)]


def resolve_gamma(g, n_features: int) -> float:
    if isinstance(g, str):
        if g.replace(" ", "") != "1/d":
            raise ValueError(f"unknown gamma value {g!r}")
        return 1.0 / n_features
    return float(g)


def balanced_weights(y: Sequence[int]) -> dict[int, float]:
    y = np.asarray(y)
    n_t = int((y == 1).sum())
    if n_t == 0:
        raise ValueError("balance is undefined without trojan samples")
    return {0: 1.0, 1: float((y == 0).sum()) / n_t}


def _cv_scores(X, y, mask_t, cs, gammas, folds, metric, seed, tol, max_iter) -> dict[tuple[float, float], float]:
    score_fn = get_metric(metric)
    parts = stratified_folds(y, folds, seed)
    per_point: dict[tuple[float, float], list[float]] = {(C, g): [] for C in cs for g in gammas}
    for k, hold in enumerate(parts):
        fit_idx = np.concatenate([p for f, p in enumerate(parts) if f != k])
        weights = balanced_weights(y[fit_idx])
        problem = _Problem.build(X[fit_idx], y[fit_idx], mask_t, True)
        for gamma in gammas:
            Q = problem.Q(gamma)
            alpha, prev_C = None, None
            for C in cs:
                seed_alpha = None if alpha is None else alpha * (C / prev_C)
                model, res = problem.solve(KernelParams(gamma, C, weights), tol, max_iter, Q, seed_alpha)
                alpha, prev_C = res.alpha, C
                per_point[(C, gamma)].append(score_fn(Confusion.of(y[hold], model.predict(X[hold]))))
    return {key: float(np.mean(v)) for key, v in per_point.items()}


def cross_validate(X, y, C: float, gamma: float, *, mask=None, folds: int = 5, metric: str = "mcc",
                   seed: int = 0, tol: float = 1e-3, max_iter: int = 1_000_000) -> float:
    """Mean fold score with balance class weights recomputed per training fold."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    mask_t = _as_mask(mask, X.shape[1])
    return _cv_scores(X, y, mask_t, [float(C)], [float(gamma)], folds, metric, seed, tol, max_iter)[
        (float(C), float(gamma))]


def grid_search(X, y, *, mask=None, C_grid=DEFAULT_C_GRID, gamma_grid=DEFAULT_GAMMA_GRID,
                folds: int = 5, metric: str = "mcc", seed: int = 0, tol: float = 1e-3,
                max_iter: int = 1_000_000, return_scores: bool = False):
    """Pick (C, gamma) maximising mean CV score; ties go to smaller C, then smaller gamma.

    Within a fold and gamma the C values are solved in ascending order, each
    seeded with the previous solution scaled by the C ratio. The returned
    params carry balance class weights for the full ``y``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    mask_t = _as_mask(mask, X.shape[1])
    if not C_grid or not gamma_grid:
        raise ValueError("grids must be non-empty")
    cs = sorted({float(c) for c in C_grid})
    gammas = sorted({resolve_gamma(g, sum(mask_t)) for g in gamma_grid})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        scores = _cv_scores(X, y, mask_t, cs, gammas, folds, metric, seed, tol, max_iter)
    best = None
    for C in cs:
        for gamma in gammas:
            if best is None or scores[(C, gamma)] > scores[best]:
                best = (C, gamma)
    params = KernelParams(best[1], best[0], balanced_weights(y))
    return (params, scores) if return_scores else params
