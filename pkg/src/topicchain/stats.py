"""Resampled one-sided rank-sum tests and repeated-split logistic prediction.

The rank-sum test pools both samples, assigns average ranks on ties, and
reports the rank-sum of the first sample. Up to 16 pooled observations the
one-sided p is computed exactly by enumerating every split of the ranks;
larger samples use the normal approximation with tie and continuity
corrections. The alternative is fixed: the first sample is stochastically
greater.

Every randomized procedure derives an independent substream per repeat from
(seed, repeat index), so parallel and serial execution agree and results are
reproducible from the seed alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, groupby
from typing import Sequence

import numpy as np

EXACT_TOTAL_LIMIT = 16
_P_FLOOR = 1e-300


class StatsInputError(ValueError):
    """Invalid sample for a statistical procedure."""


@dataclass(frozen=True)
class RankSumResult:
    statistic: float  # rank-sum of sample a
    p_value: float
    method: str  # "exact" | "normal_approx"
    n_a: int
    n_b: int
    all_tied: bool = False


@dataclass(frozen=True)
class ResampledTest:
    repeats: int
    mean_statistic: float
    mean_p: float
    seed: int


@dataclass(frozen=True)
class LogRegModel:
    weight: float
    intercept: float
    feature_mean: float
    feature_sd: float
    log_likelihood_path: tuple[float, ...] = ()

    def predict_proba(self, xs: Sequence[float]) -> np.ndarray:
        z = (np.asarray(xs, dtype=np.float64) - self.feature_mean) / self.feature_sd
        return _sigmoid(self.weight * z + self.intercept)

    def predict(self, xs: Sequence[float], threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(xs) >= threshold).astype(np.int64)


@dataclass(frozen=True)
class AccuracyResult:
    repeats: int
    mean_accuracy: float
    accuracies: tuple[float, ...]
    seed: int


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their rank block."""
    arr = np.asarray(values, dtype=np.float64)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(arr.size, dtype=np.float64)
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _check_sample(name: str, sample: Sequence[float]) -> np.ndarray:
    arr = np.asarray(sample, dtype=np.float64)
    if arr.size == 0:
        raise StatsInputError(f"{name} sample is empty")
    if not np.all(np.isfinite(arr)):
        raise StatsInputError(f"{name} sample has non-finite values")
    return arr


def rank_sum_test(
    a: Sequence[float], b: Sequence[float], alternative: str = "a_greater"
) -> RankSumResult:
    """One-sided two-sample rank-sum test of H1: a stochastically greater than b."""
    if alternative != "a_greater":
        raise ValueError("only the a_greater alternative is supported")
    a_arr = _check_sample("a", a)
    b_arr = _check_sample("b", b)
    n_a, n_b = a_arr.size, b_arr.size
    total = n_a + n_b
    pooled = np.concatenate([a_arr, b_arr])
    ranks = average_ranks(pooled)
    statistic = float(np.sum(ranks[:n_a]))
    all_tied = bool(np.all(pooled == pooled[0]))

    if total <= EXACT_TOTAL_LIMIT:
        count = 0
        n_comb = math.comb(total, n_a)
        threshold = statistic - 1e-9
        rank_list = ranks.tolist()
        for subset in combinations(range(total), n_a):
            s = 0.0
            for idx in subset:
                s += rank_list[idx]
            if s >= threshold:
                count += 1
        return RankSumResult(
            statistic, count / n_comb, "exact", n_a, n_b, all_tied
        )

    if all_tied:
        return RankSumResult(statistic, 1.0, "normal_approx", n_a, n_b, True)
    u = statistic - n_a * (n_a + 1) / 2.0
    mean_u = n_a * n_b / 2.0
    tie_term = _tie_sum(pooled)
    var_u = (n_a * n_b / 12.0) * ((total + 1) - tie_term / (total * (total - 1)))
    if var_u <= 0.0:
        return RankSumResult(statistic, 1.0, "normal_approx", n_a, n_b, True)
    z = (u - mean_u - 0.5) / math.sqrt(var_u)
    p = 0.5 * math.erfc(z / math.sqrt(2.0))
    p = min(max(p, _P_FLOOR), 1.0)
    return RankSumResult(statistic, p, "normal_approx", n_a, n_b, all_tied)


def _tie_sum(pooled: np.ndarray) -> float:
    ordered = np.sort(pooled)
    return float(
        sum(
            t**3 - t
            for t in (len(list(g)) for _, g in groupby(ordered.tolist()))
        )
    )


def mann_whitney_u(result: RankSumResult) -> float:
    """The U statistic equivalent to the reported rank-sum."""
    return result.statistic - result.n_a * (result.n_a + 1) / 2.0


def _repeat_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed & (2**64 - 1), index)))


def resampled_group_test(
    drop: Sequence[float],
    nondrop: Sequence[float],
    repeats: int = 1000,
    seed: int = 0,
) -> ResampledTest:
    """Repeatedly subsample nondrop down to |drop| and average the test outputs.

    Each repeat draws without replacement from its own (seed, index)
    substream; repeats are independent and may overlap.
    """
    drop_arr = _check_sample("drop", drop)
    nondrop_arr = _check_sample("nondrop", nondrop)
    if repeats < 1:
        raise StatsInputError("repeats must be >= 1")
    if nondrop_arr.size < drop_arr.size:
        raise StatsInputError(
            f"nondrop sample ({nondrop_arr.size}) smaller than drop ({drop_arr.size})"
        )
    stats = []
    ps = []
    for i in range(repeats):
        rng = _repeat_rng(seed, i)
        idx = rng.choice(nondrop_arr.size, size=drop_arr.size, replace=False)
        result = rank_sum_test(drop_arr, nondrop_arr[idx])
        stats.append(result.statistic)
        ps.append(result.p_value)
    return ResampledTest(
        repeats=repeats,
        mean_statistic=math.fsum(stats) / repeats,
        mean_p=math.fsum(ps) / repeats,
        seed=seed,
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_likelihood(p: np.ndarray, y: np.ndarray) -> float:
    eps = 1e-12
    p = np.clip(p, eps, 1.0 - eps)
    return float(np.sum(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def train_logreg(
    xs: Sequence[float],
    ys: Sequence[int],
    max_iter: int = 200,
    grad_tol: float = 1e-8,
) -> LogRegModel:
    """Fit p(y=1|x) = sigmoid(w z + b) on the standardized feature z.

    Damped Newton iteration: a step is halved until the log-likelihood does
    not decrease, so the likelihood path is monotone. Deterministic.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.size != y.size or x.size == 0:
        raise StatsInputError("features and labels must be equal-length, non-empty")
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise StatsInputError("labels must be binary 0/1")
    if classes.size < 2:
        raise StatsInputError("single-class input: both labels required")
    mean = float(np.mean(x))
    sd = float(np.std(x))
    if sd == 0.0:
        raise StatsInputError("zero-variance feature")
    z = (x - mean) / sd

    w, b = 0.0, 0.0
    p = _sigmoid(w * z + b)
    ll = _log_likelihood(p, y)
    path = [ll]
    for _ in range(max_iter):
        resid = y - p
        grad = np.array([float(np.dot(resid, z)), float(np.sum(resid))])
        if math.hypot(*grad) < grad_tol:
            break
        s = p * (1.0 - p)
        h = np.array(
            [
                [float(np.dot(s, z * z)), float(np.dot(s, z))],
                [float(np.dot(s, z)), float(np.sum(s))],
            ]
        )
        try:
            step = np.linalg.solve(h, grad)
        except np.linalg.LinAlgError:
            break
        scale = 1.0
        improved = False
        for _ in range(50):
            w_new, b_new = w + scale * step[0], b + scale * step[1]
            p_new = _sigmoid(w_new * z + b_new)
            ll_new = _log_likelihood(p_new, y)
            if ll_new >= ll:
                improved = True
                break
            scale *= 0.5
        if not improved:
            break
        w, b, p, ll = w_new, b_new, p_new, ll_new
        path.append(ll)
    return LogRegModel(w, b, mean, sd, tuple(path))


def repeated_split_accuracy(
    records: Sequence[tuple[float, bool]],
    repeats: int = 100,
    train_frac: float = 0.75,
    seed: int = 0,
) -> AccuracyResult:
    """Mean held-out accuracy over class-balanced stratified splits.

    Per repeat: the larger class is subsampled to the smaller class's size,
    each class is split train/test by ``train_frac``, a fresh model is fit,
    and held-out accuracy is scored at threshold 0.5.
    """
    if repeats < 1:
        raise StatsInputError("repeats must be >= 1")
    if not 0.0 < train_frac < 1.0:
        raise StatsInputError("train_frac must be in (0, 1)")
    xs = np.array([r[0] for r in records], dtype=np.float64)
    ys = np.array([1 if r[1] else 0 for r in records], dtype=np.int64)
    pos_idx = np.flatnonzero(ys == 1)
    neg_idx = np.flatnonzero(ys == 0)
    if pos_idx.size < 2 or neg_idx.size < 2:
        raise StatsInputError("need at least 2 records per class to split")
    m = min(pos_idx.size, neg_idx.size)
    n_train = min(max(int(round(train_frac * m)), 1), m - 1)

    accuracies = []
    for i in range(repeats):
        rng = _repeat_rng(seed, i)
        pos = rng.choice(pos_idx, size=m, replace=False)
        neg = rng.choice(neg_idx, size=m, replace=False)
        rng.shuffle(pos)
        rng.shuffle(neg)
        train = np.concatenate([pos[:n_train], neg[:n_train]])
        test = np.concatenate([pos[n_train:], neg[n_train:]])
        model = train_logreg(xs[train], ys[train])
        predicted = model.predict(xs[test])
        accuracies.append(float(np.mean(predicted == ys[test])))
    return AccuracyResult(
        repeats=repeats,
        mean_accuracy=math.fsum(accuracies) / repeats,
        accuracies=tuple(accuracies),
        seed=seed,
    )
