"""Datasets, bounded losses, and hypothesis classes with exact ERM.

Two predictor families are provided over features in [0,1]: half-line
indicators 1{x >= t} (threshold class, vc_dim 1) and interval indicators
1{a <= x <= b} (interval class, vc_dim 2). Both admit exact minimization of
the 0/1 empirical risk by scanning canonical cut positions, which keeps
every downstream cross-validation quantity free of optimization error.
The synthetic noisy-threshold distribution has a closed-form risk, so the
generalization error of a fitted threshold is known exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .resampling import BinaryVector


@dataclass(frozen=True)
class Dataset:
    """Immutable feature/label pairs; features 1-d float, labels in [0,1]."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=np.float64)
        y = np.array(self.y, dtype=np.float64)
        if x.ndim != 1 or y.shape != x.shape:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if x.size < 1:
            raise ValueError("dataset must contain at least one pair")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("features and labels must be finite")
        if np.any(y < 0.0) or np.any(y > 1.0):
            raise ValueError("labels must lie in [0,1]")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.x.size)

    @classmethod
    def from_pairs(cls, pairs) -> "Dataset":
        xs, ys = zip(*pairs)
        return cls(np.array(xs, dtype=np.float64), np.array(ys, dtype=np.float64))

    def to_csv(self, path) -> None:
        """Write "x,y" rows at full decimal precision (repr round-trip)."""
        lines = ["x,y"]
        for xi, yi in zip(self.x, self.y):
            lines.append(f"{float(xi)!r},{float(yi)!r}")
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines or lines[0] != "x,y":
            raise ValueError('dataset CSV must start with the header "x,y"')
        pairs = []
        for ln in lines[1:]:
            sx, sy = ln.split(",")
            pairs.append((float(sx), float(sy)))
        return cls.from_pairs(pairs)


@dataclass(frozen=True)
class Loss:
    """Bounded loss with values in [0,1]; evaluator is vectorized."""

    kind: str

    def evaluate(self, y: np.ndarray, y_hat: np.ndarray) -> np.ndarray:
        if self.kind == "zero-one":
            return np.not_equal(y, y_hat).astype(np.float64)
        if self.kind == "clipped-absolute":
            return np.minimum(1.0, np.abs(np.asarray(y, dtype=np.float64) - y_hat))
        raise ValueError(f"unknown loss kind {self.kind!r}")

    def __call__(self, y, y_hat):
        return self.evaluate(np.asarray(y), np.asarray(y_hat))


ZERO_ONE = Loss("zero-one")
CLIPPED_ABSOLUTE = Loss("clipped-absolute")


@dataclass(frozen=True)
class ThresholdPredictor:
    """Half-line indicator 1{x >= threshold}."""

    threshold: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) >= self.threshold).astype(np.float64)

    def __call__(self, x):
        return self.predict(x)


@dataclass(frozen=True)
class IntervalPredictor:
    """Interval indicator 1{low <= x <= high}; low > high means empty."""

    low: float
    high: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return ((x >= self.low) & (x <= self.high)).astype(np.float64)

    def __call__(self, x):
        return self.predict(x)


EMPTY_INTERVAL = (1.0, 0.0)


@dataclass(frozen=True)
class HypothesisClass:
    """Predictor family tag plus its configured set-shattering dimension.

    vc_dim is explicit configuration, not inferred: 1 for thresholds,
    2 for intervals.
    """

    kind: str
    vc_dim: int

    def __post_init__(self) -> None:
        if self.kind not in ("threshold", "interval"):
            raise ValueError(f"unknown hypothesis class {self.kind!r}")
        if self.vc_dim < 1:
            raise ValueError("vc_dim must be >= 1")

    @classmethod
    def threshold(cls) -> "HypothesisClass":
        return cls("threshold", 1)

    @classmethod
    def interval(cls) -> "HypothesisClass":
        return cls("interval", 2)

    def sample_predictor(self, rng: np.random.Generator):
        """Random member of the class, for probabilistic minimality checks."""
        if self.kind == "threshold":
            return ThresholdPredictor(float(rng.uniform(0.0, 1.0)))
        a, b = np.sort(rng.uniform(0.0, 1.0, size=2))
        return IntervalPredictor(float(a), float(b))


@dataclass(frozen=True)
class SyntheticDistribution:
    """X uniform on [0,1]; Y = 1{X >= theta_star} flipped with probability eta."""

    theta_star: float
    eta: float
    kind: str = "noisy-threshold"

    def __post_init__(self) -> None:
        if self.kind != "noisy-threshold":
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if not (0.0 <= self.theta_star <= 1.0):
            raise ValueError("theta_star must lie in [0,1]")
        if not (0.0 <= self.eta < 0.5):
            raise ValueError("eta must lie in [0, 0.5)")

    @property
    def bayes_risk(self) -> float:
        """Minimal risk over all predictors, attained at t = theta_star."""
        return self.eta

    def sample(self, n: int, rng: np.random.Generator) -> Dataset:
        """Draw n pairs: features first, then flip indicators."""
        x = rng.random(n)
        flips = rng.random(n) < self.eta
        y = ((x >= self.theta_star) != flips).astype(np.float64)
        return Dataset(x, y)


def empirical_risk(phi, v: BinaryVector, d: Dataset, loss: Loss) -> float:
    """Mean loss of a predictor on the subsample selected by the mask.

    With the all-ones mask this is the resubstitution estimate. The sum is
    compensated (math.fsum), so the result does not depend on index order.
    """
    if v.n != d.n:
        raise ValueError(f"mask length {v.n} does not match dataset size {d.n}")
    idx = np.array(v.bits, dtype=bool)
    count = int(idx.sum())
    if count == 0:
        raise ValueError("mask selects an empty subsample")
    losses = loss.evaluate(d.y[idx], phi.predict(d.x[idx]))
    return math.fsum(losses.tolist()) / count


def _batch_threshold_erm(xs: np.ndarray, ys: np.ndarray):
    """Exact 0/1 ERM over the threshold class for a batch of subsamples.

    xs, ys have shape (B, m). Returns (thresholds, error_counts) of shape
    (B,). Candidate cuts are midpoints of consecutive sorted features with
    the two boundary positions mapped to the domain edges 0.0 and 1.0;
    among minimizers the smallest cut wins (first argmin).
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys_int = np.asarray(ys).astype(np.int64)
    bsz, m = xs.shape
    order = np.argsort(xs, axis=1, kind="stable")
    xs_s = np.take_along_axis(xs, order, axis=1)
    ys_s = np.take_along_axis(ys_int, order, axis=1)
    prefix1 = np.zeros((bsz, m + 1), dtype=np.int64)
    np.cumsum(ys_s, axis=1, out=prefix1[:, 1:])
    total1 = prefix1[:, -1:]
    total0 = m - total1
    positions = np.arange(m + 1, dtype=np.int64)
    # errors at position j: first j sorted points predicted 0, rest 1
    errors = 2 * prefix1 - positions[None, :] + total0
    cuts = np.empty((bsz, m + 1), dtype=np.float64)
    cuts[:, 0] = 0.0
    cuts[:, m] = 1.0
    realizable = np.ones((bsz, m + 1), dtype=bool)
    realizable[:, 0] = xs_s[:, 0] >= 0.0
    realizable[:, m] = xs_s[:, -1] < 1.0
    if m > 1:
        mids = 0.5 * (xs_s[:, :-1] + xs_s[:, 1:])
        cuts[:, 1:m] = mids
        # a midpoint must actually separate its neighbors after rounding
        realizable[:, 1:m] = (mids > xs_s[:, :-1]) & (mids <= xs_s[:, 1:])
    masked = np.where(realizable, errors, np.int64(m + 1))
    j_star = np.argmin(masked, axis=1)
    rows = np.arange(bsz)
    return cuts[rows, j_star], masked[rows, j_star]


def _threshold_erm(x: np.ndarray, y: np.ndarray):
    t, err = _batch_threshold_erm(x[None, :], y[None, :])
    return float(t[0]), int(err[0])


def _interval_erm(x: np.ndarray, y: np.ndarray):
    """Exact 0/1 ERM over intervals by a double scan over cut pairs.

    Ties resolve to the empty interval first, then to scan order over
    (left cut, right cut), i.e. smallest canonical left endpoint and then
    smallest right endpoint.
    """
    order = np.argsort(x, kind="stable")
    xs = np.asarray(x, dtype=np.float64)[order]
    ys = np.asarray(y).astype(np.int64)[order]
    m = len(xs)
    prefix1 = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(ys, out=prefix1[1:])
    total1 = int(prefix1[m])
    best_err = total1
    best_ab = EMPTY_INTERVAL
    for i in range(m):
        if i == 0:
            a = 0.0
            if xs[0] < 0.0:
                continue
        else:
            a = 0.5 * (xs[i - 1] + xs[i])
            if not (xs[i - 1] < a <= xs[i]):
                continue
        for j in range(i + 1, m + 1):
            if j == m:
                b = 1.0
                if xs[m - 1] > 1.0:
                    continue
            else:
                b = 0.5 * (xs[j - 1] + xs[j])
                if not (xs[j - 1] <= b < xs[j]):
                    continue
            ones_in = int(prefix1[j] - prefix1[i])
            err = total1 - ones_in + (j - i) - ones_in
            if err < best_err:
                best_err = err
                best_ab = (a, b)
    return best_ab, int(best_err)


def erm_fit(cls: HypothesisClass, v: BinaryVector, d: Dataset, loss: Loss):
    """Predictor attaining the exact minimum empirical risk on a subsample.

    Only the zero-one loss is supported; other losses are accepted by
    empirical_risk but rejected here. Deterministic under the documented
    tie-breaking rules.
    """
    if loss.kind != "zero-one":
        raise ValueError("exact risk minimization is supported for the zero-one loss only")
    if v.n != d.n:
        raise ValueError(f"mask length {v.n} does not match dataset size {d.n}")
    idx = np.array(v.bits, dtype=bool)
    if not idx.any():
        raise ValueError("mask selects an empty subsample")
    x = d.x[idx]
    y = d.y[idx]
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("both classes are defined over features in [0,1]")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("zero-one minimization needs labels in {0,1}")
    if cls.kind == "threshold":
        t, _ = _threshold_erm(x, y)
        return ThresholdPredictor(t)
    (a, b), _ = _interval_erm(x, y)
    return IntervalPredictor(a, b)


def true_risk(phi, dist: SyntheticDistribution, loss: Loss) -> float:
    """Exact risk of a threshold under the noisy-threshold distribution.

    Closed form eta + (1 - 2 eta) |t - theta_star|; any other
    predictor/loss/distribution combination is rejected, never
    approximated.
    """
    if loss.kind != "zero-one":
        raise ValueError("closed-form risk requires the zero-one loss")
    if dist.kind != "noisy-threshold":
        raise ValueError(f"unsupported distribution kind {dist.kind!r}")
    if not isinstance(phi, ThresholdPredictor):
        raise ValueError("closed-form risk requires a threshold predictor")
    t = phi.threshold
    if not (0.0 <= t <= 1.0):
        raise ValueError("threshold outside [0,1]")
    return dist.eta + (1.0 - 2.0 * dist.eta) * abs(t - dist.theta_star)


@dataclass(frozen=True)
class ShatterBound:
    """(n+1)^vc in log space, with the linear value when it fits a float."""

    log_value: float
    value: float | None


def shatter_bound(n: int, vc: int) -> ShatterBound:
    """Upper bound (n+1)^vc on the n-th shatter coefficient."""
    if n < 1 or vc < 1:
        raise ValueError("need n >= 1 and vc >= 1")
    log_value = vc * math.log(n + 1)
    value = math.exp(log_value) if log_value <= 709.0 else None
    return ShatterBound(log_value=log_value, value=value)
