"""Cross-validation estimates computed as exact finite expectations.

For a plan, a dataset, a hypothesis class, and a loss, the estimator is
the plan-weighted average of test-mask risks of predictors fitted on the
corresponding training masks. The plan is a finite distribution, so this
is an exact sum over atoms; nothing is sampled here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import learners
from .learners import Dataset, HypothesisClass, Loss, SyntheticDistribution
from .resampling import BinaryVector, ResamplingPlan


@dataclass(frozen=True)
class CvEstimates:
    """The four companion estimates for one dataset under one plan.

    r_hat_n: resubstitution estimate (fit on everything, score on
    everything). r_cv: the cross-validation estimate. r_tilde_n:
    generalization error of the full-sample fit, when the generating
    distribution is known. r_bar: plan-weighted expected true risk of the
    fold-trained predictors, again requiring the distribution.
    """

    r_hat_n: float
    r_cv: float
    r_tilde_n: float | None = None
    r_bar: float | None = None


def supports_exact_comparison(plan: ResamplingPlan, cls: HypothesisClass, loss: Loss) -> bool:
    """Whether r_cv >= r_hat_n is guaranteed for this configuration.

    Requires a symmetric plan with equal test sizes, exact ERM (zero-one
    loss), and a fitter that ignores sample order; the last holds for both
    classes implemented here.
    """
    return loss.kind == "zero-one" and plan.equal_test_sizes and plan.symmetric()


def _check_compatible(plan: ResamplingPlan, d: Dataset, loss: Loss) -> None:
    if plan.n != d.n:
        raise ValueError(f"plan is for n={plan.n}, dataset has n={d.n}")
    if loss.kind != "zero-one":
        raise ValueError("exact risk minimization is supported for the zero-one loss only")


def _atom_fits_and_counts(plan: ResamplingPlan, d: Dataset, cls: HypothesisClass, loss: Loss):
    """Per-atom ERM fits plus integer test-error counts and test sizes."""
    _check_compatible(plan, d, loss)
    if cls.kind == "threshold" and plan.equal_test_sizes:
        xs = d.x[plan.train_index_matrix]
        ys = d.y[plan.train_index_matrix]
        t, _ = learners._batch_threshold_erm(xs, ys)
        xt = d.x[plan.test_index_matrix]
        yt = d.y[plan.test_index_matrix]
        preds = (xt >= t[:, None]).astype(np.float64)
        counts = (preds != yt).sum(axis=1).astype(np.int64)
        sizes = np.full(plan.num_atoms, plan.test_size, dtype=np.int64)
        fits = [learners.ThresholdPredictor(float(ti)) for ti in t]
        return fits, counts, sizes
    fits = []
    counts = np.empty(plan.num_atoms, dtype=np.int64)
    sizes = np.empty(plan.num_atoms, dtype=np.int64)
    for a, (v, _) in enumerate(plan.atoms):
        phi = learners.erm_fit(cls, v, d, loss)
        ts_mask = ~np.array(v.bits, dtype=bool)
        preds = phi.predict(d.x[ts_mask])
        counts[a] = int((preds != d.y[ts_mask]).sum())
        sizes[a] = int(ts_mask.sum())
        fits.append(phi)
    return fits, counts, sizes


def atom_predictors(plan: ResamplingPlan, d: Dataset, cls: HypothesisClass, loss: Loss):
    """Per-atom train-mask ERM fits, in atom order."""
    fits, _, _ = _atom_fits_and_counts(plan, d, cls, loss)
    return fits


def atom_risks(plan: ResamplingPlan, d: Dataset, cls: HypothesisClass, loss: Loss) -> np.ndarray:
    """Test-mask risk of the train-mask fit, one entry per atom."""
    _, counts, sizes = _atom_fits_and_counts(plan, d, cls, loss)
    return counts / sizes.astype(np.float64)


def cross_validate(plan: ResamplingPlan, d: Dataset, cls: HypothesisClass, loss: Loss) -> float:
    """Plan-weighted average of test risks; exact expectation over atoms.

    Terms are combined with compensated summation in atom order, so the
    value is reproducible and independent of any internal batching.
    """
    risks = atom_risks(plan, d, cls, loss)
    terms = plan.probs * risks
    return math.fsum(terms.tolist())


def _full_fit_and_count(d: Dataset, cls: HypothesisClass, loss: Loss):
    ones = BinaryVector((1,) * d.n)
    phi = learners.erm_fit(cls, ones, d, loss)
    errs = int((phi.predict(d.x) != d.y).sum())
    return phi, errs


def resubstitution(d: Dataset, cls: HypothesisClass, loss: Loss) -> float:
    """Risk of the full-sample fit on its own training data."""
    _, errs = _full_fit_and_count(d, cls, loss)
    return errs / d.n


def estimates(
    plan: ResamplingPlan,
    d: Dataset,
    cls: HypothesisClass,
    loss: Loss,
    dist: SyntheticDistribution | None = None,
) -> CvEstimates:
    """All four companion quantities; the last two need the distribution."""
    phi_full, full_errs = _full_fit_and_count(d, cls, loss)
    fits, counts, sizes = _atom_fits_and_counts(plan, d, cls, loss)
    risks = counts / sizes.astype(np.float64)
    r_cv = math.fsum((plan.probs * risks).tolist())
    r_hat_n = full_errs / d.n
    r_tilde_n = None
    r_bar = None
    if dist is not None:
        r_tilde_n = learners.true_risk(phi_full, dist, loss)
        true_risks = np.array(
            [learners.true_risk(phi, dist, loss) for phi in fits], dtype=np.float64
        )
        r_bar = math.fsum((plan.probs * true_risks).tolist())
    return CvEstimates(r_hat_n=r_hat_n, r_cv=r_cv, r_tilde_n=r_tilde_n, r_bar=r_bar)


def cv_at_least_resub_exact(
    plan: ResamplingPlan, d: Dataset, cls: HypothesisClass, loss: Loss
) -> bool:
    """Exact (integer/rational arithmetic) check that r_cv >= r_hat_n.

    For uniform equal-test-size plans the comparison reduces to integers;
    otherwise atom probabilities are lifted to exact fractions of their
    float values. No floating tolerance is involved either way.
    """
    _, full_errs = _full_fit_and_count(d, cls, loss)
    _, counts, sizes = _atom_fits_and_counts(plan, d, cls, loss)
    if plan.equal_test_sizes and plan.uniform:
        lhs = d.n * int(counts.sum())
        rhs = plan.num_atoms * plan.test_size * full_errs
        return lhs >= rhs
    total = Fraction(0)
    for (v, prob), cnt, ts in zip(plan.atoms, counts, sizes):
        total += Fraction(prob) * Fraction(int(cnt), int(ts))
    return total >= Fraction(full_errs, d.n)
