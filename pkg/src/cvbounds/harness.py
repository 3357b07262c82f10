"""Monte Carlo experiment engine.

Draws synthetic learning samples, runs exact ERM and cross-validation
under configured resampling plans, checks the comparison lemma (CV risk
at least resubstitution risk) in exact arithmetic, estimates deviation
tails empirically, and lines them up against the theoretical bounds.

Reproducibility contract: trial t of an experiment with master seed s
derives a two-word Philox key via the SplitMix64 finalizer,
key = (mix64(s + (2t+1)*GOLDEN), mix64(s + (2t+2)*GOLDEN)) mod 2^64,
and draws n sample points first, then n label-flip uniforms, from
Generator(Philox(key)). Any implementation following that recipe
reproduces the same datasets bit for bit. Trials are independent, so
execution order and chunking cannot change any reported number.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import bounds, cv, learners, resampling
from .learners import Dataset, HypothesisClass, SyntheticDistribution, ZERO_ONE

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

DEFAULT_EPS_GRID = (0.05, 0.1, 0.2, 0.4)


def splitmix64(z: int) -> int:
    """SplitMix64 finalizer: the standard 64-bit avalanche mix."""
    z &= MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


def trial_key(master_seed: int, trial_id: int) -> tuple[int, int]:
    """Two independent 64-bit words for one trial's generator key."""
    if trial_id < 0:
        raise ValueError("trial_id must be nonnegative")
    a = splitmix64(master_seed + (2 * trial_id + 1) * GOLDEN)
    b = splitmix64(master_seed + (2 * trial_id + 2) * GOLDEN)
    return a, b


def trial_generator(master_seed: int, trial_id: int) -> np.random.Generator:
    key = np.array(trial_key(master_seed, trial_id), dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class PlanSpec:
    """Declarative description of a resampling plan, buildable for any n.

    kinds: "kfold" (k folds), "loo", "lvo" (leave v out, exhaustive or
    montecarlo with m draws and a seed), "holdout" (test fraction p;
    test_indices defaults to the leading block of n*p indices).
    """

    kind: str
    k: int | None = None
    v: int | None = None
    mode: str = "exhaustive"
    m: int | None = None
    seed: int | None = None
    p: float | None = None
    test_indices: tuple[int, ...] | None = None

    @property
    def label(self) -> str:
        if self.kind == "kfold":
            return f"kfold-{self.k}"
        if self.kind == "loo":
            return "loo"
        if self.kind == "lvo":
            tag = "exhaustive" if self.mode == "exhaustive" else "mc"
            return f"lvo-{self.v}-{tag}"
        if self.kind == "holdout":
            return f"holdout-{self.p}"
        raise ValueError(f"unknown plan kind {self.kind!r}")

    def build(self, n: int) -> resampling.ResamplingPlan:
        if self.kind == "kfold":
            if self.k is None:
                raise ValueError("kfold plan needs k")
            return resampling.make_kfold(n, self.k)
        if self.kind == "loo":
            return resampling.make_loo(n)
        if self.kind == "lvo":
            if self.v is None:
                raise ValueError("lvo plan needs v")
            return resampling.make_leave_v_out(
                n, self.v, mode=self.mode, m=self.m, seed=self.seed
            )
        if self.kind == "holdout":
            if self.p is None:
                raise ValueError("holdout plan needs p")
            test = self.test_indices
            if test is None:
                want = n * self.p
                if abs(want - round(want)) > 1e-9:
                    raise ValueError(f"n*p = {want!r} is not an integer")
                test = tuple(range(round(want)))
            return resampling.make_holdout(n, self.p, test)
        raise ValueError(f"unknown plan kind {self.kind!r}")

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        for name in ("k", "v", "m", "seed", "p"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.kind == "lvo":
            out["mode"] = self.mode
        if self.test_indices is not None:
            out["test_indices"] = list(self.test_indices)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PlanSpec":
        data = dict(data)
        if "test_indices" in data and data["test_indices"] is not None:
            data["test_indices"] = tuple(data["test_indices"])
        return cls(**data)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of a Monte Carlo experiment.

    The synthetic distribution is a uniform design with labels flipped at
    rate eta around the step at theta_star; the analytic true risk of
    every fitted threshold makes tail estimation exact up to Monte Carlo
    over datasets only.
    """

    theta_star: float
    eta: float
    n: int
    plans: tuple[PlanSpec, ...]
    trials: int
    master_seed: int
    vc: int = 1
    hyp_kind: str = "threshold"
    eps_grid: tuple[float, ...] = DEFAULT_EPS_GRID
    grid_provenance: str = "artifact-default"

    def validate(self) -> None:
        if self.trials < 1:
            raise ValueError("need trials >= 1")
        if self.n < 2:
            raise ValueError("need n >= 2")
        if not self.plans:
            raise ValueError("need at least one plan")
        if not all(e > 0 for e in self.eps_grid):
            raise ValueError("eps grid values must be positive")
        if any(a >= b for a, b in zip(self.eps_grid, self.eps_grid[1:])):
            raise ValueError("eps grid must be strictly increasing")
        if self.vc < 1:
            raise ValueError("need vc >= 1")
        if not (0.0 <= self.eta < 0.5):
            raise ValueError("need 0 <= eta < 1/2")
        if not (0.0 <= self.theta_star <= 1.0):
            raise ValueError("theta_star must lie in [0, 1]")

    @property
    def dist(self) -> SyntheticDistribution:
        return SyntheticDistribution(theta_star=self.theta_star, eta=self.eta)

    @property
    def hypothesis_class(self) -> HypothesisClass:
        if self.hyp_kind == "threshold":
            return HypothesisClass.threshold()
        if self.hyp_kind == "interval":
            return HypothesisClass.interval()
        raise ValueError(f"unknown hypothesis kind {self.hyp_kind!r}")

    def built_plans(self) -> tuple[resampling.ResamplingPlan, ...]:
        return tuple(spec.build(self.n) for spec in self.plans)

    def to_dict(self) -> dict:
        return {
            "theta_star": self.theta_star,
            "eta": self.eta,
            "n": self.n,
            "plans": [spec.to_dict() for spec in self.plans],
            "class": {"kind": self.hyp_kind, "vc": self.vc},
            "eps_grid": list(self.eps_grid),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "grid_provenance": self.grid_provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        hyp = data.get("class", {})
        return cls(
            theta_star=float(data["theta_star"]),
            eta=float(data["eta"]),
            n=int(data["n"]),
            plans=tuple(PlanSpec.from_dict(p) for p in data["plans"]),
            trials=int(data["trials"]),
            master_seed=int(data["master_seed"]),
            vc=int(hyp.get("vc", 1)),
            hyp_kind=hyp.get("kind", "threshold"),
            eps_grid=tuple(float(e) for e in data.get("eps_grid", DEFAULT_EPS_GRID)),
            grid_provenance=data.get("grid_provenance", "user-config"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TrialRecord:
    """One trial's estimates per plan, with the deviation decomposition
    (|r_cv - r_tilde|, r_cv - r_bar, r_bar - r_tilde) and the exact
    lemma check (None for plans the lemma does not cover)."""

    trial_id: int
    estimates: tuple[cv.CvEstimates, ...]
    deviations: tuple[tuple[float, float, float], ...]
    lemma_ok: tuple[bool | None, ...]


def run_trial(cfg: ExperimentConfig, trial_id: int) -> TrialRecord:
    """Run one fully deterministic trial: record depends only on (cfg, trial_id)."""
    cfg.validate()
    rng = trial_generator(cfg.master_seed, trial_id)
    d = cfg.dist.sample(cfg.n, rng)
    cls = cfg.hypothesis_class
    ests = []
    devs = []
    lemma = []
    for plan in cfg.built_plans():
        est = cv.estimates(plan, d, cls, ZERO_ONE, dist=cfg.dist)
        ests.append(est)
        devs.append(
            (
                abs(est.r_cv - est.r_tilde_n),
                est.r_cv - est.r_bar,
                est.r_bar - est.r_tilde_n,
            )
        )
        if plan.symmetric():
            lemma.append(cv.cv_at_least_resub_exact(plan, d, cls, ZERO_ONE))
        else:
            lemma.append(None)
    return TrialRecord(
        trial_id=trial_id,
        estimates=tuple(ests),
        deviations=tuple(devs),
        lemma_ok=tuple(lemma),
    )


@dataclass(frozen=True)
class ReportRow:
    plan: str
    p: float
    eps: float
    empirical_tail: float
    slack: float
    bound_total: float
    bound_branch: str
    lemma_violations: int


@dataclass(frozen=True)
class L1Row:
    plan: str
    p: float
    empirical_mean_abs_dev: float
    l1_bound_large: float
    l1_bound_small: float


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    rows: tuple[ReportRow, ...]
    l1_rows: tuple[L1Row, ...]
    lemma_violations: tuple[int, ...]

    def to_csv(self) -> str:
        lines = [
            "plan,p,eps,empirical_tail,slack,bound_total,bound_branch,lemma_violations"
        ]
        for r in self.rows:
            lines.append(
                f"{r.plan},{r.p!r},{r.eps!r},{r.empirical_tail!r},"
                f"{r.slack!r},{r.bound_total!r},{r.bound_branch},{r.lemma_violations}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "config": self.config.to_dict(),
            "rows": [vars(r) for r in self.rows],
            "l1": [vars(r) for r in self.l1_rows],
            "lemma_violations": list(self.lemma_violations),
        }
        return json.dumps(payload, sort_keys=True, indent=2)


def attach_bound(
    plan: resampling.ResamplingPlan, n: int, eps: float, vc: int
) -> tuple[float, str]:
    """Clamped theoretical tail for a plan: the tightest applicable form.

    k-fold style plans (p = 1/k) get the better of the symmetric and
    k-fold combined bounds; other symmetric plans get the symmetric
    bound; single-split plans get the hold-out bound.
    """
    if plan.kind == "hold-out":
        value = bounds.bound_holdout(
            bounds.BoundQuery(n=n, p=plan.p, eps=eps, vc=vc, clamp=True)
        )
        return value.total, f"hold:{value.branch}"
    if not plan.symmetric():
        return math.nan, "none"
    q = bounds.BoundQuery(n=n, p=plan.p, eps=eps, vc=vc, clamp=True)
    sym = bounds.bound_sym_combined(q)
    best = (sym.total, f"sym:{sym.branch}")
    k = round(1.0 / plan.p)
    if abs(1.0 / plan.p - k) <= 1e-9 and k >= 2:
        kf = bounds.bound_kfold_combined(q)
        if kf.total < best[0]:
            best = (kf.total, f"kf:{kf.branch}")
    return best


class _PlanAccumulator:
    """Running tallies for one plan across trial chunks."""

    def __init__(self, plan: resampling.ResamplingPlan, label: str, eps_grid):
        self.plan = plan
        self.label = label
        self.tail_counts = np.zeros(len(eps_grid), dtype=np.int64)
        self.abs_devs: list[float] = []
        self.lemma_violations = 0
        self.check_lemma = plan.symmetric()


def _batch_labels(dist: SyntheticDistribution, n: int, master_seed: int, t0: int, t1: int):
    xs = np.empty((t1 - t0, n), dtype=np.float64)
    ys = np.empty((t1 - t0, n), dtype=np.float64)
    for i, t in enumerate(range(t0, t1)):
        d = dist.sample(n, trial_generator(master_seed, t))
        xs[i] = d.x
        ys[i] = d.y
    return xs, ys


def _chunk_size(n: int, plans) -> int:
    rows_per_trial = sum(p.num_atoms * max(p.n - p.test_size, 1) for p in plans)
    return max(1, min(2000, int(2e6 / max(rows_per_trial, 1))))


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Aggregate cfg.trials deterministic trials into an ExperimentReport.

    Uses a vectorized path (batched exact ERM over trials x atoms) when
    every plan has equal test sizes and the class is the threshold class;
    falls back to per-trial estimation otherwise. Both paths draw
    identical datasets, and tallies are exact integer counts, so chunk
    size and execution order cannot affect the report.
    """
    cfg.validate()
    plans = cfg.built_plans()
    labels = [spec.label for spec in cfg.plans]
    cls = cfg.hypothesis_class
    eps_grid = cfg.eps_grid
    accs = [
        _PlanAccumulator(plan, label, eps_grid)
        for plan, label in zip(plans, labels)
    ]
    fast = cls.kind == "threshold" and all(
        p.equal_test_sizes for p in plans
    )
    if fast:
        _run_fast(cfg, accs)
    else:
        _run_generic(cfg, accs)
    rows = []
    l1_rows = []
    lemma_counts = []
    for acc in accs:
        plan = acc.plan
        mean_dev = math.fsum(acc.abs_devs) / cfg.trials
        l1_rows.append(
            L1Row(
                plan=acc.label,
                p=plan.p,
                empirical_mean_abs_dev=mean_dev,
                l1_bound_large=bounds.l1_bound_large(cfg.n, plan.p, cfg.vc),
                l1_bound_small=bounds.l1_bound_small(cfg.n, plan.p, cfg.vc),
            )
        )
        lemma_counts.append(acc.lemma_violations)
        for j, eps in enumerate(eps_grid):
            phat = acc.tail_counts[j] / cfg.trials
            slack = 3.0 * math.sqrt(phat * (1.0 - phat) / cfg.trials)
            total, branch = attach_bound(plan, cfg.n, eps, cfg.vc)
            rows.append(
                ReportRow(
                    plan=acc.label,
                    p=plan.p,
                    eps=eps,
                    empirical_tail=float(phat),
                    slack=slack,
                    bound_total=total,
                    bound_branch=branch,
                    lemma_violations=acc.lemma_violations,
                )
            )
    return ExperimentReport(
        config=cfg,
        rows=tuple(rows),
        l1_rows=tuple(l1_rows),
        lemma_violations=tuple(lemma_counts),
    )


def _run_fast(cfg: ExperimentConfig, accs) -> None:
    dist = cfg.dist
    n = cfg.n
    slope = 1.0 - 2.0 * cfg.eta
    chunk = _chunk_size(n, [acc.plan for acc in accs])
    done = 0
    while done < cfg.trials:
        t1 = min(done + chunk, cfg.trials)
        xs, ys = _batch_labels(dist, n, cfg.master_seed, done, t1)
        c = t1 - done
        t_full, errs_full = learners._batch_threshold_erm(xs, ys)
        r_tilde = cfg.eta + slope * np.abs(t_full - cfg.theta_star)
        for acc in accs:
            plan = acc.plan
            a = plan.num_atoms
            tim = plan.train_index_matrix
            tei = plan.test_index_matrix
            ts = plan.test_size
            thetas, _ = learners._batch_threshold_erm(
                xs[:, tim].reshape(c * a, -1), ys[:, tim].reshape(c * a, -1)
            )
            thetas = thetas.reshape(c, a)
            preds = xs[:, tei] >= thetas[:, :, None]
            counts = (preds != (ys[:, tei] > 0.5)).sum(axis=2)
            # elementwise multiply + pairwise sum keeps the reduction
            # order fixed regardless of BLAS threading
            r_cv = (counts / ts * plan.probs[None, :]).sum(axis=1)
            dev = np.abs(r_cv - r_tilde)
            for j, eps in enumerate(cfg.eps_grid):
                acc.tail_counts[j] += int(np.count_nonzero(dev >= eps))
            acc.abs_devs.extend(dev.tolist())
            if acc.check_lemma:
                if plan.uniform:
                    lhs = n * counts.sum(axis=1, dtype=np.int64)
                    rhs = a * ts * errs_full
                    acc.lemma_violations += int(np.count_nonzero(lhs < rhs))
                else:
                    for i in range(c):
                        ok = _lemma_exact_from_counts(
                            plan, counts[i], int(errs_full[i]), n
                        )
                        if not ok:
                            acc.lemma_violations += 1
        done = t1


def _lemma_exact_from_counts(plan, counts, full_errs: int, n: int) -> bool:
    from fractions import Fraction

    total = Fraction(0)
    for (vec, prob), cnt in zip(plan.atoms, counts):
        total += Fraction(prob) * Fraction(int(cnt), vec.zeros)
    return total >= Fraction(full_errs, n)


def _run_generic(cfg: ExperimentConfig, accs) -> None:
    cls = cfg.hypothesis_class
    for t in range(cfg.trials):
        d = cfg.dist.sample(cfg.n, trial_generator(cfg.master_seed, t))
        for acc in accs:
            est = cv.estimates(acc.plan, d, cls, ZERO_ONE, dist=cfg.dist)
            dev = abs(est.r_cv - est.r_tilde_n)
            for j, eps in enumerate(cfg.eps_grid):
                if dev >= eps:
                    acc.tail_counts[j] += 1
            acc.abs_devs.append(dev)
            if acc.check_lemma and not cv.cv_at_least_resub_exact(
                acc.plan, d, cls, ZERO_ONE
            ):
                acc.lemma_violations += 1


def compare_procedures(cfg: ExperimentConfig) -> dict:
    """Side-by-side tails and bounds for the configured plans at equal p,
    plus the two bound ratios evaluated on the config eps grid.

    The training-term ratio is defined for any admissible (n, p); the
    test-term ratio needs p = 1/k with k >= 3 (the improved tail term
    requires p < 1/2) and is null elsewhere.
    """
    report = run_experiment(cfg)
    ratios = []
    for spec, plan in zip(cfg.plans, cfg.built_plans()):
        for eps in cfg.eps_grid:
            b_ratio = bounds.ratio_b_sym_over_b_hold(cfg.n, plan.p, eps, cfg.vc)
            v_ratio = None
            k = round(1.0 / plan.p)
            if abs(1.0 / plan.p - k) <= 1e-9 and k >= 3:
                v_ratio = bounds.ratio_v_kfold_over_v_sym(cfg.n, plan.p, eps, cfg.vc)
            ratios.append(
                {
                    "plan": spec.label,
                    "p": plan.p,
                    "eps": eps,
                    "b_sym_over_b_hold": b_ratio,
                    "v_kfold_over_v_sym": v_ratio,
                }
            )
    return {
        "rows": [vars(r) for r in report.rows],
        "l1": [vars(r) for r in report.l1_rows],
        "ratios": ratios,
        "config": cfg.to_dict(),
    }


def default_acceptance_configs(trials: int = 10_000, master_seed: int = 20240) -> list[ExperimentConfig]:
    """The desk-scale validation grid: n in {20,50,100}, k in {2,5,10,n},
    eta in {0, 0.1, 0.3}, one config per (n, eta) carrying all four plans."""
    configs = []
    for n in (20, 50, 100):
        for eta in (0.0, 0.1, 0.3):
            ks = []
            for k in (2, 5, 10, n):
                if k not in ks:
                    ks.append(k)
            plans = tuple(
                PlanSpec(kind="loo") if k == n else PlanSpec(kind="kfold", k=k)
                for k in ks
            )
            configs.append(
                ExperimentConfig(
                    theta_star=0.3,
                    eta=eta,
                    n=n,
                    plans=plans,
                    trials=trials,
                    master_seed=master_seed,
                    vc=1,
                    eps_grid=DEFAULT_EPS_GRID,
                )
            )
    return configs
