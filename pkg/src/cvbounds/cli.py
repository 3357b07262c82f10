"""Command-line front end.

Verbs: bound, curve, split, ci, simulate, compare, verify. Default output
is CSV (--json switches); `verify` always emits JSON because its reports
are nested. Totals are clamped to 1 unless --no-clamp is given. Exit
codes: 0 success, 1 usage error, 2 infeasible confidence-interval search,
3 invariant violation detected during simulate/verify. Errors print one
line to stderr prefixed "ERROR <code>:". Output depends only on argv and
the seed, never on wall-clock state, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import bounds, harness, toolkit
from .bounds import BoundQuery, InfeasibleCiError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); route to our codes
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="cvbounds", description=__doc__, add_help=True)
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def add_common(sp, *names):
        if "n" in names:
            sp.add_argument("--n", type=int, default=None)
        if "p" in names:
            sp.add_argument("--p", type=float, default=None)
        if "k" in names:
            sp.add_argument("--k", type=int, default=None)
        if "vc" in names:
            sp.add_argument("--vc", type=int, default=None)
        if "eps" in names:
            sp.add_argument("--eps", type=float, default=None)
        if "alpha" in names:
            sp.add_argument("--alpha", type=float, default=None)
        if "procedure" in names:
            sp.add_argument("--procedure", type=str, default=None)
        if "trials" in names:
            sp.add_argument("--trials", type=int, default=None)
        if "seed" in names:
            sp.add_argument("--seed", type=int, default=None)
        if "config" in names:
            sp.add_argument("--config", type=str, default=None)
        if "c" in names:
            sp.add_argument("--c", type=float, default=None)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--json", action="store_true")
        sp.add_argument("--no-clamp", dest="no_clamp", action="store_true")
        sp.add_argument(
            "--strict-proposition", dest="strict_proposition", action="store_true"
        )
        sp.add_argument(
            "--gamma-proof-form", dest="gamma_proof_form", action="store_true"
        )

    add_common(sub.add_parser("bound"), "n", "p", "k", "vc", "eps", "procedure")
    add_common(sub.add_parser("curve"), "n", "vc", "eps", "procedure", "c")
    add_common(sub.add_parser("split"), "n", "vc", "c")
    add_common(sub.add_parser("ci"), "n", "vc", "alpha", "procedure")
    add_common(
        sub.add_parser("simulate"), "n", "k", "vc", "trials", "seed", "config"
    )
    add_common(
        sub.add_parser("compare"), "n", "k", "vc", "trials", "seed", "config"
    )
    add_common(
        sub.add_parser("verify"), "n", "p", "procedure", "trials", "seed"
    )
    return parser


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def _require(value, flag: str):
    if value is None:
        raise UsageError(f"missing required flag {flag}")
    return value


def _resolve_p(args) -> float:
    if args.p is not None and args.k is not None:
        raise UsageError("pass --p or --k, not both")
    if args.p is not None:
        return args.p
    if args.k is not None:
        if args.k < 2:
            raise UsageError("--k must be at least 2")
        return 1.0 / args.k
    raise UsageError("one of --p or --k is required")


def _cmd_bound(args) -> int:
    n = _require(args.n, "--n")
    if args.vc is None:
        args.vc = 1
    eps = _require(args.eps, "--eps")
    procedure = args.procedure or "symmetric-combined"
    q = BoundQuery(
        n=n,
        p=_resolve_p(args),
        eps=eps,
        vc=args.vc,
        procedure=procedure,
        clamp=not args.no_clamp,
        strict_proposition=args.strict_proposition,
    )
    value = bounds.evaluate_procedure(q)
    if args.json:
        payload = {
            "procedure": procedure, "n": n, "p": q.p, "eps": eps, "vc": args.vc,
            "b_term": value.b_term, "v_term": value.v_term, "total": value.total,
            "branch": value.branch, "log_b_term": value.log_b_term,
            "log_v_term": value.log_v_term, "clamped": not args.no_clamp,
        }
        _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    else:
        lines = [
            "procedure,n,p,eps,vc,b_term,v_term,total,branch",
            f"{procedure},{n},{q.p!r},{eps!r},{args.vc},"
            f"{value.b_term!r},{value.v_term!r},{value.total!r},{value.branch}",
        ]
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_curve(args) -> int:
    n = _require(args.n, "--n")
    if args.vc is None:
        args.vc = 1
    procedure = args.procedure or "symmetric-combined"
    if procedure not in bounds.L1_PROCEDURES and args.eps is None:
        raise UsageError("--eps is required for probability-bound curves")
    curve = bounds.estimation_curve(
        n=n,
        eps=args.eps,
        vc=args.vc,
        procedure=procedure,
        clamp=not args.no_clamp,
        strict_proposition=args.strict_proposition,
        c=args.c if args.c is not None else 1.0,
    )
    if args.json:
        payload = {
            "procedure": procedure, "n": n, "eps": args.eps, "vc": args.vc,
            "points": [
                {
                    "p": pt.p, "b_term": pt.value.b_term, "v_term": pt.value.v_term,
                    "total": pt.value.total, "branch": pt.value.branch,
                }
                for pt in curve.points
            ],
            "transitions": [vars(t) for t in curve.transitions],
            "snapped": [list(s) for s in curve.snapped],
            "dropped": list(curve.dropped),
        }
        _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    else:
        lines = ["p,B,V,total,branch"]
        for pt in curve.points:
            lines.append(
                f"{pt.p!r},{pt.value.b_term!r},{pt.value.v_term!r},"
                f"{pt.value.total!r},{pt.value.branch}"
            )
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_split(args) -> int:
    n = _require(args.n, "--n")
    if args.vc is None:
        args.vc = 1
    mode = "chained" if args.c is not None else "computable"
    split = bounds.optimal_split_l1(n, args.vc, c=args.c, mode=mode)
    if args.json:
        payload = {
            "mode": split.mode, "n": n, "vc": args.vc, "c": args.c,
            "p_raw": split.p_raw, "p": split.p, "snap": split.snap,
        }
        _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    else:
        lines = [
            "mode,n,vc,c,p_raw,p,snap",
            f"{split.mode},{n},{args.vc},"
            f"{'' if args.c is None else repr(args.c)},"
            f"{split.p_raw!r},{split.p!r},{split.snap}",
        ]
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_ci(args) -> int:
    n = _require(args.n, "--n")
    if args.vc is None:
        args.vc = 1
    alpha = _require(args.alpha, "--alpha")
    procedure = args.procedure or "symmetric-combined"
    result = bounds.confidence_interval_search(
        n=n,
        vc=args.vc,
        alpha=alpha,
        procedure=procedure,
        clamp=not args.no_clamp,
        strict_proposition=args.strict_proposition,
    )
    if args.json:
        payload = {
            "procedure": result.procedure, "n": n, "vc": args.vc, "alpha": alpha,
            "eps_star": result.eps_star, "p_star": result.p_star,
            "achieved_bound": result.achieved_bound,
        }
        _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    else:
        lines = [
            "procedure,n,vc,alpha,eps_star,p_star,achieved_bound",
            f"{result.procedure},{n},{args.vc},{alpha!r},"
            f"{result.eps_star!r},{result.p_star!r},{result.achieved_bound!r}",
        ]
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _load_config(args, default_plans) -> harness.ExperimentConfig:
    if args.config is not None:
        with open(args.config) as fh:
            data = json.load(fh)
    else:
        data = {
            "theta_star": 0.3,
            "eta": 0.1,
            "n": 50,
            "plans": default_plans,
            "class": {"kind": "threshold", "vc": 1},
            "trials": 1000,
            "master_seed": 0,
            "grid_provenance": "artifact-default",
        }
    if args.n is not None:
        data["n"] = args.n
    if args.k is not None:
        data["plans"] = [{"kind": "kfold", "k": args.k}]
    if args.trials is not None:
        data["trials"] = args.trials
    if args.seed is not None:
        data["master_seed"] = args.seed
    if args.vc is not None:
        data.setdefault("class", {"kind": "threshold"})["vc"] = args.vc
    return harness.ExperimentConfig.from_dict(data)


def _report_violations(report: harness.ExperimentReport) -> list[str]:
    problems = []
    total_lemma = sum(report.lemma_violations)
    if total_lemma > 0:
        problems.append(f"{total_lemma} comparison-lemma violations")
    for row in report.rows:
        if not math.isnan(row.bound_total) and (
            row.empirical_tail > row.bound_total + row.slack
        ):
            problems.append(
                f"empirical tail {row.empirical_tail} above bound "
                f"{row.bound_total} for {row.plan} at eps={row.eps}"
            )
    return problems


def _cmd_simulate(args) -> int:
    cfg = _load_config(args, default_plans=[{"kind": "kfold", "k": 5}])
    report = harness.run_experiment(cfg)
    _emit(report.to_json() + "\n" if args.json else report.to_csv(), args.out)
    problems = _report_violations(report)
    if problems:
        sys.stderr.write(f"ERROR 3: {problems[0]}\n")
        return 3
    return 0


def _compare_default_plans(n: int, k: int) -> list[dict]:
    if n % k != 0:
        raise UsageError(f"--k {k} must divide n = {n}")
    v = n // k
    plans: list[dict] = [{"kind": "kfold", "k": k}]
    if math.comb(n, v) <= 10**6:
        plans.append({"kind": "lvo", "v": v, "mode": "exhaustive"})
    else:
        plans.append({"kind": "lvo", "v": v, "mode": "montecarlo", "m": 2000, "seed": 1})
    plans.append({"kind": "holdout", "p": v / n})
    return plans


def _cmd_compare(args) -> int:
    n = args.n if args.n is not None else (50 if args.config is None else None)
    k = args.k if args.k is not None else 5
    if args.config is None:
        plans = _compare_default_plans(n, k)
        saved_k = args.k
        args.k = None  # plans already encode k; don't let _load_config overwrite
        try:
            cfg = _load_config(args, default_plans=plans)
        finally:
            args.k = saved_k
    else:
        cfg = _load_config(args, default_plans=[])
    table = harness.compare_procedures(cfg)
    if args.json:
        _emit(json.dumps(table, sort_keys=True, indent=2) + "\n", args.out)
    else:
        lines = [
            "plan,p,eps,empirical_tail,slack,bound_total,bound_branch,lemma_violations"
        ]
        for r in table["rows"]:
            lines.append(
                f"{r['plan']},{r['p']!r},{r['eps']!r},{r['empirical_tail']!r},"
                f"{r['slack']!r},{r['bound_total']!r},{r['bound_branch']},"
                f"{r['lemma_violations']}"
            )
        lines.append("")
        lines.append("plan,p,eps,b_sym_over_b_hold,v_kfold_over_v_sym")
        for r in table["ratios"]:
            v_ratio = "" if r["v_kfold_over_v_sym"] is None else repr(r["v_kfold_over_v_sym"])
            lines.append(
                f"{r['plan']},{r['p']!r},{r['eps']!r},"
                f"{r['b_sym_over_b_hold']!r},{v_ratio}"
            )
        _emit("\n".join(lines) + "\n", args.out)
    violations = sum(r["lemma_violations"] for r in table["rows"])
    if violations:
        sys.stderr.write("ERROR 3: comparison-lemma violations in report\n")
        return 3
    return 0


_VERIFIER_FLAGS = {
    "hoeffding": ("n", "reps", "seed"),
    "vc": ("n", "reps", "seed"),
    "mcdiarmid": ("n", "reps", "seed"),
    "reverse-markov": ("reps", "seed"),
    "pareto": ("seed",),
    "moment-gamma": ("seed", "proof_form"),
    "pipeline": ("n", "p", "seed"),
}


def _cmd_verify(args) -> int:
    names = list(toolkit.VERIFIERS) if args.procedure in (None, "all") else [args.procedure]
    for name in names:
        if name not in toolkit.VERIFIERS:
            raise UsageError(
                f"unknown inequality {name!r}; choose from "
                + ", ".join(sorted(toolkit.VERIFIERS))
            )
    candidates = {
        "n": args.n, "p": args.p, "reps": args.trials, "seed": args.seed,
        "proof_form": args.gamma_proof_form or None,
    }
    reports = []
    for name in names:
        kwargs = {
            key: candidates[key]
            for key in _VERIFIER_FLAGS[name]
            if candidates.get(key) is not None
        }
        reports.append(toolkit.VERIFIERS[name](**kwargs))
    # nested reports: always JSON regardless of --json
    _emit(json.dumps(reports, sort_keys=True, indent=2) + "\n", args.out)
    for report in reports:
        for entry in report["grid"]:
            if not entry["holds"]:
                sys.stderr.write(
                    f"ERROR 3: inequality {report['inequality']} failed "
                    f"at eps={entry['eps']}\n"
                )
                return 3
    return 0


_DISPATCH = {
    "bound": _cmd_bound,
    "curve": _cmd_curve,
    "split": _cmd_split,
    "ci": _cmd_ci,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _DISPATCH[args.verb](args)
    except UsageError as exc:
        sys.stderr.write(f"ERROR 1: {exc}\n")
        return 1
    except InfeasibleCiError as exc:
        sys.stderr.write(f"ERROR 2: {exc}\n")
        return 2
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"ERROR 1: {exc}\n")
        return 1


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
