"""benchgate command-line interface.

Exit codes: 0 success, 2 parse/validation error, 3 statistical no-decision
(every pair tied), 4 non-convergence.
"""

from __future__ import annotations

import argparse
import sys
from collections import defaultdict

import numpy as np

from . import comparison, io
from .errors import AllTies, BenchgateError, EmptyClass, MissingMethod, NoCommonUnits, NoConvergence
from .metrics import (
    auc_prc,
    enrichment_at,
    enrichment_curve,
    pr_curve,
    roc_curve,
    roc_enrichment,
)
from .simulation import (
    CvBiasConfig,
    ScoreDistribution,
    ScoreSimConfig,
    run_cv_bias_simulation,
    run_score_simulation,
)
from .splitting import GroupedDataset, nested_cv_plan, verify_plan
from .uncertainty import AucEstimate, fold_mean_ci

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_DECISION = 3
EXIT_NO_CONVERGENCE = 4

EVAL_METRICS = ("auc_roc", "auc_prc", "enrichment", "roc_enrichment")
SUMMARY_FRACTIONS = (0.005, 0.01, 0.02, 0.05)


def _emit(doc, out):
    if out:
        io.write_json(out, doc)
    else:
        sys.stdout.write(io.dumps(doc))


def _group_label(key) -> str:
    return "|".join(key)


# --- eval -------------------------------------------------------------------


def eval_results(groups, metrics, level):
    rows = []
    curves = []
    per_assay_method = defaultdict(list)
    for key, preds in groups.items():
        assay, method, fold = key
        row = {
            "assay_id": assay,
            "method": method,
            "fold": fold,
            "n_pos": preds.n_pos,
            "n_neg": preds.n_neg,
        }
        try:
            if "auc_roc" in metrics:
                est = AucEstimate.from_predictions(preds, level)
                row.update(est.to_dict())
                per_assay_method[(assay, method)].append(est.value)
                curves.append(("roc", _group_label(key), roc_curve(preds)))
            if "auc_prc" in metrics:
                row["auc_prc"] = auc_prc(preds)
                curves.append(("prc", _group_label(key), pr_curve(preds)))
            if "enrichment" in metrics:
                row["enrichment"] = {
                    f"{mode}@{x:g}": enrichment_at(preds, x, mode)
                    for mode in ("fraction_found", "ef_ratio")
                    for x in SUMMARY_FRACTIONS
                }
                for mode in ("fraction_found", "ef_ratio"):
                    c = enrichment_curve(preds, mode)
                    curves.append((c.kind, _group_label(key), c))
            if "roc_enrichment" in metrics:
                row["roc_enrichment"] = {
                    f"fpr@{x:g}": roc_enrichment(preds, x) for x in SUMMARY_FRACTIONS
                }
        except EmptyClass as exc:
            row["error"] = f"EmptyClass: {exc}"
        rows.append(row)

    summaries = []
    for (assay, method), values in sorted(per_assay_method.items()):
        entry = {"assay_id": assay, "method": method, "n_folds": len(values)}
        if len(values) >= 2:
            s = fold_mean_ci(values, level)
            entry.update(mean=s.mean, sem=s.sem, ci=s.ci.to_dict())
        else:
            entry.update(mean=values[0], sem=None, ci=None)
        summaries.append(entry)
    return {"groups": rows, "fold_summaries": summaries}, curves


def cmd_eval(args) -> int:
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = sorted(set(metrics) - set(EVAL_METRICS))
    if unknown:
        raise BenchgateError(f"unknown metrics {unknown}; choose from {EVAL_METRICS}")
    groups = io.read_predictions(args.input)
    results, curves = eval_results(groups, metrics, args.ci_level)
    if args.curves:
        io.write_curves_csv(args.curves, curves)
    config = {"metrics": metrics, "ci_level": args.ci_level}
    _emit(io.make_report("eval", config, results, inputs={"predictions": args.input}), args.out)
    return EXIT_OK


# --- compare / wins ---------------------------------------------------------


def _index_rows(rows):
    by_method = defaultdict(dict)
    for r in rows:
        if r.auc_roc is not None:
            by_method[r.method][(r.assay_id, r.fold)] = r
    return by_method


def paired_units(rows, method_a, method_b, level="fold"):
    """Paired AUCs, unit ids and test-set sizes for two methods.

    ``fold`` pairs every (assay, fold) both methods report. ``assay_mean``
    averages each method over the folds the two share within an assay.
    """
    by_method = _index_rows(rows)
    for m in (method_a, method_b):
        if m not in by_method:
            raise MissingMethod(f"method {m!r} not found in input")
    a_rows, b_rows = by_method[method_a], by_method[method_b]
    common = sorted(set(a_rows) & set(b_rows))
    if not common:
        raise NoCommonUnits(f"{method_a} and {method_b} share no (assay, fold) units")
    if level == "fold":
        ids = [f"{assay}:{fold}" for assay, fold in common]
        a = [a_rows[u].auc_roc for u in common]
        b = [b_rows[u].auc_roc for u in common]
        sizes = [a_rows[u].size for u in common]
        return comparison.PairedFoldScores(ids, a, b), sizes
    if level != "assay_mean":
        raise BenchgateError(f"unknown level {level!r}")
    per_assay = defaultdict(list)
    for u in common:
        per_assay[u[0]].append(u)
    ids, a, b, sizes = [], [], [], []
    for assay, units in sorted(per_assay.items()):
        ids.append(assay)
        a.append(float(np.mean([a_rows[u].auc_roc for u in units])))
        b.append(float(np.mean([b_rows[u].auc_roc for u in units])))
        sizes.append(float(np.mean([a_rows[u].size for u in units])))
    return comparison.PairedFoldScores(ids, a, b), sizes


def cmd_compare(args) -> int:
    rows = io.read_fold_metrics(args.input)
    paired, sizes = paired_units(rows, args.method_a, args.method_b, args.level)
    config = {
        "method_a": args.method_a,
        "method_b": args.method_b,
        "test": args.test,
        "level": args.level,
        "alternative": args.alternative,
        "alpha": args.alpha,
    }
    if args.scatter:
        io.write_scatter_csv(args.scatter, paired.unit_ids, comparison.pairwise_scatter(paired, sizes))
    results = {"n_units": len(paired), "tie_handling": "exact ties dropped"}
    code = EXIT_OK
    try:
        if args.test == "sign":
            res = comparison.sign_test(paired, args.alternative, 1.0 - args.alpha)
        else:
            res = comparison.wilcoxon_signed_rank(paired, args.alternative)
        results.update(res.to_dict())
        results["decision"] = "reject" if res.p_value < args.alpha else "retain"
    except AllTies as exc:
        results.update(decision="no_decision", error=f"AllTies: {exc}")
        code = EXIT_NO_DECISION
    report = io.make_report("compare", config, results, inputs={"fold_metrics": args.input})
    _emit(report, args.out)
    return code


def win_table_from_rows(rows):
    by_method = _index_rows(rows)
    if not by_method:
        raise NoCommonUnits("no fold has an AUC value")
    common = sorted(set.intersection(*(set(v) for v in by_method.values())))
    if not common:
        raise NoCommonUnits("no (assay, fold) unit is reported by every method")
    scores = {m: [v[u].auc_roc for u in common] for m, v in sorted(by_method.items())}
    all_units = set().union(*(set(v) for v in by_method.values()))
    return comparison.tabulate_wins(scores), len(all_units) - len(common)


def cmd_wins(args) -> int:
    table, dropped = win_table_from_rows(io.read_fold_metrics(args.input))
    results = table.to_dict()
    results["n_units_dropped"] = dropped
    for row in results["rows"]:
        row["percent_best"] = 100.0 * row["fraction_best"]
    _emit(io.make_report("wins", {}, results, inputs={"fold_metrics": args.input}), args.out)
    return EXIT_OK


# --- simulate -------------------------------------------------------------


def simulate_from_config(kind: str, config: dict, workers: int = 1):
    if kind == "score-dist":
        return run_score_simulation(ScoreSimConfig.from_dict(config), workers)
    if kind == "cv-bias":
        return run_cv_bias_simulation(CvBiasConfig.from_dict(config), workers)
    raise BenchgateError(f"unknown simulation {kind!r}")


def cmd_simulate(args) -> int:
    seed = io.resolve_seed(args.seed)
    if args.experiment == "score-dist":
        config = ScoreSimConfig(
            pos_dist=ScoreDistribution.parse(args.pos_dist),
            neg_dist=ScoreDistribution.parse(args.neg_dist),
            n_pos=args.n_pos,
            n_neg=args.n_neg,
            runs=args.runs,
            seed=seed,
        )
    else:
        config = CvBiasConfig(
            n_train=args.n_train,
            n_test=args.n_test,
            dim=args.dim,
            target_auc=args.target_auc,
            k_folds=args.k_folds,
            runs=args.runs,
            ci_level=args.ci_level,
            seed=seed,
            prevalence=args.prevalence,
            C=args.C,
            tol=args.tol,
            max_iter=args.max_iter,
            calibration_runs=args.calibration_runs,
            separation=args.separation,
            sem_ddof=args.sem_ddof,
        )
    report = simulate_from_config(args.experiment, config.to_dict(), args.workers)
    if args.curves:
        io.write_curves_csv(args.curves, report.curves)
    payload = report.payload()
    doc = io.make_report(
        f"simulate {args.experiment}", payload.pop("config"), payload, seed=payload.pop("seed")
    )
    _emit(doc, args.out)
    return EXIT_OK


# --- split ------------------------------------------------------------------


def cmd_split(args) -> int:
    seed = io.resolve_seed(args.seed)
    item_ids, labels, groups = None, None, None
    inputs = {}
    if args.items:
        item_ids, labels = io.read_items(args.items)
        inputs["items"] = args.items
    if args.groups:
        g_items, g_groups = io.read_groups(args.groups)
        inputs["groups"] = args.groups
        if item_ids is None:
            item_ids = g_items
            groups = g_groups
        else:
            lookup = dict(zip(g_items, g_groups))
            missing = [i for i in item_ids if i not in lookup]
            if missing:
                raise BenchgateError(f"items without a group id: {missing[:5]}")
            groups = [lookup[i] for i in item_ids]
    if item_ids is not None:
        n = len(item_ids)
        if args.n is not None and args.n != n:
            raise BenchgateError(f"--n {args.n} disagrees with {n} items in the input files")
    elif args.n is not None:
        n = args.n
    else:
        raise BenchgateError("give --n, --items or --groups")
    dataset = GroupedDataset(n, labels, groups)
    plan = nested_cv_plan(dataset, args.outer, args.inner, seed, stratify=args.stratify)
    doc = plan.to_dict()
    if item_ids is not None:
        doc["item_ids"] = item_ids
    if args.out:
        io.write_json(args.out, doc)
    else:
        sys.stdout.write(io.dumps(doc))
    if args.verify:
        reread = io.read_plan(args.out) if args.out else plan
        problems = verify_plan(reread, groups)
        for p in problems:
            print(f"benchgate: plan check failed: {p}", file=sys.stderr)
        if problems:
            return EXIT_INVALID
        print("benchgate: plan verified", file=sys.stderr)
    return EXIT_OK


# --- replay -----------------------------------------------------------------


def replay_report(doc: dict) -> dict:
    """Re-run a simulate report from its embedded config; returns the new report."""
    command = doc.get("command", "")
    if not command.startswith("simulate "):
        raise BenchgateError("only simulate reports carry a re-runnable config")
    kind = command.split(" ", 1)[1]
    payload = simulate_from_config(kind, doc["config"]).payload()
    return io.make_report(command, payload.pop("config"), payload, seed=payload.pop("seed"))


def cmd_replay(args) -> int:
    doc = io.read_json(args.report)
    fresh = replay_report(doc)
    same = io.dumps(fresh["results"]) == io.dumps(doc["results"])
    print("identical" if same else "differs")
    if args.out:
        io.write_json(args.out, fresh)
    return EXIT_OK if same else 1


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="benchgate", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", help="per-fold metrics with AUC intervals and fold summaries")
    e.add_argument("--input", required=True, help="predictions.csv")
    e.add_argument("--metrics", default=",".join(EVAL_METRICS))
    e.add_argument("--ci-level", type=float, default=0.95)
    e.add_argument("--out", help="report.json (stdout if omitted)")
    e.add_argument("--curves", help="curves.csv with kind,run,x,y")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("compare", help="paired sign or Wilcoxon test between two methods")
    c.add_argument("--input", required=True, help="fold_metrics.csv")
    c.add_argument("--method-a", required=True)
    c.add_argument("--method-b", required=True)
    c.add_argument("--test", choices=("sign", "wilcoxon"), default="sign")
    c.add_argument("--level", choices=("fold", "assay_mean"), default="fold")
    c.add_argument("--alternative", choices=("two_sided", "greater", "less"), default="two_sided")
    c.add_argument("--alpha", type=float, default=0.05)
    c.add_argument("--scatter", help="scatter.csv with unit_id,x,y,size")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    w = sub.add_parser("wins", help="share of folds on which each method is best")
    w.add_argument("--input", required=True, help="fold_metrics.csv")
    w.add_argument("--out")
    w.set_defaults(func=cmd_wins)

    s = sub.add_parser("simulate", help="Monte-Carlo experiments")
    ssub = s.add_subparsers(dest="experiment", required=True)
    sd = ssub.add_parser("score-dist", help="ROC vs PR vs enrichment under class imbalance")
    sd.add_argument("--pos-dist", default="normal:0.6,0.1")
    sd.add_argument("--neg-dist", default="normal:0.4,0.1")
    sd.add_argument("--n-pos", type=int, default=100)
    sd.add_argument("--n-neg", type=int, default=10_000)
    sd.add_argument("--runs", type=int, default=10)
    sd.add_argument("--curves", help="curves.csv with kind,run,x,y")
    cv = ssub.add_parser("cv-bias", help="error and interval coverage of k-fold CV AUC")
    defaults = CvBiasConfig()
    cv.add_argument("--n-train", type=int, default=defaults.n_train)
    cv.add_argument("--n-test", type=int, default=defaults.n_test)
    cv.add_argument("--dim", type=int, default=defaults.dim)
    cv.add_argument("--target-auc", type=float, default=defaults.target_auc)
    cv.add_argument("--k-folds", type=int, default=defaults.k_folds)
    cv.add_argument("--runs", type=int, default=defaults.runs)
    cv.add_argument("--ci-level", type=float, default=defaults.ci_level)
    cv.add_argument("--prevalence", type=float, default=defaults.prevalence)
    cv.add_argument("--C", type=float, default=defaults.C)
    cv.add_argument("--tol", type=float, default=defaults.tol)
    cv.add_argument("--max-iter", type=int, default=defaults.max_iter)
    cv.add_argument("--calibration-runs", type=int, default=defaults.calibration_runs)
    cv.add_argument("--separation", type=float, default=None, help="skip calibration")
    cv.add_argument("--sem-ddof", type=int, choices=(0, 1), default=defaults.sem_ddof)
    cv.set_defaults(curves=None)
    for sp in (sd, cv):
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out")
        sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("split", help="nested n x k cross-validation plan")
    sp.add_argument("--n", type=int)
    sp.add_argument("--items", help="items.csv with item_id[,label]")
    sp.add_argument("--groups", help="groups.csv with item_id,group_id")
    sp.add_argument("--outer", type=int, default=3)
    sp.add_argument("--inner", type=int, default=2)
    sp.add_argument("--stratify", action="store_true")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", help="plan.json (stdout if omitted)")
    sp.add_argument("--verify", action="store_true", help="re-check the emitted plan")
    sp.set_defaults(func=cmd_split)

    r = sub.add_parser("replay", help="re-run a simulate report from its embedded config")
    r.add_argument("report")
    r.add_argument("--out")
    r.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NoConvergence as exc:
        print(f"benchgate: no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except AllTies as exc:
        print(f"benchgate: no decision: {exc}", file=sys.stderr)
        return EXIT_NO_DECISION
    except (BenchgateError, ValueError) as exc:
        print(f"benchgate: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
