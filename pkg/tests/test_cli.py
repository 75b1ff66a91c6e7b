import json
import subprocess
import sys

import pytest

from benchgate import io
from benchgate.cli import EXIT_INVALID, EXIT_NO_DECISION, main
from benchgate.metrics import PRC, ROC, Curve, average_precision_from_curve, trapezoid_area


def write(path, header, rows):
    lines = [",".join(header)] + [",".join(str(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


PRED_HEADER = ("assay_id", "method", "fold", "compound_id", "label", "score")
FM_HEADER = ("assay_id", "method", "fold", "auc_roc", "n_pos", "n_neg")


def one_active_fold(fold, beaten):
    """One active ranked above ``beaten`` of 1000 inactives: AUC = beaten / 1000."""
    rows = [("B", "fnn", fold, "act", 1, beaten - 0.5)]
    rows += [("B", "fnn", fold, f"c{i}", 0, i) for i in range(1000)]
    return rows


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def report(out):
    return json.loads(out)


class TestEval:
    def test_single_active_marker(self, tmp_path, capsys):
        rows = [("A", "svm", 1, "a1", 1, 0.9)] + [("A", "svm", 1, f"n{i}", 0, i / 40) for i in range(30)]
        path = write(tmp_path / "p.csv", PRED_HEADER, rows)
        code, out, _ = run(["eval", "--input", path], capsys)
        assert code == 0
        group = report(out)["results"]["groups"][0]
        assert group["ci_text"] == "(?, ?)"
        assert group["ci"] is None
        assert group["n_pos"] == 1

    def test_perfect_ranking(self, tmp_path, capsys):
        rows = [("A", "m", 0, f"p{i}", 1, 10 + i) for i in range(4)]
        rows += [("A", "m", 0, f"n{i}", 0, i) for i in range(6)]
        path = write(tmp_path / "p.csv", PRED_HEADER, rows)
        code, out, _ = run(["eval", "--input", path], capsys)
        group = report(out)["results"]["groups"][0]
        assert group["auc_roc"] == 1.0 and group["auc_prc"] == 1.0

    def test_fold_summary(self, tmp_path, capsys):
        rows = one_active_fold(1, 889) + one_active_fold(2, 905) + one_active_fold(3, 906)
        path = write(tmp_path / "p.csv", PRED_HEADER, rows)
        code, out, _ = run(["eval", "--input", path, "--metrics", "auc_roc"], capsys)
        res = report(out)["results"]
        assert [g["auc_roc"] for g in res["groups"]] == pytest.approx([0.889, 0.905, 0.906], abs=1e-12)
        (summary,) = res["fold_summaries"]
        assert summary["mean"] == pytest.approx(0.900, abs=5e-4)
        assert summary["sem"] == pytest.approx(0.005, abs=1e-3)

    def test_empty_class_is_per_group(self, tmp_path, capsys):
        rows = [("A", "m", 0, "x", 1, 0.5), ("A", "m", 0, "y", 0, 0.4), ("A", "m", 1, "z", 0, 0.3)]
        path = write(tmp_path / "p.csv", PRED_HEADER, rows)
        code, out, _ = run(["eval", "--input", path], capsys)
        assert code == 0
        groups = report(out)["results"]["groups"]
        assert "error" not in groups[0]
        assert groups[1]["error"].startswith("EmptyClass")

    def test_curves_round_trip(self, tmp_path, capsys):
        rows = [("A", "m", f, f"c{i}", int(i % 3 == 0), round((i * 37 % 101) / 101, 2)) for f in (0, 1) for i in range(60)]
        path = write(tmp_path / "p.csv", PRED_HEADER, rows)
        curves = tmp_path / "curves.csv"
        out_json = tmp_path / "r.json"
        assert run(["eval", "--input", path, "--curves", curves, "--out", out_json], capsys)[0] == 0
        groups = {g["fold"]: g for g in io.read_json(out_json)["results"]["groups"]}
        parsed = io.read_curves_csv(curves)
        for fold, g in groups.items():
            x, y = parsed[(ROC, f"A|m|{fold}")]
            assert abs(trapezoid_area(Curve(ROC, x, y)) - g["auc_roc"]) <= 1e-9
            x, y = parsed[(PRC, f"A|m|{fold}")]
            assert abs(average_precision_from_curve(Curve(PRC, x, y)) - g["auc_prc"]) <= 1e-9

    def test_parse_error_exit_code(self, tmp_path, capsys):
        path = write(tmp_path / "p.csv", PRED_HEADER, [("A", "m", 0, "c", 2, 0.5)])
        code, _, err = run(["eval", "--input", path], capsys)
        assert code == EXIT_INVALID
        assert "p.csv:2:" in err

    def test_missing_column(self, tmp_path, capsys):
        path = write(tmp_path / "p.csv", PRED_HEADER[:-1], [("A", "m", 0, "c", 1)])
        assert run(["eval", "--input", path], capsys)[0] == EXIT_INVALID

    def test_report_envelope(self, tmp_path, capsys):
        rows = [("A", "m", 0, "x", 1, 0.5), ("A", "m", 0, "y", 0, 0.4)]
        path = write(tmp_path / "p.csv", PRED_HEADER, rows)
        doc = report(run(["eval", "--input", path], capsys)[1])
        assert doc["schema_version"] == 1
        assert doc["inputs"]["predictions"]["sha256"] == io.file_digest(path)
        assert doc["config"]["ci_level"] == 0.95


def fold_metrics(tmp_path, rows, name="fm.csv"):
    return write(tmp_path / name, FM_HEADER, rows)


class TestCompare:
    def test_identical_methods_no_decision(self, tmp_path, capsys):
        rows = [(f"a{i}", m, 0, 0.7 + i / 100, 5, 50) for i in range(5) for m in ("x", "y")]
        path = fold_metrics(tmp_path, rows)
        out_json = tmp_path / "r.json"
        code, _, _ = run(["compare", "--input", path, "--method-a", "x", "--method-b", "y", "--out", out_json], capsys)
        assert code == EXIT_NO_DECISION
        assert io.read_json(out_json)["results"]["decision"] == "no_decision"

    def test_sign_with_scatter(self, tmp_path, capsys):
        rows = []
        for i in range(10):
            rows.append((f"a{i}", "x", 0, 0.8, 3, 30 + i))
            rows.append((f"a{i}", "y", 0, 0.7 if i < 8 else 0.9, 3, 30 + i))
        path = fold_metrics(tmp_path, rows)
        scatter = tmp_path / "s.csv"
        code, out, _ = run(
            ["compare", "--input", path, "--method-a", "x", "--method-b", "y", "--scatter", scatter], capsys
        )
        assert code == 0
        res = report(out)["results"]
        assert res["statistic"] == 8 and res["n_used"] == 10
        assert res["win_ci"]["lower"] < 0.8 < res["win_ci"]["upper"]
        lines = scatter.read_text().splitlines()
        assert lines[0] == "unit_id,x,y,size"
        assert lines[1] == "a0:0,0.8,0.7,33.0"

    def test_assay_mean_level(self, tmp_path, capsys):
        rows = []
        for a in range(4):
            for f in range(3):
                rows.append((f"a{a}", "x", f, 0.6 + 0.1 * (a % 2) + 0.01 * f, 2, 20))
                rows.append((f"a{a}", "y", f, 0.6, 2, 20))
        path = fold_metrics(tmp_path, rows)
        code, out, _ = run(
            ["compare", "--input", path, "--method-a", "x", "--method-b", "y",
             "--level", "assay_mean", "--test", "wilcoxon", "--alternative", "greater"],
            capsys,
        )
        res = report(out)["results"]
        assert res["n_units"] == 4
        assert res["p_value"] == pytest.approx(1 / 16)

    def test_missing_method(self, tmp_path, capsys):
        path = fold_metrics(tmp_path, [("a", "x", 0, 0.5, 1, 1)])
        code, _, err = run(["compare", "--input", path, "--method-a", "x", "--method-b", "nope"], capsys)
        assert code == EXIT_INVALID
        assert "nope" in err

    def test_no_common_units(self, tmp_path, capsys):
        path = fold_metrics(tmp_path, [("a", "x", 0, 0.5, 1, 1), ("b", "y", 0, 0.5, 1, 1)])
        assert run(["compare", "--input", path, "--method-a", "x", "--method-b", "y"], capsys)[0] == EXIT_INVALID

    def test_missing_auc_rows_skipped(self, tmp_path, capsys):
        rows = [("a", "x", 0, 0.9, 1, 1), ("a", "y", 0, 0.1, 1, 1), ("b", "x", 0, "", 0, 9), ("b", "y", 0, 0.3, 0, 9)]
        path = fold_metrics(tmp_path, rows)
        res = report(run(["compare", "--input", path, "--method-a", "x", "--method-b", "y"], capsys)[1])["results"]
        assert res["n_units"] == 1


class TestWins:
    def test_table(self, tmp_path, capsys):
        rows = []
        for f in range(4):
            rows.append(("a", "x", f, [0.9, 0.9, 0.5, 0.6][f], 1, 1))
            rows.append(("a", "y", f, [0.5, 0.9, 0.8, 0.6][f], 1, 1))
        path = fold_metrics(tmp_path, rows)
        res = report(run(["wins", "--input", path], capsys)[1])["results"]
        assert [(r["method"], r["percent_best"]) for r in res["rows"]] == [("x", 25.0), ("y", 25.0), ("Tie", 50.0)]

    def test_single_method(self, tmp_path, capsys):
        path = fold_metrics(tmp_path, [("a", "x", f, 0.5, 1, 1) for f in range(3)])
        res = report(run(["wins", "--input", path], capsys)[1])["results"]
        assert res["rows"][0] == {"method": "x", "fraction_best": 1.0, "count": 3, "percent_best": 100.0}


class TestSplit:
    def test_six_items(self, capsys):
        code, out, _ = run(["split", "--n", 6, "--seed", 1], capsys)
        doc = report(out)
        assert doc["outer_fold_sizes"] == [2, 2, 2]
        assert all(f["inner_fold_sizes"] == [2, 2] for f in doc["outer_folds"])

    def test_grouped_verify(self, tmp_path, capsys):
        groups = write(tmp_path / "g.csv", ("item_id", "group_id"), [(f"i{i}", f"g{i // 4}") for i in range(40)])
        plan = tmp_path / "plan.json"
        code, _, err = run(["split", "--groups", groups, "--seed", 3, "--out", plan, "--verify"], capsys)
        assert code == 0
        assert "plan verified" in err
        doc = io.read_json(plan)
        assert doc["grouped"] and doc["item_ids"][0] == "i0"

    def test_items_stratified(self, tmp_path, capsys):
        items = write(tmp_path / "items.csv", ("item_id", "label"), [(f"i{i}", int(i < 6)) for i in range(18)])
        doc = report(run(["split", "--items", items, "--stratify", "--seed", 0], capsys)[1])
        for f in doc["outer_folds"]:
            assert sum(1 for i in f["test"] if i < 6) == 2

    def test_same_seed_identical_bytes(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(["split", "--n", 50, "--seed", 9, "--out", a], capsys)
        run(["split", "--n", 50, "--seed", 9, "--out", b], capsys)
        assert a.read_bytes() == b.read_bytes()

    def test_too_few_groups(self, tmp_path, capsys):
        groups = write(tmp_path / "g.csv", ("item_id", "group_id"), [(f"i{i}", "g") for i in range(6)])
        assert run(["split", "--groups", groups, "--seed", 0], capsys)[0] == EXIT_INVALID

    def test_seed_from_environment(self, monkeypatch, capsys):
        monkeypatch.setenv("BENCHGATE_SEED", "9")
        env_out = run(["split", "--n", 20], capsys)[1]
        monkeypatch.delenv("BENCHGATE_SEED")
        assert env_out == run(["split", "--n", 20, "--seed", 9], capsys)[1]

    def test_generated_seed_announced(self, monkeypatch, capsys):
        monkeypatch.delenv("BENCHGATE_SEED", raising=False)
        code, out, err = run(["split", "--n", 10], capsys)
        assert "generated seed" in err
        seed = int(err.strip().rsplit(" ", 1)[1])
        assert report(out)["seed"] == seed


SMALL_SCORE = ["simulate", "score-dist", "--n-pos", 20, "--n-neg", 300, "--runs", 3]
SMALL_CV = ["simulate", "cv-bias", "--n-train", 60, "--n-test", 500, "--dim", 5, "--runs", 4, "--separation", 1.2]


class TestSimulate:
    def test_seed_determinism(self, capsys):
        a = report(run(SMALL_SCORE + ["--seed", 7], capsys)[1])
        b = report(run(SMALL_SCORE + ["--seed", 7], capsys)[1])
        c = report(run(SMALL_SCORE + ["--seed", 8], capsys)[1])
        assert a == b
        assert a["results"] != c["results"]
        assert a["seed"] == 7 and a["config"]["seed"] == 7

    def test_defaults_recorded(self, capsys):
        doc = report(run(["simulate", "score-dist", "--runs", 1, "--seed", 0], capsys)[1])
        cfg = doc["config"]
        assert (cfg["n_pos"], cfg["n_neg"], cfg["pos_dist"], cfg["neg_dist"]) == (
            100, 10000, "normal:0.6,0.1", "normal:0.4,0.1",
        )

    def test_cv_defaults(self):
        from benchgate.cli import build_parser

        args = build_parser().parse_args(["simulate", "cv-bias"])
        assert (args.n_train, args.runs, args.n_test, args.k_folds) == (300, 1000, 10000, 3)

    def test_cv_bias_small(self, capsys):
        doc = report(run(SMALL_CV + ["--seed", 2], capsys)[1])
        assert len(doc["results"]["records"]) == 4
        assert doc["config"]["separation"] == 1.2

    def test_bad_distribution(self, capsys):
        assert run(["simulate", "score-dist", "--pos-dist", "cauchy:0,1", "--seed", 0], capsys)[0] == EXIT_INVALID

    def test_curves_written(self, tmp_path, capsys):
        curves = tmp_path / "c.csv"
        run(SMALL_SCORE + ["--seed", 1, "--curves", curves], capsys)
        kinds = {k for k, _ in io.read_curves_csv(curves)}
        assert kinds == {"roc", "prc", "ef_fraction_found", "ef_ratio"}


class TestReplay:
    @pytest.mark.parametrize("argv", [SMALL_SCORE, SMALL_CV])
    def test_replay_identical(self, tmp_path, capsys, argv):
        path = tmp_path / "r.json"
        run(argv + ["--seed", 5, "--out", path], capsys)
        code, out, _ = run(["replay", path], capsys)
        assert code == 0 and out.strip() == "identical"

    def test_replay_detects_change(self, tmp_path, capsys):
        path = tmp_path / "r.json"
        run(SMALL_SCORE + ["--seed", 5, "--out", path], capsys)
        doc = io.read_json(path)
        doc["results"]["records"][0]["auc_roc"] = 0.0
        io.write_json(path, doc)
        code, out, _ = run(["replay", path], capsys)
        assert code == 1 and out.strip() == "differs"

    def test_replay_rejects_eval_report(self, tmp_path, capsys):
        path = tmp_path / "r.json"
        io.write_json(path, {"command": "eval", "results": {}})
        assert run(["replay", path], capsys)[0] == EXIT_INVALID


def test_console_script_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "benchgate", "split", "--n", "6", "--seed", "0"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["n_items"] == 6
