"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
verdict lines.  Every tolerance is pinned here; nothing is deferred.
"""

import subprocess
import sys
import time
from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np

from trollmap.evaluation import (
    classification_report,
    overlap_validation,
    agreement_validation,
    stratified_kfold,
    stratified_split,
)
from trollmap.features import FeatureMatrix, chi2_scores, l1_normalize
from trollmap.forest import (
    ForestParams,
    crossval_weighted_f1,
    depth_sweep,
    gini_impurity,
    predict_batch,
    train_forest,
)
from trollmap.baselines import compare_classifiers
from trollmap.propagation import cosine_similarity, propagate_labels
from trollmap.synth import classifier_spec, generate_synthetic
from trollmap.taxonomy import CATEGORIES, Category, Label, LabelSet, LabelSource


def _verdict(number, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {number:02d}] {status} {name}: {detail}")
    assert ok, f"criterion {number} ({name}) failed: {detail}"


# ---------------------------------------------------------------------------

def test_criterion_01_oracle_equivalence():
    started = time.time()
    rng = np.random.default_rng(101)
    rel = lambda got, exact: abs(got - exact) <= 1e-10 * max(1.0, abs(exact))

    # gini vs exact rational arithmetic
    for _ in range(1000):
        mass = rng.integers(0, 60, size=int(rng.integers(2, 5)))
        if mass.sum() == 0:
            mass[0] = 1
        total = Fraction(int(mass.sum()))
        exact = float(sum((Fraction(int(m)) / total) * (1 - Fraction(int(m)) / total) for m in mass))
        assert rel(gini_impurity(mass), exact)

    # cosine vs 50-digit decimal arithmetic
    getcontext().prec = 50
    done = 0
    while done < 1000:
        m = int(rng.integers(2, 25))
        u = rng.integers(0, 2, size=m)
        v = rng.integers(0, 2, size=m)
        if not u.any() or not v.any():
            continue
        exact = float(Decimal(int(u @ v)) / (Decimal(int(u.sum())) * Decimal(int(v.sum()))).sqrt())
        assert rel(cosine_similarity(u, v), exact)
        done += 1

    # chi-square vs exact rational arithmetic
    done = 0
    while done < 1000:
        n, d = int(rng.integers(6, 30)), int(rng.integers(1, 7))
        values = rng.integers(0, 500, size=(n, d))
        y = [int(c) for c in rng.integers(0, 4, size=n)]
        if len(set(y)) < 2:
            continue
        X = FeatureMatrix(
            row_ids=tuple(f"r{i}" for i in range(n)),
            columns=tuple(f"c{j}" for j in range(d)),
            values=values.astype(float),
        )
        got = dict(chi2_scores(X, y).ranking)
        for j in range(d):
            total = int(values[:, j].sum())
            exact = Fraction(0)
            for c in set(y):
                n_c = y.count(c)
                observed = int(values[[i for i, lab in enumerate(y) if lab == c], j].sum())
                expected = Fraction(total * n_c, n)
                if expected != 0:
                    exact += (observed - expected) ** 2 / expected
            assert rel(got[f"c{j}"], float(exact))
        done += 1

    # classification report vs direct counting (exact)
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        y_true = [CATEGORIES[c] for c in rng.integers(0, 4, size=n)]
        y_pred = [CATEGORIES[c] for c in rng.integers(0, 4, size=n)]
        report = classification_report(y_true, y_pred)
        for idx, c in enumerate(CATEGORIES):
            tp = sum(1 for t, p in zip(y_true, y_pred) if t is c and p is c)
            fp = sum(1 for t, p in zip(y_true, y_pred) if t is not c and p is c)
            fn = sum(1 for t, p in zip(y_true, y_pred) if t is c and p is not c)
            m = report.per_class[c]
            assert m.support == tp + fn
            assert m.precision == (tp / (tp + fp) if tp + fp else 0.0)
            assert m.recall == (tp / (tp + fn) if tp + fn else 0.0)

    elapsed = time.time() - started
    _verdict(1, "oracle equivalence", elapsed < 10.0,
             f"4 oracles x 1000 instances, rel tol 1e-10, {elapsed:.1f}s (< 10s)")


def test_criterion_02_propagation_recovery():
    started = time.time()
    rates = {}
    for rho in (0.1, 0.0):
        spec = classifier_spec(
            seed=42, total=1000, proportions=(0.25, 0.25, 0.25, 0.25),
            labeled_fraction=0.5, contamination=rho, n_spans=18,
        )
        dataset = generate_synthetic(spec)
        assert len(dataset.visible) == 500 and len(dataset.hidden_ids) == 500
        report = propagate_labels(dataset.profiles(), dataset.visible, dataset.spans)
        assert not report.unresolved
        hits = sum(1 for r in report.results if dataset.truth.category_of(r.user_id) is r.final)
        rates[rho] = hits / len(report.results)
    elapsed = time.time() - started
    ok = rates[0.1] >= 0.95 and rates[0.0] == 1.0 and elapsed < 20.0
    _verdict(2, "propagation recovery", ok,
             f"rho=0.1: {rates[0.1]:.4f} (>= 0.95), rho=0: {rates[0.0]:.4f} (= 1.0), {elapsed:.1f}s (< 20s)")


def test_criterion_03_classifier_quality():
    started = time.time()
    dataset = generate_synthetic(classifier_spec(seed=0, total=2400))
    X = l1_normalize(dataset.matrix)
    params = ForestParams(n_trees=100, max_depth=5, seed=0, class_weight_mode="balanced_subsample")
    scores = crossval_weighted_f1(X, list(dataset.labels), params, folds=5)
    mean_f1 = float(np.mean(scores))
    elapsed = time.time() - started
    ok = mean_f1 >= 0.85 and elapsed < 60.0
    _verdict(3, "classifier quality", ok,
             f"5-fold CV weighted f1 = {mean_f1:.4f} (>= 0.85), {elapsed:.1f}s (< 60s)")


def test_criterion_04_classifier_ranking():
    wins = 0
    for seed in range(10):
        dataset = generate_synthetic(classifier_spec(seed=seed, total=2400))
        X = l1_normalize(dataset.matrix)
        rows = dict(
            compare_classifiers(
                X, list(dataset.labels), ForestParams(n_trees=100, seed=seed), seed=seed
            )
        )
        if rows["RandomForest"] >= rows["DecisionTree"] and rows["RandomForest"] >= rows["NaiveBayes"]:
            wins += 1
    _verdict(4, "classifier ranking", wins >= 8,
             f"forest >= tree and >= bayes in {wins}/10 seeds (>= 8)")


def test_criterion_05_imbalance_handling():
    # minority sits exactly on part of the majority's support: only class
    # weighting can make a mixed leaf vote for it
    X = np.concatenate([np.full(12, 5.0), np.full(60, 5.0), np.linspace(0, 10, 240)])[:, None]
    y = [Category.FAKE_NEWS] * 12 + [Category.INDIVIDUALS] * 300
    minority_rows = np.arange(12)

    def recall(mode):
        params = ForestParams(n_trees=50, max_depth=4, seed=11, class_weight_mode=mode)
        model = train_forest(X, y, params)
        winners, _ = predict_batch(model, X[minority_rows])
        return float(np.mean([w is Category.FAKE_NEWS for w in winners]))

    balanced = recall("balanced_subsample")
    uniform = recall("uniform")
    _verdict(5, "imbalance handling", balanced > uniform,
             f"minority recall balanced={balanced:.3f} > uniform={uniform:.3f} (same seed)")


def test_criterion_06_depth_sweep_shape():
    depths = list(range(1, 11))
    curves = []
    for seed in range(5):
        dataset = generate_synthetic(classifier_spec(seed=100 + seed, total=1200))
        X = l1_normalize(dataset.matrix)
        sweep = depth_sweep(
            X, list(dataset.labels), depths, ForestParams(n_trees=40, seed=seed), folds=3
        )
        curves.append([f1 for _, f1 in sweep])
    mean_curve = np.mean(curves, axis=0)
    peak = int(np.argmax(mean_curve))
    underfit_detected = mean_curve[4] > mean_curve[0]  # depth 5 beats depth 1
    flat_beyond_peak = all(
        mean_curve[i + 1] <= mean_curve[i] + 0.02 for i in range(peak, len(depths) - 1)
    )
    ok = underfit_detected and flat_beyond_peak
    _verdict(6, "depth sweep shape", ok,
             f"f1(5)={mean_curve[4]:.4f} > f1(1)={mean_curve[0]:.4f}; "
             f"peak at depth {depths[peak]}, beyond-peak drift <= 0.02 over 5 seeds")


def test_criterion_07_validation_arithmetic():
    our = LabelSet(
        [(f"h{i:02d}", Label(Category.FAKE_NEWS, LabelSource.MODEL_PREDICTED)) for i in range(49)]
        + [(f"h{i:02d}", Label(Category.INDIVIDUALS, LabelSource.MODEL_PREDICTED)) for i in range(49, 54)]
    )
    overlap = overlap_validation(our, Category.FAKE_NEWS, {f"h{i:02d}" for i in range(54)})
    overlap_ok = (
        overlap.total == 54
        and overlap.matched == 49
        and round(overlap.rate, 4) == 0.9074
        and len(overlap.misclassified) == 5
    )

    manual_entries, predicted_entries = [], []
    for i in range(1435):
        uid = f"ru{i:04d}"
        actual = CATEGORIES[i % 4]
        manual_entries.append((uid, Label(actual, LabelSource.MANUAL)))
        predicted = actual if i < 1299 else CATEGORIES[(i + 1) % 4]
        predicted_entries.append((uid, Label(predicted, LabelSource.MODEL_PREDICTED)))
    agreement = agreement_validation(LabelSet(manual_entries), LabelSet(predicted_entries))
    agreement_ok = (
        agreement.total == 1435
        and agreement.matches == 1299
        and round(agreement.rate, 4) == 0.9052
    )
    _verdict(7, "validation arithmetic", overlap_ok and agreement_ok,
             f"overlap {overlap.matched}/{overlap.total} = {overlap.rate:.4f} (0.9074); "
             f"agreement {agreement.matches}/{agreement.total} = {agreement.rate:.4f} (0.9052)")


def test_criterion_08_stratification():
    rng = np.random.default_rng(88)
    checked = 0
    for _ in range(40):
        counts = rng.integers(2, 50, size=4)
        y = [c for cat, n in zip(CATEGORIES, counts) for c in [cat] * int(n)]
        fraction = float(rng.uniform(0.1, 0.9))
        _, test = stratified_split(y, fraction, seed=int(rng.integers(10_000)))
        for cat, n in zip(CATEGORIES, counts):
            got = sum(1 for i in test if y[i] is cat)
            assert abs(got - n * fraction) <= 1.0, (counts, fraction, cat)
        checked += 1

        k = int(rng.integers(2, 6))
        if min(counts) >= k:
            folds = stratified_kfold(y, k, seed=int(rng.integers(10_000)))
            assert sorted(i for _, t in folds for i in t) == list(range(len(y)))
            for cat, n in zip(CATEGORIES, counts):
                per_fold = [sum(1 for i in t if y[i] is cat) for _, t in folds]
                assert max(per_fold) - min(per_fold) <= 1
    _verdict(8, "stratification", checked == 40,
             f"{checked} randomized label vectors: per-class deviation <= 1 sample in every split/fold")


def test_criterion_09_determinism(tmp_path):
    out = tmp_path / "run"
    config = tmp_path / "config.ini"
    config.write_text(
        f"[run]\nseed = 13\nout_dir = {out}\n"
        "[synth]\naccounts = 240\nn_spans = 4\npool_size = 20\n"
        "[forest]\nn_trees = 10\n"
        "[train]\ncv_folds = 3\n",
        encoding="utf-8",
    )
    stages = ("synth", "propagate", "train", "evaluate", "compare", "validate")

    def run_all(force):
        for stage in stages:
            args = [sys.executable, "-m", "trollmap", stage, "--config", str(config)]
            if force:
                args.append("--force")
            result = subprocess.run(args, capture_output=True, text=True)
            assert result.returncode == 0, f"{stage}: {result.stderr}"

    run_all(force=False)
    tracked = sorted(p.name for p in out.iterdir())
    first = {name: (out / name).read_bytes() for name in tracked}
    run_all(force=True)
    unchanged = [name for name in tracked if (out / name).read_bytes() == first[name]]
    ok = unchanged == tracked
    _verdict(9, "determinism", ok,
             f"{len(unchanged)}/{len(tracked)} artifacts byte-identical across two full runs")


def test_criterion_10_sample_size_degradation():
    minority_f1 = {0.64: [], 0.85: []}
    for seed in range(5):
        dataset = generate_synthetic(classifier_spec(seed=seed, total=2400))
        X = l1_normalize(dataset.matrix).values
        y = list(dataset.labels)
        for size in (0.64, 0.85):
            inner = []
            for rep in range(3):
                keep, _ = stratified_split(y, 1.0 - size, 7919 * seed + rep)
                Xs = X[keep]
                ys = [y[i] for i in keep]
                train_idx, test_idx = stratified_split(ys, 0.2, 104729 * seed + rep)
                model = train_forest(
                    Xs[train_idx], [ys[i] for i in train_idx], ForestParams(n_trees=100, seed=seed)
                )
                predicted, _ = predict_batch(model, Xs[test_idx])
                report = classification_report([ys[i] for i in test_idx], predicted)
                inner.append(report.per_class[Category.FAKE_NEWS].f1)
            minority_f1[size].append(float(np.mean(inner)))
    small = float(np.mean(minority_f1[0.64]))
    large = float(np.mean(minority_f1[0.85]))
    _verdict(10, "sample-size degradation", small < large,
             f"minority f1 at 64% sample = {small:.4f} < {large:.4f} at 85% (5-seed mean)")
