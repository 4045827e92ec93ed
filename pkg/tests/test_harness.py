import numpy as np
import pytest

from fscompare.classifiers import Classifier, TrainConfig, decision_score
from fscompare.data import SynthSpec, binary_view, synthesize
from fscompare.harness import (AccuracyRow, Condition, ExperimentConfig, FoldError, ResultTable,
                               StabilityRow, best_classifier, compare_methods, fit_fold, fold_seed,
                               loocv_run, run_experiment, worker_count)
from fscompare.selectors import Method, rank_features

from conftest import make_matrix

FAST = TrainConfig(n_trees=25)


def small_config(**kw):
    base = dict(datasets=(("toy", "unused.csv"),), conditions=(Condition("toy", "control", "treated"),),
                k_grid=(3, 8), train=FAST, seed=11)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def toy():
    return synthesize(SynthSpec(m_per_class=5, n=30, n_planted=4, effect_size=2.5, seed=2))


@pytest.fixture(scope="module")
def toy_table(toy):
    return run_experiment(small_config(), {"toy": toy}, workers=1)


def test_cardinality(toy_table):
    assert len(toy_table.stability) == 1 * 3 * 2
    assert len(toy_table.accuracy) == 1 * 3 * 2 * 4
    keys = {(r.condition, r.method, r.k) for r in toy_table.stability}
    assert len(keys) == 6
    assert not toy_table.failures
    assert all(0 < r.stab <= 1 for r in toy_table.stability)
    assert all(0 <= r.auc <= 1 for r in toy_table.accuracy)


def test_canonical_order(toy_table):
    keys = [(r.condition, r.method, r.classifier, r.k) for r in toy_table.accuracy]
    assert keys == sorted(keys)


def test_loocv_counts(toy):
    view = binary_view(toy, "control", "treated")
    run, preds = loocv_run(view, Method.SAM, 5, list(Classifier), FAST, seed=3)
    assert len(run.subsets) == view.m == 10
    assert sum(len(p) for p in preds.values()) == 4 * view.m
    assert sorted(p.sample_index for p in preds[Classifier.RF]) == list(range(10))


def test_loocv_fold_equals_direct_selection(toy):
    view = binary_view(toy, "control", "treated")
    for method in Method:
        run, _ = loocv_run(view, method, 6, [Classifier.RIDGE], FAST)
        for i, subset in enumerate(run.subsets):
            reduced = make_matrix(np.delete(toy.values, i, axis=0),
                                  [l for j, l in enumerate(toy.labels) if j != i])
            direct = rank_features(binary_view(reduced, "control", "treated"), method, 6)
            assert subset.indices == direct.indices


def test_run_experiment_matches_loocv_run(toy, toy_table):
    view = binary_view(toy, "control", "treated")
    cond = "toy/treated_vs_control"
    run, preds = loocv_run(view, Method.GEODE, 8, list(Classifier), FAST, seed=11, condition=cond)
    assert toy_table.selections[(cond, "GEODE", 8)] == run
    from fscompare.metrics import auc
    for c in Classifier:
        assert toy_table.auc(cond, "GEODE", c.value, 8) == auc(preds[c])


def test_prefix_ranking_matches_per_k_selection(toy, toy_table):
    # one ranking per fold at max k serves every k of the grid
    view = binary_view(toy, "control", "treated")
    for method in Method:
        run, _ = loocv_run(view, method, 3, [Classifier.RIDGE], FAST, seed=11)
        assert toy_table.selections[("toy/treated_vs_control", method.value, 3)] == run


def test_leakage_guard(toy):
    view = binary_view(toy, "control", "treated")
    rng = np.random.default_rng(0)
    probes = rng.normal(size=(5, toy.n))
    for trial in range(20):
        fold = int(rng.integers(view.m))
        method = list(Method)[trial % 3]
        subset, models = fit_fold(view, method, 6, list(Classifier), FAST, seed=1, fold=fold)
        values = toy.values.copy()
        values[view.sample_indices[fold]] = rng.normal(size=toy.n) * 100
        mutated = make_matrix(values, toy.labels)
        mview = binary_view(mutated, "control", "treated")
        subset2, models2 = fit_fold(mview, method, 6, list(Classifier), FAST, seed=1, fold=fold)
        assert subset2 == subset
        cols = list(subset.indices)
        for c in Classifier:
            for x in probes:
                assert decision_score(models2[c], x[cols]) == decision_score(models[c], x[cols])


def test_fold_losing_class_raises():
    labels = ["a"] * 4 + ["b"] * 2
    mat = make_matrix(np.random.default_rng(0).normal(size=(6, 5)), labels)
    view = binary_view(mat, "a", "b")
    with pytest.raises(FoldError, match="'b'"):
        loocv_run(view, Method.SAM, 2, [Classifier.RIDGE], FAST)


def test_failed_cells_are_recorded():
    labels = ["control"] * 4 + ["treated"] * 2
    mat = make_matrix(np.random.default_rng(0).normal(size=(6, 10)), labels)
    table = run_experiment(small_config(k_grid=(2, 4), methods=(Method.SAM,)), {"toy": mat}, workers=1)
    assert len(table.stability) == 2 and all(r.stab is None for r in table.stability)
    assert all(r.auc is None for r in table.accuracy) and len(table.accuracy) == 8
    assert {(f.method, f.k) for f in table.failures} == {("SAM", 2), ("SAM", 4)}
    assert "treated" in table.failures[0].message


def test_k_exceeding_n(toy):
    with pytest.raises(ValueError, match="k=31"):
        run_experiment(small_config(k_grid=(3, 31)), {"toy": toy})


def test_determinism_and_schedule_independence(toy, toy_table, monkeypatch):
    again = run_experiment(small_config(), {"toy": toy}, workers=1)
    assert again.stability == toy_table.stability and again.accuracy == toy_table.accuracy
    parallel = run_experiment(small_config(), {"toy": toy}, workers=3)
    assert parallel.stability == toy_table.stability and parallel.accuracy == toy_table.accuracy
    other_seed = run_experiment(small_config(seed=12), {"toy": toy}, workers=1)
    assert other_seed.stability == toy_table.stability  # selection uses no randomness
    monkeypatch.setenv("FSCOMPARE_WORKERS", "2")
    assert worker_count(7) == 2


def test_fold_seed_stable():
    assert fold_seed(0, "c", Method.SAM, 12, 3) == fold_seed(0, "c", "SAM", 12, 3)
    seeds = {fold_seed(0, "c", m, k, f) for m in Method for k in (1, 2) for f in range(5)}
    assert len(seeds) == 30
    assert fold_seed(0, "c", "SAM", 12, 3) != fold_seed(1, "c", "SAM", 12, 3)
    assert 0 <= fold_seed(2**64 - 1, "c", "SAM", 12, 3) < 2**64


def test_config_invariants():
    with pytest.raises(ValueError):
        small_config(methods=())
    with pytest.raises(ValueError):
        small_config(k_grid=(0, 3))
    with pytest.raises(ValueError):
        small_config(conditions=(Condition("other", "a", "b"),))


def table_from(values, condition="c"):
    stability, accuracy = [], []
    for method, series in values.items():
        for k, v in zip((10, 20, 30, 40, 50), series):
            stability.append(StabilityRow(condition, method, k, v))
            for clf in ("RF", "SVM"):
                accuracy.append(AccuracyRow(condition, method, clf, k, v))
    return ResultTable(stability, accuracy)


def test_compare_methods_dominance():
    rng = np.random.default_rng(0)
    table = table_from({"SAM": 0.3 + 0.01 * rng.random(5), "GEODE": 0.8 + 0.01 * rng.random(5),
                        "MRMR": 0.31 + 0.01 * rng.random(5)})
    recs = [r for r in compare_methods(table) if r.measure == "stability"]
    favored = [r for r in recs if r.better == "GEODE"]
    assert len(favored) == 2 and all(r.p_adj < 0.05 and r.significant for r in favored)
    assert len(compare_methods(table)) == 3 + 2 * 3


def test_compare_methods_identical():
    table = table_from({m: [0.5, 0.6, 0.7, 0.6, 0.5] for m in ("SAM", "GEODE", "MRMR")})
    recs = compare_methods(table)
    assert recs and all(r.p_adj == 1.0 and not r.significant for r in recs)


def test_compare_methods_constant_groups():
    table = table_from({"SAM": [1.0] * 5, "GEODE": [1.0] * 5, "MRMR": [0.5] * 5})
    recs = {(r.measure, r.classifier, r.better, r.worse): r.p_adj for r in compare_methods(table)}
    assert recs[("stability", "", "SAM", "MRMR")] == 0.0
    assert recs[("stability", "", "SAM", "GEODE")] == 1.0


def test_compare_methods_drops_missing():
    table = table_from({"SAM": [0.1, 0.2, 0.1, 0.2, 0.1], "GEODE": [0.9, 0.8, 0.9, 0.8, 0.9]})
    table.stability[0] = StabilityRow("c", "GEODE", 10, None)
    recs = [r for r in compare_methods(table) if r.measure == "stability"]
    assert len(recs) == 1 and recs[0].better == "GEODE"


def test_best_classifier():
    table = table_from({"SAM": [0.5] * 5})
    table.accuracy = [r if r.classifier == "RF" else AccuracyRow(r.condition, r.method, r.classifier,
                                                                   r.k, 0.9) for r in table.accuracy]
    assert best_classifier(table, "c") == "SVM"
    with pytest.raises(ValueError):
        best_classifier(table, "missing")
