import json
import warnings

import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netlist_sentinel import svm
from netlist_sentinel.metrics import Confusion, get_metric

XOR_X = [[0, 0], [1, 1], [0, 1], [1, 0]]
XOR_Y = [0, 0, 1, 1]


def dual_oracle(Q, y, upper):
    """Dense QP solve of the same dual with a generic conic solver."""
    a = cp.Variable(len(y))
    objective = cp.Minimize(0.5 * cp.quad_form(a, cp.psd_wrap(Q)) - cp.sum(a))
    cp.Problem(objective, [a >= 0, a <= upper, y @ a == 0]).solve(solver=cp.CLARABEL)
    return objective.value


def random_problem(rng, n=None, d=None):
    n = n or int(rng.integers(4, 21))
    d = d or int(rng.integers(1, 6))
    X = rng.normal(size=(n, d))
    y = np.where(rng.random(n) < 0.4, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    gamma = float(rng.choice([0.1, 0.5, 1.0, 3.0]))
    C = float(rng.choice([0.1, 1.0, 10.0, 100.0]))
    upper = np.where(y > 0, C * float(rng.choice([1.0, 2.5, 7.0])), C)
    Q = np.outer(y, y) * svm.rbf(X, X, gamma)
    return X, y, upper, Q, gamma


def kkt_violation(Q, y, upper, res):
    f = Q @ (res.alpha) * y - res.rho * np.ones(len(y))  # f(x_t) = sum_s a_s y_s K_ts - rho
    margin = y * f
    worst = 0.0
    for a, m, u in zip(res.alpha, margin, upper):
        if a <= 0:
            worst = max(worst, 1 - m)
        elif a >= u:
            worst = max(worst, m - 1)
        else:
            worst = max(worst, abs(m - 1))
    return worst


def test_smo_matches_dense_dual_solve():
    rng = np.random.default_rng(11)
    for _ in range(25):
        _, y, upper, Q, _ = random_problem(rng)
        res = svm.smo(Q, y, upper, tol=1e-3)
        assert res.converged
        ref = dual_oracle(Q, y, upper)
        assert abs(res.objective - ref) <= 1e-4 * max(1.0, abs(ref))


def test_smo_kkt_and_feasibility():
    rng = np.random.default_rng(5)
    for _ in range(25):
        _, y, upper, Q, _ = random_problem(rng)
        res = svm.smo(Q, y, upper, tol=1e-3)
        assert np.all(res.alpha >= 0) and np.all(res.alpha <= upper)
        assert abs(res.alpha @ y) < 1e-6
        assert kkt_violation(Q, y, upper, res) <= 1e-3


def test_warm_start_reaches_same_optimum():
    rng = np.random.default_rng(3)
    _, y, upper, Q, _ = random_problem(rng, n=18, d=3)
    cold = svm.smo(Q, y, upper * 10)
    seeded = svm.smo(Q, y, upper * 10, alpha0=svm.smo(Q, y, upper).alpha * 10)
    assert seeded.objective == pytest.approx(cold.objective, rel=1e-4)


def test_xor_classified():
    m = svm.train(XOR_X, XOR_Y, svm.KernelParams(gamma=1.0, C=10.0), standardize=False)
    assert m.predict(XOR_X).tolist() == XOR_Y
    values = m.decision_function(XOR_X)
    assert all((v > 0) == bool(t) for v, t in zip(values, XOR_Y))


def test_two_point_separable():
    m = svm.train([[0.0], [1.0]], [0, 1], svm.KernelParams(gamma=1.0, C=1000.0))
    assert m.classify([0.0]) == 0 and m.classify([1.0]) == 1


def test_single_class_rejected():
    with pytest.raises(ValueError):
        svm.train([[0], [1]], [1, 1], svm.KernelParams(1.0, 1.0))


@pytest.mark.parametrize("kw", [dict(gamma=0, C=1), dict(gamma=1, C=-1), dict(gamma=1, C=1, class_weight={1: 0})])
def test_kernel_params_validation(kw):
    with pytest.raises(ValueError):
        svm.KernelParams(**kw)


def test_degenerate_model_identities():
    params = svm.KernelParams(gamma=50.0, C=1.0)
    m = svm.TrainedSvm(np.array([[0.5, 0.5]]), np.array([0.7]), 0.0, params, (True, True))
    assert m.decision_value([0.5, 0.5]) == pytest.approx(0.7)
    far = svm.TrainedSvm(np.array([[0.0, 0.0]]), np.array([0.7]), -0.2, params, (True, True))
    assert far.decision_value([3.0, 3.0]) == pytest.approx(-0.2)


def test_dimension_mismatch():
    m = svm.train(XOR_X, XOR_Y, svm.KernelParams(1.0, 10.0))
    with pytest.raises(ValueError):
        m.decision_value([1, 2, 3])


def test_mask_projects_features():
    X = [[0, 9], [1, 3], [0, 1], [1, 7]]
    y = [0, 1, 0, 1]
    m = svm.train(X, y, svm.KernelParams(1.0, 10.0), mask=(True, False))
    assert m.support_vectors.shape[1] == 1
    assert m.predict(X).tolist() == y


def test_duplicate_rows_merge_without_changing_predictions():
    rng = np.random.default_rng(2)
    X = rng.integers(0, 4, size=(40, 2)).astype(float)
    y = (X[:, 0] + rng.normal(0, 0.8, 40) > 1.5).astype(int)
    params = svm.KernelParams(0.5, 5.0, {0: 1.0, 1: 2.0})
    merged = svm.train(X, y, params)
    # explicit oracle: unmerged dual on standardized rows
    Z = merged.scaler.transform(X)
    ys = np.where(y == 1, 1.0, -1.0)
    Q = np.outer(ys, ys) * svm.rbf(Z, Z, 0.5)
    upper = np.where(ys > 0, 10.0, 5.0)
    assert merged.dual_objective == pytest.approx(dual_oracle(Q, ys, upper), rel=1e-4)


def test_standardization_invariance():
    rng = np.random.default_rng(4)
    X = rng.normal(3.0, 2.0, size=(30, 3))
    y = (X[:, 0] > 3.0).astype(int)
    params = svm.KernelParams(0.3, 10.0)
    auto = svm.train(X, y, params)
    pre = svm.train(auto.scaler.transform(X), y, params, standardize=False)
    assert auto.predict(X).tolist() == pre.predict(auto.scaler.transform(X)).tolist()


def test_json_round_trip_is_exact():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(25, 5))
    y = (X[:, 1] > 0).astype(int)
    m = svm.train(X, y, svm.KernelParams(0.2, 3.0, {0: 1.0, 1: 1.7}))
    back = svm.TrainedSvm.from_json(m.to_json())
    assert back.to_json() == m.to_json()
    assert np.array_equal(back.decision_function(X), m.decision_function(X))
    doc = json.loads(m.to_json())
    assert {"mask", "gamma", "C", "class_weight", "scaler", "svs", "dual_coefs", "bias"} <= set(doc)


def test_training_is_deterministic():
    rng = np.random.default_rng(9)
    X = rng.integers(0, 6, size=(60, 5))
    y = (X.sum(1) > 14).astype(int)
    a = svm.train(X, y, svm.KernelParams(0.2, 10.0))
    b = svm.train(X, y, svm.KernelParams(0.2, 10.0))
    assert a.to_json() == b.to_json()


def test_iteration_limit_warns_and_flags():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 2))
    y = (rng.random(30) > 0.5).astype(int)
    with pytest.warns(svm.ConvergenceWarning):
        m = svm.train(X, y, svm.KernelParams(1.0, 100.0), max_iter=3)
    assert not m.converged
    assert m.predict(X).shape == (30,)


def test_stratified_folds_cover_both_classes():
    y = [0] * 23 + [1] * 7
    folds = svm.stratified_folds(y, 5, seed=3)
    assert sorted(np.concatenate(folds).tolist()) == list(range(30))
    for f in folds:
        assert {y[i] for i in f} == {0, 1}
    with pytest.raises(ValueError):
        svm.stratified_folds([0] * 10 + [1] * 3, 5)


def test_resolve_gamma():
    assert svm.resolve_gamma("1/d", 4) == 0.25
    with pytest.raises(ValueError):
        svm.resolve_gamma("auto", 4)


def test_grid_search_single_point():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 2))
    y = (X[:, 0] > 0).astype(int)
    p = svm.grid_search(X, y, C_grid=[3.0], gamma_grid=[0.7])
    assert (p.C, p.gamma) == (3.0, 0.7)
    assert p.class_weight[1] == pytest.approx((y == 0).sum() / (y == 1).sum())


def test_grid_search_picks_best_point_exhaustively():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(60, 2))
    y = ((X[:, 0] * X[:, 1]) > 0).astype(int)
    cs, gs = [0.1, 1.0, 10.0], [0.1, 1.0, 10.0]
    best, scores = svm.grid_search(X, y, C_grid=cs, gamma_grid=gs, folds=3, return_scores=True)
    for C in cs:
        for g in gs:
            assert scores[(best.C, best.gamma)] >= scores[(C, g)]
            # cold-start cross-validation agrees with the warm-started sweep
            cold = svm.cross_validate(X, y, C, g, folds=3)
            assert cold == pytest.approx(scores[(C, g)], abs=1e-9)


def test_grid_search_ties_go_to_smaller_c_then_gamma():
    X = [[0.0], [0.1], [0.2], [0.3], [5.0], [5.1], [5.2], [5.3]]
    y = [0, 0, 0, 0, 1, 1, 1, 1]
    p = svm.grid_search(X, y, C_grid=[10.0, 1.0], gamma_grid=[1.0, 0.5], folds=2, metric="accuracy")
    assert (p.C, p.gamma) == (1.0, 0.5)


def test_separable_set_reaches_full_fold_accuracy():
    X = [[i, 0] for i in range(10)] + [[i, 10] for i in range(10)]
    y = [0] * 10 + [1] * 10
    p, scores = svm.grid_search(X, y, C_grid=[1.0, 10.0], gamma_grid=[0.1, 1.0], metric="accuracy",
                                return_scores=True)
    assert scores[(p.C, p.gamma)] == 1.0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_box_and_equality_invariants(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 5, size=(25, 3))
    y = rng.integers(0, 2, size=25)
    y[0], y[1] = 0, 1
    params = svm.KernelParams(0.5, 10.0, svm.balanced_weights(y))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", svm.ConvergenceWarning)
        m = svm.train(X, y, params)
    alpha = np.abs(m.dual_coefs)
    assert np.all(alpha <= 25 * params.penalty(1) + 1e-9)
    assert abs(m.dual_coefs.sum()) < 1e-6
    assert np.array_equal(m.predict(X), m.predict(X))


def test_metrics_registry():
    c = Confusion.of([1, 1, 0, 0], [1, 0, 0, 1])
    assert c == Confusion(1, 1, 1, 1)
    assert get_metric("mcc")(c) == 0.0
    assert get_metric("accuracy")(c) == 0.5
    with pytest.raises(ValueError):
        get_metric("auc")
