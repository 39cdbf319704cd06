import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ailearn.classifier import (
    ABSTAIN,
    BinarySvm,
    PrototypeClassifier,
    SvmParams,
    classify,
    constant_classifier,
    dual_objective,
    from_record,
    kernel_matrix,
    smo,
    to_record,
    train_binary_svm,
    train_one_class_prototype,
)
from ailearn.dataset import Label
from ailearn.errors import ConfigError, ShapeError, SingleClassError
from oracles import svm_dual_oracle

TIGHT = dict(tolerance=1e-9, epsilon=1e-15, max_iterations=100_000)


def random_problem(rng, n=None):
    n = n or int(rng.integers(2, 7))
    x = rng.normal(size=(n, int(rng.integers(1, 4)))) * rng.uniform(0.3, 3.0)
    y = rng.choice([-1.0, 1.0], size=n)
    y[0], y[1] = -1.0, 1.0
    kernel = "linear" if rng.random() < 0.5 else "rbf"
    gamma = float(rng.uniform(0.1, 2.0))
    c = float(10 ** rng.uniform(-1, 2))
    return x, y, kernel, gamma, c


def kkt_violation(gram, y, alpha, b, c):
    margin = y * (gram @ (alpha * y) + b)
    worst = 0.0
    for m, a in zip(margin, alpha):
        if a <= 0:
            worst = max(worst, 1.0 - m)
        elif a >= c:
            worst = max(worst, m - 1.0)
        else:
            worst = max(worst, abs(m - 1.0))
    return worst


def test_two_point_closed_form():
    x = np.array([[-1.0], [1.0]])
    svm = train_binary_svm(x, [Label.LIVE, Label.SPOOF],
                           SvmParams(kernel="linear", c=1.0, tolerance=1e-12))
    order = np.argsort(svm.support_vectors[:, 0])
    assert np.abs(np.abs(svm.coef[order]) - 0.5).max() < 1e-9
    assert abs(svm.b) < 1e-9
    assert svm.decision_function(np.array([[0.0]]))[0] == pytest.approx(0.0, abs=1e-9)
    assert classify(svm, [0.3]).label is Label.SPOOF
    assert classify(svm, [-0.3]).label is Label.LIVE


def test_xor_matches_reference_dual():
    x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    labels = [Label.LIVE, Label.LIVE, Label.SPOOF, Label.SPOOF]
    svm = train_binary_svm(x, labels, SvmParams(gamma=1.0, c=10.0))
    assert [classify(svm, p).label for p in x] == labels
    y = np.array([-1.0, -1.0, 1.0, 1.0])
    gram = kernel_matrix(x, x, "rbf", 1.0)
    res = smo(gram, y, 10.0, **TIGHT)
    best, _ = svm_dual_oracle(gram, y, 10.0)
    assert dual_objective(res.alpha, y, gram) == pytest.approx(best, rel=1e-6)


def test_separable_blobs_fit_perfectly():
    rng = np.random.default_rng(0)
    x = np.vstack([rng.normal(-3, 0.5, (30, 4)), rng.normal(3, 0.5, (30, 4))])
    labels = [Label.LIVE] * 30 + [Label.SPOOF] * 30
    svm = train_binary_svm(x, labels, SvmParams())
    assert svm.gamma == 0.25
    assert np.array_equal(svm.vote_codes(x), np.array(labels, dtype=np.int8))


@pytest.mark.parametrize("seed", range(40))
def test_smo_invariants_and_oracle(seed):
    rng = np.random.default_rng(seed)
    x, y, kernel, gamma, c = random_problem(rng)
    gram = kernel_matrix(x, x, kernel, gamma)
    res = smo(gram, y, c, **TIGHT)
    assert res.converged
    assert res.alpha.min() >= -1e-9 and res.alpha.max() <= c + 1e-9
    assert abs(float(res.alpha @ y)) < 1e-8
    assert kkt_violation(gram, y, res.alpha, res.b, c) <= 1e-9 + 1e-12
    best, _ = svm_dual_oracle(gram, y, c)
    assert dual_objective(res.alpha, y, gram) == pytest.approx(best, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_kkt_within_default_tolerance(seed):
    rng = np.random.default_rng(100 + seed)
    x = rng.normal(size=(40, 3))
    y = np.where(x[:, 0] + 0.5 * rng.normal(size=40) > 0, 1.0, -1.0)
    gram = kernel_matrix(x, x, "rbf", 0.5)
    res = smo(gram, y, 1.0)
    assert res.converged
    assert kkt_violation(gram, y, res.alpha, res.b, 1.0) <= 1e-3 + 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_label_encoding_symmetry(seed):
    rng = np.random.default_rng(200 + seed)
    x = rng.normal(size=(25, 2))
    labels = [Label.SPOOF if v else Label.LIVE for v in rng.random(25) < 0.5]
    labels[:2] = [Label.LIVE, Label.SPOOF]
    params = SvmParams(gamma=0.7, c=2.0)
    a = train_binary_svm(x, labels, params, positive=Label.SPOOF)
    b = train_binary_svm(x, labels, params, positive=Label.LIVE)
    probe = rng.normal(size=(200, 2)) * 2
    assert np.array_equal(a.decision_function(probe), -b.decision_function(probe))
    nonzero = a.decision_function(probe) != 0
    assert np.array_equal(a.vote_codes(probe)[nonzero], b.vote_codes(probe)[nonzero])


@pytest.mark.parametrize("seed", range(10))
def test_solver_is_symmetric_in_targets(seed):
    rng = np.random.default_rng(300 + seed)
    x = rng.normal(size=(20, 2))
    y = np.where(rng.random(20) < 0.5, 1.0, -1.0)
    y[:2] = [-1.0, 1.0]
    gram = kernel_matrix(x, x, "rbf", 0.7)
    a, b = smo(gram, y, 2.0, **TIGHT), smo(gram, -y, 2.0, **TIGHT)
    assert np.allclose(a.alpha, b.alpha, atol=1e-6)
    assert a.b == pytest.approx(-b.b, abs=1e-6)


def test_exact_zero_decision_votes_live():
    svm = BinarySvm(np.zeros((0, 2)), np.zeros(0), 0.0, "rbf", 1.0, 1.0)
    assert classify(svm, [1.0, 2.0]).label is Label.LIVE
    assert BinarySvm(np.zeros((0, 1)), np.zeros(0), 2.3, "rbf", 1.0, 1.0).vote_codes(
        np.zeros((1, 1)))[0] == Label.SPOOF


def test_svm_requires_both_labels():
    with pytest.raises(SingleClassError):
        train_binary_svm([[0.0], [1.0]], [Label.SPOOF, Label.SPOOF], SvmParams())
    with pytest.raises(SingleClassError):
        train_binary_svm([[0.0]], [Label.SPOOF], SvmParams())


def test_svm_params_validation():
    for bad in (SvmParams(c=0.0), SvmParams(gamma=-1.0), SvmParams(kernel="poly"),
                SvmParams(tolerance=0.0), SvmParams(max_passes=0)):
        with pytest.raises(ConfigError):
            bad.validate()
    assert SvmParams().resolve_gamma(4) == 0.25


def test_prototype_examples():
    p = train_one_class_prototype([[3.0, 4.0]], Label.SPOOF)
    assert p.radius == 0.0 and p.centroid.tolist() == [3.0, 4.0]
    p = train_one_class_prototype([[0.0], [2.0]], Label.SPOOF, radius_quantile=1.0)
    assert p.centroid.tolist() == [1.0] and p.radius == 1.0
    unit = PrototypeClassifier(np.zeros(1), 1.0, Label.SPOOF)
    assert classify(unit, [0.5]).label is Label.SPOOF
    assert classify(unit, [5.0]).abstained
    assert classify(unit, [1.0]).label is Label.SPOOF  # boundary is inside
    with pytest.raises(ConfigError):
        train_one_class_prototype([[0.0]], Label.SPOOF, radius_quantile=0.0)
    with pytest.raises(ShapeError):
        unit.vote_codes(np.zeros((1, 2)))


def test_prototype_quantile_coverage():
    x = np.random.default_rng(5).normal(size=(100, 3))
    p = train_one_class_prototype(x, Label.SPOOF, 0.95)
    inside = np.count_nonzero(p.vote_codes(x) != ABSTAIN)
    assert inside == 95


def test_constant_classifier_always_votes():
    c = constant_classifier([[0.0, 0.0]], Label.LIVE)
    far = np.full((3, 2), 1e6)
    assert np.all(c.vote_codes(far) == Label.LIVE)
    assert math.isinf(c.radius)


def test_classify_is_pure():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(20, 2))
    svm = train_binary_svm(x, [Label.LIVE] * 10 + [Label.SPOOF] * 10, SvmParams())
    first = [classify(svm, p) for p in x]
    assert first == [classify(svm, p) for p in x]


def test_record_round_trip_is_exact():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(12, 3))
    svm = train_binary_svm(x, [Label.LIVE] * 6 + [Label.SPOOF] * 6, SvmParams(c=3.0))
    for clf in (svm, train_one_class_prototype(x, Label.SPOOF), constant_classifier(x, Label.LIVE)):
        back = from_record(to_record(clf), 3)
        assert to_record(back) == to_record(clf)
        probe = rng.normal(size=(50, 3)) * 3
        assert np.array_equal(back.vote_codes(probe), clf.vote_codes(probe))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(2, 6))
def test_smo_objective_property(seed, n):
    rng = np.random.default_rng(seed)
    x, y, kernel, gamma, c = random_problem(rng, n)
    gram = kernel_matrix(x, x, kernel, gamma)
    res = smo(gram, y, c, **TIGHT)
    best, _ = svm_dual_oracle(gram, y, c)
    got = dual_objective(res.alpha, y, gram)
    assert got <= best + 1e-9 * max(1.0, abs(best))
    assert got == pytest.approx(best, rel=1e-6, abs=1e-9)
