"""SVM trainer and classifier tests, cross-checked against an SLSQP dual oracle."""

import dataclasses
import json

import numpy as np
import pytest

from shesop.svm_classifier import (
    CorruptModel,
    FeatureVector,
    InconsistentFeatures,
    Kernel,
    MissingFeature,
    Scaler,
    SchemaMismatch,
    SingleClass,
    SvmModel,
    TrainConfig,
    classify_condition,
    decision_value,
    kkt_violation,
    load_model,
    predict,
    report_features,
    save_model,
    train_smo,
)


def fv(*vals):
    return FeatureVector(names=tuple(f"f{i}" for i in range(len(vals))), values=tuple(map(float, vals)))


XOR = [(fv(0, 0), -1), (fv(1, 1), -1), (fv(0, 1), 1), (fv(1, 0), 1)]
XOR_CONFIG = TrainConfig(C=10.0, kernel=Kernel(kind="rbf", gamma=1.0), seed=3)


def dual_objective(alpha, y, k):
    return float(np.sum(alpha) - 0.5 * alpha * y @ k @ (alpha * y))


def oracle_dual_solution(x, y, kernel, c):
    """Independent QP solve of the SVM dual (SLSQP with the equality constraint)."""
    from scipy.optimize import minimize

    k = kernel.matrix(x, x)
    n = len(y)

    result = minimize(
        lambda a: -dual_objective(a, y, k),
        x0=np.full(n, c / 2),
        bounds=[(0.0, c)] * n,
        constraints={"type": "eq", "fun": lambda a: float(np.dot(a, y))},
        method="SLSQP",
        options={"maxiter": 500, "ftol": 1e-12},
    )
    assert result.success
    return result.x, k


class TestTrainSmo:
    def test_separable_pair_linear(self):
        data = [(fv(-1.0), -1), (fv(1.0), 1)]
        model = train_smo(data, TrainConfig(kernel=Kernel(kind="linear")))
        for x, y in data:
            value = decision_value(model, x)
            assert np.sign(value) == y
        assert model.converged

    def test_xor_training_accuracy(self):
        model = train_smo(XOR, XOR_CONFIG)
        assert all(np.sign(decision_value(model, x)) == y for x, y in XOR)
        assert model.converged

    def test_xor_matches_qp_oracle(self):
        pytest.importorskip("scipy")
        model = train_smo(XOR, XOR_CONFIG)
        x_scaled = model.scaler.apply(np.array([x.values for x, _ in XOR]))
        y = np.array([label for _, label in XOR], dtype=float)
        alpha_oracle, k = oracle_dual_solution(x_scaled, y, model.kernel, XOR_CONFIG.C)
        # reconstruct this model's alphas from the kept support vectors
        alpha = np.zeros(len(XOR))
        for coef, sv in zip(model.dual_coefs, model.support_vectors):
            idx = np.where((x_scaled == sv).all(axis=1))[0][0]
            alpha[idx] = abs(coef)
        assert dual_objective(alpha, y, k) == pytest.approx(
            dual_objective(alpha_oracle, y, k), abs=1e-2
        )

    def test_single_class_rejected(self):
        with pytest.raises(SingleClass):
            train_smo([(fv(0.0), 1), (fv(1.0), 1)])

    def test_inconsistent_feature_names_rejected(self):
        bad = FeatureVector(names=("other",), values=(1.0,))
        with pytest.raises(InconsistentFeatures):
            train_smo([(fv(0.0), -1), (bad, 1)])

    def test_bad_labels_rejected(self):
        with pytest.raises(ValueError):
            train_smo([(fv(0.0), 0), (fv(1.0), 1)])

    def test_kkt_conditions_and_dual_constraint(self):
        rng = np.random.default_rng(42)
        for seed in range(3):
            pts = np.vstack([rng.normal([0, 0], 1.2, (30, 2)), rng.normal([2.5, 2.5], 1.2, (30, 2))])
            labels = [-1] * 30 + [1] * 30
            data = [(fv(*p), y) for p, y in zip(pts, labels)]
            config = TrainConfig(C=1.0, seed=seed)
            model = train_smo(data, config)
            assert model.converged
            x = model.scaler.apply(pts)
            y = np.asarray(labels, dtype=float)
            decisions = model.decision_scaled(x)
            alpha = np.zeros(len(pts))
            for coef, sv in zip(model.dual_coefs, model.support_vectors):
                idx = np.where((x == sv).all(axis=1))[0][0]
                alpha[idx] = abs(coef)
            assert abs(float(np.dot(alpha, y))) <= config.tol * len(data)
            assert kkt_violation(alpha, y, decisions, config.C) <= config.tol
            assert np.all(alpha <= config.C + 1e-12)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(1)
        pts = rng.normal(0, 1, (40, 3))
        labels = [(-1 if p[0] + p[1] < 0 else 1) for p in pts]
        data = [(fv(*p), y) for p, y in zip(pts, labels)]
        m1 = train_smo(data, TrainConfig(seed=7))
        m2 = train_smo(data, TrainConfig(seed=7))
        assert np.array_equal(m1.dual_coefs, m2.dual_coefs)
        assert np.array_equal(m1.support_vectors, m2.support_vectors)
        assert m1.bias == m2.bias

    def test_prediction_invariant_under_feature_rescaling(self):
        rng = np.random.default_rng(8)
        pts = rng.normal(0, 1, (50, 2))
        labels = [(-1 if p[0] - p[1] < 0 else 1) for p in pts]
        data = [(fv(*p), y) for p, y in zip(pts, labels)]
        rescaled = [(fv(p[0] * 1000.0 + 5.0, p[1] * 0.01 - 3.0), y) for p, y in zip(pts, labels)]
        m = train_smo(data, TrainConfig(seed=2))
        m_rescaled = train_smo(rescaled, TrainConfig(seed=2))
        grid = rng.normal(0, 1.5, (64, 2))
        for g in grid:
            p1 = predict(m, fv(*g))[0]
            p2 = predict(m_rescaled, fv(g[0] * 1000.0 + 5.0, g[1] * 0.01 - 3.0))[0]
            assert p1 == p2


class TestDecisionAndPredict:
    def test_linear_decision_is_affine(self):
        rng = np.random.default_rng(21)
        pts = rng.normal(0, 1, (30, 2))
        labels = [(-1 if p[0] < 0 else 1) for p in pts]
        model = train_smo(
            [(fv(*p), y) for p, y in zip(pts, labels)],
            TrainConfig(kernel=Kernel(kind="linear"), seed=0),
        )
        for _ in range(20):
            x1, x2 = rng.normal(0, 2, 2), rng.normal(0, 2, 2)
            mid = (x1 + x2) / 2.0
            residual = (
                decision_value(model, fv(*x1))
                + decision_value(model, fv(*x2))
                - 2.0 * decision_value(model, fv(*mid))
            )
            assert abs(residual) < 1e-9

    def test_boundary_resolves_positive(self):
        model = SvmModel(
            kernel=Kernel(kind="linear"),
            support_vectors=np.array([[0.0]]),
            dual_coefs=np.array([1.0]),
            bias=0.0,
            scaler=Scaler(mean=(0.0,), std=(1.0,)),
            classes=("neg", "pos"),
            feature_names=("f0",),
            C=1.0,
        )
        label, score = predict(model, fv(0.0))  # f(x) == 0 exactly
        assert label == "pos"
        assert score == 0.0

    def test_feature_name_mismatch(self):
        model = train_smo([(fv(-1.0), -1), (fv(1.0), 1)], TrainConfig(kernel=Kernel(kind="linear")))
        with pytest.raises(InconsistentFeatures):
            predict(model, FeatureVector(names=("wrong",), values=(0.5,)))

    def test_xor_predict_labels(self):
        model = train_smo(XOR, XOR_CONFIG, classes=("even", "odd"))
        for x, y in XOR:
            assert predict(model, x)[0] == ("odd" if y == 1 else "even")


class TestModelSerialization:
    def test_round_trip_decision_values(self):
        model = train_smo(XOR, XOR_CONFIG)
        loaded = load_model(save_model(model))
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = fv(*rng.normal(0.5, 1.0, 2))
            assert abs(decision_value(model, x) - decision_value(loaded, x)) <= 1e-12

    def test_truncated_document(self):
        text = save_model(train_smo(XOR, XOR_CONFIG))
        with pytest.raises(CorruptModel):
            load_model(text[: len(text) // 2])

    def test_schema_mismatch(self):
        doc = json.loads(save_model(train_smo(XOR, XOR_CONFIG)))
        doc["schema"] = 2
        with pytest.raises(SchemaMismatch):
            load_model(json.dumps(doc))

    def test_missing_field(self):
        doc = json.loads(save_model(train_smo(XOR, XOR_CONFIG)))
        del doc["bias"]
        with pytest.raises(CorruptModel):
            load_model(json.dumps(doc))


class TestScaler:
    def test_apply_invert_identity(self):
        rng = np.random.default_rng(4)
        x = rng.normal(5, 3, (40, 6))
        scaler = Scaler.fit(x)
        assert np.allclose(scaler.invert(scaler.apply(x)), x, rtol=1e-9, atol=1e-9)

    def test_std_floor(self):
        x = np.ones((10, 1))
        scaler = Scaler.fit(x)
        assert scaler.std[0] == Scaler.STD_FLOOR


class TestClassifyCondition:
    def test_rest_and_stress_verdicts(self, condition_models, rest_report, stress_report):
        stress_model, flu_model = condition_models
        rest_result = classify_condition(rest_report, stress_model, flu_model)
        stress_result = classify_condition(stress_report, stress_model, flu_model)
        assert rest_result.stress.label == "rest"
        assert stress_result.stress.label == "stress"
        assert rest_result.influenza.label == "healthy"
        assert stress_result.influenza.label == "influenza"
        assert stress_result.stress.score >= 0

    def test_undefined_sampen_raises(self, condition_models, rest_report):
        stress_model, flu_model = condition_models
        broken = dataclasses.replace(
            rest_report, nonlinear=dataclasses.replace(rest_report.nonlinear, sampen=None)
        )
        with pytest.raises(MissingFeature):
            classify_condition(broken, stress_model, flu_model)

    def test_report_features_order(self, rest_report):
        vector = report_features(rest_report)
        assert vector.names == (
            "mean_rr_ms",
            "sdnn_ms",
            "rmssd_ms",
            "pnn50_pct",
            "lf_power_ms2",
            "hf_power_ms2",
            "lf_hf",
            "sd1_ms",
            "sd2_ms",
            "sampen",
        )
        assert vector.values[0] == rest_report.time.mean_rr

    def test_unknown_feature_name(self, rest_report):
        with pytest.raises(MissingFeature):
            report_features(rest_report, names=("no_such_feature",))


class TestFeatureVector:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            FeatureVector(names=("a",), values=(float("nan"),))

    def test_rejects_duplicate_names(self):
        with pytest.raises(InconsistentFeatures):
            FeatureVector(names=("a", "a"), values=(1.0, 2.0))
