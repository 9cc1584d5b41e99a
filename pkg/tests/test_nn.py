import math

import numpy as np
import pytest

from rankattack.nn import (
    Gradients,
    MlpModel,
    TrainConfig,
    TrainingDivergedError,
    adam_step,
    backward,
    bce_loss,
    forward,
    init_adam_state,
    init_model,
    load_model,
    micro_metrics,
    predict_threshold,
    predict_topk,
    save_model,
    train,
    write_metrics_csv,
)


def const_model(sizes, fill=0.0, dropout=0.0) -> MlpModel:
    weights = [
        np.full((sizes[i], sizes[i + 1]), fill, dtype=float)
        for i in range(len(sizes) - 1)
    ]
    biases = [np.zeros(sizes[i + 1]) for i in range(len(sizes) - 1)]
    return MlpModel(
        layer_sizes=tuple(sizes), weights=weights, biases=biases,
        dropout_rate=dropout, seed=0,
    )


def logit_output_model(probs) -> MlpModel:
    # Zero weights silence the hidden stack, so the output is exactly
    # sigmoid(final bias); lets tests dictate output probabilities.
    model = const_model((2, 1, 1, 1, len(probs)))
    model.biases[-1] = np.array([math.log(p / (1.0 - p)) for p in probs])
    return model


# --- numerical gradient oracle ----------------------------------------------


def replay_loss(model: MlpModel, x, y, masks) -> float:
    # Forward pass with the dropout masks pinned, so finite differences see
    # a deterministic function of the parameters.
    a = np.asarray(x, dtype=float)
    n = len(model.weights)
    for i in range(n):
        z = a @ model.weights[i] + model.biases[i]
        if i < n - 1:
            h = np.maximum(z, 0.0)
            a = h if masks[i] is None else h * masks[i]
        else:
            a = 1.0 / (1.0 + np.exp(-z))
    return bce_loss(a, y)


def numeric_gradients(model: MlpModel, x, y, masks, eps=1e-6):
    g_w, g_b = [], []
    for li in range(len(model.weights)):
        gw = np.zeros_like(model.weights[li])
        for idx in np.ndindex(*gw.shape):
            plus = model.copy()
            plus.weights[li][idx] += eps
            minus = model.copy()
            minus.weights[li][idx] -= eps
            gw[idx] = (replay_loss(plus, x, y, masks) - replay_loss(minus, x, y, masks)) / (2 * eps)
        g_w.append(gw)
        gb = np.zeros_like(model.biases[li])
        for j in range(gb.shape[0]):
            plus = model.copy()
            plus.biases[li][j] += eps
            minus = model.copy()
            minus.biases[li][j] -= eps
            gb[j] = (replay_loss(plus, x, y, masks) - replay_loss(minus, x, y, masks)) / (2 * eps)
        g_b.append(gb)
    return g_w, g_b


# --- construction -----------------------------------------------------------


class TestInitModel:
    def test_shapes_follow_layer_chain(self):
        model = init_model(7, 3, hidden=(5, 4, 2), seed=1)
        assert model.layer_sizes == (7, 5, 4, 2, 3)
        assert [w.shape for w in model.weights] == [(7, 5), (5, 4), (4, 2), (2, 3)]
        assert [b.shape for b in model.biases] == [(5,), (4,), (2,), (3,)]
        assert all(not b.any() for b in model.biases)

    def test_seed_determinism(self):
        a = init_model(6, 2, hidden=(8, 8, 8), seed=42)
        b = init_model(6, 2, hidden=(8, 8, 8), seed=42)
        c = init_model(6, 2, hidden=(8, 8, 8), seed=43)
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)
        assert any((wa != wc).any() for wa, wc in zip(a.weights, c.weights))

    def test_exactly_three_hidden_layers_enforced(self):
        with pytest.raises(ValueError):
            init_model(4, 2, hidden=(8, 8))
        with pytest.raises(ValueError):
            init_model(4, 2, hidden=(8, 8, 8, 8))

    @pytest.mark.parametrize("rate", [-0.1, 0.6])
    def test_dropout_rate_bounds(self, rate):
        with pytest.raises(ValueError):
            init_model(4, 2, dropout_rate=rate)

    def test_copy_is_deep(self):
        model = init_model(4, 2, hidden=(3, 3, 3))
        dup = model.copy()
        dup.weights[0][0, 0] += 1.0
        assert model.weights[0][0, 0] != dup.weights[0][0, 0]


# --- forward ----------------------------------------------------------------


class TestForward:
    def test_zero_weights_output_half(self):
        model = const_model((3, 4, 4, 4, 2))
        out, _ = forward(model, np.array([1.0, -2.0, 0.5]))
        np.testing.assert_allclose(out, [0.5, 0.5])

    def test_batch_and_vector_agree(self):
        model = init_model(5, 3, hidden=(6, 5, 4), seed=2)
        x = np.random.default_rng(0).normal(size=(4, 5))
        batch_out, _ = forward(model, x)
        for i in range(4):
            row_out, _ = forward(model, x[i])
            np.testing.assert_allclose(row_out, batch_out[i], atol=1e-15)

    def test_output_in_unit_interval(self):
        model = init_model(5, 3, hidden=(6, 5, 4), seed=2)
        x = np.random.default_rng(1).normal(size=(10, 5)) * 50
        out, _ = forward(model, x)
        assert np.all(out >= 0.0) and np.all(out <= 1.0)

    def test_extreme_inputs_do_not_overflow(self):
        model = init_model(3, 2, hidden=(4, 4, 4), seed=0)
        out, _ = forward(model, np.array([1e8, -1e8, 1e8]))
        assert np.isfinite(out).all()

    def test_wrong_width_rejected(self):
        model = const_model((3, 2, 2, 2, 1))
        with pytest.raises(ValueError):
            forward(model, np.zeros(4))

    def test_dropout_zero_matches_inference(self):
        model = init_model(4, 2, hidden=(5, 5, 5), dropout_rate=0.0, seed=3)
        x = np.random.default_rng(2).normal(size=(3, 4))
        train_out, cache = forward(model, x, training=True, rng=np.random.default_rng(0))
        infer_out, _ = forward(model, x, training=False)
        np.testing.assert_array_equal(train_out, infer_out)
        assert all(m is None for m in cache.masks)

    def test_dropout_requires_rng(self):
        model = init_model(4, 2, dropout_rate=0.25, seed=0)
        with pytest.raises(ValueError, match="rng"):
            forward(model, np.zeros(4), training=True)

    def test_dropout_masks_are_inverted_scale(self):
        rate = 0.25
        model = init_model(6, 2, hidden=(40, 40, 40), dropout_rate=rate, seed=1)
        x = np.random.default_rng(5).normal(size=(8, 6))
        _, cache = forward(model, x, training=True, rng=np.random.default_rng(9))
        seen = np.concatenate([m.ravel() for m in cache.masks])
        assert set(np.unique(seen)) <= {0.0, 1.0 / (1.0 - rate)}
        # Both values must actually occur at this many draws.
        assert (seen == 0.0).any() and (seen > 0.0).any()

    def test_inference_ignores_dropout(self):
        model = init_model(4, 2, dropout_rate=0.5, seed=1)
        x = np.ones(4)
        a, _ = forward(model, x, training=False)
        b, _ = forward(model, x, training=False)
        np.testing.assert_array_equal(a, b)


# --- loss -------------------------------------------------------------------


class TestBceLoss:
    def test_half_probability_gives_ln2(self):
        p = np.full((4, 3), 0.5)
        t = np.random.default_rng(0).integers(0, 2, size=(4, 3)).astype(float)
        assert bce_loss(p, t) == pytest.approx(math.log(2.0))

    def test_hand_computed_single_value(self):
        assert bce_loss(np.array([0.8]), np.array([1.0])) == pytest.approx(-math.log(0.8))
        assert bce_loss(np.array([0.8]), np.array([0.0])) == pytest.approx(-math.log(0.2))

    def test_mean_over_all_coordinates(self):
        p = np.array([[0.8, 0.3], [0.6, 0.9]])
        t = np.array([[1.0, 0.0], [0.0, 1.0]])
        want = -(math.log(0.8) + math.log(0.7) + math.log(0.4) + math.log(0.9)) / 4
        assert bce_loss(p, t) == pytest.approx(want)

    def test_joint_permutation_invariance(self):
        rng = np.random.default_rng(3)
        p = rng.random((6, 4))
        t = rng.integers(0, 2, size=(6, 4)).astype(float)
        perm = rng.permutation(6)
        assert bce_loss(p, t) == pytest.approx(bce_loss(p[perm], t[perm]))

    def test_confident_wrong_prediction_clamped_finite(self):
        loss = bce_loss(np.array([0.0]), np.array([1.0]))
        assert loss == pytest.approx(-math.log(1e-12))
        assert math.isfinite(loss)

    def test_perfect_prediction_near_zero(self):
        assert bce_loss(np.array([1.0, 0.0]), np.array([1.0, 0.0])) < 1e-11

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            bce_loss(np.zeros((2, 3)), np.zeros((3, 2)))


# --- backward ---------------------------------------------------------------


class TestBackward:
    def test_output_layer_delta_formula(self):
        # zero weights: p = 0.5, hidden activations all zero, so the only
        # nonzero gradients are the output biases at (p - t) / (n * k)
        model = const_model((3, 2, 2, 2, 2))
        x = np.array([[1.0, 2.0, 3.0]])
        out, cache = forward(model, x)
        grads = backward(model, cache, np.array([[1.0, 0.0]]))
        np.testing.assert_allclose(grads.biases[-1], [(0.5 - 1.0) / 2, (0.5 - 0.0) / 2])
        for g in grads.weights:
            np.testing.assert_array_equal(g, np.zeros_like(g))

    def test_matches_finite_differences_without_dropout(self):
        model = init_model(3, 2, hidden=(4, 3, 2), dropout_rate=0.0, seed=11)
        rng = np.random.default_rng(4)
        x = rng.normal(size=(5, 3))
        y = rng.integers(0, 2, size=(5, 2)).astype(float)
        _, cache = forward(model, x, training=True)
        assert all(abs(z).min() > 1e-4 for z in cache.pre_activations[:-1])
        analytic = backward(model, cache, y)
        num_w, num_b = numeric_gradients(model, x, y, cache.masks)
        for a, n in zip(analytic.weights, num_w):
            np.testing.assert_allclose(a, n, rtol=1e-5, atol=1e-9)
        for a, n in zip(analytic.biases, num_b):
            np.testing.assert_allclose(a, n, rtol=1e-5, atol=1e-9)

    def test_matches_finite_differences_with_dropout_mask_replay(self):
        # seeds chosen so no pre-activation sits on the ReLU kink and the
        # sampled masks mix kept and dropped units
        model = init_model(3, 2, hidden=(4, 3, 2), dropout_rate=0.3, seed=0)
        data_rng = np.random.default_rng(1)
        x = data_rng.normal(size=(4, 3))
        y = data_rng.integers(0, 2, size=(4, 2)).astype(float)
        _, cache = forward(model, x, training=True, rng=np.random.default_rng(4))
        assert all(abs(z).min() > 1e-4 for z in cache.pre_activations[:-1])
        assert any((m == 0).any() for m in cache.masks)
        analytic = backward(model, cache, y)
        num_w, num_b = numeric_gradients(model, x, y, cache.masks)
        for a, n in zip(analytic.weights, num_w):
            np.testing.assert_allclose(a, n, rtol=1e-5, atol=1e-9)
        for a, n in zip(analytic.biases, num_b):
            np.testing.assert_allclose(a, n, rtol=1e-5, atol=1e-9)

    def test_target_shape_mismatch_rejected(self):
        model = const_model((3, 2, 2, 2, 2))
        _, cache = forward(model, np.zeros((1, 3)))
        with pytest.raises(ValueError):
            backward(model, cache, np.zeros((1, 3)))

    def test_foreign_cache_rejected(self):
        small = const_model((3, 2, 2, 2, 2))
        big = const_model((4, 2, 2, 2, 2))
        _, cache = forward(small, np.zeros((1, 3)))
        with pytest.raises(ValueError):
            backward(big, cache, np.zeros((1, 2)))


# --- adam -------------------------------------------------------------------


def tiny_scalar_model() -> MlpModel:
    return const_model((1, 1, 1, 1, 1), fill=0.5)


def unit_gradient(model: MlpModel, value=1.0) -> Gradients:
    return Gradients(
        weights=[np.full_like(w, value) for w in model.weights],
        biases=[np.full_like(b, value) for b in model.biases],
    )


class TestAdam:
    def test_first_step_hand_derived(self):
        # t=1 bias correction cancels the moment decay exactly, so the step
        # is -lr * g / (|g| + eps) regardless of betas
        model = tiny_scalar_model()
        config = TrainConfig()
        state = init_adam_state(model)
        new_model, new_state = adam_step(model, unit_gradient(model), state, config)
        expected = -(0.001 * 1.0 / (math.sqrt(1.0) + 1e-8))
        np.testing.assert_allclose(new_model.weights[0][0, 0], 0.5 + expected, rtol=0, atol=1e-18)
        assert new_state.timestep == 1

    def test_sign_sgd_when_betas_zero(self):
        model = tiny_scalar_model()
        config = TrainConfig(adam_beta1=0.0, adam_beta2=0.0)
        state = init_adam_state(model)
        new_model, _ = adam_step(model, unit_gradient(model, value=-7.0), state, config)
        # m_hat = g, v_hat = g^2: update = +lr * g/|g| toward descent
        step = new_model.weights[0][0, 0] - 0.5
        assert step == pytest.approx(0.001, rel=1e-6)

    def test_zero_gradient_is_noop(self):
        model = tiny_scalar_model()
        state = init_adam_state(model)
        new_model, new_state = adam_step(model, unit_gradient(model, value=0.0), state, TrainConfig())
        np.testing.assert_array_equal(new_model.weights[0], model.weights[0])
        assert new_state.timestep == 1

    def test_functional_update_leaves_inputs_alone(self):
        model = tiny_scalar_model()
        state = init_adam_state(model)
        before = model.weights[0].copy()
        adam_step(model, unit_gradient(model), state, TrainConfig())
        np.testing.assert_array_equal(model.weights[0], before)
        assert state.timestep == 0
        assert not state.m_weights[0].any()

    def test_second_step_uses_accumulated_moments(self):
        # two identical unit gradients: m_hat = v_hat = 1 at both steps, so
        # the parameter moves by the same amount again
        model = tiny_scalar_model()
        config = TrainConfig()
        state = init_adam_state(model)
        m1, s1 = adam_step(model, unit_gradient(model), state, config)
        m2, s2 = adam_step(m1, unit_gradient(m1), s1, config)
        step1 = m1.weights[0][0, 0] - model.weights[0][0, 0]
        step2 = m2.weights[0][0, 0] - m1.weights[0][0, 0]
        assert step2 == pytest.approx(step1, rel=1e-9)
        assert s2.timestep == 2

    def test_gradient_shape_mismatch_rejected(self):
        model = tiny_scalar_model()
        bad = unit_gradient(model)
        bad.weights[0] = np.zeros((2, 2))
        with pytest.raises(ValueError):
            adam_step(model, bad, init_adam_state(model), TrainConfig())


class TestTrainConfig:
    def test_defaults(self):
        config = TrainConfig()
        assert config.batch_size == 50
        assert config.epochs == 100
        assert config.learning_rate == 0.001
        assert (config.adam_beta1, config.adam_beta2) == (0.9, 0.999)
        assert config.adam_epsilon == 1e-8

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"batch_size": 0},
            {"epochs": -1},
            {"learning_rate": 0.0},
            {"adam_beta1": 1.0},
            {"adam_beta2": -0.1},
            {"adam_epsilon": 0.0},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)


# --- training loop ----------------------------------------------------------


def separable_data(n=240, seed=7):
    rng = np.random.default_rng(seed)
    x = (rng.random((n, 6)) > 0.5).astype(float)
    y = np.stack([x[:, 0], x[:, 3]], axis=1)
    return x, y


class TestTrain:
    def test_learns_separable_labels(self):
        x, y = separable_data()
        model = init_model(6, 2, hidden=(16, 12, 8), dropout_rate=0.0, seed=1)
        config = TrainConfig(batch_size=50, epochs=150, learning_rate=0.005, seed=3)
        trained, history = train(model, x, y, config)
        final_val = [h for h in history if h.split == "validation"][-1]
        assert final_val.f1 >= 0.95
        assert final_val.loss < history[1].loss

    def test_deterministic(self):
        x, y = separable_data()
        model = init_model(6, 2, hidden=(8, 8, 8), dropout_rate=0.1, seed=5)
        config = TrainConfig(epochs=3, seed=11)
        t1, h1 = train(model, x, y, config)
        t2, h2 = train(model, x, y, config)
        assert h1 == h2
        for w1, w2 in zip(t1.weights, t2.weights):
            np.testing.assert_array_equal(w1, w2)

    def test_zero_epochs_returns_copy_and_no_history(self):
        x, y = separable_data()
        model = init_model(6, 2, seed=5)
        trained, history = train(model, x, y, TrainConfig(epochs=0))
        assert history == []
        for w1, w2 in zip(trained.weights, model.weights):
            np.testing.assert_array_equal(w1, w2)
        assert trained is not model

    def test_history_shape(self):
        x, y = separable_data()
        model = init_model(6, 2, hidden=(4, 4, 4), dropout_rate=0.0, seed=5)
        _, history = train(model, x, y, TrainConfig(epochs=3))
        assert len(history) == 6
        assert [h.epoch for h in history] == [1, 1, 2, 2, 3, 3]
        assert [h.split for h in history] == ["train", "validation"] * 3

    def test_input_model_not_mutated(self):
        x, y = separable_data()
        model = init_model(6, 2, hidden=(4, 4, 4), dropout_rate=0.0, seed=5)
        before = [w.copy() for w in model.weights]
        train(model, x, y, TrainConfig(epochs=2))
        for w, b in zip(model.weights, before):
            np.testing.assert_array_equal(w, b)

    def test_diverges_on_insane_learning_rate(self):
        x, y = separable_data()
        model = init_model(6, 2, hidden=(8, 8, 8), dropout_rate=0.0, seed=5)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(TrainingDivergedError):
                train(model, x, y, TrainConfig(epochs=2, learning_rate=1e300))

    def test_too_few_rows_rejected(self):
        x, y = separable_data(n=60)
        model = init_model(6, 2, seed=5)
        with pytest.raises(ValueError, match="2\\*batch_size"):
            train(model, x, y, TrainConfig(batch_size=50))

    def test_dimension_mismatch_rejected(self):
        x, y = separable_data()
        model = init_model(5, 2, seed=5)
        with pytest.raises(ValueError):
            train(model, x, y, TrainConfig())

    def test_row_count_mismatch_rejected(self):
        x, y = separable_data()
        model = init_model(6, 2, seed=5)
        with pytest.raises(ValueError):
            train(model, x[:-1], y, TrainConfig())


# --- metrics and prediction -------------------------------------------------


class TestMicroMetrics:
    def test_hand_computed(self):
        prob = np.array([0.9, 0.2, 0.7, 0.8])
        true = np.array([1.0, 1.0, 0.0, 1.0])
        precision, recall, f1 = micro_metrics(prob, true)
        assert precision == pytest.approx(2 / 3)
        assert recall == pytest.approx(2 / 3)
        assert f1 == pytest.approx(2 / 3)

    def test_no_predictions_no_positives(self):
        precision, recall, f1 = micro_metrics(np.array([0.1, 0.2]), np.array([0.0, 0.0]))
        assert (precision, recall, f1) == (0.0, 0.0, 0.0)

    def test_threshold_is_inclusive(self):
        precision, recall, _ = micro_metrics(np.array([0.5]), np.array([1.0]))
        assert (precision, recall) == (1.0, 1.0)


class TestPredictTopk:
    def test_orders_by_probability(self):
        model = logit_output_model([0.9, 0.1, 0.8])
        assert predict_topk(model, np.zeros(2), 2) == [0, 2]
        assert predict_topk(model, np.zeros(2), 3) == [0, 2, 1]

    def test_ties_break_low_index_first(self):
        model = logit_output_model([0.7, 0.7, 0.2])
        assert predict_topk(model, np.zeros(2), 2) == [0, 1]

    def test_k_bounds(self):
        model = logit_output_model([0.6, 0.4])
        assert predict_topk(model, np.zeros(2), 0) == []
        with pytest.raises(ValueError):
            predict_topk(model, np.zeros(2), 3)
        with pytest.raises(ValueError):
            predict_topk(model, np.zeros(2), -1)

    def test_batch_input_rejected(self):
        model = logit_output_model([0.6, 0.4])
        with pytest.raises(ValueError):
            predict_topk(model, np.zeros((2, 2)), 1)


class TestPredictThreshold:
    def test_selects_outputs_meeting_tau(self):
        model = logit_output_model([0.9, 0.3])
        assert predict_threshold(model, np.zeros(2), tau=0.85) == {0}
        assert predict_threshold(model, np.zeros(2), tau=0.2) == {0, 1}

    def test_exact_half_when_bias_zero(self):
        model = const_model((2, 1, 1, 1, 3))
        assert predict_threshold(model, np.zeros(2), tau=0.5) == {0, 1, 2}

    def test_monotone_in_tau(self):
        model = logit_output_model([0.9, 0.5, 0.2])
        low = predict_threshold(model, np.zeros(2), tau=0.1)
        high = predict_threshold(model, np.zeros(2), tau=0.8)
        assert high <= low

    @pytest.mark.parametrize("tau", [0.0, 1.0, -0.5])
    def test_tau_bounds(self, tau):
        model = logit_output_model([0.6, 0.4])
        with pytest.raises(ValueError):
            predict_threshold(model, np.zeros(2), tau=tau)


# --- persistence ------------------------------------------------------------


class TestPersistence:
    def test_round_trip_preserves_behavior(self, tmp_path):
        model = init_model(5, 3, hidden=(6, 5, 4), dropout_rate=0.2, seed=9)
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.layer_sizes == model.layer_sizes
        assert loaded.dropout_rate == model.dropout_rate
        assert loaded.seed == model.seed
        for w1, w2 in zip(loaded.weights, model.weights):
            np.testing.assert_array_equal(w1, w2)
        x = np.random.default_rng(0).normal(size=5)
        a, _ = forward(model, x)
        b, _ = forward(loaded, x)
        np.testing.assert_array_equal(a, b)

    def test_metrics_csv(self, tmp_path):
        from rankattack.nn import EpochMetrics

        records = [
            EpochMetrics(epoch=1, split="train", loss=0.6931471805599453,
                         precision=0.5, recall=1 / 3, f1=0.4),
        ]
        path = tmp_path / "metrics.csv"
        write_metrics_csv(records, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "epoch,split,loss,precision,recall,f1"
        cells = lines[1].split(",")
        assert cells[0] == "1"
        assert cells[1] == "train"
        assert float(cells[2]) == 0.6931471805599453
        assert float(cells[4]) == 1 / 3
