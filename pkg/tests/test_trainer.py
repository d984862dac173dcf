import numpy as np
import pytest
from sklearn.base import clone

from conftest import random_episode
from protoshot import (
    ClassHierarchy,
    Episode,
    EpisodicProjectionTrainer,
    HeadConfig,
    ProjectionModel,
    SgdState,
    TrainConfig,
    build_prototypes,
    derive_rng,
    episode_loss_flat,
    episode_loss_hierarchical,
    finite_difference_check,
    load_checkpoint,
    loss_and_gradients,
    meta_train,
    save_checkpoint,
    sgd_step,
)
from protoshot.exceptions import ConfigError, DataValidationError, GradientError


def _tree():
    return ClassHierarchy.from_edges(
        [("root", "A"), ("root", "B"), ("A", "a0"), ("A", "a1"), ("B", "b0"), ("B", "b1")]
    )


class TestProjectionModel:
    def test_identity(self):
        m = ProjectionModel(W=np.eye(3), b=np.zeros(3))
        x = np.array([1.0, -2.0, 0.5])
        np.testing.assert_array_equal(m.project(x), x)

    def test_zero_model(self):
        m = ProjectionModel(W=np.zeros((2, 3)), b=np.zeros(2))
        assert np.array_equal(m.project(np.ones((4, 3))), np.zeros((4, 2)))

    def test_hand_matrix_product(self):
        W = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        b = np.array([0.5, -0.5])
        m = ProjectionModel(W=W, b=b)
        out = m.project(np.array([1.0, 1.0, 1.0]))
        np.testing.assert_allclose(out, [6.5, 14.5], atol=1e-15)

    def test_dimension_mismatch(self):
        m = ProjectionModel(W=np.eye(3), b=np.zeros(3))
        with pytest.raises(DataValidationError):
            m.project(np.ones(4))

    def test_initialize_bounds_and_determinism(self):
        a = ProjectionModel.initialize(10, 6, derive_rng(1, 1))
        b = ProjectionModel.initialize(10, 6, derive_rng(1, 1))
        np.testing.assert_array_equal(a.W, b.W)
        limit = np.sqrt(6.0 / 16.0)
        assert np.abs(a.W).max() <= limit
        assert np.array_equal(a.b, np.zeros(6))

    def test_nonfinite_rejected(self):
        with pytest.raises(GradientError):
            ProjectionModel(W=np.array([[np.inf]]), b=np.zeros(1))


class TestSgdStep:
    def test_plain_step(self):
        m = ProjectionModel(W=np.ones((1, 2)), b=np.zeros(1))
        st = SgdState.zeros_like(m)
        sgd_step(m, np.full((1, 2), 0.5), np.zeros(1), st, lr=0.1, momentum=0.0)
        np.testing.assert_allclose(m.W, 1.0 - 0.05, atol=1e-15)

    def test_zero_grad_velocity_decay(self):
        m = ProjectionModel(W=np.ones((1, 1)), b=np.zeros(1))
        st = SgdState(vel_W=np.array([[1.0]]), vel_b=np.zeros(1))
        sgd_step(m, np.zeros((1, 1)), np.zeros(1), st, lr=0.0, momentum=0.5)
        sgd_step(m, np.zeros((1, 1)), np.zeros(1), st, lr=0.0, momentum=0.5)
        np.testing.assert_allclose(st.vel_W, [[0.25]], atol=1e-15)
        np.testing.assert_array_equal(m.W, [[1.0]])

    def test_velocity_recursion_hand_value(self):
        # two identical unit gradients, lr=0.1, momentum 0.9: steps 0.1 then 0.19
        m = ProjectionModel(W=np.zeros((1, 1)), b=np.zeros(1))
        st = SgdState.zeros_like(m)
        g = np.ones((1, 1))
        sgd_step(m, g, np.zeros(1), st, lr=0.1, momentum=0.9)
        first = float(m.W[0, 0])
        sgd_step(m, g, np.zeros(1), st, lr=0.1, momentum=0.9)
        second = float(m.W[0, 0]) - first
        assert first == pytest.approx(-0.1, abs=1e-15)
        assert second == pytest.approx(-0.19, abs=1e-15)

    def test_weight_decay_enters_velocity(self):
        m = ProjectionModel(W=np.full((1, 1), 2.0), b=np.zeros(1))
        st = SgdState.zeros_like(m)
        sgd_step(m, np.zeros((1, 1)), np.zeros(1), st, lr=1.0, momentum=0.0, weight_decay=0.1)
        np.testing.assert_allclose(m.W, [[2.0 - 0.2]], atol=1e-15)

    def test_lr_zero_bit_identical(self):
        m = ProjectionModel.initialize(4, 3, derive_rng(2, 2))
        before_W = m.W.copy()
        st = SgdState.zeros_like(m)
        sgd_step(m, np.ones_like(m.W), np.ones_like(m.b), st, lr=0.0, momentum=0.9)
        assert np.array_equal(m.W, before_W)

    def test_shape_mismatch(self):
        m = ProjectionModel(W=np.ones((2, 2)), b=np.zeros(2))
        with pytest.raises(GradientError):
            sgd_step(m, np.ones((3, 2)), np.zeros(2), SgdState.zeros_like(m), lr=0.1)


class TestLossAndGradients:
    def test_loss_matches_heads_module(self):
        ep = random_episode(seed=20, dim=5, k=4, n_shot=3, n_query=2,
                            labels=["a0", "a1", "b0", "b1"])
        h = _tree()
        model = ProjectionModel.initialize(5, 4, derive_rng(3, 3))
        projected = Episode(
            classes=ep.classes,
            support_X=model.project(ep.support_X),
            support_y=ep.support_y,
            query_X=model.project(ep.query_X),
            query_y=ep.query_y,
        )
        for metric in ("euclidean", "cosine", "hyperbolic"):
            cfg = HeadConfig(metric=metric, tau=0.9, c=0.01, r=1.0)
            got, _, _ = loss_and_gradients(model, ep, cfg)
            want = episode_loss_flat(
                projected,
                build_prototypes(projected.support_X, projected.support_y, cfg),
                cfg,
            )
            assert got == pytest.approx(want, abs=1e-12)
        cfg = HeadConfig(metric="hierarchical", tau=0.9, gamma=0.7)
        got, _, _ = loss_and_gradients(model, ep, cfg, h)
        want = episode_loss_hierarchical(
            projected,
            build_prototypes(projected.support_X, projected.support_y, cfg, h),
            h,
            cfg,
        )
        assert got == pytest.approx(want, abs=1e-12)

    def test_gradients_match_finite_differences(self):
        h = _tree()
        for seed in (0, 1, 2):
            ep = random_episode(seed=seed, dim=4, k=4, n_shot=2, n_query=2,
                                labels=["a0", "a1", "b0", "b1"])
            model = ProjectionModel.initialize(4, 3, derive_rng(seed, 4))
            for metric in ("euclidean", "cosine", "hierarchical", "hyperbolic"):
                cfg = HeadConfig(metric=metric, tau=0.8, c=0.01, r=1.0, gamma=2.0)
                rep = finite_difference_check(model, ep, cfg, h)
                assert rep.passed, f"{metric} seed {seed}: {rep.max_rel_error:.3e}"

    def test_collapse_gives_log_k_and_finite_gradients(self):
        ep = random_episode(seed=21, dim=4, k=3, n_shot=2, n_query=3)
        zero = ProjectionModel(W=np.zeros((3, 4)), b=np.zeros(3))
        for metric in ("euclidean", "cosine", "hyperbolic"):
            cfg = HeadConfig(metric=metric)
            loss, gW, gb = loss_and_gradients(zero, ep, cfg)
            assert loss == pytest.approx(np.log(3.0), abs=1e-12)
            assert np.isfinite(gW).all() and np.isfinite(gb).all()

    def test_halving_tau_preserves_argmax(self):
        ep = random_episode(seed=22, dim=4, k=3, n_shot=2, n_query=4)
        model = ProjectionModel.initialize(4, 4, derive_rng(5, 5))
        from protoshot import class_probabilities

        args = {}
        for tau in (1.0, 0.5):
            cfg = HeadConfig(metric="euclidean", tau=tau)
            ps = build_prototypes(
                model.project(ep.support_X), ep.support_y, cfg
            )
            _, probs = class_probabilities(model.project(ep.query_X), ps, cfg)
            args[tau] = probs.argmax(axis=1)
        np.testing.assert_array_equal(args[1.0], args[0.5])

    def test_query_label_not_in_episode(self):
        ep = random_episode(seed=23)
        bad = Episode(
            classes=ep.classes, support_X=ep.support_X, support_y=ep.support_y,
            query_X=ep.query_X, query_y=np.array(["zz"] * len(ep.query_y)),
        )
        model = ProjectionModel.initialize(4, 4, derive_rng(6, 6))
        with pytest.raises(DataValidationError):
            loss_and_gradients(model, bad, HeadConfig())

    def test_hierarchical_needs_hierarchy(self):
        ep = random_episode(seed=24)
        model = ProjectionModel.initialize(4, 4, derive_rng(7, 7))
        with pytest.raises(ConfigError):
            loss_and_gradients(model, ep, HeadConfig(metric="hierarchical"))


class TestFiniteDifferenceCheck:
    def test_h_step_guard(self):
        ep = random_episode(seed=25)
        model = ProjectionModel.initialize(4, 3, derive_rng(8, 8))
        with pytest.raises(GradientError):
            finite_difference_check(model, ep, HeadConfig(), h_step=0.0)

    def test_param_budget_guard(self):
        ep = random_episode(seed=26, dim=4)
        model = ProjectionModel.initialize(4, 3, derive_rng(9, 9))
        with pytest.raises(GradientError, match="exceed"):
            finite_difference_check(model, ep, HeadConfig(), max_params=10)

    def test_model_restored_after_check(self):
        ep = random_episode(seed=27)
        model = ProjectionModel.initialize(4, 3, derive_rng(10, 10))
        before = (model.W.copy(), model.b.copy())
        finite_difference_check(model, ep, HeadConfig())
        assert np.array_equal(model.W, before[0])
        assert np.array_equal(model.b, before[1])

    def test_independent_manual_fd_agrees_with_checker(self):
        # cross-validates the checker itself on one instance
        ep = random_episode(seed=28, dim=3, k=3, n_shot=2, n_query=2)
        model = ProjectionModel.initialize(3, 2, derive_rng(11, 11))
        cfg = HeadConfig(metric="euclidean", tau=1.1)
        _, gW, _ = loss_and_gradients(model, ep, cfg)
        h = 1e-6
        worst = 0.0
        for i in range(model.W.shape[0]):
            for j in range(model.W.shape[1]):
                Wp, Wm = model.W.copy(), model.W.copy()
                Wp[i, j] += h
                Wm[i, j] -= h
                up, _, _ = loss_and_gradients(ProjectionModel(W=Wp, b=model.b.copy()), ep, cfg)
                dn, _, _ = loss_and_gradients(ProjectionModel(W=Wm, b=model.b.copy()), ep, cfg)
                num = (up - dn) / (2 * h)
                worst = max(worst, abs(num - gW[i, j]) / max(abs(num), abs(gW[i, j]), 1e-8))
        rep = finite_difference_check(model, ep, cfg)
        assert worst < 1e-5
        assert rep.max_rel_error_W == pytest.approx(worst, rel=1e-6)


class TestMetaTrain:
    def _small_cfg(self, **kw):
        base = dict(
            head=HeadConfig(metric="euclidean"),
            k=3, n_shot=3, n_query=4,
            epochs=2, episodes_per_epoch=20, batch_episodes=2,
            val_episodes=10, out_dim=8, seed=1,
        )
        base.update(kw)
        return TrainConfig(**base)

    def test_zero_epochs_returns_initialization(self, benchmark):
        data, h, split = benchmark
        cfg = self._small_cfg(epochs=0)
        res = meta_train(data, split.base, split.val, h, cfg)
        init = ProjectionModel.initialize(data.dim, 8, derive_rng(1, 101))
        assert np.array_equal(res.model.W, init.W)
        assert np.array_equal(res.model.b, init.b)
        assert res.curve == []
        assert res.best_val_acc is None

    def test_deterministic(self, benchmark):
        data, h, split = benchmark
        cfg = self._small_cfg()
        a = meta_train(data, split.base, split.val, h, cfg)
        b = meta_train(data, split.base, split.val, h, cfg)
        assert np.array_equal(a.model.W, b.model.W)
        assert np.array_equal(a.best_model.W, b.best_model.W)
        assert a.curve == b.curve

    def test_loss_decreases_on_synthetic(self, benchmark):
        data, h, split = benchmark
        cfg = self._small_cfg(epochs=3, episodes_per_epoch=60)
        res = meta_train(data, split.base, split.val, h, cfg)
        assert res.curve[-1]["train_loss"] < res.curve[0]["train_loss"]
        assert res.best_epoch >= 1

    def test_single_episode_descent_is_monotone(self):
        ep = random_episode(seed=30, dim=6, k=3, n_shot=3, n_query=4, scale=1.0)
        model = ProjectionModel.initialize(6, 6, derive_rng(12, 12))
        st = SgdState.zeros_like(model)
        cfg = HeadConfig(metric="euclidean")
        losses = []
        for _ in range(20):
            loss, gW, gb = loss_and_gradients(model, ep, cfg)
            losses.append(loss)
            sgd_step(model, gW, gb, st, lr=1e-4, momentum=0.0, weight_decay=0.0)
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_empty_split_rejected(self, benchmark):
        data, h, split = benchmark
        with pytest.raises(DataValidationError):
            meta_train(data, [], split.val, h, self._small_cfg())


class TestCheckpoint:
    def test_roundtrip(self, tmp_path):
        model = ProjectionModel.initialize(5, 3, derive_rng(13, 13))
        state = SgdState(vel_W=np.ones((3, 5)) / 3.0, vel_b=np.full(3, 0.25))
        config = {"metric": "euclidean", "tau": 1.0, "seed": 7}
        path = tmp_path / "ck.json"
        save_checkpoint(path, model, config, state)
        back_model, back_state, back_cfg = load_checkpoint(path)
        np.testing.assert_array_equal(back_model.W, model.W)
        np.testing.assert_array_equal(back_model.b, model.b)
        np.testing.assert_array_equal(back_state.vel_W, state.vel_W)
        assert back_cfg == config

    def test_hash_mismatch_detected(self, tmp_path):
        import json

        model = ProjectionModel.initialize(2, 2, derive_rng(14, 14))
        path = tmp_path / "ck.json"
        save_checkpoint(path, model, {"metric": "euclidean"})
        payload = json.loads(path.read_text())
        payload["config"]["metric"] = "cosine"
        path.write_text(json.dumps(payload))
        with pytest.raises(DataValidationError, match="hash"):
            load_checkpoint(path)

    def test_wrong_format_rejected(self, tmp_path):
        path = tmp_path / "ck.json"
        path.write_text('{"format": "something-else", "version": 1}')
        with pytest.raises(DataValidationError, match="not a"):
            load_checkpoint(path)


class TestEstimator:
    def test_sklearn_api(self, benchmark):
        data, h, split = benchmark
        est = EpisodicProjectionTrainer(
            k=3, n_shot=2, n_query=3, epochs=1, episodes_per_epoch=10,
            val_episodes=5, out_dim=6, seed=0,
        )
        assert clone(est).get_params()["out_dim"] == 6
        est.fit(data.vectors, list(data.labels))
        out = est.transform(data.vectors[:7])
        assert out.shape == (7, 6)
        assert est.result_.best_epoch >= 1

    def test_unfitted_transform_raises(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            EpisodicProjectionTrainer().transform(np.zeros((1, 3)))
