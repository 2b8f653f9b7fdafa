# -*- coding: utf-8 -*-
"""Numerical core: every forward op against an independent oracle, gradients
against central finite differences."""

import math

import numpy as np
import pytest

from rodiac import nn
from rodiac.nn import autodiff as ad
from rodiac.nn.autodiff import Var
from rodiac.nn.layers import LSTMCellParams


def scalar_sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def lstm_step_oracle(Wx, Wh, b, x, h, c):
    """Plain-loop LSTM step, independent of the tensor implementation."""
    H = len(h)
    z = [sum(Wx[r][j] * x[j] for j in range(len(x)))
         + sum(Wh[r][j] * h[j] for j in range(H))
         + b[r] for r in range(4 * H)]
    h_new, c_new = [], []
    for k in range(H):
        i = scalar_sigmoid(z[k])
        f = scalar_sigmoid(z[H + k])
        g = math.tanh(z[2 * H + k])
        o = scalar_sigmoid(z[3 * H + k])
        cn = f * c[k] + i * g
        c_new.append(cn)
        h_new.append(o * math.tanh(cn))
    return h_new, c_new


def make_cell(rng, D, H, dtype=np.float64):
    return LSTMCellParams(
        W_x=Var(rng.normal(size=(4 * H, D)).astype(dtype)),
        W_h=Var(rng.normal(size=(4 * H, H)).astype(dtype)),
        b=Var(rng.normal(size=4 * H).astype(dtype)))


class TestLSTMStep:
    def test_all_zero(self):
        p = LSTMCellParams(Var(np.zeros((8, 3))), Var(np.zeros((8, 2))),
                           Var(np.zeros(8)))
        h, c = nn.lstm_step(p, Var(np.zeros(3)), Var(np.zeros(2)), Var(np.zeros(2)))
        np.testing.assert_array_equal(h.value, 0.0)
        np.testing.assert_array_equal(c.value, 0.0)

    def test_forget_gate_saturation(self):
        H = 2
        b = np.zeros(4 * H)
        b[H:2 * H] = 50.0  # forget gate pinned open
        p = LSTMCellParams(Var(np.zeros((4 * H, 3))), Var(np.zeros((4 * H, H))),
                           Var(b))
        c0 = np.array([1e3, -1e3])
        _, c1 = nn.lstm_step(p, Var(np.zeros(3)), Var(np.zeros(H)), Var(c0))
        np.testing.assert_allclose(c1.value, c0, rtol=1e-12)

    def test_random_against_scalar_oracle(self):
        rng = np.random.default_rng(0)
        D, H = 4, 3
        p = make_cell(rng, D, H)
        x, h, c = rng.normal(size=D), rng.normal(size=H), rng.normal(size=H)
        h1, c1 = nn.lstm_step(p, Var(x), Var(h), Var(c))
        h_ref, c_ref = lstm_step_oracle(p.W_x.value, p.W_h.value, p.b.value, x, h, c)
        np.testing.assert_allclose(h1.value, h_ref, atol=1e-6)
        np.testing.assert_allclose(c1.value, c_ref, atol=1e-6)

    def test_shape_mismatch(self):
        rng = np.random.default_rng(0)
        p = make_cell(rng, 4, 3)
        with pytest.raises(nn.ShapeError, match="input"):
            nn.lstm_step(p, Var(np.zeros(5)), Var(np.zeros(3)), Var(np.zeros(3)))


class TestBiLSTM:
    def test_length_one(self):
        rng = np.random.default_rng(1)
        p, q = make_cell(rng, 3, 2), make_cell(rng, 3, 2)
        x = rng.normal(size=(1, 3))
        hf, hb = nn.bilstm_encode(p, q, x)
        hf1, _ = nn.lstm_step(p, Var(x[0]), Var(np.zeros(2)), Var(np.zeros(2)))
        np.testing.assert_allclose(hf.value[0], hf1.value, atol=1e-12)

    def test_zero_params_zero_finals(self):
        p = LSTMCellParams(Var(np.zeros((8, 3))), Var(np.zeros((8, 2))),
                           Var(np.zeros(8)))
        hf, hb = nn.bilstm_encode(p, p, np.random.default_rng(0).normal(size=(5, 3)))
        np.testing.assert_array_equal(hf.value, 0.0)
        np.testing.assert_array_equal(hb.value, 0.0)

    def test_empty_sequence(self):
        rng = np.random.default_rng(1)
        p = make_cell(rng, 3, 2)
        with pytest.raises(ValueError, match="empty"):
            nn.bilstm_encode(p, p, np.zeros((1, 0, 3)))

    def test_reversal_symmetry_with_shared_params(self):
        rng = np.random.default_rng(2)
        p = make_cell(rng, 3, 4)
        seq = rng.normal(size=(6, 3))
        hf, _ = nn.bilstm_encode(p, p, seq)
        _, hb_rev = nn.bilstm_encode(p, p, seq[::-1])
        np.testing.assert_allclose(hf.value, hb_rev.value, atol=1e-12)

    def test_mask_ignores_padding(self):
        rng = np.random.default_rng(3)
        p, q = make_cell(rng, 3, 2), make_cell(rng, 3, 2)
        real = rng.normal(size=(1, 4, 3))
        padded = np.concatenate([real, np.full((1, 3, 3), 7.0)], axis=1)
        mask = np.array([[1, 1, 1, 1, 0, 0, 0]], dtype=float)
        hf1, hb1 = nn.bilstm_encode(p, q, real)
        hf2, hb2 = nn.bilstm_encode(p, q, padded, mask=mask)
        np.testing.assert_allclose(hf1.value, hf2.value, atol=1e-12)
        np.testing.assert_allclose(hb1.value, hb2.value, atol=1e-12)


class TestDense:
    def test_identity(self):
        p = nn.DenseParams(Var(np.eye(3)), Var(np.zeros(3)))
        x = np.array([1.0, -2.0, 3.0])
        np.testing.assert_array_equal(nn.dense(p, Var(x)).value, x)

    def test_relu(self):
        p = nn.DenseParams(Var(np.eye(2)), Var(np.zeros(2)))
        out = nn.dense(p, Var(np.array([-1.0, 2.0])), activation="relu")
        np.testing.assert_array_equal(out.value, [0.0, 2.0])

    def test_random_against_scalar_oracle(self):
        rng = np.random.default_rng(4)
        W, b, x = rng.normal(size=(3, 5)), rng.normal(size=3), rng.normal(size=5)
        out = nn.dense(nn.DenseParams(Var(W), Var(b)), Var(x))
        ref = [sum(W[o][i] * x[i] for i in range(5)) + b[o] for o in range(3)]
        np.testing.assert_allclose(out.value, ref, atol=1e-6)

    def test_shape_mismatch(self):
        p = nn.DenseParams(Var(np.eye(3)), Var(np.zeros(3)))
        with pytest.raises(nn.ShapeError):
            nn.dense(p, Var(np.zeros(4)))


class TestMaskedSoftmaxXent:
    def test_uniform_four_classes(self):
        loss, probs = nn.masked_softmax_xent(
            Var(np.zeros(4)), 0, np.ones(4, bool), np.ones(4))
        assert loss.value == pytest.approx(math.log(4), abs=1e-6)
        np.testing.assert_allclose(probs, 0.25, atol=1e-6)

    def test_two_valid_classes(self):
        mask = np.array([True, False, False, True])
        loss, probs = nn.masked_softmax_xent(Var(np.zeros(4)), 0, mask, np.ones(4))
        assert loss.value == pytest.approx(math.log(2), abs=1e-6)
        assert probs[1] == 0.0 and probs[2] == 0.0
        assert probs.sum() == pytest.approx(1.0, abs=1e-6)

    def test_gold_masked_out_errors(self):
        mask = np.array([True, False, False, True])
        with pytest.raises(ValueError, match="masked out"):
            nn.masked_softmax_xent(Var(np.zeros(4)), 1, mask, np.ones(4))

    def test_weighted_loss(self):
        w = np.array([1.0, 2.0, 1.0, 1.0])
        loss, _ = nn.masked_softmax_xent(Var(np.zeros(4)), 1, np.ones(4, bool), w)
        assert loss.value == pytest.approx(2 * math.log(4), abs=1e-6)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        logits = rng.normal(size=4)
        mask = np.array([True, True, True, False])
        w = np.array([1.0, 1.5, 0.5, 1.0])

        def f(vals):
            loss, _ = nn.masked_softmax_xent(Var(vals), 1, mask, w)
            return float(loss.value)

        v = Var(logits.copy())
        v.zero_grad()
        with nn.Tape() as tape:
            loss, _ = nn.masked_softmax_xent(v, 1, mask, w)
        tape.backward(loss)
        eps = 1e-6
        for k in range(4):
            d = np.zeros(4)
            d[k] = eps
            numeric = (f(logits + d) - f(logits - d)) / (2 * eps)
            assert v.grad[k] == pytest.approx(numeric, abs=1e-5)
        assert v.grad[3] == 0.0  # masked logit gets no gradient

    def test_stability_extreme_logits(self):
        logits = np.array([1e4, -1e4, 0.0, 1e4])
        loss, probs = nn.masked_softmax_xent(Var(logits), 0, np.ones(4, bool),
                                             np.ones(4))
        assert np.isfinite(loss.value)
        assert np.isfinite(probs).all()

    def test_batched(self):
        logits = Var(np.zeros((3, 4)))
        mask = np.ones((3, 4), bool)
        loss, probs = nn.masked_softmax_xent(logits, np.array([0, 1, 2]), mask,
                                             np.ones(4))
        assert loss.value == pytest.approx(math.log(4), abs=1e-6)
        assert probs.shape == (3, 4)


class TestTapeBackward:
    def test_sum_of_param_gives_ones(self):
        p = Var(np.arange(6, dtype=float))
        p.zero_grad()
        with nn.Tape() as tape:
            loss = ad.sum_all(p)
        tape.backward(loss)
        np.testing.assert_array_equal(p.grad, 1.0)

    def test_zero_times_function_gives_zero_grad(self):
        p = Var(np.array([1.0, 2.0]))
        p.zero_grad()
        with nn.Tape() as tape:
            loss = ad.scale(ad.sum_all(ad.tanh(p)), 0.0)
        tape.backward(loss)
        np.testing.assert_array_equal(p.grad, 0.0)

    def test_gradient_accumulates_over_reuse(self):
        p = Var(np.array([3.0]))
        p.zero_grad()
        with nn.Tape() as tape:
            loss = ad.sum_all(ad.add(p, p))
        tape.backward(loss)
        np.testing.assert_array_equal(p.grad, 2.0)

    def test_double_backward_errors(self):
        p = Var(np.array([1.0]))
        p.zero_grad()
        with nn.Tape() as tape:
            loss = ad.sum_all(p)
        tape.backward(loss)
        with pytest.raises(nn.TapeConsumedError):
            tape.backward(loss)

    def test_untouched_param_keeps_zero_grad(self):
        p, q = Var(np.ones(3)), Var(np.ones(3))
        p.zero_grad()
        q.zero_grad()
        with nn.Tape() as tape:
            loss = ad.sum_all(p)
        tape.backward(loss)
        np.testing.assert_array_equal(q.grad, 0.0)


class TestAdam:
    def test_first_step_closed_form(self):
        p = Var(np.zeros(1))
        opt = nn.Adam([p], lr=1e-3)
        p.grad = np.ones(1)
        opt.step()
        # bias-corrected m_hat = v_hat = 1 => step = -lr / (1 + eps)
        assert p.value[0] == pytest.approx(-1e-3, rel=1e-6)
        assert opt.t == 1

    def test_zero_grad_no_change(self):
        p = Var(np.array([5.0]))
        opt = nn.Adam([p])
        p.grad = np.zeros(1)
        opt.step()
        assert p.value[0] == 5.0

    def test_parameters_independent(self):
        p, q = Var(np.zeros(1)), Var(np.zeros(1))
        opt = nn.Adam([p, q], lr=1e-3)
        p.grad, q.grad = np.ones(1), np.zeros(1)
        opt.step()
        assert p.value[0] != 0.0
        assert q.value[0] == 0.0

    def test_non_finite_gradient_errors(self):
        p = Var(np.zeros(1))
        opt = nn.Adam([p])
        p.grad = np.array([np.nan])
        with pytest.raises(nn.NonFiniteGradientError):
            opt.step()


class TestGradCheck:
    def test_small_mlp(self):
        rng = np.random.default_rng(6)
        W1 = Var(rng.normal(size=(5, 4)))
        b1 = Var(rng.normal(size=5))
        W2 = Var(rng.normal(size=(1, 5)))
        x = rng.normal(size=4)

        def loss_fn():
            h = nn.dense(nn.DenseParams(W1, b1), Var(x), activation="relu")
            return ad.sum_all(nn.dense(nn.DenseParams(W2, Var(np.zeros(1))), h))

        err = nn.grad_check(loss_fn, [W1, b1, W2], eps=1e-5, seed=0)
        assert err < 1e-4

    def test_linear_model_near_rounding_level(self):
        rng = np.random.default_rng(7)
        W = Var(rng.normal(size=(3, 3)))
        x = rng.normal(size=3)

        def loss_fn():
            return ad.sum_all(nn.dense(nn.DenseParams(W, Var(np.zeros(3))), Var(x)))

        err = nn.grad_check(loss_fn, [W], eps=1e-5, seed=0)
        assert err < 1e-9

    def test_corrupted_gradient_detected(self):
        p = Var(np.array([0.7, -0.3]))

        def doubled_grad(a):
            out = Var(a.value * 1.0)
            t = ad._tape()
            if t is not None:
                def bwd():
                    a.accumulate(2.0 * out.grad)  # deliberately wrong
                t.record(out, bwd)
            return out

        def loss_fn():
            return ad.sum_all(doubled_grad(p))

        err = nn.grad_check(loss_fn, [p], eps=1e-5, seed=0)
        assert err == pytest.approx(1 / 3, abs=1e-6)

    def test_eps_bounds(self):
        with pytest.raises(ValueError):
            nn.grad_check(lambda: Var(np.array(0.0)), [], eps=1e-2)


class TestBatchedForwardConsistency:
    def test_lstm_batched_equals_per_example(self):
        rng = np.random.default_rng(8)
        p, q = make_cell(rng, 3, 4), make_cell(rng, 3, 4)
        seqs = rng.normal(size=(5, 6, 3))
        hf_b, hb_b = nn.bilstm_encode(p, q, seqs)
        for i in range(5):
            hf, hb = nn.bilstm_encode(p, q, seqs[i])
            np.testing.assert_allclose(hf_b.value[i], hf.value[0], atol=1e-6)
            np.testing.assert_allclose(hb_b.value[i], hb.value[0], atol=1e-6)
