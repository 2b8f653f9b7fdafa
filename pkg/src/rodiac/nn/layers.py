# -*- coding: utf-8 -*-
"""LSTM / BiLSTM and dense layers on top of the autodiff core.

Gate packing is fixed as (input, forget, cell candidate, output) along the 4H
axis of the weight matrices; checkpoints rely on this order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Var


class ShapeError(ValueError):
    pass


@dataclass
class LSTMCellParams:
    """One direction of an LSTM: W_x [4H, D], W_h [4H, H], b [4H]."""

    W_x: Var
    W_h: Var
    b: Var

    @property
    def hidden_size(self) -> int:
        return self.W_h.value.shape[1]

    @property
    def input_size(self) -> int:
        return self.W_x.value.shape[1]

    def check(self) -> None:
        H, D = self.hidden_size, self.input_size
        if self.W_x.value.shape != (4 * H, D):
            raise ShapeError(f"W_x shape {self.W_x.value.shape}, expected {(4 * H, D)}")
        if self.W_h.value.shape != (4 * H, H):
            raise ShapeError(f"W_h shape {self.W_h.value.shape}, expected {(4 * H, H)}")
        if self.b.value.shape != (4 * H,):
            raise ShapeError(f"b shape {self.b.value.shape}, expected {(4 * H,)}")

    def variables(self) -> list[Var]:
        return [self.W_x, self.W_h, self.b]


def glorot_uniform(rng: np.random.Generator, shape: tuple, dtype=np.float32) -> np.ndarray:
    fan_in, fan_out = shape[-1], shape[0]
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=shape).astype(dtype)


def init_lstm(rng: np.random.Generator, input_size: int, hidden_size: int,
              dtype=np.float32) -> LSTMCellParams:
    return LSTMCellParams(
        W_x=Var(glorot_uniform(rng, (4 * hidden_size, input_size), dtype)),
        W_h=Var(glorot_uniform(rng, (4 * hidden_size, hidden_size), dtype)),
        b=Var(np.zeros(4 * hidden_size, dtype=dtype)),
    )


def lstm_step(p: LSTMCellParams, x: Var, h: Var, c: Var) -> tuple[Var, Var]:
    """One LSTM step on a batch: x [B, D], h and c [B, H] -> (h', c').

    1-D inputs are treated as a batch of one and returned 1-D.
    """
    if x.value.ndim == 1:
        h1, c1 = lstm_step(p,
                           ad.reshape(x, (1, -1)),
                           ad.reshape(h, (1, -1)),
                           ad.reshape(c, (1, -1)))
        return ad.reshape(h1, (-1,)), ad.reshape(c1, (-1,))
    H = p.hidden_size
    if x.value.shape[-1] != p.input_size:
        raise ShapeError(
            f"lstm_step input has size {x.value.shape[-1]}, cell expects {p.input_size}")
    if h.value.shape[-1] != H or c.value.shape[-1] != H:
        raise ShapeError(
            f"lstm_step state sizes {h.value.shape[-1]}/{c.value.shape[-1]}, cell hidden {H}")
    gates = ad.add(ad.add(ad.matmul(x, _transposed(p.W_x)),
                          ad.matmul(h, _transposed(p.W_h))),
                   p.b)
    i = ad.sigmoid(ad.slice_cols(gates, 0, H))
    f = ad.sigmoid(ad.slice_cols(gates, H, 2 * H))
    g = ad.tanh(ad.slice_cols(gates, 2 * H, 3 * H))
    o = ad.sigmoid(ad.slice_cols(gates, 3 * H, 4 * H))
    c_new = ad.add(ad.mul(f, c), ad.mul(i, g))
    h_new = ad.mul(o, ad.tanh(c_new))
    return h_new, c_new


def _transposed(w: Var) -> Var:
    # matmul with x [B, D] wants [D, 4H]; transpose without copying gradients
    # twice by expressing it through a dedicated view op.
    out = Var(w.value.T)
    t = ad._tape()
    if t is not None:
        def bwd():
            w.accumulate(out.grad.T)
        t.record(out, bwd)
    return out


def _zeros_state(batch: int, hidden: int, dtype) -> Var:
    return Var(np.zeros((batch, hidden), dtype=dtype))


def _run_direction(p: LSTMCellParams, steps: list[Var],
                   step_masks: list[np.ndarray] | None, batch: int, dtype) -> Var:
    """Run one direction over a list of [B, D] steps, returning the final h.

    ``step_masks[t]`` is a [B, 1] float array; masked-out steps carry the
    previous state through unchanged, so padded positions never disturb it.
    """
    h = _zeros_state(batch, p.hidden_size, dtype)
    c = _zeros_state(batch, p.hidden_size, dtype)
    for t, x in enumerate(steps):
        h_new, c_new = lstm_step(p, x, h, c)
        if step_masks is not None:
            m = Var(step_masks[t])
            keep = Var(1.0 - step_masks[t])
            h = ad.add(ad.mul(m, h_new), ad.mul(keep, h))
            c = ad.add(ad.mul(m, c_new), ad.mul(keep, c))
        else:
            h, c = h_new, c_new
    return h


def bilstm_encode(fwd: LSTMCellParams, bwd: LSTMCellParams,
                  seq: np.ndarray | list, mask: np.ndarray | None = None,
                  as_vars: list[Var] | None = None) -> tuple[Var, Var]:
    """Encode a padded [B, T, D] batch; returns final (h_fwd, h_bwd), each [B, H].

    ``mask`` is [B, T] (1 for real steps).  Padding is assumed on the right;
    the backward direction starts from the padded end, where masked steps keep
    the zero initial state until real tokens begin.

    ``as_vars`` lets the caller pass precomputed per-step Vars (e.g. gathered
    character embeddings) instead of a constant array.
    """
    if as_vars is not None:
        steps = as_vars
        B = steps[0].value.shape[0]
        T = len(steps)
        dtype = steps[0].value.dtype
    else:
        x = np.asarray(seq)
        if x.ndim == 2:  # single example [T, D]
            x = x[None, ...]
        B, T, _ = x.shape
        dtype = x.dtype
        steps = [Var(x[:, t, :]) for t in range(T)]
    if T == 0:
        raise ValueError("bilstm_encode: empty sequence")
    if mask is not None:
        mask = np.asarray(mask, dtype=dtype)
        if mask.ndim == 1:
            mask = mask[None, :]
        fwd_masks = [mask[:, t:t + 1] for t in range(T)]
        bwd_masks = fwd_masks[::-1]
    else:
        fwd_masks = bwd_masks = None
    h_fwd = _run_direction(fwd, steps, fwd_masks, B, dtype)
    h_bwd = _run_direction(bwd, steps[::-1], bwd_masks, B, dtype)
    return h_fwd, h_bwd


@dataclass
class DenseParams:
    W: Var  # [O, I]
    b: Var  # [O]

    def variables(self) -> list[Var]:
        return [self.W, self.b]


def init_dense(rng: np.random.Generator, in_size: int, out_size: int,
               dtype=np.float32) -> DenseParams:
    return DenseParams(
        W=Var(glorot_uniform(rng, (out_size, in_size), dtype)),
        b=Var(np.zeros(out_size, dtype=dtype)),
    )


def dense(p: DenseParams, x: Var, activation: str = "linear") -> Var:
    """y = act(W x + b) on a batch x [B, I] (or a single vector [I])."""
    if x.value.shape[-1] != p.W.value.shape[1]:
        raise ShapeError(
            f"dense input size {x.value.shape[-1]}, weight expects {p.W.value.shape[1]}")
    y = ad.add(ad.matmul(x, _transposed(p.W)) if x.value.ndim == 2
               else _vec_matmul(p.W, x), p.b)
    if activation == "relu":
        return ad.relu(y)
    if activation == "linear":
        return y
    raise ValueError(f"unknown activation {activation!r}")


def _vec_matmul(w: Var, x: Var) -> Var:
    out = Var(w.value @ x.value)
    t = ad._tape()
    if t is not None:
        def bwd():
            w.accumulate(np.outer(out.grad, x.value))
            x.accumulate(w.value.T @ out.grad)
        t.record(out, bwd)
    return out
