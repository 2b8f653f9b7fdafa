# -*- coding: utf-8 -*-
"""Finite-difference gradient checking for tape-computed gradients.

For a sampled subset of coordinates of every parameter tensor, compares the
analytic gradient against the central difference (f(x+e) - f(x-e)) / 2e.
Meant to run on float64 parameters; float32 rounding drowns the signal.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tape, Var


def relative_error(a: float, n: float) -> float:
    return abs(a - n) / max(1e-8, abs(a) + abs(n))


def grad_check(loss_fn, params: list[Var], eps: float = 1e-5,
               samples_per_tensor: int = 10, seed: int = 0) -> float:
    """Return the max relative error between analytic and numeric gradients.

    ``loss_fn`` takes no arguments and returns a scalar loss Var; it must read
    the current values of ``params``.  The analytic gradient is computed once,
    then each sampled coordinate is perturbed in place for the two function
    evaluations.
    """
    if not (1e-7 <= eps <= 1e-3):
        raise ValueError(f"eps {eps} outside [1e-7, 1e-3]")
    rng = np.random.default_rng(seed)

    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    analytic = [p.grad.copy() for p in params]

    max_err = 0.0
    for p, a in zip(params, analytic):
        flat = p.value.reshape(-1)
        n_coords = min(samples_per_tensor, flat.size)
        coords = rng.choice(flat.size, size=n_coords, replace=False)
        for j in coords:
            orig = flat[j]
            flat[j] = orig + eps
            f_plus = float(loss_fn().value)
            flat[j] = orig - eps
            f_minus = float(loss_fn().value)
            flat[j] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            err = relative_error(float(a.reshape(-1)[j]), numeric)
            max_err = max(max_err, err)
    return max_err
