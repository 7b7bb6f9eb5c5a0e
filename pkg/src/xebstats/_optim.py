"""Safeguarded Newton ascent under linear inequality constraints ``A x <= b``.

Small dense problems only (a handful of parameters). The step is the Newton
direction restricted to the null space of the active constraints, with the
reduced Hessian pushed to negative definite, truncated at the first blocking
constraint and halved until the objective does not decrease.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import ConvergenceError

MAX_HALVINGS = 60


@dataclass
class AscentResult:
    x: np.ndarray
    value: float
    grad: np.ndarray
    hess: np.ndarray
    iterations: int
    active: tuple


def _null_space(A: np.ndarray, dim: int) -> np.ndarray:
    if A.shape[0] == 0:
        return np.eye(dim)
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0])))
    return vt[rank:].T


def _newton_direction(g, H, Z):
    if Z.shape[1] == 0:
        return np.zeros_like(g)
    gz = Z.T @ g
    hz = Z.T @ H @ Z
    vals, vecs = np.linalg.eigh(0.5 * (hz + hz.T))
    scale = max(1.0, float(np.max(np.abs(vals))))
    vals = np.minimum(vals, -1e-10 * scale)
    return -Z @ (vecs @ ((vecs.T @ gz) / vals))


def maximize(
    fun: Callable[[np.ndarray], Tuple[float, np.ndarray, np.ndarray]],
    value: Callable[[np.ndarray], float],
    x0,
    A,
    b,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> AscentResult:
    """Maximise a smooth concave-ish objective over ``{x : A x <= b}``.

    ``fun(x)`` returns (value, gradient, Hessian); ``value(x)`` the value alone,
    used during step halving. ``x0`` must be feasible.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64)
    dim = x.size
    slack_tol = 1e-12
    active = [i for i in range(A.shape[0]) if A[i] @ x >= b[i] - slack_tol]
    for it in range(1, max_iter + 1):
        f, g, H = fun(x)
        while True:
            Z = _null_space(A[active], dim)
            d = _newton_direction(g, H, Z)
            if active and np.linalg.norm(d) < tol:
                # multipliers of g = sum lam_i a_i; a negative one means the
                # objective still increases by moving off that constraint
                lam = np.linalg.lstsq(A[active].T, g, rcond=None)[0]
                j = int(np.argmin(lam))
                if lam[j] < -1e-9 * max(1.0, float(np.linalg.norm(g))):
                    active.pop(j)
                    continue
            break
        if np.linalg.norm(d) < tol:
            return AscentResult(x, f, g, H, it, tuple(sorted(active)))
        step, blocking = 1.0, None
        for i in range(A.shape[0]):
            if i in active:
                continue
            ad = A[i] @ d
            if ad > 0:
                room = max(b[i] - A[i] @ x, 0.0)
                if room / ad < step:
                    step, blocking = room / ad, i
        t = step
        for _ in range(MAX_HALVINGS):
            trial = x + t * d
            if value(trial) >= f - 1e-13 * (1.0 + abs(f)):
                break
            t *= 0.5
        else:
            # no ascent possible at floating-point resolution
            return AscentResult(x, f, g, H, it, tuple(sorted(active)))
        x = trial
        if blocking is not None and t == step:
            active.append(blocking)
            # land exactly on the constraint to avoid drift
            x = x - A[blocking] * (A[blocking] @ x - b[blocking]) / (A[blocking] @ A[blocking])
    raise ConvergenceError(f"no convergence within {max_iter} iterations (last x = {x})")
