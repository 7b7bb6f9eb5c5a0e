"""Fidelity estimators: linear (U, V), logarithmic, collision-based (T), and
maximum likelihood for the basic, mixture and readout-error models.

Most functions accept the sampled probabilities as arrays; an optional
``counts`` array lets callers pass distinct values with multiplicities instead
of the raw draws (same result, much less work when N >> number of distinct states).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._optim import maximize
from .errors import (
    DegenerateDenominatorError,
    DimensionError,
    DomainError,
    EmptyInputError,
    FlatLikelihoodError,
    ConvergenceError,
)
from .noise import Sample, _asym_kernel, counts_from_mapping
from .probmodel import ProbabilityVector, compensated_sum

EULER_GAMMA = 0.5772156649015329
RCOND_MIN = 1e-10
Q_EPS = 1e-9


class Method(str, enum.Enum):
    U = "U"
    V = "V"
    LogU = "LogU"
    MLE = "MLE"
    T = "T"
    GeneralMoment = "GeneralMoment"
    GeneralMLE = "GeneralMLE"
    ReadoutMoment = "ReadoutMoment"
    ReadoutMLE = "ReadoutMLE"
    AsymmetricMLE = "AsymmetricMLE"


def _jsonable(x):
    if x is None:
        return None
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


@dataclass
class Estimate:
    value: object  # float, or 1-d array for multi-parameter estimators
    method: Method
    variance: object = None  # float or covariance matrix
    iterations: Optional[int] = None
    aux: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variance is not None:
            var = np.asarray(self.variance, dtype=np.float64)
            if var.ndim == 0 and var < 0:
                raise DomainError(f"negative variance {float(var)}")

    def to_record(self, n=None, N=None, seed=None) -> dict:
        rec = {
            "method": Method(self.method).value,
            "value": _jsonable(self.value),
            "variance": _jsonable(self.variance),
            "iterations": self.iterations,
            "n": n,
            "N": N,
            "seed": seed,
        }
        if self.aux:
            rec["aux"] = {k: _jsonable(v) for k, v in self.aux.items()}
        return rec


@dataclass(frozen=True)
class MleConfig:
    init: object = None
    tol: float = 1e-10
    max_iter: int = 100

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")


def _values(sampled, counts=None):
    x = np.asarray(sampled, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError("sampled values must be one-dimensional")
    if x.size == 0:
        raise EmptyInputError("empty sample")
    if counts is None:
        return x, None, x.size
    c = np.asarray(counts, dtype=np.float64)
    if c.shape != x.shape:
        raise DimensionError("counts must match the sampled values")
    total = float(c.sum())
    if total <= 0:
        raise EmptyInputError("empty sample")
    return x, c, total


def _wsum(x, c):
    return float(np.sum(x)) if c is None else float(c @ x)


def _collapse(x, c):
    """Distinct values with multiplicities, for likelihood evaluation."""
    if c is not None:
        return x, c
    vals, cnt = np.unique(x, return_counts=True)
    return vals, cnt.astype(np.float64)


# ---------------------------------------------------------------------------
# linear and logarithmic estimators


def estimator_U(sampled_w, M: int, counts=None) -> Estimate:
    """U = (M/N) sum w_j - 1."""
    x, c, N = _values(sampled_w, counts)
    return Estimate(M * _wsum(x, c) / N - 1.0, Method.U)


def estimator_V(sampled_w, M: int, w2: float, counts=None) -> Estimate:
    """V = U / (M w2 - 1), unbiased given the full vector."""
    denom = M * w2 - 1.0
    if not denom > 0:
        raise DegenerateDenominatorError(f"M*w2 - 1 = {denom} is not positive")
    u = estimator_U(sampled_w, M, counts).value
    return Estimate(u / denom, Method.V, aux={"U": u})


def estimator_log(sampled_w, M: int, counts=None) -> Estimate:
    """U_log = mean(log w_j) + gamma + log M."""
    x, c, N = _values(sampled_w, counts)
    if np.any(x <= 0):
        raise DomainError("log estimator needs strictly positive sampled probabilities")
    return Estimate(_wsum(np.log(x), c) / N + EULER_GAMMA + math.log(M), Method.LogU)


def estimator_T(counts, M: int, N: Optional[int] = None) -> Estimate:
    """Collision estimator of phi**2 and its clamped root.

    ``counts`` holds the occurrence count of each observed bitstring (mapping or
    sequence); only the multiset of counts matters.
    """
    n_i = counts_from_mapping(counts)
    total = int(n_i.sum())
    if N is None:
        N = total
    if N != total:
        raise DimensionError(f"counts sum to {total}, expected N={N}")
    if N < 2:
        raise EmptyInputError("T needs at least two draws")
    pairs = float(N) * (N - 1)
    sq = float(np.sum(n_i.astype(np.float64) ** 2))
    t2 = M * (M + 1.0) / (pairs * (M - 1.0)) * (sq - N - pairs / M)
    return Estimate(math.sqrt(max(t2, 0.0)), Method.T, aux={"T2": t2})


# ---------------------------------------------------------------------------
# basic-model MLE


def score_basic(phi, sampled_w, M, counts=None):
    """(f, J): first and second derivative of the basic log-likelihood at phi."""
    x, c, _ = _values(sampled_w, counts)
    a = x - 1.0 / M
    den = phi * x + (1.0 - phi) / M
    r = a / den
    if c is None:
        return float(np.sum(r)), -float(np.sum(r * r))
    return float(c @ r), -float(c @ (r * r))


def loglik_basic(phi, sampled_w, M, counts=None):
    x, c, _ = _values(sampled_w, counts)
    with np.errstate(divide="ignore"):
        terms = np.log(phi * x + (1.0 - phi) / M)
    return _wsum(terms, c)


def mle_basic(sampled_w, M: int, cfg: Optional[MleConfig] = None, counts=None) -> Estimate:
    """Maximum likelihood for phi in [0, 1] under pi = phi w + (1-phi)/M.

    Newton iteration phi <- phi - f/J, projected to [0, 1] and halved whenever
    the log-likelihood would decrease. Variance is the inverse observed information.
    """
    cfg = cfg or MleConfig()
    x, c, N = _values(sampled_w, counts)
    x, c = _collapse(x, c)
    a = x - 1.0 / M
    if np.all(np.abs(a) <= 1e-15 / M):
        raise FlatLikelihoodError("all sampled probabilities equal 1/M; phi is not identifiable")

    def fj(phi):
        r = a / (phi * x + (1.0 - phi) / M)
        return float(c @ r), -float(c @ (r * r))

    def ll(phi):
        with np.errstate(divide="ignore"):
            return float(c @ np.log(phi * a + 1.0 / M))

    def result(phi, iters):
        f, J = fj(phi)
        var = -1.0 / J if J < 0 else None
        return Estimate(phi, Method.MLE, var, iters, aux={"score": f})

    f0, _ = fj(0.0)
    if f0 <= 0:
        return result(0.0, 0)
    # at phi = 1 the score may be -inf/nan when some w_j = 0; that means "interior"
    with np.errstate(divide="ignore", invalid="ignore"):
        f1, _ = fj(1.0)
    if f1 >= 0:
        return result(1.0, 0)
    if cfg.init is not None:
        phi = float(cfg.init)
    else:
        phi = M * float(c @ x) / N - 1.0
    phi = min(max(phi, 0.0), 1.0)
    # keep away from phi = 1 where the likelihood can be -inf
    if phi >= 1.0:
        phi = 0.99
    cur = ll(phi)
    for it in range(1, cfg.max_iter + 1):
        f, J = fj(phi)
        step = -f / J
        new = min(max(phi + step, 0.0), 1.0)
        t = new - phi
        for _ in range(60):
            cand = phi + t
            val = ll(cand)
            if val >= cur - 1e-13 * (1.0 + abs(cur)):
                break
            t *= 0.5
        phi_next = phi + t
        cur = ll(phi_next)
        moved = abs(phi_next - phi)
        phi = phi_next
        if moved < cfg.tol or abs(step) < cfg.tol:
            return result(phi, it)
    raise ConvergenceError(f"basic MLE did not converge in {cfg.max_iter} iterations (phi = {phi})")


# ---------------------------------------------------------------------------
# general mixture model


def _stack(samples):
    if not isinstance(samples, np.ndarray) and len({len(r) for r in samples}) > 1:
        raise DimensionError("per-component samples differ in length")
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError("per-component samples must form a (p, N) array")
    if arr.shape[0] < 2:
        raise DimensionError("need at least two components")
    if arr.shape[1] == 0:
        raise EmptyInputError("empty sample")
    return arr


def estimator_general_moment(samples, M: int, components: Optional[Sequence[ProbabilityVector]] = None) -> Estimate:
    """U_k = mean(M w_kj - 1) per component.

    When the full component vectors are given, the bias is removed by solving
    (M G - 1) phi = U, G the Gram matrix of the components, in least squares
    together with sum(phi) = 1.
    """
    arr = _stack(samples)
    u = M * arr.mean(axis=1) - 1.0
    aux = {"U": u.copy()}
    if components is None:
        return Estimate(u, Method.GeneralMoment, aux=aux)
    if len(components) != arr.shape[0]:
        raise DimensionError("one component vector per row of samples is required")
    W = np.stack([c.weights for c in components])
    gram = W @ W.T
    A = np.vstack([M * gram - 1.0, np.ones(arr.shape[0])])
    rhs = np.concatenate([u, [1.0]])
    phi, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return Estimate(phi, Method.GeneralMoment, aux=aux)


def _general_parts(arr, counts):
    # pi_j = last_j + sum_{k<p} x_k (w_kj - last_j)
    last = arr[-1]
    diff = arr[:-1] - last
    c = np.ones(arr.shape[1]) if counts is None else np.asarray(counts, dtype=np.float64)
    return last, diff, c


def loglik_general(phis, samples, counts=None):
    arr = _stack(samples)
    pi = np.asarray(phis, dtype=np.float64) @ arr
    with np.errstate(divide="ignore"):
        terms = np.log(pi)
    c = np.ones(arr.shape[1]) if counts is None else np.asarray(counts, dtype=np.float64)
    return float(c @ terms)


def score_general(phis, samples, counts=None):
    """Gradient with respect to the first p-1 weights (the last is 1 - their sum)."""
    arr = _stack(samples)
    last, diff, c = _general_parts(arr, counts)
    pi = np.asarray(phis, dtype=np.float64) @ arr
    return diff @ (c / pi)


def mle_general(samples, cfg: Optional[MleConfig] = None, counts=None, M: Optional[int] = None) -> Estimate:
    """Maximum likelihood for the mixture weights over the probability simplex."""
    cfg = cfg or MleConfig()
    arr = _stack(samples)
    p = arr.shape[0]
    last, diff, c = _general_parts(arr, counts)
    if np.all(np.abs(diff) <= 1e-300):
        raise FlatLikelihoodError("all components agree on every sampled state")

    def fun(x):
        pi = last + x @ diff
        r = diff / pi
        return float(c @ np.log(pi)), r @ c, -(r * c) @ r.T

    def value(x):
        pi = last + x @ diff
        if np.any(pi <= 0):
            return -math.inf
        return float(c @ np.log(pi))

    if cfg.init is not None:
        x0 = np.asarray(cfg.init, dtype=np.float64)[: p - 1]
    else:
        Mi = M if M is not None else 1.0 / max(float(arr.mean()), 1e-300)
        u = Mi * (arr @ c) / c.sum() - 1.0
        x0 = np.clip(u, 0.0, None)
        x0 = x0 / x0.sum() if x0.sum() > 0 else np.full(p, 1.0 / p)
        x0 = x0[: p - 1]
    # start strictly inside the simplex
    x0 = 0.98 * x0 + 0.02 / p
    A = np.vstack([-np.eye(p - 1), np.ones(p - 1)])
    b = np.concatenate([np.zeros(p - 1), [1.0]])
    res = maximize(fun, value, x0, A, b, cfg.tol, cfg.max_iter)
    x = np.clip(res.x, 0.0, 1.0)
    s = x.sum()
    if s > 1.0:
        x /= s
    phi = np.concatenate([x, [1.0 - x.sum()]])
    phi[-1] = max(phi[-1], 0.0)
    cov = _inverse_info(res.hess)
    return Estimate(phi, Method.GeneralMLE, cov, res.iterations, aux={"active": list(res.active)})


def _inverse_info(hess):
    try:
        cov = np.linalg.inv(-hess)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(cov)) or np.any(np.diag(cov) < 0):
        return None
    return cov


# ---------------------------------------------------------------------------
# symmetric readout model


def readout_gram(pv: ProbabilityVector, v: ProbabilityVector):
    """(sum w^2, sum v w, sum v^2) from the full vectors."""
    w, vv = pv.weights, v.weights
    return (
        compensated_sum(w * w),
        compensated_sum(w * vv),
        compensated_sum(vv * vv),
    )


def estimator_W(sampled_v, M: int, counts=None) -> float:
    """W = (M/N) sum v_j - 1."""
    x, c, N = _values(sampled_v, counts)
    return M * _wsum(x, c) / N - 1.0


def estimator_readout_moment(sampled_w, sampled_v, pv: ProbabilityVector, v: ProbabilityVector, M: Optional[int] = None, counts=None) -> Estimate:
    """Solve the 2x2 moment system for (phi, phi_ro) from U and W."""
    M = pv.M if M is None else M
    if v.n != pv.n:
        raise DimensionError("pv and v differ in size")
    u = estimator_U(sampled_w, M, counts).value
    W = estimator_W(sampled_v, M, counts)
    sww, svw, svv = readout_gram(pv, v)
    A = np.array([[M * sww - 1.0, M * svw - 1.0], [M * svw - 1.0, M * svv - 1.0]])
    rcond = 1.0 / np.linalg.cond(A) if np.all(np.isfinite(A)) else 0.0
    if not rcond >= RCOND_MIN:
        raise DegenerateDenominatorError(f"moment system is singular (rcond = {rcond:.3g})")
    sol = np.linalg.solve(A, np.array([u, W]))
    return Estimate(sol, Method.ReadoutMoment, aux={"U": u, "W": W, "matrix": A})


def estimator_phi_ro_tilde(W: float, constants) -> Estimate:
    """phi_ro ~ W / (G/D^2 - 1)."""
    denom = constants.G / constants.D ** 2 - 1.0
    if not denom > 0:
        raise DegenerateDenominatorError(f"G/D^2 - 1 = {denom} is not positive")
    return Estimate(W / denom, Method.ReadoutMoment, aux={"W": W, "denominator": denom})


def _readout_inputs(sampled_w, sampled_v, M, counts):
    x, c, _ = _values(sampled_w, counts)
    y = np.asarray(sampled_v, dtype=np.float64)
    if y.shape != x.shape:
        raise DimensionError("sampled_w and sampled_v differ in length")
    if c is None:
        pairs, cnt = np.unique(np.stack([x, y], axis=1), axis=0, return_counts=True)
        x, y, c = pairs[:, 0], pairs[:, 1], cnt.astype(np.float64)
    return np.stack([x - 1.0 / M, y - 1.0 / M]), c


def loglik_readout(params, sampled_w, sampled_v, M, counts=None):
    ab, c = _readout_inputs(sampled_w, sampled_v, M, counts)
    with np.errstate(divide="ignore"):
        return float(c @ np.log(np.asarray(params) @ ab + 1.0 / M))


def score_readout(params, sampled_w, sampled_v, M, counts=None):
    ab, c = _readout_inputs(sampled_w, sampled_v, M, counts)
    pi = np.asarray(params) @ ab + 1.0 / M
    return ab @ (c / pi)


def mle_readout(sampled_w, sampled_v, M: int, cfg: Optional[MleConfig] = None, counts=None) -> Estimate:
    """Maximum likelihood for (phi, phi_ro) over phi, phi_ro >= 0, phi + phi_ro <= 1."""
    cfg = cfg or MleConfig()
    ab, c = _readout_inputs(sampled_w, sampled_v, M, counts)
    if np.all(np.abs(ab) <= 1e-15 / M):
        raise FlatLikelihoodError("sampled w and v all equal 1/M")

    def fun(x):
        pi = x @ ab + 1.0 / M
        r = ab / pi
        return float(c @ np.log(pi)), r @ c, -(r * c) @ r.T

    def value(x):
        pi = x @ ab + 1.0 / M
        if np.any(pi <= 0):
            return -math.inf
        return float(c @ np.log(pi))

    if cfg.init is not None:
        x0 = np.asarray(cfg.init, dtype=np.float64)
    else:
        u = M * float(c @ ab[0]) / c.sum()
        x0 = np.array([min(max(u, 0.01), 0.9), 0.01])
    A = np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]])
    b = np.array([0.0, 0.0, 1.0])
    res = maximize(fun, value, x0, A, b, cfg.tol, cfg.max_iter)
    x = np.clip(res.x, 0.0, 1.0)
    return Estimate(x, Method.ReadoutMLE, _inverse_info(res.hess), res.iterations, aux={"active": list(res.active)})


# ---------------------------------------------------------------------------
# asymmetric readout model


def _channel_with_derivatives(x: np.ndarray, n: int, q1: float, q2: float):
    """R^{(x)n} x and its first and second derivatives in (q1, q2).

    ``S[(a, b)]`` accumulates the terms in which a qubit factors are dR/dq1 and
    b are dR/dq2 (distinct qubits, unordered), so d/dq1 = S10, d2/dq1^2 = 2 S20,
    d2/dq1dq2 = S11 and d2/dq2^2 = 2 S02.
    """
    R = _asym_kernel(q1, q2)
    r00, r01, r10, r11 = R[0][0], R[0][1], R[1][0], R[1][1]
    keys = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    S = {k: None for k in keys}
    S[(0, 0)] = np.array(x, dtype=np.float64, copy=True)
    for k in range(n):
        new = {}
        views = {key: (arr.reshape(-1, 2, 1 << k) if arr is not None else None) for key, arr in S.items()}
        for key in keys:
            a, b = key
            out = np.zeros((x.size // (2 << k), 2, 1 << k))
            src = views[key]
            if src is not None:
                lo, hi = src[:, 0, :], src[:, 1, :]
                out[:, 0, :] += r00 * lo + r01 * hi
                out[:, 1, :] += r10 * lo + r11 * hi
            if a >= 1 and views[(a - 1, b)] is not None:
                # dR/dq1 = [[0, 1], [0, -1]]: moves true-1 mass to read-0
                hi = views[(a - 1, b)][:, 1, :]
                out[:, 0, :] += hi
                out[:, 1, :] -= hi
            if b >= 1 and views[(a, b - 1)] is not None:
                # dR/dq2 = [[-1, 0], [1, 0]]: moves true-0 mass to read-1
                lo = views[(a, b - 1)][:, 0, :]
                out[:, 0, :] -= lo
                out[:, 1, :] += lo
            new[key] = out.reshape(-1)
        S = new
    return S


def _asym_parts(pv: ProbabilityVector, q1: float, q2: float):
    n = pv.n
    sw = _channel_with_derivatives(pv.weights, n, q1, q2)
    su = _channel_with_derivatives(np.full(pv.M, 1.0 / pv.M), n, q1, q2)
    return sw, su


def _asym_loglik_terms(theta, pv, idx, cnt, need_derivs=True):
    g, q1, q2 = theta
    sw, su = _asym_parts(pv, q1, q2)
    A = {k: v[idx] for k, v in sw.items()}
    B = {k: v[idx] for k, v in su.items()}
    pi = g * A[(0, 0)] + (1.0 - g) * B[(0, 0)]
    with np.errstate(divide="ignore"):
        ll = float(cnt @ np.log(pi))
    if not need_derivs:
        return ll, None, None
    mix = lambda key: g * A[key] + (1.0 - g) * B[key]
    d = np.stack([A[(0, 0)] - B[(0, 0)], mix((1, 0)), mix((0, 1))])
    h = np.empty((3, 3, idx.size))
    h[0, 0] = 0.0
    h[0, 1] = h[1, 0] = A[(1, 0)] - B[(1, 0)]
    h[0, 2] = h[2, 0] = A[(0, 1)] - B[(0, 1)]
    h[1, 1] = 2.0 * mix((2, 0))
    h[1, 2] = h[2, 1] = mix((1, 1))
    h[2, 2] = 2.0 * mix((0, 2))
    r = d / pi
    grad = r @ cnt
    hess = np.einsum("ijk,k->ij", h, cnt / pi) - (r * cnt) @ r.T
    return ll, grad, hess


def _count_arrays(counts):
    if isinstance(counts, Sample):
        idx, cnt = counts.count_table()
    elif isinstance(counts, dict):
        idx = np.fromiter(counts.keys(), dtype=np.int64, count=len(counts))
        cnt = np.fromiter(counts.values(), dtype=np.int64, count=len(counts))
    else:
        idx, cnt = counts
    return np.asarray(idx, dtype=np.int64), np.asarray(cnt, dtype=np.float64)


def loglik_asymmetric(theta, counts, pv: ProbabilityVector) -> float:
    idx, cnt = _count_arrays(counts)
    return _asym_loglik_terms(np.asarray(theta, dtype=np.float64), pv, idx, cnt, need_derivs=False)[0]


def score_asymmetric(theta, counts, pv: ProbabilityVector):
    """(gradient, Hessian) of the asymmetric log-likelihood at (phi_g, q1, q2)."""
    idx, cnt = _count_arrays(counts)
    _, g, H = _asym_loglik_terms(np.asarray(theta, dtype=np.float64), pv, idx, cnt)
    return g, H


def mle_asymmetric(counts, pv: ProbabilityVector, cfg: Optional[MleConfig] = None) -> Estimate:
    """Maximum likelihood for (phi_g, q1, q2) under asymmetric readout flips.

    ``counts`` is a :class:`Sample`, a mapping index -> count, or an (indices,
    counts) pair. The channel transform and its derivatives are recomputed for
    every trial point.
    """
    cfg = cfg or MleConfig()
    idx, cnt = _count_arrays(counts)
    if idx.size == 0:
        raise EmptyInputError("empty sample")
    if idx.min() < 0 or idx.max() >= pv.M:
        raise DimensionError(f"sample index out of range for n={pv.n}")

    def fun(x):
        return _asym_loglik_terms(x, pv, idx, cnt)

    def value(x):
        v = _asym_loglik_terms(x, pv, idx, cnt, need_derivs=False)[0]
        return v if math.isfinite(v) else -math.inf

    if cfg.init is not None:
        x0 = np.asarray(cfg.init, dtype=np.float64)
    else:
        x0 = np.array([0.5, 0.05, 0.05])
    lo = np.array([0.0, Q_EPS, Q_EPS])
    hi = np.array([1.0, 0.5 - Q_EPS, 0.5 - Q_EPS])
    A = np.vstack([-np.eye(3), np.eye(3)])
    b = np.concatenate([-lo, hi])
    res = maximize(fun, value, np.clip(x0, lo, hi), A, b, cfg.tol, cfg.max_iter)
    x = np.clip(res.x, lo, hi)
    return Estimate(x, Method.AsymmetricMLE, _inverse_info(res.hess), res.iterations, aux={"active": list(res.active)})


# ---------------------------------------------------------------------------
# Sample-level conveniences


def collapsed(sample: Sample, *vectors: ProbabilityVector):
    """Distinct drawn indices' values in each vector, plus their counts.

    Lets the array-based estimators run on a Sample without touching every draw.
    """
    idx, cnt = sample.count_table()
    return tuple(v.weights[idx] for v in vectors) + (cnt,)
