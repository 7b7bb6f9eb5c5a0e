"""Sampling models, their induced sampling distributions, and sample draws.

Four models are supported:

* ``Basic``: with probability phi sample the ideal distribution, else uniform.
* ``GeneralP``: convex combination of p arbitrary component distributions.
* ``ReadoutSymmetric``: basic model refined by a readout-error-only component,
  each qubit flipping independently with probability q.
* ``ReadoutAsymmetric``: readout flips 1->0 with q1 and 0->1 with q2, applied to
  both the ideal and the gate-error (uniform) part.

Readout channels are applied with a per-qubit 2x2 butterfly, O(M n) overall.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from ._alias import AliasTable
from .errors import DimensionError, DomainError, NoAcceptanceError
from .probmodel import STREAM_SAMPLE, ProbabilityVector, SeedSpec, compensated_sum

MAX_ATTEMPT_FACTOR = 10_000


@dataclass(frozen=True)
class Basic:
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.phi <= 1.0:
            raise DomainError(f"phi must lie in [0, 1], got {self.phi}")


@dataclass(frozen=True)
class GeneralP:
    phis: tuple
    components: tuple

    def __post_init__(self):
        phis = tuple(float(x) for x in self.phis)
        comps = tuple(self.components)
        if len(phis) != len(comps) or len(phis) < 1:
            raise DimensionError("need one weight per component")
        if any(x < 0 for x in phis) or abs(math.fsum(phis) - 1.0) > 1e-12:
            raise DomainError(f"component weights must be nonnegative and sum to 1, got {phis}")
        if len({c.n for c in comps}) != 1:
            raise DimensionError("all components must have the same qubit count")
        object.__setattr__(self, "phis", phis)
        object.__setattr__(self, "components", comps)

    @property
    def n(self) -> int:
        return self.components[0].n


@dataclass(frozen=True)
class ReadoutSymmetric:
    phi: float
    phi_ro: float
    q: float

    def __post_init__(self):
        if self.phi < 0 or self.phi_ro < 0 or self.phi + self.phi_ro > 1.0 + 1e-15:
            raise DomainError(f"need phi, phi_ro >= 0 and phi + phi_ro <= 1, got {self.phi}, {self.phi_ro}")
        if not 0.0 < self.q < 1.0:
            raise DomainError(f"q must lie in (0, 1), got {self.q}")

    @property
    def phi_g(self) -> float:
        return self.phi + self.phi_ro


@dataclass(frozen=True)
class ReadoutAsymmetric:
    phi_g: float
    q1: float  # P(1 read as 0)
    q2: float  # P(0 read as 1)

    def __post_init__(self):
        if not 0.0 <= self.phi_g <= 1.0:
            raise DomainError(f"phi_g must lie in [0, 1], got {self.phi_g}")
        if not (0.0 < self.q1 < 1.0 and 0.0 < self.q2 < 1.0):
            raise DomainError(f"q1, q2 must lie in (0, 1), got {self.q1}, {self.q2}")

    @property
    def uniform_bias(self) -> float:
        """Probability that a uniformly random bit is read as 1."""
        return (1.0 - self.q1 + self.q2) / 2.0


NoiseModel = Union[Basic, GeneralP, ReadoutSymmetric, ReadoutAsymmetric]


@dataclass(frozen=True)
class ReadoutConstants:
    D: float
    G: float
    H: float
    K: float


@dataclass(frozen=True, eq=False)
class Sample:
    """N draws of bitstring indices, in draw order, with looked-up probabilities.

    ``sampled_w`` is None when the ideal probabilities are unknown (e.g. a sample
    file read without its probability file).
    """

    n: int
    draws: np.ndarray
    sampled_w: Optional[np.ndarray] = None
    sampled_v: Optional[np.ndarray] = None
    attempts: Optional[int] = None  # proposals drawn, when produced by rejection
    _table: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=np.int64)
        if draws.ndim != 1:
            raise DimensionError("draws must be one-dimensional")
        if draws.size and (draws.min() < 0 or draws.max() >= 1 << self.n):
            raise DimensionError(f"draw index out of range for n={self.n}")
        for name in ("sampled_w", "sampled_v"):
            arr = getattr(self, name)
            if arr is not None and len(arr) != draws.size:
                raise DimensionError(f"{name} has length {len(arr)}, expected {draws.size}")
        object.__setattr__(self, "draws", draws)

    @property
    def total(self) -> int:
        return int(self.draws.size)

    @property
    def M(self) -> int:
        return 1 << self.n

    def count_table(self):
        """Sorted distinct indices and their occurrence counts."""
        if "t" not in self._table:
            self._table["t"] = np.unique(self.draws, return_counts=True)
        return self._table["t"]

    @property
    def counts(self) -> dict:
        idx, cnt = self.count_table()
        return dict(zip(idx.tolist(), cnt.tolist()))

    def dense_counts(self) -> np.ndarray:
        return np.bincount(self.draws, minlength=self.M)


def _check_pv(pv, what="probability vector") -> ProbabilityVector:
    if not isinstance(pv, ProbabilityVector):
        raise DimensionError(f"a {what} is required")
    return pv


def apply_channel(x: np.ndarray, n: int, kernel) -> np.ndarray:
    """Apply the same 2x2 column-stochastic ``kernel[read, true]`` to every qubit axis.

    Bit k of the state index is qubit k. Returns a new array.
    """
    k00, k01 = float(kernel[0][0]), float(kernel[0][1])
    k10, k11 = float(kernel[1][0]), float(kernel[1][1])
    out = np.array(x, dtype=np.float64, copy=True)
    for k in range(n):
        view = out.reshape(-1, 2, 1 << k)
        a = view[:, 0, :].copy()
        b = view[:, 1, :]
        view[:, 0, :] = k00 * a + k01 * b
        view[:, 1, :] = k10 * a + k11 * b
    return out


def readout_constants(n: int, q: float, M: Optional[int] = None) -> ReadoutConstants:
    """Normalising constants of the symmetric-readout W statistic.

    D = 1 - (1-q)^n,  H = sum_{y != 0} B_q(y)^2,  K = D^2 - H,
    G = M/(M+1) (2H + K) = M/(M+1) {[q^2 + (1-q)^2]^n - 2(1-q)^n + 1}.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    M = (1 << n) if M is None else M
    keep = (1.0 - q) ** n
    same = (q * q + (1.0 - q) ** 2) ** n
    D = -math.expm1(n * math.log1p(-q))
    H = same - keep * keep
    K = D * D - H
    G = M / (M + 1.0) * (same - 2.0 * keep + 1.0)
    return ReadoutConstants(D=D, G=G, H=H, K=K)


def readout_noise_vector(pv: ProbabilityVector, q: float) -> ProbabilityVector:
    """Distribution of the read bitstring given at least one readout flip.

    ``v_x = sum_{y != 0} w_{x xor y} q^|y| (1-q)^(n-|y|) / D``. The full flip channel
    is applied qubit by qubit, the y = 0 term removed, and the result divided by D.
    """
    _check_pv(pv)
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    n = pv.n
    flipped = apply_channel(pv.weights, n, [[1.0 - q, q], [q, 1.0 - q]])
    keep = (1.0 - q) ** n
    D = -math.expm1(n * math.log1p(-q))
    flipped -= keep * pv.weights
    np.maximum(flipped, 0.0, out=flipped)
    flipped /= D
    # absorb rounding so the result is a probability vector to machine precision
    flipped /= compensated_sum(flipped)
    return ProbabilityVector(n, flipped)


def _asym_kernel(q1: float, q2: float):
    # rows: read bit, columns: true bit
    return [[1.0 - q2, q1], [q2, 1.0 - q1]]


def asymmetric_signal_vector(pv: ProbabilityVector, q1: float, q2: float) -> ProbabilityVector:
    """Read-out distribution of the ideal output under asymmetric flips.

    Each true 1 is read as 0 with probability q1, each true 0 as 1 with q2.
    """
    _check_pv(pv)
    if not (0.0 < q1 < 1.0 and 0.0 < q2 < 1.0):
        raise DomainError(f"q1, q2 must lie in (0, 1), got {q1}, {q2}")
    out = apply_channel(pv.weights, pv.n, _asym_kernel(q1, q2))
    np.maximum(out, 0.0, out=out)
    out /= compensated_sum(out)
    return ProbabilityVector(pv.n, out)


def hamming_weights(n: int) -> np.ndarray:
    """Popcount of every index in ``range(2**n)``."""
    idx = np.arange(1 << n, dtype=np.uint64)
    weight = np.zeros(1 << n, dtype=np.int64)
    for k in range(n):
        weight += ((idx >> np.uint64(k)) & np.uint64(1)).astype(np.int64)
    return weight


def biased_uniform(n: int, q: float) -> np.ndarray:
    """``B_q(x) = q^|x| (1-q)^(n-|x|)`` over all x."""
    h = hamming_weights(n)
    return np.exp(h * math.log(q) + (n - h) * math.log1p(-q))


def sampling_probs(model: NoiseModel, pv: Optional[ProbabilityVector] = None) -> ProbabilityVector:
    """Probability of observing each bitstring under ``model``.

    ``pv`` is the ideal distribution; it is ignored for ``GeneralP``, whose
    components carry their own vectors.
    """
    if isinstance(model, GeneralP):
        out = np.zeros(model.components[0].M)
        for phi_k, comp in zip(model.phis, model.components):
            if phi_k:
                out += phi_k * comp.weights
        return ProbabilityVector(model.n, out)
    pv = _check_pv(pv)
    M = pv.M
    if isinstance(model, Basic):
        out = model.phi * pv.weights + (1.0 - model.phi) / M
    elif isinstance(model, ReadoutSymmetric):
        out = model.phi * pv.weights + (1.0 - model.phi_g) / M
        if model.phi_ro:
            out += model.phi_ro * readout_noise_vector(pv, model.q).weights
    elif isinstance(model, ReadoutAsymmetric):
        out = model.phi_g * asymmetric_signal_vector(pv, model.q1, model.q2).weights
        out += (1.0 - model.phi_g) * biased_uniform(pv.n, model.uniform_bias)
    else:
        raise TypeError(f"unknown noise model {model!r}")
    out /= compensated_sum(out)
    return ProbabilityVector(pv.n, out)


def _lookup(vec: Optional[ProbabilityVector], draws: np.ndarray, n: int):
    if vec is None:
        return None
    if vec.n != n:
        raise DimensionError(f"lookup vector has n={vec.n}, sample has n={n}")
    return vec.weights[draws]


def draw_sample(
    pi: ProbabilityVector,
    pv_lookup: Optional[ProbabilityVector],
    v_lookup: Optional[ProbabilityVector],
    N: int,
    seed: SeedSpec,
) -> Sample:
    """Draw N iid indices from ``pi`` with an alias table; fill in w (and v) lookups."""
    if N < 1:
        raise DomainError(f"N must be positive, got {N}")
    rng = seed.generator(STREAM_SAMPLE)
    draws = AliasTable(pi.weights).draw(rng, N)
    return Sample(pi.n, draws, _lookup(pv_lookup, draws, pi.n), _lookup(v_lookup, draws, pi.n))


def draw_sample_with_rejection(
    pi: ProbabilityVector,
    tau: np.ndarray,
    N: int,
    seed: SeedSpec,
    pv_lookup: Optional[ProbabilityVector] = None,
    v_lookup: Optional[ProbabilityVector] = None,
) -> Sample:
    """Draw from ``pi`` and keep each draw with probability ``tau[index]`` until N are kept.

    The first batch has exactly N proposals drawn as in :func:`draw_sample`, so with
    all ``tau == 1`` both functions return the same sample for the same seed.
    """
    tau = np.asarray(tau, dtype=np.float64)
    if tau.shape != (pi.M,):
        raise DimensionError(f"tau must have length {pi.M}")
    if np.any(tau < 0) or np.any(tau > 1):
        raise DomainError("acceptance probabilities must lie in [0, 1]")
    if not np.any(tau > 0):
        raise NoAcceptanceError("every acceptance probability is zero")
    if N < 1:
        raise DomainError(f"N must be positive, got {N}")
    rng = seed.generator(STREAM_SAMPLE)
    table = AliasTable(pi.weights)
    kept, n_kept, attempts = [], 0, 0
    batch = N
    while n_kept < N:
        proposals = table.draw(rng, batch)
        coins = rng.random(batch)
        accepted = proposals[coins < tau[proposals]]
        kept.append(accepted)
        n_kept += accepted.size
        attempts += batch
        if n_kept >= N:
            break
        if attempts >= MAX_ATTEMPT_FACTOR * N:
            raise NoAcceptanceError(
                f"only {n_kept} of {N} draws accepted after {attempts} attempts"
            )
        rate = max(n_kept / attempts, 1.0 / (MAX_ATTEMPT_FACTOR * N))
        batch = int(min(math.ceil(1.1 * (N - n_kept) / rate) + 16, MAX_ATTEMPT_FACTOR * N - attempts))
    draws = np.concatenate(kept)[:N]
    # attempts up to and including the N-th acceptance
    extra = n_kept - N
    if extra:
        cut = np.flatnonzero(coins < tau[proposals])[accepted.size - extra - 1]
        attempts -= batch - cut - 1
    return Sample(pi.n, draws, _lookup(pv_lookup, draws, pi.n), _lookup(v_lookup, draws, pi.n), attempts)


def sample_model(
    model: NoiseModel,
    pv: Optional[ProbabilityVector],
    N: int,
    seed: SeedSpec,
) -> Sample:
    """Convenience: form the sampling distribution of ``model`` and draw N bitstrings.

    For the symmetric readout model the noise vector v is looked up as well.
    """
    v = None
    if isinstance(model, ReadoutSymmetric):
        v = readout_noise_vector(pv, model.q)
    if isinstance(model, GeneralP):
        pv = model.components[0] if pv is None else pv
    pi = sampling_probs(model, pv)
    return draw_sample(pi, pv, v, N, seed)


def general_sample_values(model: GeneralP, sample: Sample) -> np.ndarray:
    """The (p, N) array of component probabilities at each drawn index."""
    return np.stack([c.weights[sample.draws] for c in model.components])


def counts_from_mapping(counts: Union[Mapping[int, int], Sequence[int], np.ndarray]) -> np.ndarray:
    """Occurrence counts as a 1-d integer array (order irrelevant to collision statistics)."""
    if isinstance(counts, Mapping):
        return np.fromiter(counts.values(), dtype=np.int64, count=len(counts))
    return np.asarray(counts, dtype=np.int64)
