"""Random output distributions of random circuits and their moments.

The ideal output distribution of a random circuit over ``M = 2**n`` bitstrings
is modelled as a Dirichlet(1) vector, i.e. normalised iid Exp(1) variables
(the Porter-Thomas surrogate).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

MAX_QUBITS = 30
_BLOCK = 1 << 16

# sub-stream tags, so that one SeedSpec can drive several independent draws
STREAM_VECTOR = 0
STREAM_SAMPLE = 1


def compensated_sum(x: np.ndarray) -> float:
    """Sum of a float array with error O(eps * log(block)) independent of length.

    Blocks are summed pairwise by numpy, the block totals exactly by ``math.fsum``.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size <= _BLOCK:
        return math.fsum(x)
    starts = np.arange(0, x.size, _BLOCK)
    return math.fsum(np.add.reduceat(x, starts))


@dataclass(frozen=True)
class SeedSpec:
    """Seed for a reproducible random stream.

    Distinct ``stream_index`` values give independent streams (they are keyed
    through ``numpy.random.SeedSequence`` into a counter-based Philox generator).
    """

    base_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.base_seed) < 2**64:
            raise DomainError(f"base_seed must be a 64-bit unsigned integer, got {self.base_seed}")
        if int(self.stream_index) < 0:
            raise DomainError(f"stream_index must be nonnegative, got {self.stream_index}")

    def generator(self, *subkeys: int) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.base_seed), spawn_key=(int(self.stream_index), *subkeys))
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """A probability distribution over the ``2**n`` bitstrings of ``n`` qubits.

    The weight array is made read-only on construction (no copy is taken when the
    input is already a contiguous float64 array).
    """

    n: int
    weights: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if not 1 <= n <= MAX_QUBITS:
            raise DimensionError(f"qubit count must be in [1, {MAX_QUBITS}], got {self.n}")
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size != 1 << n:
            raise DimensionError(f"expected {1 << n} weights for n={n}, got shape {w.shape}")
        if not np.all(w >= 0):
            raise DomainError("weights must be nonnegative")
        total = compensated_sum(w)
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"weights sum to {total!r}, not 1")
        w.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "weights", w)

    @property
    def M(self) -> int:
        return 1 << self.n

    def __len__(self):
        return self.M

    @classmethod
    def uniform(cls, n: int) -> "ProbabilityVector":
        return cls(n, np.full(1 << n, 1.0 / (1 << n)))

    @classmethod
    def point_mass(cls, n: int, index: int) -> "ProbabilityVector":
        w = np.zeros(1 << n)
        w[index] = 1.0
        return cls(n, w)


@dataclass(frozen=True)
class MomentSummary:
    w2: float
    w3: float
    w4: float


def gen_porter_thomas(n: int, seed: SeedSpec) -> ProbabilityVector:
    """Draw a Dirichlet(1) probability vector over ``2**n`` states.

    Exponentials come from the inverse CDF ``-log(1 - u)`` of Philox uniforms and
    are normalised by a compensated sum. Deterministic for a fixed seed.
    """
    if not 1 <= n <= MAX_QUBITS:
        raise DimensionError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
    rng = seed.generator(STREAM_VECTOR)
    z = rng.random(1 << n)
    np.negative(z, out=z)
    np.log1p(z, out=z)
    np.negative(z, out=z)
    z /= compensated_sum(z)
    return ProbabilityVector(n, z)


def _power_sum(w: np.ndarray, k: int) -> float:
    parts = []
    for start in range(0, w.size, _BLOCK):
        block = w[start:start + _BLOCK]
        parts.append(math.fsum(block ** k))
    return math.fsum(parts)


def moments(pv: ProbabilityVector) -> MomentSummary:
    """Power sums ``sum w_i**k`` for k = 2, 3, 4, each exactly rounded per block."""
    w = pv.weights
    return MomentSummary(_power_sum(w, 2), _power_sum(w, 3), _power_sum(w, 4))


def theoretical_moment(M: int, k: int) -> float:
    """``E w_i**k = k! / (M (M+1) ... (M+k-1))`` for a Dirichlet(1) vector of length M."""
    if M < 1 or k < 1:
        raise DomainError(f"need M >= 1 and k >= 1, got M={M}, k={k}")
    if k <= 1000:
        value = 1.0
        for j in range(k):
            value *= (j + 1) / (M + j)
    else:
        value = math.exp(math.lgamma(k + 1) + math.lgamma(M) - math.lgamma(M + k))
    if not value > 0.0 or not math.isfinite(value):
        raise DomainError(f"moment of order {k} for M={M} is not representable")
    return value


def mixture_beta_density(t, M: int, phi: float):
    """Density of a sampled probability under the basic noise model.

    ``phi * M(M-1) t (1-t)**(M-2) + (1-phi) (M-1) (1-t)**(M-2)``, a mixture of the
    Beta(1, M-1) marginal and its size-biased Beta(2, M-1) version. The power is
    evaluated as ``exp((M-2) log1p(-t))`` so that large M does not underflow early.
    """
    t = np.asarray(t, dtype=np.float64)
    if M < 2:
        raise DomainError("M must be at least 2")
    if M == 2:
        log_tail = np.zeros_like(t)
    else:
        with np.errstate(divide="ignore"):
            log_tail = (M - 2) * np.log1p(-t)
    out = np.exp(math.log(M - 1) + log_tail) * (phi * M * t + (1.0 - phi))
    return out[()] if out.ndim == 0 else out


def mixture_exp_density(z, phi: float):
    """``phi z e^-z + (1 - phi) e^-z``: the Gamma(2,1) / Exp(1) mixture on the scale z = M w."""
    z = np.asarray(z, dtype=np.float64)
    out = (phi * z + (1.0 - phi)) * np.exp(-z)
    return out[()] if out.ndim == 0 else out
