"""Variances of the fidelity estimators, Fisher information, and 95% intervals."""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import DegenerateDenominatorError, DomainError
from .estimators import Method
from .probmodel import ProbabilityVector

Z95 = 1.96
QUAD_UPPER = 40.0


class IntervalKind(str, enum.Enum):
    ConditionalSingle = "ConditionalSingle"
    ConditionalCombined = "ConditionalCombined"
    UnconditionalU = "UnconditionalU"
    UnconditionalV = "UnconditionalV"
    UnconditionalMLE = "UnconditionalMLE"


@dataclass
class VarianceReport:
    method: Method
    conditional: Optional[float] = None
    unconditional: Optional[float] = None
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        for v in (self.conditional, self.unconditional):
            if v is not None and v < 0:
                raise DomainError(f"negative variance {v}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = Method(self.method).value
        return d


@dataclass(frozen=True)
class ConfidenceInterval:
    center: float
    half_width: float
    kind: IntervalKind
    level: float = 0.95

    def __post_init__(self):
        if not self.half_width >= 0:
            raise DomainError(f"half width must be nonnegative, got {self.half_width}")

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        return {
            "center": self.center,
            "half_width": self.half_width,
            "level": self.level,
            "kind": IntervalKind(self.kind).value,
        }


def var_U_conditional(phi, M, N, w2, w3) -> float:
    """Variance of U given the ideal vector (through w2 = sum w^2, w3 = sum w^3)."""
    a = M * w2 - 1.0
    val = (phi * (M * M * w3 - 3.0 * M * w2 + 2.0) - phi * phi * a * a + a) / N
    if val < 0:
        if val > -1e-15:
            return 0.0
        raise DomainError(f"inputs give a negative variance ({val})")
    return val


def var_V_conditional(phi, M, N, w2, w3) -> float:
    a = M * w2 - 1.0
    if not a > 0:
        raise DegenerateDenominatorError(f"M*w2 - 1 = {a} is not positive")
    return var_U_conditional(phi, M, N, w2, w3) / (a * a)


def var_unconditional(method, phi, M, N) -> float:
    """Variance over random circuits and samples (large-M forms)."""
    method = Method(method)
    base = (2.0 * phi - phi * phi + 1.0) / N
    if method is Method.V:
        return base
    if method is Method.U:
        return base + 20.0 * phi * phi / M
    if method is Method.LogU:
        return (math.pi ** 2 / 6.0 - phi * phi) / N
    raise DomainError(f"no unconditional variance formula for {method.value}")


def fisher_info(phi, pv: ProbabilityVector) -> float:
    """Per-observation Fisher information of the basic model at phi."""
    if not 0.0 <= phi < 1.0:
        raise DomainError(f"phi must lie in [0, 1), got {phi}")
    w = pv.weights
    M = pv.M
    a = w - 1.0 / M
    return float(np.sum(a * a / (phi * w + (1.0 - phi) / M)))


def _mle_integrand(z, phi):
    return (z - 1.0) ** 2 / (phi * z + 1.0 - phi) * math.exp(-z)


def mle_information_integral(phi: float) -> float:
    """int_0^inf (z-1)^2 e^-z / (phi z + 1 - phi) dz, truncated at z = 40.

    The discarded tail is below e^-40 (39^2 + 2*39 + 2)/(1 - phi + 40 phi) < 1e-14.
    """
    if not 0.0 <= phi < 1.0:
        raise DomainError(f"phi must lie in [0, 1), got {phi}")
    val, err = integrate.quad(_mle_integrand, 0.0, QUAD_UPPER, args=(phi,), epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def mle_asymptotic_var(phi: float, N) -> float:
    """Asymptotic variance of the basic MLE over random circuits."""
    return 1.0 / (N * mle_information_integral(phi))


def ci_conditional_single(estimate: float, sigma: float) -> ConfidenceInterval:
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    return ConfidenceInterval(float(estimate), Z95 * float(sigma), IntervalKind.ConditionalSingle)


def ci_conditional_combined(estimates: Sequence[float], sigmas: Sequence[float]) -> ConfidenceInterval:
    """Inverse-variance weighted combination of independent estimates."""
    est = np.asarray(estimates, dtype=np.float64)
    sig = np.asarray(sigmas, dtype=np.float64)
    if est.shape != sig.shape or est.size == 0:
        raise DomainError("need one sigma per estimate")
    if np.any(sig <= 0):
        raise DomainError("all sigmas must be positive")
    inv = 1.0 / (sig * sig)
    center = float(inv @ est / inv.sum())
    return ConfidenceInterval(center, Z95 / math.sqrt(inv.sum()), IntervalKind.ConditionalCombined)


def ci_conditional_combined_V(values: Sequence[float], N: int, moments: Sequence) -> ConfidenceInterval:
    """Combined V interval over files.

    ``moments`` holds one (M, w2, w3) triple per file. The plain average of the
    V's is plugged into each file's conditional variance once, then the files
    are weighted by inverse variance.
    """
    values = np.asarray(values, dtype=np.float64)
    phi = float(np.clip(values.mean(), 0.0, 1.0))
    sig = [math.sqrt(var_V_conditional(phi, M, N, w2, w3)) for M, w2, w3 in moments]
    return ci_conditional_combined(values, sig)


def ci_unconditional(method, mean_estimate, phi_plugin, L, N, M) -> ConfidenceInterval:
    """Interval for an average of L per-file estimates over random circuits."""
    method = Method(method)
    if L < 1:
        raise DomainError("L must be at least 1")
    phi = float(phi_plugin)
    if method is Method.U:
        var = (2.0 * phi - phi * phi + 1.0) / (L * N) + 20.0 * phi * phi / (L * M)
        kind = IntervalKind.UnconditionalU
    elif method is Method.V:
        var = (2.0 * phi - phi * phi + 1.0) / (L * N)
        kind = IntervalKind.UnconditionalV
    elif method is Method.MLE:
        var = mle_asymptotic_var(min(max(phi, 0.0), 1.0 - 1e-12), L * N)
        kind = IntervalKind.UnconditionalMLE
    else:
        raise DomainError(f"no unconditional interval for {method.value}")
    return ConfidenceInterval(float(mean_estimate), Z95 * math.sqrt(max(var, 0.0)), kind)
