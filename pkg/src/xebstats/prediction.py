"""Fidelity predicted from per-component error rates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DomainError

E_GATE1 = 0.0016
E_GATE2 = 0.0062
E_READOUT = 0.038

# fidelity from the modified component formula, and the averaged MLE and T
# estimates over ten experimental files, by qubit count
REFERENCE_TABLE = {
    12: (0.3862, 0.3687, 0.4689),
    14: (0.3320, 0.3275, 0.4392),
    16: (0.2828, 0.2725, 0.3917),
    18: (0.2207, 0.2444, 0.3557),
    20: (0.1875, 0.2184, 0.3210),
    22: (0.1554, 0.1651, 0.2989),
    24: (0.1256, 0.1407, 0.2838),
    26: (0.1024, 0.1140, 0.2600),
}
REFERENCE_COLUMNS = ("predicted", "avg_mle", "avg_T")


def reference_fidelity(n: int) -> float:
    return REFERENCE_TABLE[n][0]


def _check_rates(rates: Sequence[float], name: str):
    for e in rates:
        if not 0.0 <= e < 1.0:
            raise DomainError(f"{name} entries must lie in [0, 1), got {e}")


@dataclass(frozen=True)
class CircuitErrorProfile:
    e_g1: tuple = ()
    e_g2: tuple = ()
    e_q: tuple = ()

    def __post_init__(self):
        for name in ("e_g1", "e_g2", "e_q"):
            vals = tuple(float(e) for e in getattr(self, name))
            _check_rates(vals, name)
            object.__setattr__(self, name, vals)

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitErrorProfile":
        unknown = set(d) - {"e_g1", "e_g2", "e_q"}
        if unknown:
            raise DomainError(f"unknown profile keys {sorted(unknown)}")
        return cls(tuple(d.get("e_g1", ())), tuple(d.get("e_g2", ())), tuple(d.get("e_q", ())))

    @classmethod
    def homogeneous(cls, n_g1: int, n_g2: int, n: int, e_g1=E_GATE1, e_g2=E_GATE2, e_q=E_READOUT):
        return cls((e_g1,) * n_g1, (e_g2,) * n_g2, (e_q,) * n)

    def log_fidelity(self) -> float:
        return math.fsum(math.log1p(-e) for e in self.e_g1 + self.e_g2 + self.e_q)


def fidelity_formula77(profile: CircuitErrorProfile) -> float:
    """Product of (1 - e) over every gate and qubit, summed in log space."""
    return math.exp(profile.log_fidelity())


def fidelity_simple(n_g1: int, n_g2: int, n: int) -> float:
    """Homogeneous-rate version with the fixed 1-gate, 2-gate and readout error rates."""
    if min(n_g1, n_g2, n) < 0:
        raise DomainError("counts must be nonnegative")
    return math.exp(n_g1 * math.log1p(-E_GATE1) + n_g2 * math.log1p(-E_GATE2) + n * math.log1p(-E_READOUT))


def total_gate_fidelity(phi: float, n: int, q: float = E_READOUT):
    """(phi_g, phi_ro) with phi_g = phi / (1-q)^n and phi_ro = phi_g - phi."""
    if not 0.0 <= phi <= 1.0:
        raise DomainError(f"phi must lie in [0, 1], got {phi}")
    if not 0.0 <= q < 1.0:
        raise DomainError(f"q must lie in [0, 1), got {q}")
    phi_g = phi / (1.0 - q) ** n
    if phi_g > 1.0:
        raise DomainError(f"phi = {phi} with n = {n}, q = {q} implies phi_g = {phi_g} > 1")
    return phi_g, phi_g - phi
