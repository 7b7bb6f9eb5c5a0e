"""Goodness of fit: Pearson chi-square with pooled sparse cells, histograms of
the sampled probabilities against the mixture densities, and frequency scatter data."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace
from typing import Mapping, Optional

import numpy as np
from scipy import integrate, stats

from .errors import DegenerateBinningError, DimensionError, EmptyInputError
from .noise import Sample
from .probmodel import ProbabilityVector, mixture_beta_density, mixture_exp_density

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    cells_merged: int
    p_value: float
    log_p_value: float

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "df": self.df,
            "cells_merged": self.cells_merged,
            "p_value": self.p_value,
            "log_p_value": self.log_p_value,
        }


def dense_counts(counts, M: int) -> np.ndarray:
    """Counts per index as a length-M array, from a Sample, mapping or array."""
    if isinstance(counts, Sample):
        if counts.M != M:
            raise DimensionError(f"sample has M={counts.M}, expected {M}")
        return counts.dense_counts()
    if isinstance(counts, Mapping):
        out = np.zeros(M, dtype=np.int64)
        if counts:
            idx = np.fromiter(counts.keys(), dtype=np.int64, count=len(counts))
            if idx.min() < 0 or idx.max() >= M:
                raise DimensionError("count index out of range")
            out[idx] = np.fromiter(counts.values(), dtype=np.int64, count=len(counts))
        return out
    arr = np.asarray(counts)
    if arr.shape != (M,):
        raise DimensionError(f"dense counts must have length {M}")
    return arr


def _pooled_statistic(obs: np.ndarray, expected: np.ndarray, min_expected: float):
    """X^2 after pooling the smallest-expectation cells until the pool reaches min_expected."""
    order = np.argsort(expected, kind="stable")
    e = expected[order]
    o = obs[order].astype(np.float64)
    k = int(np.searchsorted(e, min_expected, side="left"))
    if k > 0:
        ce = np.cumsum(e)
        if ce[k - 1] < min_expected:
            # pool still too small: keep adding the next-smallest cells
            k = int(np.searchsorted(ce, min_expected, side="left")) + 1
            k = min(k, e.size)
    if k > 1:
        pool_e = float(e[:k].sum())
        pool_o = float(o[:k].sum())
        rest_e, rest_o = e[k:], o[k:]
        cells = rest_e.size + 1
        stat = float(np.sum((rest_o - rest_e) ** 2 / rest_e)) + (pool_o - pool_e) ** 2 / pool_e
        merged = k - 1
    else:
        keep = e > 0
        if np.any(o[~keep] > 0):
            return math.inf, e.size, 0
        e, o = e[keep], o[keep]
        cells = e.size
        stat = float(np.sum((o - e) ** 2 / e))
        merged = 0
    return stat, cells, merged


def _log_upper_gamma_cf(a: float, x: float) -> float:
    """log Q(a, x) for x > a + 1 by the Lentz continued fraction, immune to underflow."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return -x + a * math.log(x) - math.lgamma(a) + math.log(h)


def chi2_log_sf(stat: float, df: int) -> float:
    """log P(chi2_df > stat), finite even when the p-value underflows."""
    val = float(stats.chi2.logsf(stat, df))
    if math.isfinite(val) or not math.isfinite(stat):
        return val
    return _log_upper_gamma_cf(df / 2.0, stat / 2.0)


def chi_square(counts, pi: ProbabilityVector, N: Optional[int] = None, estimated_params: int = 0, min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson's X^2 of observed counts against N*pi with sparse cells pooled.

    Cells are sorted by expected count and pooled smallest first until the pool
    has expected count >= ``min_expected``; df = cells - 1 - estimated_params.
    """
    obs = dense_counts(counts, pi.M)
    total = int(obs.sum())
    if N is None:
        N = total
    if total != N:
        raise DimensionError(f"counts sum to {total}, expected N={N}")
    if N < 1:
        raise EmptyInputError("no observations")
    stat, cells, merged = _pooled_statistic(obs, N * pi.weights, min_expected)
    df = cells - 1 - estimated_params
    if cells < 2 or df < 1:
        raise DegenerateBinningError(f"{cells} cells after pooling leave {df} degrees of freedom")
    return ChiSquareResult(
        statistic=stat,
        df=df,
        cells_merged=merged,
        p_value=float(stats.chi2.sf(stat, df)),
        log_p_value=chi2_log_sf(stat, df),
    )


def basic_chi_square(obs: np.ndarray, w: np.ndarray, N: int, phi: float, min_expected: float = 5.0) -> float:
    M = w.size
    return _pooled_statistic(obs, N * (phi * w + (1.0 - phi) / M), min_expected)[0]


def min_chisq_phi(counts, pv: ProbabilityVector, N: Optional[int] = None, tol: float = 1e-5, min_expected: float = 5.0) -> float:
    """phi in [0, 1] minimising X^2 under the basic model, by golden-section search."""
    obs = dense_counts(counts, pv.M)
    N = int(obs.sum()) if N is None else N
    if N < 1:
        raise EmptyInputError("no observations")
    w = pv.weights
    f = lambda phi: basic_chi_square(obs, w, N, phi, min_expected)
    a, b = 0.0, 1.0
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    # the endpoints are candidates too
    cands = [(fc, c), (fd, d), (f(0.0), 0.0), (f(1.0), 1.0)]
    return min(cands)[1]


@dataclass
class HistogramSpec:
    """Binning of sampled probabilities on the w scale or the z = M w scale.

    ``t_max`` defaults to 10/M (w scale) or 10 (z scale). Values beyond it are
    counted in the last bin, whose overlay includes the matching tail mass.
    """

    bins: int = 200
    t_max: Optional[float] = None
    scale: str = "w"
    edges: Optional[np.ndarray] = None
    counts: Optional[np.ndarray] = None
    overlay: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.bins < 2:
            raise DimensionError("need at least two bins")
        if self.scale not in ("w", "z"):
            raise DimensionError("scale must be 'w' or 'z'")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("bin_center,count,overlay\n")
        for c, k, o in zip(self.centers, self.counts, self.overlay):
            buf.write(f"{c:.10g},{int(k)},{o:.10g}\n")
        return buf.getvalue()


def histogram(sampled_w, spec: HistogramSpec, M: int, phi: float) -> HistogramSpec:
    """Tally the sampled probabilities and attach expected counts per bin."""
    x = np.asarray(sampled_w, dtype=np.float64)
    if x.size == 0:
        raise EmptyInputError("empty sample")
    N = x.size
    if spec.scale == "z":
        x = x * M
        t_max = 10.0 if spec.t_max is None else spec.t_max
        dens = lambda t: mixture_exp_density(t, phi)
        upper = math.inf
    else:
        t_max = 10.0 / M if spec.t_max is None else spec.t_max
        dens = lambda t: mixture_beta_density(t, M, phi)
        upper = 1.0
    edges = np.linspace(0.0, t_max, spec.bins + 1)
    idx = np.minimum((x / t_max * spec.bins).astype(np.int64), spec.bins - 1)
    counts = np.bincount(idx, minlength=spec.bins)
    width = t_max / spec.bins
    centers = 0.5 * (edges[1:] + edges[:-1])
    overlay = N * np.asarray(dens(centers)) * width
    if t_max < upper:
        if spec.scale == "z":
            tail = math.exp(-t_max) * (phi * (t_max + 1.0) + 1.0 - phi)
        else:
            tail = integrate.quad(lambda t: float(dens(t)), t_max, upper, limit=200)[0]
        overlay[-1] += N * tail
    return replace(spec, t_max=t_max, edges=edges, counts=counts, overlay=overlay)


def freq_scatter(counts, pi: ProbabilityVector, N: Optional[int] = None, floor: float = 0.0) -> np.ndarray:
    """(expected N*pi_i, observed n_i) rows for every index with N*pi_i >= floor."""
    obs = dense_counts(counts, pi.M)
    N = int(obs.sum()) if N is None else N
    expected = N * pi.weights
    keep = expected >= floor
    return np.column_stack([expected[keep], obs[keep].astype(np.float64)])


def scatter_csv(pairs: np.ndarray) -> str:
    buf = io.StringIO()
    buf.write("expected,observed\n")
    for e, o in pairs:
        buf.write(f"{e:.10g},{int(o)}\n")
    return buf.getvalue()
