"""Monte Carlo harness: seeded replicate pipelines (generate, sample, estimate)
run over a process pool, with canonically ordered long and summary tables."""
from __future__ import annotations

import functools
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import estimators as est
from .errors import DimensionError, DomainError, ExperimentError, MissingInputError, XebStatsError
from .noise import (
    Basic,
    GeneralP,
    NoiseModel,
    ReadoutAsymmetric,
    ReadoutSymmetric,
    Sample,
    readout_constants,
    readout_noise_vector,
    sample_model,
)
from .probmodel import ProbabilityVector, SeedSpec, gen_porter_thomas, moments

BASIC_METHODS = ("U", "V", "LogU", "MLE", "T")
READOUT_METHODS = ("ReadoutMoment", "PhiRoTilde", "ReadoutMLE")
ALL_METHODS = BASIC_METHODS + READOUT_METHODS + ("AsymmetricMLE",)
NEEDS_PROBS = {"U", "V", "LogU", "MLE", "ReadoutMoment", "PhiRoTilde", "ReadoutMLE", "AsymmetricMLE"}
NEEDS_Q = set(READOUT_METHODS)
LARGE_N = 26
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def default_workers() -> int:
    env = os.environ.get("XEBSTATS_WORKERS")
    if env:
        try:
            val = int(env)
        except ValueError as exc:
            raise DomainError(f"XEBSTATS_WORKERS must be an integer, got {env!r}") from exc
        if val >= 1:
            return val
    return 1


def expand_methods(methods: Sequence[str], have_q: bool) -> List[str]:
    out = []
    for m in methods:
        if m == "all":
            out.extend(BASIC_METHODS)
            if have_q:
                out.extend(READOUT_METHODS)
        elif m in ALL_METHODS:
            out.append(m)
        else:
            raise DomainError(f"unknown method {m!r}; choose from {', '.join(ALL_METHODS)} or all")
    seen = set()
    return [m for m in out if not (m in seen or seen.add(m))]


def run_estimators(
    methods: Sequence[str],
    sample: Sample,
    pv: Optional[ProbabilityVector] = None,
    q: Optional[float] = None,
    v: Optional[ProbabilityVector] = None,
    cfg: Optional[est.MleConfig] = None,
) -> List[Tuple[str, est.Estimate]]:
    """Run each named estimator on one sample; returns (name, Estimate) pairs in order.

    Needs ``pv`` for everything except T, and ``q`` (or ``v``) for the readout estimators.
    """
    M = sample.M
    idx, cnt = sample.count_table()
    if pv is not None and pv.n != sample.n:
        raise DimensionError(f"sample has n={sample.n}, probabilities have n={pv.n}")
    w_tilde = None if pv is None else pv.weights[idx]
    out = []
    for m in methods:
        if m in NEEDS_PROBS and pv is None:
            raise MissingInputError(f"{m} requires full probability vector")
        if m in NEEDS_Q and v is None:
            if q is None:
                raise MissingInputError(f"{m} requires the readout flip probability q")
            v = readout_noise_vector(pv, q)
        if m == "U":
            e = est.estimator_U(w_tilde, M, cnt)
        elif m == "V":
            e = est.estimator_V(w_tilde, M, moments(pv).w2, cnt)
        elif m == "LogU":
            e = est.estimator_log(w_tilde, M, cnt)
        elif m == "MLE":
            e = est.mle_basic(w_tilde, M, cfg, cnt)
        elif m == "T":
            e = est.estimator_T(cnt, M, sample.total)
        elif m == "ReadoutMoment":
            e = est.estimator_readout_moment(w_tilde, v.weights[idx], pv, v, M, cnt)
        elif m == "PhiRoTilde":
            if q is None:
                raise MissingInputError("PhiRoTilde requires the readout flip probability q")
            W = est.estimator_W(v.weights[idx], M, cnt)
            e = est.estimator_phi_ro_tilde(W, readout_constants(sample.n, q, M))
        elif m == "ReadoutMLE":
            e = est.mle_readout(w_tilde, v.weights[idx], M, cfg, cnt)
        elif m == "AsymmetricMLE":
            e = est.mle_asymmetric((idx, cnt), pv, cfg)
        else:
            raise DomainError(f"unknown method {m!r}")
        out.append((m, e))
    return out


COMPONENT_NAMES = {
    "ReadoutMoment": ("phi", "phi_ro"),
    "ReadoutMLE": ("phi", "phi_ro"),
    "AsymmetricMLE": ("phi_g", "q1", "q2"),
}


def flatten(name: str, e: est.Estimate) -> List[Tuple[str, float]]:
    """Scalar rows for one estimate; vector values are split by component."""
    if name in COMPONENT_NAMES:
        return [(f"{name}:{c}", float(x)) for c, x in zip(COMPONENT_NAMES[name], np.ravel(e.value))]
    rows = [(name, float(e.value))]
    if name == "T":
        rows.append(("T2", float(e.aux["T2"])))
    return rows


@dataclass
class ExperimentConfig:
    n: int
    N: int
    model: NoiseModel
    estimators: Tuple[str, ...] = ("U", "V", "MLE")
    L: int = 1
    reps: int = 1
    base_seed: int = 0
    output: Optional[str] = None
    workers: int = 1
    pv_mode: str = "fresh"  # "fresh": new vector per replicate and file; "fixed": one vector throughout
    allow_large: bool = False

    def __post_init__(self):
        if self.reps < 1 or self.L < 1 or self.N < 1:
            raise DomainError("reps, L and N must be positive")
        if self.workers < 1:
            raise DomainError("workers must be at least 1")
        if self.pv_mode not in ("fresh", "fixed"):
            raise DomainError("pv_mode must be 'fresh' or 'fixed'")
        if isinstance(self.model, GeneralP):
            raise DomainError("the harness generates its own vectors; GeneralP is not supported")
        if self.n > LARGE_N and not self.allow_large:
            raise DomainError(f"n={self.n} exceeds {LARGE_N}; pass allow_large to proceed")
        self.estimators = tuple(self.estimators)
        if self.output is not None:
            parent = os.path.dirname(os.path.abspath(self.output))
            if not os.access(parent, os.W_OK):
                raise DomainError(f"output directory {parent} is not writable")

    def q(self) -> Optional[float]:
        return self.model.q if isinstance(self.model, ReadoutSymmetric) else None


@functools.lru_cache(maxsize=2)
def _fixed_pv(n: int, base_seed: int) -> ProbabilityVector:
    # the shared vector gets its own stream, disjoint from every replicate index
    return gen_porter_thomas(n, SeedSpec(base_seed, 2**62))


def _replicate(cfg: ExperimentConfig, rep: int, file: int) -> List[Tuple[int, int, str, float]]:
    stream = rep * cfg.L + file
    seed = SeedSpec(cfg.base_seed, stream)
    try:
        pv = _fixed_pv(cfg.n, cfg.base_seed) if cfg.pv_mode == "fixed" else gen_porter_thomas(cfg.n, seed)
        sample = sample_model(cfg.model, pv, cfg.N, seed)
        v = readout_noise_vector(pv, cfg.model.q) if isinstance(cfg.model, ReadoutSymmetric) else None
        results = run_estimators(cfg.estimators, sample, pv, cfg.q(), v)
    except XebStatsError as exc:
        raise ExperimentError(
            f"replicate {rep}, file {file} (base_seed={cfg.base_seed}, stream_index={stream}) failed: "
            f"{type(exc).__name__}: {exc}"
        ) from exc
    rows = []
    for name, e in results:
        for label, value in flatten(name, e):
            rows.append((rep, file, label, value))
    return rows


def _replicate_star(args):
    return _replicate(*args)


@dataclass
class MonteCarloResult:
    config: ExperimentConfig
    rows: List[Tuple[int, int, str, float]]
    methods: List[str] = field(default_factory=list)

    def values(self, method: str) -> np.ndarray:
        """(reps, L) array of one method's values."""
        out = np.full((self.config.reps, self.config.L), np.nan)
        for r, f, m, v in self.rows:
            if m == method:
                out[r, f] = v
        return out

    def file_means(self, method: str) -> np.ndarray:
        return self.values(method).mean(axis=1)

    def summary(self) -> List[dict]:
        out = []
        for m in self.methods:
            x = self.file_means(m)
            q = np.quantile(x, QUANTILES)
            out.append({
                "method": m,
                "reps": int(x.size),
                "mean": float(x.mean()),
                "sd": float(x.std(ddof=1)) if x.size > 1 else 0.0,
                **{f"q{int(round(p * 100)):02d}": float(v) for p, v in zip(QUANTILES, q)},
            })
        return out

    def long_csv(self) -> str:
        buf = io.StringIO()
        buf.write("rep,file,method,value\n")
        for r, f, m, v in self.rows:
            buf.write(f"{r},{f},{m},{v!r}\n")
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        rows = self.summary()
        keys = list(rows[0].keys()) if rows else ["method"]
        buf.write(",".join(keys) + "\n")
        for row in rows:
            buf.write(",".join(str(row[k]) if isinstance(row[k], str) else repr(row[k]) for k in keys) + "\n")
        return buf.getvalue()

    def to_json_obj(self) -> dict:
        c = self.config
        return {
            "config": {
                "n": c.n, "N": c.N, "L": c.L, "reps": c.reps, "base_seed": c.base_seed,
                "model": {"type": type(c.model).__name__, **c.model.__dict__},
                "estimators": list(c.estimators), "pv_mode": c.pv_mode,
            },
            "summary": self.summary(),
            "rows": [{"rep": r, "file": f, "method": m, "value": v} for r, f, m, v in self.rows],
        }


def run_mc(cfg: ExperimentConfig) -> MonteCarloResult:
    """Run reps x L independent pipelines; output order does not depend on workers."""
    tasks = [(cfg, r, f) for r in range(cfg.reps) for f in range(cfg.L)]
    if cfg.workers == 1 or len(tasks) == 1:
        chunks = [_replicate(*t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(tasks))) as pool:
            chunks = list(pool.map(_replicate_star, tasks))
    rows = [row for chunk in chunks for row in chunk]
    order = []
    for _, _, m, _ in rows:
        if m not in order:
            order.append(m)
    rank = {m: i for i, m in enumerate(order)}
    rows.sort(key=lambda t: (t[0], t[1], rank[t[2]]))
    return MonteCarloResult(cfg, rows, order)
