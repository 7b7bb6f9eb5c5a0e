"""Walker/Vose alias tables for O(1) categorical draws."""
import numba
import numpy as np


@numba.njit(cache=True)
def _build(p, prob, alias, small, large):
    m = p.shape[0]
    ns = 0
    nl = 0
    for i in range(m):
        prob[i] = p[i] * m
        if prob[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        g = large[nl - 1]
        alias[s] = g
        prob[g] = (prob[g] + prob[s]) - 1.0
        if prob[g] < 1.0:
            nl -= 1
            small[ns] = g
            ns += 1
    # leftovers are 1 up to rounding
    for i in range(nl):
        prob[large[i]] = 1.0
    for i in range(ns):
        prob[small[i]] = 1.0


class AliasTable:
    """Alias table over ``len(p)`` outcomes; O(M) build, O(1) per draw.

    Each draw consumes one bounded integer (the column) and one uniform (the coin),
    taken as two whole arrays from the generator in that order.
    """

    def __init__(self, p: np.ndarray):
        p = np.ascontiguousarray(p, dtype=np.float64)
        m = p.size
        itype = np.int32 if m < 2**31 else np.int64
        self.prob = np.empty(m, dtype=np.float64)
        self.alias = np.arange(m, dtype=itype)
        small = np.empty(m, dtype=itype)
        large = np.empty(m, dtype=itype)
        # normalise away rounding in the input so the columns average to one
        _build(p / p.sum(), self.prob, self.alias, small, large)
        del small, large
        # zero-probability outcomes must never be returned
        dead = p == 0.0
        if dead.any():
            self.prob[dead] = 0.0
            orphan = dead & (self.alias == np.arange(m))
            self.alias[orphan] = int(np.argmax(p))

    def __len__(self):
        return self.prob.size

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        cols = rng.integers(0, self.prob.size, size=size)
        coins = rng.random(size)
        return np.where(coins < self.prob[cols], cols, self.alias[cols]).astype(np.int64)
