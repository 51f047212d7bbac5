"""Prefix densities and finite-horizon upper/lower density estimates.

Counting is exact (integer) with one final division per prefix; limsup and
liminf are replaced by extrema over a declared tail window of prefixes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ParameterError, RangeError

DEFAULT_TAIL_FRACTION = 0.5


def tail_window_start(horizon: int, tail_fraction: float) -> int:
    """First prefix length n of the tail window [ceil(tf*H), H]."""
    if not 0.0 < tail_fraction < 1.0:
        raise ParameterError(f"tail_fraction must lie in (0,1), got {tail_fraction}")
    return max(1, math.ceil(tail_fraction * horizon))


@dataclass(frozen=True)
class IndexSet:
    """Strictly increasing natural numbers below a declared horizon."""

    indices: np.ndarray
    horizon: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "indices", idx)
        if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 0):
            raise ParameterError("indices must be strictly increasing naturals")
        if self.horizon < 0 or (idx.size and idx[-1] >= self.horizon):
            raise ParameterError("all indices must be < horizon")

    @classmethod
    def from_iterable(cls, indices, horizon: int) -> "IndexSet":
        return cls(np.unique(np.asarray(sorted(indices), dtype=np.int64)), horizon)

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "IndexSet":
        return cls(np.flatnonzero(np.asarray(mask, dtype=bool)), len(mask))

    def __len__(self) -> int:
        return int(self.indices.size)

    def __contains__(self, j: int) -> bool:
        pos = np.searchsorted(self.indices, j)
        return pos < self.indices.size and self.indices[pos] == j

    def mask(self) -> np.ndarray:
        out = np.zeros(self.horizon, dtype=bool)
        out[self.indices] = True
        return out

    def complement(self) -> "IndexSet":
        return IndexSet.from_mask(~self.mask())

    def count_below(self, n: int) -> int:
        """|A ∩ [0, n)| by binary search."""
        return int(np.searchsorted(self.indices, n, side="left"))

    def to_list(self) -> list[int]:
        return [int(j) for j in self.indices]


def prefix_density(A: IndexSet, n: int) -> float:
    """|A ∩ [0,n)| / n with exact counting; defined as 0 at n = 0."""
    if n < 0 or n > A.horizon:
        raise RangeError(f"prefix length {n} outside [0, {A.horizon}]")
    if n == 0:
        return 0.0
    return A.count_below(n) / n


def prefix_density_exact(A: IndexSet, n: int) -> Fraction:
    """Rational-valued prefix density, for exactness-sensitive checks."""
    if n < 0 or n > A.horizon:
        raise RangeError(f"prefix length {n} outside [0, {A.horizon}]")
    if n == 0:
        return Fraction(0)
    return Fraction(A.count_below(n), n)


def _prefix_density_curve(A: IndexSet, n_lo: int, n_hi: int) -> np.ndarray:
    ns = np.arange(n_lo, n_hi + 1, dtype=np.int64)
    counts = np.searchsorted(A.indices, ns, side="left")
    return counts / ns


def _density_extremum(A: IndexSet, tail_fraction: float, mode: str) -> float:
    if A.horizon < 10:
        raise ParameterError(f"density estimates need horizon >= 10, got {A.horizon}")
    n_lo = tail_window_start(A.horizon, tail_fraction)
    if n_lo > A.horizon:
        raise ParameterError("tail window is empty")
    curve = _prefix_density_curve(A, n_lo, A.horizon)
    return float(curve.max() if mode == "max" else curve.min())


def upper_density_estimate(A: IndexSet, tail_fraction: float = DEFAULT_TAIL_FRACTION) -> float:
    """Finite surrogate of the upper density: max prefix density over the tail window."""
    return _density_extremum(A, tail_fraction, "max")


def lower_density_estimate(A: IndexSet, tail_fraction: float = DEFAULT_TAIL_FRACTION) -> float:
    """Finite surrogate of the lower density: min prefix density over the tail window."""
    return _density_extremum(A, tail_fraction, "min")


def in_M_alpha(A: IndexSet, alpha: float, tail_fraction: float = DEFAULT_TAIL_FRACTION) -> bool:
    """Membership in the family of sets with lower density exceeding alpha."""
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0,1), got {alpha}")
    return lower_density_estimate(A, tail_fraction) > alpha
