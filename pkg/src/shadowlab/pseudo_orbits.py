"""Construction and finite-horizon classification of pseudo-orbit types.

A pseudo-orbit is a point sequence x_0..x_H whose step errors
e_j = d(f_{w_j}(x_j), x_{j+1}) are controlled pointwise, in density, in
sliding-window means, or in Cesàro means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .density import (
    DEFAULT_TAIL_FRACTION,
    IndexSet,
    tail_window_start,
    upper_density_estimate,
)
from .dynamics import GeneratorFamily, Word, as_point, orbit
from .errors import DomainError, ParameterError, ResourceCapError
from .verdict import ClassificationVerdict

DEFAULT_PAIR_BUDGET = 200_000_000
DEFAULT_DENSITY_TOL = 0.01


def recompute_step_errors(family: GeneratorFamily, word: Word, points: np.ndarray) -> np.ndarray:
    """e_j = d(f_{w_j}(x_j), x_{j+1}), vectorized by grouping steps per symbol."""
    H = len(points) - 1
    symbols = word.symbols(H)
    images = np.empty((H, family.space.dimension), dtype=np.float64)
    for s in np.unique(symbols):
        idx = np.flatnonzero(symbols == s)
        images[idx] = family.apply_batch(int(s), points[idx])
    return family.space.distance_batch(images, points[1:])


@dataclass(frozen=True)
class PseudoOrbit:
    """Finite point sequence with cached per-step jump errors."""

    family: GeneratorFamily
    word: Word
    points: np.ndarray
    step_errors: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "step_errors", np.asarray(self.step_errors, dtype=np.float64))
        if pts.ndim != 2 or pts.shape[1] != self.family.space.dimension:
            raise DomainError("points must be an (H+1, dim) array matching the space")
        if len(self.step_errors) != len(pts) - 1:
            raise DomainError("step_errors must have one entry per step")
        if not bool(np.all(self.family.space.contains_batch(pts))):
            bad = int(np.flatnonzero(~self.family.space.contains_batch(pts))[0])
            raise DomainError(f"point {bad} is outside the {self.family.space.kind} space")

    @classmethod
    def from_points(cls, family: GeneratorFamily, word: Word, points,
                    meta: dict | None = None) -> "PseudoOrbit":
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        errors = recompute_step_errors(family, word, pts)
        return cls(family, word, pts, errors, meta or {})

    @property
    def horizon(self) -> int:
        return len(self.step_errors)

    def recompute_errors(self) -> np.ndarray:
        return recompute_step_errors(self.family, self.word, self.points)

    def cache_consistent(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.recompute_errors() - self.step_errors), initial=0.0) <= tol)

    def exceptional_set(self, delta: float) -> IndexSet:
        """Indices whose step error reaches delta."""
        return IndexSet.from_mask(self.step_errors >= delta)


def true_orbit(family: GeneratorFamily, word: Word, z, horizon: int) -> PseudoOrbit:
    """The zero-error pseudo-orbit: the actual orbit of z for `horizon` steps."""
    pts = orbit(family, word, z, horizon + 1)
    return PseudoOrbit(family, word, pts, np.zeros(horizon), {"kind": "true-orbit"})


# ---------------------------------------------------------------------------
# Classification


def is_pseudo_orbit(xi: PseudoOrbit, delta: float) -> ClassificationVerdict:
    """Every step error below delta."""
    if delta <= 0:
        raise ParameterError("delta must be positive")
    viol = np.flatnonzero(xi.step_errors >= delta)
    params = {"delta": delta, "horizon": xi.horizon}
    if viol.size:
        j = int(viol[0])
        witness = {"index": j, "step_error": float(xi.step_errors[j])}
        return ClassificationVerdict("pseudo-orbit", False, witness, params)
    return ClassificationVerdict("pseudo-orbit", True, None, params)


def is_ergodic_pseudo_orbit(xi: PseudoOrbit, delta: float,
                            density_tol: float = DEFAULT_DENSITY_TOL,
                            tail_fraction: float = DEFAULT_TAIL_FRACTION) -> ClassificationVerdict:
    """Step errors reach delta only on a set of (estimated) density <= density_tol."""
    if delta <= 0 or density_tol < 0:
        raise ParameterError("delta must be positive and density_tol nonnegative")
    exceptional = xi.exceptional_set(delta)
    est = upper_density_estimate(exceptional, tail_fraction)
    params = {"delta": delta, "density_tol": density_tol, "horizon": xi.horizon,
              "tail_fraction": tail_fraction}
    ok = est <= density_tol
    witness = None if ok else {"exceptional_density": est, "exceptional_count": len(exceptional),
                               "first_indices": exceptional.to_list()[:8]}
    return ClassificationVerdict("ergodic-pseudo-orbit", ok, witness, params)


def _full_scan_pairs(horizon: int, N: int) -> int:
    span = horizon - N + 1
    return span * (span + 1) // 2 if span > 0 else 0


def _window_lengths(horizon: int, N: int, mode: str) -> list[int]:
    if mode == "full":
        return list(range(N, horizon + 1))
    lengths = []
    n = N
    while n <= horizon:
        lengths.append(n)
        n = max(n + 1, math.ceil(n * 1.1))
    if lengths and lengths[-1] != horizon:
        lengths.append(horizon)
    return lengths


def is_average_pseudo_orbit(xi: PseudoOrbit, delta: float, N: int, mode: str = "full",
                            pair_budget: int = DEFAULT_PAIR_BUDGET) -> ClassificationVerdict:
    """All sliding-window means of step errors with length >= N stay below delta.

    The full scan covers every (k, n) pair with prefix sums; the sampled
    mode (opt-in, labeled in the verdict) covers a geometric grid of
    window lengths with every start k.
    """
    if delta <= 0:
        raise ParameterError("delta must be positive")
    if not 1 <= N <= xi.horizon:
        raise ParameterError(f"N must lie in [1, horizon={xi.horizon}]")
    if mode not in ("full", "sampled"):
        raise ParameterError(f"unknown scan mode {mode!r}")
    if mode == "full" and _full_scan_pairs(xi.horizon, N) > pair_budget:
        raise ResourceCapError(
            f"full window scan needs {_full_scan_pairs(xi.horizon, N)} (k,n) pairs, "
            f"over the budget of {pair_budget}; request mode='sampled' explicitly",
            required_cap=_full_scan_pairs(xi.horizon, N),
        )
    S = np.concatenate(([0.0], np.cumsum(xi.step_errors)))
    worst = None
    candidates = []
    for n in _window_lengths(xi.horizon, N, mode):
        means = (S[n:] - S[: xi.horizon - n + 1]) / n
        bad = np.flatnonzero(means >= delta)
        if bad.size:
            k = int(bad[0])
            candidates.append((k, n, float(means[k])))
        top = float(means.max())
        if worst is None or top > worst:
            worst = top
    params = {"delta": delta, "N": N, "horizon": xi.horizon, "scan": mode,
              "max_window_mean": worst}
    if candidates:
        k, n, mean = min(candidates, key=lambda t: (t[0], t[1]))
        return ClassificationVerdict("average-pseudo-orbit", False,
                                     {"k": k, "n": n, "window_mean": mean}, params)
    return ClassificationVerdict("average-pseudo-orbit", True, None, params)


def _prefix_mean_curve(errors: np.ndarray) -> np.ndarray:
    return np.cumsum(errors) / np.arange(1, len(errors) + 1)


def is_weak_asymptotic_average(xi: PseudoOrbit, delta: float,
                               tail_fraction: float = DEFAULT_TAIL_FRACTION) -> ClassificationVerdict:
    """Tail-window prefix means of step errors stay below delta."""
    if delta <= 0:
        raise ParameterError("delta must be positive")
    n_lo = tail_window_start(xi.horizon, tail_fraction)
    curve = _prefix_mean_curve(xi.step_errors)
    tail = curve[n_lo - 1:]
    worst = int(np.argmax(tail))
    params = {"delta": delta, "horizon": xi.horizon, "tail_fraction": tail_fraction,
              "limsup_estimate": float(tail.max())}
    if tail.max() < delta:
        return ClassificationVerdict("weak-asymptotic-average-pseudo-orbit", True, None, params)
    witness = {"n": n_lo + worst, "prefix_mean": float(tail[worst])}
    return ClassificationVerdict("weak-asymptotic-average-pseudo-orbit", False, witness, params)


def is_asymptotic_average(xi: PseudoOrbit, tol: float,
                          tail_fraction: float = DEFAULT_TAIL_FRACTION) -> ClassificationVerdict:
    """Finite surrogate of Cesàro means of step errors tending to zero."""
    inner = is_weak_asymptotic_average(xi, tol, tail_fraction)
    return ClassificationVerdict("asymptotic-average-pseudo-orbit", inner.verdict,
                                 inner.witness, {**inner.params, "tol": tol})


# ---------------------------------------------------------------------------
# Corrupted-orbit factory


@dataclass(frozen=True)
class JumpRule:
    """Closed, serializable rule for where a corrupted step lands.

    kinds: "uniform" (seeded point of the space), "fixed" (constant target),
    "offset" (true image displaced by scale/(j+1)^power in a seeded direction).
    """

    kind: str
    point: tuple[float, ...] | None = None
    scale: float = 1.0
    power: float = 0.0

    def __post_init__(self):
        if self.kind not in ("uniform", "fixed", "offset"):
            raise ParameterError(f"unknown jump rule kind {self.kind!r}")
        if self.kind == "fixed" and self.point is None:
            raise ParameterError("fixed jump rule needs a target point")
        if self.kind == "offset" and self.scale <= 0:
            raise ParameterError("offset jump rule needs a positive scale")

    def spec(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.point is not None:
            out["point"] = list(self.point)
        if self.kind == "offset":
            out["scale"] = self.scale
            out["power"] = self.power
        return out

    @classmethod
    def from_spec(cls, spec: dict) -> "JumpRule":
        pt = spec.get("point")
        return cls(spec["kind"], point=None if pt is None else tuple(pt),
                   scale=spec.get("scale", 1.0), power=spec.get("power", 0.0))


def _jump_target(rule: JumpRule, family: GeneratorFamily, rng: np.random.Generator,
                 j: int, image: np.ndarray) -> tuple[np.ndarray, bool]:
    space = family.space
    if rule.kind == "uniform":
        return space.sample(rng), False
    if rule.kind == "fixed":
        raw = as_point(rule.point, space.dimension)
    else:
        u = rng.normal(size=space.dimension)
        norm = np.linalg.norm(u)
        u = u / norm if norm > 0 else np.eye(space.dimension)[0]
        raw = image + u * (rule.scale / (j + 1) ** rule.power)
    raw = space.canonical(raw)
    if space.contains(raw):
        return raw, False
    return space.project(raw), True


def make_corrupted_orbit(family: GeneratorFamily, word: Word, z,
                         corruption_indices: IndexSet, jump_rule: JumpRule,
                         seed: int) -> PseudoOrbit:
    """True orbit except at corrupted steps, where x_{j+1} follows the jump rule.

    Jumps that leave the space are clamped onto it; clamped indices are
    flagged in the metadata. Deterministic under the seed.
    """
    horizon = corruption_indices.horizon
    p = as_point(z, family.space.dimension)
    if not family.space.contains(p):
        raise DomainError(f"start {p.tolist()} is outside the {family.space.kind} space")
    rng = np.random.default_rng(seed)
    corrupted = corruption_indices.mask()
    points = np.empty((horizon + 1, family.space.dimension), dtype=np.float64)
    points[0] = p
    clamped: list[int] = []
    for j in range(horizon):
        image = family.apply(word.symbol_at(j), points[j])
        if corrupted[j]:
            target, was_clamped = _jump_target(jump_rule, family, rng, j, image)
            if was_clamped:
                clamped.append(j)
            points[j + 1] = target
        else:
            points[j + 1] = image
    meta = {"kind": "corrupted-orbit", "seed": seed, "jump_rule": jump_rule.spec(),
            "corrupted_count": len(corruption_indices), "clamped_indices": clamped}
    errors = recompute_step_errors(family, word, points)
    return PseudoOrbit(family, word, points, errors, meta)
