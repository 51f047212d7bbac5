"""The worked unit-disk system: swap and halving maps under the alternating word.

Tracking errors against any true orbit obey per-step recurrences (a swap
step preserves the gap, a halving step halves it), which sum to the
executable bound lhs(n) <= 4(M + sum of step errors).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import DEFAULT_TAIL_FRACTION, IndexSet
from .dynamics import GeneratorFamily, GeneratorMap, MetricSpace, Word, as_point, orbit
from .errors import ParameterError, PreconditionError
from .pseudo_orbits import JumpRule, PseudoOrbit, is_asymptotic_average, make_corrupted_orbit

TRACKING_TOL = 1e-9


def build_disk_system() -> tuple[GeneratorFamily, Word]:
    """Closed unit disk with f_1 = coordinate swap, f_2 = halving, word 1,2,1,2,…"""
    space = MetricSpace.unit_disk()
    family = GeneratorFamily(space, (GeneratorMap.permutation((1, 0)),
                                     GeneratorMap.scale((0.5, 0.5))))
    return family, Word.periodic((1, 2), m=2)


@dataclass(frozen=True)
class DiskExampleInstance:
    """A pseudo-orbit on the disk system, a true-orbit start, and the derived data."""

    xi: PseudoOrbit
    start: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start", as_point(self.start, 2))
        family, word = build_disk_system()
        if self.xi.family.spec() != family.spec():
            raise ParameterError("instance requires the swap/halving disk family")
        symbols = self.xi.word.symbols(self.xi.horizon)
        expected = word.symbols(self.xi.horizon)
        if not np.array_equal(symbols, expected):
            raise ParameterError("instance requires the alternating word 1,2,1,2,…")
        if not self.xi.family.space.contains(self.start):
            raise ParameterError("start must lie in the unit disk")

    @property
    def alphas(self) -> np.ndarray:
        return self.xi.step_errors

    @property
    def M(self) -> float:
        return self.xi.family.space.distance(self.start, self.xi.points[0])

    def true_orbit_points(self) -> np.ndarray:
        return orbit(self.xi.family, self.xi.word, self.start, self.xi.horizon + 1)

    def tracking_errors(self) -> np.ndarray:
        """d((a_i, b_i), (x_i, y_i)) along the whole horizon."""
        return self.xi.family.space.distance_batch(self.true_orbit_points(), self.xi.points)


def make_decaying_instance(seed: int, horizon: int, scale: float = 1.0, power: float = 2.0,
                           start=None, x0=None) -> DiskExampleInstance:
    """Seeded instance with per-step corruption of size scale/(i+1)^power.

    The true-orbit start defaults to x_0 (which makes M = 0); pass a
    different start to exercise the M term.
    """
    family, word = build_disk_system()
    rng = np.random.default_rng(seed)
    z = family.space.sample(rng) if x0 is None else as_point(x0, 2)
    all_indices = IndexSet.from_iterable(range(horizon), horizon)
    xi = make_corrupted_orbit(family, word, z, all_indices,
                              JumpRule("offset", scale=scale, power=power), seed)
    return DiskExampleInstance(xi, xi.points[0] if start is None else start)


def tracking_inequality_curve(instance: DiskExampleInstance):
    """(lhs(n), rhs(n)) for every prefix n, plus the all-prefixes verdict.

    lhs(n) sums tracking errors below n; rhs(n) = 4(M + sum of step
    errors below n).
    """
    H = instance.xi.horizon
    lhs = np.cumsum(instance.tracking_errors())
    alpha_partial = np.concatenate(([0.0], np.cumsum(instance.alphas)))
    rhs = 4.0 * (instance.M + alpha_partial[np.minimum(np.arange(1, H + 2), H)])
    verdict = bool(np.all(lhs <= rhs + TRACKING_TOL))
    return lhs, rhs, verdict


def tracking_inequality_check(instance: DiskExampleInstance, n: int):
    """Compare lhs(n) with 4(M + sum_{i<n} alpha_i) at a single prefix."""
    if not 1 <= n <= instance.xi.horizon + 1:
        raise ParameterError(f"n must lie in [1, {instance.xi.horizon + 1}]")
    lhs, rhs, _ = tracking_inequality_curve(instance)
    return float(lhs[n - 1]), float(rhs[n - 1]), bool(lhs[n - 1] <= rhs[n - 1] + TRACKING_TOL)


def step_recurrence_holds(instance: DiskExampleInstance, tol: float = 1e-12) -> bool:
    """d_{k+1} <= alpha_k + d_k after swaps, <= alpha_k + d_k / 2 after halvings."""
    d = instance.tracking_errors()
    symbols = instance.xi.word.symbols(instance.xi.horizon)
    prev = d[:-1].copy()
    prev[symbols == 2] /= 2.0
    return bool(np.all(d[1:] <= instance.alphas + prev + tol))


def aasp_demo(instance: DiskExampleInstance, tail_fraction: float = DEFAULT_TAIL_FRACTION,
              asymptotic_tol: float = 0.01, checkpoints=(1_000, 10_000)) -> dict:
    """Show tracking prefix means driven to zero by the summed bound.

    Requires the instance's pseudo-orbit to pass the asymptotic-average
    verdict at the configured tolerance; rejected with that witness
    otherwise.
    """
    gate = is_asymptotic_average(instance.xi, asymptotic_tol, tail_fraction)
    if not gate:
        raise PreconditionError("instance is not an asymptotic average pseudo-orbit "
                                f"at tol={asymptotic_tol}", witness=gate.witness)
    lhs, rhs, verdict = tracking_inequality_curve(instance)
    ns = np.arange(1, len(lhs) + 1)
    means = lhs / ns
    bound = rhs / ns
    rows = []
    for n in checkpoints:
        if n <= len(lhs):
            rows.append({"n": int(n), "tracking_mean": float(means[n - 1]),
                         "bound": float(bound[n - 1]),
                         "below_bound": bool(means[n - 1] <= bound[n - 1] + TRACKING_TOL)})
    return {"M": instance.M, "checkpoints": rows,
            "tracking_mean_final": float(means[-1]),
            "bound_final": float(bound[-1]),
            "all_prefixes_bounded": verdict,
            "params": {"tail_fraction": tail_fraction, "asymptotic_tol": asymptotic_tol,
                       "horizon": instance.xi.horizon}}
