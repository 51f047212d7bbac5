"""Stitching pseudo-orbit blocks into one long sequence, with an audit.

Blocks of increasing quality are laid end to end; the only uncontrolled
step errors are the one-per-junction jumps, so prefix means at block
boundaries are driven down by later, longer, better blocks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, PreconditionError
from .pseudo_orbits import PseudoOrbit, recompute_step_errors
from .dynamics import Word
from .verdict import ClassificationVerdict

GROWTH_CAP = 20
GROWTH_RATIO = 8.0


@dataclass(frozen=True)
class BlockPlan:
    """Blocks plus their quality levels and cumulative offsets.

    Block k (1-indexed) has m_k + 1 points and must keep its prefix mean
    errors below 1/k for all prefix lengths >= N_k. Offsets satisfy
    M_0 = 0, M_n = sum of (m_i + 1) for i <= n.
    """

    blocks: tuple[PseudoOrbit, ...]
    N_levels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "N_levels", tuple(int(n) for n in self.N_levels))
        if not self.blocks:
            raise ParameterError("a block plan needs at least one block")
        if len(self.N_levels) != len(self.blocks):
            raise ParameterError("one quality level N_k per block is required")
        space = self.blocks[0].family.space
        for k, (block, N) in enumerate(zip(self.blocks, self.N_levels), start=1):
            if block.horizon < 1:
                raise ParameterError(f"block {k} needs at least 2 points")
            if not 1 <= N <= block.horizon:
                raise ParameterError(f"N_{k}={N} must lie in [1, m_{k}={block.horizon}]")
            if block.family.space != space:
                raise ParameterError("all blocks must share one space")
        for n in range(1, len(self.blocks) + 1):
            if self.offsets[n] > (n + 1) * self.block_lengths[n - 1]:
                raise ParameterError(
                    f"offset M_{n}={self.offsets[n]} exceeds (n+1)*m_n="
                    f"{(n + 1) * self.block_lengths[n - 1]}; blocks must not shrink")

    @property
    def block_lengths(self) -> list[int]:
        return [b.horizon for b in self.blocks]

    @property
    def offsets(self) -> list[int]:
        out = [0]
        for m in self.block_lengths:
            out.append(out[-1] + m + 1)
        return out

    def growth_floor(self, k: int, cap: int = GROWTH_CAP, ratio: float = GROWTH_RATIO) -> int:
        """Desk-scale floor for m_k (1-indexed block)."""
        floor = 1
        if k < len(self.N_levels):
            floor = max(floor, 2 ** min(self.N_levels[k], cap))
        if k >= 2:
            floor = max(floor, int(np.ceil(ratio * self.offsets[k - 1])))
        return floor

    def growth_floor_report(self, cap: int = GROWTH_CAP, ratio: float = GROWTH_RATIO) -> list[dict]:
        lengths = self.block_lengths
        return [{"block": k, "m": lengths[k - 1],
                 "floor": self.growth_floor(k, cap, ratio),
                 "ok": lengths[k - 1] >= self.growth_floor(k, cap, ratio)}
                for k in range(1, len(self.blocks) + 1)]


def concatenate(plan: BlockPlan, word: Word) -> PseudoOrbit:
    """Lay the blocks end to end against the given word.

    Each block must be a pseudo-orbit for the word shifted to its own
    offset, with prefix mean errors below 1/k beyond N_k; junction step
    errors are recorded separately in the metadata.
    """
    offsets = plan.offsets
    family = plan.blocks[0].family
    for k, (block, N) in enumerate(zip(plan.blocks, plan.N_levels), start=1):
        shifted = word.shifted(offsets[k - 1])
        errors = recompute_step_errors(family, shifted, block.points)
        if float(np.max(np.abs(errors - block.step_errors))) > 1e-12:
            raise PreconditionError(
                f"block {k} is not a pseudo-orbit for the word shifted by {offsets[k - 1]}",
                witness={"block": k, "offset": offsets[k - 1],
                         "max_error_mismatch": float(np.max(np.abs(errors - block.step_errors)))})
        means = np.cumsum(errors) / np.arange(1, len(errors) + 1)
        over = np.flatnonzero(means[N - 1:] >= 1.0 / k)
        if over.size:
            n = N + int(over[0])
            raise PreconditionError(
                f"block {k} has prefix mean {means[n - 1]:.6g} >= 1/{k} at length {n}",
                witness={"block": k, "n": n, "prefix_mean": float(means[n - 1])})

    points = np.concatenate([b.points for b in plan.blocks], axis=0)
    errors = recompute_step_errors(family, word, points)
    junction_indices = [offsets[k] - 1 for k in range(1, len(plan.blocks))]
    meta = {"kind": "concatenation", "offsets": offsets,
            "junction_indices": junction_indices,
            "junction_errors": [float(errors[i]) for i in junction_indices]}
    return PseudoOrbit(family, word, points, errors, meta)


def _sample_grid(offsets: list[int], horizon: int) -> list[int]:
    js = {1, horizon}
    for n in range(1, len(offsets)):
        js.add(offsets[n])
        lo, hi = offsets[n - 1], offsets[n]
        for q in (1, 2, 3):
            js.add(lo + (hi - lo) * q // 4)
    return sorted(j for j in js if 1 <= j <= horizon)


def asymptotic_certificate(xi: PseudoOrbit, plan: BlockPlan,
                           tol: float = 1e-9) -> ClassificationVerdict:
    """Check the three-part split of prefix sums and the per-boundary targets.

    The split (interior block sums + junction sum + tail partial block)
    must reproduce each sampled prefix sum; the boundary report states
    whether the prefix mean at each M_n falls below 1/n, which is a
    heuristic reading of the asymptotic claim at finite horizon.
    """
    offsets = plan.offsets
    if len(xi.points) != offsets[-1]:
        raise ParameterError(
            f"sequence has {len(xi.points)} points, plan expects {offsets[-1]}")
    for k, block in enumerate(plan.blocks, start=1):
        if not np.array_equal(xi.points[offsets[k - 1]:offsets[k]], block.points):
            raise ParameterError(f"sequence does not match block {k} of the plan")

    H = xi.horizon
    e = xi.step_errors
    S = np.concatenate(([0.0], np.cumsum(e)))
    junction_indices = [offsets[k] - 1 for k in range(1, len(plan.blocks))]

    split_records = []
    max_dev = 0.0
    for j in _sample_grid(offsets, H):
        completed = [k for k in range(1, len(plan.blocks) + 1) if offsets[k] <= j]
        n = len(completed)
        interior = sum(float(S[offsets[k] - 1] - S[offsets[k - 1]]) for k in completed)
        junction = sum(float(e[i]) for i in junction_indices[:n])
        tail = float(S[j] - S[offsets[n]])
        direct = float(S[j])
        dev = abs(interior + junction + tail - direct)
        max_dev = max(max_dev, dev)
        split_records.append({"j": j, "completed_blocks": n, "interior": interior,
                              "junction": junction, "tail": tail, "direct": direct,
                              "deviation": dev})

    boundary_records = []
    for n in range(1, len(plan.blocks) + 1):
        Mn = offsets[n]
        j = min(Mn, H)
        mean = float(S[j] / j)
        boundary_records.append({"n": n, "M_n": Mn, "prefix_mean": mean,
                                 "target": 1.0 / n, "below_target": mean < 1.0 / n,
                                 "junction_share": sum(float(e[i]) for i in junction_indices[:n - 1]) / j})

    ok = max_dev <= tol
    params = {"tol": tol, "horizon": H, "split_records": split_records,
              "boundary_records": boundary_records,
              "growth_floor": plan.growth_floor_report(),
              "note": "boundary targets are heuristic at finite horizon"}
    witness = None
    if not ok:
        worst = max(split_records, key=lambda r: r["deviation"])
        witness = {"j": worst["j"], "deviation": worst["deviation"]}
    return ClassificationVerdict("concatenation-decomposition", ok, witness, params)
