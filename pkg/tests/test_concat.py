import numpy as np
import pytest

from shadowlab import (
    BlockPlan,
    GeneratorFamily,
    GeneratorMap,
    MetricSpace,
    ParameterError,
    PreconditionError,
    PseudoOrbit,
    Word,
    asymptotic_certificate,
    build_disk_system,
    concatenate,
    true_orbit,
)


def interval_identity():
    space = MetricSpace.box([0.0], [1.0])
    return GeneratorFamily(space, (GeneratorMap.identity(),)), Word.constant(1, m=1)


def zigzag_block(family, word, steps, err, start=0.0):
    """Identity-family block alternating start/start+err: every step error is err."""
    pts = [start + (err if j % 2 else 0.0) for j in range(steps + 1)]
    return PseudoOrbit.from_points(family, word, np.array(pts))


def derived_three_block_plan():
    """Block lengths 8, 64, 1024 with per-block mean errors just under 1, 1/2, 1/3."""
    family, word = interval_identity()
    blocks = tuple(zigzag_block(family, word, m, 0.999 / k)
                   for k, m in enumerate((8, 64, 1024), start=1))
    return BlockPlan(blocks, (1, 1, 1)), word


def test_single_true_orbit_block_passthrough():
    family, word = build_disk_system()
    block = true_orbit(family, word, (0.5, 0.2), 20)
    plan = BlockPlan((block,), (1,))
    xi = concatenate(plan, word)
    assert np.array_equal(xi.points, block.points)
    assert xi.meta["junction_indices"] == []
    assert np.all(xi.step_errors == 0.0)


def test_two_identical_blocks_single_junction():
    space = MetricSpace.unit_disk()
    family = GeneratorFamily(space, (GeneratorMap.permutation((1, 0)),))
    word = Word.constant(1, m=1)
    block = true_orbit(family, word, (0.8, 0.1), 10)
    plan = BlockPlan((block, block), (1, 1))
    xi = concatenate(plan, word)
    junction = 10
    expected = space.distance(family.apply(1, block.points[-1]), block.points[0])
    nonzero = np.flatnonzero(xi.step_errors > 1e-15)
    assert list(nonzero) == [junction]
    assert xi.step_errors[junction] == pytest.approx(expected)


def test_three_block_prefix_means_decrease():
    plan, word = derived_three_block_plan()
    xi = concatenate(plan, word)
    offsets = plan.offsets
    # Oracle: direct summation, no prefix-sum shortcut.
    means = [sum(float(v) for v in xi.step_errors[:Mn]) / Mn for Mn in offsets[1:]]
    assert means[0] > means[1] > means[2]
    assert means[0] == pytest.approx(8 * 0.999 / 9, abs=1e-12)
    assert means[1] == pytest.approx((8 * 0.999 + 64 * 0.4995) / 74, abs=1e-12)


def test_concatenate_rejects_wrong_shift():
    space = MetricSpace.box([0.0], [1.0])
    family = GeneratorFamily(space, (GeneratorMap.identity(), GeneratorMap.scale([0.5])))
    word = Word.periodic((1, 2), m=2)
    block1 = true_orbit(family, word, [0.8], 4)
    unshifted = true_orbit(family, word, [0.6], 4)  # built against the start of the word
    plan = BlockPlan((block1, unshifted), (1, 1))
    with pytest.raises(PreconditionError) as err:
        concatenate(plan, word)
    assert err.value.witness["block"] == 2


def test_concatenate_accepts_correct_shift():
    space = MetricSpace.box([0.0], [1.0])
    family = GeneratorFamily(space, (GeneratorMap.identity(), GeneratorMap.scale([0.5])))
    word = Word.periodic((1, 2), m=2)
    block1 = true_orbit(family, word, [0.8], 4)
    block2 = true_orbit(family, word.shifted(5), [0.6], 4)
    xi = concatenate(BlockPlan((block1, block2), (1, 1)), word)
    assert len(xi.points) == 10
    interior = np.delete(xi.step_errors, 4)
    assert np.all(interior <= 1e-15)


def test_concatenate_rejects_poor_quality_block():
    family, word = interval_identity()
    bad = zigzag_block(family, word, 10, 1.0)  # prefix means equal 1, not < 1/1
    plan = BlockPlan((bad,), (1,))
    with pytest.raises(PreconditionError) as err:
        concatenate(plan, word)
    assert err.value.witness["block"] == 1


def test_block_plan_offsets_and_validation():
    plan, _ = derived_three_block_plan()
    assert plan.offsets == [0, 9, 74, 1099]
    for n in range(1, 4):
        assert plan.offsets[n] <= (n + 1) * plan.block_lengths[n - 1]


def test_block_plan_rejects_shrinking_blocks():
    family, word = interval_identity()
    big = zigzag_block(family, word, 100, 0.5)
    tiny = zigzag_block(family, word, 1, 0.25)
    with pytest.raises(ParameterError):
        BlockPlan((big, tiny), (1, 1))


# ---------------------------------------------------------------------------
# asymptotic_certificate


def test_certificate_single_block_all_parts_zero():
    family, word = build_disk_system()
    block = true_orbit(family, word, (0.3, 0.3), 30)
    plan = BlockPlan((block,), (1,))
    xi = concatenate(plan, word)
    cert = asymptotic_certificate(xi, plan)
    assert cert
    for rec in cert.params["split_records"]:
        assert rec["interior"] == 0.0 and rec["junction"] == 0.0 and rec["tail"] == 0.0


def test_certificate_split_matches_direct_sums():
    plan, word = derived_three_block_plan()
    xi = concatenate(plan, word)
    cert = asymptotic_certificate(xi, plan)
    assert cert
    for rec in cert.params["split_records"]:
        direct = float(np.sum(xi.step_errors[:rec["j"]]))
        assert rec["interior"] + rec["junction"] + rec["tail"] == pytest.approx(direct, abs=1e-9)


def test_certificate_junction_count_is_block_count():
    plan, word = derived_three_block_plan()
    xi = concatenate(plan, word)
    cert = asymptotic_certificate(xi, plan)
    offsets = plan.offsets
    for rec in cert.params["split_records"]:
        n = rec["completed_blocks"]
        assert n == sum(1 for k in range(1, 4) if offsets[k] <= rec["j"])


def test_certificate_flags_growth_floor_violation():
    family, word = interval_identity()
    blocks = tuple(zigzag_block(family, word, m, 0.999 / k)
                   for k, m in enumerate((8, 16, 32), start=1))
    plan = BlockPlan(blocks, (1, 1, 1))
    xi = concatenate(plan, word)
    cert = asymptotic_certificate(xi, plan)
    floor = cert.params["growth_floor"]
    assert not all(rec["ok"] for rec in floor)
    failing = [rec["n"] for rec in cert.params["boundary_records"] if not rec["below_target"]]
    assert failing  # the certificate names the failing boundary targets


def test_certificate_targets_pass_for_well_grown_plan():
    family, word = interval_identity()
    blocks = tuple(zigzag_block(family, word, m, 0.4 / k)
                   for k, m in enumerate((4, 48, 512), start=1))
    plan = BlockPlan(blocks, (1, 1, 1))
    assert all(rec["ok"] for rec in plan.growth_floor_report())
    xi = concatenate(plan, word)
    cert = asymptotic_certificate(xi, plan)
    assert all(rec["below_target"] for rec in cert.params["boundary_records"])


def test_certificate_rejects_mismatched_sequence():
    plan, word = derived_three_block_plan()
    xi = concatenate(plan, word)
    tampered = PseudoOrbit(xi.family, xi.word, xi.points[:-1], xi.step_errors[:-1], xi.meta)
    with pytest.raises(ParameterError):
        asymptotic_certificate(tampered, plan)


def test_certificate_three_term_boundary_bound():
    # For a floor-satisfying plan, the mean at each boundary M_n splits into
    # last-block mass (< 1/n), earlier-block mass (<= M_{n-1}/M_n), and
    # junction mass, each bounded separately.
    family, word = interval_identity()
    blocks = tuple(zigzag_block(family, word, m, 0.4 / k)
                   for k, m in enumerate((4, 48, 512), start=1))
    plan = BlockPlan(blocks, (1, 1, 1))
    xi = concatenate(plan, word)
    offsets = plan.offsets
    e = xi.step_errors
    junctions = [offsets[k] - 1 for k in range(1, len(blocks))]
    for n in range(1, len(blocks) + 1):
        Mn = min(offsets[n], len(e))
        last_mass = float(np.sum(e[offsets[n - 1]:offsets[n] - 1]))
        earlier_mass = sum(float(np.sum(e[offsets[k - 1]:offsets[k] - 1]))
                           for k in range(1, n))
        junction_mass = sum(float(e[i]) for i in junctions[:n - 1])
        assert last_mass / Mn <= 1.0 / n
        assert earlier_mass / Mn <= offsets[n - 1] / Mn + 1e-12
        total = (last_mass + earlier_mass + junction_mass) / Mn
        direct = float(np.sum(e[:Mn])) / Mn
        assert total == pytest.approx(direct, abs=1e-9)
        assert direct <= 1.0 / n + offsets[n - 1] / Mn + junction_mass / Mn + 1e-12
