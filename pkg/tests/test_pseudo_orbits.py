import numpy as np
import pytest

from shadowlab import (
    GeneratorFamily,
    GeneratorMap,
    IndexSet,
    JumpRule,
    MetricSpace,
    PseudoOrbit,
    ResourceCapError,
    Word,
    build_disk_system,
    is_asymptotic_average,
    is_average_pseudo_orbit,
    is_ergodic_pseudo_orbit,
    is_pseudo_orbit,
    is_weak_asymptotic_average,
    make_corrupted_orbit,
    true_orbit,
)


def interval_identity():
    space = MetricSpace.box([0.0], [1.0])
    return GeneratorFamily(space, (GeneratorMap.identity(),)), Word.constant(1, m=1)


def orbit_with_errors(values):
    """1-d identity-family pseudo-orbit whose step errors equal |diff(values)|."""
    family, word = interval_identity()
    return PseudoOrbit.from_points(family, word, np.asarray(values, dtype=float))


def brute_force_average(xi, delta, N):
    e = xi.step_errors
    for n in range(N, xi.horizon + 1):
        for k in range(0, xi.horizon - n + 1):
            if e[k:k + n].mean() >= delta:
                return False
    return True


# ---------------------------------------------------------------------------
# is_pseudo_orbit


def test_true_orbit_is_pseudo_orbit_for_any_delta():
    family, word = build_disk_system()
    xi = true_orbit(family, word, (0.5, 0.5), 200)
    for delta in (1e-9, 0.1, 1.0):
        assert is_pseudo_orbit(xi, delta)


def test_single_jump_violates_small_delta():
    xi = orbit_with_errors([0.0] * 10 + [0.3] + [0.3] * 5)
    verdict = is_pseudo_orbit(xi, 0.2)
    assert not verdict
    assert verdict.witness["index"] == 9
    assert verdict.witness["step_error"] == pytest.approx(0.3)


def test_noisy_orbit_below_half_delta_passes():
    family, word = build_disk_system()
    delta = 0.2
    all_idx = IndexSet.from_iterable(range(300), 300)
    xi = make_corrupted_orbit(family, word, (0.1, 0.2), all_idx,
                              JumpRule("offset", scale=0.45 * delta, power=0.0), seed=3)
    assert np.all(xi.step_errors < delta)
    assert is_pseudo_orbit(xi, delta)


# ---------------------------------------------------------------------------
# is_ergodic_pseudo_orbit


def test_powers_of_two_corruption_is_ergodic():
    family, word = build_disk_system()
    H = 10_000
    powers = IndexSet.from_iterable([2**k for k in range(14)], H)
    xi = make_corrupted_orbit(family, word, (0.3, 0.1), powers, JumpRule("uniform"), seed=1)
    assert is_ergodic_pseudo_orbit(xi, 0.1, density_tol=0.01)


def test_evens_corruption_is_not_ergodic():
    family, word = build_disk_system()
    H = 2_000
    evens = IndexSet.from_iterable(range(0, H, 2), H)
    xi = make_corrupted_orbit(family, word, (0.3, 0.1), evens, JumpRule("uniform"), seed=2)
    verdict = is_ergodic_pseudo_orbit(xi, 0.05, density_tol=0.01)
    assert not verdict
    assert verdict.witness["exceptional_density"] > 0.01


def test_pseudo_orbit_is_ergodic_at_zero_tolerance():
    family, word = build_disk_system()
    xi = true_orbit(family, word, (0.5, 0.0), 500)
    assert is_ergodic_pseudo_orbit(xi, 0.01, density_tol=0.0)


# ---------------------------------------------------------------------------
# is_average_pseudo_orbit


def test_true_orbit_is_average():
    family, word = build_disk_system()
    xi = true_orbit(family, word, (0.2, 0.2), 300)
    assert is_average_pseudo_orbit(xi, 1e-6, N=1)


def test_single_diameter_jump_with_matching_N():
    # x jumps the full diameter once at index 0, then follows the identity.
    values = [0.0] + [1.0] * 200
    xi = orbit_with_errors(values)
    delta = 0.1
    N = int(np.ceil(1.0 / delta)) + 1
    verdict = is_average_pseudo_orbit(xi, delta, N)
    assert verdict
    assert brute_force_average(xi, delta, N)
    tight = is_average_pseudo_orbit(xi, delta, N - 1)
    assert not tight
    assert not brute_force_average(xi, delta, N - 1)
    k, n = tight.witness["k"], tight.witness["n"]
    assert xi.step_errors[k:k + n].mean() >= delta


def test_periodic_unit_jumps_fail():
    # One unit-size error every 5 steps: window means approach 0.2.
    values = []
    for block in range(100):
        values.extend([float(block % 2)] * 5)
    xi = orbit_with_errors(values)
    assert not is_average_pseudo_orbit(xi, 0.1, N=100)


def test_average_witness_recheck():
    values = [0.0, 1.0] * 50
    xi = orbit_with_errors(values)
    verdict = is_average_pseudo_orbit(xi, 0.5, N=2)
    assert not verdict
    k, n, mean = verdict.witness["k"], verdict.witness["n"], verdict.witness["window_mean"]
    assert xi.step_errors[k:k + n].mean() == pytest.approx(mean, abs=1e-12)


def test_full_scan_budget_and_sampled_mode():
    family, word = interval_identity()
    xi = true_orbit(family, word, [0.5], 40_000)
    with pytest.raises(ResourceCapError):
        is_average_pseudo_orbit(xi, 0.1, N=1)
    verdict = is_average_pseudo_orbit(xi, 0.1, N=1, mode="sampled")
    assert verdict
    assert verdict.params["scan"] == "sampled"


# ---------------------------------------------------------------------------
# weak asymptotic / asymptotic


def test_weak_asymptotic_constant_error():
    c = 0.25
    xi = orbit_with_errors([0.0 if j % 2 == 0 else c for j in range(41)])
    assert np.allclose(xi.step_errors, c)
    assert is_weak_asymptotic_average(xi, c + 0.01)
    assert not is_weak_asymptotic_average(xi, c)
    assert not is_weak_asymptotic_average(xi, c / 2)


def test_asymptotic_harmonic_errors():
    # Oracle: direct summation of prefix means of 1/(j+1).
    H = 10_000
    e = 1.0 / (np.arange(H) + 1.0)
    # explicit zigzag achieving |x_{j+1} - x_j| = e_j inside [0,1]
    pts = [0.0]
    for err in e:
        nxt = pts[-1] + err if pts[-1] + err <= 1.0 else pts[-1] - err
        pts.append(nxt)
    xi = orbit_with_errors(pts)
    assert np.allclose(xi.step_errors, e, atol=1e-12)
    means = np.cumsum(e) / np.arange(1, H + 1)
    oracle_max_tail = means[5000 - 1:].max()
    assert oracle_max_tail < 0.01
    assert is_asymptotic_average(xi, 0.01, tail_fraction=0.5)


def test_asymptotic_constant_error_fails():
    xi = orbit_with_errors([0.0 if j % 2 == 0 else 0.5 for j in range(101)])
    assert not is_asymptotic_average(xi, 0.01)


def test_true_orbit_asymptotic():
    family, word = build_disk_system()
    xi = true_orbit(family, word, (0.1, 0.7), 100)
    assert is_asymptotic_average(xi, 1e-9)


# ---------------------------------------------------------------------------
# make_corrupted_orbit


def test_empty_corruption_gives_true_orbit():
    family, word = build_disk_system()
    empty = IndexSet.from_iterable([], 100)
    xi = make_corrupted_orbit(family, word, (0.4, -0.2), empty, JumpRule("uniform"), seed=0)
    assert np.all(xi.step_errors == 0.0)


def test_fixed_jump_at_zero():
    family, word = build_disk_system()
    target = (0.25, 0.25)
    only_zero = IndexSet.from_iterable([0], 50)
    xi = make_corrupted_orbit(family, word, (1.0, 0.0), only_zero,
                              JumpRule("fixed", point=target), seed=0)
    image = family.apply(word.symbol_at(0), (1.0, 0.0))
    assert xi.step_errors[0] == pytest.approx(family.space.distance(image, target))
    assert np.all(xi.step_errors[1:] == 0.0)
    assert np.allclose(xi.points[1], target)


def test_squares_corruption_is_ergodic_at_2_percent():
    family, word = build_disk_system()
    H = 10_000
    squares = IndexSet.from_iterable([k * k for k in range(100)], H)
    xi = make_corrupted_orbit(family, word, (0.6, 0.3), squares, JumpRule("uniform"), seed=4)
    assert is_ergodic_pseudo_orbit(xi, 0.1, density_tol=0.02)


def test_corruption_deterministic_under_seed():
    family, word = build_disk_system()
    squares = IndexSet.from_iterable([k * k for k in range(10)], 100)
    a = make_corrupted_orbit(family, word, (0.6, 0.3), squares, JumpRule("uniform"), seed=9)
    b = make_corrupted_orbit(family, word, (0.6, 0.3), squares, JumpRule("uniform"), seed=9)
    assert np.array_equal(a.points, b.points)


def test_clamped_jumps_flagged_and_in_space():
    family, word = build_disk_system()
    all_idx = IndexSet.from_iterable(range(50), 50)
    xi = make_corrupted_orbit(family, word, (1.0, 0.0), all_idx,
                              JumpRule("offset", scale=3.0, power=0.0), seed=5)
    assert np.all(family.space.contains_batch(xi.points))
    assert len(xi.meta["clamped_indices"]) > 0


# ---------------------------------------------------------------------------
# Cross-class properties


def test_implication_chain_on_generated_corpus():
    family, word = build_disk_system()
    rng = np.random.default_rng(12)
    for seed in range(5):
        H = 400
        count = int(rng.integers(0, 12))
        idx = IndexSet.from_iterable(
            sorted(rng.choice(H, size=count, replace=False)), H)
        xi = make_corrupted_orbit(family, word, family.space.sample(rng), idx,
                                  JumpRule("offset", scale=0.05, power=0.0), seed=seed)
        delta = float(xi.step_errors.max()) + 1e-6
        delta_prime = delta * 1.5
        assert is_pseudo_orbit(xi, delta)
        assert is_average_pseudo_orbit(xi, delta_prime, N=1)
        assert is_weak_asymptotic_average(xi, delta_prime)


def test_classification_invariant_under_recache():
    family, word = build_disk_system()
    squares = IndexSet.from_iterable([k * k for k in range(10)], 120)
    xi = make_corrupted_orbit(family, word, (0.2, 0.2), squares, JumpRule("uniform"), seed=6)
    recached = PseudoOrbit(family, word, xi.points, xi.recompute_errors(), xi.meta)
    assert xi.cache_consistent()
    for delta in (0.05, 0.5):
        assert is_pseudo_orbit(xi, delta).verdict == is_pseudo_orbit(recached, delta).verdict
    assert np.array_equal(xi.step_errors, recached.step_errors)


def test_step_errors_bounded_by_diameter():
    family, word = build_disk_system()
    all_idx = IndexSet.from_iterable(range(200), 200)
    xi = make_corrupted_orbit(family, word, (0.9, 0.1), all_idx, JumpRule("uniform"), seed=7)
    assert np.all(xi.step_errors >= 0.0)
    assert np.all(xi.step_errors <= family.space.diameter + 1e-12)


def test_false_verdict_requires_witness():
    from shadowlab import ClassificationVerdict
    with pytest.raises(ValueError):
        ClassificationVerdict("anything", False, None, {})
    ok = ClassificationVerdict("anything", True, None, {"x": 1})
    assert bool(ok) and ok.to_dict()["params"] == {"x": 1}


def brute_min_witness(e, delta, N):
    """Lexicographic-min violating (k, n) by direct window means."""
    H = len(e)
    for k in range(H):
        for n in range(N, H - k + 1):
            if np.mean(e[k:k + n]) >= delta:
                return k, n
    return None


def test_average_scan_matches_brute_force():
    rng = np.random.default_rng(21)
    for trial in range(15):
        H = int(rng.integers(40, 120))
        e = rng.uniform(0, 0.5, size=H) * (rng.random(H) < 0.3)
        pts = [0.0]
        for err in e:
            pts.append(pts[-1] + err if pts[-1] + err <= 1.0 else pts[-1] - err)
        xi = orbit_with_errors(pts)
        assert np.allclose(xi.step_errors, e, atol=1e-12)
        delta = float(rng.uniform(0.05, 0.4))
        N = int(rng.integers(1, 10))
        verdict = is_average_pseudo_orbit(xi, delta, N)
        expected = brute_min_witness(xi.step_errors, delta, N)
        if expected is None:
            assert verdict.verdict
        else:
            assert not verdict.verdict
            assert (verdict.witness["k"], verdict.witness["n"]) == expected
