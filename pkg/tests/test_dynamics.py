"""Orbit machinery: backward map, digits, returns, path recovery."""

import math
import random
from fractions import Fraction

import numpy as np
import pytest

from ar1persist.dynamics import (
    APERIODIC,
    EVENTUALLY_PERIODIC,
    FINITE,
    HOLE,
    GapError,
    HoleError,
    InsufficientOrbitError,
    OutOfDomainError,
    backward_step,
    beta_expansion_digits,
    orbit_of,
    orbit_of_zero,
    recover_path,
    recover_path_unconditional,
    return_stats,
    survivor_intervals,
    synthetic_periodic_orbit,
)
from ar1persist.model import ModelParams

F = Fraction


def test_backward_step_branches_exact():
    params = ModelParams(F(3, 5), F(1, 2))
    assert params.hole_lo == F(1, 2)
    assert params.ceiling == F(5, 2)
    assert backward_step(params, F(0)) == F(5, 3)
    assert backward_step(params, F(5, 3)) == F(10, 9)
    assert backward_step(params, F(10, 9)) == F(5, 27)
    # anything strictly inside (1/2, 1) is the hole
    assert backward_step(params, F(3, 4)) is HOLE
    with pytest.raises(OutOfDomainError):
        backward_step(params, F(-1, 10))
    with pytest.raises(OutOfDomainError):
        backward_step(params, F(26, 10))


def test_backward_step_branch_order_at_two_thirds():
    # at a = 2/3 the hole is empty and 1 maps to 0 through the upper branch
    params = ModelParams(F(2, 3), F(1, 2))
    assert params.hole_lo == 1
    assert backward_step(params, F(1)) == F(0)
    assert backward_step(params, F(0)) == F(3, 2)


def test_orbit_points_solve_the_affine_recursion_exactly():
    for a in (F(63, 100), F(11, 20), F(3, 5), F(13, 24)):
        params = ModelParams(a, F(1, 2))
        orbit = orbit_of_zero(params)
        pts, deltas = orbit.points, orbit.deltas
        for k in range(len(pts) - 1):
            sigma = 1 if deltas[k] == 1 else -1
            assert pts[k + 1] == (pts[k] + sigma) / a
        # closed form: T^k(0) = sum_{i<k} sigma_i a^(i-k)
        for k in range(len(pts)):
            acc = sum((2 * deltas[i] - 1) * a ** (i - k) for i in range(k))
            if orbit.kind == EVENTUALLY_PERIODIC and k == len(pts) - 1:
                continue  # the appended repeat re-enters the cycle
            assert pts[k] == acc


def test_orbit_classification_known_cases():
    orbit = orbit_of_zero(ModelParams(F(63, 100), F(1, 2)))
    assert orbit.kind == FINITE
    assert orbit.kappa == 2
    assert orbit.points == [F(0), F(100, 63), F(3700, 3969)]
    assert orbit.deltas == [1, 0, 1]
    assert orbit.kappa_prime == 2

    orbit = orbit_of_zero(ModelParams(F(11, 20), F(1, 2)))
    assert orbit.kind == FINITE and orbit.kappa == 3
    assert orbit.points == [F(0), F(20, 11), F(180, 121), F(1180, 1331)]

    orbit = orbit_of_zero(ModelParams(F(3, 5), F(1, 2)))
    assert orbit.kind == FINITE and orbit.kappa == 10

    # below 1/2 the hole straddles 0, so the orbit dies immediately
    orbit = orbit_of_zero(ModelParams(F(2, 5), F(1, 2)))
    assert orbit.kind == FINITE and orbit.kappa == 0

    orbit = orbit_of_zero(ModelParams(F(1, 2), F(1, 2)))
    assert orbit.kind == EVENTUALLY_PERIODIC
    assert orbit.points == [F(0), F(2), F(2)]
    assert (orbit.k0, orbit.period) == (1, 1)

    orbit = orbit_of_zero(ModelParams(F(2, 3), F(1, 2)), max_iter=4000)
    assert orbit.kind == APERIODIC
    assert len(orbit.points) == 4000


def test_final_point_of_finite_orbit_lies_in_the_open_hole():
    for a in (F(63, 100), F(11, 20), F(3, 5), F(31, 50), F(16, 25)):
        params = ModelParams(a, F(1, 2))
        orbit = orbit_of_zero(params)
        assert orbit.kind == FINITE
        last = orbit.points[orbit.kappa]
        assert params.hole_lo < last < 1


def test_digit_prefix_at_two_thirds():
    orbit = orbit_of_zero(ModelParams(F(2, 3), F(1, 2)), max_iter=64)
    assert orbit.deltas[:12] == [1, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1]
    # occupation numbers are the prefix sums of the digits
    for k in range(12):
        assert orbit.occupation(k) == sum(orbit.deltas[:k])


def test_digit_periodic_extension_and_truncation_guard():
    orbit = orbit_of_zero(ModelParams(F(1, 2), F(1, 2)))
    # cycle digit pattern: delta_0 = 1 at the start, then 0 forever
    assert [orbit.digit(k) for k in range(6)] == [1, 0, 0, 0, 0, 0]
    assert orbit.occupation(100) == 1

    truncated = orbit_of_zero(ModelParams(F(2, 3), F(1, 2)), max_iter=32)
    with pytest.raises(InsufficientOrbitError):
        truncated.digit(32)

    finite = orbit_of_zero(ModelParams(F(63, 100), F(1, 2)))
    with pytest.raises(IndexError):
        finite.digit(3)


def test_orbit_of_generic_point_flags_boundary_proximity():
    params = ModelParams(F(2, 3), F(1, 2))
    clean = orbit_of(params, 0.37, max_iter=60)
    assert clean.boundary_flag is False
    near = orbit_of(params, 1.0 - 5e-13, max_iter=3)
    assert near.boundary_flag is True


def test_return_times_and_frequency_constant_at_two_thirds():
    orbit = orbit_of_zero(ModelParams(F(2, 3), F(2, 5)), max_iter=256)
    stats = return_stats(orbit, F(2, 5))
    assert stats.t[:2] == [2, 8]
    assert stats.d == [F(2), F(3)]
    assert stats.freq_constant == F(1, 3)


def test_frequency_constant_zero_when_up_moves_likely():
    orbit = orbit_of_zero(ModelParams(F(2, 3), F(1, 2)), max_iter=128)
    assert return_stats(orbit, F(1, 2)).freq_constant == 0
    assert return_stats(orbit, F(7, 10)).freq_constant == 0


def test_return_stats_refuses_truncated_orbit_without_returns():
    # short truncation that has not yet seen a return below 1
    orbit = orbit_of_zero(ModelParams(F(2, 3), F(2, 5)), max_iter=2)
    assert orbit.kind == APERIODIC
    with pytest.raises(InsufficientOrbitError):
        return_stats(orbit, F(2, 5))


def test_recover_path_round_trip_exact_from_zero():
    # exact arithmetic keeps the forced X_1 = 1 on the closed side of the
    # hole, so recovery from a start at 0 is exact at every step
    a = F(3, 5)
    params = ModelParams(a, F(1, 2))
    rng = random.Random(20240815)
    for _ in range(40):
        n = rng.randrange(1, 16)
        while True:
            x = F(0)
            path = [x]
            innz = []
            for _ in range(n):
                xi = 1 if rng.random() < 0.5 else -1
                x = a * x + xi
                path.append(x)
                innz.append(xi)
            if min(path) >= 0:
                break
        got_path, got_inn = recover_path(params, path[-1], n)
        assert got_path == path
        assert list(got_inn) == innz


def test_recover_path_round_trip_float_generic_start():
    # float pullback amplifies rounding by (1/a)^k, which is harmless as
    # long as the true path keeps clear of the branch boundaries; a generic
    # start does that, a start at 0 (which forces X_1 = 1) does not
    a, p = 0.6, 0.5
    params = ModelParams(a, p)
    rng = random.Random(11)
    for _ in range(40):
        n = rng.randrange(1, 16)
        while True:
            x = 0.37
            path = [x]
            innz = []
            for _ in range(n):
                xi = 1 if rng.random() < p else -1
                x = a * x + xi
                path.append(x)
                innz.append(xi)
            if min(path) >= 0.0:
                break
        got_path, got_inn = recover_path(params, path[-1], n)
        assert np.allclose(got_path, path, atol=1e-9)
        assert list(got_inn) == innz


def test_recover_path_rejects_hole_point():
    params = ModelParams(F(3, 5), F(1, 2))
    with pytest.raises(HoleError) as err:
        recover_path(params, F(3, 4), 5)
    assert err.value.step == 0


def test_recover_path_unconditional_round_trip_below_half():
    a = 0.4
    params = ModelParams(a, 0.5)
    rng = random.Random(7)
    for _ in range(50):
        n = rng.randrange(1, 20)
        x = 0.2
        path = [x]
        innz = []
        for _ in range(n):
            xi = 1 if rng.random() < 0.5 else -1
            x = a * x + xi
            path.append(x)
            innz.append(xi)
        got_path, got_inn = recover_path_unconditional(params, path[-1], n)
        assert np.allclose(got_path, path, atol=1e-10)
        assert list(got_inn) == innz


def test_recover_path_unconditional_rejects_gap_point():
    params = ModelParams(F(2, 5), F(1, 2))
    # the reachable set leaves (-g, g) empty with g = (1-2a)/(1-a)
    g = F(1, 3)
    with pytest.raises(GapError):
        recover_path_unconditional(params, g / 2, 4)


def test_survivor_intervals_match_direct_iteration():
    params = ModelParams(F(3, 5), F(1, 2))
    for k in (1, 2, 3, 5):
        dec = survivor_intervals(params, k)
        step = params.ceiling / 400
        for j in range(401):
            x = j * step
            cur = x
            alive = True
            for _ in range(k):
                cur = backward_step(params, cur)
                if cur is HOLE:
                    alive = False
                    break
            assert dec.covers(x) == alive, (k, x)


def test_survivor_intervals_total_length_shrinks():
    params = ModelParams(F(3, 5), F(1, 2))
    lengths = []
    for k in range(1, 7):
        dec = survivor_intervals(params, k)
        lengths.append(sum(hi - lo for lo, hi in dec.intervals))
    assert all(b < a for a, b in zip(lengths, lengths[1:]))


def test_beta_expansion_digits_exact_and_conjugate_to_orbit_digits():
    beta, alpha = F(3, 2), F(1, 2)
    digits, pts = beta_expansion_digits(beta, alpha, F(0), 12)
    assert all(isinstance(w, Fraction) for w in pts)
    assert all(d in (0, 1) for d in digits)

    # complemented digits of the (1/a, 1/2)-expansion of a*x/2 reproduce the
    # orbit digits of x under the backward map
    a = F(2, 3)
    params = ModelParams(a, F(1, 2))
    orbit = orbit_of_zero(params, max_iter=40)
    exp_digits, _ = beta_expansion_digits(1 / a, F(1, 2), a * F(0) / 2, 40)
    assert [1 - d for d in exp_digits] == orbit.deltas[:40]

    for x in (F(1, 7), F(9, 8), F(5, 2)):
        orb = orbit_of(params, x, max_iter=40)
        exp_digits, _ = beta_expansion_digits(1 / a, F(1, 2), a * x / 2, 40)
        assert [1 - d for d in exp_digits] == orb.deltas[:40]


def test_synthetic_periodic_orbit_golden_mean():
    a = (math.sqrt(5.0) - 1.0) / 2.0
    params = ModelParams(a, F(1, 2), experimental=False)
    orbit = synthetic_periodic_orbit(params, [0.0, 1.0 / a, 1.0], k0=0)
    assert orbit.kind == EVENTUALLY_PERIODIC
    assert (orbit.k0, orbit.period) == (0, 3)
    assert orbit.deltas[:3] == [1, 0, 0]
    # the cycle closes: T(1) = (1-1)/a = 0
    assert orbit.points[3] == orbit.points[0]
    assert orbit.occupation(3) - orbit.occupation(0) == 1


def test_orbit_json_round_trip_fields():
    orbit = orbit_of_zero(ModelParams(F(63, 100), F(1, 2)))
    blob = orbit.to_json()
    assert blob["kind"] == "finite"
    assert blob["kappa"] == 2
    assert blob["points"] == ["0", "100/63", "3700/3969"]
