"""Lumped chain construction, eigenvalue extraction, jump operator."""

import math
from fractions import Fraction

import numpy as np
import pytest

from ar1persist.dynamics import orbit_of_zero, synthetic_periodic_orbit
from ar1persist.lumped import (
    InfiniteOrbitError,
    JumpOperator,
    NoConvergenceError,
    build_lumped,
    jump_left_eigenvector,
    jump_right_eigenvector,
    leading_eigen,
    persistence_via_matrix,
    power_convergence_probe,
)
from ar1persist.model import ModelParams
from ar1persist.spectral import solve_lambda

F = Fraction


def exact_survival_by_enumeration(a: Fraction, p: Fraction, n: int) -> Fraction:
    """Survival probability from 0 by summing over all innovation strings,
    pruning branches as soon as they go negative.  Exact rational output."""
    q = 1 - p
    total = F(0)
    stack = [(F(0), F(1), 0)]
    while stack:
        x, w, depth = stack.pop()
        if depth == n:
            total += w
            continue
        stack.append((a * x + 1, w * p, depth + 1))
        down = a * x - 1
        if down >= 0:
            stack.append((down, w * q, depth + 1))
    return total


def test_matrix_63_100_half_is_the_known_four_state_chain():
    chain = build_lumped(ModelParams(F(63, 100), F(1, 2)))
    assert chain.dim == 4
    h = F(1, 2)
    expected = [
        [F(1), F(0), F(0), F(0)],
        [h, F(0), F(0), h],
        [F(0), h, h, F(0)],
        [h, F(0), h, F(0)],
    ]
    assert chain.matrix_exact == expected
    assert np.allclose(chain.matrix, [[float(x) for x in row] for row in expected])
    assert chain.labels[0] == "dead"


def test_matrix_rows_are_stochastic_and_graveyard_absorbs():
    for a, p in [(F(11, 20), F(3, 10)), (F(57, 100), F(1, 2)),
                 (F(3, 5), F(7, 10)), (F(16, 25), F(2, 5))]:
        chain = build_lumped(ModelParams(a, p))
        sums = chain.matrix.sum(axis=1)
        assert np.allclose(sums, 1.0, atol=1e-15)
        assert chain.matrix[0, 0] == 1.0
        assert np.all(chain.matrix[0, 1:] == 0.0)
        if chain.matrix_exact is not None:
            for row in chain.matrix_exact:
                assert sum(row) == 1


def test_leading_eigen_matches_numpy_and_solver():
    for a, p in [(F(63, 100), F(1, 2)), (F(11, 20), F(3, 10)),
                 (F(57, 100), F(7, 10)), (F(3, 5), F(1, 2))]:
        params = ModelParams(a, p)
        chain = build_lumped(params)
        block = chain.transient_block
        rate, right, left, _ = leading_eigen(block)
        top = float(np.max(np.real(np.linalg.eigvals(block))))
        assert abs(rate - top) < 1e-12
        assert abs(rate - solve_lambda(params).lam) < 1e-12
        assert float(np.linalg.norm(block @ right - rate * right, 1)) < 1e-10
        assert float(np.linalg.norm(left @ block - rate * left, 1)) < 1e-10
        assert np.all(right > 0) and np.all(left >= 0)


def test_leading_eigen_defective_block_refuses_to_fake_convergence():
    chain = build_lumped(ModelParams(F(1, 2), F(1, 2)))
    assert np.allclose(chain.transient_block, [[0.5, 0.0], [0.5, 0.5]])
    with pytest.raises(NoConvergenceError):
        leading_eigen(chain.transient_block, max_iter=3000)


def test_power_convergence_probe_recovers_spectral_gap():
    chain = build_lumped(ModelParams(F(63, 100), F(1, 2)))
    block = chain.transient_block
    eig = np.sort(np.abs(np.linalg.eigvals(block)))[::-1]
    oracle = float(eig[1] / eig[0])
    _, gamma = power_convergence_probe(block)
    assert abs(gamma - oracle) < 0.08


def test_persistence_via_matrix_equals_exact_path_enumeration():
    a, p = F(63, 100), F(3, 5)
    chain = build_lumped(ModelParams(a, p))
    for n in (0, 1, 2, 5, 10):
        assert persistence_via_matrix(chain, n) == \
            exact_survival_by_enumeration(a, p, n)

    a, p = F(11, 20), F(1, 2)
    chain = build_lumped(ModelParams(a, p))
    assert persistence_via_matrix(chain, 12) == \
        exact_survival_by_enumeration(a, p, 12)


def test_persistence_decay_matches_rate():
    params = ModelParams(F(63, 100), F(1, 2))
    chain = build_lumped(params)
    lam = solve_lambda(params).lam
    p40 = float(persistence_via_matrix(chain, 40))
    p41 = float(persistence_via_matrix(chain, 41))
    assert abs(p41 / p40 - lam) < 1e-10


def test_build_lumped_refuses_infinite_and_float_orbits():
    with pytest.raises(InfiniteOrbitError):
        build_lumped(ModelParams(F(2, 3), F(1, 2)))
    # orbit points handed in as floats cannot place boundary hits reliably
    a = (math.sqrt(5.0) - 1.0) / 2.0
    params = ModelParams(a, F(1, 2))
    orbit = synthetic_periodic_orbit(params, [0.0, 1.0 / a, 1.0], k0=0)
    with pytest.raises(TypeError):
        build_lumped(params, orbit)
    # a float contraction on its own is fine: the orbit machinery works
    # from its exact binary value, and float p only drops matrix_exact
    chain = build_lumped(ModelParams(0.63, 0.5))
    assert chain.dim == 4
    assert chain.matrix_exact is None


def test_jump_operator_right_and_left_eigenvectors():
    params = ModelParams(F(63, 100), F(1, 2))
    sol = solve_lambda(params)
    orbit = sol.orbit
    lam = sol.lam

    op = JumpOperator.from_orbit(orbit, float(params.p), folded=True)
    w = jump_right_eigenvector(orbit, lam, float(params.p))
    res = op.apply(w) - lam * w
    assert float(np.max(np.abs(res))) < 1e-14

    v = jump_left_eigenvector(orbit, lam, float(params.p))
    assert v[0] == 1.0
    mat = op.as_matrix()
    res = v @ mat - lam * v
    assert float(np.max(np.abs(res))) < 1e-13

    # the bilinear pairing of the two eigenvectors is the reciprocal of the
    # survival prefactor
    assert abs(float(np.dot(w, v)) - 1.0 / sol.c) < 1e-10


def test_jump_operator_on_periodic_cycle():
    a = (math.sqrt(5.0) - 1.0) / 2.0
    params = ModelParams(a, F(1, 2))
    orbit = synthetic_periodic_orbit(params, [0.0, 1.0 / a, 1.0], k0=0)
    p = 0.5
    roots = np.roots([1.0, -p, 0.0, -(p**2) * (1 - p)])
    lam = float(max(r.real for r in roots if abs(r.imag) < 1e-12))

    op = JumpOperator.from_orbit(orbit, p, folded=True)
    w = jump_right_eigenvector(orbit, lam, p)
    assert float(np.max(np.abs(op.apply(w) - lam * w))) < 1e-14
    v = jump_left_eigenvector(orbit, lam, p)
    assert float(np.max(np.abs(v @ op.as_matrix() - lam * v))) < 1e-13


def test_state_labels_name_every_state():
    chain = build_lumped(ModelParams(F(11, 20), F(1, 2)))
    assert set(chain.labels) == set(range(chain.dim))
    assert chain.labels[0] == "dead"
    for k in range(1, chain.dim):
        assert "orbit point" in chain.labels[k]
