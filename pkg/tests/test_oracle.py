from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from majorant.generators import geometric, nonnecessity_window
from majorant.numerics import SignedRoot
from majorant.oracle import (conjecture_search, float_majorize, float_p_majorize, haar_orthogonal,
                             sample_orbit_expectation, verify_necessity_bound)
from majorant.stochastic import ROOT, DenseMatrix, exact, expectation_diag, permutation_matrix, schur_square
from majorant.synthesis import synthesize


def test_haar_small_cases():
    assert abs(abs(haar_orthogonal(1, 0)[0, 0]) - 1) < 1e-15
    M = haar_orthogonal(3, 7)
    assert np.max(np.abs(M @ M.T - np.eye(3))) <= 1e-12
    stack = haar_orthogonal(4, 1, count=50)
    assert stack.shape == (50, 4, 4)
    assert np.max(np.abs(np.linalg.norm(stack, axis=1) - 1)) <= 1e-12


def test_haar_is_deterministic_per_seed():
    assert np.array_equal(haar_orthogonal(5, 3), haar_orthogonal(5, 3))


def test_two_by_two_diagonal():
    rep = sample_orbit_expectation([1, 0], 200, seed=1)
    assert not rep.violations
    assert np.allclose(rep.diagonals.sum(axis=1), 1)


def test_sampler_three_dim():
    rep = sample_orbit_expectation([3, 1, 0], 10_000, seed=5)
    assert not rep.violations and rep.samples == 10_000


def test_jobs_do_not_change_samples():
    a = sample_orbit_expectation([5, 3, 1, 0], 2500, seed=9, jobs=1)
    b = sample_orbit_expectation([5, 3, 1, 0], 2500, seed=9, jobs=3)
    assert np.array_equal(a.diagonals, b.diagonals)


def test_quarter_turn_on_diag_021():
    h = SignedRoot.root(F(1, 2))
    z, one = SignedRoot.of(0), SignedRoot.of(1)
    U = DenseMatrix(((h, h, z), (-h, h, z), (z, z, one)), ROOT)
    d = expectation_diag(U, [0, 2, 1]).terms
    assert d == (1, 1, 1)


def test_float_relations():
    assert float_majorize([2, 1, 1], [3, 1, 0]) == (True, None)
    assert float_majorize([3, 1], [2, 2])[0] is False
    ok, N = float_p_majorize([2, 1, 1], [3, 1, 0], 1)
    assert ok and N == 1


def test_bound_on_permutation():
    rep = verify_necessity_bound(permutation_matrix([1, 2, 0]), [3, 2, 1], epsilon=F(1, 8))
    assert rep.ok and rep.N_r_eps == 1 and rep.N == 0


def test_bound_on_block_extended_window():
    eta = geometric(24)
    Qt, Lt, eta_t, xi = nonnecessity_window(eta, 2, 10)
    rep = verify_necessity_bound(Qt, eta_t.terms, r=2)
    assert rep.ok


def test_bound_on_synthesized_certificate():
    cert = synthesize([F(1, 2), F(1, 4), F(1, 8), F(1, 8)], [F(3, 4), F(1, 8), F(1, 8), 0], strategy="theorem")
    Q = schur_square(cert.plan.materialize(ROOT))
    rep = verify_necessity_bound(Q, cert.eta.terms, r=cert.p)
    assert rep.ok


def test_bound_rejects_non_doubly_stochastic():
    rep = verify_necessity_bound(exact(((1, 0), (0, F(1, 2)))), [1, 0])
    assert not rep.ok and "doubly" in rep.reason


def test_bound_float_mode_matches_exact():
    cert = synthesize([2, 1, 1], [3, 1, 0])
    Q = schur_square(cert.plan.materialize(ROOT))
    exact_rep = verify_necessity_bound(Q, [3, 1, 0])
    float_rep = verify_necessity_bound(DenseMatrix(Q.to_float(), "float"), [3, 1, 0])
    assert exact_rep.ok and float_rep.ok and exact_rep.N_r_eps == float_rep.N_r_eps


def test_search_small_cases():
    assert sum(conjecture_search([1, 0, 0], 3000, seed=0).by_kernel.values()) == 0
    assert conjecture_search([0, 0], 10).candidates == []
    rep = conjecture_search([2, 1, 1, 0], 600, seed=4, kernels=[0])
    assert rep.by_kernel == {"0": 0}
    with pytest.raises(ValueError):
        conjecture_search([1, 0], 10, kernels=[2])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=7), st.integers(0, 2 ** 32 - 1))
def test_schur_direction_property(eta, seed):
    rep = sample_orbit_expectation(eta, 64, seed=seed)
    assert not rep.violations
