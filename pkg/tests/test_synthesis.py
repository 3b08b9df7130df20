from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from majorant.generators import geometric
from majorant.numerics import Sequence, ampliate2, scale
from majorant.stochastic import FLOAT, ROOT, schur_square
from majorant.synthesis import (HorizonExhausted, Interleaving, KernelGuardFailure, NotMajorized,
                                RotationStep, SynthesisCertificate, UnitaryPlan, compress, decompression_plan,
                                horn_finite, kernel_guard, select_interleaving, synthesize, verify_certificate)


def fs(*xs):
    return Sequence.finite([F(x) for x in xs])


def test_one_rotation_plan():
    cert = horn_finite(fs(2, 1, 1), fs(3, 1, 0))
    assert [s.to_json() for s in cert.plan.steps] == [
        {"kind": "givens", "i": 1, "j": 3, "a2": "2/3", "b2": "1/3"}]
    Q = schur_square(cert.plan.materialize(ROOT))
    assert [list(r) for r in Q.rows] == [[F(2, 3), 0, F(1, 3)], [0, 1, 0], [F(1, 3), 0, F(2, 3)]]


def test_quarter_turn_and_identity_and_reversal():
    cert = horn_finite(fs("1/2", "1/2"), fs(1, 0))
    assert cert.plan.steps[0].a2 == F(1, 2)
    assert horn_finite(fs(3, 2, 1), fs(3, 2, 1)).plan.steps == ()
    rev = horn_finite(fs(1, 2, 3), fs(3, 2, 1))
    assert [s.to_json() for s in rev.plan.steps] == [{"kind": "perm", "map": [3, 2, 1]}]


def test_refusal_carries_witness():
    with pytest.raises(NotMajorized) as exc:
        horn_finite(fs(3, 1, 1), fs(3, 1, 0))
    assert exc.value.witness == 3


def test_kernel_guard():
    assert kernel_guard(fs(1, 1, 0, 0), fs(2, 0, 0, 0)).passed
    assert not kernel_guard(fs(2, 0, 0), fs(1, 1, 0)).passed
    with pytest.raises(KernelGuardFailure):
        synthesize(fs(2, 0, 0), fs(1, 1, 0))


def test_decompression_rotation_values():
    steps = decompression_plan(fs("1/2", "1/4", "1/8"), Interleaving((2,), (3,), 1))
    assert (steps[0].a2, steps[0].b2) == (F(1, 3), F(2, 3))
    equal = decompression_plan(fs(1, 1, 1), Interleaving((2,), (3,), 1))
    assert equal[0].a2 == F(1, 2)
    swap = decompression_plan(Sequence.finite([F(1), F(1, 2), F(0)]), Interleaving((2,), (3,), 1))
    assert swap[0].b2 == 1


def test_compress_identities_on_geometric_window():
    xi = list(geometric(12, first=F(1, 2)).terms)
    I = Interleaving((2,), (4,), 1)
    xp = compress(xi, I).terms
    assert xp[:4] == (F(1, 2), F(1, 4) + F(1, 16), F(1, 8), F(1, 32))
    assert compress(xi, Interleaving()).terms == tuple(xi)
    two = Interleaving((2, 6), (4, 8), 2)
    xp2 = compress(xi, two).terms
    # last segment: sum^k xi' = sum^{k+p} xi
    assert sum(xp2) == sum(xi)


def test_select_interleaving_cases():
    xs = list(geometric(10).terms)
    es = [2 * x for x in xs]
    assert select_interleaving(xs, es, 0) == Interleaving()
    I = select_interleaving(xs, es, 1)
    assert I.N[0] < I.Nprime[0]
    with pytest.raises(HorizonExhausted):
        select_interleaving([F(1)] * 6, [F(1)] * 6, 1)


def test_kernel_aware_pipeline_with_surplus():
    cert = synthesize(fs("1/2", "1/4", "1/8", "1/8"), fs("3/4", "1/8", "1/8", 0), strategy="theorem")
    assert cert.case == "kernel-surplus" and cert.p == 1
    assert cert.interleaving == Interleaving((2,), (3,), 1)
    assert cert.checks["compressed"] == ["1/2", "3/8", "1/8"]
    assert verify_certificate(cert)["ok"]


def test_half_ampliation_window():
    eta = geometric(6)
    xi = scale(ampliate2(eta), F(1, 2))
    xi_w = Sequence.finite(xi.terms[:6])
    eta_w = Sequence.finite(list(eta.terms[:3]) + [0, 0, 0])
    assert sum(xi_w.terms) == sum(eta_w.terms)
    cert = synthesize(xi_w, eta_w)
    assert cert.achieved.terms == xi_w.terms


def test_certificate_json_round_trip():
    cert = synthesize(fs("1/2", "1/4", "1/8", "1/8"), fs("3/4", "1/8", "1/8", 0), strategy="theorem")
    back = SynthesisCertificate.from_json(cert.to_json())
    assert back.plan == cert.plan and back.achieved == cert.achieved
    assert verify_certificate(back)["ok"]


def test_plan_materializes_in_float_too():
    cert = horn_finite(fs(2, 1, 1), fs(3, 1, 0))
    M = cert.plan.materialize(FLOAT).rows
    assert abs(M[0, 2] ** 2 - 1 / 3) < 1e-12


def test_step_validation():
    with pytest.raises(ValueError):
        UnitaryPlan(2, (RotationStep.givens(1, 3, F(1, 2)),))
    step = RotationStep.givens(1, 2, F(1, 3))
    assert RotationStep.from_json(step.to_json()) == step


@st.composite
def majorized_pair(draw):
    n = draw(st.integers(1, 8))
    eta = sorted((F(draw(st.integers(0, 8)), draw(st.integers(1, 4))) for _ in range(n)), reverse=True)
    # averaging along random T-transforms keeps xi majorized by eta
    xi = list(eta)
    for _ in range(draw(st.integers(0, 4))):
        i, j = draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1))
        t = F(draw(st.integers(0, 4)), 4)
        xi[i], xi[j] = t * xi[i] + (1 - t) * xi[j], (1 - t) * xi[i] + t * xi[j]
    order = draw(st.permutations(range(n)))
    return Sequence.finite([xi[k] for k in order]), Sequence.finite(eta)


@settings(max_examples=60, deadline=None)
@given(majorized_pair())
def test_auto_synthesis_is_exact(pair):
    xi, eta = pair
    if not kernel_guard(xi, eta).passed:
        return
    cert = synthesize(xi, eta)
    rep = verify_certificate(cert)
    assert rep["ok"] and rep["residual"] == "0/1"
