import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from weylclt.symplectic import (NormingSequence, PhaseVector, apply_norming, as_phase,
                                check_admissibility_bound, delta, symplectic_matrix)

coords = st.floats(-10, 10, allow_nan=False)


def phase(d):
    return arrays(np.float64, (2 * d,), elements=coords)


def delta_by_components(z, w):
    d = len(z) // 2
    return sum(z[2 * k] * w[2 * k + 1] - z[2 * k + 1] * w[2 * k] for k in range(d))


def test_delta_examples():
    assert delta((1, 0), (0, 1)) == 1
    assert delta((1, 2), (3, 4)) == -2
    assert delta((0.3, -1.7, 2.0, 5.0), (0.3, -1.7, 2.0, 5.0)) == 0


def test_delta_dimension_mismatch():
    with pytest.raises(ValueError):
        delta((1, 0), (1, 0, 0, 0))


def test_phase_vector():
    z = PhaseVector((1, 2, 3, 4))
    assert z.d == 2
    assert np.array_equal(np.asarray(z), [1, 2, 3, 4])
    assert delta(z, PhaseVector((0, 1, 0, 0))) == 1
    with pytest.raises(ValueError):
        PhaseVector((1, 2, 3))


def test_symplectic_matrix():
    assert np.array_equal(symplectic_matrix(1), [[0, 1], [-1, 0]])
    J = symplectic_matrix(3)
    assert np.array_equal(J + J.T, np.zeros((6, 6)))
    with pytest.raises(ValueError):
        symplectic_matrix(0)


def test_symplectic_matrix_matches_component_sum(rng):
    J = symplectic_matrix(2)
    for _ in range(50):
        z, w = rng.standard_normal((2, 4))
        assert abs(z @ J @ w - delta_by_components(z, w)) <= 1e-14


@settings(max_examples=200, deadline=None)
@given(phase(2), phase(2), phase(2), st.floats(-3, 3), st.floats(-3, 3))
def test_delta_bilinear_antisymmetric(z, w, u, a, b):
    lhs = delta(a * z + b * w, u)
    assert abs(lhs - a * delta(z, u) - b * delta(w, u)) <= 1e-12 * (1 + abs(lhs) + abs(a * delta(z, u)) + abs(b * delta(w, u)))
    assert delta(z, u) == -delta(u, z)


def test_apply_norming_examples():
    z = np.array([0.3, -1.0, 2.5, 4.0])
    assert np.array_equal(apply_norming([1, 1], z), z)
    assert np.array_equal(apply_norming([2], [1, 3]), [2, 6])
    assert np.array_equal(apply_norming([0.5, 3], [1, 1, 1, 1]), [0.5, 0.5, 3, 3])
    with pytest.raises(ValueError):
        apply_norming([1, 0], z)
    with pytest.raises(ValueError):
        apply_norming([1, -2], z)


@settings(max_examples=100, deadline=None)
@given(phase(2), phase(2), st.floats(-5, 5), arrays(np.float64, (2,), elements=st.floats(0.01, 10)))
def test_apply_norming_linear(z, w, c, a):
    assert np.allclose(apply_norming(a, z + w), apply_norming(a, z) + apply_norming(a, w), atol=1e-12)
    assert np.allclose(apply_norming(a, c * z), c * apply_norming(a, z), atol=1e-12)


def test_as_phase_batches():
    pts = as_phase(np.zeros((3, 5, 4)), 2)
    assert pts.shape == (3, 5, 4)
    with pytest.raises(ValueError):
        as_phase(np.zeros((3, 4)), 1)


def test_bound_sqrt_rule_passes():
    for d in (1, 3):
        assert check_admissibility_bound(NormingSequence.sqrt(d), 10_000) == []


def test_bound_inverse_n_flagged_for_n_ge_2():
    viol = check_admissibility_bound(NormingSequence.power(2, 1.0), 50)
    assert sorted({n for n, _, _ in viol}) == list(range(2, 51))
    assert {k for _, k, _ in viol} == {1, 2}
    assert (3, 1, 1 / 3) in viol


def test_bound_margin_rule_passes():
    assert check_admissibility_bound(NormingSequence.power(1, 0.5, 2.0), 1000) == []


def test_bound_custom_rule_and_table():
    seq = NormingSequence(lambda n: [1 / math.sqrt(n), 0.5 / math.sqrt(n)], 2)
    viol = check_admissibility_bound(seq, 4)
    assert [(n, k) for n, k, _ in viol] == [(1, 2), (2, 2), (3, 2), (4, 2)]
    table = NormingSequence.from_table({4: [0.5], 9: [0.3]}, 1)
    assert check_admissibility_bound(table, 100) == [(9, 1, 0.3)]


def test_norming_rejects_nonpositive():
    seq = NormingSequence(lambda n: [0.0], 1)
    with pytest.raises(ValueError):
        seq(3)
