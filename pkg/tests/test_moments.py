import io

import numpy as np
import pytest

from weylclt.charfn import OperatorBacked
from weylclt.fock import FockSpace, make_state
from weylclt.moments import (DiscreteMeasure, LinearityError, commuting_family_check, component_decomposition,
                             covariance_from_variances, m1, m2, mean_vector, moment_inequality_check, sigma2,
                             spectral_measure)


def test_dirac_at_zero():
    T = make_state(FockSpace(1, 8), "ginibre", seed=0)
    mu = spectral_measure(T, (0, 0))
    assert list(mu.values) == [0.0] and list(mu.weights) == [1.0]
    assert (m1(mu), m2(mu), sigma2(mu)) == (0, 0, 0)


def test_vacuum_moments():
    mu = spectral_measure(make_state(FockSpace(1, 40), "vacuum"), (1, 0))
    assert mu.is_probability()
    assert m1(mu) == pytest.approx(0, abs=1e-14)
    assert m2(mu) == pytest.approx(0.5, abs=1e-13)
    assert sigma2(mu) == pytest.approx(0.5, abs=1e-13)


@pytest.mark.parametrize("z", [(1, 0), (0, 1), (0.6, 0.8)])
def test_number_state_second_moment(z):
    # <1|p^2|1> = <1|q^2|1> = n + 1/2, and <1|pq + qp|1> = 0
    T = make_state(FockSpace(1, 3), "number", n=1)
    assert m2(spectral_measure(T, z)) == pytest.approx(1.5, abs=1e-13)


def test_unpadded_truncation_loses_second_moment():
    T = make_state(FockSpace(1, 2), "number", n=1)
    assert m2(spectral_measure(T, (1, 0), padding=0)) == pytest.approx(0.5)
    assert m2(spectral_measure(T, (1, 0))) == pytest.approx(1.5)


def test_spectral_charfn_matches_operator_charfn():
    T = make_state(FockSpace(1, 40), "coherent", alpha=0.4 - 0.3j)
    f = OperatorBacked(T)
    for z in [np.array([0.6, 0.2]), np.array([-0.3, 0.9])]:
        mu = spectral_measure(T, z)
        t = np.linspace(-2, 2, 21)
        assert np.abs(mu.charfn(t) - f.evaluate(t[:, None] * z)).max() <= 1e-8


def test_degenerate_atoms_merged():
    T = make_state(FockSpace(2, 3), "ginibre", seed=2)
    mu = spectral_measure(T, (1, 0, 1, 0))
    assert len(mu.values) == len(np.unique(np.round(mu.values, 6)))
    assert mu.is_probability()


def test_mean_vector_examples():
    assert np.allclose(mean_vector(make_state(FockSpace(2, 4), "vacuum")), 0, atol=1e-14)
    z0 = np.array([0.8, -0.5])
    assert np.abs(mean_vector(make_state(FockSpace(1, 40), "coherent", z0=z0)) - z0).max() <= 1e-6
    mixed = make_state(FockSpace(1, 5), "explicit", matrix=np.eye(5) / 5)
    assert np.allclose(mean_vector(mixed), 0, atol=1e-14)


def test_mean_vector_linearity_failure_raised():
    T = make_state(FockSpace(1, 6), "ginibre", seed=1)
    with pytest.raises(LinearityError):
        mean_vector(T, tol=-1.0)


def test_thermal_covariance():
    nbar = 0.8
    Q = covariance_from_variances(make_state(FockSpace(1, 80), "thermal", nbar=nbar))
    assert np.allclose(Q, (2 * nbar + 1) / 2 * np.eye(2), atol=1e-12)


def test_component_decomposition():
    (only,) = component_decomposition([1.0, 2.0])
    assert np.array_equal(only, [1, 2])
    parts = component_decomposition([1, 2, 3, 4])
    assert [p.tolist() for p in parts] == [[1, 2, 0, 0], [0, 0, 3, 4]]
    rng = np.random.default_rng(0)
    for _ in range(10):
        z = rng.standard_normal(6)
        assert np.array_equal(sum(component_decomposition(z)), z)


def test_commuting_family():
    sp = FockSpace(2, 5)
    rng = np.random.default_rng(3)
    for _ in range(5):
        comm, additivity = commuting_family_check(sp, rng.standard_normal(4))
        assert comm == 0.0
        assert additivity <= 1e-13
    assert commuting_family_check(FockSpace(1, 5), (1.0, 2.0)) == (0.0, 0.0)


def test_moment_inequality_examples():
    T = make_state(FockSpace(1, 6), "ginibre", seed=0)
    lhs, rhs, ok = moment_inequality_check(T, (0.3, 1.1))
    assert ok and lhs == pytest.approx(rhs)
    vac = make_state(FockSpace(2, 6), "vacuum")
    lhs, rhs, ok = moment_inequality_check(vac, (1, 0, 1, 0))
    assert ok and lhs == pytest.approx(1.0) and rhs == pytest.approx(2.0)
    g = make_state(FockSpace(2, 6), "ginibre", seed=5)
    assert moment_inequality_check(g, (0.4, -1.0, 2.0, 0.3))[2]


def test_discrete_measure_validation_and_csv():
    with pytest.raises(ValueError):
        DiscreteMeasure([0, 1], [0.5, -0.5])
    with pytest.raises(ValueError):
        DiscreteMeasure([0, np.inf], [0.5, 0.5])
    mu = DiscreteMeasure([-1.0, 2.0], [0.25, 0.75])
    buf = io.StringIO()
    mu.to_csv(buf)
    assert buf.getvalue().splitlines()[0] == "value,weight"
    back = DiscreteMeasure.from_csv(io.StringIO(buf.getvalue()))
    assert np.array_equal(back.values, mu.values) and np.array_equal(back.weights, mu.weights)
    assert m1(mu) == pytest.approx(1.25)
    assert sigma2(mu) == pytest.approx(0.25 + 3.0 - 1.25 ** 2)


def test_variance_never_negative():
    rng = np.random.default_rng(11)
    T = make_state(FockSpace(2, 4), "ginibre", seed=3)
    for z in rng.standard_normal((20, 4)):
        assert sigma2(spectral_measure(T, z)) >= 0
