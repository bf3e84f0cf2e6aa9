import json
import math

import numpy as np
import pytest

from bernmark.quasipoly import (
    ExpSpectrum,
    QuasiPolynomial,
    basis_derivatives_at_zero,
    critical_points,
)


def qp(values, coeffs):
    return QuasiPolynomial(ExpSpectrum.from_values(values), np.asarray(coeffs, float))


def random_poly(rng, max_degree=5):
    n = int(rng.integers(1, max_degree + 1))
    h = np.sort(rng.uniform(0.1, 3.0, n))
    # occasionally force a confluent block
    if n >= 2 and rng.random() < 0.3:
        h[1] = h[0]
    spec = ExpSpectrum.from_values(h)
    coeffs = rng.standard_normal(spec.degree)
    return QuasiPolynomial(spec, coeffs)


# -- spectrum construction -----------------------------------------------------


def test_spectrum_orders_and_merges():
    s = ExpSpectrum.from_values([2.0, 1.0, 1.0 + 1e-12])
    assert s.entries == ((1.0 + 0.5e-12, 2), (2.0, 1))
    assert s.degree == 3
    assert s.h_min == pytest.approx(1.0)
    assert list(s.expanded()) == pytest.approx([1.0, 1.0, 2.0])


def test_spectrum_rejects_bad_values():
    with pytest.raises(ValueError):
        ExpSpectrum.from_values([])
    with pytest.raises(ValueError):
        ExpSpectrum.from_values([-1.0])
    with pytest.raises(ValueError):
        ExpSpectrum.from_values([float("nan")])
    with pytest.raises(ValueError):
        ExpSpectrum([(1.0, 0)])


def test_spectrum_dominates():
    a = ExpSpectrum.from_values([0.5, 1.0])
    b = ExpSpectrum.from_values([0.6, 1.0])
    assert b.dominates(a)
    assert not a.dominates(b)
    with pytest.raises(ValueError):
        a.dominates(ExpSpectrum.from_values([1.0]))


def test_coefficient_count_enforced():
    s = ExpSpectrum([(1.0, 2)])
    with pytest.raises(ValueError):
        QuasiPolynomial(s, [1.0])
    with pytest.raises(ValueError):
        QuasiPolynomial(s, [1.0, float("inf")])


def test_coeffs_are_frozen():
    p = qp([1.0], [1.0])
    with pytest.raises(ValueError):
        p.coeffs[0] = 2.0


# -- evaluation ------------------------------------------------------------------


def test_evaluate_exponential_at_zero():
    assert qp([1.0], [1.0])(0.0) == 1.0


def test_evaluate_cancellation_at_zero():
    assert qp([1.0, 2.0], [1.0, -1.0])(0.0) == 0.0


def test_evaluate_confluent_basis():
    p = QuasiPolynomial(ExpSpectrum([(1.0, 2)]), [0.0, 1.0])  # t e^{-t}
    assert p(1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)


def test_evaluate_rejects_bad_points():
    p = qp([1.0], [1.0])
    with pytest.raises(ValueError):
        p(-0.5)
    with pytest.raises(ValueError):
        p(float("nan"))


def test_values_match_scalar():
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = random_poly(rng)
        ts = rng.uniform(0.0, 20.0, 16)
        ts[0] = 0.0
        vec = p.values(ts)
        scal = np.array([p(t) for t in ts])
        assert np.allclose(vec, scal, rtol=1e-12, atol=1e-14)


def test_decay_at_infinity():
    rng = np.random.default_rng(1)
    for _ in range(20):
        p = random_poly(rng)
        t = p.horizon(1e-9)
        assert abs(p(t)) <= 1e-9 * max(1.0, np.sum(np.abs(p.coeffs)))


# -- differentiation ---------------------------------------------------------------


def test_derivative_of_plain_exponential():
    p = qp([2.0], [1.0])
    dd = p.derivative(2)
    assert dd.spectrum is p.spectrum
    assert np.allclose(dd.coeffs, [4.0])


def test_derivative_product_rule():
    p = QuasiPolynomial(ExpSpectrum([(1.0, 2)]), [0.0, 1.0])  # t e^{-t}
    d = p.derivative()
    assert np.allclose(d.coeffs, [1.0, -1.0])  # (1 - t) e^{-t}


def test_derivative_sum_at_zero():
    p = qp([1.0, 3.0], [1.0, 1.0])
    assert p.derivative()(0.0) == pytest.approx(-4.0)


def test_derivative_order_zero_is_identity():
    p = qp([1.0, 2.0], [0.3, -0.7])
    assert np.array_equal(p.derivative(0).coeffs, p.coeffs)


def test_derivative_composes():
    rng = np.random.default_rng(2)
    for _ in range(20):
        p = random_poly(rng)
        a, b = int(rng.integers(0, 3)), int(rng.integers(0, 3))
        left = p.derivative(a).derivative(b)
        right = p.derivative(a + b)
        assert np.allclose(left.coeffs, right.coeffs, rtol=1e-12, atol=1e-12)


def test_derivative_at_zero_values():
    assert qp([1.0], [1.0]).derivative_at_zero(3) == pytest.approx(-1.0)
    p = QuasiPolynomial(ExpSpectrum([(1.0, 3)]), [0.0, 0.0, 1.0])  # t^2 e^{-t}
    assert p.derivative_at_zero(2) == pytest.approx(2.0)
    q = QuasiPolynomial(ExpSpectrum([(1.0, 2)]), [2.5, -0.5])
    assert q.derivative_at_zero(1) == pytest.approx(-2.5 - 0.5)


def test_derivative_at_zero_matches_full_derivative():
    rng = np.random.default_rng(3)
    for _ in range(30):
        p = random_poly(rng)
        ell = int(rng.integers(0, 5))
        direct = p.derivative_at_zero(ell)
        full = p.derivative(ell)(0.0)
        assert direct == pytest.approx(full, rel=1e-11, abs=1e-11)


def test_basis_derivatives_vector_is_consistent():
    s = ExpSpectrum([(0.5, 2), (2.0, 1)])
    d = basis_derivatives_at_zero(s, 2)
    p = QuasiPolynomial(s, [1.0, 2.0, -3.0])
    assert d @ p.coeffs == pytest.approx(p.derivative_at_zero(2))


# -- rescale -------------------------------------------------------------------------


def test_rescale_exponential():
    p = qp([1.0], [1.0])
    q = p.rescale(2.0)
    assert q.spectrum.entries == ((0.5, 1),)
    assert q.derivative_at_zero(1) == pytest.approx(-0.5)


def test_rescale_identity():
    p = qp([1.0, 2.0], [0.4, 0.6])
    q = p.rescale(1.0)
    assert q.spectrum.entries == p.spectrum.entries
    assert np.array_equal(q.coeffs, p.coeffs)


def test_rescale_rejects_nonpositive():
    with pytest.raises(ValueError):
        qp([1.0], [1.0]).rescale(0.0)
    with pytest.raises(ValueError):
        qp([1.0], [1.0]).rescale(-2.0)


def test_rescale_preserves_sup_norm():
    rng = np.random.default_rng(4)
    for _ in range(15):
        p = random_poly(rng)
        alpha = float(rng.uniform(0.3, 4.0))
        a = p.sup_norm().value
        b = p.rescale(alpha).sup_norm().value
        assert b == pytest.approx(a, rel=1e-8)


def test_rescale_scales_derivatives():
    rng = np.random.default_rng(5)
    for _ in range(15):
        p = random_poly(rng)
        alpha = float(rng.uniform(0.3, 4.0))
        ell = int(rng.integers(0, 4))
        lhs = p.rescale(alpha).derivative_at_zero(ell)
        rhs = alpha ** (-ell) * p.derivative_at_zero(ell)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


# -- sup norm ------------------------------------------------------------------------


def test_sup_norm_monotone_decay():
    value, argmax = qp([1.0], [1.0]).sup_norm()
    assert value == pytest.approx(1.0, abs=1e-12)
    assert argmax == 0.0


def test_sup_norm_interior_maximum():
    p = QuasiPolynomial(ExpSpectrum([(1.0, 2)]), [0.0, 1.0])
    value, argmax = p.sup_norm()
    assert value == pytest.approx(math.exp(-1.0), rel=1e-10)
    assert argmax == pytest.approx(1.0, abs=1e-9)


def test_sup_norm_endpoint_beats_interior():
    # (1 - 2t) e^{-t}: interior extremum 2 e^{-3/2} ~ 0.446 loses to |p(0)| = 1
    p = QuasiPolynomial(ExpSpectrum([(1.0, 2)]), [1.0, -2.0])
    value, argmax = p.sup_norm()
    assert value == pytest.approx(1.0, abs=1e-12)
    assert argmax == 0.0
    crit = critical_points(p)
    assert len(crit) == 1
    assert crit[0] == pytest.approx(1.5, abs=1e-9)
    assert abs(p(crit[0])) == pytest.approx(2.0 * math.exp(-1.5), rel=1e-10)


def test_sup_norm_zero_polynomial():
    p = QuasiPolynomial(ExpSpectrum([(1.0, 2)]), [0.0, 0.0])
    assert p.sup_norm() == (0.0, 0.0)


def test_sup_norm_against_dense_grid():
    rng = np.random.default_rng(6)
    for _ in range(25):
        p = random_poly(rng)
        value, _ = p.sup_norm()
        ts = np.linspace(0.0, p.horizon(1e-9), 20001)
        dense = float(np.max(np.abs(p.values(ts))))
        assert value >= dense - 1e-9 * max(1.0, dense)
        assert value <= dense * (1.0 + 1e-6) + 1e-12


def test_zero_count_bound():
    # a nonzero combination of n basis functions has at most n-1 sign changes
    rng = np.random.default_rng(7)
    for _ in range(1000):
        p = random_poly(rng, max_degree=5)
        n = p.spectrum.degree
        ts = np.linspace(1e-6, p.horizon(1e-9), 2000)
        vals = p.values(ts)
        vals = vals[np.abs(vals) > 1e-12 * np.max(np.abs(vals))]
        changes = int(np.sum(np.sign(vals[1:]) != np.sign(vals[:-1])))
        assert changes <= n - 1


def test_tail_bound_beyond_horizon():
    rng = np.random.default_rng(8)
    for _ in range(20):
        p = random_poly(rng)
        tmax = p.horizon(1e-9)
        h1 = p.spectrum.h_min
        j = p.spectrum.column_powers
        scale = float(np.sum(np.abs(p.coeffs) * tmax ** j.astype(float)))
        for t in np.linspace(tmax, 3.0 * tmax, 7):
            assert abs(p(t)) <= scale * math.exp(-h1 * t) * (1.0 + 1e-12)


# -- serialization ----------------------------------------------------------------


def test_json_round_trip():
    p = QuasiPolynomial(ExpSpectrum([(0.5, 2), (2.0, 1)]), [1.0, -2.0, 0.25])
    data = json.loads(json.dumps(p.to_dict()))
    assert data == {
        "exponents": [{"h": 0.5, "m": 2}, {"h": 2.0, "m": 1}],
        "coeffs": [1.0, -2.0, 0.25],
    }
    q = QuasiPolynomial.from_dict(data)
    assert q.spectrum.entries == p.spectrum.entries
    assert np.array_equal(q.coeffs, p.coeffs)
