from fractions import Fraction
from math import factorial

import numpy as np
import pytest

from fhnwave.dynamics import (
    FhnParams,
    PolynomialField,
    fast_eigenframe,
    fast_eigenvalues,
    fast_equilibrium,
    fast_eval,
    fhn_eval,
    fhn_jacobian,
    fhn_rhs,
    fhn_slow_row_factored,
    taylor_coeffs,
)
from fhnwave.dynamics.fhn import cubic_float, fhn_jacobian_float
from fhnwave.interval import Interval

GAMMA_DL = np.array([-0.10841296, 0.0, 0.025044220])


def _inside(x: Interval, value: Fraction) -> bool:
    return Fraction(float(x.lo)) <= value <= Fraction(float(x.hi))


def test_params_validation() -> None:
    with pytest.raises(ValueError, match="theta"):
        FhnParams.create("-0.61")
    with pytest.raises(ValueError, match="eps"):
        FhnParams.create("0.61", Interval(-1e-3, 1e-3))
    p = FhnParams.create("0.61", "0.001")
    assert p.with_eps(0.0).eps.is_thin()
    assert p.with_theta("1.2").theta.contains(1.2)


def test_field_vanishes_at_origin() -> None:
    p = FhnParams.create("0.61", "0.001")
    f = fhn_eval(np.zeros(3), p)
    assert np.all(f.contains(np.zeros(3)))
    assert f.max_width() < 1e-300


def test_field_at_upper_cubic_root() -> None:
    p = FhnParams.create("0.61", "0.001")
    f = fhn_eval(np.array([1.0, 0.0, 0.0]), p)
    assert bool(f[0].contains(0.0))
    assert bool(f[1].contains(0.0))
    assert _inside(f[2], Fraction(1, 1000) / Fraction(61, 100))


def test_field_at_left_corner_of_singular_loop() -> None:
    f = fhn_eval(GAMMA_DL, FhnParams.create("0.61", 0.0))
    assert bool(f[0].contains(0.0))
    assert float(f[1].mag()) <= 1e-7
    assert bool(f[2].contains(0.0))


def test_field_is_monotone_in_eps() -> None:
    x = np.array([0.3, -0.05, 0.04])
    wide = fhn_eval(x, FhnParams.create("0.61", Interval(0.0, 1e-3)))
    for eps in (0.0, 2.5e-4, 7e-4, 1e-3):
        assert np.all(wide.contains(fhn_eval(x, FhnParams.create("0.61", eps))))


def test_batched_parameters_give_one_field_per_cell() -> None:
    theta = Interval([0.6, 0.7], [0.61, 0.71])
    p = FhnParams(theta=theta, eps=Interval(1e-3).broadcast_to((2,)))
    f = fhn_eval(np.array([0.5, 0.1, 0.0]), p)
    assert f.shape == (2, 3)


def test_jacobian_at_origin() -> None:
    j = fhn_jacobian(np.zeros(3), FhnParams.create("0.61", "0.001"))
    assert np.all(j[0].contains(np.array([0.0, 1.0, 0.0])))
    assert bool(j[1, 0].contains(0.02))
    assert bool(j[1, 2].contains(0.2))


def test_jacobian_slow_row_vanishes_without_eps() -> None:
    j = fhn_jacobian(np.array([0.4, 0.1, 0.05]), FhnParams.create("0.61", 0.0))
    assert float(j[2].mag().max()) < 1e-300


def test_jacobian_matches_finite_differences() -> None:
    rng = np.random.default_rng(11)
    theta, eps, h = 0.61, 1e-3, 1e-6
    p = FhnParams.create(theta, eps)
    for _ in range(10):
        x = rng.uniform(-0.5, 1.2, size=3)
        j = fhn_jacobian(x, p)
        for k in range(3):
            dx = np.zeros(3)
            dx[k] = h
            column = (fhn_rhs(x + dx, theta, eps) - fhn_rhs(x - dx, theta, eps)) / (2 * h)
            assert np.all(j[:, k].lo - 1e-6 <= column)
            assert np.all(column <= j[:, k].hi + 1e-6)


def test_jacobian_slow_row_is_eps_times_factored_row() -> None:
    p = FhnParams.create("0.61", Interval(1e-4, 2e-4))
    row = fhn_jacobian(np.array([0.2, 0.0, 0.1]), p)[2]
    factored = fhn_slow_row_factored(p)
    assert np.all(row.contains(p.eps * factored))
    for eps in (1e-4, 1.5e-4, 2e-4):
        assert np.all(row.contains(eps * factored.mid()))


def test_fast_subsystem() -> None:
    assert np.all(fast_eval(0.0, 0.0, 0.0, "0.61").contains(np.zeros(2)))
    assert np.all(fast_eval(0.1, 0.0, 0.0, "0.61").contains(np.zeros(2)))
    f = fast_eval(0.5, 0.0, 0.0, "0.61")
    assert bool(f[0].contains(0.0))
    assert _inside(f[1], Fraction(-2, 100))


def test_eigen_slopes_of_left_corner() -> None:
    lu, ls = fast_eigenvalues(GAMMA_DL[0], 0.61)
    assert lu > 0 > ls
    assert lu + ls == pytest.approx(0.2 * 0.61, abs=1e-12)
    frame = fast_eigenframe(GAMMA_DL[0], 0.61)
    np.testing.assert_allclose(frame, [[1.0, 1.0], [0.34113340, -0.21913340]], atol=1e-6)


def test_fast_equilibrium_on_lower_branch() -> None:
    u = fast_equilibrium(0.025044220, -0.1)
    assert u == pytest.approx(-0.10841296, abs=1e-7)
    assert abs(float(cubic_float(u)) - 0.025044220) <= 1e-12


def test_taylor_coefficients_at_equilibrium() -> None:
    coeffs = taylor_coeffs(np.zeros(3), FhnParams.create("0.61", "0.001"), 6)
    assert len(coeffs) == 7
    for c in coeffs[1:]:
        assert np.all(c.contains(np.zeros(3)))
        assert float(c.mag().max()) < 1e-300


def test_taylor_first_two_coefficients() -> None:
    theta, eps = 0.61, 1e-3
    p = FhnParams.create(theta, eps)
    x = np.array([0.3, -0.02, 0.05])
    coeffs = taylor_coeffs(x, p, 4)
    assert np.all(coeffs[0].contains(x))
    np.testing.assert_allclose(coeffs[1].mid(), fhn_eval(x, p).mid(), atol=1e-15)
    expected = 0.5 * fhn_jacobian_float(x, theta, eps) @ fhn_rhs(x, theta, eps)
    np.testing.assert_allclose(coeffs[2].mid(), expected, atol=1e-12)
    with pytest.raises(ValueError, match="order"):
        taylor_coeffs(x, p, 0)


def test_expanded_field_agrees_with_factored_form() -> None:
    p = FhnParams.create("0.61", "0.001")
    x = np.array([0.7, 0.03, 0.09])
    expanded = p.vector_field.eval(x)
    assert np.all(expanded.overlaps(fhn_eval(x, p)))
    backward = p.vector_field.negated().eval(x)
    np.testing.assert_allclose(backward.mid(), -expanded.mid(), atol=1e-15)


def test_recurrence_on_exponential_field() -> None:
    field = PolynomialField([[(1.0, (1,))]])
    coeffs = field.taylor_coefficients(np.array([1.0]), 8)
    for k, c in enumerate(coeffs):
        assert _inside(c[0], Fraction(1, factorial(k)))
    _, phis = field.variational_coefficients(np.array([1.0]), 5)
    for k, phi in enumerate(phis):
        assert _inside(phi[0, 0], Fraction(1, factorial(k)))


def test_recurrence_on_harmonic_oscillator() -> None:
    field = PolynomialField([[(1.0, (0, 1))], [(-1.0, (1, 0))]])
    coeffs = field.taylor_coefficients(np.array([1.0, 0.0]), 6)
    for k, c in enumerate(coeffs):
        if k % 2 == 0:
            assert _inside(c[0], Fraction((-1) ** (k // 2), factorial(k)))
            assert bool(c[1].contains(0.0))
        else:
            assert bool(c[0].contains(0.0))
            assert _inside(c[1], Fraction((-1) ** ((k + 1) // 2), factorial(k)))
