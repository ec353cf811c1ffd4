from fractions import Fraction

import numpy as np
import pytest

from fhnwave.errors import DivisionByZeroInterval, SingularEnclosure
from fhnwave.interval import (
    Interval,
    cross,
    dot,
    gauss_solve_enclose,
    inverse,
    iv_arith,
    leading_minors3,
    subdivide,
)


def _exact_hull(op: str, a: tuple[float, float], b: tuple[float, float]) -> tuple[Fraction, ...]:
    fa = [Fraction(x) for x in a]
    fb = [Fraction(x) for x in b]
    match op:
        case "add":
            values = [x + y for x in fa for y in fb]
        case "sub":
            values = [x - y for x in fa for y in fb]
        case "mul":
            values = [x * y for x in fa for y in fb]
        case _:
            values = [x / y for x in fa for y in fb]
    return min(values), max(values)


def test_add_small_integers() -> None:
    r = iv_arith("add", Interval(1.0, 2.0), Interval(3.0, 4.0))
    assert r.lo <= 4.0
    assert r.hi >= 6.0
    assert 6.0 - r.hi > -6 * np.spacing(6.0)
    assert r.lo - 4.0 > -6 * np.spacing(4.0)


def test_mul_mixed_signs() -> None:
    r = iv_arith("mul", Interval(-1.0, 2.0), Interval(3.0, 4.0))
    assert r.contains(Interval(-4.0, 8.0))


def test_decimal_sum_contains_exact_rational() -> None:
    r = Interval.from_decimal("0.1") + Interval.from_decimal("0.2")
    assert Fraction(float(r.lo)) <= Fraction(3, 10) <= Fraction(float(r.hi))


def test_random_operations_enclose_exact_results() -> None:
    rng = np.random.default_rng(7)
    for _ in range(500):
        a = tuple(sorted(rng.uniform(-10, 10, size=2)))
        b = tuple(sorted(rng.uniform(-10, 10, size=2)))
        ops = ["add", "sub", "mul"]
        if b[0] > 0 or b[1] < 0:
            ops.append("div")
        for op in ops:
            r = iv_arith(op, Interval(*a), Interval(*b))
            lo, hi = _exact_hull(op, a, b)
            assert Fraction(float(r.lo)) <= lo
            assert hi <= Fraction(float(r.hi))


def test_inclusion_monotonicity() -> None:
    a, b = Interval(0.3, 0.4), Interval(-0.2, 0.7)
    wide_a, wide_b = Interval(0.1, 0.5), Interval(-0.3, 0.9)
    for op in ("add", "sub", "mul"):
        assert iv_arith(op, wide_a, wide_b).contains(iv_arith(op, a, b))


def test_division_by_interval_containing_zero() -> None:
    with pytest.raises(DivisionByZeroInterval):
        iv_arith("div", Interval(1.0), Interval(-1.0, 1.0))
    with pytest.raises(ValueError, match="unknown"):
        iv_arith("pow", Interval(1.0), Interval(2.0))


def test_division_reports_offending_cell() -> None:
    divisor = Interval([1.0, 2.0, -1.0], [2.0, 3.0, 1.0])
    with pytest.raises(DivisionByZeroInterval) as info:
        Interval.zeros(3) / divisor
    assert info.value.cell == 2


def test_decimal_literals() -> None:
    x = Interval.from_decimal("0.025044220")
    q = Fraction("0.025044220")
    assert Fraction(float(x.lo)) < q < Fraction(float(x.hi))
    assert Interval.from_decimal("0.5").is_thin()
    assert Interval.from_decimal("0.1", exact=True).is_thin()
    m = Interval.from_decimals([["1", "1"], ["0.34113340", "-0.21913340"]])
    assert m.shape == (2, 2)
    assert not m[1, 0].is_thin()


def test_hex_endpoints() -> None:
    x = Interval.from_decimal("0.61")
    lo, hi = x.to_hex()
    assert float.fromhex(lo) == float(x.lo)
    back = Interval.from_hex(lo, hi)
    assert back.lo == x.lo
    assert back.hi == x.hi


def test_nan_endpoints_become_whole_line() -> None:
    r = Interval(np.inf) - Interval(np.inf)
    assert r.lo == -np.inf
    assert r.hi == np.inf


def test_reversed_bounds_rejected() -> None:
    with pytest.raises(ValueError, match="exceeds"):
        Interval(1.0, 0.0)


def test_powers_and_abs() -> None:
    x = Interval(-1.0, 2.0)
    sq = x.sqr()
    assert sq.lo == 0.0
    assert sq.hi >= 4.0
    assert (x**2).lo == 0.0
    cube = Interval(-2.0, -1.0) ** 3
    assert cube.contains(Interval(-8.0, -1.0))
    assert abs(x).lo == 0.0
    assert abs(Interval(-3.0, -2.0)).contains(Interval(2.0, 3.0))
    assert Interval(4.0).sqrt().contains(2.0)
    with pytest.raises(ValueError, match="negative"):
        x.sqrt()


def test_measures_and_set_relations() -> None:
    x = Interval(-1.0, 3.0)
    assert x.mid() == 1.0
    assert x.mag() == 3.0
    assert x.mig() == 0.0
    assert Interval(2.0, 5.0).mig() == 2.0
    assert x.rad() >= 2.0
    assert bool(Interval(0.0, 1.0).strictly_inside(x))
    assert not bool(Interval(-1.0, 1.0).strictly_inside(x))
    assert bool(Interval(4.0, 5.0).disjoint(x))
    assert x.hull(Interval(5.0)).contains(Interval(-1.0, 5.0))
    assert x.intersect(Interval(2.0, 7.0)).contains(Interval(2.0, 3.0))
    with pytest.raises(ValueError, match="empty"):
        x.intersect(Interval(4.0, 5.0))
    kept = Interval([0.0, 0.0], [1.0, 1.0]).intersect_or_keep(Interval([0.5, 2.0], [3.0, 3.0]))
    assert kept.lo.tolist() == [0.5, 0.0]
    assert kept.hi.tolist() == [1.0, 1.0]
    assert x.inflate(2.0).contains(Interval(-3.0, 5.0))


def test_matrix_products() -> None:
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[0.0, 1.0], [5.0, -2.0]])
    prod = Interval(a) @ Interval(b)
    assert np.all(prod.contains(a @ b))
    v = Interval(a) @ Interval([1.0, -1.0])
    assert np.all(v.contains(np.array([-1.0, -1.0])))
    assert bool(dot(Interval([1.0, 2.0, 3.0]), [4.0, 5.0, 6.0]).contains(32.0))
    c = cross(Interval([1.0, 0.0, 0.0]), Interval([0.0, 1.0, 0.0]))
    assert np.all(c.contains(np.array([0.0, 0.0, 1.0])))


def test_batched_cells_keep_leading_axis() -> None:
    x = Interval(np.zeros((5, 3)), np.ones((5, 3)))
    y = x * 2.0 + 1.0
    assert y.shape == (5, 3)
    assert np.all(y.contains(Interval(1.0, 3.0)))


def test_gauss_identity() -> None:
    x = gauss_solve_enclose(Interval.eye(2), Interval([1.0, 2.0]))
    assert np.all(x.contains(np.array([1.0, 2.0])))
    assert x.max_width() <= 16 * np.spacing(2.0)


def test_gauss_diagonal() -> None:
    a = Interval(np.array([[2.0, 0.0], [0.0, 4.0]]))
    x = gauss_solve_enclose(a, Interval([2.0, 4.0]))
    assert np.all(x.contains(np.array([1.0, 1.0])))


def test_gauss_random_systems_match_float_solve() -> None:
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.normal(size=(3, 3)) + 4.0 * np.eye(3)
        b = rng.normal(size=3)
        x = gauss_solve_enclose(Interval(a), Interval(b))
        expected = np.linalg.solve(a, b)
        assert np.all(x.lo - 1e-12 <= expected)
        assert np.all(expected <= x.hi + 1e-12)
        assert x.max_width() < 1e-12


def test_gauss_encloses_interval_systems() -> None:
    a = Interval(np.array([[3.0, 0.9], [1.0, 4.0]]), np.array([[3.1, 1.1], [1.0, 4.2]]))
    b = Interval([1.0, 2.0])
    x = gauss_solve_enclose(a, b)
    for pick in ([[3.0, 0.9], [1.0, 4.0]], [[3.1, 1.1], [1.0, 4.2]], [[3.05, 1.0], [1.0, 4.1]]):
        sol = np.linalg.solve(np.array(pick), [1.0, 2.0])
        assert np.all((x.lo - 1e-12 <= sol) & (sol <= x.hi + 1e-12))


def test_gauss_singular() -> None:
    with pytest.raises(SingularEnclosure):
        gauss_solve_enclose(Interval(np.ones((2, 2))), Interval([1.0, 1.0]))


def test_inverse_contains_float_inverse() -> None:
    a = np.array([[2.0, 1.0], [1.0, 3.0]])
    inv = inverse(Interval(a))
    expected = np.linalg.inv(a)
    assert np.all(inv.lo - 1e-14 <= expected)
    assert np.all(expected <= inv.hi + 1e-14)


def test_leading_minors() -> None:
    m = Interval(np.array([[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]]))
    m1, m2, m3 = leading_minors3(m)
    assert bool(m1.contains(2.0))
    assert bool(m2.contains(5.0))
    assert bool(m3.contains(18.0))


def test_subdivide_unit_interval() -> None:
    cells = subdivide(Interval([0.0], [1.0]), [2])
    assert cells.lo[:, 0].tolist() == [0.0, 0.5]
    assert cells.hi[:, 0].tolist() == [0.5, 1.0]


def test_subdivide_counts_and_shared_faces() -> None:
    box = Interval([0.0, 0.0], [1.0, 1.0])
    cells = subdivide(box, [20, 20])
    assert cells.shape == (400, 2)
    assert float(cells.lo.min()) == 0.0
    assert float(cells.hi.max()) == 1.0
    line = subdivide(Interval([-1.0], [1.0]), [7])
    assert np.array_equal(line.hi[:-1, 0], line.lo[1:, 0])


def test_subdivide_single_part_is_identity() -> None:
    box = Interval([-0.3, 1.0, 2.0], [0.2, 1.5, 2.5])
    cells = subdivide(box, [1, 1, 1])
    assert cells.shape == (1, 3)
    assert np.array_equal(cells.lo[0], box.lo)
    assert np.array_equal(cells.hi[0], box.hi)
    with pytest.raises(ValueError, match="one count"):
        subdivide(box, [1, 1])
