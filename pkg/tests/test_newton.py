import numpy as np
import pytest

from fhnwave.config import MapLimits
from fhnwave.dynamics import PolynomialField
from fhnwave.interval import Interval
from fhnwave.newton import (
    MultiShootingSystem,
    NewtonVerdict,
    cyclic_matrix,
    interval_newton,
    newton_periodic,
    newton_step,
    precondition_blocks,
)
from fhnwave.poincare import AffineSection

# clockwise flow attracted to the unit circle, period 2 pi
LIMIT_CYCLE = PolynomialField(
    [
        [(1.0, (0, 1)), (1.0, (1, 0)), (-1.0, (3, 0)), (-1.0, (1, 2))],
        [(-1.0, (1, 0)), (1.0, (0, 1)), (-1.0, (2, 1)), (-1.0, (0, 3))],
    ]
)


def _square_minus_two(x: Interval) -> Interval:
    return x.sqr() - 2.0


def _twice(x: Interval) -> Interval:
    return (2.0 * x).reshape(1, 1)


def _cycle_sections(k: int = 4) -> list[AffineSection]:
    sections = []
    for i in range(k):
        angle = -2.0 * np.pi * i / k
        anchor = np.array([np.cos(angle), np.sin(angle)])
        tangent = np.array([anchor[1], -anchor[0]])
        sections.append(AffineSection.create(anchor, tangent))
    return sections


def test_unique_root_of_square_minus_two() -> None:
    outcome = interval_newton(_square_minus_two, _twice, 1.4, Interval(1.3, 1.5))
    assert outcome.verdict is NewtonVerdict.UNIQUE_ZERO
    assert outcome.proved
    assert bool(outcome.n_box[0].contains(np.sqrt(2.0)))
    assert float(outcome.margin.lo) > 0
    assert "UniqueZero" in str(outcome)


def test_regular_derivative_excludes_a_root() -> None:
    outcome = newton_step(Interval(-2.5), Interval(1.0), np.array([0.5]), Interval(0.0, 1.0))
    assert outcome.verdict is NewtonVerdict.NO_ZERO
    assert bool(outcome.n_box[0].contains(3.0))


def test_split_quotient_excludes_a_root() -> None:
    """x^2 + 1 has no real root; 2X contains zero on a box around the origin."""
    outcome = interval_newton(lambda x: x.sqr() + 1.0, _twice, 0.0, Interval(-0.4, 0.4))
    assert outcome.verdict is NewtonVerdict.NO_ZERO
    assert outcome.reason == "derivative contains zero"


def test_split_quotient_can_be_inconclusive() -> None:
    outcome = interval_newton(_square_minus_two, _twice, 1.0, Interval(-0.5, 2.5))
    assert outcome.verdict is NewtonVerdict.INCONCLUSIVE
    assert not outcome.proved
    assert "zero" in str(outcome)


def test_circle_and_diagonal_meet_once() -> None:
    def f(x: Interval) -> Interval:
        return Interval.stack([x[0].sqr() + x[1].sqr() - 1.0, x[0] - x[1]])

    def df(x: Interval) -> Interval:
        return Interval.stack([2.0 * x[0], 2.0 * x[1], Interval(1.0), Interval(-1.0)]).reshape(2, 2)

    x0 = np.full(2, 0.7071)
    outcome = interval_newton(f, df, x0, Interval(x0 - 1e-3, x0 + 1e-3))
    assert outcome.proved, str(outcome)
    assert np.all(outcome.n_box.contains(np.full(2, np.sqrt(0.5))))
    assert outcome.radius < outcome.box_radius


def test_singular_matrix_is_inconclusive() -> None:
    box = Interval.symmetric(np.ones(2))
    outcome = newton_step(Interval([1.0, 1.0]), np.zeros((2, 2)), np.zeros(2), box)
    assert outcome.verdict is NewtonVerdict.INCONCLUSIVE
    assert "singular" in outcome.reason


def test_initial_point_must_be_in_the_box() -> None:
    with pytest.raises(ValueError, match="x0"):
        newton_step(Interval(0.0), Interval(1.0), np.array([2.0]), Interval(0.0, 1.0))


def test_cyclic_matrix_layout() -> None:
    blocks = np.arange(12, dtype=np.float64).reshape(3, 2, 2)
    a = cyclic_matrix(blocks)
    assert a.shape == (6, 6)
    np.testing.assert_array_equal(a[2:4, 2:4], blocks[1])
    np.testing.assert_array_equal(a[0:2, 2:4], -np.eye(2))
    np.testing.assert_array_equal(a[4:6, 0:2], -np.eye(2))
    np.testing.assert_array_equal(a[0:2, 4:6], np.zeros((2, 2)))


def test_block_preconditioning_matches_dense_product() -> None:
    rng = np.random.default_rng(3)
    blocks = rng.normal(size=(3, 2, 2))
    c = rng.normal(size=(6, 6))
    got = precondition_blocks(c, Interval(blocks))
    np.testing.assert_allclose(got.mid(), c @ cyclic_matrix(blocks), atol=1e-12)
    assert got.max_width() < 1e-12


def test_cyclic_system_needs_two_sections() -> None:
    with pytest.raises(ValueError, match="at least two"):
        MultiShootingSystem.from_sections(_cycle_sections()[:1], LIMIT_CYCLE)
    system = MultiShootingSystem.from_sections(_cycle_sections(), LIMIT_CYCLE)
    with pytest.raises(ValueError, match="radius"):
        newton_periodic(system, 0.0)


def test_limit_cycle_is_proved() -> None:
    system = MultiShootingSystem.from_sections(_cycle_sections(), LIMIT_CYCLE)
    assert system.k == 4
    assert system.section_dim == 1
    np.testing.assert_allclose(system.targets.origin[3], system.anchors[0])
    outcome = newton_periodic(system, 1e-6, jobs=2)
    assert outcome.proved, str(outcome)
    assert outcome.period is not None
    assert bool(outcome.period.contains(2.0 * np.pi))
    assert outcome.period.max_width() < 1e-4


def test_shifted_guess_excludes_an_orbit() -> None:
    system = MultiShootingSystem.from_sections(_cycle_sections(), LIMIT_CYCLE)
    outcome = newton_periodic(system, 1e-6, x0=np.full(4, 1e-3))
    assert outcome.verdict is NewtonVerdict.NO_ZERO


def test_map_failure_is_inconclusive() -> None:
    system = MultiShootingSystem.from_sections(
        _cycle_sections(), LIMIT_CYCLE, limits=MapLimits(max_time=0.1)
    )
    outcome = newton_periodic(system, 1e-6)
    assert outcome.verdict is NewtonVerdict.INCONCLUSIVE
    assert "NoCrossing" in outcome.reason
