import numpy as np
import pytest
from scipy.linalg import expm

from fhnwave.dynamics import FhnParams, PolynomialField
from fhnwave.dynamics.fhn import fhn_jacobian_float
from fhnwave.errors import NoEnclosure
from fhnwave.integrator import FlowSet, TaylorIntegrator, c0_step, c1_step, rough_enclosure
from fhnwave.interval import Interval
from fhnwave.oracle.flow import rk_orbit

EXPONENTIAL = PolynomialField([[(1.0, (1,))]])
OSCILLATOR = PolynomialField([[(1.0, (0, 1))], [(-1.0, (1, 0))]])


def _near(x: Interval, value: np.ndarray, tol: float) -> bool:
    return bool(np.all((x.lo - tol <= value) & (value <= x.hi + tol)))


def test_rough_enclosure_of_exponential() -> None:
    z = rough_enclosure(Interval([1.0]), EXPONENTIAL, 0.1)
    assert float(z.lo[0]) >= 0.9
    assert float(z.hi[0]) <= 1.3
    assert bool(z[0].contains(Interval(1.0, np.exp(0.1))))


def test_rough_enclosure_at_equilibrium() -> None:
    z = rough_enclosure(np.zeros(3), FhnParams.create("0.61", "0.001"), 0.5)
    assert np.all(z.contains(np.zeros(3)))
    assert float(z.mag().max()) < 1e-10


def test_rough_enclosure_contains_float_trajectory() -> None:
    p = FhnParams.create(0.61, 0.001)
    x0 = np.array([0.3, 0.01, 0.05])
    z = rough_enclosure(x0, p, 0.1)
    orbit = rk_orbit(x0, p, 0.1, samples=11)
    for x in orbit.x:
        assert np.all(z.contains(x))


def test_rough_enclosure_fails_for_huge_step() -> None:
    with pytest.raises(NoEnclosure):
        rough_enclosure(Interval([1.0]), EXPONENTIAL, 1e3)


def test_c0_step_on_exponential() -> None:
    s = FlowSet.from_box(Interval([1.0]))
    result = c0_step(s, EXPONENTIAL, 0.1, 10)
    hull = result.next.hull
    assert _near(hull, np.array([np.exp(0.1)]), 1e-15)
    assert hull.max_width() <= 1e-10
    assert bool(result.next.time.contains(0.1))


def test_c0_step_keeps_equilibrium() -> None:
    s = FlowSet.from_box(Interval(np.zeros(3)))
    result = c0_step(s, FhnParams.create("0.61", "0.001"), 0.5)
    assert np.all(result.next.hull.contains(np.zeros(3)))
    assert result.next.hull.max_width() <= 1e-14


def test_harmonic_oscillator_full_turn() -> None:
    t_end = 2 * np.pi
    s = FlowSet.from_box(Interval([1.0, 0.0]))
    out = TaylorIntegrator(OSCILLATOR).integrate(s, t_end)
    expected = np.array([np.cos(t_end), -np.sin(t_end)])
    assert _near(out.hull, expected, 1e-12)
    assert out.hull.max_width() < 1e-8
    assert bool(out.time.contains(t_end))


def test_harmonic_oscillator_in_fixed_steps() -> None:
    h = 2 * np.pi / 63
    s = FlowSet.from_box(Interval([1.0, 0.0]))
    for _ in range(63):
        s = c0_step(s, OSCILLATOR, h).next
    t = 63 * h
    assert _near(s.hull, np.array([np.cos(t), -np.sin(t)]), 1e-12)
    radius = s.hull[0].sqr() + s.hull[1].sqr()
    assert bool(radius.contains(1.0))


def test_box_is_carried_with_its_frame() -> None:
    s = FlowSet.from_box(Interval([0.9, -0.1], [1.1, 0.1]))
    out = TaylorIntegrator(OSCILLATOR).integrate(s, np.pi / 2)
    # the box rotates rigidly by a quarter turn
    assert _near(out.hull, np.array([-0.1, -1.1]), 1e-10)
    assert _near(out.hull, np.array([0.1, -0.9]), 1e-10)
    assert out.hull.max_width() < 0.2 + 1e-8


def test_widths_shrink_with_order() -> None:
    widths = []
    for order in (4, 6, 8, 10):
        s = FlowSet.from_box(Interval([1.0]))
        for _ in range(2):
            s = c0_step(s, EXPONENTIAL, 0.5, order).next
        assert _near(s.hull, np.array([np.e]), 1e-14)
        widths.append(s.hull.max_width())
    assert widths == sorted(widths, reverse=True)
    assert widths[0] > widths[-1]


def test_stored_hull_matches_evaluation() -> None:
    s = c0_step(FlowSet.from_box(Interval([0.2, 0.0, 0.05])), FhnParams.create(0.61, 0.0), 0.2)
    hull, again = s.next.hull, s.next.evaluate_hull()
    assert np.array_equal(hull.lo, again.lo)
    assert np.array_equal(hull.hi, again.hi)


def test_batched_cells_step_together() -> None:
    lo = np.array([[0.1, 0.0, 0.02], [0.5, 0.01, 0.03], [0.9, -0.01, 0.05]])
    s = FlowSet.from_box(Interval(lo, lo + 1e-6))
    result = c0_step(s, FhnParams.create("0.61", "0.001"), 0.1)
    assert result.next.batch_shape == (3,)
    for k in range(3):
        box = FlowSet.from_box(Interval(lo[k], lo[k] + 1e-6))
        single = c0_step(box, FhnParams.create("0.61", "0.001"), 0.1)
        assert np.all(result.next.hull[k].overlaps(single.next.hull))


def test_enclosure_contains_float_orbits() -> None:
    rng = np.random.default_rng(5)
    p = FhnParams.create(0.61, 0.001)
    integrator = TaylorIntegrator(p)
    for _ in range(5):
        x0 = np.array([rng.uniform(-0.2, 1.0), rng.uniform(-0.1, 0.1), rng.uniform(0.0, 0.1)])
        out = integrator.integrate(FlowSet.from_box(Interval(x0)), 2.0)
        end = rk_orbit(x0, p, 2.0, 1e-12).end
        assert _near(out.hull, end, 1e-9)


def test_monodromy_of_exponential() -> None:
    s = FlowSet.from_box(Interval([1.0]))
    out, v = TaylorIntegrator(EXPONENTIAL).integrate_c1(s, 1.0)
    assert _near(out.hull, np.array([np.e]), 1e-14)
    assert _near(v.hull, np.array([[np.e]]), 1e-14)
    assert v.hull.max_width() <= 1e-8


def test_monodromy_at_origin_matches_matrix_exponential() -> None:
    h = 0.5
    s = FlowSet.from_box(Interval(np.zeros(3)))
    _, v = c1_step(s, np.eye(3), FhnParams.create(0.61, 0.0), h)
    expected = expm(h * fhn_jacobian_float(np.zeros(3), 0.61, 0.0))
    assert _near(v.hull, expected, 1e-8)


def test_monodromy_of_tiny_step_is_identity() -> None:
    s = FlowSet.from_box(Interval([0.3, 0.0, 0.05]))
    _, v = c1_step(s, np.eye(3), FhnParams.create(0.61, 0.001), 1e-9)
    assert _near(v.hull, np.eye(3), 1e-6)


def test_integrator_rejects_negative_times() -> None:
    integrator = TaylorIntegrator(EXPONENTIAL)
    assert "order=12" in repr(integrator)
    with pytest.raises(ValueError, match="non-negative"):
        integrator.integrate(FlowSet.from_box(Interval([1.0])), -1.0)
