import numpy as np
import pytest

from fhnwave.config import MapLimits
from fhnwave.dynamics import PolynomialField
from fhnwave.errors import NoCrossing
from fhnwave.integrator import FlowSet
from fhnwave.interval import Interval
from fhnwave.poincare import (
    AffineSection,
    PoincareMap,
    complement_frame,
    poincare_derivative_enclosure,
    poincare_enclosure,
)

# clockwise rotation: (x, y)(t) = (x0 cos t + y0 sin t, -x0 sin t + y0 cos t)
OSCILLATOR = PolynomialField([[(1.0, (0, 1))], [(-1.0, (1, 0))]])


def _near(x: Interval, value: np.ndarray | float, tol: float) -> bool:
    return bool(np.all((x.lo - tol <= value) & (value <= x.hi + tol)))


def _x_axis(sign: float) -> AffineSection:
    return AffineSection.create([0.0, 0.0], [0.0, 1.0], crossing_sign=sign)


def test_complement_frame_is_orthonormal() -> None:
    normal = np.array([0.3, -0.4, 0.5])
    frame = complement_frame(normal)
    assert frame.shape == (3, 2)
    np.testing.assert_allclose(frame.T @ frame, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(normal @ frame, np.zeros(2), atol=1e-14)


def test_section_functional_and_coordinates() -> None:
    sec = AffineSection.create([1.0, 2.0, 3.0], [0.0, 0.0, 2.0])
    assert _near(sec.value(np.array([1.0, 2.0, 5.0])), 1.0, 1e-15)
    assert _near(sec.reversed().signed_value(np.array([1.0, 2.0, 5.0])), -1.0, 1e-15)
    eta = np.array([0.3, -0.2])
    x = sec.to_state(eta)
    assert bool(sec.value(x).contains(0.0))
    assert np.all(sec.coordinates(x).contains(eta))


def test_section_validation() -> None:
    with pytest.raises(ValueError, match="orthogonal"):
        AffineSection.create(
            [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]
        )
    with pytest.raises(ValueError, match="crossing_sign"):
        AffineSection.create([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], crossing_sign=2.0)


def test_batched_sections() -> None:
    origins = np.arange(12, dtype=np.float64).reshape(4, 3)
    sec = AffineSection.create(origins, [0.0, 1.0, 0.0])
    assert sec.batch_shape == (4,)
    assert sec.take(1).batch_shape == ()
    assert np.array_equal(sec.take(2).origin, origins[2])
    stacked = AffineSection.stack([sec.take(0), sec.take(3)])
    assert stacked.batch_shape == (2,)


def test_embedded_parallelogram_covers_its_corners() -> None:
    sec = AffineSection.create([0.5, 0.0, 0.1], [1.0, 0.0, 0.0])
    s = sec.embed([0.0, 0.0], np.eye(2), Interval([-1.0, -1.0], [1.0, 1.0]))
    for corner in ([1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]):
        assert np.all(s.hull.contains(sec.to_state(np.array(corner)).mid()))


def test_quarter_turn_crossing() -> None:
    image = poincare_enclosure(Interval([0.0, 1.0]), _x_axis(-1.0), OSCILLATOR)
    assert _near(image.state, np.array([1.0, 0.0]), 1e-9)
    assert _near(image.time, np.pi / 2, 1e-9)
    assert float(image.transversality.lo) > 0
    assert image.state.max_width() < 1e-6


def test_backward_crossing() -> None:
    # in forward time the flow crosses the negative x axis upwards
    image = poincare_enclosure(Interval([0.0, 1.0]), _x_axis(1.0), OSCILLATOR, "backward")
    assert _near(image.state, np.array([-1.0, 0.0]), 1e-9)
    assert _near(image.time, np.pi / 2, 1e-9)


def test_crossing_in_the_wrong_direction_is_skipped() -> None:
    image = poincare_enclosure(Interval([0.0, -1.0]), _x_axis(-1.0), OSCILLATOR)
    assert _near(image.state, np.array([1.0, 0.0]), 1e-9)
    assert _near(image.time, 1.5 * np.pi, 1e-9)


def test_batched_cells_cross_at_their_radius() -> None:
    radii = np.array([0.9, 1.0, 1.1])
    src = FlowSet.from_box(Interval(np.stack([np.zeros(3), radii], axis=-1)))
    image = PoincareMap(OSCILLATOR, _x_axis(-1.0))(src)
    assert image.state.shape == (3, 2)
    for k, r in enumerate(radii):
        assert _near(image.state[k], np.array([r, 0.0]), 1e-9)
        assert _near(image.time[k], np.pi / 2, 1e-9)


def test_parallel_map_agrees_with_serial() -> None:
    lo = np.array([[0.0, 0.9], [0.0, 1.0], [0.0, 1.1], [0.0, 1.2]])
    src = FlowSet.from_box(Interval(lo, lo + [1e-4, 0.0]))
    pmap = PoincareMap(OSCILLATOR, _x_axis(-1.0))
    serial = pmap(src)
    parallel = pmap.map_parallel(src, jobs=2)
    assert np.all(serial.point.overlaps(parallel.point))
    assert np.all(serial.time.overlaps(parallel.time))


async def test_async_map_runs_in_chunks() -> None:
    lo = np.array([[0.0, 0.8], [0.0, 1.0], [0.0, 1.3]])
    src = FlowSet.from_box(Interval(lo))
    pmap = PoincareMap(OSCILLATOR, _x_axis(-1.0))
    image = await pmap.amap(src, jobs=3)
    assert image.state.shape == (3, 2)
    assert _near(image.state[2], np.array([1.3, 0.0]), 1e-9)


def test_derivative_of_quarter_turn() -> None:
    dst = _x_axis(-1.0)
    image, derivative = poincare_derivative_enclosure(Interval([0.0, 1.0]), dst, OSCILLATOR)
    assert derivative.shape == (1, 2)
    # x at the crossing is sqrt(x0^2 + y0^2): slope 0 in x0 and 1 in y0
    expected = dst.frame[0, 0] * np.array([[0.0, 1.0]])
    assert _near(derivative, expected, 1e-8)
    assert _near(image.state, np.array([1.0, 0.0]), 1e-9)


def test_derivative_along_a_tangent() -> None:
    dst = _x_axis(-1.0)
    tangent = np.array([[0.0], [2.0]])
    _, derivative = poincare_derivative_enclosure(
        Interval([0.0, 1.0]), dst, OSCILLATOR, tangent=tangent
    )
    assert derivative.shape == (1, 1)
    assert _near(derivative, 2.0 * dst.frame[0, 0], 1e-8)


def test_time_limit_raises() -> None:
    with pytest.raises(NoCrossing):
        poincare_enclosure(
            Interval([0.0, 1.0]), _x_axis(-1.0), OSCILLATOR, limits=MapLimits(max_time=0.5)
        )


def test_unknown_direction() -> None:
    with pytest.raises(ValueError, match="direction"):
        PoincareMap(OSCILLATOR, _x_axis(-1.0), direction="sideways")  # type: ignore[arg-type]
    assert "forward" in repr(PoincareMap(OSCILLATOR, _x_axis(-1.0)))
