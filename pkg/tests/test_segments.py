import numpy as np
import pytest

from fhnwave.dynamics import FhnParams, fast_eigenframe, fast_equilibrium
from fhnwave.interval import Interval
from fhnwave.segments import (
    ChainEnd,
    Segment,
    build_chain,
    build_chain_segments,
    chain_coverings,
    check_isolation_ranges,
    check_segment_isolation,
    check_segments,
    eps_ranges,
    w_plane,
)

THETA = 0.61
PARAMS = FhnParams.create("0.61", Interval(0.0, 1e-4))


def _on_lower_branch(w: float) -> np.ndarray:
    return np.array([fast_equilibrium(w, -0.1), 0.0, w])


def _lower_segment(w0: float = 0.025, w1: float = 0.024, width: float = 1e-3) -> Segment:
    front, rear = _on_lower_branch(w0), _on_lower_branch(w1)
    frame = fast_eigenframe(0.5 * (front[0] + rear[0]), THETA)
    return Segment.create(front, rear, frame, width, width, name="lower")


def test_segment_validation() -> None:
    frame = np.eye(2)
    with pytest.raises(ValueError, match="different w"):
        Segment.create([0.0, 0.0, 0.1], [0.1, 0.0, 0.1], frame, 1.0, 1.0)
    with pytest.raises(ValueError, match="positive"):
        Segment.create([0.0, 0.0, 0.1], [0.0, 0.0, 0.2], frame, 1.0, -1.0)
    with pytest.raises(ValueError, match="invertible"):
        Segment.create([0.0, 0.0, 0.1], [0.0, 0.0, 0.2], np.ones((2, 2)), 1.0, 1.0)


def test_segment_points_and_vertices() -> None:
    seg = Segment.create([0.0, 0.0, 0.0], [1.0, 0.0, 2.0], np.eye(2), 0.25, 0.5, 0.375, 0.75)
    assert seg.orientation == 1.0
    assert np.all(seg.point(np.array([0.0, 0.0, 0.0])).contains(seg.front))
    assert np.all(seg.point(np.array([0.0, 0.0, 1.0])).contains(seg.rear))
    assert np.all(seg.point(np.array([1.0, -1.0, 1.0])).contains(np.array([1.375, -0.75, 2.0])))
    assert seg.vertices().shape == (8, 3)
    assert seg.face_cells("ru", 3).shape == (9, 3)
    assert seg.face_cells("in", 3).shape == (9, 3)


def test_segment_transpose() -> None:
    seg = Segment.create([0.0, 0.0, 0.0], [1.0, 0.0, 2.0], np.eye(2), 0.1, 0.2, 0.3, 0.4, "s")
    t = seg.transposed()
    assert t.name == "s^T"
    assert t.orientation == -1.0
    assert (t.a, t.b, t.c, t.d) == (0.4, 0.3, 0.2, 0.1)
    back = t.transposed()
    assert (back.a, back.b, back.c, back.d) == (seg.a, seg.b, seg.c, seg.d)
    assert np.array_equal(back.frame, seg.frame)


def test_front_and_rear_faces() -> None:
    seg = _lower_segment()
    face = seg.face("in")
    assert face.name == "lower.in"
    assert np.array_equal(face.center, seg.front[:2])
    assert float(face.section.origin[2]) == seg.front[2]
    out = seg.face("out")
    assert float(out.section.crossing_sign) == seg.orientation
    assert np.all(seg.outward_normal("out").contains(np.array([0.0, 0.0, -1.0])))


@pytest.mark.parametrize("which", ["lu", "ru", "ls", "rs"])
def test_side_faces_match_segment_points(which: str) -> None:
    seg = Segment.create(
        [0.0, 0.0, 0.0], [0.2, 0.1, 1.0], [[1.0, 0.3], [0.2, 1.0]], 0.1, 0.2, 0.15, 0.3
    )
    face = seg.face(which)  # type: ignore[arg-type]
    assert face.is_twisted
    rng = np.random.default_rng(1)
    for _ in range(10):
        free, mu = rng.uniform(-1.0, 1.0), rng.uniform(0.0, 1.0)
        side = -1.0 if which[0] == "l" else 1.0
        if which[1] == "u":
            xi, coords = np.array([side, free, mu]), np.array([2.0 * mu - 1.0, free])
        else:
            xi, coords = np.array([free, side, mu]), np.array([free, 2.0 * mu - 1.0])
        expected = seg.point(xi).mid()
        got = face.section.to_state(face.from_coords(coords)).mid()
        np.testing.assert_allclose(got, expected, atol=1e-12)


def test_side_normals_point_outwards() -> None:
    seg = _lower_segment()
    center = seg.point(np.array([0.0, 0.0, 0.5])).mid()
    sides = {
        "lu": [-1.0, 0.0, 0.5],
        "ru": [1.0, 0.0, 0.5],
        "ls": [0.0, -1.0, 0.5],
        "rs": [0.0, 1.0, 0.5],
    }
    for which, xi in sides.items():
        normal = seg.outward_normal(which).mid()  # type: ignore[arg-type]
        assert float(normal @ (seg.point(np.array(xi)).mid() - center)) > 0


def test_lower_branch_segment_isolates() -> None:
    check = check_segment_isolation(_lower_segment(), PARAMS, 8)
    assert check.passed, str(check)
    assert float(check.s1a.lo) > 0
    assert float(check.s2b.lo) > 0
    assert float(check.s3b.hi) < 0
    assert float(check.margin.lo) > 0
    assert "PASS" in str(check)


def test_swapped_frame_fails_exit_condition() -> None:
    seg = _lower_segment()
    swapped = Segment.create(seg.front, seg.rear, seg.frame[:, ::-1], seg.a, seg.b)
    check = check_segment_isolation(swapped, PARAMS, 8)
    assert not check.passed
    assert check.condition == "S2b"
    assert check.worst_face in ("lu", "ru")


def test_reversed_time_breaks_the_slow_condition() -> None:
    check = check_segment_isolation(_lower_segment(), PARAMS, 4, direction="backward")
    assert check.condition == "S1a"
    assert check.worst_cell is not None


def test_transposed_segment_isolates_the_reversed_flow() -> None:
    transposed = _lower_segment().transposed()
    check = check_segment_isolation(transposed, PARAMS, 8, direction="backward")
    assert check.passed, str(check)


def test_grid_must_be_positive() -> None:
    with pytest.raises(ValueError, match="grids"):
        check_segment_isolation(_lower_segment(), PARAMS, 0)


def test_eps_ranges() -> None:
    ranges = eps_ranges("0.001", ["0.0005"])
    assert len(ranges) == 2
    assert float(ranges[0].lo) == 0.0
    assert bool(ranges[0].contains(0.0005))
    assert bool(ranges[1].contains(Interval(0.0005, 0.001)))
    with pytest.raises(ValueError, match="increase"):
        eps_ranges(1e-3, [2e-3])


def test_isolation_per_eps_range() -> None:
    params = FhnParams.create("0.61")
    checks = check_isolation_ranges(_lower_segment(), params, eps_ranges(1e-4, [5e-5]), 8)
    assert len(checks) == 2
    assert all(c.passed for c in checks)
    assert bool(checks[1].eps_range.contains(1e-4))


def test_parallel_checks_keep_order() -> None:
    segments = [_lower_segment(0.025, 0.024), _lower_segment(0.024, 0.023)]
    checks = check_segments(segments, PARAMS, 4, jobs=2)
    assert [c.segment for c in checks] == ["lower", "lower"]
    assert np.all(checks[0].eps_range.contains(PARAMS.eps))


def test_chain_along_lower_branch() -> None:
    start = _lower_segment()
    front = _on_lower_branch(0.021)
    end = ChainEnd(front, fast_eigenframe(float(front[0]), THETA), 1e-3, 1e-3, "end")
    segments = build_chain_segments(start, end, 3, 1.05, THETA, name="c")
    assert [s.name for s in segments] == ["c[1]", "c[2]", "c[3]"]
    assert np.array_equal(segments[0].front, start.rear)
    assert np.array_equal(segments[1].front, segments[0].rear)
    assert np.array_equal(segments[-1].rear, end.front)
    assert segments[0].a == pytest.approx(start.c / 1.05)
    assert segments[0].b == pytest.approx(start.d * 1.05)
    assert all(c.passed for c in chain_coverings(start, segments))

    chain = build_chain(start, end, 3, PARAMS, 8, name="c")
    assert chain.passed, chain.failure
    assert len(chain.isolation) == 3
    assert len(chain.coverings) == 3


def test_chain_needs_a_segment() -> None:
    start = _lower_segment()
    with pytest.raises(ValueError, match="at least one"):
        build_chain_segments(start, start, 0, 1.05, THETA)


def test_w_plane() -> None:
    plane = w_plane(0.02, -1.0)
    assert float(plane.crossing_sign) == -1.0
    assert bool(plane.value(np.array([0.3, 0.1, 0.02])).contains(0.0))
