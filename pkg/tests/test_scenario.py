from pathlib import Path

import numpy as np
import pytest

from fhnwave.config import SettingsError
from fhnwave.oracle.skeleton import SingularSkeleton
from fhnwave.proofs import (
    ContinuationScenario,
    HomoclinicScenario,
    NewtonScenario,
    PeriodicScenario,
    load_scenario,
    scenario_hash,
    skeleton_fragment,
)
from fhnwave.proofs.scenario import SectionSpec, SegmentSpec, decimal


def test_defaults_per_kind() -> None:
    assert isinstance(load_scenario(None, "periodic_small_eps"), PeriodicScenario)
    assert isinstance(load_scenario(None, "homoclinic"), HomoclinicScenario)
    assert isinstance(load_scenario(None, "continuation"), ContinuationScenario)
    assert isinstance(load_scenario(None, "newton_unique"), NewtonScenario)
    periodic = load_scenario(None, "periodic_small_eps")
    assert isinstance(periodic, PeriodicScenario)
    assert periodic.theta == "0.61"
    assert periodic.eps_max == "1e-5"
    assert sorted(periodic.corners) == ["DL", "DR", "UL", "UR"]


def test_overrides_are_merged_deeply() -> None:
    scenario = load_scenario(
        {"grids": {"segment": 10}},
        "periodic_small_eps",
        {"theta": 0.62, "grids": {"chain": 5}, "eps_splits": ["5e-6"]},
    )
    assert isinstance(scenario, PeriodicScenario)
    assert scenario.theta == "0.62"
    assert scenario.grids.segment == 10
    assert scenario.grids.chain == 5
    assert scenario.grids.block == 50
    assert scenario.eps_splits == ["5e-6"]


def test_kind_mismatch() -> None:
    with pytest.raises(SettingsError, match="scenario is of kind"):
        load_scenario({"kind": "homoclinic"}, "periodic_small_eps")


def test_invalid_scenarios() -> None:
    with pytest.raises(SettingsError, match="invalid periodic_small_eps scenario"):
        load_scenario({"theta": "fast"}, "periodic_small_eps")
    with pytest.raises(SettingsError, match="invalid continuation scenario"):
        load_scenario({"increment": -1.0}, "continuation")
    with pytest.raises(SettingsError, match="invalid newton_unique scenario"):
        load_scenario({"unknown": 1}, "newton_unique")
    only_dl = [{"corner": "DL", "front_dw": "0.005", "rear_dw": "-0.005", "a": "0.01", "b": "0.01"}]
    with pytest.raises(SettingsError, match="no segment for corners"):
        load_scenario({"segments": only_dl}, "periodic_small_eps")


def test_scenario_from_file(tmp_path: Path) -> None:
    path = tmp_path / "periodic.toml"
    path.write_text('theta = "0.6"\neps_max = "2e-5"\n\n[grids]\nsegment = 12\n')
    scenario = load_scenario(path, "periodic_small_eps")
    assert isinstance(scenario, PeriodicScenario)
    assert scenario.eps_max == "2e-5"
    assert scenario.grids.segment == 12
    with pytest.raises(SettingsError, match="Can not open"):
        load_scenario(tmp_path / "missing.yaml", "periodic_small_eps")


def test_theta_range_encloses_the_radius() -> None:
    scenario = HomoclinicScenario()
    theta = scenario.theta_range
    assert float(theta.lo) <= 1.26241106
    assert float(theta.hi) >= 1.26741106
    assert float(theta.width()) == pytest.approx(0.005)


def test_hash_is_stable_and_sensitive() -> None:
    digest = scenario_hash(PeriodicScenario())
    assert len(digest) == 64
    assert scenario_hash(load_scenario(None, "periodic_small_eps")) == digest
    assert scenario_hash(PeriodicScenario(theta="0.62")) != digest


def test_segment_spec_builds_around_the_corner() -> None:
    scenario = PeriodicScenario()
    spec = SegmentSpec(corner="DL", front_dw="0.005", rear_dw="-0.005", a="0.015", b="0.012")
    segment = spec.build(scenario.corners["DL"])
    assert segment.name == "DL"
    np.testing.assert_allclose(segment.front, [-0.10841296, 0.0, 0.030044220])
    np.testing.assert_allclose(segment.rear, [-0.10841296, 0.0, 0.020044220])
    assert (segment.c, segment.d) == (segment.a, segment.b)
    np.testing.assert_allclose(segment.frame, [[1.0, 1.0], [0.34113340, -0.21913340]])


def test_section_spec_builds_a_plane() -> None:
    section = PeriodicScenario().right_section.build()
    np.testing.assert_allclose(section.origin, [0.30236702, 0.0, 0.098807631])
    np.testing.assert_allclose(section.normal, [1.0, 0.0, 0.0])
    assert float(section.crossing_sign) == -1.0
    plain = SectionSpec(origin=["0", "0", "0"], normal=["0", "0", "1"]).build()
    assert float(plain.crossing_sign) == 1.0


def test_decimal_literals_are_enclosed() -> None:
    assert bool(decimal("0.61").contains(0.61))
    assert float(decimal("0.61").width()) > 0


def test_skeleton_fragment_feeds_back_into_a_scenario() -> None:
    w_lower, w_upper = 0.025, 0.1
    corners = {
        "DL": np.array([-0.108, 0.0, w_lower]),
        "UL": np.array([0.97, 0.0, w_lower]),
        "UR": np.array([0.84, 0.0, w_upper]),
        "DR": np.array([-0.237, 0.0, w_upper]),
    }
    frames = {name: np.array([[1.0, 1.0], [0.3, -0.2]]) for name in corners}
    skeleton = SingularSkeleton(
        theta=0.61,
        w_lower=w_lower,
        w_upper=w_upper,
        corners=corners,
        frames=frames,
        left_crossing=np.array([0.43, 0.1, w_lower]),
        right_crossing=np.array([0.30, -0.1, w_upper]),
    )
    fragment = skeleton_fragment(skeleton, digits=6)
    assert fragment["theta"] == "0.61"
    assert fragment["corners"]["UR"]["point"] == ["0.84", "0", "0.1"]
    assert fragment["left_section"]["origin"] == ["0.43", "0", "0.025"]
    assert fragment["right_section"]["crossing_sign"] == -1

    scenario = load_scenario(fragment, "periodic_small_eps")
    assert isinstance(scenario, PeriodicScenario)
    assert scenario.corners["DR"].point == ["-0.237", "0", "0.1"]
    assert scenario.left_section.crossing_sign == 1
