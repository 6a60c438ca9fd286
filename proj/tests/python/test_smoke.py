import json
import math
import os
import subprocess

import pytest

import til


def test_weights_triple():
    w = til.sampling_weights([0.1, 0.2, 0.4], 1.0)
    assert w == pytest.approx([0.3780, 0.3420, 0.2800], abs=5e-5)
    assert sum(w) == pytest.approx(1.0, abs=1e-12)


def test_weights_direct_formula():
    speeds, lam = [0.3, 0.05, 0.7, 0.2], 2.5
    terms = [math.exp(-lam * v) for v in speeds]
    assert til.sampling_weights(speeds, lam) == pytest.approx([t / sum(terms) for t in terms], abs=1e-12)


def test_candidates_and_grids():
    assert til.anchor_candidates(10.3, 5, 100) == [8, 9, 10, 11, 12]
    assert til.greedy_frames(32, 4) == list(range(1, 32, 2))
    assert til.fallback_uniform(10, 2) == [1, 5, 9]


def test_segment_metrics():
    pred, gt = [(8, 18)], [(10, 20)]
    assert til.mof(pred, gt) == pytest.approx(9 / 11)
    assert til.iou(pred, gt) == pytest.approx(9 / 13)
    assert til.build_segments([10], [20], 30) == [(10, 20)]


def test_score_video():
    s = til.score_video([12], [], [10], [], 60, [1, 3])
    assert s["mae"] == 2.0
    assert s["sr"] == {1: 0.0, 3: 1.0}


def test_speed_minima_parabola():
    samples = [(t - 2.0) ** 2 + 0.1 for t in range(5)]
    (t_min,) = til.speed_minima(samples)
    assert t_min == pytest.approx(3.0, abs=0.05)


def test_threshold_crossing():
    assert til.threshold_from_distances([5, 4, 2, 1, 1, 4, 5], 3.0) == ([3], [6])


def test_errors_are_translated():
    with pytest.raises(til.TilError):
        til.sampling_weights([], 1.0)


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    gen = os.environ.get("TIL_FIXTURE_GEN")
    if not gen:
        pytest.skip("TIL_FIXTURE_GEN not set")
    out = tmp_path_factory.mktemp("fixture")
    subprocess.run([gen, str(out)], check=True, capture_output=True)
    return out


def test_localize_scripted(fixture_dir):
    script = json.loads((fixture_dir / "script.json").read_text())
    result = til.localize_scripted(fixture_dir / "fixture.json", script, n_ac=1)
    assert result["contacts"] == [20]
    assert result["separations"] == []


def test_dynamics(fixture_dir):
    profile = til.dynamics(fixture_dir / "fixture.json")
    assert len(profile["speeds"]) == 40
