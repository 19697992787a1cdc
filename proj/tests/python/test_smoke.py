import filecmp
import math
import os

import numpy as np
import pytest

import wbench

FIXTURES = os.environ.get("WBENCH_FIXTURES_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "fixtures"))
MINI = os.path.join(FIXTURES, "mini.manifest")
TRAJ = os.path.join(FIXTURES, "trajectories.manifest")


def test_case_ids_and_splits():
    assert len(wbench.case_ids(MINI)) == 3
    assert len(wbench.case_ids(MINI, "nav")) == 2
    assert len(wbench.case_ids(TRAJ)) == 28
    with pytest.raises(wbench.ConfigError):
        wbench.case_ids(MINI, "bogus")


def test_perfect_synth_scores_100(tmp_path):
    assert wbench.synth(TRAJ, tmp_path / "art") == 0
    assert wbench.run(TRAJ, tmp_path / "art", tmp_path / "run", track="nav", metrics="navigation", judge="none") == 0
    cards = wbench.scorecards(tmp_path / "run")
    assert len(cards) == 28
    for c in cards:
        assert abs(c["metrics"]["navigation"]["value"] - 100) < 1e-6


def test_nav_score_from_pose_text(tmp_path):
    wbench.synth(MINI, tmp_path, mode="static")
    text = (tmp_path / "fpp_roundtrip" / "poses.txt").read_text()
    b = wbench.nav_score(MINI, "fpp_roundtrip", text)
    assert b["cons"] == 1.0
    assert b["nav_score"] == pytest.approx(50 * (b["acc"] + 1))
    assert all(t["fallback_length"] for t in b["turns"])
    with pytest.raises(wbench.ConfigError):
        wbench.nav_score(MINI, "fpp_roundtrip", text, {"nav": {"K": 1}})


def test_closed_forms():
    assert wbench.gate_factor(1.0) == 0.0
    assert 80 * wbench.gate_factor(0.925) == pytest.approx(40, abs=1e-12)
    assert wbench.hps_norm(5.21) == 0.0 and wbench.hps_norm(8.66) == 100.0
    assert wbench.psnr_db(1.0) == pytest.approx(48.13, abs=0.01)
    clean = [0.1] * 40
    spike = list(clean)
    spike[17] = 0.9
    assert wbench.segment_continuity(clean)[0] == 100
    assert wbench.segment_continuity(spike) == (0, 1)
    assert wbench.spearman([1, 2, 2, 3], [1, 3, 2, 4]) == pytest.approx(4.5 / math.sqrt(22.5), abs=1e-12)
    s = wbench.spatial_scores([0, 0.25, 0.25, 0.25], 3, {"consistency": {"n_intermediate": 2}})
    assert s["spatial"] == pytest.approx(80) and s["s_min"] == pytest.approx(0.8)


def test_resample_line():
    poses = [[1, 0, 0, 0, x, 0, 0] for x in (0.0, 1.0, 3.0)]
    out = wbench.arc_length_resample(poses, 4)
    assert [p[4] for p in out] == pytest.approx([0, 1, 2, 3])


def test_format_round_trips():
    frames = [0, 1, 2]
    poses = [[1, 0, 0, 0, 0.5 * i, 0, 0] for i in frames]
    text = wbench.serialize_poses(frames, poses, [(0, 2), (2, 3)])
    p = wbench.parse_poses(text)
    assert p["frames"] == frames and p["turns"] == [(0, 2), (2, 3)]
    assert wbench.serialize_poses(p["frames"], p["poses"], p["turns"]) == text

    maps = np.arange(2 * 3 * 4, dtype=np.float32).reshape(2, 3, 4) + 1
    blob = wbench.serialize_depth(maps, [0, 2], [10, 10, 2, 1.5])
    d = wbench.parse_depth(blob)
    assert d["frames"] == [0, 2] and np.array_equal(d["maps"], maps)
    assert wbench.serialize_depth(d["maps"], d["frames"], d["intrinsics"]) == blob
    with pytest.raises(wbench.FormatError):
        wbench.parse_depth(blob[:-3])

    vecs = np.random.default_rng(0).standard_normal((3, 8)).astype(np.float32)
    e = wbench.parse_embeddings(wbench.serialize_embeddings(vecs, frames))
    assert np.array_equal(e["vectors"], vecs)

    assert wbench.parse_scalars(wbench.serialize_scalars(frames, [0.25, 0.5, 1.0])) == (frames, [0.25, 0.5, 1.0])
    probs = {"Perfect": 0.5, "Good": 0.25, "Fair": 0.125, "Poor": 0.0625, "Bad": 0.0625}
    assert wbench.parse_vp_probs(wbench.serialize_vp_probs(probs)) == probs

    with pytest.raises(wbench.FormatError):
        wbench.parse_poses("0 1 0 0\n")


def _emit_bundle(root, case_id, n, turns):
    # Camera sliding along +x in front of a constant-depth plane.
    frames = list(range(n))
    wbench.write_meta(root, case_id, 24.0, n, turns)
    wbench.write_poses(root, case_id, frames, [[1, 0, 0, 0, 0.1 * i, 0, 0] for i in frames], turns)
    wbench.write_depth(root, case_id, np.full((n, 12, 16), 4.0, np.float32), frames, [20, 20, 8, 6])
    wbench.write_scalars(root, case_id, "cut_prob", frames, [0.05] * n)
    wbench.write_embeddings(root, case_id, "background", np.ones((n, 4), np.float32), frames)
    wbench.write_vp_probs(root, case_id, {"Perfect": 0.6, "Good": 0.4, "Fair": 0, "Poor": 0, "Bad": 0})


def test_python_emitted_bundle_validates(tmp_path):
    art = tmp_path / "art"
    cases = wbench.case_ids(MINI)
    for cid in cases:
        _emit_bundle(art, cid, 8, [(0, 2), (2, 4), (4, 6), (6, 8)])
    code, summary, text = wbench.validate(MINI, art)
    assert code == wbench.EXIT_OK, text
    for cid in cases:
        assert wbench.inspect_sidecars(cid, art)["issues"] == []

    again = tmp_path / "again"
    for cid in cases:
        _emit_bundle(again, cid, 8, [(0, 2), (2, 4), (4, 6), (6, 8)])
    cmp = filecmp.dircmp(art, again)
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only

    depth = art / cases[0] / "depth.bin"
    depth.write_bytes(depth.read_bytes()[:-5])
    code, summary, text = wbench.validate(MINI, art)
    assert code == wbench.EXIT_VALIDATION
    assert "FormatError [depth]" in text
    assert summary[0]["issues"][0]["role"] == "depth"
    issues = wbench.inspect_sidecars(cases[0], art)["issues"]
    assert [i["role"] for i in issues] == ["depth"]


def test_run_is_deterministic_and_reports(tmp_path):
    assert wbench.synth(MINI, tmp_path / "art", full=True) == 0
    for name in ("a", "b"):
        assert wbench.run(MINI, tmp_path / "art", tmp_path / name, workers=2) == 0
    assert wbench.scorecards(tmp_path / "a") == wbench.scorecards(tmp_path / "b")
    assert wbench.report([tmp_path / "a"], tmp_path / "rep", formats=("csv",)) == 0
    assert (tmp_path / "rep" / "report.csv").exists()
    assert wbench.run(MINI, tmp_path / "missing", tmp_path / "c") == wbench.EXIT_CONFIG
