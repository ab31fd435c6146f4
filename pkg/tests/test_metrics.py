import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simready.metrics import (
    GeometryMetrics,
    MetricsError,
    MetricsReport,
    chamfer_distance,
    compare_assets,
    compare_clouds,
    compare_material_features,
    f_score,
    occupancy_iou,
    sim_chamfer,
    voxelize,
    zscore_calibrate,
)
from simready.trajectory import Trajectory
from conftest import make_test_asset


def rand_cloud(seed, n=100, lo=0.0, hi=1.0):
    return np.random.default_rng(seed).uniform(lo, hi, size=(n, 3))


# --- Chamfer --------------------------------------------------------------

def test_chamfer_identical_clouds_zero():
    a = rand_cloud(0)
    assert chamfer_distance(a, a) == 0.0


def test_chamfer_known_single_points():
    a = np.array([[0.0, 0.0, 0.0]])
    b = np.array([[1.0, 0.0, 0.0]])
    # 0.5 * (1^2 + 1^2) / 1 = 1
    assert chamfer_distance(a, b) == pytest.approx(1.0)


def test_chamfer_known_asymmetric():
    a = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    b = np.array([[0.0, 0.0, 0.0]])
    # a->b: (0 + 1)/2; b->a: 0; half the sum = 0.25
    assert chamfer_distance(a, b) == pytest.approx(0.25)


def brute_chamfer(a, b):
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)
    return 0.5 * (d2.min(1).mean() + d2.min(0).mean())


@given(seed=st.integers(0, 1000))
@settings(max_examples=40, deadline=None)
def test_chamfer_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, size=(rng.integers(1, 40), 3))
    b = rng.uniform(-1, 1, size=(rng.integers(1, 40), 3))
    assert chamfer_distance(a, b) == pytest.approx(brute_chamfer(a, b), rel=1e-12)


def test_chamfer_symmetric():
    a, b = rand_cloud(1), rand_cloud(2)
    assert chamfer_distance(a, b) == pytest.approx(chamfer_distance(b, a), rel=1e-12)


def test_chamfer_quadratic_under_scaling():
    a, b = rand_cloud(3), rand_cloud(4)
    assert chamfer_distance(2 * a, 2 * b) == pytest.approx(4 * chamfer_distance(a, b), rel=1e-9)


def test_chamfer_rejects_empty():
    with pytest.raises(MetricsError):
        chamfer_distance(np.empty((0, 3)), rand_cloud(0))


# --- IoU ------------------------------------------------------------------

def test_iou_identical_is_one():
    a = rand_cloud(5)
    assert occupancy_iou(a, a) == 1.0


def test_iou_disjoint_is_zero():
    a = rand_cloud(6, lo=0.0, hi=1.0)
    b = rand_cloud(7, lo=10.0, hi=11.0)
    assert occupancy_iou(a, b) == 0.0


def test_iou_half_overlap_boxes():
    # dense grids: A = [0,1]x[0,1]x[0,1], B = A shifted +0.5 in x
    g = (np.arange(40) + 0.5) / 40
    a = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    b = a + np.array([0.5, 0.0, 0.0])
    # overlap 0.5 of each, union 1.5 -> 1/3
    assert occupancy_iou(a, b, res=32) == pytest.approx(1 / 3, abs=0.05)


def test_voxelize_contains_rule():
    pts = np.array([[0.01, 0.01, 0.01], [0.99, 0.99, 0.99]])
    g = voxelize(pts, np.zeros(3), np.ones(3), res=4)
    assert g[0, 0, 0] and g[3, 3, 3]
    assert g.sum() == 2
    # upper-bound point lands in the last voxel, not outside
    g2 = voxelize(np.array([[1.0, 1.0, 1.0]]), np.zeros(3), np.ones(3), res=4)
    assert g2[3, 3, 3] and g2.sum() == 1


# --- F-score --------------------------------------------------------------

def test_f_score_identical_is_one():
    a = rand_cloud(8)
    assert f_score(a, a) == 1.0


def test_f_score_far_apart_is_zero():
    a = rand_cloud(9)
    assert f_score(a, a + 100.0) == 0.0


def test_f_score_known_mixture():
    gt = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    pred = np.array([[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]])
    # precision 0.5 (one pred point close), recall 0.5 (one gt matched)
    assert f_score(pred, gt, tau=0.1) == pytest.approx(0.5)


def test_f_score_tau_validation():
    with pytest.raises(MetricsError):
        f_score(rand_cloud(0), rand_cloud(1), tau=0.0)


# --- z-score --------------------------------------------------------------

def test_zscore_known_values():
    z = zscore_calibrate([1.0, 2.0, 3.0])
    s = np.sqrt(2 / 3)  # population std
    np.testing.assert_allclose(z, [-1 / s, 0.0, 1 / s])
    np.testing.assert_allclose(z.mean(), 0, atol=1e-12)
    np.testing.assert_allclose(z.std(), 1, atol=1e-12)


def test_zscore_all_equal_gives_zeros():
    np.testing.assert_array_equal(zscore_calibrate([4.2, 4.2, 4.2]), np.zeros(3))


def test_zscore_rejects_single_method():
    with pytest.raises(MetricsError, match="at least 2"):
        zscore_calibrate([1.0])


# --- material metrics -----------------------------------------------------

def test_material_exact_match():
    a = make_test_asset(n=24, seed=3)
    m = compare_material_features(a.feature_matrix(), a.feature_matrix())
    assert m.mae_log10_E == 0.0
    assert m.mae_nu == 0.0
    assert m.behavior_accuracy == 1.0


def test_material_known_offsets():
    gt = np.zeros((4, 9))
    gt[:, 0] = 6.0  # log10 E
    gt[:, 1] = 0.3
    gt[:, 4] = 1000.0
    gt[:, 5] = 1.0  # behavior 0
    pred = gt.copy()
    pred[:, 0] = 7.0  # one decade off
    pred[:, 1] = 0.25
    pred[2:, 5] = 0.0
    pred[2:, 6] = 1.0  # half the points wrong behavior
    m = compare_material_features(pred, gt)
    assert m.mae_log10_E == pytest.approx(1.0)
    assert m.mae_nu == pytest.approx(0.05)
    assert m.behavior_accuracy == pytest.approx(0.5)


def test_material_sentinels_do_not_leak():
    # M0 vs M0 with junk in inapplicable slots: encoding pins them to
    # sentinels so MAEs on sigma_y / phi are zero
    a = make_test_asset(n=16, seed=1, behaviors=(0,))
    b = make_test_asset(n=16, seed=2, behaviors=(0,))
    m = compare_material_features(a.feature_matrix(), b.feature_matrix())
    assert m.mae_log10_sigma_y == 0.0
    assert m.mae_phi == 0.0


def test_material_shape_mismatch_rejected():
    with pytest.raises(MetricsError, match="share shape"):
        compare_material_features(np.zeros((3, 9)), np.zeros((4, 9)))


def test_compare_assets_report():
    a = make_test_asset(n=32, seed=1)
    rep = compare_assets(a, a)
    assert rep.geometry.chamfer == 0.0
    assert rep.geometry.iou == 1.0
    assert rep.material.behavior_accuracy == 1.0
    d = rep.to_dict()
    assert d["geometry"]["f_score"] == 1.0
    assert d["sim_chamfer"] is None


# --- Sim-CD ---------------------------------------------------------------

def make_traj(ts, offset=0.0, seed=0, n=20):
    rng = np.random.default_rng(seed)
    base = rng.uniform(0, 1, size=(n, 3))
    frames = np.stack([base + offset * (i + 1) for i in range(len(ts))]).astype(np.float32)
    return Trajectory.from_frames("a", {"type": "drop"}, {}, np.asarray(ts), frames)


def test_sim_chamfer_identical_zero():
    t = make_traj([0.0, 0.1, 0.2])
    assert sim_chamfer(t, t) == 0.0


def test_sim_chamfer_uses_only_synchronized_frames():
    a = make_traj([0.0, 0.1, 0.2], seed=1)
    # same stamps plus an extra unmatched one; identical content on the
    # shared stamps
    b = Trajectory.from_frames(
        "a", {"type": "drop"}, {}, np.array([0.0, 0.1, 0.2, 0.35]),
        np.concatenate([a.frames, 100 + np.zeros((1, 20, 3), np.float32)]),
    )
    assert sim_chamfer(a, b) == 0.0


def test_sim_chamfer_known_offset():
    ts = [0.0, 0.1]
    a = make_traj(ts, seed=2)
    shifted = Trajectory.from_frames(
        "a", {"type": "drop"}, {}, np.asarray(ts), a.frames + np.float32(10.0)
    )
    # every NN distance is 10 if clouds are dense enough... instead.
    # compare against direct frame-wise mean
    want = np.mean([chamfer_distance(a.frames[i], shifted.frames[i]) for i in range(2)])
    assert sim_chamfer(a, shifted) == pytest.approx(want, rel=1e-12)


def test_sim_chamfer_no_overlap_raises():
    a = make_traj([0.0, 0.1])
    b = make_traj([0.05, 0.15])
    with pytest.raises(MetricsError, match="synchronized"):
        sim_chamfer(a, b)


def test_sim_chamfer_tolerance_window():
    a = make_traj([0.0, 0.1], seed=3)
    b = Trajectory.from_frames(
        "a", {"type": "drop"}, {}, np.array([1e-10, 0.1 + 1e-10]), a.frames
    )
    assert sim_chamfer(a, b) == 0.0
