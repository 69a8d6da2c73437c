import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from threshcsp.net import NetSizeError, build_net, lift, net_size_bound


def test_k0_single_empty_point():
    net = build_net(0, radius=1.0, mesh=0.5)
    assert net.size == 1 and net.points.shape == (1, 0)


def test_k1_grid():
    # grid stays inside the size bound (1 + 2*ceil(R/mesh))^1 = 5 while still
    # covering [-R, R] at the mesh distance
    net = build_net(1, radius=1.0, mesh=0.5)
    assert np.allclose(net.points[:, 0], [-1.0, -0.5, 0.0, 0.5, 1.0])
    assert net.size <= net_size_bound(1, 1.0, 0.5)
    xs = np.linspace(-1, 1, 2001)
    dists = np.abs(xs[:, None] - net.points[:, 0][None, :]).min(axis=1)
    assert dists.max() <= 0.5 + 1e-9


def test_k2_covering_rejection_sample():
    net = build_net(2, radius=1.0, mesh=1.0)
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((4000, 2))
    pts = pts[np.linalg.norm(pts, axis=1) <= 2.0][:1000]
    pts *= rng.random((pts.shape[0], 1)) ** 0.5  # fill the ball
    pts = pts / np.maximum(1.0, np.linalg.norm(pts, axis=1) / 1.0)[:, None]
    d2 = ((pts[:, None, :] - net.points[None, :, :]) ** 2).sum(axis=2)
    assert np.sqrt(d2.min(axis=1)).max() <= 1.0 + 1e-9


def test_all_points_within_clip_radius():
    for k, ratio in [(1, 2.0), (2, 2.0), (3, 1 / np.sqrt(0.2))]:
        net = build_net(k, radius=ratio, mesh=1.0)
        norms = np.linalg.norm(net.points, axis=1)
        assert norms.max() <= ratio + 1.0 + 1e-9


def test_size_bound_holds_exactly():
    for k in (1, 2, 3):
        for ratio in (2.0, 1 / np.sqrt(0.2)):
            net = build_net(k, radius=ratio, mesh=1.0)
            assert net.size <= net_size_bound(k, ratio, 1.0)


def test_lex_order_and_determinism():
    a = build_net(2, radius=1.5, mesh=0.7)
    b = build_net(2, radius=1.5, mesh=0.7)
    assert np.array_equal(a.points, b.points)
    view = [tuple(row) for row in a.points]
    assert view == sorted(view)


def test_cap_refusal():
    with pytest.raises(NetSizeError, match="cap"):
        build_net(6, radius=100.0, mesh=1.0, cap=1000)


def test_invalid_args():
    with pytest.raises(ValueError):
        build_net(-1, 1.0, 1.0)
    with pytest.raises(ValueError):
        build_net(1, 0.0, 1.0)


def test_lift_zero_and_axis():
    basis = np.eye(4)[:, :1]
    assert np.allclose(lift([0.0], basis), np.zeros(4))
    assert np.allclose(lift([2.5], basis), 2.5 * np.eye(4)[:, 0])


def test_lift_dimension_mismatch():
    with pytest.raises(ValueError):
        lift([1.0, 2.0], np.eye(4)[:, :1])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.data())
def test_lift_is_isometry(k, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 10**6)))
    Q, _ = np.linalg.qr(rng.standard_normal((8, k)))
    coords = rng.standard_normal(k)
    assert abs(np.linalg.norm(lift(coords, Q)) - np.linalg.norm(coords)) <= 1e-9
