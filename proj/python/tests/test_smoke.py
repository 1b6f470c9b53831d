import numpy as np
import pytest

import empathd


def test_render_and_track_frontal_scene():
    scene = empathd.render_scene(t=(0.0, 0.0, 0.30))
    assert scene["color"].shape == (480, 640, 3)
    assert scene["depth"].shape == (480, 640)
    assert not scene["hand_mask"].any()
    (T, R), residual, corners = empathd.estimate_pose(scene["color"])
    assert corners == 32
    assert np.linalg.norm(T - scene["pose"][0]) < 1e-3
    assert residual < 0.5


def test_segment_and_mesh_hand():
    scene = empathd.render_scene(hand=(0.0, -0.02, 0.02, 0.08, 0.01), glossy=True)
    T, R = scene["pose"]
    mask = empathd.segment(scene["color"], scene["depth"], T, R)
    truth = scene["hand_mask"]
    iou = (mask & truth).sum() / (mask | truth).sum()
    assert iou >= 0.95
    mesh = empathd.build_mesh(mask, scene["color"], scene["depth"], stride=16)
    assert mesh["triangles"].shape[1] == 3
    assert mesh["triangles"].max() < len(mesh["vertices"])


def test_delaunay_square():
    tris = empathd.delaunay(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))
    assert tris.shape == (2, 3)


def test_ssim_matches_skimage():
    skm = pytest.importorskip("skimage.metrics")
    rng = np.random.default_rng(3)
    a = rng.random((40, 50, 3), dtype=np.float32)
    b = np.clip(a + rng.normal(0, 0.1, a.shape).astype(np.float32), 0, 1)
    ours = empathd.ssim(a, b, 7)
    ref = skm.structural_similarity(
        a, b, win_size=7, channel_axis=2, data_range=1.0, use_sample_covariance=False
    )
    assert ours == pytest.approx(ref, abs=5e-3)


def test_filters():
    img = np.full((60, 80, 3), 0.5, dtype=np.float32)
    out = empathd.glaucoma(img, 0.3, 0.6)
    assert np.all(out[0, 0] == 0)
    assert np.all(out[30, 40] == img[30, 40])
    same = empathd.cataract(img, 0.0, 1.0)
    np.testing.assert_array_equal(same, img)
    rate = 48000
    n = np.arange(rate)
    tone = 0.5 * np.sin(2 * np.pi * 4000 * n / rate)
    quiet = empathd.hearing_loss(tone, attenuation_db=40.0)
    mid = slice(8000, 40000)
    gain = 20 * np.log10(np.std(quiet[mid]) / np.std(tone[mid]))
    assert gain < -30


def test_wire_round_trip_and_errors():
    data = empathd.encode_touch(7, 12.5, 30.0, "up", 100, 200)
    msg, used = empathd.decode(data)
    assert used == len(data)
    assert msg["type"] and msg["seq"] == 7 and msg["action"] == "up"
    assert empathd.decode(data[:3])[0] is None
    with pytest.raises(empathd.ProtocolError):
        empathd.decode(b"\x00" + data[1:])
    with pytest.raises(empathd.ConfigError):
        empathd.apply_visual_profile(np.zeros((4, 4, 3), np.float32), '{"filters":[{"type":"Sepia"}]}')
