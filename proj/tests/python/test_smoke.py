"""Smoke test for the Python bindings: every exported symbol is exercised
once with tiny inputs; numerical depth lives in the C++ suites."""

import math
import tempfile

import numpy as np

import triavatar as ta


def test_triplane():
    t = ta.TriPlane(3, 8, extent=0.5, fill=0.25)
    assert t.channels == 3 and t.resolution == 8 and t.extent == 0.5
    assert "TriPlane" in repr(t)
    f = t.sample(np.array([0.0, 0.0, 0.0]))
    assert f.shape == (3,)
    assert np.allclose(f, 0.75)  # three planes of constant 0.25

    plane = t.plane(0)
    assert plane.shape == (3, 8, 8) and plane.dtype == np.float32
    assert np.all(plane == np.float32(0.25))
    plane[1, :, :] = 1.0
    t.set_plane(0, plane)
    assert np.all(t.plane(0)[1] == 1.0)

    s = t + t
    assert np.allclose(s.sample(np.zeros(3)), 2.0 * t.sample(np.zeros(3)))

    assert ta.tv_loss(ta.TriPlane(2, 8, fill=0.3)) == 0.0

    with tempfile.TemporaryDirectory() as d:
        t.save(d + "/t.tpl")
        back = ta.TriPlane.load(d + "/t.tpl")
        assert np.array_equal(back.plane(0), t.plane(0))

    try:
        ta.TriPlane(0, 8)
    except ta.ParameterError:
        pass
    else:
        raise AssertionError("expected ParameterError")
    assert issubclass(ta.ParameterError, ValueError)


def test_decoder():
    dec = ta.Decoder.make_default(4, hidden_width=16, hidden_layers=2, seed=3)
    assert dec.input_width == 4
    feats = np.random.default_rng(0).normal(size=(5, 4))
    sigma, rgb = dec.decode(feats)
    assert sigma.shape == (5,) and rgb.shape == (5, 3)
    assert np.all(sigma >= 0.0) and np.all(np.isfinite(sigma))
    assert np.all((rgb > 0.0) & (rgb < 1.0))

    with tempfile.TemporaryDirectory() as d:
        dec.save(d + "/w.dec")
        back = ta.Decoder.load(d + "/w.dec")
        s2, r2 = back.decode(feats)
        assert np.array_equal(sigma, s2) and np.array_equal(rgb, r2)


def test_camera():
    cam = ta.Camera.frontal(16, 12, fov_y_deg=40.0, distance=2.5, near=0.05, far=9.0)
    cam.validate()
    assert cam.width == 16 and cam.height == 12
    assert cam.pose.shape == (4, 4) and cam.intrinsics.shape == (3, 3)
    with tempfile.TemporaryDirectory() as d:
        cam.save(d + "/cam.txt")
        back = ta.Camera.load(d + "/cam.txt")
        assert np.array_equal(back.pose, cam.pose)
        assert np.array_equal(back.intrinsics, cam.intrinsics)

    bad = ta.Camera()
    try:
        bad.validate()  # zero-size image, identity intrinsics
    except ta.ParameterError:
        pass
    else:
        raise AssertionError("expected ParameterError")


def test_render_and_fit():
    t = ta.TriPlane(4, 8)
    dec = ta.Decoder.make_default(4, hidden_width=16, seed=2)
    cam = ta.Camera.frontal(8, 8, fov_y_deg=40.0, distance=2.5, near=0.05, far=9.0)
    out = ta.render(t, dec, cam, samples=8)
    assert out["rgb"].shape == (8, 8, 3)
    assert out["depth"].shape == (8, 8) and out["alpha"].shape == (8, 8)
    assert np.all(np.isfinite(out["rgb"]))
    again = ta.render(t, dec, cam, samples=8)
    assert np.array_equal(out["rgb"], again["rgb"])

    target = np.zeros((8, 8, 3))
    fitted, trace = ta.fit_triplane(
        target, cam, dec, t, steps=3, step_size=0.1, samples=4, lambda_tv=0.01
    )
    assert isinstance(fitted, ta.TriPlane) and len(trace) == 3
    assert all(math.isfinite(l) for l in trace)


def test_lift_rasterize():
    feats = np.arange(2 * 4 * 4, dtype=float).reshape(2, 4, 4)
    depth = np.full((4, 4), 2.0)
    valid = np.ones((4, 4), dtype=np.uint8)
    cam = ta.Camera.frontal(4, 4, fov_y_deg=40.0, distance=2.5, near=0.05, far=9.0)
    pos, f = ta.lift(feats, depth, cam, valid)
    assert pos.shape == (16, 3) and f.shape == (16, 2)

    raster = ta.rasterize(pos, f, channels=2, resolution=8)
    assert raster.channels == 2 and raster.resolution == 8


def test_mesh_and_metrics():
    basis = ta.MorphableBasis.synthetic(7)
    assert basis.vertex_count > 0 and basis.k_id > 0
    zero_a = np.zeros(basis.k_id)
    zero_b = np.zeros(basis.k_exp)
    zero_d = np.zeros(basis.k_tex)
    cam = ta.Camera.frontal(32, 32, fov_y_deg=40.0, distance=2.6, near=0.05, far=10.0)
    r = ta.render_mesh(basis, zero_a, zero_b, zero_d, cam, 32, 32)
    assert r["image"].shape == (32, 32, 3)
    assert r["mask"].dtype == np.uint8 and r["mask"].sum() > 0
    assert r["depth"].shape == (32, 32)

    assert ta.psnr(r["image"], r["image"]) == 99.0
    assert ta.ssim(r["image"], r["image"]) == 1.0

    a = np.zeros((3, 2))
    b = np.zeros((3, 2))
    b[0] = (3.0, 4.0)
    assert abs(ta.akd(a, b) - 5.0 / 3.0) < 1e-12

    with tempfile.TemporaryDirectory() as d:
        ta.png_save(r["image"], d + "/mesh.png")
        loaded = ta.png_load(d + "/mesh.png")
        ta.png_save(loaded, d + "/again.png")
        assert np.array_equal(ta.png_load(d + "/again.png"), loaded)


def main():
    tests = [
        test_triplane,
        test_decoder,
        test_camera,
        test_render_and_fit,
        test_lift_rasterize,
        test_mesh_and_metrics,
    ]
    for t in tests:
        t()
        print(f"ok {t.__name__}")
    print(f"{len(tests)} python smoke tests passed")


if __name__ == "__main__":
    main()
