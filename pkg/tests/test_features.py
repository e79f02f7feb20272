"""Frames, bounding boxes, patch cropping and the HOG descriptor."""

import numpy as np
import pytest

from oet.features import (
    FEATURE_LENGTHS,
    LUMA_WEIGHTS,
    PATCH_SIZE,
    BoundingBox,
    Frame,
    OutOfFrameError,
    crop_resize,
    extract_feature,
    hog,
    raw_feature,
    to_gray,
)


def frame_from(pixels, index=0):
    return Frame(pixels=np.asarray(pixels, dtype=float), index=index)


def checker_frame(seed=0, h=64, w=64):
    rng = np.random.default_rng(seed)
    return frame_from(rng.random((h, w)))


# ---------------------------------------------------------------- validation


def test_frame_rejects_bad_pixels():
    with pytest.raises(ValueError):
        frame_from(np.full((40, 40), 1.5))
    with pytest.raises(ValueError):
        frame_from(np.zeros((8, 8)))  # below the minimum size
    with pytest.raises(ValueError):
        frame_from(np.zeros((40, 40, 3)))


def test_bounding_box_rejects_nonpositive_extent():
    for w, h in ((0.0, 5.0), (5.0, -1.0)):
        with pytest.raises(ValueError):
            BoundingBox(x=0.0, y=0.0, w=w, h=h)
    assert BoundingBox(x=2.0, y=4.0, w=10.0, h=20.0).center == (7.0, 14.0)


# ---------------------------------------------------------------- cropping


def test_crop_identity_on_native_box():
    f = checker_frame(1)
    box = BoundingBox(x=8.0, y=4.0, w=float(PATCH_SIZE), h=float(PATCH_SIZE))
    patch = crop_resize(f, box)
    np.testing.assert_allclose(patch, f.pixels[4 : 4 + 20, 8 : 8 + 20], atol=1e-12)


def test_crop_constant_region_is_constant():
    f = frame_from(np.full((48, 48), 0.25))
    patch = crop_resize(f, BoundingBox(3.7, 9.1, 31.0, 17.5))
    np.testing.assert_allclose(patch, 0.25)
    assert patch.shape == (PATCH_SIZE, PATCH_SIZE)


def test_crop_downsample_tracks_smooth_image():
    # a smooth ramp survives 40x40 -> 20x20 resampling almost unchanged
    y, x = np.mgrid[0:64, 0:64]
    f = frame_from((x + y) / 126.0)
    direct = crop_resize(f, BoundingBox(10.0, 10.0, 20.0, 20.0))
    wide = crop_resize(f, BoundingBox(10.0, 10.0, 40.0, 40.0))
    # the wide crop covers twice the span, so compare gradients, not values
    assert abs(np.mean(np.diff(wide, axis=1)) - 2 * np.mean(np.diff(direct, axis=1))) < 0.02


def test_crop_outside_frame_raises():
    f = checker_frame(2)
    with pytest.raises(OutOfFrameError):
        crop_resize(f, BoundingBox(x=200.0, y=0.0, w=10.0, h=10.0))
    with pytest.raises(OutOfFrameError):
        crop_resize(f, BoundingBox(x=-50.0, y=-50.0, w=20.0, h=20.0))


def test_crop_clamps_partial_overlap():
    f = checker_frame(3)
    patch = crop_resize(f, BoundingBox(x=-5.0, y=-5.0, w=20.0, h=20.0))
    assert patch.shape == (PATCH_SIZE, PATCH_SIZE)
    assert np.isfinite(patch).all()


# ---------------------------------------------------------------- HOG


def test_hog_length_and_range():
    rng = np.random.default_rng(4)
    for _ in range(5):
        v = hog(rng.random((PATCH_SIZE, PATCH_SIZE)))
        assert v.shape == (FEATURE_LENGTHS["hog"],)
        assert np.isfinite(v).all() and v.min() >= 0.0


def test_hog_constant_patch_is_zero():
    assert np.abs(hog(np.full((20, 20), 0.6))).max() == 0.0


def test_hog_vertical_edge_concertrates_horizontal_bin():
    patch = np.zeros((20, 20))
    patch[:, 10:] = 1.0
    v = hog(patch).reshape(16, 4, 9)
    energy = v.sum(axis=(0, 1))
    # gradient is horizontal -> unsigned angle 0 -> all votes in bin 0
    assert energy[0] > 0.0
    assert energy[1:].max() < 1e-12


def test_hog_horizontal_edge_splits_between_80_and_100_degrees():
    patch = np.zeros((20, 20))
    patch[10:, :] = 1.0
    energy = hog(patch).reshape(16, 4, 9).sum(axis=(0, 1))
    # bin centers sit every 20 degrees, so a 90-degree gradient splits its
    # vote evenly between bins 4 and 5
    np.testing.assert_allclose(energy[[0, 1, 2, 3, 6, 7, 8]], 0.0, atol=1e-12)
    assert energy[4] > 0.0
    assert abs(energy[4] - energy[5]) < 1e-10


def test_hog_additive_shift_invariance():
    rng = np.random.default_rng(5)
    patch = rng.random((20, 20)) * 0.5
    np.testing.assert_allclose(hog(patch), hog(patch + 0.3), atol=1e-10)


def test_hog_is_deterministic():
    patch = np.random.default_rng(6).random((20, 20))
    a, b = hog(patch), hog(patch)
    assert a.tobytes() == b.tobytes()


def test_hog_block_norm_bounded():
    rng = np.random.default_rng(7)
    v = hog(rng.random((20, 20)))
    blocks = v.reshape(16, 36)
    norms = np.linalg.norm(blocks, axis=1)
    assert np.all(norms <= 1.0 + 1e-9)


# ---------------------------------------------------------------- raw + gray


def test_raw_feature_examples():
    assert np.abs(raw_feature(np.zeros((20, 20)))).max() == 0.0
    patch = np.zeros((20, 20))
    patch[0, 0] = 1.0
    v = raw_feature(patch)
    assert v[0] == 1.0 and v.sum() == 1.0
    assert v.shape == (FEATURE_LENGTHS["raw"],)


def test_raw_feature_is_a_copy():
    patch = np.zeros((20, 20))
    v = raw_feature(patch)
    patch[0, 0] = 9.0
    assert v[0] == 0.0


def test_extract_feature_dispatch():
    patch = np.random.default_rng(8).random((20, 20))
    np.testing.assert_array_equal(extract_feature(patch, "hog"), hog(patch))
    np.testing.assert_array_equal(extract_feature(patch, "raw"), raw_feature(patch))
    with pytest.raises(ValueError):
        extract_feature(patch, "sift")


def test_to_gray_weights():
    rgb = np.zeros((4, 4, 3))
    rgb[..., 0] = 1.0
    assert to_gray(rgb)[0, 0] == pytest.approx(LUMA_WEIGHTS[0])
    rgb = np.ones((4, 4, 3))
    np.testing.assert_allclose(to_gray(rgb), 1.0, atol=1e-12)
