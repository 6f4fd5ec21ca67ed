import numpy as np
import pytest

from robustridge.features import (
    ExtractorSpec,
    FeatureMap,
    Frame,
    extract_features,
    extract_patch,
    make_extractor,
)


def random_frame(h=40, w=50, seed=0):
    return Frame(np.random.default_rng(seed).uniform(size=(h, w)))


def test_frame_validation():
    with pytest.raises(ValueError):
        Frame(np.full((4, 4), 1.5))
    with pytest.raises(ValueError):
        Frame(np.zeros((3,)))
    with pytest.raises(ValueError):
        Frame(np.array([[0.2, np.nan]]))


def test_constant_frame_gives_constant_patch():
    patch = extract_patch(Frame(np.full((60, 60), 0.5)), (30.0, 28.0), 20.0, 33)
    assert patch.pixels.shape == (33, 33)
    np.testing.assert_allclose(patch.pixels, 0.5, atol=1e-15)


def test_identity_resample_matches_subimage():
    frame = random_frame()
    # an odd out_size centred on an integer pixel samples integer coordinates
    patch = extract_patch(frame, (20.0, 15.0), 11.0, 11)
    np.testing.assert_allclose(patch.pixels, frame.pixels[10:21, 15:26], atol=1e-12)


def test_half_outside_is_filled_with_inside_mean():
    frame = random_frame()
    # columns -5..4 around cx=0: five outside, five inside
    patch = extract_patch(frame, (-0.5, 20.5), 10.0, 10)
    inside = patch.pixels[:, 5:]
    np.testing.assert_allclose(patch.pixels[:, :5], inside.mean(), atol=1e-12)
    # the inside half is plain bilinear sampling of the frame
    np.testing.assert_allclose(inside, frame.pixels[16:26, 0:5], atol=1e-12)


def test_patch_without_overlap_is_rejected():
    with pytest.raises(ValueError):
        extract_patch(random_frame(), (-100.0, -100.0), 10.0, 10)


def test_bilinear_sample_between_pixels():
    px = np.zeros((4, 4))
    px[1, 1], px[1, 2] = 0.2, 0.6
    patch = extract_patch(Frame(px), (1.5, 1.0), 1.0, 1)
    assert patch.pixels[0, 0] == pytest.approx(0.4)


def test_raw_is_single_channel_copy():
    patch = random_frame(16, 16)
    fm = extract_features(patch, ExtractorSpec(kind="raw"))
    assert fm.channels == 1
    np.testing.assert_array_equal(fm.data[:, :, 0], patch.pixels)


def test_gradients_of_constant_patch_vanish():
    fm = extract_features(Frame(np.full((12, 12), 0.3)), ExtractorSpec(kind="gradients"))
    assert fm.data.shape == (12, 12, 2)
    assert not fm.data.any()


def test_gradients_channel_order():
    ramp = np.tile(np.linspace(0, 1, 11), (11, 1))  # increases along x only
    fm = extract_features(Frame(ramp), ExtractorSpec(kind="gradients"))
    np.testing.assert_allclose(fm.data[:, :, 0], 0.1)
    np.testing.assert_allclose(fm.data[:, :, 1], 0.0, atol=1e-15)


def test_random_filters_deterministic_and_seeded():
    patch = random_frame(20, 20)
    spec = ExtractorSpec(kind="random_filters", filter_count=6, filter_size=5, seed=3)
    a = extract_features(patch, spec)
    b = extract_features(patch, spec)
    assert a.data.tobytes() == b.data.tobytes()
    assert a.data.shape == (16, 16, 6)
    assert a.offset == 2.0
    c = extract_features(patch, ExtractorSpec(kind="random_filters", filter_count=6, filter_size=5, seed=4))
    assert not np.array_equal(a.data, c.data)


def test_random_filters_are_zero_mean():
    # zero-mean filters ignore a constant offset
    patch = random_frame(20, 20)
    shifted = Frame(patch.pixels * 0.5 + 0.25)
    spec = ExtractorSpec(kind="random_filters", filter_count=4, seed=1)
    a = extract_features(Frame(patch.pixels * 0.5), spec)
    b = extract_features(shifted, spec)
    np.testing.assert_allclose(a.data, b.data, atol=1e-12)


def test_stride_subsamples():
    patch = random_frame(17, 17)
    full = extract_features(patch, ExtractorSpec(kind="gradients"))
    strided = make_extractor(ExtractorSpec(kind="gradients", stride=4))(patch)
    assert strided.stride == 4
    np.testing.assert_array_equal(strided.data, full.data[::4, ::4])


def test_feature_map_select():
    fm = FeatureMap(np.arange(24.0).reshape(2, 3, 4), stride=2)
    sub = fm.select([3, 1])
    np.testing.assert_array_equal(sub.data, fm.data[:, :, [3, 1]])
    assert sub.stride == 2
    with pytest.raises(ValueError):
        fm.select([4])
    with pytest.raises(ValueError):
        fm.select([])


def test_extractor_spec_validation():
    with pytest.raises(ValueError):
        ExtractorSpec(kind="vgg")
    with pytest.raises(ValueError):
        ExtractorSpec(filter_size=4)
    with pytest.raises(ValueError):
        ExtractorSpec(stride=0)


def test_random_filters_shift_equivariant():
    px = np.random.default_rng(5).uniform(size=(24, 25))
    spec = ExtractorSpec(kind="random_filters", filter_count=3, seed=2)
    a = extract_features(Frame(px[:, :-1]), spec).data
    b = extract_features(Frame(px[:, 1:]), spec).data
    # b sees the content one pixel to the left of a
    assert np.max(np.abs(a[:, 1:] - b[:, :-1])) <= 1e-10


@pytest.mark.parametrize("crop, out", [(3.7, 5), (40.0, 17), (250.0, 64), (1.0, 1)])
def test_patch_has_exact_output_size(crop, out):
    patch = extract_patch(random_frame(), (12.3, 30.8), crop, out)
    assert patch.pixels.shape == (out, out)
