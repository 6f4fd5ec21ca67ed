import dataclasses

import numpy as np
import pytest

from robustridge.errors import TargetLostError
from robustridge.features import FeatureMap, Frame
from robustridge.ridge import TrainConfig
from robustridge.synthetic import SyntheticSpec, synth_sequence
from robustridge.tracker import TrackerConfig, correlate, init, respond, step, update_scale

from conftest import naive_valid_correlation, planted_extractor

FAST = TrackerConfig(train=TrainConfig(epochs=8, steps_per_epoch=5))


@pytest.fixture(scope="module")
def sequence():
    return synth_sequence(SyntheticSpec(frames=10, seed=1))


def test_scale_factors():
    np.testing.assert_allclose(
        TrackerConfig().scale_factors(), [1.0375**-2, 1.0, 1.07640625], rtol=0, atol=1e-12
    )
    assert TrackerConfig().scale_factors()[0] == pytest.approx(0.929017, abs=1e-6)


def test_config_validation():
    for bad in ({"scale_base": 1.0}, {"scale_lerp": 1.5}, {"top_k": 0}, {"search_size": 63}, {"scale_exponents": ()}):
        with pytest.raises(ValueError):
            TrackerConfig(**bad)


def test_top_k_clamped_to_channel_count(sequence):
    frames, gt = sequence
    state = init(frames[0], tuple(gt[0]), FAST)
    assert FAST.top_k == 100
    assert len(state.selected) == 2
    assert state.template.channels == 2


def test_planted_channel_selected():
    frame = Frame(np.full((128, 128), 0.5))
    cfg = dataclasses.replace(FAST, top_k=2)
    state = init(frame, (63.5, 63.5, 24, 24), cfg, planted_extractor(planted=(5,), channels=8))
    assert 5 in state.selected
    assert state.scores.ranking[0] == 5


def test_init_is_deterministic(sequence):
    frames, gt = sequence
    a = init(frames[0], tuple(gt[0]), FAST)
    b = init(frames[0], tuple(gt[0]), FAST)
    assert a.selected == b.selected
    assert a.net == b.net
    assert a.template.data.tobytes() == b.template.data.tobytes()
    assert a.scores.scores.tobytes() == b.scores.scores.tobytes()
    assert (a.center, a.target_size, a.scale) == (b.center, b.target_size, b.scale)


@pytest.mark.parametrize("bbox", [(60, 60, 1.5, 20), (60, 60, 20, 1.0)])
def test_degenerate_box_rejected(sequence, bbox):
    with pytest.raises(ValueError):
        init(sequence[0][0], bbox, FAST)


def test_box_outside_frame_rejected(sequence):
    with pytest.raises(ValueError):
        init(sequence[0][0], (-50, -50, 10, 10), FAST)


# -- correlation -------------------------------------------------------------


def test_zero_template_gives_zero_response():
    search = FeatureMap(np.random.default_rng(0).normal(size=(9, 9, 3)))
    resp = correlate(FeatureMap(np.zeros((5, 5, 3))), search)
    assert resp.shape == (5, 5)
    assert not resp.any()


def test_exact_copy_peaks_at_its_offset():
    rng = np.random.default_rng(1)
    tmpl = rng.uniform(0.5, 1.0, size=(4, 4, 2))
    search = np.zeros((12, 12, 2))
    search[5:9, 2:6] = tmpl
    resp = correlate(FeatureMap(tmpl), FeatureMap(search))
    assert np.unravel_index(np.argmax(resp), resp.shape) == (5, 2)


def test_correlation_matches_naive_oracle():
    rng = np.random.default_rng(2)
    tmpl, search = rng.normal(size=(5, 5, 3)), rng.normal(size=(9, 9, 3))
    np.testing.assert_allclose(
        correlate(FeatureMap(tmpl), FeatureMap(search)), naive_valid_correlation(search, tmpl), atol=1e-10
    )


def test_correlation_selects_search_channels():
    rng = np.random.default_rng(3)
    search = rng.normal(size=(8, 8, 4))
    tmpl = rng.normal(size=(3, 3, 2))
    got = correlate(FeatureMap(tmpl), FeatureMap(search), selected=[3, 0])
    np.testing.assert_allclose(got, naive_valid_correlation(search[:, :, [3, 0]], tmpl), atol=1e-10)


def test_peak_moves_with_search_content():
    rng = np.random.default_rng(4)
    tmpl = rng.uniform(size=(3, 3, 1))
    search = np.zeros((14, 14, 1))
    search[4:7, 5:8] = tmpl
    base = correlate(FeatureMap(tmpl), FeatureMap(search))
    for dr, dc in [(1, 0), (0, 2), (-3, 1), (2, -4)]:
        moved = correlate(FeatureMap(tmpl), FeatureMap(np.roll(search, (dr, dc), axis=(0, 1))))
        r, c = np.unravel_index(np.argmax(base), base.shape)
        assert np.unravel_index(np.argmax(moved), moved.shape) == (r + dr, c + dc)


def test_template_larger_than_search_rejected():
    with pytest.raises(ValueError):
        correlate(FeatureMap(np.ones((6, 6, 1))), FeatureMap(np.ones((5, 5, 1))))


# -- scale update ------------------------------------------------------------


@pytest.mark.parametrize("scale", [1.0, 0.7331, 1.9])
def test_scale_update_fixed_point(scale):
    assert update_scale(scale, 1.0, 0.435) == scale


def test_scale_update_endpoints_and_bounds():
    f = 1.0375**2
    assert update_scale(1.3, f, 0.0) == 1.3
    assert update_scale(1.3, f, 1.0) == pytest.approx(1.3 * f, rel=1e-15)
    mid = update_scale(1.3, f, 0.435)
    assert mid == pytest.approx(0.565 * 1.3 + 0.435 * 1.3 * f, rel=1e-15)
    assert 1.3 < mid < 1.3 * f


def test_scale_update_stays_within_pyramid_bounds():
    factors = TrackerConfig().scale_factors()
    for lerp in np.linspace(0, 1, 11):
        for f in factors:
            new = update_scale(1.7, f, lerp)
            assert 1.7 * factors.min() - 1e-15 <= new <= 1.7 * factors.max() + 1e-15


# -- stepping ----------------------------------------------------------------


def test_response_ties_prefer_lowest_scale_row_col(sequence):
    frames, gt = sequence
    state = init(frames[0], tuple(gt[0]), FAST)
    flat = dataclasses.replace(state, template=FeatureMap(np.zeros_like(state.template.data), stride=4))
    rmap, _, _ = respond(flat, frames[1])
    assert rmap.best == (0, 0, 0, 0.0)


def test_static_target_tracked_within_two_pixels(sequence):
    frames, gt = sequence
    state = init(frames[0], tuple(gt[0]), TrackerConfig())
    for t in range(1, 10):
        state, box = step(state, frames[t])
        assert np.hypot(box[0] - gt[t, 0], box[1] - gt[t, 1]) <= 2.0


def test_step_follows_shifted_frame():
    frames, gt = synth_sequence(SyntheticSpec(frames=1, noise_std=0.0, seed=2))
    state = init(frames[0], tuple(gt[0]), FAST)
    moved = Frame(np.roll(frames[0].pixels, (3, -5), axis=(0, 1)))
    _, box = step(state, moved)
    assert box[0] == pytest.approx(gt[0, 0] - 5, abs=1.5)
    assert box[1] == pytest.approx(gt[0, 1] + 3, abs=1.5)


def test_lost_target_keeps_state(sequence):
    frames, gt = sequence
    state = init(frames[0], tuple(gt[0]), FAST)
    gone = dataclasses.replace(state, center=(-900.0, -900.0))
    with pytest.raises(TargetLostError) as info:
        step(gone, frames[1])
    assert info.value.state is gone
