import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trustscope.models import init_model
from trustscope.models.base import ModelParams, Stage, forward, head_stage, logits, logits_from, pool_stage
from trustscope.saliency import (
    EPS,
    RAMP_ANCHORS,
    SaliencyMap,
    ablation_cam,
    ablation_weights,
    color_ramp,
    normalize_map,
    pointing_hit,
    render_overlay,
    upsample_bilinear,
    weighted_map,
)

from . import oracles


def linear_toy(head_w, head_b=0.0):
    """Input (4, 4) -> features x * c_k per channel -> pool -> head."""
    scales = np.array([1.0, -2.0, 0.5])

    def fwd(p, x):
        return x[..., None] * scales, None

    m = ModelParams("cnn_toy", {"input_size": 4, "saliency_layer": "feat"},
                    {"head.w": np.asarray(head_w, float), "head.b": np.array([head_b])})
    m._stages = [Stage("feat", fwd, None), pool_stage(), head_stage()]
    return m, scales


IMG = np.arange(16, dtype=float).reshape(4, 4) / 10


def test_linear_toy_weights_are_contributions():
    m, c = linear_toy([0.3, 0.2, -0.4], 0.1)
    pooled = IMG.mean() * c
    y = 0.1 + pooled @ [0.3, 0.2, -0.4]
    want = pooled * [0.3, 0.2, -0.4] / (abs(y) + 1e-8)
    np.testing.assert_allclose(ablation_weights(m, IMG), want, rtol=0, atol=1e-14)


def test_zero_head_weight_gives_zero_ablation_weight():
    m, _ = linear_toy([0.3, 0.0, -0.4])
    assert ablation_weights(m, IMG)[1] == 0.0


def test_dead_channel_gets_zero_weight():
    m = init_model("cnn_toy", seed=0)
    x = np.random.default_rng(0).normal(size=(64, 64))
    # zero the last block's conv path and bias so one channel is identically zero
    m.params["block4.conv2.w"][..., 5] = 0.0
    m.params["block4.conv2.b"][5] = -1e6
    w = ablation_weights(m, x)
    assert w[5] == 0.0


@pytest.mark.parametrize("arch", ["swin_toy", "cnn_toy"])
def test_weights_order_independent_and_pure(arch):
    m = init_model(arch, seed=1)
    before = {k: v.tobytes() for k, v in m.params.items()}
    x = np.random.default_rng(1).normal(size=(64, 64))
    w = ablation_weights(m, x)
    assert {k: v.tobytes() for k, v in m.params.items()} == before

    _, acts = forward(m, x)
    a = acts[m.saliency_layer]
    y = float(logits(m, x)[0])
    rev = np.empty_like(w)
    for k in reversed(range(a.shape[-1])):
        b = a.copy()
        b[..., k] = 0.0
        rev[k] = (y - float(logits_from(m, m.saliency_layer, b[None])[0])) / (abs(y) + EPS)
    assert rev.tobytes() == w.tobytes()


def test_unknown_layer():
    with pytest.raises(KeyError):
        ablation_weights(init_model("cnn_toy"), np.zeros((64, 64)), "block9")


def test_weighted_map_hand_example():
    a = np.zeros((2, 2, 2))
    a[..., 0] = [[1.0, 2.0], [3.0, 4.0]]
    a[..., 1] = [[4.0, 0.0], [1.0, 1.0]]
    w = np.array([0.5, -1.0])
    # 0.5*A0 - A1 = [[-3.5, 1], [0.5, 1]]
    np.testing.assert_array_equal(weighted_map(a, w), [[0.0, 1.0], [0.5, 1.0]])


def test_weighted_map_zero_weights():
    a = np.random.default_rng(0).normal(size=(4, 4, 3))
    assert not np.any(weighted_map(a, np.zeros(3)))


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_nonnegative_inputs_skip_rectification(seed):
    rng = np.random.default_rng(seed)
    a, w = rng.random((3, 3, 4)), rng.random(4)
    np.testing.assert_allclose(weighted_map(a, w), np.tensordot(a, w, 1), atol=1e-12)


@pytest.mark.parametrize("arch", ["swin_toy", "cnn_toy"])
def test_cam_nonnegative_and_tagged(arch):
    m = init_model(arch, seed=2)
    cam = ablation_cam(m, np.random.default_rng(2).normal(size=(64, 64)))
    assert isinstance(cam, SaliencyMap)
    assert cam.source_layer == m.saliency_layer and cam.input_size == (64, 64)
    assert np.all(cam.grid >= 0)
    assert cam.upsampled().shape == (64, 64)


@pytest.mark.parametrize("arch", ["swin_toy", "cnn_toy"])
def test_zero_head_gives_zero_map(arch):
    m = init_model(arch, seed=0)
    m.params["head.w"][:] = 0.0
    cam = ablation_cam(m, np.random.default_rng(0).normal(size=(64, 64)))
    assert not np.any(cam.grid)


# -- upsampling ---------------------------------------------------------------

def test_upsample_hand_row():
    np.testing.assert_allclose(upsample_bilinear(np.array([[0.0, 1.0]]), 1, 5),
                               [[0.0, 0.25, 0.5, 0.75, 1.0]], atol=1e-15)


def test_upsample_constant_and_identity():
    np.testing.assert_array_equal(upsample_bilinear(np.full((3, 4), 2.5), 9, 7), np.full((9, 7), 2.5))
    g = np.random.default_rng(0).random((5, 6))
    np.testing.assert_array_equal(upsample_bilinear(g, 5, 6), g)


@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 20), st.integers(1, 20), st.integers(0, 999))
@settings(max_examples=60)
def test_upsample_matches_oracle_and_stays_in_range(h, w, H, W, seed):
    g = np.random.default_rng(seed).normal(size=(h, w))
    up = upsample_bilinear(g, H, W)
    np.testing.assert_allclose(up, oracles.bilinear_corners(g, H, W), atol=1e-12)
    assert g.min() - 1e-12 <= up.min() and up.max() <= g.max() + 1e-12


@pytest.mark.parametrize("shape", [(0, 3), (3,)])
def test_upsample_rejects_bad_grid(shape):
    with pytest.raises(ValueError):
        upsample_bilinear(np.zeros(shape), 4, 4)


def test_upsample_rejects_zero_target():
    with pytest.raises(ValueError):
        upsample_bilinear(np.ones((2, 2)), 0, 4)


# -- rendering ----------------------------------------------------------------

def test_ramp_anchors():
    np.testing.assert_array_equal(color_ramp([0.0, 1 / 3, 2 / 3, 1.0]).round(), RAMP_ANCHORS)
    np.testing.assert_allclose(color_ramp(1 / 6), [0, 127.5, 127.5])


def test_normalize_map():
    assert normalize_map(np.array([[0.0, 2.0], [1.0, 4.0]])).max() == 1.0
    assert not np.any(normalize_map(np.zeros((2, 2))))


def test_zero_map_overlay_is_dimmed_blue():
    img = np.full((3, 3), 0.4)
    out = render_overlay(img, np.zeros((3, 3)))
    assert out.dtype == np.uint8
    np.testing.assert_array_equal(out[0, 0], np.round([51, 51, 178.5]).astype(np.uint8))


def test_peak_pixel_is_red_blend():
    img = np.zeros((2, 2))
    m = np.array([[0.0, 0.2], [0.1, 3.0]])
    out = render_overlay(img, m)
    np.testing.assert_array_equal(out[1, 1], [128, 0, 0])


def test_overlay_deterministic_and_size_checked():
    rng = np.random.default_rng(0)
    img, m = rng.random((8, 8)), rng.random((8, 8))
    assert render_overlay(img, m).tobytes() == render_overlay(img, m).tobytes()
    with pytest.raises(ValueError):
        render_overlay(img, np.ones((4, 4)))


def test_pointing_hit():
    m = np.zeros((10, 10))
    m[4, 6] = 1.0
    assert pointing_hit(m, (3, 5, 2, 2))
    assert not pointing_hit(m, (3, 5, 1, 2))
    assert not pointing_hit(m, (0, 0, 4, 4))
