import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from attncap import scenario as sc
from attncap.fusion import (
    DegenerateFrameError,
    FusionConfig,
    FusionHead,
    FusionModel,
    NumericError,
    build_gaze_stack,
    classify_attention,
    fuse,
    fused_input,
    scene_features,
)
from attncap.fusion import FusionShapeError
from attncap.fusion.features import GRADIENT_RADII, INTENSITY_RADII
from attncap.gate import AlwaysAccept, GateConfig, collect_snippets
from attncap.oculomotor import classify_arrays
from attncap.trace import SceneFrame

N_INT = len(INTENSITY_RADII)
N_GRAD = len(GRADIENT_RADII)
GX = slice(N_INT, N_INT + N_GRAD)
GY = slice(N_INT + N_GRAD, N_INT + 2 * N_GRAD)


# -- scene features -------------------------------------------------------------------


def test_shape_is_56_56_24():
    for shape in [(24, 32), (7, 5), (224, 224), (1, 1), (300, 100)]:
        f = scene_features(np.random.default_rng(0).uniform(size=shape))
        assert f.grid.shape == (56, 56, 24)
        assert np.all(np.isfinite(f.grid))


def test_constant_frame_zero_gradients():
    f = scene_features(SceneFrame(0.0, np.full((24, 32), 0.37)))
    assert not f.grid[..., GX].any() and not f.grid[..., GY].any()
    np.testing.assert_allclose(f.grid[..., :N_INT], 0.37, atol=1e-12)


def test_vertical_step_edge():
    luma = np.zeros((224, 224))
    luma[:, 112:] = 1.0
    f = scene_features(luma)
    gx = f.grid[..., GX]
    # raw finite difference: only the pooled columns straddling column 112
    col = gx[:, :, 0].mean(axis=0)
    assert set(np.flatnonzero(col > 0)) <= {27, 28}
    assert np.argmax(col) in (27, 28)
    for k in range(N_GRAD):
        assert np.argmax(gx[:, :, k].mean(axis=0)) in (27, 28)
    assert not f.grid[..., GY].any()


def test_degenerate_frame():
    with pytest.raises(DegenerateFrameError):
        scene_features(np.zeros((0, 5)))


def test_deterministic():
    luma = np.random.default_rng(3).uniform(size=(24, 32))
    np.testing.assert_array_equal(scene_features(luma).grid, scene_features(luma).grid)


# -- fuse -------------------------------------------------------------------------------


def _scene(seed=0):
    return np.random.default_rng(seed).uniform(size=(56, 56, 24))


def test_zero_heatmaps():
    f_s = _scene()
    fused = fuse(f_s, [np.zeros((56, 56))] * 4)
    assert not fused.products().any()
    np.testing.assert_array_equal(fused.scene(), f_s)


def test_single_pixel_product():
    f_s = np.zeros((56, 56, 24))
    f_s[10, 20, :] = 0.2
    h = np.zeros((56, 56))
    h[10, 20] = 0.5
    fused = fuse(f_s, [h])
    assert fused.products()[10, 20, 0] == pytest.approx(0.1, abs=1e-15)


def test_channel_count_32():
    stack = build_gaze_stack([(0.5, 0.5)] * 4)
    assert fuse(_scene(), stack).channels == 32


def test_product_is_heatmap_times_scene_mean():
    f_s = _scene(1)
    stack = build_gaze_stack([(0.1, 0.2), (0.3, 0.4), (0.5, 0.6), (0.7, 0.8)])
    fused = fuse(f_s, stack)
    for k, h in enumerate(stack):
        np.testing.assert_array_equal(fused.products()[..., k], h.grid * f_s.mean(axis=2))
        np.testing.assert_array_equal(fused.heatmaps()[..., k], h.grid)


@given(st.floats(0.0, 100.0), st.integers(0, 1000))
def test_fusion_linearity(c, seed):
    rng = np.random.default_rng(seed)
    f_s = rng.uniform(size=(56, 56, 24))
    maps = [rng.uniform(size=(56, 56)) for _ in range(4)]
    a = fuse(f_s, maps)
    b = fuse(f_s, [c * m for m in maps])
    np.testing.assert_array_equal(b.scene(), a.scene())
    np.testing.assert_allclose(b.products(), c * a.products(), rtol=1e-12, atol=1e-300)


def test_shape_mismatch():
    with pytest.raises(FusionShapeError):
        fuse(_scene(), [np.zeros((28, 28))])


# -- classify_attention --------------------------------------------------------------------


def test_zero_model_is_half_and_rejects():
    fused = fuse(_scene(), build_gaze_stack([(0.5, 0.5)] * 4))
    dec = classify_attention(fused, [1.0] * 4, FusionModel.zeros())
    assert dec.score == 0.5 and dec.a_t == 0
    assert classify_attention(fused, [1.0] * 4, FusionModel.zeros(), threshold=0.49).a_t == 1


def test_softmax_sums_to_one_and_argmax_shift_invariant():
    rng = np.random.Generator(np.random.PCG64(9))
    m = FusionModel.initialize(rng)
    x = rng.uniform(size=(3, 56, 56, 32))
    lik = rng.uniform(size=(3, 4))
    logits = m.forward(x, lik)
    shifted = m.copy()
    for c in (-50.0, 0.3, 1e3):
        shifted.head_bias = m.head_bias + c
        l2 = shifted.forward(x, lik)
        np.testing.assert_array_equal(np.argmax(l2, 1), np.argmax(logits, 1))
        np.testing.assert_allclose(shifted.predict_proba(x, lik, dtype=np.float64),
                                   m.predict_proba(x, lik, dtype=np.float64), atol=1e-12)


def test_non_finite_weights_name_layer():
    fused = fuse(_scene(), build_gaze_stack([(0.5, 0.5)] * 4))
    m = FusionModel.zeros()
    m.head_weight[0, 0] = np.nan
    with pytest.raises(NumericError, match="head"):
        classify_attention(fused, [1.0] * 4, m)
    m = FusionModel.zeros()
    m.conv_kernel[0, 0, 1, 1] = np.inf
    with pytest.raises(NumericError, match="conv"):
        classify_attention(fused, [1.0] * 4, m)


def test_overflowing_activation_names_conv():
    x = np.full((1, 56, 56, 32), 1e300)
    m = FusionModel.zeros()
    m.conv_kernel[:] = 1e300
    with np.errstate(over="ignore"), pytest.raises(NumericError, match="conv"):
        m.forward(x, np.zeros((1, 4)))


def test_fused_input_padding_at_start():
    tr = sc.generate(sc.builtin("pursuit_basic", seed=0, duration=2.0))
    t, x, y, v = tr.gaze_arrays()
    _, lik = classify_arrays(t, x, y, v)
    fused, L = fused_input(tr, 1, lik)
    assert fused.channels == 32 and L.shape == (4,)
    assert L[0] == L[1] == lik[0] and L[-1] == lik[1]


# -- trained head on scenarios ----------------------------------------------------------------


class _Spy:
    def __init__(self, inner):
        self.inner = inner
        self.scores = []
        self.uses_scene = True

    def __call__(self, ctx):
        ok, s = self.inner(ctx)
        self.scores.append((ctx.clock, ok, s))
        return ok, s


def test_blank_stare_rejected_by_trained_head(model):
    for seed in range(3):
        tr = sc.generate(sc.builtin("blank_stare", seed=seed))
        spy = _Spy(FusionHead(model))
        collect_snippets(tr, GateConfig(), spy)
        assert spy.scores and not any(ok for _, ok, _ in spy.scores)


def test_pursuit_accepted_with_high_score(model):
    for seed in range(3):
        tr = sc.generate(sc.builtin("pursuit_basic", seed=seed))
        spy = _Spy(FusionHead(model))
        run = collect_snippets(tr, GateConfig(), spy)
        inside = [(ok, s) for t, ok, s in spy.scores if tr.truth.contains(t) is not None]
        assert inside and all(ok and s >= 0.9 for ok, s in inside)
        assert len(run.snippets) == 1


def test_head_rejects_incompatible_model():
    with pytest.raises(ValueError):
        FusionHead(FusionModel.zeros(n_likelihood=3))
    with pytest.raises(ValueError):
        FusionHead(FusionModel.zeros(in_channels=30))


def test_always_accept_reads_no_scene_but_head_does():
    assert AlwaysAccept.uses_scene is False and FusionHead.uses_scene is True
    assert FusionConfig().weight_vector().tolist() == pytest.approx([0.4, 0.6, 0.8, 1.0])
