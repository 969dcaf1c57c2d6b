"""Gaze heatmaps, scene features, channel fusion, and the attention head."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .features import CHANNELS as SCENE_CHANNELS
from .features import DegenerateFrameError, SceneFeatures, scene_features
from .heatmap import GRID, GazeHeatmap, build_gaze_stack, default_weights, gaussian_heatmap, grid_cell
from .model import FusionModel, NumericError, TrainHyper, TrainingError, train_head

__all__ = [
    "GRID",
    "SCENE_CHANNELS",
    "AttentionHead",
    "DegenerateFrameError",
    "FusedTensor",
    "FusionConfig",
    "FusionHead",
    "FusionModel",
    "GazeHeatmap",
    "NumericError",
    "SceneFeatures",
    "TrainHyper",
    "TrainingError",
    "build_gaze_stack",
    "classify_attention",
    "default_weights",
    "fuse",
    "fused_input",
    "gaussian_heatmap",
    "grid_cell",
    "scene_features",
    "train_head",
]


class FusionShapeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FusedTensor:
    grid: np.ndarray  # (56, 56, C_s + 2N): scene | heatmaps | products
    n_scene: int
    n_gaze: int

    @property
    def channels(self):
        return self.grid.shape[2]

    def scene(self):
        return self.grid[..., : self.n_scene]

    def heatmaps(self):
        return self.grid[..., self.n_scene : self.n_scene + self.n_gaze]

    def products(self):
        return self.grid[..., self.n_scene + self.n_gaze :]


def fuse(f_s, stack):
    """Concatenate scene channels, gaze heatmaps, and heatmap x scene-mean products."""
    scene = f_s.grid if isinstance(f_s, SceneFeatures) else np.asarray(f_s)
    maps = [h.grid if isinstance(h, GazeHeatmap) else np.asarray(h) for h in stack]
    if scene.ndim != 3:
        raise FusionShapeError(f"scene features must be (H, W, C), got {scene.shape}")
    for m in maps:
        if m.shape != scene.shape[:2]:
            raise FusionShapeError(f"heatmap shape {m.shape} != scene grid {scene.shape[:2]}")
    n = len(maps)
    mean = scene.mean(axis=2)
    heat = np.stack(maps, axis=-1) if n else np.zeros(scene.shape[:2] + (0,))
    prod = heat * mean[..., None]
    return FusedTensor(np.concatenate([scene, heat, prod], axis=-1), scene.shape[2], n)


@dataclass(frozen=True)
class AttentionHead:
    """Decision from :func:`classify_attention`."""

    a_t: int
    score: float


def classify_attention(fused, likelihoods, model, threshold=0.5, dtype=np.float64):
    """Score = softmax probability of the attention class; accept iff score > threshold."""
    grid = fused.grid if isinstance(fused, FusedTensor) else np.asarray(fused)
    for name, p in zip(("conv", "conv", "head", "head"), model.params()):
        if not np.all(np.isfinite(p)):
            raise NumericError(name)
    score = float(model.predict_proba(grid[None], np.asarray(likelihoods)[None], dtype=dtype)[0])
    return AttentionHead(int(score > threshold), score)


@dataclass(frozen=True)
class FusionConfig:
    sigma: float = 2.0
    weights: tuple | None = None  # None -> default_weights(N)
    threshold: float = 0.5
    n_gaze: int = 4

    def weight_vector(self):
        w = default_weights(self.n_gaze) if self.weights is None else np.asarray(self.weights, dtype=float)
        if len(w) != self.n_gaze:
            raise ValueError(f"{len(w)} weights for N={self.n_gaze}")
        return w


def fused_input(trace, index, likelihood, cfg=FusionConfig(), features=None, x=None, y=None, valid=None, t=None):
    """Fused tensor and likelihood window for gaze sample ``index`` of ``trace``.

    Uses the N newest gaze samples (padding per :func:`build_gaze_stack`) and
    the latest scene frame at or before the sample time.
    """
    if t is None:
        t, x, y, valid = trace.gaze_arrays()
    n = cfg.n_gaze
    lo = max(0, index - n + 1)
    sel = range(lo, index + 1)
    pos = [(x[k], y[k]) for k in sel]
    val = [bool(valid[k]) for k in sel]
    if not any(val):
        back = np.flatnonzero(np.asarray(valid[: index + 1]))
        if len(back) == 0:
            raise ValueError("no valid gaze sample up to this point")
        k = int(back[-1])
        pos, val = [(x[k], y[k])], [True]
    pad = n - len(pos)
    pos = [pos[0]] * pad + pos
    val = [val[0]] * pad + val
    stack = build_gaze_stack(pos, cfg.weight_vector(), cfg.sigma, valid=val)
    if features is None:
        features = scene_features(trace.frame_at(float(t[index])))
    lik = np.asarray(likelihood[lo : index + 1], dtype=np.float64)
    if len(lik) < n:
        lik = np.concatenate([np.full(n - len(lik), lik[0]), lik])
    return fuse(features, stack), lik


class FusionHead:
    """Fusion handle for :func:`attncap.gate.collect_snippets`.

    Reads the scene frame only when the gate asks for a decision. Scene
    features are cached per frame timestamp.
    """

    uses_scene = True

    def __init__(self, model, cfg=FusionConfig(), extractor=scene_features, cache_size=8):
        if model.n_likelihood != cfg.n_gaze:
            raise ValueError(f"model expects {model.n_likelihood} likelihoods, config has N={cfg.n_gaze}")
        if model.in_channels != SCENE_CHANNELS + 2 * cfg.n_gaze:
            raise ValueError(f"model expects {model.in_channels} input channels")
        self.model = model
        self.cfg = cfg
        self.extractor = extractor
        self._cache = OrderedDict()
        self._cache_size = cache_size

    def _features(self, trace, clock):
        frame = trace.frame_at(clock)
        key = (id(trace), frame.t)
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        f = self.extractor(frame)
        self._cache[key] = f
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return f

    def __call__(self, ctx):
        try:
            fused, lik = fused_input(
                ctx.trace, ctx.index, ctx.likelihood, self.cfg,
                features=self._features(ctx.trace, ctx.clock),
                x=ctx.x, y=ctx.y, valid=ctx.valid, t=ctx.t,
            )
        except ValueError:
            return False, 0.0
        dec = classify_attention(fused, lik, self.model, self.cfg.threshold, dtype=np.float32)
        return bool(dec.a_t), dec.score
