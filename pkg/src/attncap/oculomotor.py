"""Eye-movement phase labelling and the attention-phase likelihood series.

Labels come from a velocity threshold (saccades) combined with a
dispersion threshold (fixations); everything in between is smooth
pursuit. The likelihood of an attention-consistent phase is an
exponential moving average of the indicator "not a saccade".

Speeds are in normalized-frame units per second, dispersion in
normalized units.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels


class Movement(enum.IntEnum):
    UNKNOWN = 0
    SACCADE = 1
    SMOOTH_PURSUIT = 2
    FIXATION = 3

    @property
    def attentive(self):
        return self in (Movement.SMOOTH_PURSUIT, Movement.FIXATION)

    @property
    def short(self):
        return "USPF"[self.value]


@dataclass(frozen=True)
class OculomotorConfig:
    v_saccade: float = 1.2
    v_drift: float = 0.15
    dispersion_max: float = 0.01
    window: int = 6
    ema_alpha: float = 0.3

    def __post_init__(self):
        if not (self.v_saccade > self.v_drift > 0):
            raise ValueError("need v_saccade > v_drift > 0")
        if int(self.window) != self.window or self.window < 2:
            raise ValueError("window must be an integer >= 2")
        if not (0.0 < self.ema_alpha <= 1.0):
            raise ValueError("ema_alpha must be in (0, 1]")


@dataclass(frozen=True)
class MovementEstimate:
    t: float
    label: Movement
    likelihood: float


def _columns(samples):
    n = len(samples)
    t = np.fromiter((s.t for s in samples), dtype=np.float64, count=n)
    x = np.fromiter((s.x for s in samples), dtype=np.float64, count=n)
    y = np.fromiter((s.y for s in samples), dtype=np.float64, count=n)
    v = np.fromiter((bool(s.valid) for s in samples), dtype=np.uint8, count=n)
    return t, x, y, v


def classify_arrays(t, x, y, valid, cfg=OculomotorConfig()):
    """Batch labelling of columnar gaze data; returns ``(labels, likelihood)``."""
    return kernels.classify_stream(
        np.ascontiguousarray(t, dtype=np.float64),
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(valid, dtype=np.uint8),
        float(cfg.v_saccade),
        float(cfg.v_drift),
        float(cfg.dispersion_max),
        int(cfg.window),
        float(cfg.ema_alpha),
    )


def classify_window(samples, cfg=OculomotorConfig(), prior_likelihood=0.0):
    """Label the newest sample of ``samples`` (oldest first).

    Only the last ``cfg.window`` samples are consulted. ``prior_likelihood``
    is the smoothed likelihood before this sample; the returned estimate
    carries the updated value. With fewer than two valid samples the label
    is ``UNKNOWN`` and the likelihood 0.
    """
    samples = list(samples)[-cfg.window :]
    if not samples:
        raise ValueError("empty window")
    t, x, y, v = _columns(samples)
    # run the stream kernel over just this window, seeding the EMA state
    labels, _ = classify_arrays(t, x, y, v, cfg)
    label = Movement(int(labels[-1]))
    nvalid = int(v.sum())
    if label is Movement.UNKNOWN:
        lik = prior_likelihood if (not v[-1] and nvalid >= 2) else 0.0
    else:
        ind = 1.0 if label.attentive else 0.0
        lik = (1.0 - cfg.ema_alpha) * prior_likelihood + cfg.ema_alpha * ind
    return MovementEstimate(samples[-1].t, label, lik)


class StreamingClassifier:
    """Causal per-sample classifier; one instance per gaze stream."""

    def __init__(self, cfg=OculomotorConfig()):
        self.cfg = cfg
        self._buf = []
        self._ema = 0.0

    def push(self, sample):
        self._buf.append(sample)
        if len(self._buf) > self.cfg.window:
            del self._buf[0]
        est = classify_window(self._buf, self.cfg, self._ema)
        if est.label is not Movement.UNKNOWN:
            self._ema = est.likelihood
        return est


def likelihood_series(gaze, cfg=OculomotorConfig()):
    """One :class:`MovementEstimate` per gaze sample, computed causally."""
    if len(gaze) == 0:
        raise ValueError("empty gaze stream")
    t, x, y, v = _columns(gaze)
    labels, lik = classify_arrays(t, x, y, v, cfg)
    return [MovementEstimate(float(ti), Movement(int(li)), float(pi)) for ti, li, pi in zip(t, labels, lik)]


def detect_transition(estimates, run_len=3):
    """True iff the window ends with >= ``run_len`` attentive labels that are
    immediately preceded by >= ``run_len`` saccade labels."""
    labels = [e.label if isinstance(e, MovementEstimate) else Movement(e) for e in estimates]
    if run_len < 1:
        raise ValueError("run_len must be >= 1")
    if len(labels) < 2 * run_len:
        raise ValueError(f"window of {len(labels)} estimates is shorter than 2*run_len")
    return _transition_ends_at(labels, len(labels) - 1, run_len)


def _transition_ends_at(labels, i, run_len):
    j = i
    while j >= 0 and Movement(labels[j]).attentive:
        j -= 1
    if i - j < run_len:
        return False
    k = j
    while k >= 0 and labels[k] == Movement.SACCADE:
        k -= 1
    return j - k >= run_len
