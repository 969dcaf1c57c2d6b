"""Training corpus for the fusion head: scenario variants to labelled fused tensors."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import scenario as sc
from .fusion import FusionConfig, fused_input, scene_features
from .fusion.model import TrainHyper, TrainingError, train_head
from .oculomotor import OculomotorConfig, classify_arrays

SPLIT = (0.7, 0.1, 0.2)  # train, test, validation


@dataclass(frozen=True)
class CorpusSpec:
    """Randomized builtin variants; trace ``k`` uses ``seed + k``."""

    count: int = 24
    seed: int = 1000
    names: tuple = sc.BUILTIN_NAMES
    per_class: int = 4  # examples per class drawn from each trace
    settle: float = 1.0  # skip this long after a phase starts

    @classmethod
    def from_dict(cls, d):
        known = {"count", "seed", "names", "per_class", "settle"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown corpus fields: {', '.join(sorted(extra))}")
        d = dict(d)
        if "names" in d:
            d["names"] = tuple(d["names"])
            for n in d["names"]:
                if n not in sc.BUILTIN_NAMES:
                    raise sc.UnknownScenarioError(n)
        return cls(**d)

    def to_dict(self):
        return {"count": self.count, "seed": self.seed, "names": list(self.names), "per_class": self.per_class,
                "settle": self.settle}

    def specs(self):
        return sc.corpus_specs(self.count, self.seed, self.names)


@dataclass
class ExampleSet:
    X: np.ndarray  # (n, 56, 56, C) float32
    L: np.ndarray  # (n, N) float32
    y: np.ndarray  # (n,) int64
    source: list = field(default_factory=list)  # (scenario, seed, t)

    def __len__(self):
        return len(self.y)

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return ExampleSet(self.X[idx], self.L[idx], self.y[idx], [self.source[i] for i in idx])

    def triple(self):
        return self.X, self.L, self.y


def candidate_indices(spec, t, settle=1.0):
    """Positive and negative sample indices for one scenario.

    Positives lie inside attention epochs; negatives inside blank fixations
    and wandering. Indices closer than ``settle`` to a phase start are skipped.
    """
    truth = sc.truth_intervals(spec)
    pos, neg = [], []
    for s, e, ph in spec.phase_bounds():
        sel = np.flatnonzero((t >= s + settle) & (t < e))
        if isinstance(ph, sc.SaccadeTo):
            continue
        if any(a <= s < b for a, b, _ in truth):
            pos.extend(sel.tolist())
        else:
            neg.extend(sel.tolist())
    return np.array(pos, dtype=np.int64), np.array(neg, dtype=np.int64)


def trace_examples(spec, trace, per_class, rng, cfg=FusionConfig(), ocfg=OculomotorConfig(), settle=1.0):
    t, x, y, v = trace.gaze_arrays()
    _, lik = classify_arrays(t, x, y, v, ocfg)
    pos, neg = candidate_indices(spec, t, settle)
    picks = []
    for idx, label in ((pos, 1), (neg, 0)):
        if len(idx):
            chosen = np.sort(rng.choice(idx, size=min(per_class, len(idx)), replace=False))
            picks.extend((int(i), label) for i in chosen)
    out = []
    cache = {}
    for i, label in picks:
        if not v[i]:
            continue
        frame = trace.frame_at(float(t[i]))
        if frame.t not in cache:
            cache[frame.t] = scene_features(frame)
        fused, L = fused_input(trace, i, lik, cfg, features=cache[frame.t], x=x, y=y, valid=v, t=t)
        out.append((fused.grid.astype(np.float32), L.astype(np.float32), label, (spec.name, spec.seed, float(t[i]))))
    return out


def build_examples(corpus=CorpusSpec(), cfg=FusionConfig(), ocfg=OculomotorConfig()):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([corpus.seed, 17])))
    rows = []
    for spec in corpus.specs():
        trace = sc.generate(spec)
        rows.extend(trace_examples(spec, trace, corpus.per_class, rng, cfg, ocfg, corpus.settle))
    if not rows:
        raise TrainingError("corpus produced no examples")
    X = np.stack([r[0] for r in rows])
    L = np.stack([r[1] for r in rows])
    y = np.array([r[2] for r in rows], dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise TrainingError("corpus must produce both classes")
    return ExampleSet(X, L, y, [r[3] for r in rows])


def split_indices(n, seed, fractions=SPLIT):
    """Seeded shuffle cut into train/test/validation sizes ``round(f * n)`` (validation takes the rest)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 31])))
    order = rng.permutation(n)
    n_train = int(round(fractions[0] * n))
    n_test = int(round(fractions[1] * n))
    return order[:n_train], order[n_train : n_train + n_test], order[n_train + n_test :]


@dataclass
class TrainResult:
    model: object
    log: object
    sizes: tuple  # (train, test, validation)
    test_accuracy: float | None
    corpus: CorpusSpec


def train_from_corpus(corpus=CorpusSpec(), hyper=TrainHyper(), seed=0, cfg=FusionConfig(), ocfg=OculomotorConfig()):
    data = build_examples(corpus, cfg, ocfg)
    tr, te, va = split_indices(len(data), seed)
    train, test, val = data.subset(tr), data.subset(te), data.subset(va)
    if len(np.unique(train.y)) < 2:
        raise TrainingError("training split lacks one of the classes")
    model, log = train_head(train.triple(), val.triple() if len(val) else None, hyper, seed=seed)
    model.meta.update({"corpus": corpus.to_dict(), "seed": int(seed), "sizes": [len(train), len(test), len(val)]})
    acc = None
    if len(test):
        p = model.predict_proba(test.X, test.L)
        acc = float(np.mean((p > cfg.threshold) == (test.y == 1)))
    return TrainResult(model, log, (len(train), len(test), len(val)), acc, corpus)


def load_corpus(path):
    with open(path, encoding="utf-8") as fh:
        return CorpusSpec.from_dict(json.load(fh))
