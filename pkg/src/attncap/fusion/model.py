"""Fusion classifier head: 3x3 conv -> ReLU -> global average pool ->
concat(likelihoods) -> affine -> softmax, with hand-written gradients
and an Adam trainer.

Tensors are channels-last: inputs ``(B, H, W, C)``, conv kernel
``(C_out, C_in, 3, 3)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .._atomic import atomic_write_text

MODEL_FORMAT = "attncap-fusion-model"
TENSOR_NAMES = ("conv.kernel", "conv.bias", "head.weight", "head.bias")


class NumericError(FloatingPointError):
    def __init__(self, layer):
        self.layer = layer
        super().__init__(f"non-finite activation in layer {layer}")


class TrainingError(ValueError):
    pass


class ModelFileError(ValueError):
    pass


@dataclass
class FusionModel:
    conv_kernel: np.ndarray  # (C_out, C_in, 3, 3)
    conv_bias: np.ndarray  # (C_out,)
    head_weight: np.ndarray  # (2, C_out + N)
    head_bias: np.ndarray  # (2,)
    meta: dict = field(default_factory=dict)

    @classmethod
    def zeros(cls, in_channels=32, conv_out=56, n_likelihood=4):
        return cls(
            np.zeros((conv_out, in_channels, 3, 3)),
            np.zeros(conv_out),
            np.zeros((2, conv_out + n_likelihood)),
            np.zeros(2),
        )

    @classmethod
    def initialize(cls, rng, in_channels=32, conv_out=56, n_likelihood=4):
        fan_in = in_channels * 9
        k = rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(conv_out, in_channels, 3, 3))
        hw = rng.normal(0.0, math.sqrt(1.0 / (conv_out + n_likelihood)), size=(2, conv_out + n_likelihood))
        return cls(k, np.zeros(conv_out), hw, np.zeros(2))

    @property
    def in_channels(self):
        return self.conv_kernel.shape[1]

    @property
    def conv_out(self):
        return self.conv_kernel.shape[0]

    @property
    def n_likelihood(self):
        return self.head_weight.shape[1] - self.conv_out

    def params(self):
        return [self.conv_kernel, self.conv_bias, self.head_weight, self.head_bias]

    def copy(self):
        return FusionModel(*(p.copy() for p in self.params()), meta=dict(self.meta))

    # -- forward / backward ------------------------------------------------

    def forward(self, x, lik, dtype=np.float64, keep=False):
        """Logits for a batch. ``x``: (B, H, W, C); ``lik``: (B, N).

        The 3x3 convolution is zero-padded ("same") and computed as nine
        shifted matrix products.
        """
        x = np.asarray(x, dtype=dtype)
        if x.ndim == 3:
            x = x[None]
        lik = np.asarray(lik, dtype=dtype).reshape(x.shape[0], -1)
        b, h, w, c = x.shape
        if c != self.in_channels:
            raise ValueError(f"input has {c} channels, model expects {self.in_channels}")
        if lik.shape[1] != self.n_likelihood:
            raise ValueError(f"{lik.shape[1]} likelihoods, model expects {self.n_likelihood}")
        xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
        # (3, 3, C_in, C_out), contiguous so each tap is a BLAS matmul
        kern = np.ascontiguousarray(self.conv_kernel.transpose(2, 3, 1, 0), dtype=dtype)
        z = np.empty((b * h * w, self.conv_out), dtype=dtype)
        z[...] = self.conv_bias.astype(dtype, copy=False)
        for dy in range(3):
            for dx in range(3):
                z += _shifted(xp, dy, dx, h, w) @ kern[dy, dx]
        z = z.reshape(b, h, w, self.conv_out)
        if not np.all(np.isfinite(z)):
            raise NumericError("conv")
        a = np.maximum(z, 0)
        pooled = a.reshape(b, h * w, self.conv_out).mean(axis=1)
        hvec = np.concatenate([pooled, lik], axis=1)
        logits = hvec @ self.head_weight.T.astype(dtype, copy=False) + self.head_bias.astype(dtype, copy=False)
        if not np.all(np.isfinite(logits)):
            raise NumericError("head")
        if keep:
            return logits, (xp, z, hvec, (b, h, w, c))
        return logits

    def loss_and_grads(self, x, lik, y, dtype=np.float64):
        """Mean softmax cross-entropy and gradients w.r.t. all parameters."""
        y = np.asarray(y, dtype=np.int64)
        logits, (xp, z, hvec, (b, h, w, c)) = self.forward(x, lik, dtype=dtype, keep=True)
        p = softmax(logits)
        loss = -np.mean(np.log(np.clip(p[np.arange(b), y], 1e-300, None)))
        dlog = p
        dlog[np.arange(b), y] -= 1.0
        dlog /= b
        g_hw = dlog.T @ hvec
        g_hb = dlog.sum(axis=0)
        dh = dlog @ self.head_weight.astype(dtype, copy=False)
        dpool = (dh[:, : self.conv_out] / (h * w)).astype(dtype)
        # d loss / d z, (B*H*W, C_out)
        dz = (np.broadcast_to(dpool[:, None, None, :], z.shape) * (z > 0)).reshape(-1, self.conv_out)
        g_k = np.empty(self.conv_kernel.shape)
        for dy in range(3):
            for dx in range(3):
                g_k[:, :, dy, dx] = dz.T @ _shifted(xp, dy, dx, h, w)
        g_kb = dz.sum(axis=0)
        grads = [g_k, g_kb, g_hw, g_hb]
        return float(loss), [np.asarray(g, dtype=np.float64) for g in grads]

    def loss(self, x, lik, y, dtype=np.float64):
        p = softmax(self.forward(x, lik, dtype=dtype))
        y = np.asarray(y, dtype=np.int64)
        return float(-np.mean(np.log(np.clip(p[np.arange(len(y)), y], 1e-300, None))))

    def predict_proba(self, x, lik, dtype=np.float32):
        return softmax(self.forward(x, lik, dtype=dtype).astype(np.float64))[:, 1]

    # -- serialization ---------------------------------------------------

    def to_dict(self):
        tensors = {}
        for name, arr in zip(TENSOR_NAMES, self.params()):
            tensors[name] = {"shape": list(arr.shape), "data": [float(v) for v in arr.ravel()]}
        return {
            "format": MODEL_FORMAT,
            "version": 1,
            "layout": "row-major (C order), float64 values as JSON numbers",
            "dims": {
                "in_channels": self.in_channels,
                "conv_out": self.conv_out,
                "kernel": 3,
                "n_likelihood": self.n_likelihood,
            },
            "meta": self.meta,
            "tensors": tensors,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != MODEL_FORMAT:
            raise ModelFileError(f"not a fusion model file (format={d.get('format')!r})")
        try:
            arrs = []
            for name in TENSOR_NAMES:
                t = d["tensors"][name]
                arrs.append(np.array(t["data"], dtype=np.float64).reshape(t["shape"]))
        except (KeyError, ValueError, TypeError) as exc:
            raise ModelFileError(f"bad tensor data: {exc}") from None
        m = cls(*arrs, meta=d.get("meta", {}))
        dims = d.get("dims", {})
        if dims and (dims.get("in_channels") != m.in_channels or dims.get("n_likelihood") != m.n_likelihood):
            raise ModelFileError("dims header does not match tensor shapes")
        if m.head_weight.shape[0] != 2 or m.conv_bias.shape != (m.conv_out,):
            raise ModelFileError("inconsistent tensor shapes")
        return m

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    def save(self, path):
        atomic_write_text(path, self.dumps())

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ModelFileError(f"{path}: malformed JSON: {exc.msg}") from None
        return cls.from_dict(d)


def _shifted(xp, dy, dx, h, w):
    """Contiguous ``(B*H*W, C)`` view of the padded input shifted by ``(dy, dx)``."""
    return np.ascontiguousarray(xp[:, dy : dy + h, dx : dx + w, :]).reshape(-1, xp.shape[3])


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# -- training ---------------------------------------------------------------


@dataclass(frozen=True)
class TrainHyper:
    lr: float = 0.01
    decay: float = 0.9
    decay_every: int = 30
    epochs: int = 100
    batch_size: int = 16
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def lr_at(self, epoch):
        return self.lr * self.decay ** (epoch // self.decay_every)


class Adam:
    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.b1, self.b2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads, lr):
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainLog:
    epochs: list = field(default_factory=list)  # dicts: epoch, lr, train_loss, batch_median, val_loss, val_acc
    best_epoch: int = -1

    def to_csv(self):
        lines = ["epoch,lr,train_loss,batch_median,val_loss,val_acc"]
        for e in self.epochs:
            val = "" if e["val_loss"] is None else repr(e["val_loss"])
            acc = "" if e["val_acc"] is None else repr(e["val_acc"])
            lines.append(f"{e['epoch']},{e['lr']!r},{e['train_loss']!r},{e['batch_median']!r},{val},{acc}")
        return "\n".join(lines) + "\n"


def channel_scale(x):
    """Per-channel RMS over a batch ``(B, H, W, C)``; all-zero channels get 1."""
    x = np.asarray(x)
    rms = np.sqrt(np.mean(np.square(x, dtype=np.float64), axis=(0, 1, 2)))
    return np.where(rms > 0, rms, 1.0)


def train_head(train, val=None, hyper=TrainHyper(), seed=0, init=None, dtype=np.float32, precondition=True):
    """Fit a :class:`FusionModel` by mini-batch Adam on softmax cross-entropy.

    ``train`` and ``val`` are ``(X, L, y)`` triples. Returns ``(model, log)``
    where ``model`` is the snapshot with the lowest validation loss (training
    loss when ``val`` is empty).

    With ``precondition`` the optimizer works on inputs divided by their
    per-channel RMS. The convolution is zero-padded, so the scaling folds
    exactly into the returned kernel, which therefore applies to raw fused
    tensors.
    """
    x, lik, y = train
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0 or len(np.unique(y)) < 2:
        raise TrainingError("training set must contain both classes")
    rng = np.random.Generator(np.random.PCG64(seed))
    scale = channel_scale(x) if precondition else np.ones(x.shape[-1])
    xs = (np.asarray(x, dtype=np.float64) / scale).astype(dtype)
    if init is not None:
        model = init.copy()
        model.conv_kernel *= scale[None, :, None, None]
    else:
        model = FusionModel.initialize(rng, in_channels=x.shape[-1], n_likelihood=np.asarray(lik).shape[-1])
    if val is not None and len(val[2]):
        val = ((np.asarray(val[0], dtype=np.float64) / scale).astype(dtype), val[1], np.asarray(val[2], dtype=np.int64))
    else:
        val = None
    opt = Adam(model.params(), hyper.beta1, hyper.beta2, hyper.eps)
    log = TrainLog()
    best = (math.inf, model.copy())
    n = len(y)
    for epoch in range(hyper.epochs):
        lr = hyper.lr_at(epoch)
        order = rng.permutation(n)
        batch_losses = []
        sizes = []
        for s in range(0, n, hyper.batch_size):
            idx = np.sort(order[s : s + hyper.batch_size])
            loss, grads = model.loss_and_grads(xs[idx], lik[idx], y[idx], dtype=dtype)
            batch_losses.append(loss)
            sizes.append(len(idx))
            if lr > 0:
                opt.step(grads, lr)
        train_loss = float(np.average(batch_losses, weights=sizes))
        val_loss = val_acc = None
        if val is not None:
            p_val = _dataset_proba(model, val[0], val[1], dtype)
            val_loss = _nll(p_val, val[2])
            val_acc = float(np.mean((p_val > 0.5) == (val[2] == 1)))
        score = val_loss if val_loss is not None else train_loss
        if score < best[0]:
            best = (score, model.copy())
            log.best_epoch = epoch
        log.epochs.append(
            {
                "epoch": epoch,
                "lr": lr,
                "train_loss": train_loss,
                "batch_median": float(np.median(batch_losses)),
                "val_loss": val_loss,
                "val_acc": val_acc,
            }
        )
    out = best[1]
    out.conv_kernel /= scale[None, :, None, None]
    return out, log


def _dataset_proba(model, x, lik, dtype, chunk=64):
    out = [model.predict_proba(x[s : s + chunk], lik[s : s + chunk], dtype=dtype) for s in range(0, len(x), chunk)]
    return np.concatenate(out) if out else np.zeros(0)


def _nll(p, y):
    y = np.asarray(y, dtype=np.int64)
    p = np.clip(p, 1e-12, 1 - 1e-12)
    return float(-np.mean(np.where(y == 1, np.log(p), np.log1p(-p))))


def _dataset_loss(model, x, lik, y, dtype=np.float32, chunk=64):
    return _nll(_dataset_proba(model, x, lik, dtype, chunk), y)
