import json

import numpy as np
import pytest

from attncap.fusion.model import (
    FusionModel,
    ModelFileError,
    TrainHyper,
    TrainingError,
    channel_scale,
    softmax,
    train_head,
)
from oracles import numeric_grads, rel_error, small_problem


def test_gradient_check_random_small_inputs():
    rng = np.random.Generator(np.random.PCG64(77))
    worst = 0.0
    for _ in range(10):
        m, x, lik, y = small_problem(rng)
        _, analytic = m.loss_and_grads(x, lik, y)
        numeric = numeric_grads(m, x, lik, y)
        worst = max(worst, max(rel_error(a, n) for a, n in zip(analytic, numeric)))
    assert worst <= 1e-4


def test_loss_and_grads_loss_matches_loss():
    m, x, lik, y = small_problem(np.random.Generator(np.random.PCG64(1)))
    assert m.loss_and_grads(x, lik, y)[0] == pytest.approx(m.loss(x, lik, y), rel=1e-12)


def test_softmax_stable_and_normalized():
    p = softmax(np.array([[1000.0, 1001.0], [-1e4, 0.0], [0.0, 0.0]]))
    np.testing.assert_allclose(p.sum(axis=1), 1.0)
    assert p[2, 0] == 0.5 and np.all(np.isfinite(p))


def _toy(rng, n=40):
    # class 1 has a bright centre, class 0 a dark one
    x = rng.uniform(0, 0.1, size=(n, 6, 6, 2))
    y = np.arange(n) % 2
    x[y == 1, 2:4, 2:4, 0] += 1.0
    lik = rng.uniform(size=(n, 2))
    return x, lik, y


def test_zero_learning_rate_returns_init():
    rng = np.random.Generator(np.random.PCG64(2))
    x, lik, y = _toy(rng)
    init = FusionModel.initialize(rng, in_channels=2, conv_out=4, n_likelihood=2)
    out, log = train_head((x, lik, y), hyper=TrainHyper(lr=0.0, epochs=3), init=init)
    for a, b in zip(out.params(), init.params()):
        np.testing.assert_allclose(a, b, rtol=1e-12)
    assert len(log.epochs) == 3


def test_same_seed_identical_weights():
    x, lik, y = _toy(np.random.Generator(np.random.PCG64(3)))
    hyper = TrainHyper(epochs=5)
    a, _ = train_head((x, lik, y), hyper=hyper, seed=11)
    b, _ = train_head((x, lik, y), hyper=hyper, seed=11)
    assert a.dumps() == b.dumps()
    c, _ = train_head((x, lik, y), hyper=hyper, seed=12)
    assert c.dumps() != a.dumps()


def test_separable_toy_reaches_99_percent():
    rng = np.random.Generator(np.random.PCG64(4))
    x, lik, y = _toy(rng, n=64)
    m, log = train_head((x, lik, y), hyper=TrainHyper(epochs=60), seed=0, dtype=np.float64)
    acc = np.mean((m.predict_proba(x, lik, dtype=np.float64) > 0.5) == (y == 1))
    assert acc >= 0.99
    assert log.best_epoch >= 0


def test_precondition_fold_is_exact():
    # a kernel trained on scaled inputs, divided by the scale, gives the same logits on raw inputs
    rng = np.random.Generator(np.random.PCG64(5))
    x = rng.uniform(size=(4, 5, 5, 3)) * np.array([1e-3, 1.0, 50.0])
    lik = rng.uniform(size=(4, 2))
    m = FusionModel.initialize(rng, in_channels=3, conv_out=4, n_likelihood=2)
    s = channel_scale(x)
    folded = m.copy()
    folded.conv_kernel /= s[None, :, None, None]
    np.testing.assert_allclose(folded.forward(x, lik), m.forward(x / s, lik), rtol=1e-10, atol=1e-12)


def test_channel_scale_zero_channel_is_one():
    x = np.zeros((2, 3, 3, 2))
    x[..., 1] = 2.0
    np.testing.assert_array_equal(channel_scale(x), [1.0, 2.0])


def test_single_class_rejected():
    x, lik, _ = _toy(np.random.Generator(np.random.PCG64(6)))
    with pytest.raises(TrainingError):
        train_head((x, lik, np.zeros(len(x), dtype=int)))
    with pytest.raises(TrainingError):
        train_head((x[:0], lik[:0], np.zeros(0, dtype=int)))


def test_save_load_round_trip(tmp_path):
    m = FusionModel.initialize(np.random.Generator(np.random.PCG64(7)))
    p = tmp_path / "m.json"
    m.save(p)
    back = FusionModel.load(p)
    for a, b in zip(m.params(), back.params()):
        np.testing.assert_array_equal(a, b)
    assert back.dumps() == m.dumps()


def test_load_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ModelFileError, match="malformed"):
        FusionModel.load(p)
    d = FusionModel.zeros().to_dict()
    d["format"] = "other"
    p.write_text(json.dumps(d))
    with pytest.raises(ModelFileError, match="format"):
        FusionModel.load(p)


def test_block_median_loss_non_increasing():
    x, lik, y = _toy(np.random.Generator(np.random.PCG64(8)), n=64)
    _, log = train_head((x, lik, y), hyper=TrainHyper(epochs=40), seed=1)
    med = [e["batch_median"] for e in log.epochs]
    blocks = [np.median(med[k : k + 10]) for k in range(0, 40, 10)]
    assert all(b <= a + 1e-12 for a, b in zip(blocks, blocks[1:]))
