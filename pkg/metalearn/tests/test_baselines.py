# metalearn/tests/test_baselines.py
import numpy as np
import pytest

from core.exceptions import ConfigError
from metalearn.services.baselines import pretrain
from metalearn.services.config import PretrainConfig
from metalearn.services.learners import MlpLearner

from .conftest import tiny_segments


def _line_items(rng, n=64):
    x = rng.uniform(-1, 1, size=n)
    return list(zip(x, 3.0 * x - 1.0))


def test_la_perdida_baja(rng):
    learner = MlpLearner(sizes=(1, 8, 1))
    params, buffers = learner.init(rng)
    cfg = PretrainConfig(epochs=30, lr=0.01, lr_drop_epoch=25, lr_after_drop=0.001, batch_size=8, weight_decay=0.0)
    res = pretrain(learner, params, buffers, _line_items(rng), cfg, np.random.default_rng(0))
    assert len(res.epoch_losses) == 30
    assert res.epoch_losses[-1] < 0.5 * res.epoch_losses[0]
    assert res.epoch_lrs[24] == 0.01 and res.epoch_lrs[25] == 0.001
    assert res.opt_state.step == 30 * 8
    assert "30 épocas" in res.resumen


def test_no_modifica_theta_inicial(rng):
    learner = MlpLearner(sizes=(1, 4, 1))
    params, buffers = learner.init(rng)
    before = params.checksum()
    cfg = PretrainConfig(epochs=2, batch_size=16)
    pretrain(learner, params, buffers, _line_items(rng), cfg, np.random.default_rng(0))
    assert params.checksum() == before


def test_callback_por_epoca(tiny_crnn, rng):
    params, buffers = tiny_crnn.init(rng)
    calls = []
    cfg = PretrainConfig(epochs=3, lr_drop_epoch=2, batch_size=4)
    res = pretrain(
        tiny_crnn,
        params,
        buffers,
        tiny_segments(rng, "roomp", 6),
        cfg,
        np.random.default_rng(1),
        on_epoch=lambda epoch, lr, loss, p, b: calls.append((epoch, lr, loss)),
    )
    assert [c[0] for c in calls] == [0, 1, 2]
    assert [c[1] for c in calls] == [3e-4, 3e-4, 3e-5]
    assert [c[2] for c in calls] == res.epoch_losses
    assert res.buffers.checksum() != buffers.checksum()


def test_misma_semilla_mismo_resultado(rng):
    learner = MlpLearner(sizes=(1, 4, 1))
    params, buffers = learner.init(rng)
    items = _line_items(rng)
    cfg = PretrainConfig(epochs=3, batch_size=10)
    a = pretrain(learner, params, buffers, items, cfg, np.random.default_rng(5))
    b = pretrain(learner, params, buffers, items, cfg, np.random.default_rng(5))
    assert a.params.checksum() == b.params.checksum()


def test_sin_ejemplos(rng):
    learner = MlpLearner()
    params, buffers = learner.init(rng)
    with pytest.raises(ConfigError):
        pretrain(learner, params, buffers, [], PretrainConfig(), rng)
