# metalearn/tests/test_sinusoid.py
import numpy as np
import pytest

from metalearn.services.learners import MlpLearner
from metalearn.services.sinusoid import (
    AMPLITUDE_RANGE,
    PHASE_RANGE,
    SineBenchmarkConfig,
    SineTask,
    adapted_mse,
    run_sine_benchmark,
    sine_task_batch,
)

FAST = SineBenchmarkConfig(meta_batch=3, meta_steps=4, eval_tasks=3, eval_points=20)


def test_tareas_dentro_de_rango(rng):
    for _ in range(50):
        task = SineTask.sample(rng)
        assert AMPLITUDE_RANGE[0] <= task.amplitude <= AMPLITUDE_RANGE[1]
        assert PHASE_RANGE[0] <= task.phase <= PHASE_RANGE[1]
        for x, y in task.points(rng, 5):
            assert -5.0 <= x <= 5.0
            assert y == pytest.approx(task.amplitude * np.sin(x + task.phase))


def test_lote_de_tareas(rng):
    tasks = sine_task_batch(rng, FAST)
    assert len(tasks) == 3
    assert all(len(t.support) == 10 and len(t.query) == 10 for t in tasks)
    assert len({t.room_id for t in tasks}) == 3


def test_adaptar_reduce_el_error(rng):
    learner = MlpLearner()
    params, _ = learner.init(rng)
    cfg = SineBenchmarkConfig(eval_tasks=10, inner_steps=10, inner_lr=0.01)
    unadapted = adapted_mse(learner, params, cfg, np.random.default_rng(3), inner_steps=0)
    adapted = adapted_mse(learner, params, cfg, np.random.default_rng(3))
    assert adapted < unadapted


def test_benchmark_corto_determinista():
    a = run_sine_benchmark(seed=1, cfg=FAST)
    b = run_sine_benchmark(seed=1, cfg=FAST)
    assert a == b
    assert np.isfinite([a.maml_mse, a.baseline_mse, a.maml_unadapted_mse]).all()
    assert "ratio" in a.resumen


@pytest.mark.slow
def test_meta_aprendizaje_supera_al_entrenamiento_conjunto():
    res = run_sine_benchmark(seed=0)
    assert res.ratio < 0.5, res.resumen
