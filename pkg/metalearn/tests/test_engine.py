# metalearn/tests/test_engine.py
import numpy as np
import pytest

from autodiff.gradcheck import numeric_grad, relative_error
from autodiff.params import ParamSet
from core.exceptions import ConfigError, TaskSamplingError
from metalearn.services.config import MetaConfig
from metalearn.services.engine import finetune, inner_adapt, meta_gradient, meta_step, meta_test
from metalearn.services.learners import MlpLearner
from metalearn.services.sampling import Task

from .conftest import TINY_SEGMENT_SECONDS, random_spd, tiny_segments


def _quadratic_tasks(rng, n_tasks, dim=2):
    tasks = []
    for i in range(n_tasks):
        support = ((random_spd(rng, dim), rng.normal(size=dim)),)
        query = ((random_spd(rng, dim), rng.normal(size=dim)),)
        tasks.append(Task(room_id=f"q{i}", support=support, query=query))
    return tasks


def _meta(**kw):
    base = dict(rooms_per_batch=2, samples_per_room=2, k_support=1, q_query=1, inner_lr=0.05, inner_steps=3,
                meta_lr=0.01, weight_decay=0.0)
    base.update(kw)
    return MetaConfig(**base)


def test_sin_pasos_devuelve_theta(quadratic, rng):
    params, _ = quadratic.init(rng)
    support = quadratic.collate([(np.eye(2), np.ones(2))])
    adapted = inner_adapt(quadratic, params, support, 0.01, 0)
    assert adapted.params.checksum() == params.checksum()
    assert adapted.support_losses == []


def test_un_paso_a_mano(rng):
    from .conftest import QuadraticLearner

    learner = QuadraticLearner(dim=1)
    params = ParamSet.from_arrays({"theta": np.zeros((1, 1))}, requires_grad=True)
    # L = (θ - 2)²  =  ½ (θ - 2)·2·(θ - 2)
    support = learner.collate([(np.array([[2.0]]), np.array([2.0]))])
    adapted = inner_adapt(learner, params, support, 0.01, 1)
    assert adapted.params["theta"].data.item() == pytest.approx(0.04)
    assert adapted.support_losses == [pytest.approx(4.0)]


def test_pasos_negativos(quadratic, rng):
    params, _ = quadratic.init(rng)
    with pytest.raises(ConfigError):
        inner_adapt(quadratic, params, quadratic.collate([(np.eye(2), np.zeros(2))]), 0.01, -1)


def test_la_adaptacion_no_toca_theta(tiny_crnn, rng):
    params, buffers = tiny_crnn.init(rng)
    before, stats_before = params.checksum(), buffers.checksum()
    support = tiny_crnn.collate(tiny_segments(rng, "roomx", 3))
    adapted = inner_adapt(tiny_crnn, params, support, 0.01, 3, buffers=buffers)
    assert params.checksum() == before
    assert buffers.checksum() == stats_before
    assert adapted.params.checksum() != before
    assert adapted.buffers.checksum() != stats_before


def test_perdida_de_soporte_baja_en_tareas_aleatorias(quadratic, rng):
    params, _ = quadratic.init(rng)
    improved = 0
    for _ in range(100):
        support = quadratic.collate([(random_spd(rng), rng.normal(size=2))])
        adapted = inner_adapt(quadratic, params, support, 0.01, 5)
        final, _ = quadratic.loss(adapted.params, ParamSet(), support, training=False)
        improved += final.item() <= adapted.support_losses[0]
    assert improved >= 95


def test_finetune_es_el_bucle_interno(tiny_crnn, rng):
    params, buffers = tiny_crnn.init(rng)
    support = tiny_crnn.collate(tiny_segments(rng, "roomx", 3))
    a = finetune(tiny_crnn, params, support, 0.01, 5, buffers=buffers)
    b = inner_adapt(tiny_crnn, params, support, 0.01, 5, buffers=buffers)
    assert a.params.checksum() == b.params.checksum()
    assert a.buffers.checksum() == b.buffers.checksum()


def test_gradiente_meta_segundo_orden_analitico(quadratic, rng):
    cfg = _meta(second_order=True)
    params, _ = quadratic.init(rng)
    tasks = _quadratic_tasks(rng, 2)
    mg = meta_gradient(quadratic, params, ParamSet(), tasks, cfg)

    theta = params["theta"].data
    expected = np.zeros_like(theta)
    for task in tasks:
        (a, c), = task.support
        (b, d), = task.query
        m = np.linalg.matrix_power(np.eye(2) - cfg.inner_lr * a, cfg.inner_steps)
        theta_n = c.reshape(2, 1) + m @ (theta - c.reshape(2, 1))
        expected += m.T @ b @ (theta_n - d.reshape(2, 1))
    np.testing.assert_allclose(mg.grads["theta"].data, expected, atol=1e-6)


def test_gradiente_meta_primer_orden(quadratic, rng):
    cfg = _meta(second_order=False)
    params, _ = quadratic.init(rng)
    tasks = _quadratic_tasks(rng, 2)
    mg = meta_gradient(quadratic, params, ParamSet(), tasks, cfg)

    expected = np.zeros((2, 1))
    for task in tasks:
        adapted = inner_adapt(quadratic, params, quadratic.collate(task.support), cfg.inner_lr, cfg.inner_steps)
        (b, d), = task.query
        expected += b @ (adapted.params["theta"].data - d.reshape(2, 1))
    np.testing.assert_allclose(mg.grads["theta"].data, expected, atol=1e-10)


def test_gradiente_meta_mlp_contra_diferencias_finitas(rng):
    learner = MlpLearner(sizes=(1, 5, 5, 1))
    params, buffers = learner.init(rng)
    cfg = _meta(inner_lr=0.05, inner_steps=2, second_order=True)
    tasks = []
    for i in range(2):
        x = rng.uniform(-2, 2, size=8)
        pts = list(zip(x, np.sin(x + i)))
        tasks.append(Task(room_id=f"s{i}", support=tuple(pts[:4]), query=tuple(pts[4:])))

    def objective():
        total = None
        for task in tasks:
            adapted = inner_adapt(
                learner, params, learner.collate(task.support), cfg.inner_lr, cfg.inner_steps, second_order=True
            )
            loss, _ = learner.loss(adapted.params, buffers, learner.collate(task.query), training=True)
            total = loss if total is None else total + loss
        return total

    mg = meta_gradient(learner, params, buffers, tasks, cfg)
    for name, tensor in params.items():
        numeric = numeric_grad(objective, tensor, h=1e-6)
        assert relative_error(mg.grads[name].data, numeric) < 1e-3, name


def test_consultas_nulas_no_mueven_theta(quadratic, rng):
    params, _ = quadratic.init(rng)
    tasks = [
        Task(room_id="z", support=((random_spd(rng), rng.normal(size=2)),), query=((np.zeros((2, 2)), np.zeros(2)),))
    ]
    res = meta_step(quadratic, params, ParamSet(), tasks, _meta(weight_decay=0.0))
    assert res.params.checksum() == params.checksum()
    assert res.log.meta_loss == 0.0

    decayed = meta_step(quadratic, params, ParamSet(), tasks, _meta(weight_decay=0.01))
    np.testing.assert_allclose(
        decayed.params["theta"].data, params["theta"].data * (1 - 0.01 * 0.01), rtol=0, atol=1e-15
    )


def test_registro_suma_las_perdidas_de_consulta(quadratic, rng):
    cfg = _meta()
    params, _ = quadratic.init(rng)
    tasks = _quadratic_tasks(rng, 3)
    res = meta_step(quadratic, params, ParamSet(), tasks, cfg)
    recomputed = 0.0
    for task in tasks:
        adapted = inner_adapt(quadratic, params, quadratic.collate(task.support), cfg.inner_lr, cfg.inner_steps)
        loss, _ = quadratic.loss(adapted.params, ParamSet(), quadratic.collate(task.query), training=True)
        recomputed += loss.item()
    assert res.log.meta_loss == pytest.approx(recomputed, rel=1e-12)
    assert res.log.rooms == ["q0", "q1", "q2"]
    assert len(res.log.task_losses) == 3


def _meta_objective(learner, params, tasks, cfg):
    total = 0.0
    for task in tasks:
        adapted = inner_adapt(learner, params, learner.collate(task.support), cfg.inner_lr, cfg.inner_steps)
        loss, _ = learner.loss(adapted.params, ParamSet(), learner.collate(task.query), training=False)
        total += loss.item()
    return total


def test_primer_y_segundo_orden_bajan_y_difieren(quadratic, rng):
    params, _ = quadratic.init(rng)
    tasks = _quadratic_tasks(rng, 3)
    finals = {}
    for order in (False, True):
        cfg = _meta(second_order=order, inner_lr=0.1, inner_steps=3)
        theta, state = params, None
        for _ in range(30):
            res = meta_step(quadratic, theta, ParamSet(), tasks, cfg, state)
            theta, state = res.params, res.opt_state
        assert _meta_objective(quadratic, theta, tasks, cfg) < _meta_objective(quadratic, params, tasks, cfg)
        finals[order] = theta
    assert finals[False].checksum() != finals[True].checksum()


def test_paso_meta_crnn_actualiza_theta_y_no_las_estadisticas(tiny_crnn, tiny_rooms, tiny_meta, rng):
    from metalearn.services.sampling import sample_task_batch

    params, buffers = tiny_crnn.init(rng)
    before, stats = params.checksum(), buffers.checksum()
    tasks = sample_task_batch(tiny_rooms, tiny_meta, np.random.default_rng(0))
    res = meta_step(tiny_crnn, params, buffers, tasks, tiny_meta)
    assert params.checksum() == before and buffers.checksum() == stats
    assert res.params.checksum() != before
    assert res.buffers.checksum() == stats
    for name, array in buffers.arrays().items():
        np.testing.assert_array_equal(res.buffers[name].data, array)
    assert res.params.names() == params.names()
    assert np.isfinite(res.log.meta_loss)
    assert res.opt_state.step == 1


def test_meta_test_determinista_y_sin_solape(tiny_crnn, rng):
    params, buffers = tiny_crnn.init(rng)
    segments = tiny_segments(rng, "roomt", 6)
    cfg = MetaConfig(rooms_per_batch=1, samples_per_room=4, k_support=2, q_query=2, inner_steps=3)
    a = meta_test(tiny_crnn, params, buffers, "roomt", segments, cfg, segment_seconds=TINY_SEGMENT_SECONDS)
    b = meta_test(tiny_crnn, params, buffers, "roomt", segments, cfg, segment_seconds=TINY_SEGMENT_SECONDS)
    assert a.report == b.report
    assert a.adaptation.params.checksum() == b.adaptation.params.checksum()
    assert a.support == [s.name for s in segments[:2]]
    assert not set(a.support) & set(a.predictions)
    assert sorted(a.predictions) == sorted(s.name for s in segments[2:])
    assert a.accumulator.n_ref == 4 * 4


def test_meta_test_sin_pasos_evalua_theta(tiny_crnn, rng):
    params, buffers = tiny_crnn.init(rng)
    segments = tiny_segments(rng, "roomt", 5)
    cfg = MetaConfig(rooms_per_batch=1, samples_per_room=4, k_support=2, q_query=2, inner_steps=0)
    res = meta_test(tiny_crnn, params, buffers, "roomt", segments, cfg, segment_seconds=TINY_SEGMENT_SECONDS)
    assert res.adaptation.params.checksum() == params.checksum()
    assert res.query_loss_before == res.query_loss_after


def test_meta_test_sala_pequena(tiny_crnn, rng):
    params, buffers = tiny_crnn.init(rng)
    cfg = MetaConfig(rooms_per_batch=1, samples_per_room=4, k_support=2, q_query=2)
    with pytest.raises(TaskSamplingError, match="roomt"):
        meta_test(tiny_crnn, params, buffers, "roomt", tiny_segments(rng, "roomt", 2), cfg)
