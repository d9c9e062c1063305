# metalearn/tests/test_sampling.py
import numpy as np
import pandas as pd
import pytest

from core.datasets import DatasetLayout
from core.exceptions import DatasetError, TaskSamplingError
from metalearn.services.config import MetaConfig
from metalearn.services.sampling import (
    Segment,
    Task,
    check_rooms,
    load_room_segments,
    sample_task_batch,
    split_support_query,
)

from .conftest import tiny_segments


def _rooms(n_rooms=6, per_room=70):
    return {f"room{r:02d}": [(r, i) for i in range(per_room)] for r in range(n_rooms)}


def test_lote_de_salas_distintas_y_conjuntos_disjuntos():
    cfg = MetaConfig()
    for seed in range(20):
        tasks = sample_task_batch(_rooms(), cfg, np.random.default_rng(seed))
        assert len(tasks) == 4
        assert len({t.room_id for t in tasks}) == 4
        for t in tasks:
            assert len(t.support) == 30 and len(t.query) == 34
            assert not set(t.support) & set(t.query)
            assert all(item[0] == int(t.room_id[-2:]) for item in (*t.support, *t.query))


def test_misma_semilla_mismas_tareas():
    cfg = MetaConfig()
    a = sample_task_batch(_rooms(), cfg, np.random.default_rng(4))
    b = sample_task_batch(_rooms(), cfg, np.random.default_rng(4))
    assert [(t.room_id, t.support_idx, t.query_idx) for t in a] == [(t.room_id, t.support_idx, t.query_idx) for t in b]


def test_orden_de_las_salas_irrelevante():
    cfg = MetaConfig()
    rooms = _rooms()
    reverse = dict(reversed(list(rooms.items())))
    a = sample_task_batch(rooms, cfg, np.random.default_rng(9))
    b = sample_task_batch(reverse, cfg, np.random.default_rng(9))
    assert [t.support for t in a] == [t.support for t in b]


def test_sala_pequena_nombrada():
    rooms = _rooms()
    rooms["room03"] = rooms["room03"][:10]
    with pytest.raises(TaskSamplingError, match="room03"):
        sample_task_batch(rooms, MetaConfig(), np.random.default_rng(0))


def test_pocas_salas():
    with pytest.raises(TaskSamplingError):
        sample_task_batch(_rooms(n_rooms=3), MetaConfig(), np.random.default_rng(0))


def test_check_rooms_acepta_el_minimo():
    check_rooms({"a": list(range(64))}, 64)
    with pytest.raises(TaskSamplingError, match="a \\(63\\)"):
        check_rooms({"a": list(range(63))}, 64)


def test_tarea_con_solape_rechazada():
    with pytest.raises(TaskSamplingError):
        Task(room_id="x", support=(1,), query=(2,), support_idx=(0,), query_idx=(0,))


def test_tarea_con_segmento_de_otra_sala(rng):
    seg = tiny_segments(rng, "roomb", 1)[0]
    with pytest.raises(TaskSamplingError, match="roomb"):
        Task(room_id="rooma", support=(seg,), query=())


def test_division_fija_soporte_consulta():
    task = split_support_query("r", list("abcdef"), 2)
    assert task.support == ("a", "b")
    assert task.query == ("c", "d", "e", "f")
    with pytest.raises(TaskSamplingError):
        split_support_query("r", list("ab"), 2)


def test_segmento_sin_datos_ni_fichero(rng):
    from core.annotations import Annotation
    from core.exceptions import FeatureCacheError

    seg = Segment(clip_id="c", index=0, room_id="r", annotation=Annotation([]))
    assert seg.name == "c_seg00"
    with pytest.raises(FeatureCacheError):
        seg.features()


def _manifest(tmp_path, clips):
    layout = DatasetLayout(tmp_path / "ds")
    layout.root.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(clips).to_csv(layout.manifest, index=False)
    return layout


def test_carga_sin_indice(tmp_path):
    layout = _manifest(tmp_path, [{"clip_id": "a_clip00", "room_id": "a", "split": "train"}])
    with pytest.raises(DatasetError, match="extract_features"):
        load_room_segments(layout.root, tmp_path / "vacia")


def test_carga_clip_fuera_de_la_cache(tmp_path):
    layout = _manifest(tmp_path, [{"clip_id": "a_clip00", "room_id": "a", "split": "train"}])
    cache = tmp_path / "cache"
    cache.mkdir()
    pd.DataFrame(
        [{"clip_id": "b_clip00", "room_id": "b", "split": "train", "wav_sha256": "0" * 64, "n_segments": 2}]
    ).to_csv(cache / "index.csv", index=False)
    with pytest.raises(DatasetError, match="a_clip00"):
        load_room_segments(layout.root, cache)
