# synth/tests/test_scenes.py
import itertools

import numpy as np
import pytest

from core.exceptions import PolyphonyError
from synth.services.events import (
    N_CLASSES,
    EventSpec,
    active_frames,
    polyphony_counts,
    random_events,
    synth_event,
)
from synth.services.rooms import RoomPreset
from synth.services.scenes import (
    assign_tracks,
    energy_decay_slope,
    foa_encode,
    foa_gains,
    render_scene,
    room_impulse_response,
    scene_annotation,
)

from .conftest import angle_between, doa_per_label_frame


@pytest.mark.parametrize(
    "az, el, expected",
    [
        (0.0, 0.0, (1.0, 0.0, 0.0, 1.0)),
        (90.0, 0.0, (1.0, 1.0, 0.0, 0.0)),
        (37.0, 90.0, (1.0, 0.0, 1.0, 0.0)),
        (-120.0, 90.0, (1.0, 0.0, 1.0, 0.0)),
    ],
)
def test_ganancias_foa(az, el, expected):
    np.testing.assert_allclose(foa_gains(az, el), expected, atol=1e-12)


def test_foa_encode_rechaza_elevacion_imposible():
    with pytest.raises(ValueError):
        foa_encode(np.ones(10), 0.0, 95.0)


def test_evento_determinista_y_longitud():
    a = synth_event(4, 1.0, np.random.default_rng(3))
    b = synth_event(4, 1.0, np.random.default_rng(3))
    assert a.shape == (24000,)
    np.testing.assert_array_equal(a, b)
    assert np.max(np.abs(a)) == pytest.approx(1.0)


def test_clase_desconocida():
    with pytest.raises(ValueError):
        synth_event(N_CLASSES, 1.0, np.random.default_rng(0))


def test_clases_distintas_poco_correladas():
    signals = [synth_event(c, 1.0, np.random.default_rng(11)) for c in range(N_CLASSES)]
    for i, j in itertools.combinations(range(N_CLASSES), 2):
        corr = np.corrcoef(signals[i], signals[j])[0, 1]
        assert abs(corr) < 0.5, (i, j, corr)


@pytest.mark.parametrize(
    "onset, duration, frames",
    [
        (2.0, 1.0, range(20, 30)),
        (2.04, 1.0, range(20, 30)),
        (2.06, 1.0, range(21, 31)),
        (0.0, 0.03, range(0)),
    ],
)
def test_frames_activos_por_solape(onset, duration, frames):
    assert list(active_frames(onset, duration)) == list(frames)


def test_anotacion_de_un_evento():
    ann = scene_annotation([EventSpec(5, 2.0, 1.0, 45.0, -10.0)], n_frames=600)
    assert [r.frame for r in ann] == list(range(20, 30))
    assert {(r.class_id, r.track, r.azimuth, r.elevation) for r in ann} == {(5, 0, 45.0, -10.0)}


def test_pistas_solapadas():
    events = [EventSpec(1, 1.0, 2.0, 0, 0), EventSpec(1, 1.5, 1.0, 90, 0), EventSpec(2, 3.5, 1.0, 0, 0)]
    assert assign_tracks(events) == [0, 1, 0]


def test_polifonia_excedida_lista_frames():
    events = [EventSpec(c, 1.0, 1.0, 0.0, 0.0) for c in range(4)]
    with pytest.raises(PolyphonyError) as exc:
        scene_annotation(events, n_frames=100)
    assert exc.value.frames == list(range(10, 20))
    assert "polyphony cap exceeded at frames: 10, 11" in str(exc.value)


@pytest.mark.parametrize("seed", range(5))
def test_eventos_aleatorios_respetan_tope(seed):
    events = random_events(30.0, 20, np.random.default_rng(seed))
    assert polyphony_counts(events, 300).max() <= 3
    for ev in events:
        assert 0 <= ev.onset and ev.offset <= 30.0 + 1e-9
        assert -60 <= ev.elevation <= 60


def test_escena_sin_eventos_es_solo_ruido(anechoic_room, rng):
    clip, ann = render_scene(anechoic_room, [], rng, clip_seconds=2.0)
    assert ann.empty
    assert clip.samples.shape == (4, 48000)
    w_rms = np.sqrt(np.mean(clip.samples[0].astype(np.float64) ** 2))
    assert w_rms == pytest.approx(0.1 * 10 ** (-30.0 / 20), rel=0.05)


def test_escena_rechaza_evento_fuera_del_clip(anechoic_room, rng):
    with pytest.raises(ValueError):
        render_scene(anechoic_room, [EventSpec(0, 4.5, 1.0, 0, 0)], rng, clip_seconds=5.0)


def test_escena_limita_pico(reverberant_room, rng):
    events = [EventSpec(c, 0.5, 2.0, 10.0 * c, 0.0) for c in (0, 5, 6)]
    clip, ann = render_scene(reverberant_room, events, rng, clip_seconds=3.0)
    assert np.max(np.abs(clip.samples)) <= 0.99 + 1e-6
    assert {r.track for r in ann} == {0, 1, 2}


@pytest.mark.parametrize("az, el", [(50.0, 20.0), (-120.0, -35.0), (170.0, 5.0)])
def test_doa_recuperable_en_sala_anecoica(anechoic_room, rng, az, el):
    ev = EventSpec(8, 1.0, 3.0, az, el)
    clip, ann = render_scene(anechoic_room, [ev], rng, clip_seconds=5.0)
    doas = doa_per_label_frame(clip)
    active = sorted({r.frame for r in ann})
    assert active == list(range(10, 40))
    errors = [angle_between(*doas[f], az, el) for f in active]
    assert np.mean(np.array(errors) <= 1.0) >= 0.99, max(errors)


def test_pendiente_de_decaimiento_sigue_t60(rng):
    slopes = []
    for t60 in (0.3, 0.6, 1.0):
        room = RoomPreset(f"sala_{t60}", t60=t60, snr_db=30.0, diffuse_gain=0.5, rng_seed=0)
        ir = room_impulse_response(room, 0.0, 0.0, rng)
        slope = energy_decay_slope(ir, start_s=1.0 / 24000)
        assert slope == pytest.approx(-60.0 / t60, rel=0.15)
        slopes.append(slope)
    assert slopes[0] < slopes[1] < slopes[2]
