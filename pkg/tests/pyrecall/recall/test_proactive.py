import pathlib
from typing import Callable
from unittest.mock import MagicMock

import pytest

from pyrecall.embed.providers import HashingEmbeddingProvider
from pyrecall.recall.config import RecallConfig
from pyrecall.recall.detect import ReferentDetector
from pyrecall.recall.live import FixtureLiveSource, LiveSource, NullLiveSource, fixture_name
from pyrecall.recall.proactive import proactive_step
from pyrecall.store import event_log
from pyrecall.store.bank import MemoryBank, load_bank
from pyrecall.store.memory import ResponseSource, SpatialActivityProfile
from tests.pyrecall.conftest import DAY1_0750, MakeFrameCallable

DAY2_0752 = 1741092720
WEATHER_URL = 'https://weather.example.com/today'


@pytest.fixture(name='weather_source')
def _weather_source(tmp_path: pathlib.Path) -> FixtureLiveSource:
    (tmp_path / fixture_name(WEATHER_URL)).write_text('Cloudy, 10 C, light rain after 5 PM', encoding='utf-8')
    return FixtureLiveSource(str(tmp_path))


def test_recall_with_refresh(bank: MemoryBank, add_door_memory: Callable[..., int], make_frame: MakeFrameCallable,
                             weather_source: FixtureLiveSource) -> None:
    add_door_memory()
    [event] = proactive_step(bank, make_frame(epoch_s=DAY2_0752, detections=[('door', 0.91)]), RecallConfig(),
                             live_source=weather_source)

    assert event.line() == 'RECALL id=1 referent=door score=0.9926'
    assert event.refreshed
    assert event.response_text == 'Cloudy, 10 C, light rain after 5 PM'
    assert bank.get(1).response_text == 'Cloudy, 10 C, light rain after 5 PM'
    assert bank.get(1).last_recalled_at == event.ts
    recall = bank.events[-1]
    assert recall['ev'] == event_log.RECALL
    assert recall['scores']['combined'] == pytest.approx(event.scores.combined)


def test_failed_refresh_resurfaces_stale_answer(bank: MemoryBank, add_door_memory: Callable[..., int],
                                                make_frame: MakeFrameCallable) -> None:
    add_door_memory()
    [event] = proactive_step(bank, make_frame(epoch_s=DAY2_0752), RecallConfig(), live_source=NullLiveSource())

    assert not event.refreshed
    assert event.response_text == 'Sunny, 12 C'
    assert bank.get(1).response_text == 'Sunny, 12 C'
    assert 'response' not in bank.events[-1]


def test_disabled(bank: MemoryBank, add_door_memory: Callable[..., int], make_frame: MakeFrameCallable) -> None:
    add_door_memory()
    assert proactive_step(bank, make_frame(epoch_s=DAY2_0752), RecallConfig(proactive=False)) == []
    assert len(bank.events) == 1


def test_empty_bank(bank: MemoryBank, make_frame: MakeFrameCallable) -> None:
    assert proactive_step(bank, make_frame(), RecallConfig()) == []


def test_excluded_ids_are_skipped(bank: MemoryBank, add_door_memory: Callable[..., int],
                                  make_frame: MakeFrameCallable) -> None:
    memory_id = add_door_memory()
    assert proactive_step(bank, make_frame(), RecallConfig(), exclude={memory_id}) == []
    assert bank.get(memory_id).last_recalled_at is None


def test_best_match_first(bank: MemoryBank, add_door_memory: Callable[..., int], make_frame: MakeFrameCallable) -> None:
    early = add_door_memory(epoch_s=DAY1_0750 - 1200)
    on_time = add_door_memory()
    events = proactive_step(bank, make_frame(epoch_s=DAY2_0752), RecallConfig())
    assert [event.rsam_id for event in events] == [on_time, early]
    assert events[0].scores.combined > events[1].scores.combined


def test_ties_break_by_id(bank: MemoryBank, add_door_memory: Callable[..., int], make_frame: MakeFrameCallable) -> None:
    add_door_memory()
    add_door_memory()
    events = proactive_step(bank, make_frame(epoch_s=DAY2_0752), RecallConfig())
    assert [event.rsam_id for event in events] == [1, 2]


def test_k_limits_the_recalls(bank: MemoryBank, add_door_memory: Callable[..., int],
                              make_frame: MakeFrameCallable) -> None:
    add_door_memory(epoch_s=DAY1_0750 - 1200)
    on_time = add_door_memory()
    events = proactive_step(bank, make_frame(epoch_s=DAY2_0752), RecallConfig(k=1))
    assert [event.rsam_id for event in events] == [on_time]


def test_failing_gate_recalls_nothing(bank: MemoryBank, add_door_memory: Callable[..., int],
                                      make_frame: MakeFrameCallable) -> None:
    add_door_memory()
    assert proactive_step(bank, make_frame(epoch_s=DAY2_0752, detections=[('door', 0.4)]), RecallConfig()) == []
    assert proactive_step(bank, make_frame(epoch_s=DAY2_0752, activity='washing dishes'), RecallConfig()) == []


def test_custom_detector(bank: MemoryBank, add_door_memory: Callable[..., int], make_frame: MakeFrameCallable) -> None:
    add_door_memory()
    detector = MagicMock(spec=ReferentDetector)
    detector.detect.return_value = []
    frame = make_frame(epoch_s=DAY2_0752)
    assert proactive_step(bank, frame, RecallConfig(), detector=detector) == []
    detector.detect.assert_called_once_with(frame)


def test_live_sources_fetched_once_per_recall(bank: MemoryBank, add_door_memory: Callable[..., int],
                                              make_frame: MakeFrameCallable) -> None:
    add_door_memory()
    add_door_memory()
    source = MagicMock(spec=LiveSource)
    source.fetch.return_value = 'Windy'
    events = proactive_step(bank, make_frame(epoch_s=DAY2_0752), RecallConfig(), live_source=source)
    assert [event.response_text for event in events] == ['Windy', 'Windy']
    assert source.fetch.call_count == 2
    source.fetch.assert_called_with(WEATHER_URL, 'what is the weather like today')


def test_explain(bank: MemoryBank, add_door_memory: Callable[..., int], make_frame: MakeFrameCallable) -> None:
    add_door_memory()
    [event] = proactive_step(bank, make_frame(epoch_s=DAY2_0752), RecallConfig())
    assert event.explain(bank.get(1)) == (
        'space: entrance hallway (0 m from where it was asked); '
        'time: 07:52 now, asked at 07:50 (2 min apart); '
        'activity: preparing to commute (similarity 1.00)'
    )


def test_memory_not_recalled_before_it_was_created(tmp_path: pathlib.Path, provider: HashingEmbeddingProvider,
                                                   make_profile: Callable[..., SpatialActivityProfile],
                                                   make_frame: MakeFrameCallable) -> None:
    path = str(tmp_path / 'bank')
    bank = MemoryBank(provider, directory=path)
    bank.add_memory('door', 'what is the weather like today', 'Sunny, 12 C', ResponseSource.static(),
                    make_profile(epoch_s=DAY2_0752))

    assert proactive_step(bank, make_frame(epoch_s=DAY1_0750, detections=[('door', 0.9)]), RecallConfig()) == []
    assert bank.get(1).last_recalled_at is None
    assert [event['ev'] for event in bank.events] == [event_log.ADD]

    loaded = load_bank(path, provider)
    assert len(loaded) == 1
    assert [event['ev'] for event in loaded.events] == [event_log.ADD]
