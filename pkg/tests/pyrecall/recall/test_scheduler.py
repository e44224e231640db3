from typing import Callable

import attr
import pytest

from pyrecall.core import Timestamp
from pyrecall.exceptions import MemoryDismissedError, NonPositiveIntervalError
from pyrecall.recall.config import RecallConfig
from pyrecall.recall.proactive import proactive_step
from pyrecall.recall.scheduler import is_due, set_interval
from pyrecall.store.bank import MemoryBank
from tests.pyrecall.conftest import DAY1_0750, MakeFrameCallable

DAY_S = 86400


def _at(epoch_s: int) -> Timestamp:
    return Timestamp(epoch_s=epoch_s, tz_offset_min=-300)


def test_due_when_never_recalled(bank: MemoryBank, add_door_memory: Callable[..., int]) -> None:
    assert is_due(bank.get(add_door_memory()), _at(DAY1_0750))


def test_due_after_interval(bank: MemoryBank, add_door_memory: Callable[..., int]) -> None:
    rsam = attr.evolve(bank.get(add_door_memory()), last_recalled_at=_at(DAY1_0750 + DAY_S))
    assert not is_due(rsam, _at(DAY1_0750 + 2 * DAY_S - 1))
    assert is_due(rsam, _at(DAY1_0750 + 2 * DAY_S))


def test_fractional_interval(bank: MemoryBank, add_door_memory: Callable[..., int]) -> None:
    rsam = attr.evolve(bank.get(add_door_memory(interval_days=0.5)), last_recalled_at=_at(DAY1_0750))
    assert not is_due(rsam, _at(DAY1_0750 + 43199))
    assert is_due(rsam, _at(DAY1_0750 + 43200))


def test_not_due_before_creation(bank: MemoryBank, add_door_memory: Callable[..., int]) -> None:
    rsam = bank.get(add_door_memory(epoch_s=DAY1_0750 + DAY_S))
    assert not is_due(rsam, _at(DAY1_0750))
    assert not is_due(rsam, _at(DAY1_0750 + DAY_S - 1))
    assert is_due(rsam, _at(DAY1_0750 + DAY_S))


def test_never_due_once_dismissed(bank: MemoryBank, add_door_memory: Callable[..., int]) -> None:
    memory_id = add_door_memory()
    bank.dismiss(memory_id)
    assert not is_due(bank.get(memory_id), _at(DAY1_0750 + 30 * DAY_S))


def test_set_interval(bank: MemoryBank, add_door_memory: Callable[..., int]) -> None:
    memory_id = add_door_memory()
    set_interval(bank, memory_id, 7)
    assert bank.get(memory_id).recall_interval_days == 7.0
    with pytest.raises(NonPositiveIntervalError):
        set_interval(bank, memory_id, -2)
    bank.dismiss(memory_id)
    with pytest.raises(MemoryDismissedError):
        set_interval(bank, memory_id, 2)


def _walk_past_the_door(bank: MemoryBank, make_frame: MakeFrameCallable, days: int) -> list:
    ''' Six frames a day at the entrance, 07:40 to 08:05 local '''
    recalls = []
    for day in range(1, days + 1):
        for minute in range(0, 30, 5):
            frame = make_frame(epoch_s=DAY1_0750 - 600 + day * DAY_S + minute * 60)
            recalls.extend(proactive_step(bank, frame, RecallConfig()))
    return recalls


def test_one_recall_per_day(bank: MemoryBank, add_door_memory: Callable[..., int],
                            make_frame: MakeFrameCallable) -> None:
    memory_id = add_door_memory()
    recalls = _walk_past_the_door(bank, make_frame, days=3)
    assert [event.rsam_id for event in recalls] == [memory_id] * 3
    assert [event.ts.epoch_s - DAY1_0750 for event in recalls] == [DAY_S - 600, 2 * DAY_S - 600, 3 * DAY_S - 600]


def test_longer_interval_skips_days(bank: MemoryBank, add_door_memory: Callable[..., int],
                                    make_frame: MakeFrameCallable) -> None:
    add_door_memory(interval_days=2)
    assert len(_walk_past_the_door(bank, make_frame, days=4)) == 2


def test_dismissed_never_recalls(bank: MemoryBank, add_door_memory: Callable[..., int],
                                 make_frame: MakeFrameCallable) -> None:
    bank.dismiss(add_door_memory())
    assert _walk_past_the_door(bank, make_frame, days=3) == []
