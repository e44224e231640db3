import io
import json
import os
import pathlib
from typing import Callable, List, Optional

import pytest

from pyrecall.embed.providers import HashingEmbeddingProvider
from pyrecall.exceptions import (CorruptLogError, DimensionMismatchError, PersistenceFailureError, TraceParseError,
                                 UnknownBankError, UnknownIdError, VersionMismatchError)
from pyrecall.recall.config import RecallConfig
from pyrecall.recall.live import FixtureLiveSource, HTTPLiveSource, NullLiveSource
from pyrecall.sim import commands
from pyrecall.store.bank import load_bank

SEATTLE_TZ = -300
HOME_LAT, HOME_LON = 47.6097, -122.3331


@pytest.fixture(name='replay')
def _replay(data_dir: str, provider: HashingEmbeddingProvider, tmp_path: pathlib.Path) -> Callable[..., List[str]]:
    ''' Replay a shipped trace into a bank under ``tmp_path`` and return the printed lines '''
    def _run(trace: str, bank: str = 'bank', fixtures: bool = True, cfg: RecallConfig = RecallConfig(),
             explain: bool = False) -> List[str]:
        out = io.StringIO()
        live_source = FixtureLiveSource(os.path.join(data_dir, 'fixtures')) if fixtures else None
        commands.cmd_replay(os.path.join(data_dir, trace), str(tmp_path / bank), cfg, provider,
                            live_source=live_source, explain=explain, out=out)
        return out.getvalue().splitlines()
    return _run


@pytest.mark.parametrize('ex,code', [
    (TraceParseError('bad', 3), commands.EXIT_PARSE),
    (UnknownBankError('gone'), commands.EXIT_MISSING_BANK),
    (PersistenceFailureError('disk'), commands.EXIT_PERSISTENCE),
    (CorruptLogError('bad', 2), commands.EXIT_PERSISTENCE),
    (VersionMismatchError('v2'), commands.EXIT_PERSISTENCE),
    (DimensionMismatchError(64, 32), commands.EXIT_PERSISTENCE),
    (UnknownIdError('7'), None),
    (KeyError('x'), None),
])
def test_exit_code_for(ex: BaseException, code: Optional[int]) -> None:
    assert commands.exit_code_for(ex) == code


def test_make_live_source(tmp_path: pathlib.Path) -> None:
    assert isinstance(commands.make_live_source(live=True), HTTPLiveSource)
    assert isinstance(commands.make_live_source(fixtures=str(tmp_path)), FixtureLiveSource)
    assert isinstance(commands.make_live_source(), NullLiveSource)


def test_make_provider() -> None:
    assert commands.make_provider(32).dim == 32


def test_replay_commute(replay: Callable[..., List[str]]) -> None:
    lines = replay('a1_commute.jsonl')
    assert lines[0] == 'RECALL id=1 referent=door score=0.9926'
    assert json.loads(lines[1]) == {
        'frames': 2, 'queries': 1, 'recalls': 1, 'proactive_ratio': 0.5, 'refreshed': 1, 'dismissed': [],
        'per_use_case': {'A1': {'queries': 1, 'recalls': 1}},
    }
    assert len(lines) == 2


def test_replay_commute_updates_answer(replay: Callable[..., List[str]], provider: HashingEmbeddingProvider,
                                       tmp_path: pathlib.Path) -> None:
    replay('a1_commute.jsonl')
    assert load_bank(str(tmp_path / 'bank'), provider).get(1).response_text == 'Cloudy, 10 C, light rain after 5 PM'


def test_replay_commute_without_live_source(replay: Callable[..., List[str]]) -> None:
    lines = replay('a1_commute.jsonl', fixtures=False)
    assert lines[0] == 'RECALL id=1 referent=door score=0.9926'
    assert json.loads(lines[1])['refreshed'] == 0


def test_replay_elsewhere(replay: Callable[..., List[str]]) -> None:
    lines = replay('a1_elsewhere.jsonl')
    assert len(lines) == 1
    stats = json.loads(lines[0])
    assert stats['recalls'] == 0
    assert stats['proactive_ratio'] == 0.0


def test_replay_workday(replay: Callable[..., List[str]], provider: HashingEmbeddingProvider,
                        tmp_path: pathlib.Path) -> None:
    lines = replay('a2_workday.jsonl')
    assert lines[:2] == [
        'RECALL id=1 referent=monitor score=0.9815',
        'RECALL id=2 referent=coffee machine score=0.9630',
    ]
    stats = json.loads(lines[2])
    assert stats['frames'] == 5
    assert stats['queries'] == 2
    assert stats['recalls'] == 2
    assert stats['refreshed'] == 1
    assert stats['per_use_case'] == {'A2': {'queries': 2, 'recalls': 2}}

    bank = load_bank(str(tmp_path / 'bank'), provider)
    assert bank.get(1).response_text == 'Three new preprints on egocentric memory assistants'
    assert bank.get(2).response_text == commands.PENDING_RESPONSE


def test_replay_repair(replay: Callable[..., List[str]]) -> None:
    lines = replay('a3_repair.jsonl')
    assert lines[0] == 'RECALL id=1 referent=toolbox score=0.9259'
    stats = json.loads(lines[1])
    assert stats['frames'] == 4
    assert stats['recalls'] == 1
    assert stats['refreshed'] == 0
    assert len(lines) == 2


def test_replay_explain(replay: Callable[..., List[str]]) -> None:
    lines = replay('a1_commute.jsonl', explain=True)
    assert lines[0] == 'RECALL id=1 referent=door score=0.9926'
    assert lines[1] == ('  space: entrance hallway (0 m from where it was asked); '
                        'time: 07:52 now, asked at 07:50 (2 min apart); '
                        'activity: preparing to commute (similarity 1.00)')


def test_replay_query_only(replay: Callable[..., List[str]]) -> None:
    lines = replay('a1_commute.jsonl', cfg=RecallConfig(proactive=False))
    assert len(lines) == 1
    assert json.loads(lines[0])['queries'] == 1
    assert json.loads(lines[0])['recalls'] == 0


def test_replay_twice_appends(replay: Callable[..., List[str]]) -> None:
    replay('a1_commute.jsonl')
    lines = replay('a1_commute.jsonl')
    # the first memory was already recalled at that very moment
    assert lines[0] == 'RECALL id=2 referent=door score=0.9926'
    stats = json.loads(lines[1])
    assert stats['queries'] == 1
    assert stats['recalls'] == 1


def test_replay_empty_trace(replay: Callable[..., List[str]]) -> None:
    assert json.loads(replay('empty.jsonl')[0])['frames'] == 0


def test_replay_malformed(replay: Callable[..., List[str]], tmp_path: pathlib.Path) -> None:
    with pytest.raises(TraceParseError) as ex:
        replay('malformed.jsonl')
    assert ex.value.line_number == 7
    assert not (tmp_path / 'bank').exists()


def test_query(replay: Callable[..., List[str]], provider: HashingEmbeddingProvider, tmp_path: pathlib.Path) -> None:
    replay('a1_commute.jsonl')
    out = io.StringIO()
    matches = commands.cmd_query(str(tmp_path / 'bank'), HOME_LAT, HOME_LON, 1741006200, 'entrance hallway',
                                 'preparing to commute', RecallConfig(), provider, tz_min=SEATTLE_TZ, out=out)
    assert [rsam.id for rsam, _ in matches] == [1]
    lines = out.getvalue().splitlines()
    assert lines[0].split() == ['id', 'referent', 'distance', 'query']
    assert lines[1].split()[:3] == ['1', 'door', '0.0000']
    assert lines[1].endswith('what is the weather like today')


def test_query_no_matches(replay: Callable[..., List[str]], provider: HashingEmbeddingProvider,
                          tmp_path: pathlib.Path) -> None:
    replay('a1_commute.jsonl')
    out = io.StringIO()
    assert commands.cmd_query(str(tmp_path / 'bank'), HOME_LAT + 0.045, HOME_LON, 1741006200, 'entrance hallway',
                              'preparing to commute', RecallConfig(), provider, tz_min=SEATTLE_TZ, out=out) == []
    assert out.getvalue() == f"{commands.NO_MATCHES}\n"


def test_query_missing_bank(provider: HashingEmbeddingProvider, tmp_path: pathlib.Path) -> None:
    with pytest.raises(UnknownBankError):
        commands.cmd_query(str(tmp_path / 'none'), HOME_LAT, HOME_LON, 0, 'a room', 'sitting', RecallConfig(),
                           provider, out=io.StringIO())


def test_stats(replay: Callable[..., List[str]], tmp_path: pathlib.Path) -> None:
    replay('a2_workday.jsonl')
    out = io.StringIO()
    stats = commands.cmd_stats(str(tmp_path / 'bank'), out=out)
    assert stats.frames == 0
    assert stats.queries == 2
    assert stats.recalls == 2
    assert json.loads(out.getvalue()) == stats.to_dict()


def test_stats_missing_bank(tmp_path: pathlib.Path) -> None:
    with pytest.raises(UnknownBankError):
        commands.cmd_stats(str(tmp_path / 'none'), out=io.StringIO())


def test_bench_quality_only() -> None:
    out = io.StringIO()
    commands.cmd_bench(100, lookups=10, timing=False, out=out)
    lines = out.getvalue().splitlines()
    assert len(lines) == 2
    assert lines[0].split()[:2] == ['n', 'dim']


def test_bench_with_timing() -> None:
    out = io.StringIO()
    commands.cmd_bench(100, lookups=5, out=out)
    text = out.getvalue()
    assert 'inserts/s' in text
    assert 'brute-force' in text
    assert 'speedup' in text
    assert 'envelope (50 ms, 10x): ' in text


def test_store_query_without_answer_waits_for_live(provider: HashingEmbeddingProvider, tmp_path: pathlib.Path,
                                                   data_dir: str) -> None:
    out = io.StringIO()
    commands.cmd_replay(os.path.join(data_dir, 'a2_workday.jsonl'), str(tmp_path / 'bank'), RecallConfig(),
                        provider, live_source=NullLiveSource(), out=out)
    bank = load_bank(str(tmp_path / 'bank'), provider)
    assert bank.get(1).response_text == commands.PENDING_RESPONSE
