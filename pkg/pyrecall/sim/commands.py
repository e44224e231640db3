"""
The commands behind the ``pyrecall`` command line. Each writes its machine-readable output to
``out`` and raises on failure; :mod:`pyrecall.sim.cli` turns exceptions into exit codes.
"""
import sys
from typing import List, Optional, Set, TextIO

import pandas as pd

from ..core import GeoPoint, Timestamp
from ..embed.providers import DEFAULT_DIM, EmbeddingProvider, HashingEmbeddingProvider
from ..exceptions import (CorruptLogError, DimensionMismatchError, LiveSourceError, PersistenceFailureError,
                          TraceParseError, UnknownBankError, VersionMismatchError)
from ..index.hnsw import DEFAULT_SEED
from ..recall.config import RecallConfig
from ..recall.frame import FrameObservation
from ..recall.live import FixtureLiveSource, HTTPLiveSource, LiveSource, NullLiveSource
from ..recall.proactive import proactive_step
from ..store.bank import MemoryBank, Match, load_bank, open_bank
from ..store.event_log import EventLog
from ..utils import logger
from .bench import ENVELOPE_MEAN_MS, ENVELOPE_SPEEDUP, BenchReport, run_bench
from .stats import SessionStats, stats_from_events
from .trace import read_trace

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PERSISTENCE = 3
EXIT_MISSING_BANK = 4

PENDING_RESPONSE = '(pending live update)'
NO_MATCHES = 'no matches'


def exit_code_for(ex: BaseException) -> Optional[int]:
    ''' The exit code a failed command reports, or None when the error is not an expected one '''
    if isinstance(ex, TraceParseError):
        return EXIT_PARSE
    if isinstance(ex, UnknownBankError):
        return EXIT_MISSING_BANK
    if isinstance(ex, (PersistenceFailureError, CorruptLogError, VersionMismatchError, DimensionMismatchError)):
        return EXIT_PERSISTENCE
    return None


def make_provider(dim: int = DEFAULT_DIM) -> EmbeddingProvider:
    return HashingEmbeddingProvider(dim)


def make_live_source(live: bool = False, fixtures: Optional[str] = None) -> LiveSource:
    ''' HTTP with ``live``, canned files with ``fixtures``, otherwise a source that always fails '''
    if live:
        return HTTPLiveSource()
    if fixtures:
        return FixtureLiveSource(fixtures)
    return NullLiveSource()


def _store_query(bank: MemoryBank, frame: FrameObservation, cfg: RecallConfig, live_source: LiveSource) -> int:
    query = frame.query
    assert query is not None
    response = query.response_text
    if response is None and query.response_source.url is not None:
        try:
            response = live_source.fetch(query.response_source.url, query.query_text)
        except LiveSourceError as ex:
            logger.warning(f"No answer for '{query.query_text}' yet: {ex}")
            response = PENDING_RESPONSE
    return bank.add_memory(query.referent_label, query.query_text, response or PENDING_RESPONSE,
                           query.response_source, frame.profile(bank.provider),
                           interval_days=cfg.default_interval_days, tag=query.tag)


def cmd_replay(trace_path: str, bank_path: str, cfg: RecallConfig, provider: EmbeddingProvider,
               live_source: Optional[LiveSource] = None, seed: int = DEFAULT_SEED, explain: bool = False,
               out: TextIO = sys.stdout) -> SessionStats:
    '''
    Replay a trace into the bank at ``bank_path``: store every query, run the proactive step on every
    frame and print one ``RECALL`` line per resurfaced memory, then the session statistics as JSON.
    '''
    live_source = live_source or NullLiveSource()
    frames = read_trace(trace_path)
    bank = open_bank(bank_path, provider, hnsw_seed=seed)
    start = len(bank.events)

    for frame in frames:
        created: Set[int] = set()
        if frame.query is not None:
            created.add(_store_query(bank, frame, cfg, live_source))
        for event in proactive_step(bank, frame, cfg, live_source=live_source, exclude=created):
            print(event.line(), file=out)
            if explain:
                print(f"  {event.explain(bank.get(event.rsam_id))}", file=out)

    stats = stats_from_events(bank.events, frames=len(frames), since=start)
    print(stats.to_json(), file=out)
    logger.info(f"Replayed {len(frames)} frames from {trace_path} into {bank_path}")
    return stats


def cmd_query(bank_path: str, lat: float, lon: float, epoch_s: int, scene: str, activity: str,
              cfg: RecallConfig, provider: EmbeddingProvider, tz_min: int = 0,
              out: TextIO = sys.stdout) -> List[Match]:
    bank = load_bank(bank_path, provider)
    geo = GeoPoint(lat=lat, lon=lon)
    profile = bank.build_profile(geo, Timestamp(epoch_s=epoch_s, tz_offset_min=tz_min), scene, activity)
    matches = bank.candidate_retrieve(profile, cfg.k, cfg.effective_radius_m(geo), cfg.tod_window_s)
    if not matches:
        print(NO_MATCHES, file=out)
        return matches

    table = pd.DataFrame([
        {'id': rsam.id, 'referent': rsam.referent_label, 'distance': distance, 'query': rsam.query_text}
        for rsam, distance in matches
    ])
    print(table.to_string(index=False, float_format=lambda x: f'{x:.4f}'), file=out)
    return matches


def cmd_bench(n: int, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED, k: int = 5, lookups: int = 100,
              timing: bool = True, progress: bool = False, out: TextIO = sys.stdout) -> BenchReport:
    report = run_bench(n, dim=dim, seed=seed, k=k, lookups=lookups, progress=progress)
    print(report.quality().to_string(index=False), file=out)
    if timing:
        print(file=out)
        print(f"inserts/s: {report.insert_per_s:.0f}", file=out)
        print(report.timing().to_string(), file=out)
        print(f"speedup: {report.speedup:.1f}x", file=out)
        verdict = 'met' if report.meets_envelope else 'missed'
        print(f"envelope ({ENVELOPE_MEAN_MS:.0f} ms, {ENVELOPE_SPEEDUP:.0f}x): {verdict}", file=out)
    return report


def cmd_stats(bank_path: str, out: TextIO = sys.stdout) -> SessionStats:
    ''' Fold the bank's log; no embeddings are recomputed '''
    log = EventLog(bank_path)
    log.read_manifest()
    stats = stats_from_events(log.read_events())
    print(stats.to_json(), file=out)
    return stats
