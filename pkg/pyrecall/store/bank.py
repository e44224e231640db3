"""
The memory bank: every stored memory, the R-tree and HNSW indices over them, and the event log they
are folded from.

Each mutation is turned into an event, the event is written to the log (when the bank is attached to
a directory) and only then applied. Loading a bank replays the same events through the same code path,
so a bank's state is always a pure function of its log.
"""
import math
import threading
from typing import Any, Collection, Dict, List, Mapping, Optional, Tuple

import attr
import numpy as np

from ..core import EARTH_RADIUS_M, HALF_DAY_S, GeoPoint, Timestamp, circular_diff_s_array, haversine_m_array
from ..embed.embedding import check_dimension
from ..embed.providers import EmbeddingProvider
from ..exceptions import (AlreadyDismissedError, CorruptLogError, DimensionMismatchError, DuplicateIdError,
                          EmptyTextError, InvalidRangeError, MemoryDismissedError, NonPositiveIntervalError,
                          ProviderUnavailableError, PyRecallError, UnknownIdError)
from ..index.hnsw import DEFAULT_EF_CONSTRUCTION, DEFAULT_EF_SEARCH, DEFAULT_M, DEFAULT_SEED, HnswIndex
from ..index.rtree import RTreeIndex
from ..utils import SECONDS_PER_DAY, logger
from . import event_log
from .event_log import Event, EventLog, Manifest
from .memory import ResponseSource, Rsam, SpatialActivityProfile

EXACT_RANK_CUTOFF = 256
DEFAULT_INTERVAL_DAYS = 1.0

# pads the degree box so floating point never drops a point sitting on the radius
_BOX_PAD_DEG = 1e-9
_INITIAL_ROWS = 64
_MAX_ID = 2 ** 63

Match = Tuple[Rsam, float]


def geo_box(center: GeoPoint, radius_m: float) -> Tuple[float, float, float, float]:
    '''
    (lat_lo, lat_hi, lon_lo, lon_hi) of a box covering every point within ``radius_m`` meters of
    ``center`` on the haversine sphere. Boxes reaching a pole or crossing the antimeridian span all
    longitudes.
    '''
    angular = radius_m / EARTH_RADIUS_M
    dlat = math.degrees(angular) + _BOX_PAD_DEG
    lat_lo, lat_hi = max(-90.0, center.lat - dlat), min(90.0, center.lat + dlat)
    if lat_lo <= -90.0 or lat_hi >= 90.0 or angular >= math.pi / 2:
        return lat_lo, lat_hi, -180.0, 180.0
    ratio = math.sin(angular) / math.cos(math.radians(center.lat))
    if ratio >= 1.0:
        return lat_lo, lat_hi, -180.0, 180.0
    dlon = math.degrees(math.asin(ratio)) + _BOX_PAD_DEG
    if center.lon - dlon < -180.0 or center.lon + dlon > 180.0:
        # the R-tree has no notion of the antimeridian
        return lat_lo, lat_hi, -180.0, 180.0
    return lat_lo, lat_hi, center.lon - dlon, center.lon + dlon


def tod_bounds(tod_s: int, window_s: float) -> Tuple[float, float]:
    ''' Time-of-day bounds for the R-tree; ``lo > hi`` marks a window wrapping midnight '''
    if window_s >= HALF_DAY_S:
        return 0.0, float(SECONDS_PER_DAY)
    return (tod_s - window_s) % SECONDS_PER_DAY, (tod_s + window_s) % SECONDS_PER_DAY


class _Columns:
    """
    Coordinates, time of day and descriptor of every memory ever added, one numpy row per memory, so
    the exact filter and ranking run as whole-array operations. Dismissed rows stay but are marked dead.
    """

    def __init__(self, dim: int) -> None:
        self.count = 0
        self.ids = np.zeros(_INITIAL_ROWS, dtype=np.int64)
        self.lats = np.zeros(_INITIAL_ROWS, dtype=np.float64)
        self.lons = np.zeros(_INITIAL_ROWS, dtype=np.float64)
        self.tods = np.zeros(_INITIAL_ROWS, dtype=np.int64)
        self.live = np.zeros(_INITIAL_ROWS, dtype=bool)
        self.vectors = np.zeros((_INITIAL_ROWS, dim), dtype=np.float64)
        self._row_of: Dict[int, int] = {}
        # ids arrive in increasing order unless a hand-edited log says otherwise
        self._ascending = True

    def append(self, memory_id: int, profile: SpatialActivityProfile) -> None:
        if self.count == self.ids.shape[0]:
            for name in ('ids', 'lats', 'lons', 'tods', 'live', 'vectors'):
                column = getattr(self, name)
                setattr(self, name, np.concatenate([column, np.zeros_like(column)]))
        row = self.count
        self.ids[row] = memory_id
        self.lats[row] = profile.geo.lat
        self.lons[row] = profile.geo.lon
        self.tods[row] = profile.tod.seconds_since_local_midnight
        self.live[row] = True
        self.vectors[row] = profile.descriptor.values
        self._row_of[memory_id] = row
        self._ascending = self._ascending and (row == 0 or memory_id > int(self.ids[row - 1]))
        self.count += 1

    def retire(self, memory_id: int) -> None:
        self.live[self._row_of[memory_id]] = False

    def rows(self, memory_ids: Collection[int]) -> np.ndarray:
        ids = np.fromiter(memory_ids, dtype=np.int64, count=len(memory_ids))
        if self._ascending:
            return np.searchsorted(self.ids[:self.count], ids)
        return np.fromiter((self._row_of[i] for i in ids.tolist()), dtype=np.int64, count=ids.size)

    def live_rows(self) -> np.ndarray:
        return np.flatnonzero(self.live[:self.count])


class MemoryBank:
    """
    Owner of all memories and both indices.

    Mutations and reads are serialized through one re-entrant lock. A bank created with a
    ``directory`` appends every event to that directory's log before the mutation returns; a bank
    without one keeps its events in memory until :func:`save_bank` writes them out.
    """

    def __init__(self, provider: EmbeddingProvider, hnsw_seed: int = DEFAULT_SEED, m: int = DEFAULT_M,
                 ef_construction: int = DEFAULT_EF_CONSTRUCTION, ef_search: int = DEFAULT_EF_SEARCH,
                 directory: Optional[str] = None, debug: bool = False) -> None:
        self.provider = provider
        self.manifest = Manifest(dim=provider.dim, hnsw_seed=hnsw_seed)
        self.debug = debug
        self._lock = threading.RLock()
        self._memories: Dict[int, Rsam] = {}
        self._events: List[Event] = []
        self._next_id = 1
        self._rtree = RTreeIndex(debug=debug)
        self._hnsw = HnswIndex(provider.dim, m=m, ef_construction=ef_construction, ef_search=ef_search,
                               seed=hnsw_seed, debug=debug)
        self._columns = _Columns(provider.dim)
        self._log: Optional[EventLog] = None
        if directory is not None:
            self._log = EventLog(directory)
            self._log.create(self.manifest)

    @property
    def dim(self) -> int:
        return self.manifest.dim

    @property
    def hnsw_seed(self) -> int:
        return self.manifest.hnsw_seed

    @property
    def directory(self) -> Optional[str]:
        return None if self._log is None else self._log.directory

    @property
    def rtree(self) -> RTreeIndex:
        return self._rtree

    @property
    def hnsw(self) -> HnswIndex:
        return self._hnsw

    @property
    def events(self) -> List[Event]:
        with self._lock:
            return [dict(event) for event in self._events]

    @property
    def live_count(self) -> int:
        with self._lock:
            return sum(not rsam.dismissed for rsam in self._memories.values())

    def __len__(self) -> int:
        return len(self._memories)

    def __contains__(self, memory_id: object) -> bool:
        return memory_id in self._memories

    def get(self, memory_id: int) -> Rsam:
        with self._lock:
            try:
                return self._memories[memory_id]
            except KeyError as ex:
                raise UnknownIdError(f"Unknown memory id {memory_id}") from ex

    def memories(self, include_dismissed: bool = True) -> List[Rsam]:
        with self._lock:
            return [self._memories[i] for i in sorted(self._memories)
                    if include_dismissed or not self._memories[i].dismissed]

    def build_profile(self, geo: GeoPoint, ts: Timestamp, scene_text: str,
                      activity_text: str) -> SpatialActivityProfile:
        return SpatialActivityProfile.build(geo, ts, scene_text, activity_text, self.provider)

    def add_memory(self, referent_label: str, query_text: str, response_text: str,
                   response_source: ResponseSource, profile: SpatialActivityProfile,
                   interval_days: float = DEFAULT_INTERVAL_DAYS, tag: Optional[str] = None) -> int:
        '''
        Store a new memory and return its id. Identical content still creates a new memory.
        '''
        for name, text in (('referent_label', referent_label), ('query_text', query_text),
                           ('response_text', response_text)):
            if not text or not text.strip():
                raise EmptyTextError(f"{name} must not be empty")
        if not interval_days > 0 or not math.isfinite(interval_days):
            raise NonPositiveIntervalError(f"Recall interval must be positive, not {interval_days}")
        check_dimension(self.dim, profile.descriptor)

        with self._lock:
            memory_id = self._next_id
            event: Event = {
                'ev': event_log.ADD,
                'id': memory_id,
                'referent': referent_label,
                'query': query_text,
                'response': response_text,
                'source': str(response_source),
                'profile': profile.to_record(),
                'interval_days': float(interval_days),
            }
            if tag is not None:
                event['tag'] = tag
            self._commit(event, profile)
        logger.info(f"Stored memory {memory_id} anchored to '{referent_label}': {query_text}")
        return memory_id

    def dismiss(self, memory_id: int) -> None:
        with self._lock:
            rsam = self.get(memory_id)
            if rsam.dismissed:
                raise AlreadyDismissedError(f"Memory {memory_id} is already dismissed")
            self._commit({'ev': event_log.DISMISS, 'id': memory_id})
        logger.info(f"Dismissed memory {memory_id}")

    def update_response(self, memory_id: int, new_response_text: str) -> None:
        if not new_response_text or not new_response_text.strip():
            raise EmptyTextError("new_response_text must not be empty")
        with self._lock:
            self._check_live(memory_id)
            self._commit({'ev': event_log.UPDATE, 'id': memory_id, 'response': new_response_text})

    def set_interval(self, memory_id: int, days: float) -> None:
        if not isinstance(days, (int, float)) or not math.isfinite(days) or days <= 0:
            raise NonPositiveIntervalError(f"Recall interval must be positive, not {days}")
        with self._lock:
            self._check_live(memory_id)
            self._commit({'ev': event_log.SET_INTERVAL, 'id': memory_id, 'days': float(days)})

    def record_recall(self, memory_id: int, ts: Timestamp, scores: Mapping[str, float], refreshed: bool,
                      response_text: Optional[str] = None) -> None:
        '''
        Mark a memory as resurfaced at ``ts``. A refreshed ``response_text`` replaces the stored answer.
        '''
        with self._lock:
            self._check_live(memory_id)
            event: Event = {
                'ev': event_log.RECALL,
                'id': memory_id,
                'epoch_s': ts.epoch_s,
                'tz_min': ts.tz_offset_min,
                'scores': {name: float(value) for name, value in scores.items()},
                'refreshed': bool(refreshed),
            }
            if response_text is not None:
                event['response'] = response_text
            self._commit(event)

    def candidate_retrieve(self, profile: SpatialActivityProfile, k: int, radius_m: float,
                           tod_window_s: float) -> List[Match]:
        '''
        Hybrid retrieval: R-tree box filter, exact distance and time-of-day checks, then ranking by
        cosine distance of the descriptors. Small candidate sets are ranked exactly; larger ones go
        through the HNSW index, topped up by an exact scan when too few of its hits are candidates.
        '''
        self._check_retrieval_args(profile, k, radius_m, tod_window_s)
        with self._lock:
            if not self._rtree.size:
                return []
            lat_lo, lat_hi, lon_lo, lon_hi = geo_box(profile.geo, radius_m)
            tod_lo, tod_hi = tod_bounds(profile.tod.seconds_since_local_midnight, tod_window_s)
            boxed = self._rtree.leaf_candidates(lat_lo, lat_hi, lon_lo, lon_hi, tod_lo, tod_hi)
            candidates = self._within(self._columns.rows(boxed), profile, radius_m, tod_window_s)

            query = profile.descriptor.values
            ef = max(self._hnsw.ef_search, 4 * k)
            # an HNSW pass is only worth it when its ef hits can be expected to hold k candidates
            if len(candidates) <= EXACT_RANK_CUTOFF or ef * len(candidates) < k * len(self._hnsw):
                ranked = self._rank_exact(query, candidates, limit=k)
            else:
                wanted = set(self._columns.ids[candidates].tolist())
                ranked = [(i, d) for i, d in self._hnsw.search(profile.descriptor, ef, ef=ef) if i in wanted]
                if len(ranked) < k:
                    seen = {i for i, _ in ranked}
                    rest = candidates[~np.isin(self._columns.ids[candidates], list(seen))]
                    ranked = sorted(ranked + self._rank_exact(query, rest, limit=k),
                                    key=lambda pair: (pair[1], pair[0]))
            return [(self._memories[i], d) for i, d in ranked if not self._memories[i].dismissed][:k]

    def exhaustive_retrieve(self, profile: SpatialActivityProfile, k: int, radius_m: float,
                            tod_window_s: float) -> List[Match]:
        ''' Brute-force reference pipeline: haversine, circular time difference and a full cosine sort '''
        self._check_retrieval_args(profile, k, radius_m, tod_window_s)
        with self._lock:
            rows = self._within(self._columns.live_rows(), profile, radius_m, tod_window_s)
            return [(self._memories[i], d) for i, d in self._rank_exact(profile.descriptor.values, rows, limit=k)]

    def check_consistency(self) -> None:
        ''' Raise ``AssertionError`` unless both indices hold exactly the non-dismissed memories '''
        with self._lock:
            live = {i for i, rsam in self._memories.items() if not rsam.dismissed}
            if len(self._rtree) != len(live) or len(self._hnsw) != len(live):
                raise AssertionError(
                    f"{len(live)} live memories but {len(self._rtree)} R-tree and {len(self._hnsw)} HNSW entries"
                )
            for memory_id in live:
                if memory_id not in self._rtree or memory_id not in self._hnsw:
                    raise AssertionError(f"memory {memory_id} is missing from an index")
            self._rtree.audit()
            self._hnsw.audit()

    def attach(self, directory: str) -> None:
        ''' Write the whole bank to ``directory`` and log every later mutation there '''
        with self._lock:
            log = EventLog(directory)
            log.create(self.manifest, self._events)
            self._log = log

    def _check_retrieval_args(self, profile: SpatialActivityProfile, k: int, radius_m: float,
                              tod_window_s: float) -> None:
        if k <= 0:
            raise ValueError(f"k must be greater than zero, not {k}")
        if not radius_m > 0 or not math.isfinite(radius_m):
            raise InvalidRangeError(f"radius_m must be positive, not {radius_m}")
        if not 0 < tod_window_s <= HALF_DAY_S:
            raise InvalidRangeError(f"tod_window_s must be in (0, {HALF_DAY_S}], not {tod_window_s}")
        check_dimension(self.dim, profile.descriptor)

    def _check_live(self, memory_id: int) -> Rsam:
        rsam = self.get(memory_id)
        if rsam.dismissed:
            raise MemoryDismissedError(f"Memory {memory_id} has been dismissed")
        return rsam

    def _within(self, rows: np.ndarray, profile: SpatialActivityProfile, radius_m: float,
                tod_window_s: float) -> np.ndarray:
        if not rows.size:
            return rows
        columns = self._columns
        close = haversine_m_array(profile.geo.lat, profile.geo.lon, columns.lats[rows], columns.lons[rows]) <= radius_m
        timely = circular_diff_s_array(profile.tod.seconds_since_local_midnight, columns.tods[rows]) <= tod_window_s
        return rows[close & timely]

    def _rank_exact(self, query: np.ndarray, rows: np.ndarray, limit: Optional[int] = None) -> List[Tuple[int, float]]:
        '''
        ``(id, cosine distance)`` for ``rows`` in ascending distance, ties broken by id. With ``limit``
        only the best ``limit`` are ranked.
        '''
        if not rows.size:
            return []
        columns = self._columns
        # row-wise sums keep each distance independent of which other rows are ranked with it
        dists = np.clip(1.0 - (columns.vectors[rows] * query).sum(axis=1), 0.0, 2.0)
        ids = columns.ids[rows]
        if limit is not None and limit < dists.size:
            # everything tied with the limit-th distance stays in so ties still resolve by id
            cutoff = np.partition(dists, limit - 1)[limit - 1]
            keep = dists <= cutoff
            dists, ids = dists[keep], ids[keep]
        order = np.lexsort((ids, dists))[:limit]
        return list(zip(ids[order].tolist(), dists[order].tolist()))

    def _commit(self, event: Event, profile: Optional[SpatialActivityProfile] = None) -> None:
        # the new state is built, and validated, before the event reaches the log
        kind, rsam = self._prepare(event, profile)
        if self._log is not None:
            self._log.append([event])
        self._install(kind, rsam)
        self._events.append(event)

    def _apply(self, event: Event, profile: Optional[SpatialActivityProfile] = None) -> None:
        self._install(*self._prepare(event, profile))

    def _prepare(self, event: Event, profile: Optional[SpatialActivityProfile] = None) -> Tuple[str, Rsam]:
        ''' The memory as it stands once ``event`` is applied, leaving the bank untouched '''
        kind = event['ev']
        memory_id = int(event['id'])
        if kind == event_log.ADD:
            if not 0 < memory_id < _MAX_ID:
                raise ValueError(f"Memory id {memory_id} is out of range")
            if memory_id in self._memories:
                raise DuplicateIdError(f"Memory id {memory_id} already exists")
            if profile is None:
                profile = SpatialActivityProfile.from_record(event['profile'], self.provider)
            return kind, Rsam(
                id=memory_id,
                referent_label=event['referent'],
                query_text=event['query'],
                response_text=event['response'],
                response_source=ResponseSource.parse(event['source']),
                profile=profile,
                created_at=profile.ts,
                recall_interval_days=event.get('interval_days', DEFAULT_INTERVAL_DAYS),
                tag=event.get('tag'),
            )

        rsam = self.get(memory_id)
        if kind == event_log.DISMISS:
            if rsam.dismissed:
                raise AlreadyDismissedError(f"Memory {memory_id} is already dismissed")
            return kind, attr.evolve(rsam, dismissed=True)
        if rsam.dismissed:
            raise MemoryDismissedError(f"Memory {memory_id} has been dismissed")
        if kind == event_log.UPDATE:
            return kind, attr.evolve(rsam, response_text=event['response'])
        if kind == event_log.SET_INTERVAL:
            return kind, attr.evolve(rsam, recall_interval_days=event['days'])
        if kind == event_log.RECALL:
            ts = Timestamp(epoch_s=event['epoch_s'], tz_offset_min=event['tz_min'])
            changes: Dict[str, Any] = {'last_recalled_at': ts}
            if event.get('response') is not None:
                changes['response_text'] = event['response']
            return kind, attr.evolve(rsam, **changes)
        raise ValueError(f"Unknown event kind {kind!r}")

    def _install(self, kind: str, rsam: Rsam) -> None:
        if kind == event_log.ADD:
            self._rtree.insert(rsam.profile.key(), rsam.id)
            self._hnsw.insert(rsam.id, rsam.profile.descriptor)
            self._columns.append(rsam.id, rsam.profile)
            self._next_id = max(self._next_id, rsam.id + 1)
        elif kind == event_log.DISMISS:
            self._rtree.remove(rsam.id)
            self._hnsw.remove(rsam.id)
            self._columns.retire(rsam.id)
        self._memories[rsam.id] = rsam

    @classmethod
    def _replay(cls, manifest: Manifest, events: List[Event], provider: EmbeddingProvider,
                directory: Optional[str], **params: Any) -> 'MemoryBank':
        if manifest.dim != provider.dim:
            raise DimensionMismatchError(manifest.dim, provider.dim)
        bank = cls(provider, hnsw_seed=manifest.hnsw_seed, **params)
        bank.manifest = manifest
        for line_number, event in enumerate(events, start=1):
            try:
                bank._apply(event)
            except (DimensionMismatchError, ProviderUnavailableError):
                raise
            except (PyRecallError, ValueError, KeyError, TypeError) as ex:
                raise CorruptLogError(f"{event['ev']} event cannot be replayed: {ex}", line_number) from ex
            bank._events.append(event)
        if directory is not None:
            bank._log = EventLog(directory)
        logger.info(f"Loaded {len(bank)} memories from {len(events)} events")
        return bank


def save_bank(bank: MemoryBank, path: str) -> None:
    ''' Write the bank's manifest and complete event log to ``path`` '''
    with bank._lock:  # pylint: disable=protected-access
        EventLog(path).create(bank.manifest, bank._events)  # pylint: disable=protected-access


def load_bank(path: str, provider: EmbeddingProvider, attach: bool = False, **params: Any) -> MemoryBank:
    '''
    Rebuild a bank by replaying the log at ``path``. With ``attach`` later mutations are appended to
    the same log.
    '''
    log = EventLog(path)
    manifest = log.read_manifest()
    events = log.read_events()
    return MemoryBank._replay(manifest, events, provider,  # pylint: disable=protected-access
                              path if attach else None, **params)


def open_bank(path: str, provider: EmbeddingProvider, hnsw_seed: int = DEFAULT_SEED, **params: Any) -> MemoryBank:
    ''' Load the bank at ``path`` for appending, creating an empty one first if none exists '''
    if EventLog(path).exists():
        return load_bank(path, provider, attach=True, **params)
    return MemoryBank(provider, hnsw_seed=hnsw_seed, directory=path, **params)
