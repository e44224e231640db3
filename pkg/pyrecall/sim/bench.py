"""
Synthetic benchmark of the hybrid store against a brute-force scan.

Memories are scattered uniformly over a 1 km box at random times of day, with descriptors drawn
around a handful of random cluster centers. Lookups are drawn the same way. The quality numbers
(candidate counts, recall@k and exact matches against the exhaustive pipeline) depend only on the
seed; the timing numbers depend on the machine.
"""
import time
from typing import List, Optional, Sequence, Tuple

import attr
import numpy as np
import pandas as pd
from tqdm import tqdm

from ..core import GeoPoint, Timestamp, circular_diff_s_array, haversine_m_array
from ..embed.embedding import Embedding
from ..embed.providers import DEFAULT_DIM, EmbeddingProvider, HashingEmbeddingProvider
from ..index.hnsw import DEFAULT_EF_CONSTRUCTION, DEFAULT_M
from ..store.bank import MemoryBank
from ..store.memory import ResponseSource, SpatialActivityProfile
from ..utils import SECONDS_PER_DAY, logger

MIN_MEMORIES = 100
DEFAULT_SEED = 42
DEFAULT_K = 5
DEFAULT_LOOKUPS = 100
DEFAULT_RADIUS_M = 250.0
DEFAULT_TOD_WINDOW_S = 5400.0
N_CLUSTERS = 16
CLUSTER_NOISE = 0.35
# a hybrid lookup must average under this and beat the brute-force scan by this factor
ENVELOPE_MEAN_MS = 50.0
ENVELOPE_SPEEDUP = 10.0

BOX_CENTER = (47.6062, -122.3321)
BOX_SIDE_M = 1000.0
_M_PER_DEG_LAT = 111_320.0
# Monday 2025-03-03 00:00 UTC
BASE_EPOCH_S = 1740960000


@attr.s(frozen=True, kw_only=True)
class BenchReport:
    n: int = attr.ib()
    dim: int = attr.ib()
    seed: int = attr.ib()
    k: int = attr.ib()
    lookups: int = attr.ib()
    mean_candidates: float = attr.ib()
    max_candidates: int = attr.ib()
    recall_at_k: float = attr.ib()
    exact_matches: int = attr.ib()
    insert_per_s: float = attr.ib(metadata={"units": "1/s"})
    hybrid_mean_ms: float = attr.ib(metadata={"units": "ms"})
    hybrid_p95_ms: float = attr.ib(metadata={"units": "ms"})
    brute_mean_ms: float = attr.ib(metadata={"units": "ms"})
    brute_p95_ms: float = attr.ib(metadata={"units": "ms"})

    @property
    def speedup(self) -> float:
        return self.brute_mean_ms / self.hybrid_mean_ms if self.hybrid_mean_ms > 0 else float('inf')

    @property
    def meets_envelope(self) -> bool:
        return self.hybrid_mean_ms < ENVELOPE_MEAN_MS and self.speedup >= ENVELOPE_SPEEDUP

    def quality(self) -> pd.DataFrame:
        return pd.DataFrame([{
            'n': self.n, 'dim': self.dim, 'seed': self.seed, 'k': self.k, 'lookups': self.lookups,
            'mean_candidates': round(self.mean_candidates, 2), 'max_candidates': self.max_candidates,
            f'recall@{self.k}': round(self.recall_at_k, 4), 'exact_matches': self.exact_matches,
        }])

    def timing(self) -> pd.DataFrame:
        return pd.DataFrame([
            {'pipeline': 'hybrid', 'mean_ms': self.hybrid_mean_ms, 'p95_ms': self.hybrid_p95_ms},
            {'pipeline': 'brute-force', 'mean_ms': self.brute_mean_ms, 'p95_ms': self.brute_p95_ms},
        ]).set_index('pipeline').round(3)


class _Synthesizer:
    def __init__(self, dim: int, seed: int) -> None:
        self.rng = np.random.default_rng(seed)
        self.dim = dim
        self.centers = self.rng.standard_normal((N_CLUSTERS, dim))
        self.centers /= np.linalg.norm(self.centers, axis=1, keepdims=True)

    def geo(self) -> GeoPoint:
        half = BOX_SIDE_M / 2
        north, east = self.rng.uniform(-half, half, 2)
        lat = BOX_CENTER[0] + north / _M_PER_DEG_LAT
        lon = BOX_CENTER[1] + east / (_M_PER_DEG_LAT * np.cos(np.radians(BOX_CENTER[0])))
        return GeoPoint(lat=lat, lon=lon, accuracy_m=5.0)

    def ts(self) -> Timestamp:
        day = int(self.rng.integers(0, 30))
        return Timestamp(epoch_s=BASE_EPOCH_S + day * SECONDS_PER_DAY + int(self.rng.integers(0, SECONDS_PER_DAY)))

    def descriptor(self) -> Tuple[int, Embedding]:
        cluster = int(self.rng.integers(0, N_CLUSTERS))
        noisy = self.centers[cluster] + self.rng.normal(0.0, CLUSTER_NOISE / np.sqrt(self.dim), self.dim)
        return cluster, Embedding.normalized(noisy)

    def profile(self) -> SpatialActivityProfile:
        geo, ts = self.geo(), self.ts()
        cluster, descriptor = self.descriptor()
        return SpatialActivityProfile(geo=geo, ts=ts, scene_text=f"scene {cluster}",
                                      activity_text=f"activity {cluster}", descriptor=descriptor)


def _percentile_ms(samples: Sequence[float], q: float) -> float:
    return float(np.percentile(np.array(samples) * 1000.0, q)) if samples else 0.0


def _brute_force(lats: np.ndarray, lons: np.ndarray, tods: np.ndarray, vectors: np.ndarray,
                 profile: SpatialActivityProfile, k: int, radius_m: float, tod_window_s: float) -> np.ndarray:
    tod = profile.tod.seconds_since_local_midnight
    mask = (haversine_m_array(profile.geo.lat, profile.geo.lon, lats, lons) <= radius_m) & \
        (circular_diff_s_array(tod, tods) <= tod_window_s)
    rows = np.flatnonzero(mask)
    distances = 1.0 - vectors[rows] @ profile.descriptor.values
    return rows[np.argsort(distances, kind='stable')[:k]]


def run_bench(n: int, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED, k: int = DEFAULT_K,
              lookups: int = DEFAULT_LOOKUPS, radius_m: float = DEFAULT_RADIUS_M,
              tod_window_s: float = DEFAULT_TOD_WINDOW_S, m: int = DEFAULT_M,
              ef_construction: int = DEFAULT_EF_CONSTRUCTION, progress: bool = False,
              provider: Optional[EmbeddingProvider] = None) -> BenchReport:
    '''
    Build an ``n`` memory bank and time ``lookups`` retrievals through the hybrid store and through a
    vectorized brute-force scan, scoring the hybrid results against the exhaustive pipeline.
    '''
    if n < MIN_MEMORIES:
        raise ValueError(f"The benchmark needs at least {MIN_MEMORIES} memories, not {n}")
    synth = _Synthesizer(dim, seed)
    bank = MemoryBank(provider or HashingEmbeddingProvider(dim), hnsw_seed=seed, m=m,
                      ef_construction=ef_construction)
    profiles: List[SpatialActivityProfile] = [synth.profile() for _ in range(n)]

    start = time.perf_counter()
    for i, profile in enumerate(tqdm(profiles, desc='inserting', disable=not progress)):
        bank.add_memory(f"referent {i}", f"query {i}", f"response {i}", ResponseSource.static(), profile)
    insert_s = time.perf_counter() - start
    logger.info(f"Inserted {n} synthetic memories in {insert_s:.2f} s")

    lats = np.array([p.geo.lat for p in profiles])
    lons = np.array([p.geo.lon for p in profiles])
    tods = np.array([p.tod.seconds_since_local_midnight for p in profiles])
    vectors = np.vstack([p.descriptor.values for p in profiles])

    hybrid_s: List[float] = []
    brute_s: List[float] = []
    candidates: List[int] = []
    recalls: List[float] = []
    exact = 0
    for _ in tqdm(range(lookups), desc='looking up', disable=not progress):
        lookup = synth.profile()

        start = time.perf_counter()
        hybrid = bank.candidate_retrieve(lookup, k, radius_m, tod_window_s)
        hybrid_s.append(time.perf_counter() - start)

        start = time.perf_counter()
        _brute_force(lats, lons, tods, vectors, lookup, k, radius_m, tod_window_s)
        brute_s.append(time.perf_counter() - start)

        oracle = bank.exhaustive_retrieve(lookup, n, radius_m, tod_window_s)
        candidates.append(len(oracle))
        oracle_ids = [rsam.id for rsam, _ in oracle[:k]]
        hybrid_ids = [rsam.id for rsam, _ in hybrid]
        exact += int(hybrid_ids == oracle_ids)
        if oracle_ids:
            recalls.append(len(set(hybrid_ids) & set(oracle_ids)) / len(oracle_ids))

    return BenchReport(
        n=n, dim=dim, seed=seed, k=k, lookups=lookups,
        mean_candidates=float(np.mean(candidates)) if candidates else 0.0,
        max_candidates=max(candidates, default=0),
        recall_at_k=float(np.mean(recalls)) if recalls else 1.0,
        exact_matches=exact,
        insert_per_s=n / insert_s if insert_s > 0 else float('inf'),
        hybrid_mean_ms=float(np.mean(hybrid_s)) * 1000.0 if hybrid_s else 0.0,
        hybrid_p95_ms=_percentile_ms(hybrid_s, 95),
        brute_mean_ms=float(np.mean(brute_s)) * 1000.0 if brute_s else 0.0,
        brute_p95_ms=_percentile_ms(brute_s, 95),
    )
