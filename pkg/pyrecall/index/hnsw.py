"""
Hierarchical navigable small world graph for approximate nearest neighbor search over unit embeddings.

Distance is cosine distance, ``1 - dot(q, v)``. Vectors live in one contiguous numpy matrix so every
hop of the graph walk scores all unvisited neighbors with a single matrix product.

Removal is soft: a removed node keeps its edges and is still walked through, but never returned. Once
more than a quarter of all nodes are tombstones the graph is rebuilt from the live nodes in their
original insertion order with a fresh generator from the same seed, so the result is identical to an
index that only ever saw the survivors.
"""
import heapq
from typing import Any, Dict, List, Optional, Set, Tuple

import numpy as np

from ..embed.embedding import Embedding, check_dimension
from ..exceptions import DimensionMismatchError, DuplicateIdError, EmptyIndexError, UnknownIdError
from ..utils import logger

DEFAULT_M = 16
DEFAULT_EF_CONSTRUCTION = 100
DEFAULT_EF_SEARCH = 64
DEFAULT_SEED = 42
REBUILD_TOMBSTONE_FRACTION = 0.25

_INITIAL_CAPACITY = 64


class HnswIndex:
    """
    Seeded HNSW index keyed by integer memory ids.

    ``m`` bounds the neighbor lists on layers above zero, ``m0`` (default ``2 * m``) on layer zero.
    Levels are drawn as ``floor(-ln(U) * mL)`` with ``mL = 1 / ln(m)`` from ``np.random.default_rng(seed)``.
    Mutations must be serialized by the owner; searches are read-only.
    """

    def __init__(self, dim: int, m: int = DEFAULT_M, ef_construction: int = DEFAULT_EF_CONSTRUCTION,
                 ef_search: int = DEFAULT_EF_SEARCH, seed: int = DEFAULT_SEED, m0: Optional[int] = None,
                 debug: bool = False) -> None:
        if dim <= 0:
            raise ValueError(f"dim must be greater than zero, not {dim}")
        if m < 2:
            raise ValueError(f"m must be at least 2, not {m}")
        if ef_construction <= 0 or ef_search <= 0:
            raise ValueError("ef_construction and ef_search must be greater than zero")
        self.dim = dim
        self.m = m
        self.m0 = 2 * m if m0 is None else m0
        self.ef_construction = ef_construction
        self.ef_search = ef_search
        self.seed = seed
        self.level_mult = 1 / np.log(m)
        self.debug = debug
        self._reset()

    def _reset(self) -> None:
        self._rng = np.random.default_rng(self.seed)
        self._vectors = np.zeros((_INITIAL_CAPACITY, self.dim), dtype=np.float64)
        self._ids: List[int] = []
        self._slot_of: Dict[int, int] = {}
        self._levels: List[int] = []
        self._deleted: List[bool] = []
        # _layers[level][slot] is the neighbor list of slot on that level
        self._layers: List[Dict[int, List[int]]] = []
        self._entry: Optional[int] = None
        self._tombstones = 0

    def __len__(self) -> int:
        return len(self._ids) - self._tombstones

    def __contains__(self, memory_id: object) -> bool:
        slot = self._slot_of.get(memory_id)  # type: ignore
        return slot is not None and not self._deleted[slot]

    @property
    def size(self) -> int:
        return len(self)

    @property
    def tombstones(self) -> int:
        return self._tombstones

    @property
    def entry_point(self) -> Optional[int]:
        return None if self._entry is None else self._ids[self._entry]

    def level_of(self, memory_id: int) -> int:
        return self._levels[self._live_slot(memory_id)]

    def neighbors(self, memory_id: int, level: int = 0) -> List[int]:
        slot = self._live_slot(memory_id)
        return [self._ids[n] for n in self._layers[level].get(slot, [])]

    def ids(self) -> List[int]:
        ''' Live ids in insertion order '''
        return [memory_id for slot, memory_id in enumerate(self._ids) if not self._deleted[slot]]

    def snapshot(self) -> Dict[str, Any]:
        '''
        The complete graph expressed in ids, for comparing two indices built from the same sequence.
        '''
        return {
            'entry_point': self.entry_point,
            'levels': {self._ids[slot]: level for slot, level in enumerate(self._levels)},
            'deleted': sorted(self._ids[slot] for slot, gone in enumerate(self._deleted) if gone),
            'layers': [
                {self._ids[slot]: tuple(self._ids[n] for n in neighbors) for slot, neighbors in layer.items()}
                for layer in self._layers
            ],
        }

    def insert(self, memory_id: int, embedding: Embedding) -> None:
        if memory_id in self._slot_of:
            raise DuplicateIdError(f"Id {memory_id} is already indexed")
        check_dimension(self.dim, embedding)
        self._insert(memory_id, embedding.values)
        if self.debug:
            self.audit()

    def search(self, query: Embedding, k: int, ef: Optional[int] = None) -> List[Tuple[int, float]]:
        '''
        Approximate k nearest live neighbors of ``query`` as ``(id, cosine distance)`` pairs in ascending
        distance. ``ef`` defaults to ``ef_search`` and is raised to ``k`` when smaller.
        '''
        if k <= 0:
            raise ValueError(f"k must be greater than zero, not {k}")
        if len(self) == 0 or self._entry is None:
            raise EmptyIndexError("Cannot search an empty index")
        check_dimension(self.dim, query)
        ef = max(ef if ef is not None else self.ef_search, k)

        q = query.values
        entry = self._entry
        nearest = [(float(self._distances(q, [entry])[0]), entry)]
        for level in range(self._levels[entry], 0, -1):
            nearest = self._search_layer(q, nearest, level, 1, allow_deleted=True)
        found = self._search_layer(q, nearest, 0, ef, allow_deleted=False)
        return [(self._ids[slot], min(2.0, max(0.0, dist))) for dist, slot in found[:k]]

    def remove(self, memory_id: int) -> None:
        slot = self._live_slot(memory_id)
        self._deleted[slot] = True
        self._tombstones += 1
        if slot == self._entry:
            self._entry = self._highest_live_slot()
        logger.debug(f"HNSW tombstoned {memory_id}, {self._tombstones} of {len(self._ids)} nodes are tombstones")

        if self._tombstones > REBUILD_TOMBSTONE_FRACTION * len(self._ids):
            self.rebuild()
        elif self.debug:
            self.audit()

    def rebuild(self) -> None:
        ''' Re-insert every live node in insertion order into a fresh graph seeded like the original '''
        survivors = [(memory_id, self._vectors[slot].copy())
                     for slot, memory_id in enumerate(self._ids) if not self._deleted[slot]]
        logger.debug(f"HNSW rebuild dropping {self._tombstones} tombstones, keeping {len(survivors)} nodes")
        self._reset()
        for memory_id, vector in survivors:
            self._insert(memory_id, vector)
        if self.debug:
            self.audit()

    def audit(self) -> None:
        '''
        Raise ``AssertionError`` when a degree bound, layer membership or the entry point is wrong.
        '''
        n = len(self._ids)
        for level, layer in enumerate(self._layers):
            bound = self.m0 if level == 0 else self.m
            for slot, neighbors in layer.items():
                if self._levels[slot] < level:
                    raise AssertionError(f"{self._ids[slot]} listed on layer {level} above its level")
                if len(neighbors) > bound:
                    raise AssertionError(f"{self._ids[slot]} has {len(neighbors)} > {bound} neighbors on {level}")
                for neighbor in neighbors:
                    if neighbor == slot or neighbor not in layer:
                        raise AssertionError(f"{self._ids[slot]} links to a node missing from layer {level}")
        for slot in range(n):
            for level in range(self._levels[slot] + 1):
                if slot not in self._layers[level]:
                    raise AssertionError(f"{self._ids[slot]} missing from layer {level}")
        if sum(self._deleted) != self._tombstones:
            raise AssertionError("tombstone count out of sync")
        live_levels = [self._levels[slot] for slot in range(n) if not self._deleted[slot]]
        if not live_levels:
            if self._entry is not None:
                raise AssertionError("entry point set on an index without live nodes")
            return
        if self._entry is None or self._deleted[self._entry]:
            raise AssertionError("entry point is missing or tombstoned")
        if self._levels[self._entry] != max(live_levels):
            raise AssertionError("entry point does not live on the top live layer")

    def _live_slot(self, memory_id: int) -> int:
        slot = self._slot_of.get(memory_id)
        if slot is None or self._deleted[slot]:
            raise UnknownIdError(f"Unknown id {memory_id}")
        return slot

    def _highest_live_slot(self) -> Optional[int]:
        best: Optional[int] = None
        for slot, level in enumerate(self._levels):
            if not self._deleted[slot] and (best is None or level > self._levels[best]):
                best = slot
        return best

    def _draw_level(self) -> int:
        # 1 - U lies in (0, 1], keeping the logarithm finite
        return int(-np.log(1.0 - self._rng.random()) * self.level_mult)

    def _store(self, vector: np.ndarray) -> int:
        slot = len(self._ids)
        if slot == self._vectors.shape[0]:
            grown = np.zeros((2 * slot, self.dim), dtype=np.float64)
            grown[:slot] = self._vectors
            self._vectors = grown
        self._vectors[slot] = vector
        return slot

    def _distances(self, q: np.ndarray, slots: List[int]) -> np.ndarray:
        # unclipped: rounding may leave values a hair outside [0, 2], results are clipped on the way out
        return 1.0 - self._vectors[slots] @ q

    def _insert(self, memory_id: int, vector: np.ndarray) -> None:
        if vector.shape[0] != self.dim:
            raise DimensionMismatchError(self.dim, vector.shape[0])
        level = self._draw_level()
        slot = self._store(vector)
        self._ids.append(memory_id)
        self._slot_of[memory_id] = slot
        self._levels.append(level)
        self._deleted.append(False)

        while len(self._layers) <= level:
            self._layers.append({})
        for lvl in range(level + 1):
            self._layers[lvl][slot] = []

        entry = self._entry
        if entry is None:
            self._entry = slot
            return

        nearest = [(float(self._distances(vector, [entry])[0]), entry)]
        for lvl in range(self._levels[entry], level, -1):
            nearest = self._search_layer(vector, nearest, lvl, 1, allow_deleted=True)

        for lvl in range(min(level, self._levels[entry]), -1, -1):
            bound = self.m0 if lvl == 0 else self.m
            candidates = self._search_layer(vector, nearest, lvl, self.ef_construction, allow_deleted=True)
            chosen = self._select_neighbors(candidates, bound)
            self._layers[lvl][slot] = [n for _, n in chosen]
            for dist, neighbor in chosen:
                self._link(neighbor, slot, dist, lvl, bound)
            nearest = candidates

        if level > self._levels[entry]:
            self._entry = slot

    def _link(self, node: int, added: int, dist: float, level: int, bound: int) -> None:
        neighbors = self._layers[level][node]
        if len(neighbors) < bound:
            neighbors.append(added)
            return
        dists = self._distances(self._vectors[node], neighbors).tolist()
        candidates = sorted(list(zip(dists, neighbors)) + [(dist, added)])
        self._layers[level][node] = [n for _, n in self._select_neighbors(candidates, bound)]

    def _select_neighbors(self, candidates: List[Tuple[float, int]], bound: int) -> List[Tuple[float, int]]:
        '''
        Keep a candidate only when it is closer to the new node than to every neighbor already kept.
        ``candidates`` must be sorted by ascending distance.
        '''
        if len(candidates) <= bound:
            return list(candidates)
        vectors = self._vectors[[slot for _, slot in candidates]]
        # distance from each candidate to its closest kept neighbor so far
        closest = np.full(len(candidates), np.inf)
        kept: List[int] = []
        for i, (dist, _) in enumerate(candidates):
            if closest[i] >= dist:
                kept.append(i)
                if len(kept) == bound:
                    break
                np.minimum(closest, 1.0 - vectors @ vectors[i], out=closest)
        return [candidates[i] for i in kept]

    def _search_layer(self, q: np.ndarray, entry_points: List[Tuple[float, int]], level: int, ef: int,
                      allow_deleted: bool) -> List[Tuple[float, int]]:
        '''
        Best-first walk of one layer returning up to ``ef`` (distance, slot) pairs, nearest first.
        Tombstones are walked through but only returned when ``allow_deleted`` is set.
        '''
        layer = self._layers[level]
        deleted = self._deleted
        visited: Set[int] = {slot for _, slot in entry_points}
        candidates = list(entry_points)
        heapq.heapify(candidates)
        # max-heap of the best results so far
        results = [(-dist, slot) for dist, slot in entry_points if allow_deleted or not deleted[slot]]
        heapq.heapify(results)
        while len(results) > ef:
            heapq.heappop(results)

        while candidates:
            dist, current = heapq.heappop(candidates)
            if len(results) >= ef and dist > -results[0][0]:
                break
            fresh = [n for n in layer.get(current, ()) if n not in visited]
            if not fresh:
                continue
            visited.update(fresh)
            dists = self._distances(q, fresh)
            if len(results) >= ef:
                # the worst kept distance only shrinks while this node is expanded
                close = np.flatnonzero(dists < -results[0][0])
                if not close.size:
                    continue
                scored = [(float(dists[i]), fresh[i]) for i in close.tolist()]
            else:
                scored = list(zip(dists.tolist(), fresh))
            for d, neighbor in scored:
                if len(results) < ef or d < -results[0][0]:
                    heapq.heappush(candidates, (d, neighbor))
                    if allow_deleted or not deleted[neighbor]:
                        heapq.heappush(results, (-d, neighbor))
                        if len(results) > ef:
                            heapq.heappop(results)

        return sorted((-neg, slot) for neg, slot in results)
