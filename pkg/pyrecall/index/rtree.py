"""
A three dimensional R-tree over (lat, lon, time-of-day) keys.

Points are stored as degenerate boxes in leaf nodes; internal nodes carry the minimum bounding box of
their children. Overflowing nodes are divided with Guttman's quadratic split and underfull nodes left
behind by a removal are dissolved and their points inserted again.

Latitude and longitude are plain box coordinates here. Converting a geodesic radius into a box is the
caller's job, as is re-checking exact distances on the returned candidates.
"""
import math
from typing import Dict, Iterator, List, Optional, Set, Tuple, Union

import attr

from ..datahelpers.validators import check_in_range
from ..exceptions import DuplicateIdError, IndexFailureError, InvalidRangeError, UnknownIdError
from ..utils import SECONDS_PER_DAY, logger

Point = Tuple[float, float, float]
Box = Tuple[Point, Point]

DEFAULT_MAX_ENTRIES = 8
DEFAULT_MIN_ENTRIES = 4


@attr.s(frozen=True, kw_only=True)
class SpatioTemporalKey:
    lat: float = attr.ib(converter=float, validator=check_in_range(-90, 90), metadata={"units": "deg"})
    lon: float = attr.ib(converter=float, validator=check_in_range(-180, 180), metadata={"units": "deg"})
    tod_s: int = attr.ib(converter=int, validator=check_in_range(0, SECONDS_PER_DAY - 1), metadata={"units": "s"})

    def as_point(self) -> Point:
        return (self.lat, self.lon, float(self.tod_s))


def _volume(box: Box) -> float:
    lo, hi = box
    return (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2])


def _margin(box: Box) -> float:
    lo, hi = box
    return (hi[0] - lo[0]) + (hi[1] - lo[1]) + (hi[2] - lo[2])


def _union(a: Box, b: Box) -> Box:
    return (
        (min(a[0][0], b[0][0]), min(a[0][1], b[0][1]), min(a[0][2], b[0][2])),
        (max(a[1][0], b[1][0]), max(a[1][1], b[1][1]), max(a[1][2], b[1][2])),
    )


def _union_all(boxes: List[Box]) -> Box:
    result = boxes[0]
    for box in boxes[1:]:
        result = _union(result, box)
    return result


def _enlargement(box: Box, added: Box) -> Tuple[float, float]:
    ''' Growth in volume, then in margin, needed for ``box`` to cover ``added`` '''
    grown = _union(box, added)
    return _volume(grown) - _volume(box), _margin(grown) - _margin(box)


def _contains(outer: Box, inner: Box) -> bool:
    return all(outer[0][d] <= inner[0][d] and inner[1][d] <= outer[1][d] for d in range(3))


def _intersects(a: Box, b: Box) -> bool:
    return all(a[0][d] <= b[1][d] and b[0][d] <= a[1][d] for d in range(3))


def _point_in(point: Point, box: Box) -> bool:
    return all(box[0][d] <= point[d] <= box[1][d] for d in range(3))


class _Node:
    __slots__ = ('leaf', 'entries', 'parent', 'box')

    def __init__(self, leaf: bool, entries: Optional[list] = None, parent: Optional['_Node'] = None) -> None:
        self.leaf = leaf
        # leaves hold (point, id) pairs, internal nodes hold child nodes
        self.entries: list = entries if entries is not None else []
        self.parent = parent
        self.box: Optional[Box] = None

    def entry_box(self, entry: Union[Tuple[Point, int], '_Node']) -> Box:
        if self.leaf:
            point = entry[0]  # type: ignore
            return (point, point)
        return entry.box  # type: ignore

    def refresh(self) -> None:
        self.box = _union_all([self.entry_box(e) for e in self.entries]) if self.entries else None


class RTreeIndex:
    """
    In-memory R-tree mapping memory ids to spatiotemporal keys.

    Mutations must be serialized by the owner; concurrent range queries are safe while no mutation
    is in progress. With ``debug=True`` the full structure is audited after every mutation.
    """

    def __init__(self, max_entries: int = DEFAULT_MAX_ENTRIES, min_entries: int = DEFAULT_MIN_ENTRIES,
                 debug: bool = False) -> None:
        if max_entries < 2:
            raise ValueError(f"max_entries must be at least 2, not {max_entries}")
        if not 1 <= min_entries <= max_entries // 2:
            raise ValueError(f"min_entries must be between 1 and {max_entries // 2}, not {min_entries}")
        self.max_entries = max_entries
        self.min_entries = min_entries
        self.debug = debug
        self._root = _Node(leaf=True)
        self._keys: Dict[int, SpatioTemporalKey] = {}

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, memory_id: object) -> bool:
        return memory_id in self._keys

    @property
    def size(self) -> int:
        return len(self._keys)

    @property
    def root_is_leaf(self) -> bool:
        return self._root.leaf

    @property
    def height(self) -> int:
        height, node = 1, self._root
        while not node.leaf:
            node = node.entries[0]
            height += 1
        return height

    def leaf_count(self) -> int:
        return sum(1 for node in self._walk() if node.leaf)

    def key_of(self, memory_id: int) -> SpatioTemporalKey:
        try:
            return self._keys[memory_id]
        except KeyError as ex:
            raise UnknownIdError(f"Unknown id {memory_id}") from ex

    def insert(self, key: SpatioTemporalKey, memory_id: int) -> None:
        if memory_id in self._keys:
            raise DuplicateIdError(f"Id {memory_id} is already indexed")
        self._insert_point(key.as_point(), memory_id)
        self._keys[memory_id] = key
        if self.debug:
            self.audit()

    def remove(self, memory_id: int) -> None:
        if memory_id not in self._keys:
            raise UnknownIdError(f"Unknown id {memory_id}")
        point = self._keys[memory_id].as_point()
        leaf = self._find_leaf(point, memory_id)
        if leaf is None:
            raise IndexFailureError(f"Id {memory_id} is registered but missing from the tree")
        leaf.entries = [entry for entry in leaf.entries if entry[1] != memory_id]
        del self._keys[memory_id]
        self._condense(leaf)
        if self.debug:
            self.audit()

    def range(self, lat_lo: float, lat_hi: float, lon_lo: float, lon_hi: float,
              tod_lo: float, tod_hi: float) -> Set[int]:
        '''
        Ids whose keys fall inside the closed box. ``tod_lo > tod_hi`` selects a window wrapping
        midnight, answered as two sub-queries.
        '''
        found: Set[int] = set()
        for box in self._query_boxes(lat_lo, lat_hi, lon_lo, lon_hi, tod_lo, tod_hi):
            self._search(box, found, exact=True)
        return found

    def leaf_candidates(self, lat_lo: float, lat_hi: float, lon_lo: float, lon_hi: float,
                        tod_lo: float, tod_hi: float) -> Set[int]:
        '''
        Every id held by a leaf whose box meets the query box: a superset of :meth:`range` that skips
        the per-point test, for callers that filter the candidates exactly afterwards.
        '''
        found: Set[int] = set()
        for box in self._query_boxes(lat_lo, lat_hi, lon_lo, lon_hi, tod_lo, tod_hi):
            self._search(box, found, exact=False)
        return found

    def audit(self) -> None:
        '''
        Walk the tree and raise ``AssertionError`` on any broken structural invariant: box containment,
        fill factors, uniform leaf depth, parent links and the id registry.
        '''
        seen: Set[int] = set()
        leaf_depths: Set[int] = set()
        stack: List[Tuple[_Node, int]] = [(self._root, 1)]
        if self._root.parent is not None:
            raise AssertionError("root has a parent")
        while stack:
            node, depth = stack.pop()
            if len(node.entries) > self.max_entries:
                raise AssertionError(f"node at depth {depth} holds {len(node.entries)} > {self.max_entries}")
            if node is not self._root and len(node.entries) < self.min_entries:
                raise AssertionError(f"node at depth {depth} holds {len(node.entries)} < {self.min_entries}")
            if not node.leaf and not node.entries:
                raise AssertionError("internal node without children")
            if node.entries:
                expected = _union_all([node.entry_box(e) for e in node.entries])
                if node.box is None or not _contains(node.box, expected):
                    raise AssertionError(f"node box {node.box} does not contain its entries {expected}")
            if node.leaf:
                leaf_depths.add(depth)
                for point, memory_id in node.entries:
                    if memory_id in seen:
                        raise AssertionError(f"id {memory_id} stored twice")
                    seen.add(memory_id)
                    if self._keys.get(memory_id) is None or self._keys[memory_id].as_point() != point:
                        raise AssertionError(f"id {memory_id} stored under a stale key")
            else:
                for child in node.entries:
                    if child.parent is not node:
                        raise AssertionError("broken parent link")
                    stack.append((child, depth + 1))
        if len(leaf_depths) > 1:
            raise AssertionError(f"leaves at several depths {sorted(leaf_depths)}")
        if seen != set(self._keys):
            raise AssertionError(f"{len(seen)} ids in the tree, {len(self._keys)} registered")

    def _walk(self) -> Iterator[_Node]:
        stack = [self._root]
        while stack:
            node = stack.pop()
            yield node
            if not node.leaf:
                stack.extend(node.entries)

    @staticmethod
    def _query_boxes(lat_lo: float, lat_hi: float, lon_lo: float, lon_hi: float,
                     tod_lo: float, tod_hi: float) -> List[Box]:
        bounds = (lat_lo, lat_hi, lon_lo, lon_hi, tod_lo, tod_hi)
        if not all(math.isfinite(b) for b in bounds):
            raise InvalidRangeError(f"Range bounds must be finite, got {bounds}")
        if lat_lo > lat_hi or lon_lo > lon_hi:
            raise InvalidRangeError(f"Inverted lat/lon range {bounds}")
        if lat_lo < -90 or lat_hi > 90 or lon_lo < -180 or lon_hi > 180:
            raise InvalidRangeError(f"lat/lon range {bounds} leaves the coordinate domain")
        if not (0 <= tod_lo <= SECONDS_PER_DAY and 0 <= tod_hi <= SECONDS_PER_DAY):
            raise InvalidRangeError(f"Time-of-day bounds must lie in [0, {SECONDS_PER_DAY}], got {bounds}")

        if tod_lo <= tod_hi:
            windows = [(tod_lo, tod_hi)]
        else:
            windows = [(tod_lo, float(SECONDS_PER_DAY)), (0.0, tod_hi)]
        return [((lat_lo, lon_lo, float(lo)), (lat_hi, lon_hi, float(hi))) for lo, hi in windows]

    def _search(self, box: Box, found: Set[int], exact: bool) -> None:
        if self._root.box is None or not _intersects(self._root.box, box):
            return
        (lat_lo, lon_lo, tod_lo), (lat_hi, lon_hi, tod_hi) = box
        inside: List[_Node] = []
        stack = [self._root]
        while stack:
            node = stack.pop()
            if node.leaf:
                if exact:
                    found.update(memory_id for (lat, lon, tod), memory_id in node.entries
                                 if lat_lo <= lat <= lat_hi and lon_lo <= lon <= lon_hi and tod_lo <= tod <= tod_hi)
                else:
                    found.update(memory_id for _, memory_id in node.entries)
                continue
            for child in node.entries:
                (c_lat_lo, c_lon_lo, c_tod_lo), (c_lat_hi, c_lon_hi, c_tod_hi) = child.box
                if c_lat_lo > lat_hi or c_lat_hi < lat_lo or c_lon_lo > lon_hi or c_lon_hi < lon_lo \
                        or c_tod_lo > tod_hi or c_tod_hi < tod_lo:
                    continue
                if lat_lo <= c_lat_lo and c_lat_hi <= lat_hi and lon_lo <= c_lon_lo and c_lon_hi <= lon_hi \
                        and tod_lo <= c_tod_lo and c_tod_hi <= tod_hi:
                    inside.append(child)
                else:
                    stack.append(child)
        # subtrees lying wholly inside the box need no per-point test
        while inside:
            node = inside.pop()
            if node.leaf:
                found.update(memory_id for _, memory_id in node.entries)
            else:
                inside.extend(node.entries)

    def _choose_leaf(self, point: Point) -> _Node:
        added = (point, point)
        node = self._root
        while not node.leaf:
            children = node.entries
            best = min(range(len(children)),
                       key=lambda i: (_enlargement(children[i].box, added), _volume(children[i].box), i))
            node = children[best]
        return node

    def _insert_point(self, point: Point, memory_id: int) -> None:
        leaf = self._choose_leaf(point)
        leaf.entries.append((point, memory_id))
        self._adjust(leaf)

    def _adjust(self, node: Optional[_Node]) -> None:
        while node is not None:
            if len(node.entries) > self.max_entries:
                sibling = self._split(node)
                parent = node.parent
                if parent is None:
                    self._root = _Node(leaf=False, entries=[node, sibling])
                    node.parent = sibling.parent = self._root
                    self._root.refresh()
                    logger.debug(f"R-tree root split, height is now {self.height}")
                    return
                sibling.parent = parent
                parent.entries.append(sibling)
            else:
                node.refresh()
            node = node.parent

    def _split(self, node: _Node) -> _Node:
        entries = node.entries
        boxes = [node.entry_box(e) for e in entries]
        seed_a, seed_b = self._pick_seeds(boxes)

        groups: Tuple[List[int], List[int]] = ([seed_a], [seed_b])
        covers = [boxes[seed_a], boxes[seed_b]]
        remaining = [i for i in range(len(entries)) if i not in (seed_a, seed_b)]

        while remaining:
            for g in (0, 1):
                if len(groups[g]) + len(remaining) == self.min_entries:
                    groups[g].extend(remaining)
                    remaining = []
                    break
            if not remaining:
                break
            # pick the entry with the strongest preference for one group
            costs = [(_enlargement(covers[0], boxes[i])[0], _enlargement(covers[1], boxes[i])[0], i)
                     for i in remaining]
            cost_a, cost_b, chosen = max(costs, key=lambda c: (abs(c[0] - c[1]), -c[2]))
            if cost_a != cost_b:
                target = 0 if cost_a < cost_b else 1
            elif _volume(covers[0]) != _volume(covers[1]):
                target = 0 if _volume(covers[0]) < _volume(covers[1]) else 1
            else:
                target = 0 if len(groups[0]) <= len(groups[1]) else 1
            groups[target].append(chosen)
            covers[target] = _union(covers[target], boxes[chosen])
            remaining.remove(chosen)

        node.entries = [entries[i] for i in groups[0]]
        sibling = _Node(leaf=node.leaf, entries=[entries[i] for i in groups[1]])
        if not node.leaf:
            for child in sibling.entries:
                child.parent = sibling
        node.refresh()
        sibling.refresh()
        return sibling

    @staticmethod
    def _pick_seeds(boxes: List[Box]) -> Tuple[int, int]:
        ''' The pair of entries that would waste the most volume if grouped together '''
        best, best_waste = (0, 1), (-math.inf, -math.inf)
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                combined = _union(boxes[i], boxes[j])
                waste = (_volume(combined) - _volume(boxes[i]) - _volume(boxes[j]), _margin(combined))
                if waste > best_waste:
                    best, best_waste = (i, j), waste
        return best

    def _find_leaf(self, point: Point, memory_id: int) -> Optional[_Node]:
        if self._root.box is None:
            return None
        stack = [self._root]
        while stack:
            node = stack.pop()
            if node.leaf:
                if any(entry[1] == memory_id for entry in node.entries):
                    return node
            else:
                stack.extend(child for child in node.entries if _point_in(point, child.box))
        return None

    def _condense(self, node: _Node) -> None:
        orphans: List[Tuple[Point, int]] = []
        while node.parent is not None:
            parent = node.parent
            if len(node.entries) < self.min_entries:
                parent.entries = [child for child in parent.entries if child is not node]
                orphans.extend(self._points_below(node))
            else:
                node.refresh()
            node = parent
        node.refresh()

        while not self._root.leaf and len(self._root.entries) == 1:
            self._root = self._root.entries[0]
            self._root.parent = None
        if not self._root.leaf and not self._root.entries:
            self._root = _Node(leaf=True)

        if orphans:
            logger.debug(f"R-tree condense reinserting {len(orphans)} entries")
        for point, memory_id in orphans:
            self._insert_point(point, memory_id)

    @staticmethod
    def _points_below(node: _Node) -> List[Tuple[Point, int]]:
        points: List[Tuple[Point, int]] = []
        stack = [node]
        while stack:
            current = stack.pop()
            if current.leaf:
                points.extend(current.entries)
            else:
                stack.extend(current.entries)
        return points
