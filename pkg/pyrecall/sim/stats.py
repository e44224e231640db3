import json
from typing import Any, Dict, List, Sequence

import attr
import pandas as pd

from ..store import event_log
from ..store.event_log import Event

UNTAGGED = 'untagged'


@attr.s(frozen=True, kw_only=True)
class SessionStats:
    frames: int = attr.ib(default=0)
    queries: int = attr.ib(default=0)
    recalls: int = attr.ib(default=0)
    refreshed: int = attr.ib(default=0)
    dismissed: List[int] = attr.ib(factory=list)
    per_use_case: Dict[str, Dict[str, int]] = attr.ib(factory=dict)

    @property
    def proactive_ratio(self) -> float:
        total = self.recalls + self.queries
        return self.recalls / total if total else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'frames': self.frames,
            'queries': self.queries,
            'recalls': self.recalls,
            'proactive_ratio': round(self.proactive_ratio, 4),
            'refreshed': self.refreshed,
            'dismissed': list(self.dismissed),
            'per_use_case': {tag: dict(counts) for tag, counts in sorted(self.per_use_case.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)

    def to_frame(self) -> pd.DataFrame:
        ''' One row per use case with its queries, recalls and proactive ratio '''
        rows = [
            {'use_case': tag, 'queries': counts['queries'], 'recalls': counts['recalls']}
            for tag, counts in sorted(self.per_use_case.items())
        ]
        frame = pd.DataFrame(rows, columns=['use_case', 'queries', 'recalls'])
        total = frame['queries'] + frame['recalls']
        frame['proactive_ratio'] = (frame['recalls'] / total.where(total > 0)).fillna(0.0)
        return frame.set_index('use_case')


def stats_from_events(events: Sequence[Event], frames: int = 0, since: int = 0) -> SessionStats:
    '''
    Fold an event log into statistics. Only events from position ``since`` on are counted; earlier
    ones still supply the use-case tags of the memories they created.
    '''
    tags: Dict[int, str] = {}
    queries = recalls = refreshed = 0
    dismissed: List[int] = []
    per_use_case: Dict[str, Dict[str, int]] = {}

    for position, event in enumerate(events):
        kind, memory_id = event['ev'], int(event['id'])
        if kind == event_log.ADD:
            tags[memory_id] = event.get('tag') or UNTAGGED
        if position < since:
            continue
        tag = tags.get(memory_id, UNTAGGED)
        if kind == event_log.ADD:
            queries += 1
            per_use_case.setdefault(tag, {'queries': 0, 'recalls': 0})['queries'] += 1
        elif kind == event_log.RECALL:
            recalls += 1
            refreshed += int(bool(event.get('refreshed')))
            per_use_case.setdefault(tag, {'queries': 0, 'recalls': 0})['recalls'] += 1
        elif kind == event_log.DISMISS:
            dismissed.append(memory_id)

    return SessionStats(frames=frames, queries=queries, recalls=recalls, refreshed=refreshed,
                        dismissed=sorted(dismissed), per_use_case=per_use_case)
