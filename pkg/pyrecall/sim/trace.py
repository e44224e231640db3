"""
Trace files: a recorded lifelog, one JSON object per line.

The first line is the header ``{"schema": "pyrecall-trace", "version": 1}``. Every following line is a
frame::

    {"ts": 1741006200, "tz_min": -300, "lat": 47.6097, "lon": -122.3331, "acc_m": 8,
     "scene": "entrance hallway", "activity": "preparing to commute",
     "detections": [{"label": "door", "conf": 0.92}],
     "query": {"referent": "door", "text": "what is the weather like today",
               "response": "...", "source": "live:https://...", "tag": "A1"}}

``query`` is present only on frames where the user asked something. Timestamps never decrease.
Blank lines are ignored.
"""
import json
from typing import Any, Dict, List, Optional

from ..core import GeoPoint, Timestamp
from ..exceptions import TraceParseError
from ..recall.frame import Detection, FrameObservation, FrameQuery
from ..store.memory import ResponseSource

SCHEMA = 'pyrecall-trace'
SCHEMA_VERSION = 1


def _parse_query(record: Any) -> Optional[FrameQuery]:
    if record is None:
        return None
    if not isinstance(record, dict):
        raise ValueError("query must be an object")
    source = ResponseSource.parse(record.get('source', 'static'))
    # only live answers can be fetched when the trace leaves them out
    if record.get('response') is None and not source.is_live:
        raise ValueError("a static query needs a response")
    return FrameQuery(
        referent_label=record['referent'],
        query_text=record['text'],
        response_text=record.get('response'),
        response_source=source,
        tag=record.get('tag'),
    )


def parse_frame(record: Dict[str, Any]) -> FrameObservation:
    detections = record.get('detections') or []
    if not isinstance(detections, list):
        raise ValueError("detections must be a list")
    return FrameObservation(
        ts=Timestamp(epoch_s=record['ts'], tz_offset_min=record.get('tz_min', 0)),
        geo=GeoPoint(lat=record['lat'], lon=record['lon'], accuracy_m=record.get('acc_m', 0.0)),
        detections=[Detection(d['label'], d['conf']) for d in detections],
        scene_text=record['scene'],
        activity_text=record['activity'],
        query=_parse_query(record.get('query')),
    )


def _check_header(line: str) -> None:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as ex:
        raise TraceParseError(f"invalid JSON header ({ex.msg})", 1) from ex
    if not isinstance(header, dict) or header.get('schema') != SCHEMA:
        raise TraceParseError(f"first line must be the {SCHEMA} header", 1)
    if header.get('version') != SCHEMA_VERSION:
        raise TraceParseError(f"unsupported trace version {header.get('version')!r}", 1)


def parse_trace(lines: List[str]) -> List[FrameObservation]:
    frames: List[FrameObservation] = []
    header_seen = False
    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if not header_seen:
            _check_header(line)
            header_seen = True
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as ex:
            raise TraceParseError(f"invalid JSON ({ex.msg})", line_number) from ex
        if not isinstance(record, dict):
            raise TraceParseError("frames must be JSON objects", line_number)
        try:
            frame = parse_frame(record)
        except KeyError as ex:
            raise TraceParseError(f"missing field {ex}", line_number) from ex
        except (TypeError, ValueError) as ex:
            raise TraceParseError(str(ex), line_number) from ex
        if frames and frame.ts < frames[-1].ts:
            raise TraceParseError(
                f"timestamp {frame.ts.epoch_s} precedes the previous frame's {frames[-1].ts.epoch_s}", line_number
            )
        frames.append(frame)
    return frames


def read_trace(path: str) -> List[FrameObservation]:
    try:
        with open(path, encoding='utf-8') as handle:
            lines = handle.read().splitlines()
    except OSError as ex:
        raise TraceParseError(f"cannot read trace '{path}': {ex}") from ex
    except UnicodeDecodeError as ex:
        raise TraceParseError(f"trace '{path}' is not valid UTF-8") from ex
    return parse_trace(lines)
