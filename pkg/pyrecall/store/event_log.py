"""
On-disk format of a memory bank.

A bank directory holds two files:

``bank.manifest``
    ``key=value`` lines: ``version``, ``dim``, ``hnsw_seed`` and ``created`` (ISO 8601).
``bank.log``
    One JSON object per line, each an ``ADD``, ``DISMISS``, ``UPDATE``, ``RECALL`` or
    ``SET_INTERVAL`` event. Embeddings are never written; they are recomputed from the stored text
    when the log is replayed, so the embedding provider is part of the format.
"""
import datetime
import json
import os
from typing import Any, Dict, Iterable, List, Optional

import attr

from ..datahelpers.validators import check_greater_zero
from ..exceptions import CorruptLogError, PersistenceFailureError, UnknownBankError, VersionMismatchError
from ..utils import logger
from . import file_utils

FORMAT_VERSION = 1
MANIFEST_FILENAME = 'bank.manifest'
LOG_FILENAME = 'bank.log'

ADD = 'ADD'
DISMISS = 'DISMISS'
UPDATE = 'UPDATE'
RECALL = 'RECALL'
SET_INTERVAL = 'SET_INTERVAL'

EVENT_KINDS = (ADD, DISMISS, UPDATE, RECALL, SET_INTERVAL)

_REQUIRED_FIELDS = {
    ADD: ('id', 'referent', 'query', 'response', 'source', 'profile'),
    DISMISS: ('id',),
    UPDATE: ('id', 'response'),
    RECALL: ('id', 'epoch_s', 'tz_min', 'scores', 'refreshed'),
    SET_INTERVAL: ('id', 'days'),
}

Event = Dict[str, Any]


def _now_iso() -> str:
    return datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0).isoformat()


@attr.s(frozen=True, kw_only=True)
class Manifest:
    dim: int = attr.ib(converter=int, validator=check_greater_zero)
    hnsw_seed: int = attr.ib(converter=int)
    version: int = attr.ib(default=FORMAT_VERSION, converter=int)
    created: str = attr.ib(factory=_now_iso)

    def to_text(self) -> str:
        return (
            f"version={self.version}\n"
            f"dim={self.dim}\n"
            f"hnsw_seed={self.hnsw_seed}\n"
            f"created={self.created}\n"
        )

    @classmethod
    def parse(cls, text: str) -> 'Manifest':
        values: Dict[str, str] = {}
        for line_number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            key, sep, value = line.partition('=')
            if not sep:
                raise CorruptLogError(f"{MANIFEST_FILENAME} entry '{line}' is not key=value", line_number)
            values[key.strip()] = value.strip()

        missing = [key for key in ('version', 'dim', 'hnsw_seed') if key not in values]
        if missing:
            raise CorruptLogError(f"{MANIFEST_FILENAME} lacks {', '.join(missing)}")
        try:
            version = int(values['version'])
        except ValueError as ex:
            raise CorruptLogError(f"{MANIFEST_FILENAME} version '{values['version']}' is not an integer") from ex
        if version != FORMAT_VERSION:
            raise VersionMismatchError(f"Bank format version {version} is not supported (expected {FORMAT_VERSION})")
        try:
            return cls(version=version, dim=values['dim'], hnsw_seed=values['hnsw_seed'],
                       created=values.get('created', ''))
        except ValueError as ex:
            raise CorruptLogError(f"{MANIFEST_FILENAME} is malformed: {ex}") from ex


def encode_event(event: Event) -> str:
    return json.dumps(event, ensure_ascii=False, separators=(',', ':'))


def decode_event(line: str, line_number: int) -> Event:
    try:
        event = json.loads(line)
    except json.JSONDecodeError as ex:
        raise CorruptLogError(f"{LOG_FILENAME} holds invalid JSON ({ex.msg})", line_number) from ex
    if not isinstance(event, dict):
        raise CorruptLogError(f"{LOG_FILENAME} entries must be JSON objects", line_number)
    kind = event.get('ev')
    if kind not in EVENT_KINDS:
        raise CorruptLogError(f"{LOG_FILENAME} holds unknown event kind {kind!r}", line_number)
    missing = [field for field in _REQUIRED_FIELDS[kind] if field not in event]
    if missing:
        raise CorruptLogError(f"{kind} event lacks {', '.join(missing)}", line_number)
    return event


def decode_events(lines: Iterable[str]) -> List[Event]:
    ''' Parse log lines, tolerating only the empty remainder after the final newline '''
    lines = list(lines)
    if lines and lines[-1] == '':
        lines = lines[:-1]
    return [decode_event(line, line_number) for line_number, line in enumerate(lines, start=1)]


class EventLog:
    """
    Append-only event log plus manifest inside one bank directory. Every ``OSError`` surfaces as a
    :class:`PersistenceFailureError`.
    """

    def __init__(self, directory: str) -> None:
        self.directory = directory
        self.manifest_path = os.path.join(directory, MANIFEST_FILENAME)
        self.log_path = os.path.join(directory, LOG_FILENAME)

    def exists(self) -> bool:
        return os.path.isfile(self.manifest_path)

    def create(self, manifest: Manifest, events: Optional[List[Event]] = None) -> None:
        ''' Write a fresh manifest and log, replacing any bank already in the directory '''
        try:
            file_utils.mkdir(self.directory)
            body = ''.join(encode_event(event) + '\n' for event in events or [])
            file_utils.write_text(self.directory, LOG_FILENAME, body)
            file_utils.write_text(self.directory, MANIFEST_FILENAME, manifest.to_text())
        except OSError as ex:
            raise PersistenceFailureError(f"Cannot write bank at '{self.directory}': {ex}") from ex
        logger.info(f"Wrote bank manifest and {len(events or [])} events to {self.directory}")

    def append(self, events: List[Event]) -> None:
        try:
            file_utils.append_lines(self.log_path, [encode_event(event) for event in events])
        except OSError as ex:
            raise PersistenceFailureError(f"Cannot append to '{self.log_path}': {ex}") from ex

    def read_manifest(self) -> Manifest:
        if not self.exists():
            raise UnknownBankError(f"No bank found at '{self.directory}'")
        try:
            with open(self.manifest_path, encoding='utf-8') as handle:
                text = handle.read()
        except OSError as ex:
            raise PersistenceFailureError(f"Cannot read '{self.manifest_path}': {ex}") from ex
        return Manifest.parse(text)

    def read_events(self) -> List[Event]:
        if not os.path.isfile(self.log_path):
            return []
        try:
            lines = file_utils.read_lines(self.log_path)
        except OSError as ex:
            raise PersistenceFailureError(f"Cannot read '{self.log_path}': {ex}") from ex
        except UnicodeDecodeError as ex:
            raise CorruptLogError(f"{LOG_FILENAME} is not valid UTF-8") from ex
        return decode_events(lines)
