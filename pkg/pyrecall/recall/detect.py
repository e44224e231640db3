"""
Where referent detections come from.

Gate two only ever sees labeled detections with confidences. A :class:`ReferentDetector` produces them
for a frame; the shipped :class:`TraceDetector` just reads the ones recorded in the trace. When the
detector is unsure (confidence under the configured threshold) an optional :class:`ReferentVerifier`
may be asked for a second opinion on the one referent the memory is anchored to.
"""
import abc
from typing import Mapping, Optional, Sequence

from .frame import Detection, FrameObservation


class ReferentDetector(abc.ABC):
    @abc.abstractmethod
    def detect(self, frame: FrameObservation) -> Sequence[Detection]:
        raise NotImplementedError


class TraceDetector(ReferentDetector):
    def detect(self, frame: FrameObservation) -> Sequence[Detection]:
        return frame.detections


class ReferentVerifier(abc.ABC):
    @abc.abstractmethod
    def confirm(self, frame: FrameObservation, referent_label: str) -> Optional[float]:
        '''
        Confidence in [0, 1] that ``referent_label`` is visible in ``frame``, or ``None`` when the
        verifier cannot tell.
        '''
        raise NotImplementedError


class FixedVerifier(ReferentVerifier):
    """ Answers from a fixed label to confidence table, for replaying recorded verifier outputs """

    def __init__(self, confidences: Mapping[str, float]) -> None:
        self.confidences = {label.lower(): float(conf) for label, conf in confidences.items()}

    def confirm(self, frame: FrameObservation, referent_label: str) -> Optional[float]:
        return self.confidences.get(referent_label.lower())
