"""
The proactive loop: for each observed frame, find the memories whose context the user is back in and
resurface the ones that are due.
"""
from typing import Collection, List, Optional, Tuple

import attr

from ..core import Timestamp, time_of_day
from ..store.bank import MemoryBank
from ..store.memory import Rsam
from ..utils import logger
from .config import RecallConfig
from .detect import ReferentDetector, ReferentVerifier
from .frame import FrameObservation
from .gates import GateScores, verify_gates
from .live import LiveSource, NullLiveSource, fetch_all
from .scheduler import is_due


@attr.s(frozen=True, kw_only=True)
class RecallEvent:
    rsam_id: int = attr.ib()
    ts: Timestamp = attr.ib()
    scores: GateScores = attr.ib()
    refreshed: bool = attr.ib()
    referent_label: str = attr.ib()
    response_text: str = attr.ib()

    def line(self) -> str:
        return f"RECALL id={self.rsam_id} referent={self.referent_label} score={self.scores.combined:.4f}"

    def explain(self, rsam: Rsam) -> str:
        '''
        Why the memory came back, along the space, time and activity dimensions.
        '''
        minutes_apart = round(self.scores.tod_s / 60)
        return (
            f"space: {rsam.profile.scene_text} ({self.scores.geo_m:.0f} m from where it was asked); "
            f"time: {time_of_day(self.ts)} now, asked at {rsam.profile.tod} ({minutes_apart} min apart); "
            f"activity: {rsam.profile.activity_text} (similarity {self.scores.semantic_sim:.2f})"
        )


def proactive_step(bank: MemoryBank, frame: FrameObservation, cfg: RecallConfig,
                   live_source: Optional[LiveSource] = None, detector: Optional[ReferentDetector] = None,
                   verifier: Optional[ReferentVerifier] = None,
                   exclude: Collection[int] = ()) -> List[RecallEvent]:
    '''
    Resurface every due memory whose context ``frame`` matches, best match first.

    Live-feed memories are refreshed concurrently before the recalls are committed; a failed refresh
    resurfaces the stored answer with ``refreshed=False``. Ids in ``exclude`` are skipped, which keeps
    a memory from resurfacing on the very frame that created it.
    '''
    if not cfg.proactive or bank.live_count == 0:
        return []

    profile = frame.profile(bank.provider)
    matches = bank.candidate_retrieve(profile, cfg.k, cfg.effective_radius_m(frame.geo), cfg.tod_window_s)

    survivors: List[Tuple[Rsam, GateScores]] = []
    for rsam, _ in matches:
        if rsam.id in exclude or not is_due(rsam, frame.ts):
            continue
        scores = verify_gates(rsam, frame, cfg, bank.provider, detector=detector, verifier=verifier,
                              frame_descriptor=profile.descriptor)
        if scores is not None:
            survivors.append((rsam, scores))
    if not survivors:
        return []
    survivors.sort(key=lambda pair: (-pair[1].combined, pair[0].id))

    jobs = [(rsam.id, rsam.response_source.url, rsam.query_text)
            for rsam, _ in survivors if rsam.response_source.url is not None]
    fresh = fetch_all(live_source or NullLiveSource(), jobs)

    events = []
    for rsam, scores in survivors:
        text = fresh.get(rsam.id)
        bank.record_recall(rsam.id, frame.ts, scores.to_record(), refreshed=text is not None, response_text=text)
        events.append(RecallEvent(rsam_id=rsam.id, ts=frame.ts, scores=scores, refreshed=text is not None,
                                  referent_label=rsam.referent_label, response_text=text or rsam.response_text))
        logger.info(f"Recalled memory {rsam.id} ({rsam.query_text}) with score {scores.combined:.4f}")
    return events
