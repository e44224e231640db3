"""
Three gate context verification.

A memory may only resurface when, in this order:

1. the frame is within the retrieval radius and the time-of-day window of the memory's context,
2. the memory's referent is visible with enough confidence, and
3. the frame's scene and activity descriptor is close enough to the memory's.

Evaluation stops at the first failing gate, so no embedding is computed for a frame that is in the
wrong place or at the wrong time. Passing memories are ranked by the unweighted mean of the three
normalized dimension scores.
"""
from typing import Any, Dict, Optional

import attr

from ..core import circular_diff_s, haversine_m, time_of_day
from ..embed.embedding import Embedding, cosine
from ..embed.providers import EmbeddingProvider
from ..exceptions import EmptyTextError
from ..store.memory import Rsam, descriptor_text
from ..utils import logger
from .config import RecallConfig
from .detect import ReferentDetector, ReferentVerifier, TraceDetector
from .frame import FrameObservation

GATE_SPATIOTEMPORAL = 'spatiotemporal'
GATE_REFERENT = 'referent'
GATE_SEMANTIC = 'semantic'


def combine(geo_score: float, tod_score: float, semantic_score: float) -> float:
    return (geo_score + tod_score + semantic_score) / 3


@attr.s(frozen=True, kw_only=True)
class GateScores:
    geo_m: float = attr.ib(converter=float, metadata={"units": "m"})
    tod_s: float = attr.ib(converter=float, metadata={"units": "s"})
    referent_sim: float = attr.ib(converter=float)
    semantic_sim: float = attr.ib(converter=float)
    combined: float = attr.ib(converter=float)

    @classmethod
    def measure(cls, geo_m: float, tod_s: float, referent_sim: float, semantic_sim: float,
                radius_m: float, window_s: float) -> 'GateScores':
        geo_score = max(0.0, 1.0 - geo_m / radius_m)
        tod_score = max(0.0, 1.0 - tod_s / window_s)
        return cls(geo_m=geo_m, tod_s=tod_s, referent_sim=referent_sim, semantic_sim=semantic_sim,
                   combined=combine(geo_score, tod_score, max(0.0, semantic_sim)))

    def to_record(self) -> Dict[str, float]:
        return attr.asdict(self)

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> 'GateScores':
        return cls(**record)


def referent_similarity(label: str, referent_label: str, provider: EmbeddingProvider) -> float:
    ''' 1.0 for a case-insensitive label match, otherwise the cosine of the two label embeddings '''
    if label.strip().lower() == referent_label.strip().lower():
        return 1.0
    try:
        return cosine(provider.embed(label), provider.embed(referent_label))
    except EmptyTextError:
        # labels shorter than one n-gram can only match verbatim
        return 0.0


def _referent_gate(rsam: Rsam, frame: FrameObservation, cfg: RecallConfig, provider: EmbeddingProvider,
                   detector: ReferentDetector, verifier: Optional[ReferentVerifier]) -> Optional[float]:
    best: Optional[float] = None
    verified: Optional[float] = None
    asked = False
    for detection in detector.detect(frame):
        confident = detection.confidence >= cfg.referent_conf_threshold
        if not confident and verifier is None:
            continue
        similarity = referent_similarity(detection.label, rsam.referent_label, provider)
        if similarity < cfg.referent_sim_threshold:
            continue
        if not confident:
            if not asked:
                verified, asked = verifier.confirm(frame, rsam.referent_label), True  # type: ignore
            if verified is None or verified < cfg.referent_conf_threshold:
                continue
        best = similarity if best is None else max(best, similarity)
    return best


def verify_gates(rsam: Rsam, frame: FrameObservation, cfg: RecallConfig, provider: EmbeddingProvider,
                 detector: Optional[ReferentDetector] = None, verifier: Optional[ReferentVerifier] = None,
                 frame_descriptor: Optional[Embedding] = None) -> Optional[GateScores]:
    '''
    Scores for ``rsam`` against ``frame`` when all three gates pass, ``None`` otherwise.
    ``frame_descriptor`` may carry an already computed embedding of the frame's scene and activity.
    '''
    radius_m = cfg.effective_radius_m(frame.geo)
    geo_m = haversine_m(frame.geo, rsam.profile.geo)
    tod_s = circular_diff_s(time_of_day(frame.ts), rsam.profile.tod)
    if geo_m > radius_m or tod_s > cfg.tod_window_s:
        logger.debug(f"memory {rsam.id} fails the {GATE_SPATIOTEMPORAL} gate ({geo_m:.1f} m, {tod_s} s)")
        return None

    referent_sim = _referent_gate(rsam, frame, cfg, provider, detector or TraceDetector(), verifier)
    if referent_sim is None:
        logger.debug(f"memory {rsam.id} fails the {GATE_REFERENT} gate, '{rsam.referent_label}' not seen")
        return None

    if frame_descriptor is None:
        frame_descriptor = provider.embed(descriptor_text(frame.scene_text, frame.activity_text))
    semantic_sim = cosine(frame_descriptor, rsam.profile.descriptor)
    if semantic_sim < cfg.semantic_threshold:
        logger.debug(f"memory {rsam.id} fails the {GATE_SEMANTIC} gate ({semantic_sim:.3f})")
        return None

    return GateScores.measure(geo_m, tod_s, referent_sim, semantic_sim, radius_m, cfg.tod_window_s)
