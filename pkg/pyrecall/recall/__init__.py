from .config import RecallConfig, load_config
from .detect import FixedVerifier, ReferentDetector, ReferentVerifier, TraceDetector
from .frame import Detection, FrameObservation, FrameQuery
from .gates import GateScores, referent_similarity, verify_gates
from .live import FixtureLiveSource, HTTPLiveSource, LiveSource, NullLiveSource, fetch_all, fixture_name
from .proactive import RecallEvent, proactive_step
from .scheduler import is_due, set_interval
