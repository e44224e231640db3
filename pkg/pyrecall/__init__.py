import pyrecall.utils
from .core import GeoPoint, TimeOfDay, Timestamp, circular_diff_s, haversine_m, time_of_day
from .embed import (CentroidModel, Embedding, EmbeddingProvider, HashingEmbeddingProvider, HTTPEmbeddingProvider,
                    build_centroids, classification_report, classify, cosine, macro_f1, make_clusters)
from .index import HnswIndex, RTreeIndex, SpatioTemporalKey
from .store import (MemoryBank, ResponseSource, Rsam, SpatialActivityProfile, load_bank, open_bank,
                    save_bank)
from .recall import (Detection, FixtureLiveSource, FrameObservation, FrameQuery, GateScores, HTTPLiveSource,
                     RecallConfig, RecallEvent, is_due, load_config, proactive_step, set_interval, verify_gates)
from .sim import (BenchReport, SessionStats, cmd_bench, cmd_query, cmd_replay, cmd_stats, read_trace,
                  run_bench, stats_from_events)
from .version import __version__
