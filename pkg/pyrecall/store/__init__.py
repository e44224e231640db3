from .bank import EXACT_RANK_CUTOFF, MemoryBank, geo_box, load_bank, open_bank, save_bank, tod_bounds
from .event_log import EventLog, Manifest
from .memory import ResponseSource, Rsam, SpatialActivityProfile, descriptor_text
