from .bench import BenchReport, run_bench
from .commands import cmd_bench, cmd_query, cmd_replay, cmd_stats, make_live_source, make_provider
from .stats import SessionStats, stats_from_events
from .trace import parse_trace, read_trace
