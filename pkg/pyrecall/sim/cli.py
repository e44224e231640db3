import argparse
import sys
from typing import Any, Dict, List, Optional

import attr

from ..embed.providers import DEFAULT_DIM
from ..exceptions import PyRecallError
from ..index.hnsw import DEFAULT_SEED
from ..recall.config import RecallConfig, load_config
from ..utils import enable_console_logging
from ..version import __version__
from . import commands
from .bench import DEFAULT_K, DEFAULT_LOOKUPS, MIN_MEMORIES

DEFAULT_BENCH_N = 1000


def _bench_size(value: str) -> int:
    n = int(value)
    if n < MIN_MEMORIES:
        raise argparse.ArgumentTypeError(f"the benchmark needs at least {MIN_MEMORIES} memories")
    return n


def _add_recall_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=False, default=None, help="JSON recall configuration file")
    parser.add_argument("--radius-m", required=False, type=float, default=None)
    parser.add_argument("--tod-window-s", required=False, type=float, default=None)
    parser.add_argument("--k", required=False, type=int, default=None)
    parser.add_argument("--semantic-threshold", required=False, type=float, default=None)
    parser.add_argument("--interval-days", required=False, type=float, default=None)
    parser.add_argument("--seed", required=False, type=int, default=DEFAULT_SEED)
    parser.add_argument("--dim", required=False, type=int, default=DEFAULT_DIM)


def _parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog='pyrecall', description="Contextual memory recall over replayed lifelogs")
    parser.add_argument("--version", action='version', version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", "-v", action='store_true', help="debug logging on stderr")
    subparsers = parser.add_subparsers(dest='command', required=True)

    replay = subparsers.add_parser('replay', help="replay a trace into a bank")
    replay.add_argument("trace")
    replay.add_argument("bank")
    _add_recall_flags(replay)
    replay.add_argument("--live", action='store_true', help="refresh live answers over HTTP")
    replay.add_argument("--fixtures", required=False, default=None, help="directory of canned live answers")
    replay.add_argument("--explain", action='store_true', help="explain each recall")
    replay.add_argument("--query-only", action='store_true', help="store queries without proactive recall")

    query = subparsers.add_parser('query', help="rank a bank's memories against one context")
    query.add_argument("bank")
    query.add_argument("--lat", required=True, type=float)
    query.add_argument("--lon", required=True, type=float)
    query.add_argument("--epoch-s", required=True, type=int)
    query.add_argument("--tz-min", required=False, type=int, default=0)
    query.add_argument("--scene", required=True)
    query.add_argument("--activity", required=True)
    _add_recall_flags(query)

    bench = subparsers.add_parser('bench', help="benchmark hybrid retrieval against brute force")
    bench.add_argument("--n", required=False, type=_bench_size, default=DEFAULT_BENCH_N)
    bench.add_argument("--dim", required=False, type=int, default=DEFAULT_DIM)
    bench.add_argument("--seed", required=False, type=int, default=DEFAULT_SEED)
    bench.add_argument("--k", required=False, type=int, default=DEFAULT_K)
    bench.add_argument("--lookups", required=False, type=int, default=DEFAULT_LOOKUPS)
    bench.add_argument("--no-timing", action='store_true', help="print only the deterministic quality table")
    bench.add_argument("--progress", action='store_true')

    stats = subparsers.add_parser('stats', help="summarize a bank's event log")
    stats.add_argument("bank")

    return parser.parse_args(argv)


def _config(args: argparse.Namespace) -> RecallConfig:
    cfg = load_config(args.config)
    overrides: Dict[str, Any] = {
        'radius_m': args.radius_m,
        'tod_window_s': args.tod_window_s,
        'k': args.k,
        'semantic_threshold': args.semantic_threshold,
        'default_interval_days': args.interval_days,
    }
    if getattr(args, 'query_only', False):
        overrides['proactive'] = False
    return attr.evolve(cfg, **{name: value for name, value in overrides.items() if value is not None})


def _run(args: argparse.Namespace) -> None:
    if args.command == 'bench':
        commands.cmd_bench(args.n, dim=args.dim, seed=args.seed, k=args.k, lookups=args.lookups,
                           timing=not args.no_timing, progress=args.progress)
    elif args.command == 'stats':
        commands.cmd_stats(args.bank)
    elif args.command == 'replay':
        commands.cmd_replay(args.trace, args.bank, _config(args), commands.make_provider(args.dim),
                            live_source=commands.make_live_source(args.live, args.fixtures),
                            seed=args.seed, explain=args.explain)
    else:
        commands.cmd_query(args.bank, args.lat, args.lon, args.epoch_s, args.scene, args.activity,
                           _config(args), commands.make_provider(args.dim), tz_min=args.tz_min)


def main(argv: Optional[List[str]] = None) -> int:
    args = _parse_args(argv)
    if args.verbose:
        enable_console_logging()
    try:
        _run(args)
    except PyRecallError as ex:
        code = commands.exit_code_for(ex)
        if code is None:
            if not isinstance(ex, ValueError):
                raise
            code = commands.EXIT_PARSE
        print(f"error: {ex}", file=sys.stderr)
        return code
    except (FileNotFoundError, ValueError) as ex:
        # a missing --config file or an out of range flag
        print(f"error: {ex}", file=sys.stderr)
        return commands.EXIT_PARSE
    return commands.EXIT_OK
