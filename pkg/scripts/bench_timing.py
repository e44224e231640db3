import argparse
import sys
import time

from pyrecall.sim.bench import run_bench

DEFAULT_TIME_THRESHOLD = 60
DEFAULT_N = 10_000
DEFAULT_LOOKUPS = 100


def _parse_args():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", required=False, type=int, default=DEFAULT_N)
    parser.add_argument("--lookups", required=False, type=int, default=DEFAULT_LOOKUPS)
    parser.add_argument("--time-threshold", "-t", required=False, type=float, default=DEFAULT_TIME_THRESHOLD)
    parser.add_argument("--envelope", action='store_true', help="also fail when the latency envelope is missed")
    return parser.parse_args()


def main():
    args = _parse_args()
    start_time = time.time()
    report = run_bench(args.n, lookups=args.lookups, progress=True)
    end_time = time.time()
    bench_time = end_time-start_time
    threshold_exceeded = bench_time > args.time_threshold or (args.envelope and not report.meets_envelope)
    print(report.quality().to_string(index=False))
    print(f"hybrid {report.hybrid_mean_ms: .3f} ms vs brute force {report.brute_mean_ms: .3f} ms per lookup")
    print(f"speedup {report.speedup: .1f}x, envelope {'met' if report.meets_envelope else 'missed'}")
    print(f"bench took {bench_time: .1f} seconds (expected less than {args.time_threshold: .1f})")
    sys.exit(int(threshold_exceeded))

if __name__=='__main__':
    main()
