"""Compare compiled and pure-Python Max-Weight kernels.

    python3 benchmarks/compare_backends.py --out bench.csv
"""

import argparse
import sys

from slicemux import kernels
from slicemux.bench import DEFAULT_SLICE_COUNTS, time_max_weight, write_bench_csv


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="bench_backends.csv")
    p.add_argument("--slots", type=int, default=10_000)
    p.add_argument("--python-slots", type=int, default=2_000, help="the Python kernel is slow; fewer slots")
    p.add_argument("--repeats", type=int, default=5)
    args = p.parse_args(argv)

    rows = []
    print(f"{'N':>4} {'compiled us':>12} {'python us':>12} {'speedup':>8}")
    for n in DEFAULT_SLICE_COUNTS:
        py = time_max_weight(n, args.python_slots, args.repeats, "python")
        rows.append(py)
        if "compiled" in kernels.BACKENDS:
            c = time_max_weight(n, args.slots, args.repeats, "compiled")
            rows.append(c)
            print(f"{n:>4} {c.mean_us_per_slot:>12.2f} {py.mean_us_per_slot:>12.2f} "
                  f"{py.mean_us_per_slot / c.mean_us_per_slot:>7.0f}x")
        else:
            print(f"{n:>4} {'-':>12} {py.mean_us_per_slot:>12.2f} {'-':>8}")
    write_bench_csv(rows, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
