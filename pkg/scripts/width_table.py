"""Print the least admissible width n_min over a sweep of dimensions.

Example::

    python3 scripts/width_table.py --d 2:40 --k 3 --eps 0.1 --L 1,2
"""

import argparse
import csv
import math
import sys

from mononet.lower_bound import min_width_lower_bound


def int_range(text: str) -> list:
    out = []
    for part in text.split(","):
        if ":" in part:
            a, b = part.split(":")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int_range, default=int_range("2:40"))
    ap.add_argument("--k", type=float, default=3.0)
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--L", type=int_range, default=[1])
    args = ap.parse_args(argv)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["d", "L", "n_min", "log_n_min"])
    for L in args.L:
        for d in args.d:
            n = min_width_lower_bound(d, args.k, args.eps, L)
            w.writerow([d, L, n, f"{math.log(n):.6f}"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
