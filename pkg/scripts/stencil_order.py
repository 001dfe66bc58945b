"""Measure the grid error of the exp stencils under repeated halving of h.

Prints the error and the ratio to the previous step.  Ratios near 4 show
second-order convergence.
"""

import argparse
import itertools
import sys

import mpmath as mp

from mononet.synthesis import exact_smooth_stencil, monomial_stencil


def grid_error(f, target, lo: float, hi: float, d: int, pts: int) -> mp.mpf:
    axis = [mp.mpf(lo) + (mp.mpf(hi) - lo) * i / (pts - 1) for i in range(pts)]
    worst = mp.mpf(0)
    for x in itertools.product(axis, repeat=d):
        val = mp.fsum(nu * mp.exp(mp.fsum(w * xi for w, xi in zip(ws, x))) for nu, ws in f.terms)
        worst = max(worst, abs(val - target(x)))
    return worst


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kind", choices=("monomial", "exact"), default="exact")
    ap.add_argument("--n", type=int, default=3, help="monomial degree")
    ap.add_argument("--d", type=int, default=2, help="dimension of the product")
    ap.add_argument("--k", type=float, default=2.0, help="half-width for the product")
    ap.add_argument("--h", type=float, default=0.25)
    ap.add_argument("--halvings", type=int, default=5)
    ap.add_argument("--points", type=int, default=21)
    args = ap.parse_args(argv)
    h = mp.mpf(args.h)
    prev = None
    print("h,error,ratio")
    with mp.workprec(256):
        for _ in range(args.halvings + 1):
            if args.kind == "monomial":
                err = grid_error(monomial_stencil(args.n, h, 256), lambda x: x[0] ** args.n, 0.0, 1.0, 1, args.points)
            else:
                err = grid_error(exact_smooth_stencil(args.d, h, 256), mp.fprod, -args.k, args.k, args.d, args.points)
            ratio = "" if prev is None else f"{float(prev / err):.5f}"
            print(f"{float(h):.6g},{float(err):.6e},{ratio}")
            prev = err
            h /= 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
