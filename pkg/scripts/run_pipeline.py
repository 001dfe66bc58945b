"""Run the product-to-shallow-ReLU pipeline and print its staged report as JSON."""

import argparse
import json
import sys
import time

from mononet import FlattenBudget, synth_product_shallow_relu
from mononet.errors import BudgetError


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--C", type=float, default=1.0)
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--inner-range", choices=("apriori", "certified"), default="apriori")
    ap.add_argument("--knots", choices=("greedy", "range"), default="greedy")
    ap.add_argument("--allocation", choices=("weighted", "equal"), default="weighted")
    ap.add_argument("--max-neurons", type=int, default=FlattenBudget().max_neurons)
    args = ap.parse_args(argv)
    t0 = time.perf_counter()
    try:
        res = synth_product_shallow_relu(
            args.d,
            args.C,
            args.eps,
            FlattenBudget(max_neurons=args.max_neurons),
            inner_range=args.inner_range,
            knots=args.knots,
            allocation=args.allocation,
        )
    except BudgetError as exc:
        print(json.dumps({"error": "BudgetError", "message": str(exc), "projected": exc.projected}))
        return 1
    rep = res.report.to_dict()
    rep["seconds"] = round(time.perf_counter() - t0, 2)
    print(json.dumps(rep, indent=1, default=str))
    return 0 if res.report.certified else 1


if __name__ == "__main__":
    sys.exit(main())
