"""Command-line driver: synthesis, certification and width lower bounds.

Every command prints a report whose rows share one fixed column set
(:data:`COLUMNS`), as CSV or as a JSON list of objects with the same keys.
Exit status is 0 when every requested certification passed, 1 when one
failed and 2 on errors (with a JSON error record on stdout).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .certify import Target, certify_sup_error, measure_sup_error
from .errors import BudgetError, MononetError, ParseError, PrecisionError, ResourceError
from .flatten import FlattenBudget, synth_product_shallow_relu
from .lower_bound import min_width_lower_bound, three_point_lower_bound
from .network import Box, NumericPrecision, deserialize, serialize
from .synthesis import (
    PolynomialCoeffs,
    synth_exact_smooth,
    synth_log_exp,
    synth_monomial_exp,
    synth_polynomial_exp,
    synth_product_two_layer,
)

COLUMNS = ("command", "d", "eps", "C", "k", "L", "stage", "neurons", "terms", "cap", "bound_certified", "bound_measured", "status")
SYNTH_KINDS = ("monomial", "polynomial", "log", "product2", "exact2d", "productReLU")
TARGETS = ("product", "monomial", "polynomial", "log", "exp")


@dataclass
class RunConfig:
    command: str
    kind: str | None = None
    d: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    C: float | None = None
    k: float | None = None
    L: list = field(default_factory=list)
    n: int | None = None
    delta: float | None = None
    coeffs: list | None = None
    precision_bits: int = 256
    margin: float | None = None
    budget_terms: int | None = None
    budget_neurons: int | None = None
    net: str | None = None
    target: str | None = None
    box: str | None = None
    out: str | None = None
    format: str = "csv"
    seed: int | None = None
    inner_range: str = "apriori"

    def one(self, name: str, default=None):
        vals = getattr(self, name)
        if isinstance(vals, list):
            if not vals:
                if default is None:
                    raise ParseError(f"--{name} is required for this command", f"--{name}")
                return default
            if len(vals) > 1:
                raise ParseError(f"--{name} takes a single value for this command", f"--{name}")
            return vals[0]
        if vals is None:
            if default is None:
                raise ParseError(f"--{name.replace('_', '-')} is required for this command", f"--{name}")
            return default
        return vals

    @property
    def precision(self) -> NumericPrecision:
        return NumericPrecision(self.precision_bits)


def _row(cfg: RunConfig, **kw) -> dict:
    row = {c: "" for c in COLUMNS}
    row["command"] = cfg.command if cfg.kind is None else f"{cfg.command} {cfg.kind}"
    for key in ("d", "eps", "L"):
        vals = getattr(cfg, key)
        if len(vals) == 1:
            row[key] = vals[0]
    row["C"] = "" if cfg.C is None else cfg.C
    row["k"] = "" if cfg.k is None else cfg.k
    row.update(kw)
    return {c: _clean(row[c]) for c in COLUMNS}


def _clean(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return ""
    return v


def render(rows: list, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def _status(ok: bool) -> str:
    return "certified" if ok else "not certified"


def _write_outputs(cfg: RunConfig, net, extra: dict | None = None) -> None:
    if not cfg.out:
        return
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if net is not None:
        (out / "network.json").write_text(serialize(net, indent=1) + "\n")
    if extra:
        (out / "details.json").write_text(json.dumps(extra, indent=1, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, Box):
        return o.to_dict()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def parse_box(text: str, d: int | None = None) -> Box:
    """``lo:hi`` (a cube, needs ``d``) or ``lo1,lo2,...:hi1,hi2,...``."""
    try:
        lo_s, hi_s = text.split(":")
        lo = [float(v) for v in lo_s.split(",")]
        hi = [float(v) for v in hi_s.split(",")]
    except ValueError:
        raise ParseError(f"cannot read box {text!r}; expected lo:hi", "--box") from None
    if len(lo) == 1 and len(hi) == 1 and d is not None:
        lo, hi = lo * d, hi * d
    if len(lo) != len(hi):
        raise ParseError("box bounds differ in length", "--box")
    return Box(tuple(lo), tuple(hi))


# --- synth -------------------------------------------------------------------------


def cmd_synth(cfg: RunConfig) -> tuple[list, bool]:
    kind = cfg.kind
    margin = 0.1 if cfg.margin is None else cfg.margin
    if kind == "monomial":
        n = cfg.one("n")
        eps = cfg.one("eps", 1e-3)
        res = synth_monomial_exp(n, eps, cfg.precision, margin)
        ok = res.report.certifies(eps)
        rows = [_row(cfg, d=1, eps=eps, stage="monomial", neurons=res.net.n_terms, terms=res.net.n_terms, cap=n + 1,
                     bound_certified=res.report.certified_bound, bound_measured=res.report.grid_sup, status=_status(ok))]
        _write_outputs(cfg, res.net, {"info": res.info, "report": res.report.to_dict()})
        return rows, ok
    if kind == "polynomial":
        if not cfg.coeffs:
            raise ParseError("--coeffs is required for polynomial synthesis", "--coeffs")
        eps = cfg.one("eps")
        p = PolynomialCoeffs(tuple(cfg.coeffs))
        res = synth_polynomial_exp(p, eps, cfg.precision, margin)
        ok = res.report.certifies(eps)
        rows = [_row(cfg, d=1, eps=eps, stage="polynomial", neurons=res.net.n_terms, terms=res.net.n_terms,
                     cap=res.info["term_cap"], bound_certified=res.report.certified_bound,
                     bound_measured=res.report.grid_sup, status=_status(ok))]
        _write_outputs(cfg, res.net, {"info": res.info, "report": res.report.to_dict()})
        return rows, ok
    if kind == "log":
        eps = cfg.one("eps")
        delta = cfg.one("delta")
        res = synth_log_exp(delta, eps, cfg.precision, margin)
        ok = res.report.certifies(eps)
        rows = [
            _row(cfg, d=1, eps=eps, stage="taylor_degree", terms=res.info["degree"], cap=res.info["degree_cap"],
                 bound_certified=res.info["taylor_tail"], status="ok"),
            _row(cfg, d=1, eps=eps, stage="log", neurons=res.net.n_terms, terms=res.net.n_terms, cap=res.info["term_cap"],
                 bound_certified=res.report.certified_bound, bound_measured=res.report.grid_sup, status=_status(ok)),
        ]
        _write_outputs(cfg, res.net, {"info": res.info, "report": res.report.to_dict()})
        return rows, ok
    if kind == "product2":
        d, C, eps = cfg.one("d"), cfg.one("C"), cfg.one("eps")
        res = synth_product_two_layer(d, C, eps, cfg.precision, margin)
        info = res.info
        ok = res.report.certifies(eps) and info["inner_sum_ok"]
        lo, hi = info["inner_sum_grid"]
        rows = [
            _row(cfg, stage="log", neurons=info["log_terms"], terms=info["log_terms"], cap=(info["log_degree"] + 1) ** 2,
                 bound_certified=info["log_certified"], status=_status(info["log_certified"] < info["log_eps"])),
            _row(cfg, stage="inner_sum", bound_certified=info["inner_sum_certified"][1], bound_measured=hi,
                 status="ok" if info["inner_sum_ok"] else f"outside ({-C - eps}, {eps}): {lo}..{hi}"),
            _row(cfg, stage="product2", neurons=res.net.n_neurons, terms=info["neurons_layer1"], cap="",
                 bound_certified=res.report.certified_bound, bound_measured=res.report.grid_sup, status=_status(ok)),
        ]
        _write_outputs(cfg, res.net, {"info": info, "report": res.report.to_dict()})
        return rows, ok
    if kind == "exact2d":
        d = cfg.one("d", 2)
        k, eps = cfg.one("k"), cfg.one("eps")
        res = synth_exact_smooth(d, eps, k, cfg.precision, margin)
        ok = res.report.certifies(eps)
        measured = measure_sup_error(res.net, Target("product"), res.report.box, max(3, int(round(40_000 ** (1 / d)))))
        rows = [_row(cfg, d=d, stage="exact_smooth", neurons=res.net.n_terms, terms=res.net.n_terms, cap=2**d,
                     bound_certified=res.report.certified_bound, bound_measured=measured, status=_status(ok))]
        _write_outputs(cfg, res.net, {"info": res.info, "report": res.report.to_dict()})
        return rows, ok
    if kind == "productReLU":
        d, C, eps = cfg.one("d"), cfg.one("C"), cfg.one("eps")
        budget = FlattenBudget(
            max_terms=cfg.budget_terms or FlattenBudget().max_terms,
            max_neurons=cfg.budget_neurons or FlattenBudget().max_neurons,
        )
        res = synth_product_shallow_relu(d, C, eps, budget, cfg.precision, inner_range=cfg.inner_range)
        rep = res.report
        ok = rep.certified
        rows = [
            _row(cfg, stage="two_layer", neurons=rep.neurons["two_layer"], terms=rep.terms["inner"],
                 cap=rep.caps["log_degree"], bound_certified=rep.stage_bounds["two_layer"], status="stage"),
            _row(cfg, stage="flatten", neurons=rep.neurons["flatten"], terms=rep.terms["pre_merge"],
                 cap=rep.caps["flatten_terms"], bound_certified=rep.stage_bounds["flatten"], status="stage"),
            _row(cfg, stage="relu", neurons=rep.neurons["relu"], terms=rep.terms["flattened"],
                 cap=rep.caps["relu_neurons"], bound_certified=rep.stage_bounds["relu"], status="stage"),
            _row(cfg, stage="total", neurons=rep.neurons["relu"], bound_certified=rep.certified_bound,
                 bound_measured=rep.measured_box, status=_status(ok)),
            _row(cfg, stage="full_cube", neurons=rep.neurons["relu"], bound_measured=rep.measured_cube,
                 status="measured, not certified"),
        ]
        _write_outputs(cfg, res.net, {"report": rep.to_dict()})
        return rows, ok
    raise ParseError(f"unknown synthesis kind {kind!r}; choose from {', '.join(SYNTH_KINDS)}", "kind")


# --- lowerbound ----------------------------------------------------------------------


def cmd_lowerbound(cfg: RunConfig) -> tuple[list, bool]:
    k = cfg.k if cfg.k is not None else 3.0
    Ls = cfg.L or [1]
    if cfg.net is None:
        if not cfg.d or not cfg.eps:
            raise ParseError("--d and --eps are required", "--d")
        rows = []
        for d in cfg.d:
            for eps in cfg.eps:
                for L in Ls:
                    n_min = min_width_lower_bound(d, k, eps, L)
                    rows.append(_row(cfg, d=d, eps=eps, k=k, L=L, stage="n_min", neurons=n_min, status="ok"))
        return rows, True
    net = deserialize(Path(cfg.net).read_text())
    if not hasattr(net, "weights"):
        raise ParseError("the three-point certificate needs a layered ReLU network", "--net")
    d = net.d
    L = Ls[0] if cfg.L else net.depth
    cert = three_point_lower_bound(net, d, k, L)
    rows = [_row(cfg, d=d, k=k, L=L, stage="three_point", neurons=net.width, terms=cert.n_pieces,
                 cap=(2 * net.width) ** L, bound_certified=cert.implied_lower_bound, bound_measured=cert.structural_bound,
                 status=f"error > {cert.implied_lower_bound!r} on [{cert.a!r}, {cert.b!r}]")]
    if cfg.eps:
        for eps in cfg.eps:
            n_min = min_width_lower_bound(d, k, eps, L)
            verdict = "width below n_min: eps unreachable" if net.width < n_min else "width not excluded"
            rows.append(_row(cfg, d=d, eps=eps, k=k, L=L, stage="n_min", neurons=n_min, cap=net.width, status=verdict))
    return rows, True


# --- certify ------------------------------------------------------------------------


def cmd_certify(cfg: RunConfig) -> tuple[list, bool]:
    if cfg.net is None:
        raise ParseError("--net is required", "--net")
    net = deserialize(Path(cfg.net).read_text())
    name = cfg.target or "product"
    if name not in TARGETS:
        raise ParseError(f"unknown target {name!r}", "--target")
    target = Target(name, n=cfg.n if cfg.n is not None else 1, coeffs=tuple(cfg.coeffs or ()))
    box = parse_box(cfg.box, net.d) if cfg.box else Box.cube(net.d, 0.0, 1.0)
    margin = cfg.margin if cfg.margin is not None else 1e-3
    eps = cfg.eps[0] if cfg.eps else None
    rows, ok = [], True
    cert_box = None
    meta_box = net.meta.get("certified_box") if isinstance(net.meta, dict) else None
    if meta_box:
        cert_box = Box(tuple(meta_box["lo"]), tuple(meta_box["hi"]))
    region = box
    outside = False
    if cert_box is not None and not cert_box.contains(box):
        outside = True
        lo = tuple(max(a, b) for a, b in zip(box.lo, cert_box.lo))
        hi = tuple(min(a, b) for a, b in zip(box.hi, cert_box.hi))
        region = Box(lo, hi) if all(a <= b for a, b in zip(lo, hi)) else None
    if region is not None:
        try:
            rep = certify_sup_error(net, target, region, margin)
            passed = eps is None or rep.certifies(eps)
            ok &= passed
            rows.append(_row(cfg, d=net.d, stage="certified_region" if outside else "certified",
                             neurons=getattr(net, "n_neurons", getattr(net, "n_terms", "")), cap=rep.grid_points,
                             bound_certified=rep.certified_bound, bound_measured=rep.grid_sup,
                             status=_status(passed) if eps is not None else "certified bound"))
        except ResourceError as exc:
            ok = False
            rows.append(_row(cfg, d=net.d, stage="certified_region" if outside else "certified",
                             status=f"not certified: {exc}"))
    if outside:
        ok = False
        pts = max(3, int(round(100_000 ** (1 / net.d))))
        measured = measure_sup_error(net, target, box, pts)
        rows.append(_row(cfg, d=net.d, stage="requested_box", bound_measured=measured, status="measured, not certified"))
    return rows, ok


# --- argument handling -------------------------------------------------------------------


def _list(kind):
    def parse(text: str) -> list:
        out = []
        for part in text.split(","):
            if ":" in part and kind is int:
                a, b = part.split(":")
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(kind(part))
        return out

    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mononet", description=__doc__.splitlines()[0])
    parser.add_argument("command", nargs="?", choices=("synth", "lowerbound", "certify"))
    parser.add_argument("kind", nargs="?", help="synthesis kind: " + ", ".join(SYNTH_KINDS))
    parser.add_argument("--command", dest="command_flag", choices=("synth", "lowerbound", "certify"))
    parser.add_argument("--kind", dest="kind_flag", choices=SYNTH_KINDS)
    parser.add_argument("--d", type=_list(int), default=[], help="dimension; accepts 2,3 or 2:40 sweeps")
    parser.add_argument("--eps", type=_list(float), default=[], help="target error; comma list for sweeps")
    parser.add_argument("--C", type=float)
    parser.add_argument("--k", type=float)
    parser.add_argument("--L", type=_list(int), default=[])
    parser.add_argument("--n", type=int)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--coeffs", type=_list(float), help="polynomial coefficients a0,a1,...")
    parser.add_argument("--precision-bits", type=int, default=256)
    parser.add_argument("--margin", type=float)
    parser.add_argument("--budget-terms", type=int)
    parser.add_argument("--budget-neurons", type=int)
    parser.add_argument("--net", help="network document to analyse")
    parser.add_argument("--target", choices=TARGETS)
    parser.add_argument("--box", help="lo:hi or lo1,lo2:hi1,hi2")
    parser.add_argument("--out", help="directory for network.json and details.json")
    parser.add_argument("--format", choices=("json", "csv"), default="csv")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--inner-range", choices=("apriori", "certified"), default="apriori",
                        help="polynomial interval for productReLU flattening")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    command = ns.command or ns.command_flag
    if command is None:
        raise ParseError("a command is required (synth, lowerbound or certify)", "command")
    kind = ns.kind or ns.kind_flag
    if command == "synth" and kind is None:
        raise ParseError("synth needs a kind: " + ", ".join(SYNTH_KINDS), "kind")
    return RunConfig(
        command=command,
        kind=kind if command == "synth" else None,
        d=ns.d,
        eps=ns.eps,
        C=ns.C,
        k=ns.k,
        L=ns.L,
        n=ns.n,
        delta=ns.delta,
        coeffs=ns.coeffs,
        precision_bits=ns.precision_bits,
        margin=ns.margin,
        budget_terms=ns.budget_terms,
        budget_neurons=ns.budget_neurons,
        net=ns.net,
        target=ns.target,
        box=ns.box,
        out=ns.out,
        format=ns.format,
        seed=ns.seed,
        inner_range=ns.inner_range,
    )


def error_record(exc: Exception) -> dict:
    rec = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ParseError):
        rec["location"] = exc.location
    if isinstance(exc, PrecisionError):
        rec["required_bits"] = exc.required_bits
    if isinstance(exc, BudgetError):
        rec["projected"] = exc.projected
    return rec


COMMANDS = {"synth": cmd_synth, "lowerbound": cmd_lowerbound, "certify": cmd_certify}


def main(argv: list | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        if cfg.seed is not None:
            np.random.seed(cfg.seed)
        rows, ok = COMMANDS[cfg.command](cfg)
    except (MononetError, ValueError, OSError) as exc:
        stdout.write(json.dumps(error_record(exc)) + "\n")
        return 2
    text = render(rows, cfg.format)
    stdout.write(text)
    if cfg.out:
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        (Path(cfg.out) / f"report.{cfg.format}").write_text(text)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
