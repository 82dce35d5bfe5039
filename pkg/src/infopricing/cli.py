"""Command-line front end: ``infopricing {solve,check,reproduce,bench}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Sequence

from . import core
from .approx import (
    ConditionFailed,
    best_of_three_two_products,
    full_surplus_certificate,
    full_surplus_condition,
    is_exchangeable,
    is_negatively_affiliated,
    two_price,
    uniform_half,
)
from .core import ValueDistribution, audit_ic_ir, optimal_welfare
from .instances import BUILTIN, GeneratorSpec, builtin, generate
from .io import InstanceParseError, _jsonable, load_instance
from .oracle import MAX_SUPPORT, certify
from .reproduce import CRITERIA, run as run_criteria

FORMATS = ("json", "csv", "table")
BENCH_COLUMNS = ["seed", "family", "K", "m", "opt_wel", "uniform_ratio", "two_price_ratio",
                 "oracle_lower_ratio", "error"]


@dataclass(frozen=True)
class RunConfig:
    command: str
    example: str | None = None
    instance: str | None = None
    family: str | None = None
    eps: float | None = None
    n: int | None = None
    tolerance: float = core.DEFAULT_TOL
    format: str = "table"
    seed: int = 0
    jobs: int = 1
    out: str | None = None
    count: int = 10
    oracle: bool = True
    criteria: tuple[int, ...] = ()

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("--tolerance must be positive")
        if self.command in ("solve", "check"):
            given = [x for x in (self.example, self.instance, self.family) if x is not None]
            if len(given) != 1:
                raise ValueError("give exactly one of --example, --instance, --family")

    def load(self) -> ValueDistribution:
        if self.example is not None:
            return builtin(self.example, self.eps, self.n)
        if self.instance is not None:
            return load_instance(self.instance)
        return generate(GeneratorSpec.parse(self.family, self.seed))


# --- formatting ------------------------------------------------------------------


def _flatten(d: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return "" if v is None else str(v)


def render_records(records: list[dict[str, Any]], fmt: str, columns: Sequence[str] | None = None) -> str:
    if fmt == "json":
        return json.dumps(_jsonable(records), indent=2, sort_keys=True) + "\n"
    flat = [_flatten(r) for r in records]
    if columns is None:
        columns = list(dict.fromkeys(k for r in flat for k in r))
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for r in flat:
            writer.writerow([repr(r[c]) if isinstance(r.get(c), float) else _plain(r.get(c)) for c in columns])
        return buf.getvalue()
    rows = [[_fmt(r.get(c)) for c in columns] for r in flat]
    widths = [max([len(c)] + [len(row[i]) for row in rows]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in rows]
    return "\n".join(lines) + "\n"


def _plain(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (list, dict)):
        return json.dumps(_jsonable(v))
    return str(v)


def render_report(report: dict[str, Any], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    flat = _flatten(_jsonable(report))
    records = [{"field": k, "value": v} for k, v in flat.items()]
    return render_records(records, fmt, ["field", "value"])


# --- commands ------------------------------------------------------------------------


def _summary(dist: ValueDistribution) -> dict[str, Any]:
    return {"name": dist.name, "K": dist.K, "m": dist.m, "opt_wel": optimal_welfare(dist)}


def cmd_solve(cfg: RunConfig) -> tuple[dict[str, Any], bool]:
    dist = cfg.load()
    opt = optimal_welfare(dist)
    report: dict[str, Any] = {"instance": _summary(dist)}
    ok = True
    uh = uniform_half(dist)
    tp = two_price(dist)
    report["uniform_half"] = {"revenue": uh.revenue, "ratio": uh.ratio, "p_star": uh.details.get("p_star"),
                              "signals": [list(s) for s in uh.mechanism.info.signals]}
    report["two_price"] = {"branch": tp.branch, "revenue": tp.revenue, "ratio": tp.ratio,
                           "guarantee": tp.guarantee, "source": tp.details.get("source")}
    ok &= uh.revenue >= 0.5 * opt - 1e-6 and tp.revenue >= uh.revenue - 1e-9
    certs = [uh, tp]
    if dist.m == 2:
        b3 = best_of_three_two_products(dist)
        report["best_of_three"] = {"choice": b3.branch, "revenue": b3.revenue, "ratio": b3.ratio,
                                   "revenues": b3.details["revenues"]}
        ok &= b3.revenue >= 2 / 3 * opt - 1e-6
        certs.append(b3)
    cond, witness = full_surplus_condition(dist)
    fs: dict[str, Any] = {"condition": cond, "witness": list(witness) if witness else None}
    if cond:
        cert = full_surplus_certificate(dist)
        fs.update(revenue=cert.revenue, ratio=cert.ratio)
        ok &= abs(cert.revenue - opt) <= cfg.tolerance * max(1.0, opt)
        certs.append(cert)
    report["full_surplus"] = fs
    report["audits_ok"] = all(audit_ic_ir(dist, c.induced, cfg.tolerance).ok for c in certs)
    ok &= report["audits_ok"]
    if cfg.oracle and dist.K <= MAX_SUPPORT:
        bound = certify(dist)
        report["oracle"] = {"lower": bound.lower, "upper": bound.upper,
                            "upper_provenance": bound.upper_provenance,
                            "lower_source": bound.lower_witness.get("source"),
                            "lower_ratio": bound.lower / opt if opt > 0 else 1.0}
    report["ok"] = bool(ok)
    return report, bool(ok)


def cmd_check(cfg: RunConfig) -> tuple[dict[str, Any], bool]:
    dist = cfg.load()
    fs, fs_w = full_surplus_condition(dist)
    na, na_w = is_negatively_affiliated(dist)
    try:
        ex = is_exchangeable(dist)
    except ValueError as exc:
        ex = None
        ex_note = str(exc)
    else:
        ex_note = ""
    report = {
        "instance": _summary(dist),
        "full_surplus": {"holds": fs, "witness": list(fs_w) if fs_w else None},
        "negative_affiliation": {"holds": na, "witness": [list(v) for v in na_w] if na_w else None},
        "exchangeable": {"holds": ex, "note": ex_note},
    }
    ok = bool(fs and na and ex)
    report["ok"] = ok
    return report, ok


def cmd_reproduce(cfg: RunConfig) -> tuple[list[dict[str, Any]], bool]:
    rows = run_criteria(cfg.criteria or None)
    return [r.to_dict() for r in rows], all(r.passed for r in rows)


def _bench_row(args) -> dict[str, Any]:
    family_spec, seed, with_oracle = args
    row: dict[str, Any] = {c: None for c in BENCH_COLUMNS}
    row["seed"] = seed
    try:
        spec = GeneratorSpec.parse(family_spec, seed)
        row["seed"] = spec.seed
        row["family"] = spec.family
        dist = generate(spec)
        opt = optimal_welfare(dist)
        row.update(K=dist.K, m=dist.m, opt_wel=opt)
        row["uniform_ratio"] = uniform_half(dist).ratio
        row["two_price_ratio"] = two_price(dist).ratio
        if with_oracle and dist.K <= MAX_SUPPORT:
            row["oracle_lower_ratio"] = certify(dist).lower / opt if opt > 0 else 1.0
    except Exception as exc:  # reported per row, sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_bench(cfg: RunConfig) -> tuple[list[dict[str, Any]], bool]:
    if cfg.family is None:
        raise ValueError("bench needs --family")
    tasks = [(cfg.family, cfg.seed + i, cfg.oracle) for i in range(cfg.count)]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_bench_row, tasks))  # map keeps input order
    else:
        rows = [_bench_row(t) for t in tasks]
    ok = all(r["error"] is None for r in rows)
    ok &= all(r["uniform_ratio"] is None or r["uniform_ratio"] >= 0.5 - 1e-6 for r in rows)
    for label, agg in (("min", min), ("mean", lambda xs: sum(xs) / len(xs))):
        if not rows:
            break
        summary: dict[str, Any] = {c: None for c in BENCH_COLUMNS}
        summary["seed"] = label
        for col in ("uniform_ratio", "two_price_ratio", "oracle_lower_ratio"):
            vals = [r[col] for r in rows if r[col] is not None]
            summary[col] = agg(vals) if vals else None
        rows.append(summary)
    return rows, ok


# --- argument parsing ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infopricing", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, source=True):
        if source:
            g = p.add_mutually_exclusive_group()
            g.add_argument("--example", choices=sorted(BUILTIN), help="builtin instance")
            g.add_argument("--instance", help="instance JSON file")
            g.add_argument("--family", help="generator spec, e.g. 'correlated:m=3,size=6'")
        p.add_argument("--eps", type=float, help="epsilon for parametrised examples")
        p.add_argument("--n", type=int, help="size parameter for arc / b1")
        p.add_argument("--tolerance", type=float, default=core.DEFAULT_TOL)
        p.add_argument("--format", choices=FORMATS, default="table")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out", help="write output here instead of stdout")

    p = sub.add_parser("solve", help="run constructions and oracle on one instance")
    common(p)
    p.add_argument("--no-oracle", dest="oracle", action="store_false")
    p = sub.add_parser("check", help="full-surplus, affiliation and exchangeability checks")
    common(p)
    p = sub.add_parser("reproduce", help="recompute the acceptance claims")
    common(p, source=False)
    p.add_argument("--criteria", type=int, nargs="*", choices=sorted(CRITERIA), default=[])
    p = sub.add_parser("bench", help="sweep a generator over seeds")
    common(p)
    p.add_argument("--count", type=int, default=10, help="number of seeds (from --seed)")
    p.add_argument("--no-oracle", dest="oracle", action="store_false")
    return parser


def _config(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=ns.command,
        example=getattr(ns, "example", None),
        instance=getattr(ns, "instance", None),
        family=getattr(ns, "family", None),
        eps=ns.eps,
        n=ns.n,
        tolerance=ns.tolerance,
        format=ns.format,
        seed=ns.seed,
        jobs=ns.jobs,
        out=ns.out,
        count=getattr(ns, "count", 10),
        oracle=getattr(ns, "oracle", True),
        criteria=tuple(getattr(ns, "criteria", ()) or ()),
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = _config(ns)
        if cfg.command == "solve":
            report, ok = cmd_solve(cfg)
            text = render_report(report, cfg.format)
        elif cfg.command == "check":
            report, ok = cmd_check(cfg)
            text = render_report(report, cfg.format)
        elif cfg.command == "reproduce":
            records, ok = cmd_reproduce(cfg)
            cols = ["criterion", "claim_id", "expected", "computed", "tolerance", "passed", "note"]
            text = render_records(records, cfg.format, cols)
        else:
            records, ok = cmd_bench(cfg)
            text = render_records(records, cfg.format, BENCH_COLUMNS)
    except (InstanceParseError, ConditionFailed, ValueError, OSError) as exc:
        print(f"infopricing: error: {exc}", file=sys.stderr)
        return 2
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
