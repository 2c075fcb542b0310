"""Command-line entry point: verify, extremal, lens, flow, freud and table.

Verdict rows are written as CSV with the columns name,k,n,p,lhs,rhs,ratio,ok
(ok is true, false or inconclusive); a JSON summary goes to --json or stderr.
Exit codes: 0 all hard inequalities pass, 1 a violation, 2 inconclusive or
invalid input.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from typing import Sequence

from .extremal import OBJECTIVES, extremal_search
from .flow import monotonicity_scan
from .hermite import GaussPoly
from .inequalities import EMPIRICAL_CEILING, hermite_freud_ratios, loglog_slope
from .lens import LensDomain, generator_exponent, grad_exponent, power_gauge
from .sweeps import (
    CSV_COLUMNS,
    ENSEMBLES,
    SUITES,
    Cell,
    SuiteReport,
    gauge_from_name,
    random_poly,
    run_suite,
    trial_rng,
)

CONFIG_SCHEMA = "gbl.config/1"
EXIT_OK, EXIT_VIOLATION, EXIT_INCONCLUSIVE = 0, 1, 2


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    """Everything that determines a verify run; lists expand to a cell grid."""

    suite: str
    k: list[int]
    degree: list[int]
    p: list[float] | None = None
    gauge: str | None = None
    c: float | None = None
    trials: int = 100
    seed: int = 0
    ensemble: str = "mixed"
    ceiling: float = EMPIRICAL_CEILING
    radius_kind: str = "half"
    workers: int | None = None
    csv_path: str | None = None
    json_path: str | None = None

    def validate(self) -> None:
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; available: {', '.join(sorted(SUITES))}")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if any(k < 0 or k > 4 for k in self.k):
            raise ConfigError("k must lie in 0..4")
        if any(n < 0 for n in self.degree):
            raise ConfigError("degree must be nonnegative")
        if self.p is not None and any(not (p >= 1 and math.isfinite(p)) for p in self.p):
            raise ConfigError("p must be finite and >= 1")
        if self.c is not None and not self.c >= 2:
            raise ConfigError("c must be >= 2")
        if self.ensemble not in ENSEMBLES + ("mixed",):
            raise ConfigError(f"unknown ensemble {self.ensemble!r}")
        if self.radius_kind not in ("half", "mrs"):
            raise ConfigError("radius kind must be 'half' or 'mrs'")
        if self.gauge is not None:
            try:
                gauge_from_name(self.gauge)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc

    def cells(self) -> list[Cell]:
        ps = self.p if self.p is not None else [None]
        return [
            Cell(self.suite, k, n, p, self.gauge, self.c, self.seed, self.ensemble,
                 self.ceiling, self.radius_kind)
            for k, n, p in itertools.product(self.k, self.degree, ps)
        ]

    def to_dict(self) -> dict:
        return {"schema": CONFIG_SCHEMA, **asdict(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if data.pop("schema", None) != CONFIG_SCHEMA:
            raise ConfigError(f"config schema must be {CONFIG_SCHEMA!r}")
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# output


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", newline=""), True
    except OSError as exc:
        raise ConfigError(f"cannot write output path {path!r}: {exc.strerror}") from exc


def write_rows(rows: Sequence[Sequence], header: Sequence[str], path: str | None) -> None:
    out, close = _open_out(path)
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if close:
            out.close()


def write_json(data: dict, path: str | None) -> None:
    text = json.dumps(data, indent=2, sort_keys=True, default=float)
    if path is None:
        print(text, file=sys.stderr)
        return
    out, close = _open_out(path)
    try:
        out.write(text + "\n")
    finally:
        if close:
            out.close()


def _stamp(summary: dict) -> dict:
    return {**summary, "generated": datetime.now(timezone.utc).isoformat(timespec="seconds")}


def run(config: ExperimentConfig) -> tuple[int, SuiteReport]:
    """Execute a verify config and write its CSV and JSON outputs."""
    config.validate()
    # fail on unwritable paths before spending time on the sweep
    for path in (config.csv_path, config.json_path):
        if path not in (None, "-"):
            _open_out(path)[0].close()
    report = run_suite(config.suite, config.cells(), config.trials, config.workers)
    write_rows([r.csv_fields() for r in report.rows], CSV_COLUMNS, config.csv_path)
    write_json(_stamp(report.summary()), config.json_path)
    return report.exit_code(), report


# ---------------------------------------------------------------------------
# exponent table


def exponent_table(p_grid: Sequence[float]) -> list[tuple[float, float, float, float, float]]:
    """Rows (p, grad_exponent, generator_exponent, c_B, alpha_B); c_B is inf at p = 1."""
    rows = []
    for p in p_grid:
        p = float(p)
        if not p >= 1:
            raise ValueError(f"exponent table needs p >= 1, got {p}")
        if p == 1:
            rows.append((1.0, 1.0, 2.0, math.inf, 2.0))
            continue
        lens = LensDomain.for_power(p)
        rows.append((p, grad_exponent(p), generator_exponent(p), lens.c_B, lens.alpha))
    return rows


# ---------------------------------------------------------------------------
# argument parsing


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def _complex(text: str) -> complex:
    return complex(text.replace(" ", ""))


def _add_output(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--csv", default=None, help="CSV output path (default stdout)")
    sp.add_argument("--json", default=None, help="JSON summary path (default stderr)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gbl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a randomized verification suite")
    v.add_argument("--suite", required=True, help=f"one of: {', '.join(sorted(SUITES))}")
    v.add_argument("--k", type=_int_list, default=[1], help="dimension(s), comma separated")
    v.add_argument("--deg", type=_int_list, default=[4], help="degree(s), comma separated")
    v.add_argument("--p", type=_float_list, default=None, help="exponent(s), comma separated")
    v.add_argument("--gauge", default=None, help="exp, quartic or power:<p>")
    v.add_argument("--c", type=float, default=None, help="lens constant c_B")
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--ensemble", default="mixed", help=f"{', '.join(ENSEMBLES)} or mixed")
    v.add_argument("--ceiling", type=float, default=EMPIRICAL_CEILING)
    v.add_argument("--radius", dest="radius_kind", default="half", choices=("half", "mrs"))
    v.add_argument("--workers", type=int, default=None)
    v.add_argument("--config", default=None, help="JSON config file (overrides flags)")
    v.add_argument("--save-config", default=None, help="write the effective config here")
    _add_output(v)

    e = sub.add_parser("extremal", help="search for extremal gradient or generator ratios")
    e.add_argument("--k", type=int, default=1)
    e.add_argument("--deg", type=_int_list, default=[4])
    e.add_argument("--p", type=float, required=True)
    e.add_argument("--restarts", type=int, default=32)
    e.add_argument("--objective", choices=OBJECTIVES, default="gradient")
    e.add_argument("--seed", type=int, default=0)
    _add_output(e)

    ln = sub.add_parser("lens", help="gauge constant and lens geometry")
    g = ln.add_mutually_exclusive_group(required=True)
    g.add_argument("--p", type=float)
    g.add_argument("--gauge")
    g.add_argument("--c", type=float)
    ln.add_argument("--json", default=None, help="output path (default stdout)")

    f = sub.add_parser("flow", help="trace the interpolating flow for a random polynomial")
    gf = f.add_mutually_exclusive_group(required=True)
    gf.add_argument("--p", type=float)
    gf.add_argument("--gauge")
    f.add_argument("--k", type=int, default=1)
    f.add_argument("--deg", type=int, default=3)
    f.add_argument("--z", type=_complex, default=0.5j, help="complex point, e.g. 0.3+0.2j")
    f.add_argument("--grid", type=int, default=16)
    f.add_argument("--seed", type=int, default=0)
    _add_output(f)

    fr = sub.add_parser("freud", help="sup-norm Freud ratios of H_n and their log-log slope")
    fr.add_argument("--nmin", type=int, default=2)
    fr.add_argument("--nmax", type=int, default=12)
    _add_output(fr)

    t = sub.add_parser("table", help="exponent table over a p grid")
    t.add_argument("--p-grid", type=_float_list, default=[1, 1.5, 2, 3, 4, 6, 8, 16])
    t.add_argument("--csv", default=None)
    return parser


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


def _cmd_verify(args) -> int:
    if args.config:
        try:
            with open(args.config) as fh:
                config = ExperimentConfig.from_json(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc.strerror}") from exc
    else:
        config = ExperimentConfig(
            suite=args.suite, k=args.k, degree=args.deg, p=args.p, gauge=args.gauge, c=args.c,
            trials=args.trials, seed=args.seed, ensemble=args.ensemble, ceiling=args.ceiling,
            radius_kind=args.radius_kind, workers=args.workers, csv_path=args.csv,
            json_path=args.json,
        )
    config.validate()
    if args.save_config:
        out, close = _open_out(args.save_config)
        out.write(config.to_json() + "\n")
        if close:
            out.close()
    code, _ = run(config)
    return code


def _cmd_extremal(args) -> int:
    start = time.perf_counter()
    reports = [
        extremal_search(args.k, n, args.p, args.restarts, args.objective, args.seed) for n in args.deg
    ]
    rows = [
        ("extremal_" + r.objective, r.k, r.n, _fmt(r.p), repr(r.best_ratio),
         repr(r.best_ratio / r.normalized), repr(r.normalized),
         "true" if r.converged else "inconclusive")
        for r in reports
    ]
    write_rows(rows, CSV_COLUMNS, args.csv)
    summary = {
        "schema": "gbl.extremal/1",
        "reports": [r.to_dict() for r in reports],
        "runtime": time.perf_counter() - start,
    }
    if len(reports) >= 2:
        summary["loglog_slope"] = loglog_slope([r.n for r in reports], [r.best_ratio for r in reports])
    write_json(summary, args.json)
    return EXIT_OK if all(r.converged for r in reports) else EXIT_INCONCLUSIVE


def _cmd_lens(args) -> int:
    if args.c is not None:
        lens, name = LensDomain.from_constant(args.c), f"c={args.c:g}"
    else:
        gauge = power_gauge(args.p) if args.p is not None else gauge_from_name(args.gauge)
        lens, name = LensDomain.from_gauge(gauge), gauge.name
    data = {
        "schema": "gbl.lens/1",
        "gauge": name,
        **lens.to_dict(),
        "alpha_generator": lens.alpha,
        "corner_angle": lens.corner_angle,
    }
    if args.p is not None:
        data["grad_exponent"] = grad_exponent(args.p)
    text = json.dumps(data, indent=2, sort_keys=True)
    if args.json is None:
        print(text)
    else:
        write_json(data, args.json)
    return EXIT_OK


def _cmd_flow(args) -> int:
    gauge = power_gauge(args.p) if args.p is not None else gauge_from_name(args.gauge)
    rng = trial_rng(args.seed, "flow-cli", f"k={args.k}/n={args.deg}", 0)
    P: GaussPoly = random_poly(rng, args.k, args.deg, "complex")
    trace = monotonicity_scan(P, gauge, args.z, args.grid)
    write_rows([(repr(s), repr(r)) for s, r in trace.rows()], ("s", "r"), args.csv)
    write_json(
        {
            "schema": "gbl.flow/1",
            "gauge": gauge.name,
            "z": [args.z.real, args.z.imag],
            "min_increment": trace.min_increment,
            "scale": trace.scale,
            "monotone": trace.monotone,
            "polynomial": P.to_dict(),
        },
        args.json,
    )
    return EXIT_OK if trace.monotone else EXIT_VIOLATION


def _cmd_freud(args) -> int:
    ns = list(range(args.nmin, args.nmax + 1))
    ratios = hermite_freud_ratios(ns)
    rows = [("freud_hermite", 1, n, "inf", repr(float(r)), repr(math.sqrt(n)), repr(float(r) / math.sqrt(n)),
             "true") for n, r in zip(ns, ratios)]
    write_rows(rows, CSV_COLUMNS, args.csv)
    write_json({"schema": "gbl.freud/1", "loglog_slope": loglog_slope(ns, ratios)}, args.json)
    return EXIT_OK


def _cmd_table(args) -> int:
    rows = [[_fmt(x) for x in row] for row in exponent_table(args.p_grid)]
    write_rows(rows, ("p", "grad_exponent", "generator_exponent", "c_B", "alpha_B"), args.csv)
    return EXIT_OK


COMMANDS = {
    "verify": _cmd_verify,
    "extremal": _cmd_extremal,
    "lens": _cmd_lens,
    "flow": _cmd_flow,
    "freud": _cmd_freud,
    "table": _cmd_table,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INCONCLUSIVE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"gbl: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except ValueError as exc:
        print(f"gbl: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE


if __name__ == "__main__":
    sys.exit(main())
