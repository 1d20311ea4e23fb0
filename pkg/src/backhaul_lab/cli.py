"""Command-line entry point: evaluate, simulate and sweep scenarios to CSV.

Exit codes: 0 success, 2 scenario validation failure, 3 runtime failure.
A failure of one engine at one sweep point writes a ``nan`` row and a
diagnostic on stderr; the run continues.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import scenario as sc
from .channels import access_snr_cdf
from .montecarlo import AccessOnly, RngStream, SampleSpec, estimate_outage, worker_count
from .network import mesh_outage, topology_outage

CSV_HEADER = ("sweep_value", "engine", "metric", "value", "ci_halfwidth")
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3
# stream ids reserved per sweep point (candidates / routes share a point)
STREAMS_PER_POINT = 64


def _analytic(cfg: dict, engine: str) -> tuple[float, float]:
    t = cfg["topology"]
    if t["ue_walk"] is not None:
        raise AssertionError("walk handled by caller")
    if int(t["n_routes"]) > 1:
        routes = sc.build_routes(cfg)
        return mesh_outage([topology_outage(r, engine).value for r in routes]), 0.0
    return topology_outage(sc.build_topology(cfg), engine).value, 0.0


def _simulate(cfg: dict, seed: int, stream_id: int, workers: int) -> tuple[float, float]:
    spec = _sample_spec(cfg)
    stream = RngStream(seed, stream_id)
    t = cfg["topology"]
    target = sc.build_routes(cfg) if int(t["n_routes"]) > 1 else sc.build_topology(cfg)
    est = estimate_outage(target, spec, stream, workers)
    return est.value, est.ci_halfwidth


def _sample_spec(cfg: dict) -> SampleSpec:
    m = cfg["mc"]
    return SampleSpec(n_samples=int(m["samples"]), confidence=m["confidence"], thz_sum_mode=m["thz_sum_mode"])


def _walk(cfg: dict, position: float, engine: str, seed: int, stream_base: int, workers: int) -> tuple[float, float]:
    """Best-serving node for a UE at ``position``: lowest outage among candidates."""
    best = (math.inf, 0.0)
    for i, cand in enumerate(sc.walk_candidates(cfg, position)):
        if engine == "mc":
            target = AccessOnly(cand[1], cand[2]) if isinstance(cand, tuple) else cand
            est = estimate_outage(target, _sample_spec(cfg), RngStream(seed, stream_base + i), workers)
            result = (est.value, est.ci_halfwidth)
        elif isinstance(cand, tuple):
            result = (access_snr_cdf(cand[2], cand[1]), 0.0)
        else:
            result = (topology_outage(cand, engine).value, 0.0)
        if result[0] < best[0]:
            best = result
    return best


def evaluate_point(cfg: dict, value: float, engine: str, seed: int, index: int, workers: int = 1) -> tuple[float, float]:
    point = sc.apply_sweep(cfg, value)
    stream_base = index * STREAMS_PER_POINT
    if point["topology"]["ue_walk"] is not None:
        position = value if (cfg["sweep"] or {}).get("variable") == "ue_position" else 0.0
        return _walk(point, position, engine, seed, stream_base, workers)
    if engine == "mc":
        return _simulate(point, seed, stream_base, workers)
    return _analytic(point, engine)


def run(cfg: dict, engines: list[str], seed: int, err=None) -> list[tuple]:
    err = err or sys.stderr
    values = sc.sweep_values(cfg)
    metric = sc.metric_name(cfg)
    jobs = [(i, v, e) for i, v in enumerate(values) for e in engines]
    pool_size = max(1, min(worker_count(), len(jobs)))
    inner = 1 if pool_size > 1 else worker_count()

    def work(job):
        i, v, e = job
        try:
            return evaluate_point(cfg, v, e, seed, i, inner), None
        except Exception as exc:  # one engine failing at one point must not stop the sweep
            return (math.nan, math.nan), f"{e} at {cfg['sweep']['variable'] if cfg['sweep'] else 'power_db'}={v:g}: {type(exc).__name__}: {exc}"

    if pool_size > 1:
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]
    rows = []
    for (i, v, e), ((val, ci), problem) in zip(jobs, results):
        if problem:
            print(f"warning: {problem}", file=err)
        rows.append((v, e, metric, val, ci))
    return rows


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def format_csv(rows: list[tuple]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(c) for c in row])
    return buf.getvalue()


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------


def _load(args) -> sc.RawScenario:
    if args.preset and args.scenario:
        raise sc.ScenarioError(["give either --scenario or --preset, not both"])
    if args.preset:
        return sc.preset(args.preset)
    if args.scenario:
        return sc.load_file(args.scenario)
    raise sc.ScenarioError(["no scenario given (use --scenario PATH or --preset NAME)"])


def _apply_overrides(raw: sc.RawScenario, args, forced_engines: list[str] | None, allowed: tuple[str, ...]) -> None:
    if getattr(args, "engines", None):
        raw.data["engines"] = [e.strip() for e in args.engines.split(",") if e.strip()]
    if forced_engines is not None:
        raw.data["engines"] = forced_engines
    elif allowed != sc.ENGINES:
        given = raw.data.get("engines", sc.DEFAULTS["engines"])
        if isinstance(given, list):
            kept = [e for e in given if e in allowed]
            raw.data["engines"] = kept or [allowed[0]]
    if getattr(args, "samples", None) is not None:
        mc = raw.data.get("mc")
        raw.data["mc"] = dict(mc) if isinstance(mc, dict) else {}
        raw.data["mc"]["samples"] = args.samples


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_run(args, forced: list[str] | None, allowed: tuple[str, ...]) -> int:
    raw = _load(args)
    _apply_overrides(raw, args, forced, allowed)
    cfg = sc.resolve(raw)
    bad = [e for e in cfg["engines"] if e not in allowed]
    if bad:
        raise sc.ScenarioError([f"command {args.command!r} does not run engine(s) {bad}"])
    if args.dump_resolved:
        _emit(sc.dump(cfg), args.out)
        return EXIT_OK
    rows = run(cfg, cfg["engines"], args.seed)
    _emit(format_csv(rows), args.out)
    return EXIT_OK


def _cmd_validate(args) -> int:
    raw = _load(args)
    diags = sc.diagnose(raw)
    for d in diags:
        print(d)
    if not diags:
        print(f"{raw.source}: ok")
    return EXIT_INVALID if diags else EXIT_OK


def _cmd_presets(args) -> int:
    if args.action == "list":
        for name in sc.PRESETS:
            print(name)
        return EXIT_OK
    if not args.name:
        raise sc.ScenarioError(["presets show needs a preset name"])
    sys.stdout.write(sc.dump(sc.resolve(sc.preset(args.name))))
    return EXIT_OK


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="backhaul-lab", description="Outage of hybrid THz/FSO backhaul networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p, engines=True, samples=True):
        p.add_argument("--scenario", help="scenario YAML file")
        p.add_argument("--preset", help="built-in scenario name (see 'presets list')")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--seed", type=_u64, default=0, help="Monte Carlo seed (unsigned 64-bit)")
        p.add_argument("--dump-resolved", action="store_true", help="print the fully resolved scenario and exit")
        if engines:
            p.add_argument("--engines", help="comma-separated subset of closed,asymptotic,mc")
        if samples:
            p.add_argument("--samples", type=int, help="Monte Carlo sample count")

    scenario_args(sub.add_parser("eval", help="analytic engines (closed, asymptotic)"), samples=False)
    scenario_args(sub.add_parser("simulate", help="Monte Carlo engine"), engines=False)
    scenario_args(sub.add_parser("sweep", help="all engines listed in the scenario"))
    p = sub.add_parser("validate", help="check a scenario without running it")
    p.add_argument("--scenario")
    p.add_argument("--preset")
    p = sub.add_parser("presets", help="list or show built-in scenarios")
    p.add_argument("action", choices=("list", "show"))
    p.add_argument("name", nargs="?")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "eval":
            return _cmd_run(args, None, ("closed", "asymptotic"))
        if args.command == "simulate":
            return _cmd_run(args, ["mc"], ("mc",))
        if args.command == "sweep":
            return _cmd_run(args, None, sc.ENGINES)
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_presets(args)
    except sc.ScenarioError as exc:
        for d in exc.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
