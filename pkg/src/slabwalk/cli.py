"""Command-line driver: ``slabwalk <subcommand> --config run.cfg``.

Exit codes: 0 success, 1 check failure, 2 config error, 3 resource guard.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import kernel, schedule, slab
from .config import ALL_CHECKS, ConfigError, RunConfig, load_config
from .graph import SIDE_E, SIDE_O, BoxSpec, GraphError, WeightedGraph, dump_graph, enumerate_graph, glue, glue_unweighted
from .verify import CheckResult, check_delmotte, check_nk, check_poincare, check_volume_doubling, format_report, smoothing_stability

log = logging.getLogger("slabwalk")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3


class ResourceGuard(RuntimeError):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write(path: Path, text: str) -> None:
    if text and not text.endswith("\n"):
        text += "\n"
    path.write_text(text)
    log.info("wrote %s", path)


def _build(cfg: RunConfig, pred, radius: int, side: int = 0) -> WeightedGraph:
    box = BoxSpec(radius)
    if box.n_points(cfg.d) > cfg.max_vertices:
        raise ResourceGuard(
            f"box of radius {radius} in d={cfg.d} holds {box.n_points(cfg.d)} points, budget {cfg.max_vertices}"
        )
    return enumerate_graph(pred, box, cfg.d, side)


def _h_pred(sched, parity: str, k: int, first_scale: int):
    return lambda pts: slab.H_mask(pts, parity, k, sched, first_scale)


def _f_pred(sched, parity: str, k: int, first_scale: int):
    return lambda pts: slab.F_mask(pts, parity, k, sched, first_scale)


# -- schedule -----------------------------------------------------------------


def estimate_constants(cfg: RunConfig, sched: schedule.ScaleSchedule) -> schedule.ConstantsReport:
    """Constants of one induction round from the H and F graphs of the current prefix."""
    k = len(sched)
    horizon = cfg.constants_horizon
    radius = horizon + 1
    alpha, beta, eps = 0.0, 0.0, {}
    for parity in ("even", "odd"):
        h = _build(cfg, _h_pred(sched, parity, k, cfg.first_scale), radius)
        x = h.marker("origin")
        p = kernel.heat_kernel_diag(h, x, horizon)
        alpha = max(alpha, kernel.estimate_alpha(p, cfg.d))
        eps[parity] = kernel.escape_from_series(p, kernel.first_return(h, x, horizon), cfg.d)

        f_graph = _build(cfg, _f_pred(sched, parity, k, cfg.first_scale), radius)
        f_series = kernel.first_return(f_graph, f_graph.marker("origin"), horizon)
        beta = max(beta, kernel.estimate_beta(f_series, cfg.s))
    eps_e = schedule.EscapeBounds(eps["even"].lower, eps["even"].upper)
    eps_o = schedule.EscapeBounds(eps["odd"].lower, eps["odd"].upper)
    return schedule.ConstantsReport(
        alpha, beta, horizon, eps_e, eps_o, schedule.ConstantsReport.delta_from(eps_e, eps_o)
    )


def _constants_line(k: int, rep: schedule.ConstantsReport, gamma: int) -> str:
    delta = math.nan if rep.delta is None else rep.delta
    fields = [
        rep.alpha, rep.beta, rep.epsilon_e.lower, rep.epsilon_e.upper,
        rep.epsilon_o.lower, rep.epsilon_o.upper, delta,
    ]
    return f"{k} {rep.horizon} " + " ".join(_fmt(v) for v in fields) + f" {gamma}"


def cmd_schedule(cfg: RunConfig, out: Path) -> int:
    sched = schedule.seed_schedule(cfg.d, cfg.s, cfg.a_seed)
    lines = ["# k horizon alpha beta eps_e_lo eps_e_hi eps_o_lo eps_o_hi delta gamma"]
    status = EXIT_OK
    try:
        for _ in range(2, cfg.scales + 1):
            rep = estimate_constants(cfg, sched)
            nxt = schedule.extend_schedule(sched, rep, cfg.gamma_cap)
            lines.append(_constants_line(len(nxt), rep, nxt.gamma[-1]))
            if nxt.a[-1] > cfg.box_radius:
                raise ResourceGuard(f"a_{len(nxt)}={nxt.a[-1]} exceeds box_radius={cfg.box_radius}")
            sched = nxt
            log.info("scale %d: a=%d gamma=%d", len(sched), sched.a[-1], sched.gamma[-1])
    except ResourceGuard as exc:
        log.error("resource guard at round %d: %s", len(sched) + 1, exc)
        status = EXIT_RESOURCE
    _write(out / "schedule.txt", schedule.dump_schedule(sched))
    _write(out / "constants.txt", "\n".join(lines))
    return status


# -- graphs -------------------------------------------------------------------


def _load_sched(cfg: RunConfig, out: Path) -> schedule.ScaleSchedule:
    path = Path(cfg.schedule_file) if cfg.schedule_file else out / "schedule.txt"
    if not path.exists():
        raise ConfigError(f"no schedule at {path}; run the schedule subcommand first")
    sched = schedule.load_schedule(path, cfg.d, cfg.s)
    return sched


def build_halves(cfg: RunConfig, sched) -> tuple[WeightedGraph, WeightedGraph]:
    k = len(sched)
    parities = {"e": "even", "o": "odd"}
    left, right = (parities[c] for c in cfg.sides)
    g_e = _build(cfg, _h_pred(sched, left, k, cfg.first_scale), cfg.box_radius, SIDE_E)
    g_o = _build(cfg, _h_pred(sched, right, k, cfg.first_scale), cfg.box_radius, SIDE_O)
    return g_e, g_o


def glue_weight(cfg: RunConfig, g_e: WeightedGraph, g_o: WeightedGraph) -> float:
    if cfg.delta_override is not None:
        return cfg.delta_override
    intervals = []
    for g in (g_e, g_o):
        x = g.marker("origin")
        h = g.exact_horizon(x)
        T = cfg.T if h is None else min(cfg.T, h)
        intervals.append(kernel.escape_prob(g, x, T, cfg.d))
    delta = schedule.ConstantsReport.delta_from(*intervals)
    if delta is None:
        raise ConfigError(
            "escape lower bounds are not positive (recurrent or short horizon); set delta_override"
        )
    log.info("delta = %.6g from escape intervals %s", delta, intervals)
    return delta


def build_glued(cfg: RunConfig, sched) -> tuple[WeightedGraph, WeightedGraph, WeightedGraph]:
    g_e, g_o = build_halves(cfg, sched)
    if cfg.glue == "unweighted":
        g = glue_unweighted(g_e, g_o, cfg.segment_length)
    else:
        g = glue(g_e, g_o, glue_weight(cfg, g_e, g_o))
    return g_e, g_o, g


def cmd_build(cfg: RunConfig, out: Path) -> int:
    sched = _load_sched(cfg, out)
    g_e, g_o, g = build_glued(cfg, sched)
    _write(out / "H_e.graph", dump_graph(g_e))
    _write(out / "H_o.graph", dump_graph(g_o))
    _write(out / "G.graph", dump_graph(g))
    return EXIT_OK


# -- kernels ------------------------------------------------------------------


def _exact_T(cfg: RunConfig, horizon) -> int:
    if horizon is None or horizon >= cfg.T or cfg.allow_approximate:
        return cfg.T
    raise kernel.HorizonError(f"exact horizon {horizon} is short of T={cfg.T}", horizon)


def cmd_kernel(cfg: RunConfig, out: Path) -> int:
    sched = _load_sched(cfg, out)
    g_e, g_o = build_halves(cfg, sched)
    cols = []
    for g in (g_e, g_o):
        x = g.marker("origin")
        T = _exact_T(cfg, g.exact_horizon(x))
        p = kernel.heat_kernel_diag(g, x, T).values
        f = kernel.first_return(g, x, T) if T >= 1 else np.zeros(1)
        cols += [p, f]
    rows = ["t,p_e,f_e,p_o,f_o"]
    rows += [",".join([str(t)] + [_fmt(c[t]) for c in cols]) for t in range(cfg.T + 1)]
    _write(out / "kernel.csv", "\n".join(rows))
    return EXIT_OK


def ratio_csv(table: kernel.RatioTable) -> str:
    rows = ["t,p_xx,p_yy,ratio"]
    for t, a, b, r, approx in zip(table.t, table.p_xx, table.p_yy, table.ratio, table.approximate):
        row = f"{t},{_fmt(a)},{_fmt(b)},{_fmt(r)}"
        rows.append(row + ",*" if approx else row)
    return "\n".join(rows) + "\n"


def cmd_experiment(cfg: RunConfig, out: Path) -> int:
    sched = _load_sched(cfg, out)
    _, _, g = build_glued(cfg, sched)
    table = kernel.ratio_experiment(g, g.marker("x"), g.marker("y"), cfg.T, cfg.allow_approximate)
    _write(out / "ratio.csv", ratio_csv(table))

    covered = [t for t in sched.t_checkpoints[1:] if t <= cfg.T and not table.approximate[t]]
    n_cov = 1 + len(covered)
    lines = []
    if n_cov > 1:
        head = replace(sched, t_checkpoints=sched.t_checkpoints[:n_cov])
        for r in check_nk(table, head, cfg.factor):
            lines.append(f"nk k={r.k} t={r.t} {_fmt(r.ratio)} {r.required} {'PASS' if r.passed else 'FAIL'}")
    for k in range(n_cov + 1, len(sched) + 1):
        lines.append(f"nk k={k} t={sched.t_checkpoints[k - 1]} - - UNCOVERED")
    _write(out / "nk.txt", "\n".join(lines))
    return EXIT_OK


def decomposition_csv(rows) -> str:
    lines = ["t,p1,p2,p3,p12,p_yy"]
    lines += [",".join([str(r.t)] + [_fmt(v) for v in (r.p1, r.p2, r.p3, r.p12, r.p_yy)]) for r in rows]
    return "\n".join(lines) + "\n"


def cmd_decompose(cfg: RunConfig, out: Path) -> int:
    sched = _load_sched(cfg, out)
    _, _, g = build_glued(cfg, sched)
    gamma = cfg.decompose_gamma if cfg.decompose_gamma is not None else max(1, sched.gamma[-1])
    times = cfg.decompose_times or (cfg.T,)
    x, y = g.marker("x"), g.marker("y")
    _exact_T(cfg, g.exact_horizon(y))
    rows = [kernel.visit_decomposition(g, x, y, t, gamma) for t in times]
    _write(out / "decompose.csv", decomposition_csv(rows))
    return EXIT_OK


# -- verification -------------------------------------------------------------


def verify_graph(cfg: RunConfig) -> tuple[WeightedGraph, int]:
    if cfg.verify_graph == "lattice":
        g = _build(cfg, lambda pts: np.ones(len(pts), dtype=bool), cfg.box_radius)
        return g, g.marker("origin")
    sched = _load_sched(cfg, Path(cfg.output_dir))
    if cfg.verify_graph == "G":
        _, _, g = build_glued(cfg, sched)
        return g, g.marker("x")
    kind, side = cfg.verify_graph.split("_")
    parity = "even" if side == "e" else "odd"
    make = _h_pred if kind == "H" else _f_pred
    g = _build(cfg, make(sched, parity, len(sched), cfg.first_scale), cfg.box_radius)
    return g, g.marker("origin")


def run_checks(cfg: RunConfig) -> list[CheckResult]:
    if not cfg.checks:
        return []
    g, x = verify_graph(cfg)
    horizon = g.exact_horizon(x)
    T = _exact_T(cfg, horizon)
    series = kernel.heat_kernel_diag(g, x, T)
    d_eff = cfg.effective_d
    r_room = (T if horizon is None else min(T, horizon)) // 2
    results = []
    for name in ALL_CHECKS:
        if name not in cfg.checks:
            continue
        if name == "delmotte":
            fit = check_delmotte(series, d_eff, (min(cfg.delmotte_start, T), T))
            results.append(CheckResult(
                "delmotte", f"[{fit.window[0]},{fit.window[1]}]", fit.spread,
                cfg.delmotte_max_ratio, fit.spread <= cfg.delmotte_max_ratio,
            ))
        elif name == "volume_doubling":
            fit = check_volume_doubling(g, x, max(1, r_room))
            bound = cfg.effective_doubling_bound
            results.append(CheckResult(
                "volume_doubling", f"[{fit.window[0]},{fit.window[1]}]", fit.C_upper, bound, fit.C_upper <= bound,
            ))
        elif name == "poincare":
            radii = cfg.poincare_radii or tuple(sorted({max(1, r_room // 4), max(1, r_room // 2), max(1, r_room)}))
            consts = [check_poincare(g, x, r) for r in radii]
            spread = max(consts) / min(consts) if all(c > 0 for c in consts) else math.inf
            results.append(CheckResult(
                "poincare", "[" + ",".join(map(str, radii)) + "]", spread,
                cfg.poincare_stability, spread <= cfg.poincare_stability,
            ))
        elif name == "lazy_smoothing":
            times = cfg.smoothing_times or tuple(sorted({max(2, T // 4), max(2, T // 2), max(2, T)}))
            _, worst, ok = smoothing_stability(series, times, cfg.smoothing_stability)
            results.append(CheckResult(
                "lazy_smoothing", "[" + ",".join(map(str, times)) + "]", worst, cfg.smoothing_stability, ok,
            ))
    return results


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    results = run_checks(cfg)
    _write(out / "report.txt", format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


COMMANDS = {
    "schedule": cmd_schedule,
    "build": cmd_build,
    "kernel": cmd_kernel,
    "experiment": cmd_experiment,
    "verify": cmd_verify,
    "decompose": cmd_decompose,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slabwalk", description="Slab-lattice lazy-walk ratio experiments.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="key = value configuration file")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.out:
            cfg = replace(cfg, output_dir=args.out)
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (ResourceGuard, MemoryError, kernel.HorizonError) as exc:
        log.error("resource guard: %s", exc)
        return EXIT_RESOURCE
    except (GraphError, schedule.ScheduleInvariantError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
