"""Command-line front end: decay curves, angle scans, energy flow, sweeps and validation."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import zeno
from .config import OUTPUT_ENV, PRESETS, ConfigError, RunConfig, preset_config

logger = logging.getLogger("rabizeno")

COMMANDS = ("decay", "angles", "energy", "validate", "sweep")
_FMT = ".17g"


class MemoryGuardError(RuntimeError):
    pass


def _num(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), _FMT)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


# ---------------------------------------------------------------------------
# memory guard

def _available_memory() -> int:
    try:
        return os.sysconf("SC_AVPHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError, AttributeError):
        return 1 << 62


def check_memory(cfg: RunConfig, points: list[dict], jobs: int) -> int:
    """Estimated peak bytes of the largest job times ``jobs``; raises if above free memory."""
    if cfg.task["engine"] != "tdvp":
        return 0
    from .tensornet.layout import estimate_memory_bytes, layout_for
    worst = 0
    for point in points:
        c = cfg.at_point(point)
        layout = layout_for(c.params(), c.state(), c.numerics())
        worst = max(worst, estimate_memory_bytes(layout, c.numerics()))
    need = worst * max(1, jobs)
    avail = _available_memory()
    if need > avail:
        raise MemoryGuardError(f"estimated memory {need / 2**30:.2f} GiB for {jobs} job(s) exceeds "
                               f"available {avail / 2**30:.2f} GiB; lower --jobs, numerics.n_max "
                               "or numerics.d_max")
    return need


# ---------------------------------------------------------------------------
# per-point workers (top level so they pickle)

def _decay_point(cfg: RunConfig):
    curve = zeno.decay_curve(cfg.task["engine"], cfg.params(), cfg.state(), cfg.tau_grid(),
                             cfg=cfg.numerics(), auto_n_max=cfg.blocks["numerics"]["auto_n_max"])
    rows = [[t, p, g, curve.engine] for t, p, g in zip(curve.tau_grid, curve.p_sur, curve.gamma)]
    summary = {"report": curve.report}
    if len(curve) >= 5:
        cls = zeno.classify_and_crossover(curve)
        summary.update(kind=cls.kind, tau_c=cls.tau_c, sign_changes=cls.sign_changes)
    return rows, summary


def _angles_point(cfg: RunConfig, jobs: int = 1):
    params, st = cfg.params(), cfg.state()
    rows, scans = [], []
    for tau in cfg.tau_values():
        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", message="angle grid step")
            scan = zeno.critical_angle_scan(cfg.task["engine"], params, st, tau,
                                            cfg.task["phi_grid"], cfg=cfg.numerics(), jobs=jobs)
        beta = "inf" if math.isinf(st.beta) else st.beta
        rows += [[phi, gam, st.r, params.g, tau, beta] for phi, gam in zip(scan.phi, scan.gamma)]
        scans.append({"tau": tau, "phi_max": scan.phi_max, "phi_min": scan.phi_min,
                      "separation": scan.separation, "degenerate": scan.degenerate,
                      "modulation_depth": scan.modulation_depth, "grid_step": scan.step})
    return rows, {"scans": scans}


def _energy_point(cfg: RunConfig):
    params, st = cfg.params(), cfg.state()
    t_final = cfg.t_final()
    n = int(round(t_final / cfg.task["t_step"]))
    times = np.linspace(0.0, t_final, n + 1)
    engine = cfg.task["engine"]
    if engine == "tdvp":
        from .tensornet.driver import simulate
        traj = simulate(params, st, cfg.numerics(), t_final, times,
                        auto_n_max=cfg.blocks["numerics"]["auto_n_max"])
        report = traj.report
    elif engine == "se":
        from .se_oracle import se_evolve
        traj = se_evolve(params, st, t_final, sample_times=times)
        report = traj.report
    else:
        raise ValueError(f"energy flow needs a time-domain engine (tdvp or se), not {engine!r}")
    flow = zeno.energy_flow_analysis(traj, fit_window=cfg.task["fit_window"])
    surv = np.asarray(traj.survival)
    rows = [[t, e, *em, p] for t, e, em, p in zip(flow.times, flow.e_tls, flow.e_modes, surv)]
    summary = {"a1": flow.a1, "a2": flow.a2, "qaze_enabling": flow.qaze_enabling,
               "identity_error": flow.identity_error,
               "backflow": {str(m): iv for m, iv in flow.backflow.items() if iv},
               "report": report}
    return rows, summary


def _worker(args):
    command, blocks, jobs = args
    cfg = RunConfig(blocks)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if command == "decay":
            rows, summary = _decay_point(cfg)
        elif command == "angles":
            rows, summary = _angles_point(cfg, jobs)
        else:
            rows, summary = _energy_point(cfg)
    summary["warnings"] = sorted({str(w.message) for w in caught})
    return rows, summary


def _header(command: str, cfg: RunConfig) -> list[str]:
    if command == "decay":
        return ["tau", "p_sur", "gamma", "engine"]
    if command == "angles":
        return ["phi", "gamma", "r", "g", "tau", "beta"]
    M = cfg.blocks["model"]["num_modes"]
    return ["t", "e_tls"] + [f"e_mode_{m}" for m in range(M)] + ["p_sur"]


def _collapse(rows, header):
    """Largest relative spread of ``gamma/g^2`` across coupling values at equal (phi, r, tau, beta, rest)."""
    ig = header.index("g")
    groups: dict = {}
    for row in rows:
        key = tuple(v for i, v in enumerate(row) if i not in (1, ig))
        groups.setdefault(key, []).append(row[1] / row[ig] ** 2)
    spreads = [max(v) / min(v) - 1 for v in groups.values() if len(v) > 1 and min(v) > 0]
    return max(spreads) if spreads else None


def run_command(command: str, cfg: RunConfig, *, jobs: int = 1, tag: str = "run") -> dict:
    """Execute ``decay``, ``angles`` or ``energy`` over the configured sweep and write outputs."""
    points = cfg.points()
    check_memory(cfg, points, jobs)
    cfg.task["command"] = command
    header = _header(command, cfg)
    axes = [name for name in points[0] if name.split(".", 1)[1] not in header]
    inner_jobs = jobs if len(points) == 1 else 1
    tasks = [(command, cfg.at_point(p).blocks, inner_jobs) for p in points]
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_worker, tasks))
    else:
        results = [_worker(t) for t in tasks]

    all_rows = []
    summaries = []
    for point, (rows, summary) in zip(points, results):
        extra = [point[a] for a in axes]
        all_rows += [row + extra for row in rows]
        summaries.append({"point": point, **summary})
    header = header + axes
    if command == "energy" and len(points) > 1:
        # mode counts may differ across points; pad to the widest
        width = max(len(r) for r in all_rows)
        all_rows = [r + [""] * (width - len(r)) for r in all_rows]

    out_dir = Path(cfg.blocks["output"]["directory"])
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    stem = f"{command}_{tag}_{digest}"
    formats = {f.strip() for f in cfg.blocks["output"]["formats"].split(",")}
    files = {}
    if "csv" in formats:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(header)
        for row in all_rows:
            writer.writerow([_num(v) for v in row])
        path = out_dir / f"{stem}.csv"
        path.write_text(buf.getvalue(), newline="")
        files["csv"] = str(path)
    extra = {}
    if command == "angles" and "g" in header:
        extra["gamma_over_g2_spread"] = _collapse(all_rows, header)
    sidecar = {"command": command, "config_hash": digest, "config": cfg.to_dict(),
               "points": summaries, **extra}
    if "json" in formats:
        path = out_dir / f"{stem}.json"
        path.write_text(json.dumps(_jsonable(sidecar), indent=2, sort_keys=True) + "\n")
        files["json"] = str(path)
    return {"files": files, "summary": sidecar}


# ---------------------------------------------------------------------------
# validation battery

def _check(name, value, tol, *, below=True, warn_only=False):
    ok = value < tol if below else value > tol
    status = "PASS" if ok else ("WARN" if warn_only else "FAIL")
    return {"check": name, "value": float(value), "tol": tol, "status": status}


def run_validate(cfg: RunConfig | None = None, *, quick: bool = False) -> list[dict]:
    """Property battery; every entry carries the measured value and its tolerance."""
    from .model import ModelParams, SqueezeThermal, bose_occupation
    from .se_oracle import se_evolve
    from .tensornet.dense import dense_check, drop_equivalence
    from .tensornet.layout import ChainLayout, NumericsConfig, layout_for
    from .tensornet.mpo import MPOCheckError, build_mpo
    from .tensornet.mps import initial_mps
    from .tensornet.observables import measure

    cfg = cfg or RunConfig()
    ncfg = cfg.numerics()
    results = []

    # MPO against dense assembly, and Hermiticity, over a small parameter grid
    grid = [(M, n, r, phi, beta) for M in (1, 2) for n in (2, 3)
            for r, phi, beta in ((0.0, 0.0, math.inf), (0.3, math.pi / 2, 0.5),
                                 (0.5, 1.0, 1.0))]
    diff = herm = 0.0
    for M, n, r, phi, beta in grid:
        p = ModelParams(g=0.2, num_modes=M)
        st = SqueezeThermal(r=r, phi=phi, beta=beta)
        c = ncfg.replace(n_max=n, drop_fictitious_at_t0=False)
        try:
            mpo = build_mpo(p, st, ChainLayout(M, n), c, check=True)
            diff = max(diff, mpo.checks["dense_difference"])
            herm = max(herm, mpo.checks["hermiticity_error"])
        except MPOCheckError as exc:
            info = getattr(exc, "checks", {}) or {}
            diff = max(diff, info.get("dense_difference", math.inf))
            herm = max(herm, info.get("hermiticity_error", math.inf))
    results.append(_check("mpo_dense_equality", diff, 1e-12))
    results.append(_check("mpo_hermiticity", herm, 1e-12))

    times = np.linspace(0, 5, 11)
    results.append(_check("t0_fictitious_drop", drop_equivalence(
        ModelParams(g=0.1, num_modes=2), SqueezeThermal(r=0.3, phi=math.pi / 2), 3, times), 1e-10))

    se = se_evolve(ModelParams(g=0.1), SqueezeThermal(beta=0.5), 1.0)
    results.append(_check("se_step_halving", se.report["halving_delta"], 1e-9))
    results.append(_check("se_norm", se.report["norm_error"], 1e-8))

    # thermal occupation read back through the dressing at g = 0
    p0, st0 = ModelParams(g=0.0, num_modes=3), SqueezeThermal(beta=0.5)
    c0 = ncfg.replace(n_max=40)
    lay0 = layout_for(p0, st0, c0)
    mpo0 = build_mpo(p0, st0, lay0, c0, check=False)
    psi0 = initial_mps(lay0, c0.d_max)
    occ = max(abs(measure(psi0, f"number:{m}", mpo0) - bose_occupation(0.5, p0.omegas[m]))
              for m in range(3))
    results.append(_check("thermal_occupation", occ, 1e-8))

    if not quick:
        dc = ncfg.replace(n_max=3, d_max=16)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = dense_check(ModelParams(g=0.1, num_modes=2),
                              SqueezeThermal(r=0.3, phi=math.pi / 2, beta=0.5), dc)
        results.append(_check("tdvp_vs_dense", rep.max_survival_dev, 1e-6))
        results.append(_check("tdvp_norm", rep.tdvp.report["max_norm_error"], 1e-8))
        results.append(_check("tdvp_energy_drift", rep.tdvp.report["energy_rel_drift"], 1e-6))

        from .analytic import RateQuery, gamma_th
        tau = np.array([0.05, 0.1, 0.2, 0.4, 0.7, 1.0])
        pw, sw = ModelParams(g=0.01), SqueezeThermal(beta=0.5)
        ana = gamma_th(RateQuery(pw, sw, tau))
        se_curve = zeno.decay_curve("se", pw, sw, tau)
        results.append(_check("analytic_vs_se", float(np.max(np.abs(se_curve.gamma / ana - 1))), 0.02))

    # Fock-cutoff tail at the configured coupling and cutoff
    pt = ModelParams(g=cfg.blocks["model"]["g"], num_modes=2)
    tc = ncfg.replace(n_max=min(ncfg.n_max, 12))
    from .tensornet.driver import simulate
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        traj = simulate(pt, cfg.state(), tc, 1.0 / max(pt.g, 1e-3) if pt.g else 1.0,
                        np.linspace(0, 1.0 / pt.g if pt.g else 1.0, 5), measure_modes=False)
    results.append(_check(f"fock_tail(n_max={tc.n_max})", traj.report["fock_tail"],
                          ncfg.tail_tol, warn_only=True))
    return results


def _format_table(results) -> str:
    width = max(len(r["check"]) for r in results)
    lines = [f"{'check':<{width}}  {'value':>12}  {'tol':>9}  status"]
    for r in results:
        lines.append(f"{r['check']:<{width}}  {r['value']:12.3e}  {r['tol']:9.1e}  {r['status']}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rabizeno", description=(
        "Zeno and anti-Zeno decay rates of a qubit coupled to many bosonic modes."))
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} task")
        sp.add_argument("--config", type=Path, help="INI file or a JSON sidecar of an earlier run")
        sp.add_argument("--preset", choices=sorted(PRESETS))
        sp.add_argument("--engine", choices=zeno.ENGINES)
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp.add_argument("--out", type=Path, help=f"output directory (default ${OUTPUT_ENV})")
        sp.add_argument("overrides", nargs="*", metavar="block.key=value")
        if name == "validate":
            sp.add_argument("--quick", action="store_true", help="skip the slower checks")
    return ap


def _resolve(args) -> RunConfig:
    cfg = preset_config(args.preset) if args.preset else RunConfig()
    if args.config:
        cfg.load_file(args.config)
    cfg.apply_overrides(args.overrides)
    if args.engine:
        cfg.set("task", "engine", args.engine)
    if args.out:
        cfg.set("output", "directory", str(args.out))
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        if args.command == "validate":
            results = run_validate(cfg, quick=args.quick)
            print(_format_table(results))
            return 1 if any(r["status"] == "FAIL" for r in results) else 0
        command = cfg.task["command"] if args.command == "sweep" else args.command
        if command not in ("decay", "angles", "energy"):
            raise ConfigError(f"task.command must be decay, angles or energy, not {command!r}")
        out = run_command(command, cfg, jobs=args.jobs, tag=args.preset or "run")
    except (ConfigError, MemoryGuardError, ValueError) as exc:
        print(f"rabizeno: error: {exc}", file=sys.stderr)
        return 2
    for kind, path in out["files"].items():
        print(f"wrote {path}")
    for point in out["summary"]["points"]:
        for msg in point.get("warnings", []):
            print(f"warning: {msg}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
