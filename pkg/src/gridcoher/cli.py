"""Command-line interface.

Subcommands:

* ``norm``      evaluate the synchronization norm by one or all methods
* ``sweep``     closed-form norms across network sizes and controllers
* ``simulate``  time-domain trajectories under a step load
* ``tune``      optimal DAPI communication gain

All randomness flows from the configured seeds (overridable with
``--seed``), outputs carry no timestamps, and the GRIDCOHER_THREADS
worker cap never changes results, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .controllers import (
    Capi,
    Dapi,
    Depi,
    Droop,
    GeneratorParams,
    assemble,
    controller_from_dict,
    params_from_dict,
)
from .errors import AssumptionError, ConfigError, GridcoherError
from .netmodel import (
    build_laplacian,
    load_edge_list,
    make_graph,
    spectrum,
)
from .perf import (
    draw_load,
    report_to_dict,
    report_to_json,
    scaling_bound_dapi,
    simulate_linear,
    simulate_nonlinear,
    sync_norm_closed_form,
    sync_norm_lyapunov,
    sync_norm_monte_carlo,
    trajectory_to_csv,
    trapezoid_energy,
)
from .tuning import gamma_optimum_to_dict, optimal_gamma_complete, optimal_gamma_general
from .util import thread_count

DEFAULT_MC_SAMPLES = 1000
METHODS = ("closed_form", "lyapunov", "monte_carlo", "all")


def _load_config(path):
    if path is None:
        raise ConfigError("--config is required")
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError(f"config root must be a JSON object, got {type(cfg).__name__}")
    return cfg


def _graph_from_cfg(gcfg, seed_override=None):
    if not isinstance(gcfg, dict):
        raise ConfigError("graph config must be an object")
    if "edge_list" in gcfg:
        return load_edge_list(gcfg["edge_list"])
    if "family" not in gcfg or "n" not in gcfg:
        raise ConfigError("graph config requires family and n (or edge_list)")
    extra = {k: gcfg[k] for k in ("p", "rows", "cols") if k in gcfg}
    seed = int(gcfg.get("seed", 0)) if seed_override is None else int(seed_override)
    return make_graph(
        gcfg["family"], int(gcfg["n"]), float(gcfg.get("weight", 1.0)), seed=seed, **extra
    )


def _params_from_cfg(cfg, n):
    pcfg = cfg.get("params")
    if not isinstance(pcfg, dict):
        raise ConfigError("config requires a params object with m and d")
    return params_from_dict(pcfg, n)


def _uniform_md(params: GeneratorParams):
    if not params.is_uniform:
        raise AssumptionError("closed form requires Assumption 1 (uniform m and d)")
    return params.uniform_m(), params.uniform_d()


def _write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _controller_tag(ctrl, index=None):
    if isinstance(ctrl, Droop):
        tag = "droop"
    elif isinstance(ctrl, Capi):
        tag = "capi"
    elif isinstance(ctrl, Depi):
        tag = "depi"
    else:
        tag = "dapi" if ctrl.gamma is None else f"dapi_gamma{ctrl.gamma:g}"
    return tag if index is None else f"{tag}_{index}"


def cmd_norm(args):
    cfg = _load_config(args.config)
    outdir = _resolve_outdir(args, cfg)
    g = _graph_from_cfg(cfg.get("graph", {}), args.seed)
    params = _params_from_cfg(cfg, g.n)
    ctrl = controller_from_dict(cfg.get("controller", {}))
    method = args.method or cfg.get("method", "closed_form")
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {METHODS}")
    methods = ["closed_form", "lyapunov", "monte_carlo"] if method == "all" else [method]
    if method == "all" and not params.is_uniform:
        raise ConfigError("method=all requires uniform parameters")

    mcfg = cfg.get("mc", {})
    samples = int(args.samples or mcfg.get("samples", DEFAULT_MC_SAMPLES))
    horizon = args.horizon if args.horizon is not None else mcfg.get("horizon")
    dt = args.dt if args.dt is not None else mcfg.get("dt")
    mc_seed = int(args.seed if args.seed is not None else mcfg.get("seed", 0))

    reports = {}
    written = []
    for name in methods:
        if name == "closed_form":
            m, d = _uniform_md(params)
            rep = sync_norm_closed_form(spectrum(build_laplacian(g)), m, d, ctrl)
        elif name == "lyapunov":
            rep = sync_norm_lyapunov(g, params, ctrl)
        else:
            sys_cl = assemble(g, params, ctrl)
            rep = sync_norm_monte_carlo(
                sys_cl, samples, horizon=horizon, dt=dt, master_seed=mc_seed
            )
        reports[name] = rep
        path = os.path.join(outdir, f"norm_{name}.json")
        report_to_json(rep, path)
        written.append(path)

    if method == "all":
        vals = {k: reports[k].value for k in methods}

        def rel(a, b):
            return abs(a - b) / max(abs(a), abs(b), 1e-300)

        comparison = {
            "values": vals,
            "relative_differences": {
                "closed_form_vs_lyapunov": rel(vals["closed_form"], vals["lyapunov"]),
                "closed_form_vs_monte_carlo": rel(vals["closed_form"], vals["monte_carlo"]),
                "lyapunov_vs_monte_carlo": rel(vals["lyapunov"], vals["monte_carlo"]),
            },
            "monte_carlo_stderr": reports["monte_carlo"].stderr,
        }
        path = os.path.join(outdir, "comparison.json")
        _write_json(comparison, path)
        written.append(path)
    return written


def _sweep_row(family, n, weight, seed, extra, params_cfg, ctrl_cfg):
    row = {
        "family": family,
        "n": n,
        "controller": str(ctrl_cfg.get("variant", "")).lower(),
        "gamma": "",
        "q": "",
        "norm": "",
        "bound": "",
        "errors": "",
    }
    try:
        g = make_graph(family, n, weight, seed=seed, **extra)
        params = params_from_dict(params_cfg, g.n)
        ctrl = controller_from_dict(ctrl_cfg)
        if isinstance(ctrl, (Capi, Dapi, Depi)):
            qv = np.atleast_1d(np.asarray(ctrl.q, dtype=float))
            row["q"] = repr(float(qv[0])) if qv.size else ""
        if isinstance(ctrl, Dapi) and ctrl.gamma is not None:
            row["gamma"] = repr(float(ctrl.gamma))
        if not params.is_uniform:
            raise AssumptionError("closed form requires Assumption 1 (uniform m and d)")
        m, d = params.uniform_m(), params.uniform_d()
        rep = sync_norm_closed_form(spectrum(build_laplacian(g)), m, d, ctrl)
        row["norm"] = repr(rep.value)
        if isinstance(ctrl, Dapi) and ctrl.gamma is not None:
            row["bound"] = repr(scaling_bound_dapi(float(ctrl.gamma), d, float(ctrl.q)))
    except GridcoherError as exc:
        row["errors"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(args):
    cfg = _load_config(args.config)
    outdir = _resolve_outdir(args, cfg)
    scfg = cfg.get("sweep")
    if not isinstance(scfg, dict):
        raise ConfigError("sweep config requires a sweep object")
    family = scfg.get("family")
    n_list = scfg.get("n_list")
    if family is None or not n_list:
        raise ConfigError("sweep config requires family and a non-empty n_list")
    weight = float(scfg.get("weight", 1.0))
    seed = int(args.seed if args.seed is not None else scfg.get("seed", 0))
    extra = {k: scfg[k] for k in ("p",) if k in scfg}
    controllers_cfg = cfg.get("controllers")
    if not controllers_cfg:
        raise ConfigError("sweep config requires a controllers list")
    params_cfg = cfg.get("params")
    if not isinstance(params_cfg, dict):
        raise ConfigError("config requires a params object with m and d")

    jobs = [
        (family, int(n), weight, seed, extra, params_cfg, ctrl_cfg)
        for n in n_list
        for ctrl_cfg in controllers_cfg
    ]
    workers = thread_count()
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda j: _sweep_row(*j), jobs))
    else:
        rows = [_sweep_row(*j) for j in jobs]

    path = os.path.join(outdir, "sweep.csv")
    fields = ["family", "n", "controller", "gamma", "q", "norm", "bound", "errors"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    return [path]


def cmd_simulate(args):
    cfg = _load_config(args.config)
    outdir = _resolve_outdir(args, cfg)
    g = _graph_from_cfg(cfg.get("graph", {}), args.seed)
    params = _params_from_cfg(cfg, g.n)
    lcfg = cfg.get("load", {})
    if "vector" in lcfg:
        p = np.asarray(lcfg["vector"], dtype=float)
        load_seed = None
    else:
        load_seed = int(args.seed if args.seed is not None else lcfg.get("seed", 0))
        p = draw_load(load_seed, 0, g.n).p_m
    simcfg = cfg.get("sim", {})
    horizon = float(args.horizon if args.horizon is not None else simcfg.get("horizon", 40.0))
    dt = float(args.dt if args.dt is not None else simcfg.get("dt", 0.01))
    model = simcfg.get("model", "linear")
    if model not in ("linear", "nonlinear"):
        raise ConfigError(f"sim model must be linear or nonlinear, got {model!r}")

    ctrl_cfgs = cfg.get("controllers") or [cfg.get("controller", {})]
    runs = []
    written = []
    seen_tags = set()
    for idx, ctrl_cfg in enumerate(ctrl_cfgs):
        ctrl = controller_from_dict(ctrl_cfg)
        tag = _controller_tag(ctrl)
        if tag in seen_tags:
            tag = _controller_tag(ctrl, idx)
        seen_tags.add(tag)
        if model == "linear":
            rec = simulate_linear(assemble(g, params, ctrl), p, horizon, dt)
        else:
            delta0 = simcfg.get("delta0")
            rec = simulate_nonlinear(g, params, ctrl, p, delta0=delta0, horizon=horizon, dt=dt)
        path = os.path.join(outdir, f"trajectory_{tag}.csv")
        trajectory_to_csv(rec, path)
        written.append(path)
        runs.append(
            {
                "controller": tag,
                "variant": str(ctrl_cfg.get("variant", "")).lower(),
                "integrated_y_sq": trapezoid_energy(rec),
                "warnings": list(rec.warnings),
            }
        )
    summary = {
        "model": model,
        "horizon": horizon,
        "dt": dt,
        "load_seed": load_seed,
        "load": [float(v) for v in p],
        "runs": runs,
    }
    path = os.path.join(outdir, "summary.json")
    _write_json(summary, path)
    written.append(path)
    return written


def cmd_tune(args):
    cfg = _load_config(args.config)
    outdir = _resolve_outdir(args, cfg)
    tcfg = cfg.get("tune", {})
    q = float(args.q if args.q is not None else tcfg.get("q", 1.0))
    tol = float(tcfg.get("tol", 1e-8))
    gcfg = cfg.get("graph", {})
    g = _graph_from_cfg(gcfg, args.seed)
    params = _params_from_cfg(cfg, g.n)
    m, d = _uniform_md(params)
    if gcfg.get("family") == "complete":
        opt = optimal_gamma_complete(m, d, q, float(gcfg.get("weight", 1.0)), g.n)
    else:
        opt = optimal_gamma_general(spectrum(build_laplacian(g)), m, d, q, tol=tol)
    spec = spectrum(build_laplacian(g))
    context = []
    for gamma in (0.0, opt.gamma_star, 10.0 * opt.gamma_star + 1.0):
        rep = sync_norm_closed_form(spec, m, d, Dapi(q=q, gamma=gamma))
        context.append({"gamma": float(gamma), "norm": rep.value})
    payload = gamma_optimum_to_dict(opt)
    payload["q"] = q
    payload["context"] = context
    path = os.path.join(outdir, "tune.json")
    _write_json(payload, path)
    return [path]


def _resolve_outdir(args, cfg):
    outdir = args.out or cfg.get("output") or "."
    os.makedirs(outdir, exist_ok=True)
    return outdir


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="gridcoher",
        description="Frequency-coherence analysis of droop- and PI-controlled generator networks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--out", help="output directory (default: config output field or .)")
        p.add_argument("--seed", type=int, help="override all configured seeds")

    p_norm = sub.add_parser("norm", help="evaluate the synchronization norm")
    common(p_norm)
    p_norm.add_argument("--method", choices=METHODS, help="evaluation method")
    p_norm.add_argument("--samples", type=int, help="Monte Carlo ensemble size")
    p_norm.add_argument("--horizon", type=float, help="Monte Carlo horizon [s]")
    p_norm.add_argument("--dt", type=float, help="Monte Carlo step [s]")
    p_norm.set_defaults(func=cmd_norm)

    p_sweep = sub.add_parser("sweep", help="closed-form norms across sizes and controllers")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_sim = sub.add_parser("simulate", help="integrate trajectories under a step load")
    common(p_sim)
    p_sim.add_argument("--horizon", type=float, help="simulation horizon [s]")
    p_sim.add_argument("--dt", type=float, help="integration step [s]")
    p_sim.set_defaults(func=cmd_simulate)

    p_tune = sub.add_parser("tune", help="optimal DAPI communication gain")
    common(p_tune)
    p_tune.add_argument("--q", type=float, help="integral gain q")
    p_tune.set_defaults(func=cmd_tune)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    # Make sure defaults exist even when a subcommand lacks the flag.
    for name in ("method", "samples", "horizon", "dt", "q"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        args.func(args)
        return 0
    except GridcoherError as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "time", None) is not None:
            payload["time"] = exc.time
        outdir = args.out or "."
        try:
            cfg = json.load(open(args.config)) if args.config else {}
            outdir = args.out or cfg.get("output") or "."
        except Exception:
            pass
        try:
            os.makedirs(outdir, exist_ok=True)
            _write_json(payload, os.path.join(outdir, "error.json"))
        except OSError:
            pass
        print(json.dumps(payload), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
