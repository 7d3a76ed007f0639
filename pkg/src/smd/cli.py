"""``smd`` command-line interface.

Exit codes: 0 on completion (an explosion is a result, not a failure),
2 on configuration errors, 3 on I/O errors.
"""

import json
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from itertools import product

import click
import numpy as np

from . import __version__, config, diagnostics, presets
from ._backend import set_num_threads
from .errors import ConfigurationError
from .simulator import run, run_coupled

EXIT_CONFIG, EXIT_IO = 2, 3


# -- formatting and atomic output ----------------------------------------------


def _fmt(v):
    return repr(float(v))


def trajectory_csv(traj):
    p = traj.z_series.shape[1]
    cols = ["t"] + [f"z_{i + 1}" for i in range(p)] + ["mean", "m2", "var", "detG", "margin", "m_alpha"]
    lines = [",".join(cols)]
    for r in range(traj.times.size):
        row = [traj.times[r], *traj.z_series[r], traj.mean_series[r], traj.m2_series[r], traj.var_series[r],
               traj.det_series[r], traj.margin_series[r], traj.malpha_series[r]]
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _metadata(cfg_dict, traj, wall):
    return {
        "config": cfg_dict,
        "exploded": bool(traj.exploded),
        "explosion_time": traj.explosion_time,
        "explosion_cause": traj.explosion_cause,
        "wall_time_s": wall,
        "library_version": __version__,
    }


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory {path!r} is not writable")


# -- single runs -------------------------------------------------------------


def _run_dict(cfg_dict):
    """Run one config given as a plain dict (picklable for worker pools)."""
    cfg = config.parse(cfg_dict)
    obs, drv, dyn, sim = config.build(cfg)
    t0 = time.perf_counter()
    traj = run(sim, obs, drv, dyn)
    return traj, time.perf_counter() - t0


def _save_run(out_dir, stem, cfg_dict, traj, wall):
    _atomic_write(os.path.join(out_dir, stem + ".csv"), trajectory_csv(traj))
    _write_json(os.path.join(out_dir, stem + ".json"), _metadata(cfg_dict, traj, wall))


def _pool_map(fn, items, threads):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, items))


# -- shared options ----------------------------------------------------------


class _Opts:
    def __init__(self, out=None, threads=1, seed_common=None, seed_private=None):
        self.out, self.threads = out, threads
        self.seed_common, self.seed_private = seed_common, seed_private

    def merged(self, out, threads, seed_common, seed_private):
        return _Opts(
            out if out is not None else self.out,
            threads if threads is not None else self.threads,
            seed_common if seed_common is not None else self.seed_common,
            seed_private if seed_private is not None else self.seed_private,
        )


def _common_options(f):
    f = click.option("--seed-private", type=click.IntRange(0, 2**64 - 1), default=None, help="Override sim.seed_private.")(f)
    f = click.option("--seed-common", type=click.IntRange(0, 2**64 - 1), default=None, help="Override sim.seed_common.")(f)
    f = click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker processes / numba threads.")(f)
    f = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")(f)
    return f


def _apply(cfg, opts):
    data = config.to_dict(cfg)
    if opts.seed_common is not None:
        data["sim"]["seed_common"] = opts.seed_common
    if opts.seed_private is not None:
        data["sim"]["seed_private"] = opts.seed_private
    if opts.out is not None:
        data["output"]["dir"] = opts.out
    return config.to_dict(config.parse(data))


def _guard(fn):
    """Map library errors onto exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigurationError as exc:
            click.echo(f"configuration error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except OSError as exc:
            click.echo(f"I/O error: {exc}", err=True)
            sys.exit(EXIT_IO)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _load(path):
    try:
        return config.load(path)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc.strerror or exc}", "config") from None


@click.group()
@_common_options
@click.version_option(__version__, prog_name="smd")
@click.pass_context
def main(ctx, out, threads, seed_common, seed_private):
    """Stochastic moment dynamics simulator."""
    ctx.obj = _Opts(out, threads or 1, seed_common, seed_private)


def _opts(ctx, out, threads, seed_common, seed_private):
    base = ctx.obj if isinstance(ctx.obj, _Opts) else _Opts()
    o = base.merged(out, threads, seed_common, seed_private)
    set_num_threads(o.threads)
    return o


@main.command("run")
@click.argument("config_path", type=click.Path(dir_okay=False))
@_common_options
@click.pass_context
@_guard
def cmd_run(ctx, config_path, out, threads, seed_common, seed_private):
    """Run one simulation: writes PREFIX.csv and PREFIX.json."""
    o = _opts(ctx, out, threads, seed_common, seed_private)
    data = _apply(_load(config_path), o)
    out_dir = data["output"]["dir"]
    _ensure_dir(out_dir)
    traj, wall = _run_dict(data)
    _save_run(out_dir, data["output"]["prefix"], data, traj, wall)
    status = f"exploded at t={traj.explosion_time} ({traj.explosion_cause})" if traj.exploded else "completed"
    click.echo(f"{data['output']['prefix']}: {status}")


# -- figures -----------------------------------------------------------------


def _fig4_references(data):
    """Minimizers of the unperturbed system, relaxed from both wells."""
    cfg = config.parse(data)
    _, _, dyn, sim = config.build(cfg)
    std = cfg.sim.init.std
    from .simulator import InitSpec

    inits = [InitSpec("gaussian", -abs(cfg.sim.init.mean), std), InitSpec("gaussian", abs(cfg.sim.init.mean), std)]
    return diagnostics.estimate_minimizers(dyn, inits, presets.FIG4_T_RELAX, sim)


@main.command("reproduce")
@click.argument("figure", type=click.Choice(["fig1", "fig2", "fig3", "fig4"]))
@_common_options
@click.pass_context
@_guard
def cmd_reproduce(ctx, figure, out, threads, seed_common, seed_private):
    """Run a bundled figure configuration; one CSV per panel plus a summary."""
    o = _opts(ctx, out, threads, seed_common, seed_private)
    items = []
    for label, d in presets.panels(figure):
        d = _apply(config.parse(d), o)
        items.append((label, d))
    out_dir = items[0][1]["output"]["dir"]
    _ensure_dir(out_dir)
    results = _pool_map(_run_dict, [d for _, d in items], o.threads)
    summary = {"figure": figure, "library_version": __version__, "panels": {}}
    refs = _fig4_references(items[0][1]) if figure == "fig4" else None
    for (label, d), (traj, wall) in zip(items, results):
        stem = f"{figure}_{label}"
        _save_run(out_dir, stem, d, traj, wall)
        entry = {
            "csv": stem + ".csv",
            "exploded": bool(traj.exploded),
            "explosion_time": traj.explosion_time,
            "explosion_cause": traj.explosion_cause,
        }
        if figure == "fig4":
            burn = d["sweep"]["burn_in"] if d.get("sweep") else presets.FIG4_BURN_IN
            entry["gamma"] = d["sim"]["gamma"]
            entry["transitions"] = diagnostics.transition_stats(traj, burn).n_transitions
            track = diagnostics.wasserstein_track(traj, refs, 2.0)
            entry["w2_min_to_minus"] = float(track.minima[0])
            entry["w2_min_to_plus"] = float(track.minima[1])
            entry["w2_argmin_time_minus"] = float(track.argmin_times[0])
            entry["w2_argmin_time_plus"] = float(track.argmin_times[1])
        summary["panels"][label] = entry
    summary["explosion_fraction"] = float(np.mean([r[0].exploded for r in results]))
    _write_json(os.path.join(out_dir, f"{figure}_summary.json"), summary)
    click.echo(f"{figure}: wrote {len(items)} panels to {out_dir}")


# -- sweeps ------------------------------------------------------------------


def _sweep_job(data):
    traj, _ = _run_dict(data)
    burn = data["sweep"]["burn_in"] if data.get("sweep") else 0.0
    n_tr = diagnostics.transition_stats(traj, burn).n_transitions
    return traj.exploded, traj.explosion_time, n_tr, traj.z_series[-1].tolist() if traj.z_series.size else []


@main.command("sweep")
@click.argument("config_path", type=click.Path(dir_okay=False))
@_common_options
@click.pass_context
@_guard
def cmd_sweep(ctx, config_path, out, threads, seed_common, seed_private):
    """Cartesian product of the sweep axes and seeds; one CSV row per run."""
    o = _opts(ctx, out, threads, seed_common, seed_private)
    cfg = _load(config_path)
    if cfg.sweep is None:
        raise ConfigurationError("a sweep section is required", "sweep")
    seeds = cfg.sweep.seed_list()
    if not seeds:
        raise ConfigurationError("the seed range is empty", "sweep.seeds")
    base = _apply(cfg, o)
    axes = {
        "gamma": cfg.sweep.gamma or [base["sim"]["gamma"]],
        "delta": cfg.sweep.delta or [base["driver"]["delta"] if base.get("driver") else None],
        "eta": cfg.sweep.eta or [base["sim"]["eta"]],
    }
    if cfg.sweep.delta and (base.get("driver") is None or base["driver"]["name"] == "brownian"):
        raise ConfigurationError("a delta axis needs a bessel or mean_variance driver", "sweep.delta")
    jobs, keys = [], []
    for gamma, delta, eta, seed in product(axes["gamma"], axes["delta"], axes["eta"], seeds):
        d = json.loads(json.dumps(base))
        d["sim"].update({"gamma": gamma, "eta": eta, "seed_common": seed, "seed_private": seed})
        if delta is not None:
            d["driver"]["delta"] = delta
        config.parse(d)
        jobs.append(d)
        keys.append((seed, gamma, delta, eta))
    out_dir = base["output"]["dir"]
    _ensure_dir(out_dir)
    results = _pool_map(_sweep_job, jobs, o.threads)
    p = max((len(r[3]) for r in results), default=0)
    lines = [",".join(["seed", "gamma", "delta", "eta", "exploded", "explosion_time", "transitions"]
                      + [f"z_{i + 1}" for i in range(p)])]
    for (seed, gamma, delta, eta), (ex, t_ex, n_tr, z) in zip(keys, results):
        row = [str(seed), _fmt(gamma), "" if delta is None else _fmt(delta), _fmt(eta), str(bool(ex)).lower(),
               "" if t_ex is None else _fmt(t_ex), str(n_tr)] + [_fmt(v) for v in z]
        lines.append(",".join(row))
    path = os.path.join(out_dir, base["output"]["prefix"] + "_sweep.csv")
    _atomic_write(path, "\n".join(lines) + "\n")
    click.echo(f"sweep: {len(jobs)} runs -> {path}")


# -- propagation of chaos ------------------------------------------------------


def _chaos_job(args):
    data, ns = args
    cfg = config.parse(data)
    obs, drv, dyn, sim = config.build(cfg)
    from dataclasses import replace

    cfgs = [replace(sim, n_particles=n) for n in ns]
    trajs = run_coupled(cfgs, obs, drv, dyn)
    p = cfg.sweep.p
    return [diagnostics.sup_wasserstein(t, trajs[-1], p) for t in trajs[:-1]]


@main.command("chaos")
@click.argument("config_path", type=click.Path(dir_okay=False))
@_common_options
@click.pass_context
@_guard
def cmd_chaos(ctx, config_path, out, threads, seed_common, seed_private):
    """sup-time Wasserstein distance of each N against the last (largest) N."""
    o = _opts(ctx, out, threads, seed_common, seed_private)
    cfg = _load(config_path)
    ns = cfg.sweep.n_particles if cfg.sweep else None
    if not ns or len(ns) < 2:
        raise ConfigurationError("at least two particle counts are needed", "sweep.n_particles")
    if cfg.observable is not None and cfg.observable.d != 1:
        raise ConfigurationError("chaos tables are one-dimensional", "observable.d")
    base = _apply(cfg, o)
    if base["sim"]["snapshot_stride"] == 0:
        raise ConfigurationError("snapshots are required (snapshot_stride > 0)", "sim.snapshot_stride")
    reps = cfg.sweep.seed_list() or [base["sim"]["seed_private"]]
    jobs = []
    for r in reps:
        d = json.loads(json.dumps(base))
        d["sim"]["seed_private"] = r
        jobs.append((d, list(ns)))
    out_dir = base["output"]["dir"]
    _ensure_dir(out_dir)
    res = np.array(_pool_map(_chaos_job, jobs, o.threads))  # (replicates, len(ns) - 1)
    lines = ["n_particles,n_reference,replicates,median_sup_w,min_sup_w,max_sup_w"]
    for j, n in enumerate(ns[:-1]):
        col = res[:, j]
        lines.append(",".join([str(n), str(ns[-1]), str(len(reps)), _fmt(np.median(col)), _fmt(col.min()), _fmt(col.max())]))
    path = os.path.join(out_dir, base["output"]["prefix"] + "_chaos.csv")
    _atomic_write(path, "\n".join(lines) + "\n")
    click.echo(f"chaos: {len(ns) - 1} rows -> {path}")


# -- Lyapunov report -----------------------------------------------------------


@main.command("lyapunov")
@click.argument("config_path", type=click.Path(dir_okay=False))
@_common_options
@click.pass_context
@_guard
def cmd_lyapunov(ctx, config_path, out, threads, seed_common, seed_private):
    """Sup of the generator ratio G/V on refining grids for the configured driver."""
    o = _opts(ctx, out, threads, seed_common, seed_private)
    cfg = _load(config_path)
    if cfg.driver is None:
        raise ConfigurationError("a driver is required", "driver")
    base = _apply(cfg, o)
    drv = config.build_driver(cfg)
    ly = cfg.lyapunov or config.LyapunovCfg()
    spec = diagnostics.builtin_lyapunov(drv, ly.q)
    grids = diagnostics.refined_grids(drv, ly.levels, ly.hi, ly.lo, ly.per_decade)
    rep = diagnostics.refinement_report(spec, drv, grids)
    body = {
        "config": base,
        "lyapunov": spec.name,
        "q": spec.q,
        "sup_ratio_per_level": [float(v) for v in rep.sups],
        "bounded": rep.bounded,
        "library_version": __version__,
    }
    out_dir = base["output"]["dir"]
    _ensure_dir(out_dir)
    path = os.path.join(out_dir, base["output"]["prefix"] + "_lyapunov.json")
    _write_json(path, body)
    click.echo(f"lyapunov: bounded={rep.bounded} -> {path}")


if __name__ == "__main__":  # pragma: no cover
    main()
