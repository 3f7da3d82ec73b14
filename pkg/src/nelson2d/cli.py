"""Command line front end: `nelson2d <subcommand> [--config FILE] [--set k=v] [--seed S] [--out DIR]`.

Every run writes manifest.json and results.csv under the output directory.
Exit codes: 0 success, 2 verification failure, 1 usage or configuration error.
"""
import argparse
import csv
import dataclasses
import json
import math
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config, worker_count

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _code_version():
    try:
        return version("nelson2d")
    except PackageNotFoundError:
        return "unknown"


def write_csv(path, rows):
    rows = list(rows)
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: _plain(v) for k, v in r.items()})


def _plain(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    return str(o)


# ---------------------------------------------------------------- subcommands

def cmd_sample(cfg, out):
    from .levy_paths import RngStream, dump_paths, sample_jump_path
    p, sp = cfg.params, cfg.sampler
    paths, rows = [], []
    for i in range(cfg.n_paths):
        rng = RngStream(cfg.seed, i).generator()
        path = sample_jump_path(cfg.horizon, p.m_p, sp.eps, p.N, rng, sp.correction,
                                sp.correction_dt)
        paths.append(path)
        end = path.value(cfg.horizon)
        rows.append(dict(path_id=i, n_events=path.n_events,
                         **{f"r{j}": float(np.hypot(*end[j])) for j in range(p.N)}))
    with open(out / "paths.jsonl", "w") as fh:
        dump_paths(paths, fh)
    return rows, True


def density_ks(m_p, t, n, seed):
    from scipy import stats

    from .levy_paths import RngStream, sample_increment
    from .special_functions import marginal_radial_cdf
    rng = RngStream(seed, 0).generator()
    r = np.hypot(*sample_increment(t, m_p, rng, n).T)
    res = stats.kstest(r, lambda x: marginal_radial_cdf(x, t, m_p))
    crit = stats.kstwo.ppf(0.99, n)
    return float(res.statistic), float(crit)


def cmd_density_check(cfg, out):
    rows = []
    n = max(cfg.n_paths, 1000)
    for m in sorted({0.0, float(cfg.params.m_p)}):
        d, crit = density_ks(m, cfg.horizon, n, cfg.seed)
        rows.append(dict(m_p=m, t=cfg.horizon, n=n, ks=d, critical_1pct=crit, ok=d < crit))
    return rows, all(r["ok"] for r in rows)


def _grid(cfg):
    from .kspace import PolarGrid
    g = cfg.grid
    return PolarGrid.build(cfg.params.sigma, cfg.params.lam, g.n_panels, g.order, g.n_theta)


def _finite(cfg):
    if not np.isfinite(cfg.params.lam):
        raise ConfigError("this subcommand needs a finite params.lam")


def cmd_action_verify(cfg, out):
    from .action import ActionEngine
    from .levy_paths import RngStream, sample_jump_path
    _finite(cfg)
    p = cfg.params
    eng = ActionEngine(p, _grid(cfg), eps=cfg.sampler.eps)
    rows = []
    for i in range(cfg.n_paths):
        rng = RngStream(cfg.seed, i).generator()
        path = sample_jump_path(cfg.horizon, p.m_p, cfg.sampler.eps, p.N, rng)
        x = rng.normal(size=(p.N, 2))
        a = eng.parts(x, path, [cfg.horizon])[0]
        gap = a.direct_u - a.u
        rows.append(dict(path_id=i, direct=a.direct_u, w=a.w, c=a.c, m=a.m, drift=a.drift,
                         gap=gap, residual_with_drift=gap - a.drift))
    ok = max(abs(r["residual_with_drift"]) for r in rows) < 1e-5
    return rows, ok


def cmd_flow_verify(cfg, out):
    from .fock import flow_check
    from .levy_paths import RngStream, sample_jump_path
    _finite(cfg)
    p = cfg.params
    grid = _grid(cfg)
    rows = []
    for i in range(cfg.n_paths):
        rng = RngStream(cfg.seed, i).generator()
        path = sample_jump_path(cfg.horizon, p.m_p, cfg.sampler.eps, p.N, rng)
        t = float(rng.uniform(0, cfg.horizon))
        s = float(rng.uniform(0, cfg.horizon - t))
        r2, r3, r4 = flow_check(rng.normal(size=(p.N, 2)), path, s, t, p, grid)
        rows.append(dict(path_id=i, s=s, t=t, r2=r2, r3=r3, r4=r4))
    ok = all(r["r2"] < 1e-10 and r["r3"] < 1e-10 and r["r4"] < 1e-6 for r in rows)
    return rows, ok


def generator_halving(params, grid, path, x, t, n_sub=32, seed_field=None):
    from .fock import generator_residual
    from .kspace import field
    h1 = field(grid, lambda r: 0.5 * np.exp(-r**2))
    h2 = field(grid, lambda r: 0.3 * np.exp(-r**2 / 2))
    a = generator_residual(x, path, t, params, grid, h1, h2, n_sub=n_sub)
    b = generator_residual(x, path, t, params, grid, h1, h2, n_sub=2 * n_sub)
    return a, b


def cmd_generator_verify(cfg, out):
    from .levy_paths import RngStream, constant_path, sample_jump_path
    _finite(cfg)
    p = cfg.params
    grid = _grid(cfg)
    rows = []
    for i in range(cfg.n_paths):
        rng = RngStream(cfg.seed, i).generator()
        frozen = i % 2 == 0
        path = constant_path(p.N, cfg.horizon) if frozen else \
            sample_jump_path(cfg.horizon, p.m_p, max(cfg.sampler.eps, 0.3), p.N, rng)
        a, b = generator_halving(p, grid, path, rng.normal(size=(p.N, 2)), cfg.horizon)
        rows.append(dict(path_id=i, frozen=frozen, residual=a, residual_half_step=b,
                         ratio=a / b if b > 0 else math.inf))
    ok = all(1.6 <= r["ratio"] <= 2.4 for r in rows)
    return rows, ok


def _potential(cfg):
    from .estimator import PotentialSpec, constant_potential
    e = cfg.estimator
    if e.potential == "zero":
        return PotentialSpec()
    if e.potential == "constant":
        return constant_potential(e.potential_value)
    raise ConfigError(f"estimator.potential must be 'zero' or 'constant', got {e.potential!r}")


def cmd_estimate(cfg, out):
    from .estimator import ground_energy
    e = cfg.estimator
    rep = ground_energy(cfg.params, _potential(cfg), e.t_ladder, e.n_paths, e.f, cfg.seed,
                        cfg.sampler, cfg.grid, e.route, worker_count(cfg.workers))
    with open(out / "report.json", "w") as fh:
        json.dump(rep.to_dict(), fh, indent=2, default=_json_default)
    return rep.rows(), all(math.isfinite(x) for x in rep.energy)


def cmd_bounds(cfg, out):
    from . import bounds as B
    p, k = cfg.params, B.BoundConstants(**dataclasses.asdict(cfg.bounds))
    hdr = B.constants_header(k)
    rows = []

    def add(name, fn):
        try:
            rows.append(dict(bound=name, value=fn(), **hdr))
        except ValueError as exc:
            rows.append(dict(bound=name, value="", note=str(exc), **hdr))

    add("lower_small_coupling", lambda: B.lower_bound(p, k, "small-coupling"))
    add("lower_large_coupling", lambda: B.lower_bound(p, k, "large-coupling"))
    add("lower_large_coupling_massive", lambda: B.lower_bound(p, k, "large-coupling-massive"))
    add("exp_moment_u1", lambda: B.exp_moment_bound(p, k, cfg.p, cfg.horizon, "u1"))
    add("exp_moment_u2", lambda: B.exp_moment_bound(p, k, cfg.p, cfg.horizon, "u2"))
    if np.isfinite(p.lam):
        add("trial_upper", lambda: B.trial_upper_bound(p, k.s))
        add("trial_upper_plus_counter", lambda: B.trial_upper_bound_renormalized(p, k.s))
    add("ubgauss2", lambda: B.ubgauss2(p, k.s, k))
    add("renormalized_upper", lambda: B.renormalized_upper_bound(p, k.theta, k))
    return rows, True


ASYMPTOTIC_GRIDS = {
    "N": (dict(N=1, g=1.0, m_p=1.0, m_b=1.0), [10, 100, 1e3, 1e4, 1e5, 1e6]),
    "g": (dict(N=1, g=1.0, m_p=1.0, m_b=1.0), [10, 100, 1e3, 1e4, 1e5, 1e6]),
    "m_b(massive)": (dict(N=2, g=1.0, m_p=1.0, m_b=1.0), [1e-2, 1e-4, 1e-6, 1e-8]),
    "m_b(massless)": (dict(N=2, g=1.0, m_p=0.0, m_b=1.0), [1e-2, 1e-4, 1e-6, 1e-8]),
}


def cmd_asymptotics(cfg, out):
    from .bounds import asymptotic_table
    from .kspace import ModelParams
    if cfg.regime not in ASYMPTOTIC_GRIDS:
        raise ConfigError(f"regime must be one of {sorted(ASYMPTOTIC_GRIDS)}")
    base, grid = ASYMPTOTIC_GRIDS[cfg.regime]
    rows = asymptotic_table(cfg.regime, grid, ModelParams(**base))
    last = rows[-1]
    ok = all(abs(last[k] / last["target"] - 1) < 0.2 for k in ("upper_ratio", "lower_ratio"))
    return [dict(regime=cfg.regime, **r) for r in rows], ok


def cmd_expmoment(cfg, out):
    from . import bounds as B
    from .estimator import sup_exp_moment
    _finite(cfg)
    k = B.BoundConstants(**dataclasses.asdict(cfg.bounds))
    mc, se = sup_exp_moment(cfg.params, cfg.p, cfg.horizon, cfg.n_paths, cfg.seed,
                            sampler=cfg.sampler, grid_spec=cfg.grid)
    bound = B.exp_moment_bound(cfg.params, k, cfg.p, cfg.horizon, "u1")
    row = dict(p=cfg.p, t=cfg.horizon, mc=mc, stderr=se, bound_u1=bound, ok=mc <= bound,
               **B.constants_header(k))
    return [row], row["ok"]


def cmd_kato_probe(cfg, out):
    from .estimator import kato_probe
    M = 1e3

    def f(y):
        return np.minimum(1 / np.maximum(np.hypot(y[..., 0], y[..., 1]), 1e-300), M)

    ts = cfg.estimator.t_ladder
    xs = np.array([[0.0, 0.0], [0.5, 0.0], [1.0, 1.0]])
    rows, dec = kato_probe(f, ts, xs, cfg.params.m_p, max(cfg.n_paths, 2), cfg.seed)
    return [dict(t=t, sup_mean=m, stderr=s) for t, m, s in rows], dec


COMMANDS = {
    "sample": cmd_sample,
    "density-check": cmd_density_check,
    "action-verify": cmd_action_verify,
    "flow-verify": cmd_flow_verify,
    "generator-verify": cmd_generator_verify,
    "estimate": cmd_estimate,
    "bounds": cmd_bounds,
    "asymptotics": cmd_asymptotics,
    "expmoment": cmd_expmoment,
    "kato-probe": cmd_kato_probe,
}


def build_parser():
    ap = _Parser(prog="nelson2d", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="YAML run configuration")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key, e.g. params.g=0.5 (repeatable)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    ap.add_argument("--regime", help="shorthand for --set regime=...")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.regime is not None:
        overrides.append(f"regime={args.regime}")
    try:
        cfg = load_config(args.config, overrides)
        if args.out:
            cfg.out = args.out
    except (ConfigError, OSError) as exc:
        print(f"nelson2d: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    status, code, rows, error = "error", EXIT_USAGE, [], None
    try:
        rows, ok = COMMANDS[args.command](cfg, out)
        status, code = ("ok", EXIT_OK) if ok else ("verification-failed", EXIT_FAIL)
    except ConfigError as exc:
        error = str(exc)
        print(f"nelson2d: config error: {exc}", file=sys.stderr)
    except Exception as exc:  # reported in the manifest, then re-raised as a failure code
        error = f"{type(exc).__name__}: {exc}"
        status, code = "error", EXIT_FAIL
        print(f"nelson2d: {error}", file=sys.stderr)
    finally:
        write_csv(out / "results.csv", rows)
        manifest = dict(command=args.command, status=status, exit_code=code, error=error,
                        config=dataclasses.asdict(cfg), code_version=_code_version(),
                        wall_time_s=time.time() - t0, argv=list(argv or sys.argv[1:]))
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, default=_json_default)
    return code


if __name__ == "__main__":
    sys.exit(main())
