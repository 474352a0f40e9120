"""Command-line experiment runner.

Every subcommand reads an optional JSON config (``--config``), applies flag
overrides on top, and writes CSV files with a header row into ``--out-dir``.
Runs are fully determined by the config and ``--seed``; nothing
time-dependent is written, so reruns reproduce the files byte for byte.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import coupling, diagnostics, hamiltonian, io, markovian, model, rng, samplers
from .nuts import U_TURN_CRITERIA, NutsConfig

FAMILIES = ("compound-symmetric", "ar1")
ORTHANTS = {"positive": 1, "negative": -1, "none": 0}
FIGURES = ("trajectory", "sq-distance", "traceplot")


class ConfigError(ValueError):
    """Invalid experiment configuration; names the offending field."""


@dataclass
class ExperimentConfig:
    family: str | None = None
    dim: int | None = None
    rho: float | None = None
    orthant: str | None = None
    target_file: str | None = None
    sampler: str = "zigzag-nuts"
    reference: str = "markovian"
    t_rel: float = 0.1
    T_rel: float = math.sqrt(2.0)
    n_samples: int | None = None
    markovian_samples: int | None = None
    burn_in: float = 0.1
    max_depth: int = 10
    u_turn: str = "momentum"
    seed: int = 1
    replicates: int | None = None
    out_dir: str = "."
    # coupling study
    grid_unit: str = "events"
    scales: list = field(default_factory=lambda: list(coupling.GRID_SCALES))
    horizon: float = 4.0
    # figure data
    figure: str | None = None
    events: int = 10**4
    x0: float | list | None = None
    projection: str | list | None = None

    def target(self) -> model.TruncatedGaussianTarget:
        if self.target_file is not None:
            try:
                return io.load_target(self.target_file)
            except OSError as exc:
                raise ConfigError(f"target_file: {exc}") from None
        orth = ORTHANTS[self.orthant]
        if self.family == "compound-symmetric":
            return model.compound_symmetric_target(self.dim, self.rho, orth)
        return model.ar1_target(self.dim, self.rho, orth)


# per-subcommand defaults applied before the config file and the flags
COMMAND_DEFAULTS = {
    "duel": dict(family="compound-symmetric", dim=256, rho=0.99, orthant="positive", n_samples=2500, replicates=1),
    "couple": dict(family="compound-symmetric", dim=16, rho=0.9, orthant="none", replicates=1000),
    "figure": dict(family="ar1", dim=256, rho=0.99, orthant="none", figure="sq-distance", replicates=1),
    "eigen": dict(family="compound-symmetric", dim=1024, rho=0.99, orthant="none", replicates=1),
    "sample": dict(family="compound-symmetric", dim=2, rho=0.5, orthant="positive", n_samples=2500, replicates=1),
}

_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {', '.join(unknown)}")
    return data


def _check(cond, name, message):
    if not cond:
        raise ConfigError(f"field {name!r}: {message}")


def validate(cfg: ExperimentConfig, command: str) -> ExperimentConfig:
    if cfg.target_file is not None:
        _check(os.path.exists(cfg.target_file), "target_file", f"{cfg.target_file} does not exist")
    else:
        _check(cfg.family in FAMILIES, "family", f"must be one of {FAMILIES}")
        _check(isinstance(cfg.dim, int) and cfg.dim >= 1, "dim", "must be a positive integer")
        _check(isinstance(cfg.rho, (int, float)), "rho", "must be a number")
        if cfg.family == "compound-symmetric":
            _check(0 <= cfg.rho < 1, "rho", "must lie in [0, 1) for compound symmetry")
        else:
            _check(-1 < cfg.rho < 1, "rho", "must satisfy |rho| < 1")
        _check(cfg.orthant in ORTHANTS, "orthant", f"must be one of {tuple(ORTHANTS)}")
    _check(cfg.sampler in samplers.SAMPLERS, "sampler", f"must be one of {samplers.SAMPLERS}")
    _check(cfg.reference in samplers.SAMPLERS, "reference", f"must be one of {samplers.SAMPLERS}")
    _check(cfg.t_rel > 0, "t_rel", "must be positive")
    _check(cfg.T_rel > 0, "T_rel", "must be positive")
    _check(0 <= cfg.burn_in < 1, "burn_in", "must lie in [0, 1)")
    _check(isinstance(cfg.max_depth, int) and cfg.max_depth >= 0, "max_depth", "must be a non-negative integer")
    _check(cfg.u_turn in U_TURN_CRITERIA, "u_turn", f"must be one of {U_TURN_CRITERIA}")
    _check(isinstance(cfg.seed, int), "seed", "an integer seed is required")
    _check(isinstance(cfg.replicates, int) and cfg.replicates > 0, "replicates", "must be a positive integer")
    if cfg.n_samples is not None:
        _check(isinstance(cfg.n_samples, int) and cfg.n_samples >= 10, "n_samples", "must be an integer >= 10")
    if cfg.markovian_samples is not None:
        _check(isinstance(cfg.markovian_samples, int) and cfg.markovian_samples >= 10,
               "markovian_samples", "must be an integer >= 10")
    _check(isinstance(cfg.events, int) and cfg.events > 0, "events", "must be a positive integer")
    if command == "couple":
        _check(cfg.replicates >= 100, "replicates", "the coupling study needs at least 100")
        _check(cfg.grid_unit in ("events", "width"), "grid_unit", "must be 'events' or 'width'")
        _check(len(cfg.scales) > 0 and all(s > 0 for s in cfg.scales), "scales", "must be positive numbers")
        _check(cfg.horizon > 0, "horizon", "must be positive")
    if command == "figure":
        _check(cfg.figure in FIGURES, "figure", f"unknown figure {cfg.figure!r}; choose from {FIGURES}")
    return cfg


def build_config(command: str, file_values: dict, overrides: dict) -> ExperimentConfig:
    values = dict(COMMAND_DEFAULTS.get(command, {}))
    if "target_file" in file_values or overrides.get("target_file") is not None:
        for key in ("family", "dim", "rho", "orthant"):
            values.pop(key, None)
    values.update(file_values)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return validate(ExperimentConfig(**values), command)


# ---------------------------------------------------------------- helpers


def _out(cfg, name):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def _width(target):
    est = model.min_eigenvalue(target.precision)
    if not est.converged:
        raise RuntimeError(f"Lanczos did not converge ({est.iterations_used} matvecs)")
    return 1.0 / math.sqrt(est.nu_min), est


def _projection(cfg, target):
    d = target.dim
    if cfg.projection is None:
        is_cs = isinstance(target.precision, model.CompoundSymmetricPrecision)
        return diagnostics.principal_component(d) if is_cs else None
    if isinstance(cfg.projection, str):
        if cfg.projection == "pc":
            return diagnostics.principal_component(d)
        if cfg.projection == "e1":
            return np.eye(d)[0]
        vec = np.loadtxt(cfg.projection, dtype=float)
    else:
        vec = np.asarray(cfg.projection, dtype=float)
    if vec.shape != (d,):
        raise ConfigError(f"field 'projection': expected {d} entries")
    return vec / np.linalg.norm(vec)


def _directions(cfg, target):
    dirs = {"x1": 0}
    u = _projection(cfg, target)
    if u is not None:
        dirs["pc"] = u
    return dirs


def _start(cfg, target):
    if cfg.x0 is None:
        return target.default_start()
    x0 = np.broadcast_to(np.asarray(cfg.x0, dtype=float), (target.dim,)).copy()
    if not target.in_support(x0):
        raise ConfigError("field 'x0': starting point lies outside the target's support")
    return x0


def _run_sampler(name, cfg, target, g, delta_T, *, n_samples=None, event_budget=None, x0=None):
    if name == "zigzag-nuts":
        conf = NutsConfig(delta_T, t_rel=cfg.t_rel, max_depth=cfg.max_depth, criterion=cfg.u_turn)
        return samplers.nuts_chain(target, g, conf, n_samples, x0=x0)
    if name == "hzz-fixed-T":
        T = delta_T / cfg.t_rel * cfg.T_rel
        return samplers.hamiltonian_chain(target, g, T, n_samples, x0=x0)
    return samplers.markovian_chain(target, g, delta_T, n_samples, event_budget=event_budget, x0=x0)


def _sample_rows(chain, replicate):
    n = chain.n_samples
    return np.column_stack([np.full(n, replicate), np.arange(n), chain.events_per_sample, chain.samples])


def _sample_header(d):
    return ["replicate", "sample", "events"] + [f"x{i + 1}" for i in range(d)]


def _chain_directions(chain, dirs, full_scan=True):
    rows = diagnostics.diagnostics_rows(chain, dirs)
    if full_scan:
        worst = min(diagnostics.ess(chain.samples[:, i]) for i in range(chain.samples.shape[1]))
        rows.append([chain.sampler, "min_coord", worst, chain.total_events, worst / chain.total_events])
    return rows


# ---------------------------------------------------------------- commands


def run_duel(cfg: ExperimentConfig) -> dict:
    """Sampler versus reference on one target, with an ESS-per-event table.

    The reference (Markovian by default) is observed every ``delta_T``. Its
    length either matches the sampler's event count (default) or is fixed by
    ``markovian_samples``. ESS and events are averaged over replicates before
    forming the relative ESS per event.
    """
    target = cfg.target()
    width, _ = _width(target)
    delta_T = cfg.t_rel * width
    x0 = _start(cfg, target)
    dirs = _directions(cfg, target)
    chains = {cfg.sampler: [], cfg.reference: []}
    diag_rows = []
    for r in range(cfg.replicates):
        main = _run_sampler(cfg.sampler, cfg, target, rng.stream(cfg.seed, "duel", r, 0), delta_T,
                            n_samples=cfg.n_samples, x0=x0)
        g_ref = rng.stream(cfg.seed, "duel", r, 1)
        if cfg.markovian_samples is None and cfg.reference == "markovian":
            ref = _run_sampler(cfg.reference, cfg, target, g_ref, delta_T, event_budget=main.total_events, x0=x0)
        else:
            ref = _run_sampler(cfg.reference, cfg, target, g_ref, delta_T,
                               n_samples=cfg.markovian_samples or cfg.n_samples, x0=x0)
        for chain in (main, ref):
            kept = chain.discard(cfg.burn_in)
            chains[chain.sampler].append((chain, kept))
            for row in _chain_directions(kept, dirs):
                diag_rows.append([row[0], r, *row[1:]])
    paths = {}
    for name, runs in chains.items():
        paths[f"samples_{name}"] = _out(cfg, f"samples_{name}.csv")
        rows = np.vstack([_sample_rows(chain, r) for r, (chain, _) in enumerate(runs)])
        io.write_array_csv(paths[f"samples_{name}"], _sample_header(target.dim), rows)
    paths["diagnostics"] = _out(cfg, "diagnostics.csv")
    io.write_csv(paths["diagnostics"], ["sampler", "replicate", "direction", "ess", "events", "ess_per_event"], diag_rows)
    summary = duel_summary(diag_rows, cfg.sampler, cfg.reference)
    paths["summary"] = _out(cfg, "summary.csv")
    io.write_csv(paths["summary"], SUMMARY_HEADER, summary)
    return paths


SUMMARY_HEADER = ["direction", "sampler", "reference", "replicates", "mean_ess", "mean_events",
                  "reference_mean_ess", "reference_mean_events", "relative_ess_per_event"]


def duel_summary(diag_rows, sampler, reference):
    """Relative ESS per event with ESS and events averaged over replicates."""
    table = {}
    for name, _, direction, e, events, _ in diag_rows:
        table.setdefault((direction, name), []).append((e, events))
    out = []
    for direction in dict.fromkeys(row[2] for row in diag_rows):
        a = np.array(table[(direction, sampler)], dtype=float)
        b = np.array(table[(direction, reference)], dtype=float)
        ea, na = a.mean(axis=0)
        eb, nb = b.mean(axis=0)
        out.append([direction, sampler, reference, len(a), ea, na, eb, nb, (ea / na) / (eb / nb)])
    return out


def run_coupling(cfg: ExperimentConfig) -> dict:
    target = cfg.target()
    if target.truncated:
        raise ConfigError("field 'orthant': the coupling study needs an untruncated target "
                          "(its argument assumes a smooth potential)")
    grid, T = coupling.default_grid(target, tuple(cfg.scales), cfg.horizon, cfg.grid_unit)
    x0 = None if cfg.x0 is None else _start(cfg, target)
    table = coupling.divergence_rate(x0, None, grid, T, target, cfg.replicates, cfg.seed)
    path = _out(cfg, "divergence.csv")
    io.write_csv(path, coupling.DIVERGENCE_HEADER, [e.row() for e in table])
    return {"divergence": path}


def run_figure_data(cfg: ExperimentConfig) -> dict:
    target = cfg.target()
    if cfg.figure == "traceplot":
        cfg_small = dataclasses.replace(cfg, replicates=1)
        if cfg.n_samples is None:
            cfg_small.n_samples = 1000
        width, _ = _width(target)
        delta_T = cfg.t_rel * width
        x0 = _start(cfg, target)
        u = _projection(cfg, target)
        if u is None:
            u = diagnostics.principal_component(target.dim)
        main = _run_sampler(cfg.sampler, cfg_small, target, rng.stream(cfg.seed, "duel", 0, 0), delta_T,
                            n_samples=cfg_small.n_samples, x0=x0)
        ref = _run_sampler(cfg.reference, cfg_small, target, rng.stream(cfg.seed, "duel", 0, 1), delta_T,
                           event_budget=main.total_events, x0=x0)
        rows = []
        for chain in (main, ref):
            proj = diagnostics.project(chain.samples, u)
            for k, (val, ev) in enumerate(zip(proj, np.cumsum(chain.events_per_sample))):
                rows.append([chain.sampler, k, int(ev), val])
        path = _out(cfg, "traceplot.csv")
        io.write_csv(path, ["sampler", "sample", "cumulative_events", "projection"], rows)
        return {"traceplot": path}

    # the path figures start far from the mode unless told otherwise
    x0 = _start(dataclasses.replace(cfg, x0=-1.0) if cfg.x0 is None and not target.truncated else cfg, target)
    g = rng.stream(cfg.seed, "main")
    p0 = hamiltonian.refresh_momentum(target.dim, g)
    v0 = hamiltonian.sign(g.laplace(size=target.dim))
    n = cfg.events
    if cfg.figure == "trajectory":
        track = [0, 1] if target.dim > 1 else [0]
        _, _, lh = hamiltonian.run_events(x0, p0, n, target, track=track)
        _, _, lm = markovian.run_events(x0, v0, n, target, g, track=track)
        rows = []
        for name, log in (("hamiltonian", lh), ("markovian", lm)):
            rows.append([name, 0, 0.0, *x0[track]])
            for k in range(len(log)):
                rows.append([name, k + 1, log.time[k], *log.track[k]])
        header = ["sampler", "event", "time"] + [f"x{i + 1}" for i in track]
        path = _out(cfg, "trajectory.csv")
        io.write_csv(path, header, rows)
        return {"trajectory": path}

    if target.truncated:
        bench = float("nan")
    else:
        bench = diagnostics.expected_squared_distance(target, x0)
    _, _, lh = hamiltonian.run_events(x0, p0, n, target, sqdist_ref=x0)
    _, _, lm = markovian.run_events(x0, v0, n, target, g, sqdist_ref=x0)
    rows = []
    for name, log in (("hamiltonian", lh), ("markovian", lm)):
        for k in range(len(log)):
            rows.append([name, k + 1, log.time[k], log.sqdist[k], bench])
    path = _out(cfg, "sq_distance.csv")
    io.write_csv(path, ["sampler", "event", "time", "sq_distance", "benchmark"], rows)
    return {"sq-distance": path}


def run_eigen(cfg: ExperimentConfig) -> dict:
    target = cfg.target()
    est = model.min_eigenvalue(target.precision, rng=rng.stream(cfg.seed, "lanczos"))
    delta_T = cfg.t_rel / math.sqrt(est.nu_min)
    path = _out(cfg, "eigen.csv")
    io.write_csv(path, ["target", "dim", "nu_min", "matvecs", "converged", "t_rel", "delta_T"],
                 [[target.name, target.dim, est.nu_min, est.iterations_used, int(est.converged), cfg.t_rel, delta_T]])
    return {"eigen": path}


def run_sample(cfg: ExperimentConfig) -> dict:
    target = cfg.target()
    width, _ = _width(target)
    delta_T = cfg.t_rel * width
    x0 = _start(cfg, target)
    dirs = _directions(cfg, target)
    sample_rows, diag_rows = [], []
    for r in range(cfg.replicates):
        chain = _run_sampler(cfg.sampler, cfg, target, rng.stream(cfg.seed, "main", r), delta_T,
                             n_samples=cfg.n_samples, x0=x0)
        sample_rows.append(_sample_rows(chain, r))
        for row in _chain_directions(chain.discard(cfg.burn_in), dirs):
            diag_rows.append([row[0], r, *row[1:]])
    paths = {"samples": _out(cfg, "samples.csv"), "diagnostics": _out(cfg, "diagnostics.csv")}
    io.write_array_csv(paths["samples"], _sample_header(target.dim), np.vstack(sample_rows))
    io.write_csv(paths["diagnostics"], ["sampler", "replicate", "direction", "ess", "events", "ess_per_event"],
                 diag_rows)
    return paths


COMMANDS = {"duel": run_duel, "couple": run_coupling, "figure": run_figure_data, "eigen": run_eigen,
            "sample": run_sample}


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with ExperimentConfig fields")
    common.add_argument("--seed", type=int)
    common.add_argument("--replicates", type=int)
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--family", choices=FAMILIES)
    common.add_argument("--dim", type=int)
    common.add_argument("--rho", type=float)
    common.add_argument("--orthant", choices=tuple(ORTHANTS))
    common.add_argument("--target-file", dest="target_file")
    common.add_argument("--t-rel", dest="t_rel", type=float)
    common.add_argument("--x0", type=float, help="fill value for the starting point")

    p = argparse.ArgumentParser(prog="zigzag", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    samp = argparse.ArgumentParser(add_help=False)
    samp.add_argument("--sampler", choices=samplers.SAMPLERS)
    samp.add_argument("--n-samples", dest="n_samples", type=int)
    samp.add_argument("--T-rel", dest="T_rel", type=float, help="fixed-T mode: T = T_rel / sqrt(nu_min)")
    samp.add_argument("--burn-in", dest="burn_in", type=float)
    samp.add_argument("--max-depth", dest="max_depth", type=int)
    samp.add_argument("--u-turn", dest="u_turn", choices=U_TURN_CRITERIA,
                      help="NUTS stopping rule: dot the displacement with p (momentum) or sign(p) (velocity)")
    samp.add_argument("--projection", help="'pc', 'e1' or a file with one entry per coordinate")

    d = sub.add_parser("duel", parents=[common, samp], help="sampler versus Markovian zigzag")
    d.add_argument("--reference", choices=samplers.SAMPLERS)
    d.add_argument("--markovian-samples", dest="markovian_samples", type=int,
                   help="fixed reference length instead of matching the sampler's events")

    c = sub.add_parser("couple", parents=[common], help="divergence of the coupled zigzags")
    c.add_argument("--grid-unit", dest="grid_unit", choices=("events", "width"))
    c.add_argument("--scales", type=float, nargs="+")
    c.add_argument("--horizon", type=float)

    f = sub.add_parser("figure", parents=[common, samp], help="CSV data for a figure")
    f.add_argument("figure", nargs="?", choices=FIGURES)
    f.add_argument("--events", type=int)
    f.add_argument("--reference", choices=samplers.SAMPLERS)

    sub.add_parser("eigen", parents=[common], help="smallest precision eigenvalue and base time")
    sub.add_parser("sample", parents=[common, samp], help="run one sampler")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = build_config(args.command, file_values, overrides)
        paths = COMMANDS[args.command](cfg)
    except (ConfigError, io.TargetFileError) as exc:
        print(f"zigzag {args.command}: {exc}", file=sys.stderr)
        return 2
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
