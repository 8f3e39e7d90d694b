"""Configuration-driven entry point.

Subcommands:

- ``run``: execute the configured experiment (optionally sweeping the Newton
  fraction and the active fraction), writing one trace CSV plus metadata
  sidecar per (sweep point, seed), a seed-averaged aggregate CSV, two static
  plots, and a summary report.
- ``verify``: run the desk-scale verification battery (engine equivalence,
  linearization-error audit, optimality residuals, contraction check).
- ``solve-oracle``: compute and report the centralized optimum.
- ``gen-graph``: generate a connected random graph and write its edge list.
- ``inspect-config``: validate a config file and echo the resolved values.

Exit codes: 0 success, 1 config error, 2 data error, 3 verification failure,
4 divergence.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import activation as act
from . import analysis, datasets, protocol, simulator, topology
from .objectives import ConvexityError, LocalObjective, Regularizer, default_gamma, estimate_constants


class ConfigError(Exception):
    """Configuration file violates the schema; message carries the field path."""


_REQUIRED = object()

# (type or tuple of types, default); _REQUIRED marks mandatory keys
SCHEMA = {
    "data": {
        "source": (str, "synthetic"),
        "path": (str, ""),
        "declared_d": (int, 0),
        "normalize": (bool, False),
        "shuffle": (bool, False),
        "ridge": ((int, float), 0.0),
        "d": (int, 4),
        "rows_per_agent": (int, 30),
        "noise_sigma": ((int, float), 0.1),
        "seed": (int, 1),
    },
    "graph": {
        "m": (int, _REQUIRED),
        "p": ((int, float), 0.1),
        "seed": (int, 7),
        "edge_list": (str, ""),
    },
    "hyperparams": {
        "mu_theta": ((int, float, str), "auto"),
        "mu_z": ((int, float, str), "auto"),
        "epsilon": ((int, float, str), "auto"),
        "delta_mode": (str, "uniform"),
        "gamma": ((int, float, str), "auto"),
        "selector": (int, 1),
        "certified_mode": (bool, True),
        "regularizer": (str, "l1"),
        "box_lower": ((int, float), -1.0),
        "box_upper": ((int, float), 1.0),
    },
    "activation": {
        "kind": (str, "synchronous"),
        "fraction": ((int, float), 1.0),
        "probs": (list, []),
        "rates": (list, []),
        "seed": (int, 11),
    },
    "run": {
        "iterations": (int, _REQUIRED),
        "tolerance": ((int, float), 1e-10),
        "trace_every": (int, 1),
        "policy": (str, "fresh"),
        "dual_update": (str, "edge"),
        "newton_fraction": ((int, float), 0.0),
        "seeds": (list, [1]),
        "divergence_threshold": ((int, float), 1e6),
    },
    "sweep": {
        "newton_fraction": (list, []),
        "fraction": (list, []),
    },
}


def load_config(path) -> dict:
    """Parse and schema-validate a TOML config file; unknown keys are errors."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file is not valid TOML: {exc}") from None
    cfg = {}
    for section, content in raw.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(content, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key in content:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
    for section, fields in SCHEMA.items():
        out = {}
        src = raw.get(section, {})
        for key, (types, default) in fields.items():
            if key in src:
                value = src[key]
                if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
                    raise ConfigError(f"{section}.{key}: expected {types}, got bool")
                if not isinstance(value, types):
                    raise ConfigError(f"{section}.{key}: expected {types}, got {type(value).__name__}")
                out[key] = value
            elif default is _REQUIRED:
                raise ConfigError(f"missing required key {section}.{key}")
            else:
                out[key] = default
        cfg[section] = out
    _cross_validate(cfg)
    return cfg


def _cross_validate(cfg: dict) -> None:
    m = cfg["graph"]["m"]
    if cfg["data"]["source"] not in ("synthetic", "libsvm"):
        raise ConfigError(f"data.source: expected 'synthetic' or 'libsvm', got {cfg['data']['source']!r}")
    if cfg["data"]["source"] == "libsvm" and not cfg["data"]["path"]:
        raise ConfigError("data.path is required when data.source = 'libsvm'")
    if not 1 <= cfg["hyperparams"]["selector"] <= m:
        raise ConfigError(f"hyperparams.selector: must lie in 1..{m} (1-based)")
    if cfg["hyperparams"]["regularizer"] not in Regularizer.KINDS:
        raise ConfigError(f"hyperparams.regularizer: expected one of {Regularizer.KINDS}")
    for key in ("epsilon", "gamma", "mu_z", "mu_theta"):
        value = cfg["hyperparams"][key]
        if isinstance(value, str) and value != "auto":
            raise ConfigError(f"hyperparams.{key}: expected a number or 'auto'")
    if cfg["activation"]["kind"] not in act.KINDS:
        raise ConfigError(f"activation.kind: expected one of {act.KINDS}")
    if cfg["run"]["policy"] not in ("fresh", "snapshot"):
        raise ConfigError("run.policy: expected 'fresh' or 'snapshot'")
    if cfg["run"]["dual_update"] not in ("edge", "agents"):
        raise ConfigError("run.dual_update: expected 'edge' or 'agents'")
    if not cfg["run"]["seeds"]:
        raise ConfigError("run.seeds: need at least one seed")
    for q in cfg["sweep"]["newton_fraction"] or [cfg["run"]["newton_fraction"]]:
        if not 0 <= q <= 1:
            raise ConfigError(f"newton fraction {q} outside [0, 1]")
    if cfg["sweep"]["fraction"] and cfg["activation"]["kind"] != "fraction_uniform":
        raise ConfigError("sweep.fraction requires activation.kind = 'fraction_uniform'")


class Problem:
    """Resolved experiment inputs: graph, objectives, regularizer, constants, oracle."""

    def __init__(self, cfg: dict):
        g = cfg["graph"]
        if g["edge_list"]:
            self.topo = topology.load_edge_list(g["edge_list"])
            if self.topo.m != g["m"]:
                raise ConfigError(f"graph.m = {g['m']} but edge list has m = {self.topo.m}")
        else:
            self.topo = topology.generate_connected_gnp(g["m"], g["p"], g["seed"])
        self.inc = topology.build_incidence(self.topo)

        d = cfg["data"]
        if d["source"] == "libsvm":
            try:
                text = Path(d["path"]).read_text()
            except OSError as exc:
                raise datasets.ParseError(f"cannot read data file {d['path']}: {exc}") from None
            ds = datasets.parse_libsvm(text, declared_d=d["declared_d"] or None)
            if d["normalize"]:
                X, y = ds.densify()
                X = datasets.normalize_features(X)
                parts = _split_rows(X, y, self.topo.m, d["seed"] if d["shuffle"] else None)
            else:
                parts = datasets.partition_even(ds, self.topo.m, d["seed"] if d["shuffle"] else None)
            self.x_true = None
        else:
            parts, self.x_true = datasets.synth_least_squares(
                self.topo.m, d["d"], d["rows_per_agent"], d["noise_sigma"], d["seed"])
        self.objectives = [LocalObjective(A, b, ridge=d["ridge"]) for (A, b) in parts]
        self.d = self.objectives[0].d
        self.constants = estimate_constants(self.objectives)

        h = cfg["hyperparams"]
        epsilon = self.constants.M_f if h["epsilon"] == "auto" else float(h["epsilon"])
        gamma = default_gamma(self.objectives) if h["gamma"] == "auto" else float(h["gamma"])
        # auto penalties: geometric mean of the curvature range, coupled 2:1
        if h["mu_z"] == "auto" and h["mu_theta"] == "auto":
            mu_z = float(np.sqrt(self.constants.m_f * self.constants.M_f))
            mu_theta = mu_z / 2.0
        elif h["mu_z"] == "auto":
            mu_theta = float(h["mu_theta"])
            mu_z = 2.0 * mu_theta
        elif h["mu_theta"] == "auto":
            mu_z = float(h["mu_z"])
            mu_theta = mu_z / 2.0
        else:
            mu_z, mu_theta = float(h["mu_z"]), float(h["mu_theta"])
        self.reg = Regularizer(h["regularizer"], gamma=gamma,
                               lower=h["box_lower"], upper=h["box_upper"])
        self.hp = protocol.HyperParams(
            mu_z=mu_z, mu_theta=mu_theta, epsilon=epsilon,
            delta_mode=h["delta_mode"], l=h["selector"] - 1, gamma=gamma,
            certified_mode=h["certified_mode"])
        self.spectral = topology.spectral_constants(self.inc, self.hp.l)
        self.oracle = None

    def solve_oracle(self) -> analysis.OracleSolution:
        if self.oracle is None:
            self.oracle = analysis.solve_centralized(self.objectives, self.reg)
        return self.oracle


def _split_rows(X, y, m, seed):
    order = np.arange(len(y)) if seed is None else np.random.default_rng(seed).permutation(len(y))
    base, extra = divmod(len(y), m)
    parts, start = [], 0
    for i in range(m):
        size = base + (1 if i < extra else 0)
        sel = order[start:start + size]
        parts.append((X[sel], y[sel]))
        start += size
    return parts


def _scheme(cfg: dict, m: int, fraction: float | None = None) -> act.ActivationScheme:
    a = cfg["activation"]
    return act.ActivationScheme(
        kind=a["kind"], m=m, seed=a["seed"],
        probs=tuple(a["probs"]),
        fraction=float(fraction if fraction is not None else a["fraction"]),
        rates=tuple(a["rates"]),
    )


def sweep_points(cfg: dict) -> list[tuple[str, float, float | None]]:
    """Expand the sweep lists into (label, newton_fraction, active_fraction) points."""
    qs = cfg["sweep"]["newton_fraction"] or [cfg["run"]["newton_fraction"]]
    cs = cfg["sweep"]["fraction"] or [None]
    points = []
    for q in qs:
        for c in cs:
            label = f"hippo-{round(100 * float(q))}"
            if c is not None and len(cs) > 1:
                label += f"_C{float(c):g}"
            points.append((label, float(q), c))
    return points


def _single_run(problem: Problem, cfg: dict, q: float, c: float | None, seed: int,
                l_star: float) -> simulator.Trace:
    scheme = _scheme(cfg, problem.topo.m, c).with_seed(seed)
    r = cfg["run"]
    run_cfg = simulator.RunConfig(
        hyperparams=problem.hp, scheme=scheme, iterations=r["iterations"],
        newton_fraction=q, tolerance=float(r["tolerance"]), seed=seed,
        trace_every=r["trace_every"], policy=r["policy"], dual_update=r["dual_update"],
        divergence_threshold=float(r["divergence_threshold"]))
    return simulator.run(problem.topo, problem.objectives, problem.reg, run_cfg, l_star=l_star)


def _flatten_config(cfg: dict) -> dict:
    flat = {}
    for section, fields in cfg.items():
        for key, value in fields.items():
            flat[f"config.{section}.{key}"] = value
    return flat


def run_experiment(cfg: dict, out_dir, threads: int = 1, seed_override: int | None = None) -> dict:
    """Execute the configured experiment; returns a dict of written artifact paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = Problem(cfg)
    oracle = problem.solve_oracle()
    seeds = [seed_override] if seed_override is not None else list(cfg["run"]["seeds"])
    points = sweep_points(cfg)

    tasks = [(label, q, c, seed) for (label, q, c) in points for seed in seeds]

    def work(task):
        label, q, c, seed = task
        return task, _single_run(problem, cfg, q, c, seed, oracle.value)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(pool.map(work, tasks))
    else:
        results = dict(map(work, tasks))

    paths = {"traces": [], "metadata": []}
    config_echo = _flatten_config(cfg)
    for task in tasks:  # deterministic write order regardless of executor
        label, q, c, seed = task
        trace = results[task]
        trace.metadata.update(config_echo)
        trace.metadata.update({
            "constants.m_f": problem.constants.m_f,
            "constants.M_f": problem.constants.M_f,
            "constants.L_f": problem.constants.L_f,
            "oracle.value": oracle.value,
            "oracle.residual": oracle.residual,
            "sweep.label": label,
        })
        scheme = _scheme(cfg, problem.topo.m, c)
        _, _, p_min = act.expected_activation(scheme, problem.topo)
        if problem.hp.certified_mode:
            tc = analysis.theoretical_eta(problem.constants, problem.spectral, problem.hp, p_min=p_min)
            trace.metadata["rate.eta"] = tc.eta
            trace.metadata["rate.p_min"] = p_min
            trace.metadata["rate.certified"] = tc.rate
        stem = out / f"trace_{label}_seed{seed}"
        trace.save(stem.with_suffix(".csv"))
        trace.save_metadata(stem.with_suffix(".meta.txt"))
        paths["traces"].append(stem.with_suffix(".csv"))
        paths["metadata"].append(stem.with_suffix(".meta.txt"))

    agg_rows, summary_lines = _aggregate(problem, cfg, points, seeds, results)
    agg_path = out / "aggregate.csv"
    with open(agg_path, "w") as fh:
        fh.write("label,q,C,t,comm_rounds,mean_rel_loss,mean_comm_cost,mean_comp_cost\n")
        for row in agg_rows:
            fh.write(",".join(row) + "\n")
    paths["aggregate"] = agg_path

    summary_path = out / "summary.txt"
    with open(summary_path, "w") as fh:
        fh.write("\n".join(summary_lines) + "\n")
    paths["summary"] = summary_path

    paths["plots"] = _plot(agg_path, out)
    return paths


def _aggregate(problem, cfg, points, seeds, results):
    rows = []
    lines = [
        f"agents m = {problem.topo.m}, edges n = {problem.topo.n}, dimension d = {problem.d}",
        f"constants: m_f = {problem.constants.m_f!r}, M_f = {problem.constants.M_f!r}, "
        f"L_f = {problem.constants.L_f!r}",
        f"spectral: sigma_max_Lu = {problem.spectral.sigma_max_Lu!r}, "
        f"sigma_min_plus = {problem.spectral.sigma_min_plus!r}",
        f"oracle value l(x*) = {problem.oracle.value!r} (residual {problem.oracle.residual:.3e})",
    ]
    for (label, q, c) in points:
        traces = [results[(label, q, c, seed)] for seed in seeds]
        T = min(len(tr.t) for tr in traces)
        rel = np.mean(np.stack([tr.rel_loss[:T] for tr in traces]), axis=0)
        comm = np.mean(np.stack([tr.comm_cost[:T] for tr in traces]), axis=0)
        comp = np.mean(np.stack([tr.comp_cost[:T] for tr in traces]), axis=0)
        ts = traces[0].t[:T]
        c_str = "" if c is None else repr(float(c))
        for k in range(T):
            rows.append([label, repr(float(q)), c_str, str(int(ts[k])), str(int(ts[k])),
                         repr(float(rel[k])), repr(float(comm[k])), repr(float(comp[k]))])
        positive = (rel > 1e-14) & (ts >= 1)
        if positive.sum() >= 2:
            slope = float(np.polyfit(ts[positive], np.log(rel[positive]), 1)[0])
            observed = float(np.exp(slope))
        else:
            observed = float("nan")
        scheme = _scheme(cfg, problem.topo.m, c)
        _, _, p_min = act.expected_activation(scheme, problem.topo)
        line = f"{label}: observed per-iteration rate {observed!r} (seed-averaged)"
        if problem.hp.certified_mode:
            tc = analysis.theoretical_eta(problem.constants, problem.spectral, problem.hp, p_min=p_min)
            line += f"; eta = {tc.eta!r}, p_min = {p_min!r}, certified rate = {tc.rate!r}"
        else:
            line += "; rate certificate skipped (certified_mode = false)"
        lines.append(line)
    return rows, lines


def _plot(agg_path, out_dir):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = {}  # insertion order = sweep order
    with open(agg_path) as fh:
        next(fh)
        for line in fh:
            label, _q, _c, _t, rounds, rel, _comm, comp = line.rstrip("\n").split(",")
            data.setdefault(label, []).append((float(rounds), float(rel), float(comp)))
    written = []
    for fname, xi, xlabel in (("loss_vs_comm.png", 0, "communication rounds"),
                              ("loss_vs_comp.png", 2, "computation cost (flop units)")):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label in data:
            pts = data[label]
            ax.semilogy([p[xi] for p in pts], [max(p[1], 1e-300) for p in pts], label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("averaged relative loss")
        ax.legend()
        fig.tight_layout()
        path = Path(out_dir) / fname
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# verification battery


class VerificationReport:
    def __init__(self):
        self.checks = []

    def add(self, name: str, passed: bool, detail: str) -> None:
        self.checks.append((name, passed, detail))

    @property
    def passed(self) -> bool:
        return all(ok for (_, ok, _) in self.checks)

    def summary(self) -> str:
        lines = [f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}" for (name, ok, detail) in self.checks]
        lines.append(f"verification {'passed' if self.passed else 'FAILED'}")
        return "\n".join(lines)


def verify(cfg: dict, out_dir=None) -> VerificationReport:
    """Desk-scale verification battery; requires m <= 6 and d <= 4.

    With ``out_dir`` the contraction report is also written out as a text
    summary plus a CSV of per-iteration seed-averaged ratios.
    """
    problem = Problem(cfg)
    if problem.topo.m > 6 or problem.d > 4:
        raise ConfigError(f"verify needs a desk-scale config (m <= 6, d <= 4); "
                          f"got m = {problem.topo.m}, d = {problem.d}")
    report = VerificationReport()
    topo, inc, hp, reg = problem.topo, problem.inc, problem.hp, problem.reg
    objs, consts = problem.objectives, problem.constants
    m, d = topo.m, problem.d
    mode = protocol.UpdateMode.from_fraction(0.5, m, seed=1)

    # engine equivalence: reduced vs reference trajectories from zero init
    state = protocol.NetworkState.zeros(m, d)
    ref = protocol.AdmmReferenceState.zeros(m, topo.n, d)
    dev = ab_gap = z_gap = 0.0
    everyone = np.ones(m, dtype=bool)
    for _ in range(100):
        protocol.step_active(state, everyone, hp, objs, mode, reg, topo)
        protocol.admm_reference_step(ref, hp, objs, mode, reg, inc, topo)
        dev = max(dev, float(np.max(np.abs(ref.x - state.x))),
                  float(np.max(np.abs(ref.theta - state.theta))),
                  float(np.max(np.abs(ref.lam - state.lam))))
        ab_gap = max(ab_gap, float(np.max(np.abs(ref.alpha + ref.beta))))
        z_gap = max(z_gap, float(np.linalg.norm(ref.z - 0.5 * inc.E_u @ ref.x)))
    report.add("engine equivalence", dev <= 1e-10 and ab_gap <= 1e-12 and z_gap <= 1e-12,
               f"max trajectory deviation {dev:.2e}, dual-half gap {ab_gap:.2e}, edge identity {z_gap:.2e}")

    # linearization-error audit over a battery of runs
    oracle = problem.solve_oracle()
    worst = [0.0]
    newton_err = [0.0]

    def audit(t, record, x_prev, st, md):
        for i in np.flatnonzero(record.agents):
            e, bound = protocol.error_term(x_prev[i], st.x[i], bool(md.newton[i]), objs[i], consts)
            worst[0] = max(worst[0], float(np.linalg.norm(e)) - bound)
            if md.newton[i]:
                newton_err[0] = max(newton_err[0], float(np.linalg.norm(e)))

    for kind in ("synchronous", "single_uniform"):
        scheme = act.ActivationScheme(kind=kind, m=m, seed=5)
        run_cfg = simulator.RunConfig(hyperparams=hp, scheme=scheme, iterations=150,
                                      newton_fraction=0.5, seed=2, tolerance=0.0)
        simulator.run(topo, objs, reg, run_cfg, l_star=oracle.value, iteration_hook=audit)
    report.add("linearization error bound", worst[0] <= 1e-12 and newton_err[0] <= 1e-12,
               f"max bound excess {worst[0]:.2e}, max Newton-on-quadratic error {newton_err[0]:.2e}")

    # optimality residuals of the recovered saddle point
    star = analysis.star_tuple(oracle, objs, inc, hp)
    res = analysis.kkt_residuals(star, objs, inc, hp, reg)
    worst_res = max(res.values())
    report.add("saddle-point residuals", worst_res <= 1e-8,
               "max residual {:.2e} ({})".format(worst_res, ", ".join(f"{k}={v:.1e}" for k, v in res.items())))

    # expected contraction under single-agent activation, checked over the
    # decaying phase (the masked dual updates leave a small frozen cycle-space
    # offset, so the distance plateaus above zero once converged; see notes
    # in the analysis module)
    p_agent, p_edge, p_min = act.expected_activation(
        act.ActivationScheme(kind="single_uniform", m=m, seed=0), topo)
    tc = analysis.theoretical_eta(consts, problem.spectral, hp, p_min=p_min)
    series = []
    for seed in range(20):
        scheme = act.ActivationScheme(kind="single_uniform", m=m, seed=100 + seed)
        run_cfg = simulator.RunConfig(hyperparams=hp, scheme=scheme, iterations=80,
                                      newton_fraction=0.5, seed=2, tolerance=0.0)
        monitor = analysis.ContractionMonitor(topo, hp, star, p_agent, p_edge)
        simulator.run(topo, objs, reg, run_cfg, l_star=oracle.value, monitor=monitor)
        series.append(monitor.series)
    creport = analysis.contraction_check(series, tc)
    report.add("expected contraction", creport.passed,
               f"violations {100 * creport.violation_fraction:.1f}%, slope {creport.slope:.4f}, "
               f"bound {creport.bound:.4f}")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "contraction_summary.txt").write_text(creport.summary() + "\n")
        (out / "contraction_ratios.csv").write_text(creport.ratios_csv())
    return report


# ---------------------------------------------------------------------------
# command line interface


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hippo", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "verify", "solve-oracle", "gen-graph", "inspect-config"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the TOML config file")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--seed-override", type=int, default=None,
                       help="replace the configured seed list with this single seed")
        p.add_argument("--threads", type=int, default=1,
                       help="parallel workers for independent sweep runs")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "run":
            paths = run_experiment(cfg, args.out, threads=args.threads,
                                   seed_override=args.seed_override)
            # verbatim copy of the input config next to the artifacts
            echo = Path(args.out) / "config_echo.toml"
            echo.write_bytes(Path(args.config).read_bytes())
            print(f"wrote {len(paths['traces'])} trace(s), {paths['aggregate']}, "
                  f"{paths['summary']}, {len(paths['plots'])} plot(s) to {args.out}")
            return 0
        if args.command == "verify":
            report = verify(cfg, out_dir=args.out)
            print(report.summary())
            return 0 if report.passed else 3
        if args.command == "solve-oracle":
            problem = Problem(cfg)
            oracle = problem.solve_oracle()
            print(f"x* = {oracle.x!r}")
            print(f"l(x*) = {oracle.value!r}")
            print(f"fixed-point residual = {oracle.residual:.3e} after {oracle.iterations} iterations")
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            with open(out / "oracle.txt", "w") as fh:
                fh.write(f"x_star = {oracle.x.tolist()!r}\nvalue = {oracle.value!r}\n"
                         f"residual = {oracle.residual!r}\niterations = {oracle.iterations}\n")
            return 0
        if args.command == "gen-graph":
            g = cfg["graph"]
            topo = topology.generate_connected_gnp(g["m"], g["p"],
                                                   args.seed_override if args.seed_override is not None else g["seed"])
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            path = out / "graph.txt"
            topology.save_edge_list(topo, path)
            print(f"m = {topo.m}, n = {topo.n}, redraws = {topo.redraws}; wrote {path}")
            return 0
        if args.command == "inspect-config":
            for section in SCHEMA:
                print(f"[{section}]")
                for key, value in cfg[section].items():
                    print(f"  {key} = {value!r}")
            pts = sweep_points(cfg)
            print(f"sweep points: {[p[0] for p in pts]}")
            print(f"total runs: {len(pts) * len(cfg['run']['seeds'])}")
            return 0
    except (ConfigError, protocol.ConfigurationError, act.ActivationError,
            topology.TopologyError, ConvexityError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except datasets.ParseError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except simulator.DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
