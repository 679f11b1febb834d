"""Experiment orchestration: configs, persistence, experiment kinds.

Configurations are JSON objects (see ``CONFIG_SCHEMA`` in the README);
series and snapshots are written as CSV (default) or JSON with 17
significant digits, so a read-back reproduces every float bit-exactly and
identical configs produce bit-identical files.
"""

import json
import math
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .energetics import (
    BoundVerdict,
    decay_bound_check,
    dissipation_residuals,
    energy_report,
    positivity_lower_bound,
    small_set_measure,
    steady_state_prediction,
)
from .errors import ConfigError
from .formulations import cross_check_evolution
from .initials import from_config as initial_from_config
from .initials import perturbed_uniform_positions
from .solver import EXPLICIT_RK4, SEMI_IMPLICIT, SolverOptions, evolve
from .steps import ADL, SlopeVector, StepConfiguration, from_slopes, integrate_steps

KINDS = ("run", "eps_sweep", "step_vs_pde", "refine", "longtime", "crosscheck",
         "check_all")
FORMATS = ("csv", "json")
SERIES_HEADER = "t,F,E,D,F_eps,m,m_reg,u_min,u_max,dt"
DEFAULT_EPS_SWEEP = (1e-2, 1e-3, 1e-4)
DEFAULT_DELTAS = (0.02, 0.05, 0.1)
DEFAULT_STEP_COUNTS = (32, 64, 128)


def _fmt(x):
    return f"{float(x):.17g}"


@dataclass
class ExperimentConfig:
    kind: str
    initial: dict = dc_field(default_factory=dict)
    n: int = 256
    epsilon: object = None  # float or list of floats
    t_end: float = None
    scheme: str = SEMI_IMPLICIT
    cfl_safety: float = 0.4
    report_every: float = None
    dt_max: float = math.inf
    out_dir: str = "out"
    format: str = "csv"
    seed: int = 0
    step_counts: tuple = DEFAULT_STEP_COUNTS
    ref_n: int = 256
    deltas: tuple = DEFAULT_DELTAS
    stop_tol: float = 1e-6

    def solver_options(self, dt_max=None):
        return SolverOptions(
            scheme=self.scheme,
            cfl_safety=self.cfl_safety,
            dt_max=self.dt_max if dt_max is None else dt_max,
            report_every=self.report_every,
        )


_KNOWN_KEYS = {
    "kind", "initial", "n", "epsilon", "t_end", "scheme", "cfl_safety",
    "report_every", "dt_max", "out_dir", "format", "seed", "step_counts",
    "ref_n", "deltas", "stop_tol",
}
_NEEDS_T_END = {"run", "eps_sweep", "step_vs_pde", "refine", "longtime",
                "crosscheck"}
_NEEDS_INITIAL = _NEEDS_T_END
_NEEDS_EPSILON = {"run", "refine", "longtime"}


def validate_config(raw):
    """Turn a parsed JSON object into a validated ExperimentConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")

    cfg = ExperimentConfig(kind=kind)
    if "initial" in raw:
        cfg.initial = raw["initial"]
    if "n" in raw:
        cfg.n = int(raw["n"])
        if cfg.n < 8:
            raise ConfigError("n must be at least 8")
    if "epsilon" in raw:
        eps = raw["epsilon"]
        if isinstance(eps, (list, tuple)):
            cfg.epsilon = [float(e) for e in eps]
            if any(e < 0 for e in cfg.epsilon):
                raise ConfigError("epsilon values must be non-negative")
        else:
            cfg.epsilon = float(eps)
            if cfg.epsilon < 0:
                raise ConfigError("epsilon must be non-negative")
    if "t_end" in raw:
        cfg.t_end = float(raw["t_end"])
        if not (cfg.t_end > 0):
            raise ConfigError("t_end must be positive")
    if "scheme" in raw:
        if raw["scheme"] not in (EXPLICIT_RK4, SEMI_IMPLICIT):
            raise ConfigError(f"scheme must be {EXPLICIT_RK4} or {SEMI_IMPLICIT}")
        cfg.scheme = raw["scheme"]
    if "cfl_safety" in raw:
        cfg.cfl_safety = float(raw["cfl_safety"])
        if not (0 < cfg.cfl_safety <= 1):
            raise ConfigError("cfl_safety must lie in (0, 1]")
    if "report_every" in raw:
        cfg.report_every = float(raw["report_every"])
        if not (cfg.report_every > 0):
            raise ConfigError("report_every must be positive")
    if "dt_max" in raw:
        cfg.dt_max = float(raw["dt_max"])
        if not (cfg.dt_max > 0):
            raise ConfigError("dt_max must be positive")
    if "out_dir" in raw:
        cfg.out_dir = str(raw["out_dir"])
    if "format" in raw:
        if raw["format"] not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        cfg.format = raw["format"]
    if "seed" in raw:
        cfg.seed = int(raw["seed"])
    if "step_counts" in raw:
        cfg.step_counts = tuple(int(v) for v in raw["step_counts"])
        if any(v < 4 for v in cfg.step_counts):
            raise ConfigError("step experiments need at least 4 steps")
    if "ref_n" in raw:
        cfg.ref_n = int(raw["ref_n"])
    if "deltas" in raw:
        cfg.deltas = tuple(float(v) for v in raw["deltas"])
    if "stop_tol" in raw:
        cfg.stop_tol = float(raw["stop_tol"])

    if kind in _NEEDS_T_END and cfg.t_end is None:
        raise ConfigError(f"kind={kind} requires t_end")
    if kind in _NEEDS_INITIAL and not cfg.initial:
        raise ConfigError(f"kind={kind} requires an initial condition")
    if kind in _NEEDS_EPSILON and cfg.epsilon is None:
        raise ConfigError(f"kind={kind} requires epsilon")
    if cfg.initial and "steps_uniform_perturbed" not in cfg.initial:
        initial_from_config(cfg.initial)  # raises ConfigError on bad families
    if cfg.report_every is None and cfg.t_end is not None:
        cfg.report_every = cfg.t_end / 100.0
    return cfg


def load_config(path):
    """Read and validate a JSON experiment configuration."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path} is not valid JSON (line {exc.lineno}): {exc.msg}"
        ) from exc
    return validate_config(raw)


@dataclass
class RunArtifacts:
    """Filesystem results of one experiment."""

    series_paths: list
    snapshot_paths: list
    verdicts_path: str
    metadata_path: str
    verdicts: list
    summary: dict


def write_series(reports, path, fmt="csv"):
    """Write the report series; columns exactly t,F,E,D,F_eps,m,m_reg,u_min,u_max,dt."""
    path = Path(path)
    if fmt == "csv":
        lines = [SERIES_HEADER]
        for rep in reports:
            lines.append(",".join(_fmt(v) for v in rep.series_row()))
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        rows = [
            {k: v for k, v in zip(rep.SERIES_FIELDS, rep.series_row())}
            for rep in reports
        ]
        path.write_text(json.dumps(rows, indent=1))
    else:
        raise ConfigError(f"format must be one of {FORMATS}")
    return str(path)


def read_series(path):
    """Read back a CSV series into a list of column dicts (floats)."""
    lines = Path(path).read_text().strip().splitlines()
    names = lines[0].split(",")
    return [
        {k: float(v) for k, v in zip(names, line.split(","))}
        for line in lines[1:]
    ]


def write_snapshot(t, u, path, fmt="csv", epsilon=0.0):
    """Write one field snapshot (columns h,u with a metadata comment line)."""
    path = Path(path)
    nodes = u.grid.nodes
    if fmt == "csv":
        lines = [f"# t={_fmt(t)} n={u.grid.n} epsilon={_fmt(epsilon)}", "h,u"]
        for h, v in zip(nodes, u.values):
            lines.append(f"{_fmt(h)},{_fmt(v)}")
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        payload = {
            "t": float(t),
            "n": u.grid.n,
            "epsilon": float(epsilon),
            "h": [float(x) for x in nodes],
            "u": [float(x) for x in u.values],
        }
        path.write_text(json.dumps(payload, indent=1))
    else:
        raise ConfigError(f"format must be one of {FORMATS}")
    return str(path)


def _verdict_dict(v):
    return {
        "name": v.name,
        "lhs": v.lhs,
        "rhs": v.rhs,
        "satisfied": v.satisfied,
        "margin": v.margin,
    }


def _write_outputs(out, cfg, verdicts, summary, series_paths, snapshot_paths,
                   wall_time):
    verdicts_path = out / "verdicts.json"
    verdicts_path.write_text(
        json.dumps([_verdict_dict(v) for v in verdicts], indent=1)
    )
    metadata_path = out / "metadata.json"
    metadata_path.write_text(
        json.dumps(
            {
                "config": {
                    k: v for k, v in cfg.__dict__.items()
                    if not isinstance(v, float) or math.isfinite(v)
                },
                "version": __version__,
                "kernel_backend": kernels.BACKEND,
                "wall_time_s": wall_time,
                "summary": summary,
            },
            indent=1,
            default=str,
        )
    )
    return RunArtifacts(
        series_paths=[str(p) for p in series_paths],
        snapshot_paths=[str(p) for p in snapshot_paths],
        verdicts_path=str(verdicts_path),
        metadata_path=str(metadata_path),
        verdicts=verdicts,
        summary=summary,
    )


def _standard_run_verdicts(states, reports, epsilon, scheme):
    verdicts = []
    f0 = reports[0].F
    worst = None
    for rep in reports[1:]:
        v = decay_bound_check(rep, f0)
        if worst is None or v.margin < worst.margin:
            worst = v
    if worst is not None:
        verdicts.append(worst)
    n_bad_e = sum(0 if rep.e_nonincreasing else 1 for rep in reports)
    verdicts.append(BoundVerdict("E_monotone_violations", float(n_bad_e), 0.0))
    if epsilon > 0:
        run_min = min(s.u_min_interval for s in states)
        verdicts.append(BoundVerdict("positivity_min_u", 0.0, run_min))
        verdicts.append(
            BoundVerdict("floor_events", float(states[-1].floor_events), 0.0)
        )
        horizon = reports[-1].t - reports[0].t
        drift = abs(reports[-1].m_reg - reports[0].m_reg) / abs(reports[0].m_reg)
        if scheme == EXPLICIT_RK4 and horizon > 0:
            verdicts.append(
                BoundVerdict("m_reg_drift_per_time", drift / horizon, 1e-6)
            )
    return verdicts


def _kind_run(cfg, out):
    ic = initial_from_config(cfg.initial)
    u0 = ic.sample(cfg.n)
    eps = float(cfg.epsilon)
    states, reports = evolve(u0, eps, cfg.t_end, cfg.solver_options())
    series = write_series(reports, out / f"series.{cfg.format}", cfg.format)
    snaps = [
        write_snapshot(states[0].t, states[0].u,
                       out / f"snapshot_t0.{cfg.format}", cfg.format, eps),
        write_snapshot(states[-1].t, states[-1].u,
                       out / f"snapshot_final.{cfg.format}", cfg.format, eps),
    ]
    verdicts = _standard_run_verdicts(states, reports, eps, cfg.scheme)
    summary = {
        "t_final": states[-1].t,
        "u_min_run": min(s.u_min_interval for s in states),
        "floor_events": states[-1].floor_events,
    }
    return verdicts, summary, [series], snaps


def _kind_eps_sweep(cfg, out):
    ic = initial_from_config(cfg.initial)
    u0 = ic.sample(cfg.n)
    eps_list = cfg.epsilon if isinstance(cfg.epsilon, list) else None
    eps_list = eps_list or list(DEFAULT_EPS_SWEEP)
    e0 = energy_report(u0, 0.0, 0.0, 0.0).E
    c_m0 = ic.m0 + 1.0

    verdicts = []
    series_paths = []
    rows = []
    for eps in eps_list:
        states, reports = evolve(u0, eps, cfg.t_end, cfg.solver_options())
        tag = f"eps{eps:.0e}"
        series_paths.append(
            write_series(reports, out / f"series_{tag}.{cfg.format}", cfg.format)
        )
        run_min = min(s.u_min_interval for s in states)
        bound = positivity_lower_bound(e0, c_m0, eps)
        verdicts.append(BoundVerdict(f"positivity_bound_{tag}", bound, run_min))
        times = [s.t for s in states]
        fields = [s.u for s in states]
        for delta in cfg.deltas:
            v = small_set_measure(times, fields, delta, c_m0)
            verdicts.append(
                BoundVerdict(f"{v.name}_{tag}", v.lhs, v.rhs)
            )
        r1, r2 = dissipation_residuals(reports, eps)
        rows.append((eps, run_min, bound, r1, r2))

    table = out / f"sweep_summary.{cfg.format}"
    if cfg.format == "csv":
        lines = ["epsilon,u_min_run,positivity_bound,r1,r2"]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        table.write_text("\n".join(lines) + "\n")
    else:
        table.write_text(json.dumps(
            [dict(zip(("epsilon", "u_min_run", "positivity_bound", "r1", "r2"),
                      row)) for row in rows], indent=1))
    series_paths.append(str(table))
    summary = {"epsilons": eps_list, "E0": e0, "C_m0": c_m0}
    return verdicts, summary, series_paths, []


def _kind_step_vs_pde(cfg, out):
    ic = initial_from_config(cfg.initial)
    ref_n = cfg.ref_n
    for count in cfg.step_counts:
        if ref_n % count:
            raise ConfigError("ref_n must be a multiple of every step count")
    u_ref0 = ic.sample(ref_n)
    ref_opts = SolverOptions(
        scheme=EXPLICIT_RK4, cfl_safety=cfg.cfl_safety,
        report_every=cfg.t_end,
    )
    ref_states, _ = evolve(u_ref0, 0.0, cfg.t_end, ref_opts)
    u_ref = ref_states[-1].u.values

    errors = []
    for count in cfg.step_counts:
        a = 1.0 / count
        heights = a * np.arange(count)
        slopes0 = SlopeVector(ic.profile(heights), a)
        c0 = from_slopes(slopes0, x1=0.0)
        traj = integrate_steps(c0, model=ADL, t_end=cfg.t_end)
        final_slopes = c0.step_height / _terrace_widths_of(traj.final)
        stride = ref_n // count
        err = float(np.max(np.abs(final_slopes - u_ref[::stride])))
        errors.append((count, err))

    table = out / f"step_vs_pde.{cfg.format}"
    if cfg.format == "csv":
        lines = ["N,sup_error"]
        lines += [f"{count},{_fmt(err)}" for count, err in errors]
        table.write_text("\n".join(lines) + "\n")
    else:
        table.write_text(json.dumps(
            [{"N": count, "sup_error": err} for count, err in errors], indent=1))

    verdicts = []
    for (n1, e1), (n2, e2) in zip(errors, errors[1:]):
        verdicts.append(BoundVerdict(f"error_decrease_N{n1}_to_N{n2}", e2, e1))
    summary = {"errors": {str(count): err for count, err in errors}}
    return verdicts, summary, [str(table)], []


def _terrace_widths_of(config):
    pos = config.positions
    widths = np.empty(len(pos))
    widths[:-1] = pos[1:] - pos[:-1]
    widths[-1] = pos[0] + config.big_l - pos[-1]
    return widths


def _common_node_error(coarse, fine):
    stride = fine.grid.n // coarse.grid.n
    return float(np.max(np.abs(coarse.values - fine.values[::stride])))


def _kind_refine(cfg, out):
    ic = initial_from_config(cfg.initial)
    eps = float(cfg.epsilon)
    finals = {}
    for n in (cfg.n, 2 * cfg.n, 4 * cfg.n):
        states, _ = evolve(ic.sample(n), eps, cfg.t_end, cfg.solver_options())
        finals[n] = states[-1].u
    e_space_1 = _common_node_error(finals[cfg.n], finals[2 * cfg.n])
    e_space_2 = _common_node_error(finals[2 * cfg.n], finals[4 * cfg.n])

    dt0 = cfg.dt_max if math.isfinite(cfg.dt_max) else cfg.report_every / 20.0
    finals_t = {}
    for dt in (dt0, dt0 / 2.0, dt0 / 4.0):
        states, _ = evolve(ic.sample(cfg.n), eps, cfg.t_end,
                           cfg.solver_options(dt_max=dt))
        finals_t[dt] = states[-1].u
    e_time_1 = float(np.max(np.abs(finals_t[dt0].values - finals_t[dt0 / 2].values)))
    e_time_2 = float(np.max(np.abs(
        finals_t[dt0 / 2].values - finals_t[dt0 / 4].values)))

    def order(e1, e2):
        if e1 > 0 and e2 > 0:
            return math.log2(e1 / e2)
        return math.inf

    summary = {
        "space_errors": [e_space_1, e_space_2],
        "space_order": order(e_space_1, e_space_2),
        "time_errors": [e_time_1, e_time_2],
        "time_order": order(e_time_1, e_time_2),
    }
    table = out / "refine.json"
    table.write_text(json.dumps(summary, indent=1))
    verdicts = [
        BoundVerdict("space_error_decrease", e_space_2, e_space_1),
        BoundVerdict("time_error_decrease", e_time_2, e_time_1),
    ]
    return verdicts, summary, [str(table)], []


def _kind_longtime(cfg, out):
    ic = initial_from_config(cfg.initial)
    u0 = ic.sample(cfg.n)
    eps = float(cfg.epsilon)
    tol = cfg.stop_tol

    def settled(vals):
        return float(np.max(np.abs(vals - np.mean(vals)))) < tol

    states, reports = evolve(u0, eps, cfg.t_end, cfg.solver_options(),
                             stop_when=settled)
    limit = float(np.mean(states[-1].u.values))
    predicted = steady_state_prediction(u0)
    series = write_series(reports, out / f"series.{cfg.format}", cfg.format)
    snaps = [write_snapshot(states[-1].t, states[-1].u,
                            out / f"snapshot_final.{cfg.format}", cfg.format, eps)]
    verdicts = [
        BoundVerdict("longtime_limit_matches_prediction",
                     abs(limit - predicted), 1e-4),
        BoundVerdict("longtime_settled",
                     float(np.max(np.abs(states[-1].u.values - limit))), tol),
    ]
    summary = {"limit": limit, "predicted": predicted,
               "stop_time": states[-1].t}
    return verdicts, summary, [series], snaps


def _kind_crosscheck(cfg, out):
    ic = initial_from_config(cfg.initial)
    rep1 = cross_check_evolution(ic.sample(cfg.n), cfg.t_end,
                                 cfl_safety=cfg.cfl_safety)
    rep2 = cross_check_evolution(ic.sample(2 * cfg.n), cfg.t_end,
                                 cfl_safety=cfg.cfl_safety)
    verdicts = [
        BoundVerdict("u_vs_phi_refines_3x", 3.0 * rep2.u_vs_phi, rep1.u_vs_phi),
        BoundVerdict("mean_drift_phi", max(rep1.mean_drift_phi,
                                           rep2.mean_drift_phi), 1e-8),
        BoundVerdict("mean_drift_h", max(rep1.mean_drift_h,
                                         rep2.mean_drift_h), 1e-8),
        BoundVerdict("mean_drift_rho", max(rep1.mean_drift_rho,
                                           rep2.mean_drift_rho), 1e-8),
    ]
    summary = {
        "n": cfg.n,
        "discrepancy_coarse": rep1.u_vs_phi,
        "discrepancy_fine": rep2.u_vs_phi,
        "u_vs_height_coarse": rep1.u_vs_height,
        "u_vs_height_fine": rep2.u_vs_height,
    }
    table = out / "crosscheck.json"
    table.write_text(json.dumps(summary, indent=1))
    return verdicts, summary, [str(table)], []


def _kind_check_all(cfg, out):
    from .checks import run_acceptance

    results = run_acceptance(quick=False)
    verdicts = [BoundVerdict(r.name, 0.0 if r.passed else 1.0, 0.0)
                for r in results]
    summary = {r.name: r.detail for r in results}
    table = out / "acceptance.json"
    table.write_text(json.dumps(
        [{"name": r.name, "passed": r.passed, "detail": r.detail}
         for r in results], indent=1))
    return verdicts, summary, [str(table)], []


_DISPATCH = {
    "run": _kind_run,
    "eps_sweep": _kind_eps_sweep,
    "step_vs_pde": _kind_step_vs_pde,
    "refine": _kind_refine,
    "longtime": _kind_longtime,
    "crosscheck": _kind_crosscheck,
    "check_all": _kind_check_all,
}


def run_experiment(cfg):
    """Dispatch one validated config; returns RunArtifacts."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    verdicts, summary, series_paths, snapshot_paths = _DISPATCH[cfg.kind](cfg, out)
    wall = time.perf_counter() - start
    return _write_outputs(out, cfg, verdicts, summary, series_paths,
                          snapshot_paths, wall)


def make_perturbed_train(n_steps, amplitude, seed, big_l=1.0):
    """Seeded perturbed uniform step train (xorshift64* jitter)."""
    return StepConfiguration(
        big_l, perturbed_uniform_positions(n_steps, amplitude, seed, big_l)
    )
