"""The acceptance suite: every gating criterion as a callable check.

``vicinal check`` and tests/test_acceptance.py both run these.  Expensive
trajectories are computed once per process and shared between criteria.
``quick=True`` shrinks grids and horizons for a fast smoke pass; the
gating numbers are the full-parameter suite.
"""

import math
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import energetics, formulations, harness, initials, solver, steps
from .energetics import (
    biharmonic_identity_residual,
    decay_bound_check,
    dissipation_residuals,
    holder_modulus,
    min_deviation_check,
    positivity_lower_bound,
    small_set_measure,
    steady_state_prediction,
)
from .grid import PeriodicField, make_grid
from .rng import XorShift64Star
from .solver import EXPLICIT_RK4, SEMI_IMPLICIT, SolverOptions, evolve
from .steps import StepConfiguration, integrate_steps, step_energy, uniform_train


@dataclass
class CheckResult:
    index: int
    name: str
    passed: bool
    detail: str

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{self.index:2d}] {status} {self.name}: {self.detail}"


_cache = {}


def _cached(key, builder):
    if key not in _cache:
        _cache[key] = builder()
    return _cache[key]


def clear_cache():
    _cache.clear()


# ----------------------------------------------------------------- shared runs

def _dissipation_params(quick):
    if quick:
        return dict(n=64, eps=1e-3, t_end=1e-4, dts=(8e-8, 4e-8, 2e-8),
                    report_every=1e-6)
    return dict(n=128, eps=1e-3, t_end=2e-4, dts=(4e-8, 2e-8, 1e-8),
                report_every=5e-7)


def _dissipation_runs(quick):
    """Semi-implicit sine_cubed(0.1, 1.0) runs at a dt-halving sequence."""
    p = _dissipation_params(quick)
    ic = initials.sine_cubed(0.1, 1.0)
    u0 = ic.sample(p["n"])

    def build():
        runs = {}
        for dt in p["dts"]:
            opts = SolverOptions(scheme=SEMI_IMPLICIT, dt_max=dt,
                                 report_every=p["report_every"])
            runs[dt] = evolve(u0, p["eps"], p["t_end"], opts)
        return runs

    return p, _cached(("dissipation", quick), build)


def _sweep_params(quick):
    if quick:
        return dict(n=128, t_end=5e-5, dt=2e-7, report_every=2e-6,
                    eps_list=(1e-2, 1e-3, 1e-4), deltas=(0.02, 0.05, 0.1))
    return dict(n=256, t_end=1e-4, dt=2e-7, report_every=2e-6,
                eps_list=(1e-2, 1e-3, 1e-4), deltas=(0.02, 0.05, 0.1))


def _sweep_runs(quick):
    """Degenerate-sine runs across the default epsilon sweep."""
    p = _sweep_params(quick)
    ic = initials.degenerate_sine()
    u0 = ic.sample(p["n"])

    def build():
        runs = {}
        for eps in p["eps_list"]:
            opts = SolverOptions(scheme=SEMI_IMPLICIT, dt_max=p["dt"],
                                 report_every=p["report_every"])
            runs[eps] = evolve(u0, eps, p["t_end"], opts)
        return runs

    return p, ic, u0, _cached(("sweep", quick), build)


def _conservation_params(quick):
    if quick:
        return dict(n=64, t_end=1e-6, eps=1e-3)
    return dict(n=128, t_end=3e-6, eps=1e-3)


def _conservation_runs(quick):
    """Explicit RK4 sine_cubed runs (eps > 0 and eps = 0)."""
    p = _conservation_params(quick)
    ic = initials.sine_cubed(0.1, 1.0)
    u0 = ic.sample(p["n"])

    def build():
        opts = SolverOptions(scheme=EXPLICIT_RK4, report_every=p["t_end"] / 4)
        return {
            "eps": evolve(u0, p["eps"], p["t_end"], opts),
            "zero": evolve(u0, 0.0, p["t_end"], opts),
        }

    return p, _cached(("conservation", quick), build)


def _longtime_run(quick):
    n = 128 if quick else 256
    ic = initials.sine_cubed(0.1, 1.0)
    u0 = ic.sample(n)

    def build():
        opts = SolverOptions(scheme=SEMI_IMPLICIT, dt_max=1e-6,
                             report_every=5e-5)

        def settled(vals):
            return float(np.max(np.abs(vals - np.mean(vals)))) < 1e-6

        return evolve(u0, 0.0, 1e-2, opts, stop_when=settled)

    return ic, u0, _cached(("longtime", quick), build)


def _all_field_runs(quick):
    """Every cached field trajectory, for suite-wide envelope checks."""
    _, diss = _dissipation_runs(quick)
    _, _, _, sweep = _sweep_runs(quick)
    _, cons = _conservation_runs(quick)
    _, _, longtime = _longtime_run(quick)
    runs = list(diss.values()) + list(sweep.values())
    runs += [cons["eps"], cons["zero"], longtime]
    return runs


# ------------------------------------------------------------------- criteria

def check_equilibrium(quick=False):
    """Constant fields and uniform trains are fixed points of every stepper."""
    n = 64
    grid = make_grid(n, 1.0)
    cval = 1.3
    u = PeriodicField(grid, np.full(n, cval))
    n_steps = 200 if quick else 1000
    worst = 0.0

    for eps in (0.0, 1e-3):
        state = solver.SolverState(0.0, u, eps, 0.0)
        opts = SolverOptions(scheme=EXPLICIT_RK4)
        for _ in range(n_steps):
            state = solver.explicit_step(state, opts)
        worst = max(worst, float(np.max(np.abs(state.u.values - cval))))

        state = solver.SolverState(0.0, u, eps, 0.0)
        for _ in range(n_steps):
            state = solver.semi_implicit_step(state, 1e-6)
        worst = max(worst, float(np.max(np.abs(state.u.values - cval))))

    train = uniform_train(16)
    traj = integrate_steps(train, model=steps.ADL, t_end=1e-4)
    worst_train = float(
        np.max(np.abs(traj.final.positions - train.positions))
    )
    worst = max(worst, worst_train)
    return CheckResult(
        1, "equilibrium exactness", worst <= 1e-12,
        f"sup drift {worst:.2e} over {n_steps} steps (tol 1e-12)",
    )


def check_step_dissipation(quick=False):
    """Perturbed train relaxes with monotone F_N and no collision."""
    n_steps = 32
    train = harness.make_perturbed_train(n_steps, amplitude=0.2, seed=2024)
    a4 = train.step_height**4
    traj = integrate_steps(train, model=steps.ADL, t_end=10.0 * a4)
    f = traj.energy_series
    tol = 1e-10 * (1.0 + np.abs(f[:-1]))
    increases = np.diff(f) - tol
    worst = float(np.max(increases))
    passed = worst <= 0.0
    return CheckResult(
        2, "discrete energy dissipation",
        passed,
        f"max F_N increase-over-tolerance {worst:.2e} across "
        f"{len(f) - 1} accepted steps; no collision",
    )


def _refinement_ratios(values):
    return [values[i] / values[i + 1] for i in range(len(values) - 1)]


def check_first_dissipation(quick=False):
    p, runs = _dissipation_runs(quick)
    r1 = {}
    for dt, (_, reports) in runs.items():
        r1[dt], _ = dissipation_residuals(reports, p["eps"])
    mags = [abs(r1[dt]) for dt in p["dts"]]
    ratios = _refinement_ratios(mags)
    e0 = runs[p["dts"][0]][1][0].E
    finest_ok = mags[-1] <= 1e-4 * e0
    passed = all(r >= 1.5 for r in ratios) and finest_ok
    return CheckResult(
        3, "first dissipation balance",
        passed,
        f"|r1|={['%.2e' % m for m in mags]}, halving ratios "
        f"{['%.2f' % r for r in ratios]} (need >=1.5), finest vs 1e-4*E0="
        f"{1e-4 * e0:.2e}",
    )


def check_second_dissipation(quick=False):
    p, runs = _dissipation_runs(quick)
    r2 = {}
    for dt, (_, reports) in runs.items():
        _, r2[dt] = dissipation_residuals(reports, p["eps"])
    mags = [abs(r2[dt]) for dt in p["dts"]]
    ratios = _refinement_ratios(mags)
    e0 = runs[p["dts"][0]][1][0].E
    finest_ok = mags[-1] <= 1e-4 * e0
    passed = all(r >= 1.5 for r in ratios) and finest_ok
    return CheckResult(
        4, "second dissipation balance",
        passed,
        f"|r2|={['%.2e' % m for m in mags]}, halving ratios "
        f"{['%.2f' % r for r in ratios]} (need >=1.5)",
    )


def check_decay_envelope(quick=False):
    """E(T) <= F(0)/(6T) at every report time of every suite run."""
    worst_margin = math.inf
    count = 0
    for states, reports in _all_field_runs(quick):
        f0 = reports[0].F
        for rep in reports[1:]:
            v = decay_bound_check(rep, f0)
            worst_margin = min(worst_margin, v.margin)
            count += 1
    return CheckResult(
        5, "algebraic decay envelope",
        worst_margin >= 0.0,
        f"min margin {worst_margin:.3e} across {count} report times",
    )


def check_positivity_bound(quick=False):
    p, ic, u0, runs = _sweep_runs(quick)
    e0 = energetics.energy_report(u0, 0.0, 0.0, 0.0).E
    c_m0 = ic.m0 + 1.0
    details = []
    passed = True
    for eps in p["eps_list"]:
        states, _ = runs[eps]
        run_min = min(s.u_min_interval for s in states)
        bound = positivity_lower_bound(e0, c_m0, eps)
        ok = run_min >= bound and states[-1].floor_events == 0
        passed = passed and ok
        details.append(f"eps={eps:g}: min u {run_min:.3e} >= bound {bound:.3e}")
    return CheckResult(6, "positivity lower bound", passed, "; ".join(details))


def check_measure_bound(quick=False):
    p, ic, _, runs = _sweep_runs(quick)
    c_m0 = ic.m0 + 1.0
    passed = True
    worst = -math.inf
    for eps in p["eps_list"]:
        states, _ = runs[eps]
        times = [s.t for s in states]
        fields = [s.u for s in states]
        for delta in p["deltas"]:
            v = small_set_measure(times, fields, delta, c_m0)
            passed = passed and v.satisfied
            worst = max(worst, v.lhs - v.rhs)
    return CheckResult(
        7, "small-set measure bound", passed,
        f"max (measure - bound) = {worst:.3e} over eps x delta grid",
    )


def check_conservation(quick=False):
    p, runs = _conservation_runs(quick)
    _, reports_eps = runs["eps"]
    horizon = reports_eps[-1].t - reports_eps[0].t
    drift_eps = abs(reports_eps[-1].m_reg - reports_eps[0].m_reg) / abs(
        reports_eps[0].m_reg
    )
    rate = drift_eps / horizon
    _, reports_zero = runs["zero"]
    drift_zero = abs(reports_zero[-1].m - reports_zero[0].m) / abs(
        reports_zero[0].m
    )
    passed = rate < 1e-6 and drift_zero < 1e-5
    return CheckResult(
        8, "conserved integrals",
        passed,
        f"regularized drift {rate:.2e}/unit time (tol 1e-6); "
        f"int 1/u drift {drift_zero:.2e} (tol 1e-5)",
    )


def check_longtime(quick=False):
    ic, u0, (states, _) = _longtime_run(quick)
    limit = float(np.mean(states[-1].u.values))
    predicted_grid = steady_state_prediction(u0)
    predicted_exact = 1.0 / ic.m0
    err = max(abs(limit - predicted_grid), abs(limit - predicted_exact))
    settled = float(np.max(np.abs(states[-1].u.values - limit)))
    passed = err <= 1e-4 and settled < 1e-5
    return CheckResult(
        9, "long-time limit",
        passed,
        f"limit {limit:.8f} vs 1/m0 {predicted_exact:.8f} "
        f"(err {err:.2e}, tol 1e-4), stopped at t={states[-1].t:.4g}",
    )


def check_biharmonic_identity(quick=False):
    residuals = {}
    for n in (128, 256):
        grid = make_grid(n, 1.0)
        u = PeriodicField(grid, 1.1 + np.cos(2.0 * np.pi * grid.nodes))
        residuals[n] = biharmonic_identity_residual(u)
    ratio = residuals[128] / residuals[256]
    passed = 3.0 <= ratio <= 5.0
    return CheckResult(
        10, "biharmonic product identity",
        passed,
        f"residual ratio n=128/n=256 is {ratio:.3f} (need within [3, 5])",
    )


def check_min_deviation(quick=False):
    rng = XorShift64Star(11)
    n = 256
    grid = make_grid(n, 1.0)
    h = grid.nodes
    worst_margin = math.inf
    passed = True
    for _ in range(20):
        vals = np.full(n, 1.2)
        for j in range(1, 5):
            theta = 2.0 * math.pi * rng.uniform()
            vals = vals + (0.3 / j**2) * np.cos(2.0 * math.pi * j * h + theta)
        v = min_deviation_check(PeriodicField(grid, vals))
        passed = passed and v.satisfied
        worst_margin = min(worst_margin, v.margin)
    return CheckResult(
        11, "minimum-deviation bound",
        passed,
        f"20 random-phase fields, min margin {worst_margin:.3e}",
    )


def _holder_from_states(states, k=10):
    idx = np.linspace(0, len(states) - 1, k).astype(int)
    snaps = [(states[i].t, states[i].u) for i in idx]
    return holder_modulus(snaps)


def check_holder_stability(quick=False):
    p, runs = _dissipation_runs(quick)
    dt_mid, dt_fine = p["dts"][1], p["dts"][2]
    c_mid = _holder_from_states(runs[dt_mid][0])
    c_fine = _holder_from_states(runs[dt_fine][0])

    n2 = p["n"] * 2
    ic = initials.sine_cubed(0.1, 1.0)

    def build():
        opts = SolverOptions(scheme=SEMI_IMPLICIT, dt_max=dt_mid,
                             report_every=p["t_end"] / 20)
        return evolve(ic.sample(n2), p["eps"], p["t_end"], opts)

    states_n2, _ = _cached(("holder_n2", quick), build)
    c_n2 = _holder_from_states(states_n2)

    ratio_dt = max(c_mid, c_fine) / min(c_mid, c_fine)
    ratio_n = max(c_mid, c_n2) / min(c_mid, c_n2)
    passed = ratio_dt < 2.0 and ratio_n < 2.0
    return CheckResult(
        12, "Hoelder modulus stability",
        passed,
        f"C={c_mid:.4g}; x{ratio_dt:.3f} under dt halving, "
        f"x{ratio_n:.3f} under n doubling (need < 2)",
    )


def _crosscheck_params(quick):
    if quick:
        return dict(ns=(64, 128), t_end=2e-7)
    return dict(ns=(128, 256), t_end=2e-8)


def check_cross_formulation(quick=False):
    p = _crosscheck_params(quick)
    ic = initials.sine_cubed(0.05, 1.0)

    def build():
        return [
            formulations.cross_check_evolution(ic.sample(n), p["t_end"])
            for n in p["ns"]
        ]

    rep1, rep2 = _cached(("crosscheck", quick), build)
    ratio = rep1.u_vs_phi / rep2.u_vs_phi if rep2.u_vs_phi > 0 else math.inf
    drifts = [
        rep.mean_drift_phi for rep in (rep1, rep2)
    ] + [rep.mean_drift_h for rep in (rep1, rep2)] + [
        rep.mean_drift_rho for rep in (rep1, rep2)
    ]
    passed = ratio >= 3.0 and max(drifts) < 1e-8
    return CheckResult(
        13, "cross-formulation equivalence",
        passed,
        f"u-vs-phi discrepancy {rep1.u_vs_phi:.3e} -> {rep2.u_vs_phi:.3e} "
        f"(ratio {ratio:.2f}, need >=3); max mean drift {max(drifts):.2e}",
    )


def _step_vs_pde_params(quick):
    if quick:
        return dict(counts=(16, 32, 64), ref_n=128, t_end=2e-7)
    return dict(counts=(32, 64, 128), ref_n=256, t_end=2e-7)


def check_discrete_to_continuum(quick=False):
    p = _step_vs_pde_params(quick)

    def build():
        cfg = harness.ExperimentConfig(
            kind="step_vs_pde",
            initial={"sine_cubed": {"A": 0.1, "M": 1.0}},
            t_end=p["t_end"],
            step_counts=p["counts"],
            ref_n=p["ref_n"],
        )
        with tempfile.TemporaryDirectory() as tmp:
            cfg.out_dir = str(Path(tmp) / "svp")
            arts = harness.run_experiment(cfg)
            return arts.summary["errors"]

    errors = _cached(("step_vs_pde", quick), build)
    values = [errors[str(c)] for c in p["counts"]]
    passed = all(values[i + 1] < values[i] for i in range(len(values) - 1))
    return CheckResult(
        14, "discrete-to-continuum convergence",
        passed,
        "sup errors " + " -> ".join(f"{v:.3e}" for v in values)
        + " strictly decreasing",
    )


def check_spot_values(quick=False):
    ic = initials.sine_cubed(0.1, 1.0)
    u = ic.sample(256)
    e_val = energetics.energy_report(u, 0.0, 0.0, 0.0).E
    e_exact = (2.0 * math.pi) ** 4 / 1200.0
    e_ok = abs(e_val - e_exact) <= 0.01 * e_exact

    two_step = StepConfiguration(1.0, np.array([0.0, 0.25]))
    f_two = step_energy(two_step)
    f_two_ok = abs(f_two - 10.0 / 9.0) <= 1e-12

    f_uniform = step_energy(uniform_train(8))
    f_uniform_ok = abs(f_uniform - 0.5) <= 1e-12

    passed = e_ok and f_two_ok and f_uniform_ok
    return CheckResult(
        15, "oracle spot values",
        passed,
        f"E={e_val:.6f} vs {e_exact:.6f} (1%); F_two={f_two:.15f} vs 10/9; "
        f"F_uniform={f_uniform:.15f} vs 0.5",
    )


CRITERIA = (
    check_equilibrium,
    check_step_dissipation,
    check_first_dissipation,
    check_second_dissipation,
    check_decay_envelope,
    check_positivity_bound,
    check_measure_bound,
    check_conservation,
    check_longtime,
    check_biharmonic_identity,
    check_min_deviation,
    check_holder_stability,
    check_cross_formulation,
    check_discrete_to_continuum,
    check_spot_values,
)


def run_acceptance(quick=False, verbose=True):
    """Run every criterion; returns the list of CheckResults."""
    results = []
    for fn in CRITERIA:
        result = fn(quick=quick)
        results.append(result)
        if verbose:
            print(result.line())
    return results
