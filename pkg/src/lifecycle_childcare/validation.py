"""Structural checks on solved and simulated models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .budget import flow_breakdown
from .params import ChoicePoint, StateIndex, flat_state_count
from .simulate import HOURS_PER_DAY, PenaltySeries, TypeRun, state_flows

PAPER_STATE_COUNT = 334_611


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def check_state_count(params) -> CheckResult:
    n = flat_state_count(params.grids, params.calibrated.n_ages)
    return CheckResult("state count per child branch", n == PAPER_STATE_COUNT,
                       f"{n} (expected {PAPER_STATE_COUNT})")


def time_identity_gap(run: TypeRun) -> tuple[float, float]:
    """Worst 24-hour identity error over policy points and profile rows.

    Returns ``(policy_gap, profile_gap)``; the policy gap is the largest
    over-allocation of the day, the profile gap the largest deviation of
    summed average hours from 24.
    """
    sol, model = run.solution, run.model
    cal = model.cal
    worst = 0.0
    for t, j in enumerate(cal.ages):
        f = state_flows(sol, j)
        for s, hw in ((1, cal.hw_hours_1), (2, cal.hw_hours_2)):
            raw = 1.0 - f[f"L{s}"] - f[f"T{s}"] - hw
            gap = np.abs(f[f"L{s}"] + f[f"T{s}"] + hw + f[f"market_{s}"] - 1.0)
            over = np.maximum(-raw, 0.0)
            worst = max(worst, float(np.max(np.where(f["valid"], np.maximum(gap, over), 0.0))))
    prof = run.result.profile
    pgap = 0.0
    for s in (1, 2):
        total = prof[f"market_{s}"] + prof[f"housework_{s}"] + prof[f"childcare_{s}"] + prof[f"leisure_{s}"]
        pgap = max(pgap, float(np.max(np.abs(total - HOURS_PER_DAY))))
    return worst, pgap


def budget_identity_gap(run: TypeRun, mass_floor: float = 0.0) -> tuple[float, int]:
    """Largest budget-identity error over simulated flows with positive mass.

    Each state's flows are rebuilt from scratch by :func:`budget.flow_breakdown`
    and compared with the vectorized flows used by the simulator.
    Returns ``(worst_gap, n_checked)``.
    """
    sol, model = run.solution, run.model
    cal = model.cal
    dists = run.result.distributions
    worst, n = 0.0, 0
    for t, j in enumerate(cal.ages):
        f = state_flows(sol, j)
        D = dists[t]
        for k, ia, iz, ie in np.argwhere(D > mass_floor):
            idx = (t, k, ia, iz, ie)
            choice = ChoicePoint(int(sol.iL1[idx]), int(sol.iL2[idx]), int(sol.iT1[idx]),
                                 int(sol.iT2[idx]), int(sol.ia_next[idx]), False, bool(sol.pl[idx]))
            flows = flow_breakdown(StateIndex(int(j), int(k), int(ia), int(iz), int(ie)), choice, model)
            if flows is None:
                return float("inf"), n
            g = abs(flows.identity_gap(cal.r))
            g = max(g, abs(flows.consumption - f["consumption"][k, ia, iz, ie]))
            worst = max(worst, g)
            n += 1
    return worst, n


def monotonicity_share(run: TypeRun) -> float:
    """Share of (age, k, z, e) slices whose value is weakly increasing in assets."""
    sol = run.solution
    V = sol.value
    valid = sol.valid_mask()[:, :, 0]
    d = np.diff(V, axis=2)
    ok = np.all((d >= 0) | np.isnan(d) | (np.isneginf(V[:, :, :-1])), axis=2)
    return float(np.mean(ok[valid]))


def mass_gap(run: TypeRun) -> float:
    D = run.result.distributions
    return float(np.max(np.abs(D.sum(axis=(1, 2, 3, 4)) - 1.0)))


def run_checks(runs, params, include_state_count: bool = False) -> list[CheckResult]:
    out = []
    if include_state_count:
        out.append(check_state_count(params))
    for run in runs:
        name = run.model.htype.name
        pol, prof = time_identity_gap(run)
        out.append(CheckResult(f"{name}: time identity at policy points", pol <= 1e-10, f"max gap {pol:.2e}"))
        out.append(CheckResult(f"{name}: 24-hour identity in profile", prof <= 1e-8, f"max gap {prof:.2e}"))
        gap, n = budget_identity_gap(run)
        out.append(CheckResult(f"{name}: budget identity on simulated flows", gap <= 1e-10,
                               f"max gap {gap:.2e} over {n} flows"))
        share = monotonicity_share(run)
        out.append(CheckResult(f"{name}: value weakly increasing in assets", share == 1.0,
                               f"{share:.2%} of slices"))
        mg = mass_gap(run)
        out.append(CheckResult(f"{name}: mass conservation", mg <= 1e-10, f"max gap {mg:.2e}"))
        dom = run.solution.birth_dominance_share()
        out.append(CheckResult(f"{name}: with-child value dominates at birth age", dom >= 0.5,
                               f"{dom:.1%} of states (diagnostic target 95%)"))
    return out


def compare_penalty(model_series: PenaltySeries, empirical) -> list[str]:
    """Side-by-side lines of model and empirical earnings gaps."""
    lines = ["event_time  model_gap  empirical_gap"]
    for t, g, ok in zip(model_series.event_time, model_series.gap, model_series.defined):
        emp = float(empirical.at("gap", [t])[0]) if t <= empirical.keys[-1] else float("nan")
        lines.append(f"{int(t):>10d}  {g if ok else float('nan'):>9.4f}  {emp:>13.4f}")
    return lines

