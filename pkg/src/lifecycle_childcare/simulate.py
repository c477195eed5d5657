"""Distribution push-forward through solved policies and derived profiles.

The population measure over ``(child state, asset, z-pair, e-pair)`` is
iterated age by age: households act on their policies, move to their chosen
asset point, then draw the persistent and transitory shocks.  The measure is
not thinned by mortality; ``cohort_share`` carries the survivors' share for
cohort-weighted reporting.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import TableSet, type_inputs
from .config import ModelParams, apply_overrides
from .model import HouseholdModel
from .params import CHILDLESS, N_CHILD_STATES, WITH_CHILD
from .solver import Solution, solve_lifecycle

log = logging.getLogger(__name__)

HOURS_PER_DAY = 24.0

PROFILE_COLUMNS = (
    "age", "mass", "prob_birth", "prob_pl", "pl_takeup", "share_with_child",
    "market_1", "housework_1", "childcare_1", "leisure_1",
    "market_2", "housework_2", "childcare_2", "leisure_2",
    "earn_1", "earn_2", "earn_hh", "pl_income", "nursery_cost", "pension",
    "consumption", "assets", "cohort_share",
)


class InfeasibleStateError(RuntimeError):
    pass


@dataclass
class AgeProfile:
    """Population averages by age; hours are per day, money per year."""

    columns: dict[str, np.ndarray]
    label: str = ""

    def __post_init__(self):
        missing = [c for c in PROFILE_COLUMNS if c not in self.columns]
        if missing:
            raise ValueError(f"profile lacks columns {missing}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def ages(self) -> np.ndarray:
        return self.columns["age"]

    def at_age(self, name: str, age: int) -> float:
        return float(self.columns[name][int(age - self.ages[0])])

    def to_csv(self, path) -> None:
        _write_columns(path, PROFILE_COLUMNS, self.columns)

    @classmethod
    def from_csv(cls, path, label: str = "") -> "AgeProfile":
        return cls(_read_columns(path), label=label)


@dataclass
class PenaltySeries:
    event_time: np.ndarray
    gap: np.ndarray
    defined: np.ndarray

    def to_csv(self, path) -> None:
        cols = {"event_time": self.event_time, "gap": self.gap, "defined": self.defined.astype(float)}
        _write_columns(path, ("event_time", "gap", "defined"), cols)

    def trough(self) -> tuple[int, float]:
        g = np.where(self.defined, self.gap, np.inf)
        i = int(np.argmin(g))
        return int(self.event_time[i]), float(self.gap[i])


def _write_columns(path, names, cols) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        n = len(cols[names[0]])
        for i in range(n):
            w.writerow([repr(float(cols[c][i])) for c in names])


def _read_columns(path) -> dict[str, np.ndarray]:
    with open(Path(path), encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in r] for r in reader if r]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {h: data[:, i].copy() for i, h in enumerate(header)}


def state_flows(solution: Solution, j: int) -> dict[str, np.ndarray]:
    """Chosen times and cash flows at every state of age ``j``.

    Arrays have shape ``(2, n_assets, n_zz, n_ee)``; ``valid`` marks states
    that exist and have a feasible policy.  At the birth age the childless
    branch reports the choices of households that stay childless.
    """
    model = solution.model
    cal = model.cal
    t = j - cal.j_entry
    nA, nZ, nE = len(model.asset_grid), model.chain.n, model.iid.n
    shape = (N_CHILD_STATES, nA, nZ, nE)
    out = {name: np.zeros(shape) for name in (
        "L1", "L2", "T1", "T2", "market_1", "market_2", "earn_1", "earn_2", "pl_income",
        "nursery_cost", "pension", "consumption", "assets", "assets_next")}
    out["valid"] = np.zeros(shape, dtype=bool)
    out["pl"] = np.zeros(shape, dtype=bool)
    retired = j >= cal.j_retire
    a = model.asset_grid[:, None, None]
    for k in (CHILDLESS, WITH_CHILD):
        if k == WITH_CHILD and j < cal.j_birth:
            continue
        ia_next = solution.ia_next[t, k].astype(int)
        valid = ia_next >= 0
        L1g, T1g = model.time_grids(j, k, 1)
        L2g, T2g = model.time_grids(j, k, 2)
        pick = lambda grid, idx: grid[np.where(valid, idx, 0)]
        L1, T1 = pick(L1g, solution.iL1[t, k]), pick(T1g, solution.iT1[t, k])
        L2, T2 = pick(L2g, solution.iL2[t, k]), pick(T2g, solution.iT2[t, k])
        m1 = np.maximum(1.0 - L1 - T1 - cal.hw_hours_1, 0.0)
        m2 = np.maximum(1.0 - L2 - T2 - cal.hw_hours_2, 0.0)
        a_next = model.asset_grid[np.where(valid, ia_next, 0)]
        pl = solution.pl[t, k] & valid
        aa = np.broadcast_to(a, valid.shape)
        if retired:
            zero = np.zeros(valid.shape)
            earn1 = earn2 = ben = fee = zero
            pen = np.full(valid.shape, model.pension)
            c = (1 + cal.r) * aa + pen - a_next
        else:
            scale = cal.wage * (1.0 - cal.tax)
            z, e = model.z_nodes, model.e_nodes
            x1 = np.exp(z[:, 0][:, None] + e[:, 0][None, :])[None]
            x2 = np.exp(z[:, 1][:, None] + e[:, 1][None, :])[None]
            earn1 = scale * model.kappa(j, 1) * x1 * m1
            gross2 = scale * model.kappa(j, 2) * x2
            earn2 = gross2 * m2
            hours = (cal.h_ref - cal.hw_hours_2) if cal.pl_mode == "leave" else m2
            ben = np.where(pl, cal.rr_pl * gross2 * hours, 0.0)
            j_c = model.child_age(j, k)
            fee_on = (model.htype.uses_nursery and j_c is not None
                      and cal.nursery_min_childage <= j_c <= cal.nursery_max_childage)
            fee = cal.fee_rate * earn2 if fee_on else np.zeros(valid.shape)
            pen = np.zeros(valid.shape)
            c = (1 + cal.r) * aa + earn1 + earn2 + ben - fee - a_next
        for name, arr in (("L1", L1), ("L2", L2), ("T1", T1), ("T2", T2), ("market_1", m1),
                          ("market_2", m2), ("earn_1", earn1), ("earn_2", earn2),
                          ("pl_income", ben), ("nursery_cost", fee), ("pension", pen),
                          ("consumption", c), ("assets", aa), ("assets_next", a_next)):
            out[name][k] = np.where(valid, arr, 0.0)
        out["valid"][k] = valid
        out["pl"][k] = pl
    return out


def initial_distribution(model: HouseholdModel) -> np.ndarray:
    """All mass childless at zero assets, shocks at their stationary laws."""
    nA = len(model.asset_grid)
    D = np.zeros((N_CHILD_STATES, nA, model.chain.n, model.iid.n))
    D[CHILDLESS, 0] = np.outer(model.chain.stationary, model.iid.probs)
    return D


@dataclass
class SimulationResult:
    profile: AgeProfile
    distributions: np.ndarray  # (ages, 2, n_assets, n_zz, n_ee) at the start of each age
    top_asset_share: float = 0.0
    warnings: list[str] = field(default_factory=list)


def simulate_distribution(solution: Solution, initial: np.ndarray | None = None) -> SimulationResult:
    """Push the population measure forward and average chosen quantities by age."""
    model = solution.model
    cal = model.cal
    P, pe = model.chain.transition, model.iid.probs
    nA = len(model.asset_grid)
    D = initial_distribution(model) if initial is None else np.array(initial, dtype=float)
    if D.ndim == 3:
        full = np.zeros((N_CHILD_STATES, *D.shape))
        full[CHILDLESS] = D
        D = full
    if abs(D.sum() - 1.0) > 1e-10 or np.any(D < 0):
        raise ValueError("initial distribution must be nonnegative and sum to one")

    n = cal.n_ages
    cols = {c: np.zeros(n) for c in PROFILE_COLUMNS}
    cols["age"] = cal.ages.astype(float)
    dists = np.zeros((n, *D.shape))
    cohort = 1.0
    top_share = 0.0
    warnings = []
    for t, j in enumerate(cal.ages):
        if j == cal.j_birth:
            b = solution.birth[t, CHILDLESS]
            movers = D[CHILDLESS] * b
            cols["prob_birth"][t] = movers.sum()
            D[WITH_CHILD] += movers
            D[CHILDLESS] = D[CHILDLESS] * ~b
        dists[t] = D
        f = state_flows(solution, j)
        bad = (D > 0) & ~f["valid"]
        if np.any(bad):
            k, ia, iz, ie = (int(v) for v in np.argwhere(bad)[0])
            raise InfeasibleStateError(
                f"type {model.htype.name}: mass {D[k, ia, iz, ie]:.3g} reaches state without a "
                f"feasible choice (age={j}, k={k}, ia={ia}, iz={iz}, ie={ie})")
        mass = D.sum()
        cols["mass"][t] = mass
        cols["cohort_share"][t] = cohort
        cohort *= model.survival(j)
        w = D / mass
        avg = lambda arr: float(np.sum(w * arr))
        cols["share_with_child"][t] = float(w[WITH_CHILD].sum())
        cols["prob_pl"][t] = avg(f["pl"])
        j_c = model.child_age(j, WITH_CHILD) if j >= cal.j_birth else None
        eligible_mass = float(w[WITH_CHILD].sum()) if (j_c is not None and j_c < cal.pl_max_childage) else 0.0
        cols["pl_takeup"][t] = cols["prob_pl"][t] / eligible_mass if eligible_mass > 0 else 0.0
        for s, hw in ((1, cal.hw_hours_1), (2, cal.hw_hours_2)):
            cols[f"market_{s}"][t] = HOURS_PER_DAY * avg(f[f"market_{s}"])
            cols[f"housework_{s}"][t] = HOURS_PER_DAY * hw
            cols[f"childcare_{s}"][t] = HOURS_PER_DAY * avg(f[f"T{s}"])
            cols[f"leisure_{s}"][t] = HOURS_PER_DAY * avg(f[f"L{s}"])
        cols["earn_1"][t] = avg(f["earn_1"])
        cols["earn_2"][t] = avg(f["earn_2"])
        cols["pl_income"][t] = avg(f["pl_income"])
        cols["earn_hh"][t] = cols["earn_1"][t] + cols["earn_2"][t] + cols["pl_income"][t]
        cols["nursery_cost"][t] = avg(f["nursery_cost"])
        cols["pension"][t] = avg(f["pension"])
        cols["consumption"][t] = avg(f["consumption"])
        cols["assets"][t] = avg(f["assets"])

        if j == cal.j_max:
            break
        ia_next = solution.ia_next[t].astype(int)
        top_share = max(top_share, float(D[ia_next == nA - 1].sum()) / mass)
        # move to chosen assets, then draw next shocks
        M = np.zeros((N_CHILD_STATES, nA, P.shape[0]))
        kk, ia, iz, ie = np.nonzero(D)
        np.add.at(M, (kk, ia_next[kk, ia, iz, ie], iz), D[kk, ia, iz, ie])
        D = np.einsum("kaz,zy,e->kaye", M, P, pe)

    if top_share > 0.01:
        msg = f"type {model.htype.name}: {top_share:.1%} of mass chooses the top asset point; raise asset_max"
        log.warning(msg)
        warnings.append(msg)
    label = model.htype.name
    return SimulationResult(AgeProfile(cols, label=label), dists, top_share, warnings)


def aggregate_types(profiles, weights) -> AgeProfile:
    """Entrywise convex combination of per-type profiles (age column kept)."""
    profiles = list(profiles)
    w = np.asarray(weights, dtype=float)
    if len(w) != len(profiles):
        raise ValueError(f"{len(profiles)} profiles but {len(w)} weights")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to one")
    ages = profiles[0].ages
    for p in profiles[1:]:
        if not np.array_equal(p.ages, ages):
            raise ValueError("profiles cover different ages")
    cols = {"age": ages.copy()}
    for c in PROFILE_COLUMNS[1:]:
        acc = np.zeros_like(ages, dtype=float)
        for wi, p in zip(w, profiles):
            acc = acc + wi * p[c]
        cols[c] = acc
    return AgeProfile(cols, label="aggregate")


def child_penalty(with_child: AgeProfile, childless: AgeProfile, j_birth: int, horizon: int = 10,
                  column: str = "earn_2") -> PenaltySeries:
    """Relative gap in wife earnings by years since birth.

    Points where the childless earnings are zero are undefined (``defined`` is
    False and ``gap`` is NaN).
    """
    ev = np.arange(horizon + 1)
    ages = j_birth + ev
    for p in (with_child, childless):
        if ages[0] < p.ages[0] or ages[-1] > p.ages[-1]:
            raise ValueError(f"profile {p.label!r} does not cover ages {ages[0]}..{ages[-1]}")
    yc = np.array([with_child.at_age(column, a) for a in ages])
    y0 = np.array([childless.at_age(column, a) for a in ages])
    defined = y0 != 0
    gap = np.full(len(ev), np.nan)
    gap[defined] = (yc[defined] - y0[defined]) / y0[defined]
    if not defined.all():
        log.warning("child penalty undefined at event times %s (zero childless earnings)",
                    ev[~defined].tolist())
    return PenaltySeries(ev, gap, defined)


# ---------------------------------------------------------------- pipelines


@dataclass
class TypeRun:
    model: HouseholdModel
    solution: Solution
    result: SimulationResult


def run_types(params: ModelParams, tables: TableSet, birth_mode: str = "choice",
              workers: int = 1) -> list[TypeRun]:
    runs = []
    for ht in params.types:
        model = HouseholdModel(params, ht, type_inputs(tables, ht, params.calibrated, params.survival_mode))
        sol = solve_lifecycle(model, birth_mode=birth_mode, workers=workers)
        runs.append(TypeRun(model, sol, simulate_distribution(sol)))
    return runs


def aggregate_runs(runs, params: ModelParams) -> AgeProfile:
    return aggregate_types([r.result.profile for r in runs], [t.weight for t in params.types])


def penalty_for_params(params: ModelParams, tables: TableSet, horizon: int = 10,
                       workers: int = 1) -> PenaltySeries:
    """Child penalty from forced-birth versus never-birth solves of every type."""
    with_child = aggregate_runs(run_types(params, tables, "always", workers), params)
    childless = aggregate_runs(run_types(params, tables, "never", workers), params)
    return child_penalty(with_child, childless, params.calibrated.j_birth, horizon)


@dataclass
class CounterfactualResult:
    name: str
    baseline: AgeProfile
    counterfactual: AgeProfile

    @property
    def difference(self) -> AgeProfile:
        cols = {"age": self.baseline.ages.copy()}
        for c in PROFILE_COLUMNS[1:]:
            cols[c] = self.counterfactual[c] - self.baseline[c]
        return AgeProfile(cols, label=f"{self.name}_difference")

    def write(self, directory) -> dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        out = {}
        for tag, prof in (("baseline", self.baseline), ("counterfactual", self.counterfactual),
                          ("difference", self.difference)):
            path = directory / f"{self.name}_{tag}.csv"
            prof.to_csv(path)
            out[tag] = path
        return out


# override pairs (baseline, counterfactual) of each named experiment
COUNTERFACTUALS = {
    "college_vs_highschool": ({"types.education": "highschool"}, {"types.education": "college"}),
    "nursery_vs_not": ({"types.education": "college", "types.nursery": "no"},
                       {"types.education": "college", "types.nursery": "yes"}),
    "rr75": ({}, {"calibrated.rr_pl": "0.75"}),
    "wage10": ({}, {"calibrated.wage": "1.1"}),
}


def run_counterfactual(params: ModelParams, tables: TableSet, override: dict,
                       base_override: dict | None = None, name: str = "counterfactual",
                       workers: int = 1) -> CounterfactualResult:
    """Re-solve and re-simulate under ``override`` and pair it with the baseline."""
    base_override = dict(base_override or {})
    base = apply_overrides(params, base_override)
    alt = apply_overrides(params, {**base_override, **override})
    baseline = aggregate_runs(run_types(base, tables, workers=workers), base)
    counter = aggregate_runs(run_types(alt, tables, workers=workers), alt)
    return CounterfactualResult(name, baseline, counter)


def named_counterfactual(name: str, params: ModelParams, tables: TableSet, workers: int = 1) -> CounterfactualResult:
    if name not in COUNTERFACTUALS:
        raise KeyError(f"unknown counterfactual {name!r}; choose from {sorted(COUNTERFACTUALS)}")
    base, alt = COUNTERFACTUALS[name]
    # the alternative replaces the type filter rather than stacking on the baseline's
    base_params = apply_overrides(params, base)
    alt_params = apply_overrides(params, alt)
    baseline = aggregate_runs(run_types(base_params, tables, workers=workers), base_params)
    counter = aggregate_runs(run_types(alt_params, tables, workers=workers), alt_params)
    return CounterfactualResult(name, baseline, counter)


def simulate_panel(solution: Solution, n_households: int, seed: int = 0) -> dict[str, np.ndarray]:
    """Monte Carlo household paths; age means of assets, wife earnings and PL.

    A cross-check of :func:`simulate_distribution` only.
    """
    model = solution.model
    cal = model.cal
    rng = np.random.default_rng(seed)
    nZ, nE = model.chain.n, model.iid.n
    cumP = np.cumsum(model.chain.transition, axis=1)
    iz = np.searchsorted(np.cumsum(model.chain.stationary), rng.random(n_households), side="right")
    iz = np.minimum(iz, nZ - 1)
    cum_e = np.cumsum(model.iid.probs)
    ie = np.minimum(np.searchsorted(cum_e, rng.random(n_households), side="right"), nE - 1)
    ia = np.zeros(n_households, dtype=int)
    k = np.zeros(n_households, dtype=int)
    n = cal.n_ages
    out = {"assets": np.zeros(n), "earn_2": np.zeros(n), "prob_pl": np.zeros(n)}
    for t, j in enumerate(cal.ages):
        if j == cal.j_birth:
            k = np.where(solution.birth[t, CHILDLESS, ia, iz, ie], WITH_CHILD, k)
        f = state_flows(solution, j)
        out["assets"][t] = model.asset_grid[ia].mean()
        out["earn_2"][t] = f["earn_2"][k, ia, iz, ie].mean()
        out["prob_pl"][t] = f["pl"][k, ia, iz, ie].mean()
        if j == cal.j_max:
            break
        ia = solution.ia_next[t, k, ia, iz, ie].astype(int)
        u = rng.random(n_households)
        iz = np.minimum((u[:, None] > cumP[iz]).sum(axis=1), nZ - 1)
        ie = np.minimum(np.searchsorted(cum_e, rng.random(n_households), side="right"), nE - 1)
    return out
