"""Method-of-moments estimation of the preference parameters.

Moments are the wife's daily hours of work, leisure and childcare at each
age from ``j_entry`` to ``j_retire - 1``, aggregated over household types.
Residuals are weighted by reciprocal category hours and the objective is
their sum of squares.  Minimization uses a bounded Nelder-Mead simplex.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ModelParams
from .data import AgeTable, TableSet
from .params import EstimatedParams
from .simulate import AgeProfile, InfeasibleStateError, aggregate_runs, run_types

log = logging.getLogger(__name__)

CATEGORIES = ("work", "leisure", "childcare")
CATEGORY_WEIGHTS = {"work": 1.0 / 8.0, "leisure": 1.0 / 12.0, "childcare": 1.0 / 4.0}

# objective returned when a parameter vector cannot be solved or simulated
INFEASIBLE_OBJECTIVE = 1e10


@dataclass(frozen=True)
class MomentSet:
    ages: np.ndarray
    category: tuple[str, ...]
    model: np.ndarray
    data: np.ndarray
    weight: np.ndarray

    def __len__(self) -> int:
        return len(self.model)

    @property
    def residuals(self) -> np.ndarray:
        return self.model - self.data

    @property
    def weighted(self) -> np.ndarray:
        return self.weight * self.residuals

    def objective(self) -> float:
        return float(np.sum(self.weighted**2))

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["age", "category", "model", "data", "weight", "residual"])
            for i in range(len(self)):
                w.writerow([int(self.ages[i]), self.category[i], repr(float(self.model[i])),
                            repr(float(self.data[i])), repr(float(self.weight[i])),
                            repr(float(self.residuals[i]))])


def model_category_hours(profile: AgeProfile, work_measure: str = "total") -> dict[str, np.ndarray]:
    """Wife's hours per day in the three data categories."""
    work = profile["market_2"] + (profile["housework_2"] if work_measure == "total" else 0.0)
    return {"work": work, "leisure": profile["leisure_2"], "childcare": profile["childcare_2"]}


def compute_moments(profile: AgeProfile, data: AgeTable, ages, work_measure: str = "total",
                    moment_mode: str = "age") -> MomentSet:
    """Model-minus-data rows with category weights.

    ``moment_mode="age"`` gives one row per age and category; ``"mean"`` gives
    three rows of age-averaged hours.
    """
    ages = np.asarray(ages)
    missing = sorted(set(ages.tolist()) - set(data.keys.tolist()))
    if missing:
        raise ValueError(f"time-use data lack ages {missing}")
    model = model_category_hours(profile, work_measure)
    p_idx = ages - int(profile.ages[0])
    d_idx = ages - int(data.keys[0])
    rows_age, rows_cat, rows_m, rows_d, rows_w = [], [], [], [], []
    for cat in CATEGORIES:
        m = model[cat][p_idx]
        d = data[cat][d_idx]
        if moment_mode == "mean":
            rows_age.append(ages[0]), rows_cat.append(cat)
            rows_m.append(m.mean()), rows_d.append(d.mean()), rows_w.append(CATEGORY_WEIGHTS[cat])
        else:
            rows_age.extend(ages.tolist()), rows_cat.extend([cat] * len(ages))
            rows_m.extend(m.tolist()), rows_d.extend(d.tolist())
            rows_w.extend([CATEGORY_WEIGHTS[cat]] * len(ages))
    return MomentSet(np.array(rows_age), tuple(rows_cat), np.array(rows_m, dtype=float),
                     np.array(rows_d, dtype=float), np.array(rows_w))


def moment_ages(params: ModelParams) -> np.ndarray:
    cal = params.calibrated
    return np.arange(cal.j_entry, cal.j_retire)


def model_profile(params: ModelParams, tables: TableSet, workers: int = 1) -> AgeProfile:
    return aggregate_runs(run_types(params, tables, workers=workers), params)


def synthetic_timeuse(profile: AgeProfile, ages, work_measure: str = "total") -> AgeTable:
    """Time-use table equal to a model profile, for self-recovery checks."""
    ages = np.asarray(ages)
    hours = model_category_hours(profile, work_measure)
    idx = ages - int(profile.ages[0])
    return AgeTable("age", ages.copy(), {c: hours[c][idx].copy() for c in CATEGORIES})


@dataclass
class ObjectiveFunction:
    """GMM objective over the 14-vector; keeps a log of every evaluation."""

    params: ModelParams
    tables: TableSet
    data: AgeTable
    workers: int = 1
    history: list[tuple[np.ndarray, float]] = field(default_factory=list)

    def moments(self, theta) -> MomentSet:
        est = theta if isinstance(theta, EstimatedParams) else EstimatedParams.from_vector(theta)
        params = self.params.with_estimated(est)
        prof = model_profile(params, self.tables, self.workers)
        return compute_moments(prof, self.data, moment_ages(params),
                               params.work_measure, params.moment_mode)

    def __call__(self, theta) -> float:
        vec = theta.to_vector() if isinstance(theta, EstimatedParams) else np.asarray(theta, float)
        try:
            value = self.moments(vec).objective()
        except (InfeasibleStateError, ValueError, FloatingPointError) as exc:
            log.info("objective infeasible at %s: %s", vec, exc)
            value = INFEASIBLE_OBJECTIVE
        if not math.isfinite(value):
            value = INFEASIBLE_OBJECTIVE
        self.history.append((vec.copy(), value))
        return value

    def write_log(self, path) -> None:
        names = EstimatedParams.names()
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["evaluation", *names, "objective"])
            for i, (vec, val) in enumerate(self.history):
                w.writerow([i, *(repr(float(v)) for v in vec), repr(float(val))])


def gmm_objective(theta, params: ModelParams, tables: TableSet, data: AgeTable, workers: int = 1) -> float:
    return ObjectiveFunction(params, tables, data, workers)(theta)


# ------------------------------------------------------------- Nelder-Mead


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    n_evals: int
    converged: bool


def reflect_into_bounds(x, lo, hi) -> np.ndarray:
    """Mirror coordinates that leave ``[lo, hi]`` back inside."""
    x = np.array(x, dtype=float)
    for _ in range(4):
        below, above = x < lo, x > hi
        if not (below.any() or above.any()):
            break
        x = np.where(below, 2 * lo - x, x)
        x = np.where(above, 2 * hi - x, x)
    return np.clip(x, lo, hi)


def nelder_mead(f, x0, lo, hi, step=0.1, xatol=1e-4, max_evals=1000, max_iter=None,
                adaptive=True, stall_evals=None) -> SimplexResult:
    """Bounded Nelder-Mead minimization.

    Trial points outside ``[lo, hi]`` are reflected back in.  The initial
    simplex steps ``step`` along each axis; a negative step points it the
    other way.  Converged when
    the largest coordinate distance from the best vertex is below ``xatol``.
    With ``adaptive`` the expansion, contraction and shrink coefficients
    depend on the dimension, which helps beyond a handful of parameters.
    ``stall_evals`` stops the search (unconverged) once that many evaluations
    pass without improving the best vertex.
    """
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    if adaptive:
        alpha, gamma, rho, sigma = 1.0, 1.0 + 2.0 / n, 0.75 - 1.0 / (2.0 * n), 1.0 - 1.0 / n
    else:
        alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    n_evals = 0
    best, last_gain = np.inf, 0

    def fx(x):
        nonlocal n_evals, best, last_gain
        n_evals += 1
        val = f(x)
        if val < best:
            best, last_gain = val, n_evals
        return val

    x0 = reflect_into_bounds(x0, lo, hi)
    fun0 = fx(x0)
    if max_iter == 0 or max_evals <= 1:
        return SimplexResult(x0, fun0, 0, n_evals, False)
    sim = [x0]
    for i in range(n):
        v = x0.copy()
        v[i] += step if lo[i] <= x0[i] + step <= hi[i] else -step
        sim.append(reflect_into_bounds(v, lo, hi))
    sim = np.array(sim)
    fs = np.array([fun0] + [fx(v) for v in sim[1:]])

    it = 0
    converged = False
    while True:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if np.max(np.abs(sim[1:] - sim[0])) < xatol:
            converged = True
            break
        if n_evals >= max_evals or (max_iter is not None and it >= max_iter):
            break
        if stall_evals is not None and n_evals - last_gain >= stall_evals:
            break
        it += 1
        centroid = sim[:-1].mean(axis=0)
        xr = reflect_into_bounds(centroid + alpha * (centroid - sim[-1]), lo, hi)
        fr = fx(xr)
        if fr < fs[0]:
            xe = reflect_into_bounds(centroid + gamma * (xr - centroid), lo, hi)
            fe = fx(xe)
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = reflect_into_bounds(centroid + rho * (xr - centroid), lo, hi)
            fc = fx(xc)
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = reflect_into_bounds(centroid + rho * (sim[-1] - centroid), lo, hi)
            fc = fx(xc)
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        for i in range(1, n + 1):
            sim[i] = reflect_into_bounds(sim[0] + sigma * (sim[i] - sim[0]), lo, hi)
            fs[i] = fx(sim[i])
    return SimplexResult(sim[0].copy(), float(fs[0]), it, n_evals, converged)


@dataclass
class EstimationResult:
    theta_hat: EstimatedParams
    objective_value: float
    iterations: int
    n_evals: int
    converged: bool
    moments: MomentSet | None

    @property
    def residuals(self) -> np.ndarray | None:
        return None if self.moments is None else self.moments.residuals

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["name", "value"])
            for name, v in zip(EstimatedParams.names(), self.theta_hat.to_vector()):
                w.writerow([name, repr(float(v))])
            w.writerow(["objective", repr(self.objective_value)])
            w.writerow(["iterations", self.iterations])
            w.writerow(["evaluations", self.n_evals])
            w.writerow(["converged", int(self.converged)])


def parameter_scale(theta0: EstimatedParams) -> np.ndarray:
    """Per-parameter units for the simplex: magnitudes of the start, at least 0.1."""
    return np.maximum(np.abs(theta0.to_vector()), 0.1)


def restart_step(step: float, r: int) -> float:
    """Simplex step of restart ``r``: alternating direction, halving every second restart.

    ``step, -step/2, step/2, -step/4, ...`` so successive simplices probe the
    other side of the best point and finer scales.
    """
    return step * (-1) ** r * 0.5 ** ((r + 1) // 2) if r else step


def estimate(theta0: EstimatedParams, params: ModelParams, tables: TableSet, data: AgeTable,
             max_evals: int = 1000, max_iter: int | None = None, xatol: float = 1e-4,
             step: float = 0.1, log_path=None, workers: int = 1, restarts: int = 8,
             stall_evals: int | None = 150) -> EstimationResult:
    """Minimize the GMM objective from ``theta0``.

    The simplex works on parameters divided by :func:`parameter_scale`, so
    ``step`` and ``xatol`` are relative to the start's magnitudes.  Policies
    live on grids, so the objective is piecewise constant and a simplex can
    collapse on a plateau; a search that stalls for ``stall_evals``
    evaluations or converges is restarted from the best point so far, up to
    ``restarts`` times, with simplices from :func:`restart_step`.
    Non-convergence is reported in the result, not raised.
    """
    lo, hi = EstimatedParams.bounds()
    vec0 = theta0.to_vector()
    if np.any(vec0 <= lo) or np.any(vec0 >= hi):
        raise ValueError("theta0 lies outside the parameter bounds")
    scale = parameter_scale(theta0)
    obj = ObjectiveFunction(params, tables, data, workers)
    # stay strictly inside the open box
    margin = 1e-9 * (hi - lo)
    f = lambda u: obj(u * scale)
    bounds = ((lo + margin) / scale, (hi - margin) / scale)
    res = nelder_mead(f, vec0 / scale, *bounds, step=step, xatol=xatol, max_evals=max_evals,
                      max_iter=max_iter, stall_evals=stall_evals)
    evals, iters = res.n_evals, res.iterations
    for r in range(1, restarts + 1 if max_iter != 0 else 1):
        if evals >= max_evals or res.fun == 0.0:
            break
        again = nelder_mead(f, res.x, *bounds, step=restart_step(step, r), xatol=xatol,
                            max_evals=max_evals - evals, max_iter=max_iter, stall_evals=stall_evals)
        evals, iters = evals + again.n_evals, iters + again.iterations
        if again.fun < res.fun:
            res = again
    res = SimplexResult(res.x, res.fun, iters, evals, res.converged)
    theta_hat = EstimatedParams.from_vector(res.x * scale)
    if log_path is not None:
        obj.write_log(Path(log_path))
    try:
        moments = obj.moments(theta_hat)
    except (InfeasibleStateError, ValueError):
        moments = None
    return EstimationResult(theta_hat, res.fun, res.iterations, res.n_evals, res.converged, moments)
