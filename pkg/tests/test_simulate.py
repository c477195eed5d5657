from dataclasses import replace

import numpy as np
import pytest
from conftest import toy_model, toy_params

from lifecycle_childcare.config import ModelParams
from lifecycle_childcare.model import AgeProfileInputs, HouseholdModel
from lifecycle_childcare.params import CalibratedParams, GridSpec, HouseholdType, WITH_CHILD
from lifecycle_childcare.shocks import ShockParams
from lifecycle_childcare.simulate import (
    PROFILE_COLUMNS,
    AgeProfile,
    InfeasibleStateError,
    aggregate_types,
    child_penalty,
    run_counterfactual,
    simulate_distribution,
    simulate_panel,
)
from lifecycle_childcare.solver import solve_lifecycle


def profile_with(**cols):
    n = 5
    base = {c: np.zeros(n) for c in PROFILE_COLUMNS}
    base["age"] = np.arange(30, 30 + n, dtype=float)
    base.update({k: np.asarray(v, dtype=float) for k, v in cols.items()})
    return AgeProfile(base)


def test_mass_conserved(desk_runs):
    for run in desk_runs:
        D = run.result.distributions
        np.testing.assert_allclose(D.sum(axis=(1, 2, 3, 4)), 1.0, rtol=0, atol=1e-10)
        np.testing.assert_allclose(run.result.profile["mass"], 1.0, rtol=0, atol=1e-10)


def test_profiles_respect_24_hours(desk_runs):
    for run in desk_runs:
        p = run.result.profile
        for s in (1, 2):
            total = p[f"market_{s}"] + p[f"housework_{s}"] + p[f"childcare_{s}"] + p[f"leisure_{s}"]
            np.testing.assert_allclose(total, 24.0, rtol=0, atol=1e-8)
        for c in ("prob_birth", "prob_pl", "pl_takeup", "share_with_child"):
            assert np.all((p[c] >= 0) & (p[c] <= 1 + 1e-12))


def test_wife_childcare_peaks_early_and_declines(desk_runs):
    for run in desk_runs:
        p = run.result.profile
        jb = run.model.cal.j_birth
        care = [p.at_age("childcare_2", jb + t) for t in range(19)]
        assert int(np.argmax(care)) <= 2
        assert care[18] < max(care)


def test_single_state_model_reproduces_policy():
    cal = CalibratedParams(j_entry=30, j_birth=30, j_retire=31, j_max=31)
    grids = GridSpec(n_assets=2, n_z=1, n_e=1, n_leisure=2, n_parenting=2, asset_max=1.0)
    zero = ((0.0, 0.0), (0.0, 0.0))
    params = ModelParams(calibrated=cal, grids=grids, shocks=ShockParams(sigma_eps=zero, sigma_e=zero))
    model = HouseholdModel(params, HouseholdType("college", False, 1.0),
                           AgeProfileInputs(np.ones(2), np.ones(2), np.full(2, 0.9)))
    sol = solve_lifecycle(model)
    res = simulate_distribution(sol)
    k = WITH_CHILD if sol.birth[0, 0, 0, 0, 0] else 0
    L, T = model.time_grids(30, k, 2)
    assert res.profile.at_age("leisure_2", 30) == pytest.approx(24 * L[sol.iL2[0, k, 0, 0, 0]])
    assert res.profile.at_age("assets", 31) == model.asset_grid[sol.ia_next[0, k, 0, 0, 0]]


def test_mass_on_infeasible_state_aborts():
    model = toy_model(kappa=(1.0, 1.0))
    sol = solve_lifecycle(model)
    sol.ia_next[0, 0, 0] = -1
    sol.birth[0, 0, 0] = False
    with pytest.raises(InfeasibleStateError, match="age=30"):
        simulate_distribution(sol)


def test_initial_distribution_validated(desk_runs):
    sol = desk_runs[0].solution
    with pytest.raises(ValueError):
        simulate_distribution(sol, initial=np.zeros((21, 9, 9)))


def test_monte_carlo_agrees(desk_runs):
    run = desk_runs[1]
    mc = simulate_panel(run.solution, 20_000, seed=1)
    exact = run.result.profile
    np.testing.assert_allclose(mc["assets"], exact["assets"], rtol=0.05, atol=0.05)
    np.testing.assert_allclose(mc["earn_2"], exact["earn_2"], rtol=0.05, atol=0.01)


def test_aggregate_examples():
    a = profile_with(earn_2=[1, 2, 3, 4, 5])
    b = profile_with(earn_2=[2, 2, 2, 2, 2])
    same = aggregate_types([a, a], [0.5, 0.5])
    np.testing.assert_allclose(same["earn_2"], a["earn_2"])
    first = aggregate_types([a, b, b, b], [1, 0, 0, 0])
    np.testing.assert_array_equal(first["earn_2"], a["earn_2"])
    with pytest.raises(ValueError):
        aggregate_types([a, b], [0.5, 0.25, 0.25])
    with pytest.raises(ValueError):
        aggregate_types([a, b], [0.7, 0.7])


def test_aggregation_is_linear():
    rng = np.random.default_rng(0)
    ps = [profile_with(earn_2=rng.random(5), assets=rng.random(5)) for _ in range(4)]
    qs = [profile_with(earn_2=rng.random(5), assets=rng.random(5)) for _ in range(4)]
    w = [0.1, 0.2, 0.3, 0.4]
    lhs = aggregate_types(ps, w)["earn_2"] - aggregate_types(qs, w)["earn_2"]
    diffs = [profile_with(earn_2=p["earn_2"] - q["earn_2"]) for p, q in zip(ps, qs)]
    np.testing.assert_allclose(lhs, aggregate_types(diffs, w)["earn_2"], atol=1e-15)


def test_child_penalty_examples():
    base = profile_with(earn_2=[1.0, 2.0, 2.0, 1.5, 1.0])
    zero = child_penalty(base, base, 30, horizon=4)
    assert np.all(zero.gap == 0) and zero.defined.all()
    low = profile_with(earn_2=0.6 * base["earn_2"])
    np.testing.assert_allclose(child_penalty(low, base, 30, horizon=4).gap, -0.4, atol=1e-15)
    gappy = profile_with(earn_2=[1.0, 0.0, 2.0, 1.5, 1.0])
    s = child_penalty(base, gappy, 30, horizon=4)
    assert not s.defined[1] and np.isnan(s.gap[1])
    with pytest.raises(ValueError):
        child_penalty(base, base, 30, horizon=10)


def test_profile_csv_round_trip(desk_runs, tmp_path):
    p = desk_runs[0].result.profile
    p.to_csv(tmp_path / "p.csv")
    back = AgeProfile.from_csv(tmp_path / "p.csv")
    assert list(back.columns) == list(PROFILE_COLUMNS)
    for c in PROFILE_COLUMNS:
        np.testing.assert_allclose(back[c], p[c], rtol=0, atol=1e-12)


def test_null_counterfactual_is_identical(desk, tables):
    small = replace(desk, types=(replace(desk.types[3], weight=1.0),))
    res = run_counterfactual(small, tables, {})
    for c in PROFILE_COLUMNS:
        assert np.array_equal(res.baseline[c], res.counterfactual[c])
    for c in PROFILE_COLUMNS[1:]:
        assert np.all(res.difference[c] == 0)
