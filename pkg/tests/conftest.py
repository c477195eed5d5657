import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lifecycle_childcare.config import ModelParams, desk_params
from lifecycle_childcare.data import synth_defaults, type_inputs
from lifecycle_childcare.model import AgeProfileInputs, HouseholdModel
from lifecycle_childcare.params import CalibratedParams, Education, GridSpec, HouseholdType
from lifecycle_childcare.shocks import ShockParams
from lifecycle_childcare.simulate import run_types


def toy_params(n_z=1, n_e=1, **cal_changes) -> ModelParams:
    """Two ages: 30 (working, birth decision) and 31 (retired, last)."""
    cal = CalibratedParams(j_entry=30, j_birth=30, j_retire=31, j_max=31, **cal_changes)
    grids = GridSpec(n_assets=5, n_z=n_z, n_e=n_e, n_leisure=3, n_parenting=3, asset_max=2.0)
    shocks = ShockParams() if n_z > 1 or n_e > 1 else ShockParams(
        sigma_eps=((0.0, 0.0), (0.0, 0.0)), sigma_e=((0.0, 0.0), (0.0, 0.0)))
    return ModelParams(calibrated=cal, grids=grids, shocks=shocks)


def toy_model(params=None, nursery=False, survival=0.9, kappa=(1.0, 0.8)) -> HouseholdModel:
    params = params or toy_params()
    n = params.calibrated.n_ages
    inputs = AgeProfileInputs(np.full(n, kappa[0]), np.full(n, kappa[1]), np.full(n, survival))
    return HouseholdModel(params, HouseholdType(Education.COLLEGE, nursery, 1.0), inputs)


@pytest.fixture(scope="session")
def desk():
    return desk_params()


@pytest.fixture(scope="session")
def tables(desk):
    return synth_defaults(desk.calibrated)


@pytest.fixture(scope="session")
def desk_runs(desk, tables):
    return run_types(desk, tables)


@pytest.fixture(scope="session")
def desk_model(desk, tables):
    ht = desk.types[1]
    return HouseholdModel(desk, ht, type_inputs(tables, ht, desk.calibrated))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
