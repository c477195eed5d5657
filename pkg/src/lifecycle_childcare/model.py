"""Per-household-type model context: grids, shock nodes and age profiles."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import budget
from .config import ModelParams
from .params import HouseholdType, child_age
from .preferences import Shifters, effective_nursery_time, parenting_active, shifters_at
from .shocks import build_shock_system


@dataclass(frozen=True)
class AgeProfileInputs:
    """Labor productivity per spouse and couple survival, indexed from ``j_entry``.

    ``survival[i]`` is the probability that the couple alive at age
    ``j_entry + i`` lives to the next year.
    """

    kappa_1: np.ndarray
    kappa_2: np.ndarray
    survival: np.ndarray

    def __post_init__(self):
        for name in ("kappa_1", "kappa_2", "survival"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        n = len(self.survival)
        if len(self.kappa_1) != n or len(self.kappa_2) != n:
            raise ValueError("age profiles must have equal lengths")
        if np.any(self.kappa_1 < 0) or np.any(self.kappa_2 < 0):
            raise ValueError("productivity must be nonnegative")
        if np.any((self.survival < 0) | (self.survival > 1)):
            raise ValueError("survival probabilities must lie in [0, 1]")


class HouseholdModel:
    """Everything the solver and simulator need for one household type."""

    def __init__(self, params: ModelParams, htype: HouseholdType, inputs: AgeProfileInputs):
        cal = params.calibrated
        if len(inputs.survival) != cal.n_ages:
            raise ValueError(
                f"age profiles cover {len(inputs.survival)} ages, model needs {cal.n_ages}"
            )
        self.params = params
        self.htype = htype
        self.inputs = inputs
        self.cal = cal
        self.est = params.estimated
        self.grids = params.grids
        g = params.grids
        shocks = build_shock_system(params.shocks, g.n_z, g.n_e, g.shock_width)
        self.chain = shocks.persistent
        self.iid = shocks.transitory
        self.asset_grid = g.asset_grid()
        self.z_nodes = self.chain.nodes
        self.e_nodes = self.iid.nodes
        jr = cal.j_retire - cal.j_entry
        self.pension = budget.pension(inputs.kappa_1[jr], inputs.kappa_2[jr], cal)

    def age_index(self, j: int) -> int:
        return j - self.cal.j_entry

    def kappa(self, j: int, spouse: int) -> float:
        prof = self.inputs.kappa_1 if spouse == 1 else self.inputs.kappa_2
        return float(prof[self.age_index(j)])

    def survival(self, j: int) -> float:
        # nobody survives past the last modeled age
        if j >= self.cal.j_max:
            return 0.0
        return float(self.inputs.survival[self.age_index(j)])

    def child_age(self, j: int, k: int):
        return child_age(j, k, self.cal)

    def parenting_active(self, j: int, k: int) -> bool:
        return parenting_active(j, k, self.cal)

    def shifters(self, j: int, k: int) -> Shifters:
        return shifters_at(j, k, self.est, self.cal, self.params.schedule)

    def nursery_time(self, j: int, k: int) -> float:
        return effective_nursery_time(j, k, self.htype, self.cal)

    def time_grids(self, j: int, k: int, spouse: int) -> tuple[np.ndarray, np.ndarray]:
        return self._time_grids(self.parenting_active(j, k), spouse)

    @cached_property
    def _grid_cache(self) -> dict:
        out = {}
        for active in (False, True):
            for spouse in (1, 2):
                out[active, spouse] = self.grids.time_grids(self.cal.hw_hours(spouse), active)
        return out

    def _time_grids(self, active: bool, spouse: int):
        return self._grid_cache[active, spouse]

    def time_choice(self, j: int, k: int, spouse: int, iL: int, iT: int):
        L, T = self.time_grids(j, k, spouse)
        if not (0 <= iL < len(L) and 0 <= iT < len(T)):
            return None, None
        return float(L[iL]), float(T[iT])
