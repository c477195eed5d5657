"""Model parameters, household types, grid specification and state indexing.

Time is measured as a fraction of the day and one model period is one year.
Earnings are in model units where ``wage = 1`` is the annual wage of a fully
productive worker who works the whole day.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import NamedTuple

import numpy as np

CHILDLESS = 0
WITH_CHILD = 1
N_CHILD_STATES = 2

# consumption shifter of childless couples, fixed as the normalization
PHI_C_NOCHILD = -1.0


class Education(str, Enum):
    COLLEGE = "college"
    HIGHSCHOOL = "highschool"


@dataclass(frozen=True)
class EstimatedParams:
    """The 14 preference parameters recovered by GMM.

    ``phi_*`` values are log-scale shifters: leisure shifters are intercepts at
    parent age ``j_entry``, parenting shifters are peaks at child age 0.
    """

    eta: float = 0.4693
    psi_L1: float = 0.1986
    psi_L2: float = 0.1518
    psi_T1: float = 0.2067
    psi_T2: float = 0.5440
    rho_L: float = 0.4745
    rho_T: float = -0.1878
    phi_L1_child: float = -8.7970
    phi_L2_child: float = -8.8182
    phi_L1_nochild: float = -6.4374
    phi_L2_nochild: float = -8.8798
    phi_T1: float = -20.9558
    phi_T2: float = -3.4116
    phi_C_child: float = -0.9785

    def __post_init__(self):
        if not self.eta > 0 or self.eta == 1:
            raise ValueError(f"eta must be positive and != 1, got {self.eta}")
        for name in ("psi_L1", "psi_L2", "psi_T1", "psi_T2"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.rho_L == 1 or self.rho_T == 1:
            raise ValueError("rho_L and rho_T must differ from 1")

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in self.names()], dtype=float)

    @classmethod
    def from_vector(cls, x) -> "EstimatedParams":
        x = np.asarray(x, dtype=float)
        if x.shape != (len(cls.names()),):
            raise ValueError(f"expected {len(cls.names())} entries, got shape {x.shape}")
        return cls(**{n: float(v) for n, v in zip(cls.names(), x)})

    @classmethod
    def bounds(cls) -> tuple[np.ndarray, np.ndarray]:
        """Open box the estimator searches in, as (lower, upper) arrays."""
        lo, hi = [], []
        for n in cls.names():
            if n.startswith("psi") or n == "eta":
                lo.append(0.01), hi.append(0.99)
            elif n.startswith("rho"):
                lo.append(-0.95), hi.append(0.95)
            else:
                lo.append(-30.0), hi.append(5.0)
        return np.array(lo), np.array(hi)


@dataclass(frozen=True)
class CalibratedParams:
    beta: float = 0.96
    r: float = 0.05
    j_entry: int = 20
    j_retire: int = 65
    j_max: int = 100
    j_birth: int = 30
    hw_hours_1: float = 0.125
    hw_hours_2: float = 0.125
    nursery_time: float = 0.167
    rr_pl: float = 0.5
    fee_rate: float = 0.25
    pension_rate: float = 0.3
    wage: float = 1.0
    tax: float = 0.20
    h_ref: float = 1.0 / 3.0
    wg_scale: float = 1.0
    wg_shift: float = 0.1
    pl_max_childage: int = 2
    nursery_min_childage: int = 2
    nursery_max_childage: int = 6
    support_max_childage: int = 18
    # "leave": PL sets the wife's market hours to zero and pays a benefit based
    # on h_ref; "literal": the benefit is stacked on top of chosen earnings.
    pl_mode: str = "leave"

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.r > -1:
            raise ValueError(f"r must exceed -1, got {self.r}")
        # j_entry == j_birth and j_retire == j_max are allowed for toy horizons
        if not (self.j_entry <= self.j_birth < self.j_retire <= self.j_max):
            raise ValueError(
                "ages must satisfy j_entry <= j_birth < j_retire <= j_max, got "
                f"{self.j_entry}, {self.j_birth}, {self.j_retire}, {self.j_max}"
            )
        for name in ("hw_hours_1", "hw_hours_2", "nursery_time", "h_ref"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        for name in ("rr_pl", "fee_rate", "pension_rate", "tax"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        if self.wage <= 0:
            raise ValueError(f"wage must be positive, got {self.wage}")
        if self.wg_shift <= 0 or self.wg_scale < 0:
            raise ValueError("wg_shift must be positive and wg_scale nonnegative")
        if self.pl_mode not in ("leave", "literal"):
            raise ValueError(f"unknown pl_mode {self.pl_mode!r}")

    @property
    def n_ages(self) -> int:
        return self.j_max - self.j_entry + 1

    @property
    def ages(self) -> np.ndarray:
        return np.arange(self.j_entry, self.j_max + 1)

    def hw_hours(self, spouse: int) -> float:
        return self.hw_hours_1 if spouse == 1 else self.hw_hours_2


@dataclass(frozen=True)
class HouseholdType:
    education: Education
    uses_nursery: bool
    weight: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "education", Education(self.education))
        if not 0 <= self.weight <= 1:
            raise ValueError(f"weight must lie in [0, 1], got {self.weight}")

    @property
    def name(self) -> str:
        return f"{self.education.value}_{'nursery' if self.uses_nursery else 'nonursery'}"


def default_types() -> tuple[HouseholdType, ...]:
    return (
        HouseholdType(Education.COLLEGE, True, 0.25),
        HouseholdType(Education.COLLEGE, False, 0.25),
        HouseholdType(Education.HIGHSCHOOL, True, 0.25),
        HouseholdType(Education.HIGHSCHOOL, False, 0.25),
    )


def check_type_weights(types) -> None:
    total = sum(t.weight for t in types)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"household type weights sum to {total}, not 1")


@dataclass(frozen=True)
class GridSpec:
    n_assets: int = 51
    n_z: int = 3
    n_e: int = 3
    n_leisure: int = 11
    n_parenting: int = 11
    asset_max: float = 10.0
    time_floor: float = 0.02
    # half-width of the persistent-shock grid in stationary std units;
    # None means sqrt(n_z - 1)
    shock_width: float | None = None

    def __post_init__(self):
        for name in ("n_assets", "n_z", "n_e", "n_leisure", "n_parenting"):
            v = getattr(self, name)
            # shock chains may collapse to a single node in toy models
            lowest = 1 if name in ("n_z", "n_e") else 2
            if v < lowest:
                raise ValueError(f"{name} must be >= {lowest}, got {v}")
        if self.asset_max <= 0:
            raise ValueError("asset_max must be positive")
        if not 0 < self.time_floor < 0.5:
            raise ValueError("time_floor must lie in (0, 0.5)")

    @property
    def n_zz(self) -> int:
        return self.n_z**2

    @property
    def n_ee(self) -> int:
        return self.n_e**2

    def asset_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.asset_max, self.n_assets)

    def time_grids(self, hw: float, parenting_active: bool) -> tuple[np.ndarray, np.ndarray]:
        """Leisure and parenting grids of one spouse.

        When the parenting block is active both grids sit on one lattice
        ``floor + k * step`` with ``step = (1 - hw - 2 floor) / (n - 1)``, so
        that equal index sums give identical market hours and zero market work
        is reachable.  Otherwise parenting time is the single point 0 and
        leisure spans ``[floor, 1 - hw]``.
        """
        free = 1.0 - hw
        f = self.time_floor
        if not parenting_active:
            return np.linspace(f, free, self.n_leisure), np.zeros(1)
        step = (free - 2 * f) / (max(self.n_leisure, self.n_parenting) - 1)
        leisure = f + step * np.arange(self.n_leisure)
        parenting = f + step * np.arange(self.n_parenting)
        return leisure, parenting


PAPER_GRID = GridSpec()
DESK_GRID = GridSpec(n_assets=21, n_leisure=5, n_parenting=5, asset_max=20.0)


class StateIndex(NamedTuple):
    j: int
    k: int
    ia: int
    iz: int
    ie: int


class ChoicePoint(NamedTuple):
    iL1: int
    iL2: int
    iT1: int
    iT2: int
    ia_next: int
    birth: bool = False
    pl: bool = False


def child_age(j: int, k: int, cal: CalibratedParams) -> int | None:
    if not cal.j_entry <= j <= cal.j_max:
        raise ValueError(f"age {j} outside [{cal.j_entry}, {cal.j_max}]")
    if k == WITH_CHILD and j >= cal.j_birth:
        return j - cal.j_birth
    return None


def flat_state_count(grids: GridSpec, ages: int) -> int:
    """States in one child-state branch: assets x z-pairs x e-pairs x ages."""
    return grids.n_assets * grids.n_zz * grids.n_ee * ages


def state_shape(grids: GridSpec, ages: int) -> tuple[int, int, int, int, int]:
    return (ages, N_CHILD_STATES, grids.n_assets, grids.n_zz, grids.n_ee)


def flatten_state(s: StateIndex, grids: GridSpec, cal: CalibratedParams) -> int:
    shape = state_shape(grids, cal.n_ages)
    idx = (s.j - cal.j_entry, s.k, s.ia, s.iz, s.ie)
    for i, n in zip(idx, shape):
        if not 0 <= i < n:
            raise IndexError(f"state {s} outside grid {shape}")
    return int(np.ravel_multi_index(idx, shape))


def unflatten_state(flat: int, grids: GridSpec, cal: CalibratedParams) -> StateIndex:
    jj, k, ia, iz, ie = np.unravel_index(flat, state_shape(grids, cal.n_ages))
    return StateIndex(int(jj) + cal.j_entry, int(k), int(ia), int(iz), int(ie))


def as_dict(obj) -> dict:
    d = asdict(obj)
    return {k: (v.value if isinstance(v, Enum) else v) for k, v in d.items()}
