"""Period utility of the couple and its age-dependent preference shifters."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .params import (
    PHI_C_NOCHILD,
    WITH_CHILD,
    CalibratedParams,
    EstimatedParams,
    HouseholdType,
    child_age,
)


@dataclass(frozen=True)
class ShifterSchedule:
    """How the leisure and parenting shifters move with age.

    Leisure shifters rise linearly (per year, log scale) from ``j_entry`` to
    retirement and stay flat afterwards.  Parenting shifters fall linearly
    from their child-age-0 peak by ``parenting_floor_offset`` in total, hitting
    the floor at ``parenting_decline_age``.  With ``flat_top`` the peak is held
    until ``flat_top_until`` before the decline starts.
    """

    leisure_slope_child: float = 0.05
    leisure_slope_nochild: float = 0.03
    parenting_decline_age: int = 18
    parenting_floor_offset: float = 2.0
    flat_top: bool = False
    flat_top_until: int = 3

    def __post_init__(self):
        if self.parenting_decline_age <= 0:
            raise ValueError("parenting_decline_age must be positive")
        if self.flat_top and not 0 <= self.flat_top_until < self.parenting_decline_age:
            raise ValueError("flat_top_until must lie in [0, parenting_decline_age)")


class Shifters(NamedTuple):
    phi_C: float
    phi_L1: float
    phi_L2: float
    phi_T1: float
    phi_T2: float
    parenting_active: bool


def shifter_leisure(j: int, spouse: int, has_child: bool, est: EstimatedParams,
                    cal: CalibratedParams, schedule: ShifterSchedule) -> float:
    if has_child:
        intercept = est.phi_L1_child if spouse == 1 else est.phi_L2_child
        slope = schedule.leisure_slope_child
    else:
        intercept = est.phi_L1_nochild if spouse == 1 else est.phi_L2_nochild
        slope = schedule.leisure_slope_nochild
    return intercept + slope * (min(j, cal.j_retire) - cal.j_entry)


def shifter_parenting(j_c: int, spouse: int, est: EstimatedParams, schedule: ShifterSchedule) -> float:
    if j_c < 0:
        raise ValueError(f"child age must be nonnegative, got {j_c}")
    peak = est.phi_T1 if spouse == 1 else est.phi_T2
    top = schedule.parenting_decline_age
    t = min(j_c, top)
    if schedule.flat_top:
        start = schedule.flat_top_until
        return peak - schedule.parenting_floor_offset * max(t - start, 0) / (top - start)
    return peak - schedule.parenting_floor_offset * t / top


def parenting_active(j: int, k: int, cal: CalibratedParams) -> bool:
    jc = child_age(j, k, cal)
    return jc is not None and jc <= cal.support_max_childage


def nursery_in_use(j: int, k: int, htype: HouseholdType, cal: CalibratedParams) -> bool:
    jc = child_age(j, k, cal)
    return (htype.uses_nursery and jc is not None
            and cal.nursery_min_childage <= jc <= cal.nursery_max_childage)


def effective_nursery_time(j: int, k: int, htype: HouseholdType, cal: CalibratedParams) -> float:
    return cal.nursery_time if nursery_in_use(j, k, htype, cal) else 0.0


def shifters_at(j: int, k: int, est: EstimatedParams, cal: CalibratedParams,
                schedule: ShifterSchedule) -> Shifters:
    has_child = k == WITH_CHILD and j >= cal.j_birth
    active = parenting_active(j, k, cal)
    if active:
        jc = child_age(j, k, cal)
        phi_T1 = shifter_parenting(jc, 1, est, schedule)
        phi_T2 = shifter_parenting(jc, 2, est, schedule)
    else:
        phi_T1 = phi_T2 = 0.0
    return Shifters(
        phi_C=est.phi_C_child if has_child else PHI_C_NOCHILD,
        phi_L1=shifter_leisure(j, 1, has_child, est, cal, schedule),
        phi_L2=shifter_leisure(j, 2, has_child, est, cal, schedule),
        phi_T1=phi_T1,
        phi_T2=phi_T2,
        parenting_active=active,
    )


def consumption_utility(c, phi_C: float, eta: float):
    """``exp(phi_C) c^(1-1/eta) / (1-1/eta)``; -inf where ``c <= 0``."""
    g = 1.0 - 1.0 / eta
    c = np.asarray(c, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.exp(phi_C) * np.power(c, g) / g
    return np.where(c > 0, u, -np.inf)


def _ces_block(x1, x2, phi1, phi2, psi1, psi2, rho):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inner = np.exp(phi1) * np.power(x1, 1.0 - 1.0 / psi1) + np.exp(phi2) * np.power(x2, 1.0 - 1.0 / psi2)
        val = np.power(inner, 1.0 - rho) / (1.0 - rho)
    return np.where((x1 > 0) & (x2 > 0), val, np.inf)


def leisure_block(L1, L2, sh: Shifters, est: EstimatedParams):
    """Leisure disutility (subtracted in the period utility); +inf off-domain."""
    return _ces_block(L1, L2, sh.phi_L1, sh.phi_L2, est.psi_L1, est.psi_L2, est.rho_L)


def parenting_block(T1, T2_plus_N, sh: Shifters, est: EstimatedParams):
    return _ces_block(T1, T2_plus_N, sh.phi_T1, sh.phi_T2, est.psi_T1, est.psi_T2, est.rho_T)


def period_utility(c, L1, L2, T1, T2, N_effective, sh: Shifters, est: EstimatedParams) -> float:
    """Utility of one year of consumption and time use.

    The parenting block is dropped entirely when ``sh.parenting_active`` is
    false, so the result then does not depend on ``T1``, ``T2`` or
    ``N_effective``.  Arguments outside the domain give ``-inf``.
    """
    u = consumption_utility(c, sh.phi_C, est.eta) - leisure_block(L1, L2, sh, est)
    if sh.parenting_active:
        u = u - parenting_block(T1, np.add(T2, N_effective), sh, est)
    u = np.where(np.isnan(u), -np.inf, u)
    return float(u) if np.ndim(u) == 0 else u


def time_utility(L1, L2, T1, T2, N_effective, sh: Shifters, est: EstimatedParams):
    """Period utility net of the consumption term (vectorized)."""
    u = -leisure_block(L1, L2, sh, est)
    if sh.parenting_active:
        u = u - parenting_block(T1, np.add(T2, N_effective), sh, est)
    return np.where(np.isnan(u), -np.inf, u)

