"""Earnings, transfers, fees, pensions and the consumption residual."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import CalibratedParams, ChoicePoint, HouseholdType, StateIndex

# market hours below -TIME_TOL count as an over-allocated day
TIME_TOL = 1e-12


@dataclass(frozen=True)
class FlowBreakdown:
    gross_earn_1: float
    gross_earn_2: float
    pl_income: float
    nursery_cost: float
    pension: float
    capital_income: float
    assets: float
    assets_next: float
    consumption: float
    retired: bool

    def identity_gap(self, r: float) -> float:
        """Budget identity residual, summed independently of the consumption formula."""
        lhs = self.consumption + self.nursery_cost + self.assets_next
        if self.retired:
            rhs = (1 + r) * self.assets + self.pension
        else:
            rhs = (1 + r) * self.assets + self.gross_earn_1 + self.gross_earn_2 + self.pl_income
        return lhs - rhs


def market_hours(L: float, T: float, hw: float) -> tuple[float, bool]:
    """Market hours left after leisure, parenting and housework.

    Returns ``(market, feasible)``; ``market`` is clipped at zero.
    """
    market = 1.0 - L - T - hw
    feasible = market >= -TIME_TOL and L + T <= 1.0 + TIME_TOL
    return max(market, 0.0), feasible


def spouse_earnings(kappa: float, z: float, e: float, market: float, cal: CalibratedParams) -> float:
    """Net-of-tax labor earnings ``w (1 - tau) kappa exp(z + e) market``."""
    return cal.wage * (1.0 - cal.tax) * kappa * np.exp(z + e) * market


def pl_eligible(j_c: int | None, cal: CalibratedParams, retired: bool = False) -> bool:
    return j_c is not None and j_c < cal.pl_max_childage and not retired


def pl_benefit(j_c: int | None, pl: bool, kappa_2: float, z2: float, e2: float,
               cal: CalibratedParams, market_2: float = 0.0) -> float:
    """Parental-leave benefit paid this year.

    Under ``pl_mode == "leave"`` the benefit replaces ``rr_pl`` of the wife's
    earnings at reference hours ``h_ref`` (her market hours are zero while on
    leave).  Under ``"literal"`` it is ``rr_pl`` times her chosen earnings.
    """
    if not (pl and pl_eligible(j_c, cal)):
        return 0.0
    hours = cal.h_ref - cal.hw_hours_2 if cal.pl_mode == "leave" else market_2
    return cal.rr_pl * spouse_earnings(kappa_2, z2, e2, hours, cal)


def nursery_fee(j_c: int | None, earn_2_net: float, htype: HouseholdType, cal: CalibratedParams) -> float:
    if (htype.uses_nursery and j_c is not None
            and cal.nursery_min_childage <= j_c <= cal.nursery_max_childage):
        return cal.fee_rate * earn_2_net
    return 0.0


def pension(kappa_retire_1: float, kappa_retire_2: float, cal: CalibratedParams) -> float:
    """Annual household pension from productivities at the retirement age."""
    base = (kappa_retire_1 * (cal.h_ref - cal.hw_hours_1)
            + kappa_retire_2 * (cal.h_ref - cal.hw_hours_2))
    return cal.pension_rate * cal.wage * (1.0 - cal.tax) * base


def flow_breakdown(state: StateIndex, choice: ChoicePoint, model) -> FlowBreakdown | None:
    """All cash flows of a state-choice pair, or None when it is infeasible.

    ``model`` is a :class:`~lifecycle_childcare.model.HouseholdModel`.
    Infeasible means an over-allocated day, PL without zero market hours for
    the wife (leave mode), an ineligible PL or birth flag, or ``c <= 0``.
    """
    cal = model.cal
    j, k = state.j, state.k
    retired = j >= cal.j_retire
    if choice.birth:
        if j != cal.j_birth or k != 0:
            return None
        k = 1
    j_c = model.child_age(j, k)
    if choice.pl and not pl_eligible(j_c, cal, retired):
        return None
    L1, T1 = model.time_choice(j, k, 1, choice.iL1, choice.iT1)
    L2, T2 = model.time_choice(j, k, 2, choice.iL2, choice.iT2)
    if L1 is None or L2 is None:
        return None
    m1, ok1 = market_hours(L1, T1, cal.hw_hours_1)
    m2, ok2 = market_hours(L2, T2, cal.hw_hours_2)
    if not (ok1 and ok2):
        return None
    if choice.pl and cal.pl_mode == "leave" and m2 > TIME_TOL:
        return None

    a = model.asset_grid[state.ia]
    if not 0 <= choice.ia_next < len(model.asset_grid):
        return None
    a_next = model.asset_grid[choice.ia_next]
    z = model.z_nodes[state.iz]
    e = model.e_nodes[state.ie]
    if retired:
        earn1 = earn2 = benefit = fee = 0.0
        pen = model.pension
        c = (1 + cal.r) * a + pen - a_next
    else:
        earn1 = spouse_earnings(model.kappa(j, 1), z[0], e[0], m1, cal)
        earn2 = spouse_earnings(model.kappa(j, 2), z[1], e[1], m2, cal)
        benefit = pl_benefit(j_c, choice.pl, model.kappa(j, 2), z[1], e[1], cal, m2)
        fee = nursery_fee(j_c, earn2, model.htype, cal)
        pen = 0.0
        c = (1 + cal.r) * a + earn1 + earn2 + benefit - fee - a_next
    if not c > 0:
        return None
    return FlowBreakdown(
        gross_earn_1=earn1, gross_earn_2=earn2, pl_income=benefit, nursery_cost=fee,
        pension=pen, capital_income=cal.r * a, assets=a, assets_next=a_next,
        consumption=c, retired=retired,
    )


def consumption_residual(state: StateIndex, choice: ChoicePoint, model) -> float | None:
    """Consumption that balances the budget, or None if the pair is infeasible."""
    flows = flow_breakdown(state, choice, model)
    return None if flows is None else flows.consumption
