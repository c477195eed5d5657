import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lifecycle_childcare.params import CalibratedParams, EstimatedParams, HouseholdType
from lifecycle_childcare.preferences import (
    ShifterSchedule,
    Shifters,
    consumption_utility,
    effective_nursery_time,
    period_utility,
    shifter_leisure,
    shifter_parenting,
    shifters_at,
    time_utility,
)

EST = EstimatedParams()
CAL = CalibratedParams()
SCHED = ShifterSchedule()
SH = shifters_at(32, 1, EST, CAL, SCHED)


def u(c, L1, L2, T1, T2, N=0.0, sh=SH):
    return period_utility(c, L1, L2, T1, T2, N, sh, EST)


points = st.tuples(st.floats(0.2, 3.0), st.floats(0.05, 0.6), st.floats(0.05, 0.6),
                   st.floats(0.05, 0.4), st.floats(0.05, 0.4))


@settings(max_examples=100, deadline=None)
@given(points)
def test_marginal_utilities_positive(p):
    h = 1e-6
    for i in range(5):
        up, dn = list(p), list(p)
        up[i] += h
        dn[i] -= h
        assert (u(*up) - u(*dn)) / (2 * h) > 0


@settings(max_examples=100, deadline=None)
@given(points)
def test_cross_partials_follow_rho(p):
    h = 1e-4

    def cross(i, j):
        vals = {}
        for si in (1, -1):
            for sj in (1, -1):
                q = list(p)
                q[i] += si * h
                q[j] += sj * h
                vals[si, sj] = u(*q)
        return (vals[1, 1] - vals[1, -1] - vals[-1, 1] + vals[-1, -1]) / (4 * h * h)

    assert cross(1, 2) > 0  # leisure complements, rho_L > 0
    assert cross(3, 4) < 0  # parenting substitutes, rho_T < 0


def test_parenting_block_dropped_without_child():
    sh = shifters_at(32, 0, EST, CAL, SCHED)
    assert not sh.parenting_active
    assert u(1.0, 0.3, 0.3, 0.1, 0.2, sh=sh) == u(1.0, 0.3, 0.3, 0.3, 0.0, sh=sh)
    older = shifters_at(30 + 19, 1, EST, CAL, SCHED)
    assert not older.parenting_active


def test_domain_edges():
    assert u(0.0, 0.3, 0.3, 0.1, 0.1) == -np.inf
    assert u(-1.0, 0.3, 0.3, 0.1, 0.1) == -np.inf
    assert u(1.0, 0.0, 0.3, 0.1, 0.1) == -np.inf
    assert u(1.0, 0.3, 0.3, 0.1, 0.0) == -np.inf
    # nursery time keeps the wife's parenting term finite
    assert np.isfinite(u(1.0, 0.3, 0.3, 0.1, 0.0, N=0.167))


def test_consumption_term_matches_formula():
    g = 1 - 1 / EST.eta
    assert consumption_utility(2.0, -1.0, EST.eta) == pytest.approx(np.exp(-1.0) * 2.0**g / g)


def test_time_utility_is_period_utility_without_consumption():
    args = (0.3, 0.25, 0.1, 0.2, 0.0)
    full = u(1.5, *args)
    cons = consumption_utility(1.5, SH.phi_C, EST.eta)
    assert float(time_utility(*args, SH, EST)) == pytest.approx(full - cons, abs=1e-12)


def test_shifter_schedules():
    assert shifter_leisure(20, 1, True, EST, CAL, SCHED) == EST.phi_L1_child
    assert shifter_leisure(30, 2, False, EST, CAL, SCHED) == pytest.approx(EST.phi_L2_nochild + 0.3)
    assert shifter_leisure(90, 1, True, EST, CAL, SCHED) == shifter_leisure(65, 1, True, EST, CAL, SCHED)
    assert shifter_parenting(0, 2, EST, SCHED) == EST.phi_T2
    assert shifter_parenting(18, 2, EST, SCHED) == pytest.approx(EST.phi_T2 - 2.0)
    flat = ShifterSchedule(flat_top=True, flat_top_until=3)
    assert shifter_parenting(3, 1, EST, flat) == EST.phi_T1
    assert shifter_parenting(4, 1, EST, flat) < EST.phi_T1
    with pytest.raises(ValueError):
        shifter_parenting(-1, 1, EST, SCHED)


def test_consumption_shifter_by_child_state():
    assert shifters_at(25, 0, EST, CAL, SCHED).phi_C == -1.0
    assert shifters_at(40, 1, EST, CAL, SCHED).phi_C == EST.phi_C_child


def test_nursery_window():
    nur = HouseholdType("college", True)
    none = HouseholdType("college", False)
    assert effective_nursery_time(32, 1, nur, CAL) == CAL.nursery_time
    assert effective_nursery_time(31, 1, nur, CAL) == 0.0
    assert effective_nursery_time(37, 1, nur, CAL) == 0.0
    assert effective_nursery_time(33, 1, none, CAL) == 0.0
