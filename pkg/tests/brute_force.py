"""Exhaustive enumeration of the two-age toy model, written independently of the solver.

Utility and budget are spelled out inline.  Grids, shock nodes and shifters
are read from the model object, which is input data rather than solver logic.
"""

import itertools

import numpy as np


def period_utility(c, L1, L2, T1, T2, N, sh, est, active):
    if c <= 0:
        return -np.inf
    g = 1 - 1 / est.eta
    u = np.exp(sh.phi_C) * c**g / g
    lei = np.exp(sh.phi_L1) * L1 ** (1 - 1 / est.psi_L1) + np.exp(sh.phi_L2) * L2 ** (1 - 1 / est.psi_L2)
    u -= lei ** (1 - est.rho_L) / (1 - est.rho_L)
    if active:
        par = np.exp(sh.phi_T1) * T1 ** (1 - 1 / est.psi_T1) + np.exp(sh.phi_T2) * (T2 + N) ** (1 - 1 / est.psi_T2)
        u -= par ** (1 - est.rho_T) / (1 - est.rho_T)
    return u


def consumption(model, j, k, ia, iz, ie, L1, T1, L2, T2, pl, ia_next):
    """Consumption of a state-choice pair, or None when infeasible."""
    cal = model.cal
    m1 = 1 - L1 - T1 - cal.hw_hours_1
    m2 = 1 - L2 - T2 - cal.hw_hours_2
    if m1 < -1e-12 or m2 < -1e-12:
        return None
    m1, m2 = max(m1, 0.0), max(m2, 0.0)
    a, a_next = model.asset_grid[ia], model.asset_grid[ia_next]
    j_c = j - cal.j_birth if k == 1 else None
    if j >= cal.j_retire:
        if pl:
            return None
        jr = cal.j_retire - cal.j_entry
        pension = cal.pension_rate * cal.wage * (1 - cal.tax) * (
            model.inputs.kappa_1[jr] * (cal.h_ref - cal.hw_hours_1)
            + model.inputs.kappa_2[jr] * (cal.h_ref - cal.hw_hours_2))
        return (1 + cal.r) * a + pension - a_next
    z, e = model.z_nodes[iz], model.e_nodes[ie]
    t = j - cal.j_entry
    net = cal.wage * (1 - cal.tax)
    earn1 = net * model.inputs.kappa_1[t] * np.exp(z[0] + e[0]) * m1
    earn2 = net * model.inputs.kappa_2[t] * np.exp(z[1] + e[1]) * m2
    benefit = 0.0
    if pl:
        if j_c is None or j_c >= cal.pl_max_childage:
            return None
        if cal.pl_mode == "leave":
            if m2 > 1e-12:
                return None
            benefit = cal.rr_pl * net * model.inputs.kappa_2[t] * np.exp(z[1] + e[1]) * (cal.h_ref - cal.hw_hours_2)
        else:
            benefit = cal.rr_pl * earn2
    fee = 0.0
    if model.htype.uses_nursery and j_c is not None and cal.nursery_min_childage <= j_c <= cal.nursery_max_childage:
        fee = cal.fee_rate * earn2
    return (1 + cal.r) * a + earn1 + earn2 + benefit - fee - a_next


def best_choice(model, j, k, ia, iz, ie, continuation):
    """Max over (pl, iL1, iL2, iT1, iT2, ia_next) in lexicographic order; first maximizer wins.

    ``continuation(ia_next, iz)`` is the discounted expected future value.
    """
    cal = model.cal
    L1g, T1g = model.time_grids(j, k, 1)
    L2g, T2g = model.time_grids(j, k, 2)
    sh = model.shifters(j, k)
    N = model.nursery_time(j, k)
    best, arg = -np.inf, None
    nA = len(model.asset_grid)
    for pl, iL1, iL2, iT1, iT2, ian in itertools.product(
            (False, True), range(len(L1g)), range(len(L2g)), range(len(T1g)), range(len(T2g)), range(nA)):
        c = consumption(model, j, k, ia, iz, ie, L1g[iL1], T1g[iT1], L2g[iL2], T2g[iT2], pl, ian)
        if c is None or c <= 0:
            continue
        v = period_utility(c, L1g[iL1], L2g[iL2], T1g[iT1], T2g[iT2], N, sh, model.est,
                           sh.parenting_active) + continuation(ian, iz)
        if v > best:
            best, arg = v, (iL1, iL2, iT1, iT2, ian, pl)
    return best, arg


def solve_toy(model):
    """Values and choices at both ages of the toy, keyed by state tuples.

    Returns ``{(j, k, ia, iz, ie): (value, choice)}`` for the last age, and
    for the first age ``(j, 0, ...)`` with the birth flag in the choice, plus
    ``(j, k, ...)`` rows holding each branch's own value.
    """
    cal = model.cal
    j0, j1 = cal.j_entry, cal.j_max
    nA, nZ, nE = len(model.asset_grid), model.chain.n, model.iid.n
    P, pe = model.chain.transition, model.iid.probs
    out = {}
    for k, ia, iz, ie in itertools.product((0, 1), range(nA), range(nZ), range(nE)):
        out[(j1, k, ia, iz, ie)] = best_choice(model, j1, k, ia, iz, ie, lambda ian, iz_: 0.0)
    s = model.inputs.survival[0]
    for k in (0, 1):
        def cont(ian, iz_, k=k):
            ev = sum(P[iz_, y] * pe[x] * out[(j1, k, ian, y, x)][0] for y in range(nZ) for x in range(nE))
            return s * cal.beta * ev
        for ia, iz, ie in itertools.product(range(nA), range(nZ), range(nE)):
            out[("branch", k, ia, iz, ie)] = best_choice(model, j0, k, ia, iz, ie, cont)
    for ia, iz, ie in itertools.product(range(nA), range(nZ), range(nE)):
        v0, c0 = out[("branch", 0, ia, iz, ie)]
        v1, c1 = out[("branch", 1, ia, iz, ie)]
        # birth is the first flag in the flattened order, so ties keep it at 0
        out[(j0, 0, ia, iz, ie)] = (v1, (*c1, True)) if v1 > v0 else (v0, (*c0, False))
    return out
