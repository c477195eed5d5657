"""Backward induction on the couple's Bellman equation over discrete grids.

Every choice is on-grid: per-spouse leisure and parenting points, next-period
assets, the birth flag at the birth age and the parental-leave flag while the
child is young.  Time choices enter the budget only through the two spouses'
market hours, so for each age the time combinations are first reduced to the
best one per (market_1, market_2) pair; the state loop then searches those
groups jointly with next-period assets.  Ties go to the lowest flattened
choice index ``(pl, iL1, iL2, iT1, iT2, ia_next)``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numba as nb
import numpy as np

from .budget import TIME_TOL, pl_eligible
from .model import AgeProfileInputs, HouseholdModel
from .params import CHILDLESS, N_CHILD_STATES, WITH_CHILD
from .preferences import time_utility

log = logging.getLogger(__name__)

# stands in for -inf inside expectations so that 0 * value stays 0
_VERY_NEGATIVE = -1e300

BIRTH_MODES = ("choice", "always", "never")

__all__ = [
    "AgeProfileInputs",
    "PolicySlice",
    "Solution",
    "TimeGroups",
    "bellman_step",
    "continuation_values",
    "solve_lifecycle",
    "terminal_and_bequest",
    "time_groups",
]


def terminal_and_bequest(a_next, cal, eta: float):
    """Warm-glow value of bequeathing ``a_next``: CRRA in ``a_next + wg_shift``."""
    g = 1.0 - 1.0 / eta
    a_next = np.asarray(a_next, dtype=float)
    return cal.wg_scale * np.power(a_next + cal.wg_shift, g) / g


class TimeGroups(NamedTuple):
    """Best time allocation for each distinct pair of market hours."""

    m1: np.ndarray
    m2: np.ndarray
    utility: np.ndarray  # time part of period utility of the representative
    tflat: np.ndarray  # flattened (iL1, iL2, iT1, iT2) of the representative
    pl_ok: np.ndarray  # whether PL may be combined with this group
    iL1: np.ndarray
    iL2: np.ndarray
    iT1: np.ndarray
    iT2: np.ndarray


def _spouse_options(L, T, hw):
    iL, iT = np.meshgrid(np.arange(len(L)), np.arange(len(T)), indexing="ij")
    iL, iT = iL.ravel(), iT.ravel()
    m = 1.0 - L[iL] - T[iT] - hw
    keep = m >= -TIME_TOL
    iL, iT, m = iL[keep], iT[keep], np.maximum(m[keep], 0.0)
    keys, inv = np.unique(np.round(m, 10), return_inverse=True)
    return iL, iT, m, inv, len(keys)


def time_groups(model: HouseholdModel, j: int, k: int) -> TimeGroups:
    cal, grids = model.cal, model.grids
    sh = model.shifters(j, k)
    N = model.nursery_time(j, k)
    L1g, T1g = model.time_grids(j, k, 1)
    L2g, T2g = model.time_grids(j, k, 2)
    iL1, iT1, m1, g1, n1 = _spouse_options(L1g, T1g, cal.hw_hours_1)
    iL2, iT2, m2, g2, n2 = _spouse_options(L2g, T2g, cal.hw_hours_2)

    U = time_utility(L1g[iL1][:, None], L2g[iL2][None, :], T1g[iT1][:, None],
                     T2g[iT2][None, :], N, sh, model.est)
    nL, nT = grids.n_leisure, grids.n_parenting
    F = ((iL1[:, None] * nL + iL2[None, :]) * nT + iT1[:, None]) * nT + iT2[None, :]
    gid = g1[:, None] * n2 + g2[None, :]
    U, F, gid = U.ravel(), F.ravel(), gid.ravel()
    order = np.lexsort((F, -U, gid))
    first = order[np.r_[True, gid[order][1:] != gid[order][:-1]]]
    p1, p2 = np.divmod(first, len(iL2))

    m2_rep = m2[p2]
    if cal.pl_mode == "leave":
        pl_ok = m2_rep <= TIME_TOL
    else:
        pl_ok = np.ones(len(first), dtype=bool)
    return TimeGroups(
        m1=m1[p1], m2=m2_rep, utility=U[first], tflat=F[first].astype(np.int64),
        pl_ok=pl_ok, iL1=iL1[p1], iL2=iL2[p2], iT1=iT1[p1], iT2=iT2[p2],
    )


@nb.njit(cache=True, nogil=True)
def _solve_states(a_grid, base_income, A1, A2, ben, ben_slope, m1, m2, ut, tflat, pl_ok,
                  pl_allowed, c_scale, c_exp, C, n_time, iz0, iz1,
                  V, g_out, pl_out, an_out):
    nA = a_grid.shape[0]
    nE = A1.shape[1]
    G = m1.shape[0]
    for iz in range(iz0, iz1):
        c_max = C[iz, 0]
        for ia2 in range(1, nA):
            if C[iz, ia2] > c_max:
                c_max = C[iz, ia2]
        for ie in range(nE):
            a1 = A1[iz, ie]
            a2 = A2[iz, ie]
            b0 = ben[iz, ie]
            b1 = ben_slope[iz, ie]
            g_first = 0
            for ia in range(nA):
                cash = base_income[ia]
                best = -np.inf
                bidx = np.int64(-1)
                bg = -1
                bp = False
                ba = -1
                # the previous asset point's choice first, so that pruning bites early
                for gg in range(G + 1):
                    if gg == 0:
                        g = g_first
                    else:
                        g = gg - 1
                        if g == g_first:
                            continue
                    u0 = ut[g]
                    if u0 == -np.inf:
                        continue
                    n_pl = 2 if (pl_allowed and pl_ok[g]) else 1
                    for p in range(n_pl):
                        x = cash + a1 * m1[g] + a2 * m2[g]
                        if p == 1:
                            x += b0 + b1 * m2[g]
                        if x <= a_grid[0]:
                            continue
                        # exact bound: consumption utility rises in c, so a' = a_grid[0] is its best case
                        c_top = x - a_grid[0]
                        if u0 + c_scale * c_top**c_exp / c_exp + c_max < best:
                            continue
                        for ia2 in range(nA):
                            c = x - a_grid[ia2]
                            if c <= 0.0:
                                break
                            uc = u0 + c_scale * c**c_exp / c_exp
                            if uc + c_max < best:
                                break
                            v = uc + C[iz, ia2]
                            if v > best or (v == best and v > -np.inf):
                                f = (p * n_time + tflat[g]) * nA + ia2
                                if v > best or f < bidx:
                                    best = v
                                    bidx = f
                                    bg = g
                                    bp = p == 1
                                    ba = ia2
                V[ia, iz, ie] = best
                g_out[ia, iz, ie] = bg
                pl_out[ia, iz, ie] = bp
                an_out[ia, iz, ie] = ba
                if bg >= 0:
                    g_first = bg


class PolicySlice(NamedTuple):
    iL1: np.ndarray
    iL2: np.ndarray
    iT1: np.ndarray
    iT2: np.ndarray
    ia_next: np.ndarray
    pl: np.ndarray


def continuation_values(model: HouseholdModel, j: int, next_value) -> np.ndarray:
    """Discounted expected continuation plus bequest term, shape ``(n_zz, n_assets)``.

    ``next_value`` is the value slice at ``j + 1`` of the branch the household
    continues in (``None`` at the terminal age).  Transitory shocks are
    integrated out first, then the persistent transition is applied.
    """
    cal = model.cal
    nZ, nA = model.chain.n, len(model.asset_grid)
    s = model.survival(j)
    C = np.zeros((nZ, nA))
    if next_value is not None and s > 0:
        Vn = np.where(np.isneginf(next_value), _VERY_NEGATIVE, next_value)
        if j + 1 >= cal.j_retire:
            # retired values do not depend on shocks
            EV = np.broadcast_to(Vn[:, 0, 0], (nZ, nA))
        else:
            EVe = np.einsum("aze,e->za", Vn, model.iid.probs)
            EV = np.einsum("yz,za->ya", model.chain.transition, EVe)
        C += s * cal.beta * EV
    if j > cal.j_retire + 10 and cal.wg_scale > 0:
        C += (1.0 - s) * cal.beta * terminal_and_bequest(model.asset_grid, cal, model.est.eta)[None, :]
    return C


def _income_arrays(model: HouseholdModel, j: int, k: int):
    cal = model.cal
    nZ, nE = model.chain.n, model.iid.n
    retired = j >= cal.j_retire
    shape = (nZ, nE)
    if retired:
        zero = np.zeros(shape)
        return zero, zero, zero, zero, False, model.pension
    zsum1 = model.z_nodes[:, 0][:, None] + model.e_nodes[:, 0][None, :]
    zsum2 = model.z_nodes[:, 1][:, None] + model.e_nodes[:, 1][None, :]
    scale = cal.wage * (1.0 - cal.tax)
    A1 = scale * model.kappa(j, 1) * np.exp(zsum1)
    A2_gross = scale * model.kappa(j, 2) * np.exp(zsum2)
    j_c = model.child_age(j, k)
    fee_on = (model.htype.uses_nursery and j_c is not None
              and cal.nursery_min_childage <= j_c <= cal.nursery_max_childage)
    A2 = A2_gross * (1.0 - cal.fee_rate) if fee_on else A2_gross
    pl_allowed = pl_eligible(j_c, cal, retired)
    if cal.pl_mode == "leave":
        ben = cal.rr_pl * A2_gross * (cal.h_ref - cal.hw_hours_2)
        ben_slope = np.zeros(shape)
    else:
        ben = np.zeros(shape)
        ben_slope = cal.rr_pl * A2_gross
    return A1, A2, ben, ben_slope, pl_allowed, 0.0


def bellman_step(model: HouseholdModel, j: int, k: int, next_value, workers: int = 1):
    """Value and policy at age ``j`` in child state ``k``.

    Returns ``(value, PolicySlice, groups)``; arrays are ``(n_assets, n_zz, n_ee)``.
    States without any feasible choice get value ``-inf`` and policy -1.
    """
    cal = model.cal
    nA, nZ, nE = len(model.asset_grid), model.chain.n, model.iid.n
    groups = time_groups(model, j, k)
    C = continuation_values(model, j, next_value)
    A1, A2, ben, ben_slope, pl_allowed, pen = _income_arrays(model, j, k)
    sh = model.shifters(j, k)
    base_income = (1.0 + cal.r) * model.asset_grid + pen
    n_time = model.grids.n_leisure**2 * model.grids.n_parenting**2

    retired = j >= cal.j_retire
    nz_solve, ne_solve = (1, 1) if retired else (nZ, nE)
    V = np.empty((nA, nz_solve, ne_solve))
    g_out = np.empty((nA, nz_solve, ne_solve), dtype=np.int64)
    pl_out = np.empty((nA, nz_solve, ne_solve), dtype=np.bool_)
    an_out = np.empty((nA, nz_solve, ne_solve), dtype=np.int64)
    args = (model.asset_grid, base_income, A1[:nz_solve, :ne_solve], A2[:nz_solve, :ne_solve],
            ben[:nz_solve, :ne_solve], ben_slope[:nz_solve, :ne_solve],
            groups.m1, groups.m2, groups.utility, groups.tflat, groups.pl_ok,
            bool(pl_allowed), float(np.exp(sh.phi_C)), 1.0 - 1.0 / model.est.eta,
            np.ascontiguousarray(C[:nz_solve]), n_time)
    outs = (V, g_out, pl_out, an_out)
    if workers <= 1 or nz_solve == 1:
        _solve_states(*args, 0, nz_solve, *outs)
    else:
        bounds = np.linspace(0, nz_solve, min(workers, nz_solve) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_solve_states, *args, int(lo), int(hi), *outs)
                    for lo, hi in zip(bounds[:-1], bounds[1:])]
            for f in futs:
                f.result()
    if retired:
        V = np.broadcast_to(V, (nA, nZ, nE)).copy()
        g_out = np.broadcast_to(g_out, (nA, nZ, nE)).copy()
        pl_out = np.broadcast_to(pl_out, (nA, nZ, nE)).copy()
        an_out = np.broadcast_to(an_out, (nA, nZ, nE)).copy()

    ok = g_out >= 0
    gi = np.where(ok, g_out, 0)

    def pick(arr):
        return np.where(ok, arr[gi], -1).astype(np.int16)

    policy = PolicySlice(
        iL1=pick(groups.iL1), iL2=pick(groups.iL2), iT1=pick(groups.iT1), iT2=pick(groups.iT2),
        ia_next=np.where(ok, an_out, -1).astype(np.int16), pl=pl_out & ok,
    )
    return V, policy, groups


@dataclass
class Solution:
    """Value and policy arrays indexed ``(age, child state, asset, z-pair, e-pair)``.

    Entries for the with-child branch before the birth age are NaN / -1.
    ``birth`` is True only at ``(j_birth, CHILDLESS, ...)`` states whose
    household chooses to have the child that year.
    """

    model: HouseholdModel
    value: np.ndarray
    iL1: np.ndarray
    iL2: np.ndarray
    iT1: np.ndarray
    iT2: np.ndarray
    ia_next: np.ndarray
    pl: np.ndarray
    birth: np.ndarray
    birth_mode: str = "choice"

    @property
    def htype(self):
        return self.model.htype

    @property
    def ages(self) -> np.ndarray:
        return self.model.cal.ages

    def valid_mask(self) -> np.ndarray:
        """States that exist: childless at every age, with-child from the birth age."""
        cal = self.model.cal
        mask = np.ones(self.value.shape, dtype=bool)
        mask[: cal.j_birth - cal.j_entry, WITH_CHILD] = False
        return mask

    def birth_slice(self) -> np.ndarray:
        cal = self.model.cal
        return self.birth[cal.j_birth - cal.j_entry, CHILDLESS]

    def birth_dominance_share(self) -> float:
        """Share of (asset, z, e) states at the birth age where the with-child value is higher."""
        cal = self.model.cal
        t = cal.j_birth - cal.j_entry
        return float(np.mean(self.value[t, WITH_CHILD] > self.value[t, CHILDLESS]))

    def to_csv(self, path) -> None:
        """Flat dump: one row per valid state with index tuple, value and choices."""
        cal = self.model.cal
        mask = self.valid_mask()
        idx = np.argwhere(mask)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("age,k,ia,iz,ie,value,iL1,iL2,iT1,iT2,ia_next,pl,birth\n")
            for t, k, ia, iz, ie in idx:
                s = (t, k, ia, iz, ie)
                fh.write(
                    f"{t + cal.j_entry},{k},{ia},{iz},{ie},{float(self.value[s])!r},"
                    f"{self.iL1[s]},{self.iL2[s]},{self.iT1[s]},{self.iT2[s]},"
                    f"{self.ia_next[s]},{int(self.pl[s])},{int(self.birth[s])}\n"
                )

    def to_npz(self, path) -> None:
        np.savez(path, value=self.value, iL1=self.iL1, iL2=self.iL2, iT1=self.iT1,
                 iT2=self.iT2, ia_next=self.ia_next, pl=self.pl, birth=self.birth)


def load_solution_arrays(path) -> dict[str, np.ndarray]:
    with np.load(Path(path)) as data:
        return {k: data[k] for k in data.files}


def solve_lifecycle(model: HouseholdModel, birth_mode: str = "choice", workers: int = 1) -> Solution:
    """Solve one household type by backward induction from ``j_max`` to ``j_entry``.

    ``birth_mode`` is ``"choice"`` (the model's birth decision), ``"always"``
    or ``"never"`` (the latter two build the comparison groups of the child
    penalty).  Results do not depend on ``workers``.
    """
    if birth_mode not in BIRTH_MODES:
        raise ValueError(f"birth_mode must be one of {BIRTH_MODES}")
    cal = model.cal
    nA, nZ, nE = len(model.asset_grid), model.chain.n, model.iid.n
    shape = (cal.n_ages, N_CHILD_STATES, nA, nZ, nE)
    value = np.full(shape, np.nan)
    pols = {name: np.full(shape, -1, dtype=np.int16) for name in ("iL1", "iL2", "iT1", "iT2", "ia_next")}
    pl = np.zeros(shape, dtype=bool)
    birth = np.zeros(shape, dtype=bool)

    next_v = {CHILDLESS: None, WITH_CHILD: None}
    for j in range(cal.j_max, cal.j_entry - 1, -1):
        t = j - cal.j_entry
        branches = (CHILDLESS, WITH_CHILD) if j >= cal.j_birth else (CHILDLESS,)
        for k in branches:
            V, pol, _ = bellman_step(model, j, k, next_v[k], workers=workers)
            value[t, k] = V
            for name in pols:
                pols[name][t, k] = getattr(pol, name)
            pl[t, k] = pol.pl
        if j == cal.j_birth:
            if birth_mode == "choice":
                b = value[t, WITH_CHILD] > value[t, CHILDLESS]
            else:
                b = np.full((nA, nZ, nE), birth_mode == "always")
            birth[t, CHILDLESS] = b
            entering = np.where(b, value[t, WITH_CHILD], value[t, CHILDLESS])
            next_v = {CHILDLESS: entering, WITH_CHILD: None}
        else:
            next_v = {k: value[t, k] for k in branches}
            next_v.setdefault(WITH_CHILD, None)

    n_bad = int(np.sum(np.isneginf(value)))
    if n_bad:
        log.warning("%d states have no feasible choice", n_bad)
    return Solution(model=model, value=value, pl=pl, birth=birth, birth_mode=birth_mode, **pols)
