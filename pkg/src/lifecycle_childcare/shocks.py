"""Finite-state approximations of the couple's productivity shocks.

Persistent shocks follow a bivariate AR(1) with correlated innovations and are
discretized with a Tauchen-type product grid whose joint transition masses are
bivariate-normal rectangle probabilities.  Transitory shocks are iid bivariate
normal and discretized along their principal components with Gauss-Hermite
nodes.  All node values are log-productivity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import integrate
from scipy.stats import norm


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_psd(cov: np.ndarray, name: str) -> None:
    if cov.shape != (2, 2):
        raise ValueError(f"{name} must be 2x2, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, atol=0.0, rtol=0.0):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(cov).min() < -1e-14:
        raise ValueError(f"{name} is not positive semi-definite")


@dataclass(frozen=True)
class ShockParams:
    """AR(1) persistence and innovation / transitory covariances (variances)."""

    rho11: float = 0.9
    rho22: float = 0.7
    rho12: float = 0.0
    rho21: float = 0.0
    sigma_eps: tuple[tuple[float, float], tuple[float, float]] = ((0.0303, 0.0027), (0.0027, 0.0382))
    sigma_e: tuple[tuple[float, float], tuple[float, float]] = ((0.1, 0.05), (0.05, 0.1))

    def __post_init__(self):
        for name in ("sigma_eps", "sigma_e"):
            m = tuple(tuple(float(v) for v in row) for row in getattr(self, name))
            object.__setattr__(self, name, m)
            _check_psd(np.array(m), name)
        if abs(self.rho11) >= 1 or abs(self.rho22) >= 1:
            raise ValueError("own persistence must satisfy |rho| < 1")


@dataclass(frozen=True)
class MarkovChain:
    nodes: np.ndarray  # (n, 2) log-productivity pairs
    transition: np.ndarray  # (n, n), rows sum to one
    stationary: np.ndarray  # (n,)

    @property
    def n(self) -> int:
        return len(self.stationary)


@dataclass(frozen=True)
class DiscreteDistribution:
    nodes: np.ndarray  # (n, 2)
    probs: np.ndarray  # (n,)

    @property
    def n(self) -> int:
        return len(self.probs)


def _interval_prob(a: float, b: float, sd: float) -> float:
    if sd == 0.0:
        return 1.0 if a < 0.0 <= b else 0.0
    # upper tail for positive bounds keeps precision in the far tail
    if a >= 0.0:
        return float(norm.sf(a / sd) - norm.sf(b / sd))
    return float(norm.cdf(b / sd) - norm.cdf(a / sd))


def rectangle_prob(lo, hi, cov) -> float:
    """P(lo < X < hi) for X ~ N(0, cov) in two dimensions.

    Integrates the first coordinate against the conditional distribution of
    the second.  Degenerate (zero-variance) directions are handled exactly.
    """
    (a1, a2), (b1, b2) = lo, hi
    s11, s12, s22 = cov[0][0], cov[0][1], cov[1][1]
    if s11 == 0.0:
        return _interval_prob(a1, b1, 0.0) * _interval_prob(a2, b2, np.sqrt(s22))
    sd1 = np.sqrt(s11)
    slope = s12 / s11
    cond_var = max(s22 - s12 * slope, 0.0)
    if cond_var <= 1e-15 * max(s22, 1e-300):
        # X2 = slope * X1 exactly: intersect the two intervals in X1 space
        if slope == 0.0:
            return _interval_prob(a1, b1, sd1) * _interval_prob(a2, b2, 0.0)
        lo2, hi2 = sorted((a2 / slope, b2 / slope))
        lo_x, hi_x = max(a1, lo2), min(b1, hi2)
        return _interval_prob(lo_x, hi_x, sd1) if hi_x > lo_x else 0.0
    sdc = np.sqrt(cond_var)

    def integrand(x):
        m = slope * x
        return norm.pdf(x / sd1) / sd1 * _interval_prob(a2 - m, b2 - m, sdc)

    val, _ = integrate.quad(integrand, a1, b1, epsabs=1e-15, epsrel=1e-13, limit=200)
    return max(val, 0.0)


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = np.linalg.solve(A, rhs)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _bin_edges(nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mid = 0.5 * (nodes[1:] + nodes[:-1])
    lo = np.concatenate(([-np.inf], mid))
    hi = np.concatenate((mid, [np.inf]))
    return lo, hi


def default_width(n: int) -> float:
    return float(np.sqrt(max(n - 1, 1)))


def discretize_var(params: ShockParams, n_per_dim: int, width: float | None = None) -> MarkovChain:
    """Joint Markov chain on ``n_per_dim**2`` nodes for the persistent shocks.

    Node index ``iz = i1 * n_per_dim + i2``.  Each dimension has an evenly
    spaced grid on ``+/- width`` stationary standard deviations; the joint
    transition assigns the bivariate-normal innovation mass of each rectangle
    of bins, so the innovation covariance carries into the chain.
    """
    if params.rho12 != 0 or params.rho21 != 0:
        raise ValueError("nonzero cross-persistence is not supported")
    if n_per_dim < 1:
        raise ValueError("n_per_dim must be >= 1")
    width = default_width(n_per_dim) if width is None else float(width)
    cov = np.array(params.sigma_eps)
    rho = (params.rho11, params.rho22)

    grids, edges = [], []
    for d in range(2):
        sd_stat = np.sqrt(cov[d, d] / (1.0 - rho[d] ** 2))
        g = np.linspace(-width * sd_stat, width * sd_stat, n_per_dim) if n_per_dim > 1 else np.zeros(1)
        grids.append(g)
        edges.append(_bin_edges(g) if n_per_dim > 1 else (np.array([-np.inf]), np.array([np.inf])))

    n = n_per_dim**2
    nodes = np.array([(grids[0][i1], grids[1][i2]) for i1 in range(n_per_dim) for i2 in range(n_per_dim)])
    P = np.empty((n, n))
    for s, (z1, z2) in enumerate(nodes):
        mean = (rho[0] * z1, rho[1] * z2)
        for t in range(n):
            j1, j2 = divmod(t, n_per_dim)
            lo = (edges[0][0][j1] - mean[0], edges[1][0][j2] - mean[1])
            hi = (edges[0][1][j1] - mean[0], edges[1][1][j2] - mean[1])
            P[s, t] = rectangle_prob(lo, hi, cov)
    P /= P.sum(axis=1, keepdims=True)
    return MarkovChain(_frozen(nodes), _frozen(P), _frozen(stationary_distribution(P)))


def discretize_iid(sigma_e, n_per_dim: int) -> DiscreteDistribution:
    """Discrete approximation of iid ``N(0, sigma_e)`` on ``n_per_dim**2`` nodes.

    The two principal components get Gauss-Hermite nodes and weights (exact
    variance for ``n_per_dim >= 2``); the product grid is rotated back to the
    spouse coordinates.  A zero-variance component puts all its mass on the
    center node.
    """
    cov = np.asarray(sigma_e, dtype=float)
    _check_psd(cov, "sigma_e")
    lam, Q = np.linalg.eigh(cov)
    # fix eigenvector signs so the output is reproducible
    for c in range(2):
        if Q[np.argmax(np.abs(Q[:, c])), c] < 0:
            Q[:, c] *= -1
    comps = []
    for c in range(2):
        x, w = hermegauss(n_per_dim) if n_per_dim > 1 else (np.zeros(1), np.ones(1))
        w = w / w.sum()
        if lam[c] <= 1e-14:
            x = np.zeros(n_per_dim)
            if n_per_dim % 2 == 1:
                w = np.zeros(n_per_dim)
                w[n_per_dim // 2] = 1.0
        else:
            x = x * np.sqrt(lam[c])
        comps.append((x, w))
    nodes, probs = [], []
    for i1 in range(n_per_dim):
        for i2 in range(n_per_dim):
            u = np.array([comps[0][0][i1], comps[1][0][i2]])
            nodes.append(Q @ u)
            probs.append(comps[0][1][i1] * comps[1][1][i2])
    probs = np.array(probs)
    return DiscreteDistribution(_frozen(nodes), _frozen(probs / probs.sum()))


def productivity_multiplier(z, e, spouse: int) -> float:
    """``exp(z + e)`` for spouse 1 (husband) or 2 (wife)."""
    i = spouse - 1
    return float(np.exp(z[i] + e[i]))


def chain_autocorrelation(chain: MarkovChain, dim: int) -> float:
    """First-order autocorrelation of one coordinate under the stationary law."""
    x = chain.nodes[:, dim]
    pi = chain.stationary
    mean = pi @ x
    var = pi @ (x - mean) ** 2
    if var == 0:
        return 0.0
    cov = (pi * (x - mean)) @ chain.transition @ (x - mean)
    return float(cov / var)


def simulate_chain(chain: MarkovChain, n_steps: int, seed: int = 0) -> np.ndarray:
    """Sample path of node indices, started from the stationary law."""
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(chain.transition, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random(n_steps)
    path = np.empty(n_steps, dtype=np.int64)
    s = int(rng.choice(chain.n, p=chain.stationary))
    for t in range(n_steps):
        s = int(np.searchsorted(cdf[s], u[t], side="right"))
        path[t] = s
    return path


@dataclass(frozen=True)
class ShockSystem:
    persistent: MarkovChain
    transitory: DiscreteDistribution


@lru_cache(maxsize=32)
def build_shock_system(params: ShockParams, n_z: int, n_e: int, width: float | None = None) -> ShockSystem:
    return ShockSystem(discretize_var(params, n_z, width), discretize_iid(params.sigma_e, n_e))
