"""Thermal rate matrices and their exponentials."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gibbs_maps import TOL_COL, TOL_M, GibbsStochasticMatrix
from .thermo import ThermalSystem, gibbs_state

# Taylor order after scaling to norm <= 1/2; remainder below 0.5**19 / 19!
_TAYLOR_TERMS = 18


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Generator ``Q`` of ``dp/dt = Q p`` with the Gibbs state in its kernel."""

    entries: np.ndarray
    system: ThermalSystem

    def __post_init__(self):
        q = np.array(self.entries, dtype=float)
        n = self.system.n
        if q.shape != (n, n):
            raise ValueError(f"rate matrix shape {q.shape} does not match {n} levels")
        scale = max(1.0, float(np.abs(q).max()))
        off = q[~np.eye(n, dtype=bool)]
        if np.any(off < -TOL_M * scale):
            raise ValueError("off-diagonal rates must be non-negative")
        if np.abs(q.sum(axis=0)).max() > 1e-12 * scale:
            raise ValueError("columns of a rate matrix must sum to 0")
        if np.abs(q @ gibbs_state(self.system)).max() > 1e-12 * scale:
            raise ValueError("Gibbs state is not stationary under Q")
        q.flags.writeable = False
        object.__setattr__(self, "entries", q)


def thermal_rate_matrix(system: ThermalSystem, base_rates) -> RateMatrix:
    """Detailed-balance generator ``Q_ij = r_ij w_i`` for ``i != j``.

    ``base_rates`` must be symmetric and non-negative; its diagonal is
    ignored.  Detailed balance ``Q_ij w_j = Q_ji w_i`` holds by construction.
    """
    r = np.array(base_rates, dtype=float)
    n = system.n
    if r.shape != (n, n):
        raise ValueError(f"base rates shape {r.shape} does not match {n} levels")
    if np.any(r < 0):
        raise ValueError("base rates must be non-negative")
    if not np.allclose(r, r.T, rtol=0, atol=1e-14 * max(1.0, np.abs(r).max())):
        raise ValueError("base rates must be symmetric")
    r = 0.5 * (r + r.T)
    np.fill_diagonal(r, 0.0)
    q = r * system.weights[:, None]
    q[np.diag_indices(n)] = -q.sum(axis=0)
    return RateMatrix(q, system)


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a truncated Taylor series."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    norm = np.abs(a).sum(axis=0).max()
    squarings = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    x = a / 2.0**squarings
    out = np.eye(n)
    term = np.eye(n)
    for k in range(1, _TAYLOR_TERMS + 1):
        term = term @ x / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def exp_rate(q: RateMatrix, t: float = 1.0) -> GibbsStochasticMatrix:
    """``exp(Q t)`` as a validated Gibbs-stochastic matrix."""
    if t < 0:
        raise ValueError("t must be non-negative")
    g = expm(np.asarray(q.entries) * t)
    if np.abs(g.sum(axis=0) - 1.0).max() > TOL_COL:
        raise ArithmeticError("matrix exponential lost stochasticity")
    g[(g < 0) & (g >= -TOL_M)] = 0.0
    g = g / g.sum(axis=0)
    return GibbsStochasticMatrix.from_array(g, q.system)
