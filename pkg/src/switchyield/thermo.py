"""Thermal systems, population vectors and beta-ordering.

Energies are dimensionless (already multiplied by the inverse temperature),
so a level at energy ``E`` has Gibbs weight ``exp(-E)``.  The value
``INFINITY`` marks a level that is thermally inaccessible: its weight is
exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

INFINITY = math.inf

# probability normalization slack
TOL_P = 1e-9
# relative slack under which two beta-ratios count as tied
TOL_TIE = 1e-12

# exp(-E) must stay a normal positive double for finite levels
_MAX_FINITE_ENERGY = 700.0

# level labels of the three-level photoisomer
GROUND, CIS, EXCITED = 0, 1, 2


def parse_energy(value) -> float:
    """Convert ``value`` to an energy, accepting ``"inf"`` for INFINITY."""
    if isinstance(value, str):
        token = value.strip().lower()
        if token in ("inf", "+inf", "infinity", "+infinity"):
            return INFINITY
        value = float(token)
    value = float(value)
    if math.isnan(value) or value == -math.inf:
        raise ValueError(f"invalid energy {value!r}")
    return value


def _check_energy(e: float) -> float:
    e = parse_energy(e)
    if e != INFINITY and not (-_MAX_FINITE_ENERGY <= e <= _MAX_FINITE_ENERGY):
        raise ValueError(
            f"finite energy {e} outside [-{_MAX_FINITE_ENERGY}, {_MAX_FINITE_ENERGY}];"
            " use INFINITY for an inaccessible level"
        )
    return e


@dataclass(frozen=True)
class ThermalSystem:
    """Energy levels in units of the inverse temperature."""

    energies: tuple

    def __post_init__(self):
        energies = tuple(_check_energy(e) for e in self.energies)
        if len(energies) < 2:
            raise ValueError("a thermal system needs at least 2 levels")
        if all(e == INFINITY for e in energies):
            raise ValueError("partition function vanishes: every level is at INFINITY")
        object.__setattr__(self, "energies", energies)

    @property
    def n(self) -> int:
        return len(self.energies)

    @property
    def log_weights(self) -> np.ndarray:
        return -np.array(self.energies, dtype=float)

    @property
    def weights(self) -> np.ndarray:
        w = _weights(self.energies)
        w.flags.writeable = False
        return w

    @property
    def log_z(self) -> float:
        lw = self.log_weights
        lw = lw[np.isfinite(lw)]
        top = lw.max()
        return float(top + math.log(np.exp(lw - top).sum()))

    @property
    def partition_function(self) -> float:
        return float(self.weights.sum())

    def is_inaccessible(self, i: int) -> bool:
        return self.energies[i] == INFINITY


def _weights(energies) -> np.ndarray:
    return np.array([0.0 if e == INFINITY else math.exp(-e) for e in energies])


def gibbs_weights(system: Union[ThermalSystem, Sequence[float]]) -> np.ndarray:
    """Return the Gibbs weights ``exp(-E_i)``; INFINITY maps to exactly 0.

    Accepts a bare energy sequence as well, which may then have a single
    level.
    """
    if isinstance(system, ThermalSystem):
        return np.array(system.weights)
    return _weights([_check_energy(e) for e in system])


def gibbs_state(system: ThermalSystem) -> np.ndarray:
    """Thermal populations ``w_i / Z``, normalized in log space."""
    lw = system.log_weights
    out = np.zeros(system.n)
    finite = np.isfinite(lw)
    out[finite] = np.exp(lw[finite] - system.log_z)
    return out


def populations(p, system: Union[ThermalSystem, int, None] = None) -> np.ndarray:
    """Validate and canonicalize a population vector.

    Entries in ``[-TOL_P, 0)`` are clamped to zero and the vector is
    renormalized.  Anything further from a probability vector raises
    ``ValueError``.
    """
    arr = np.array(p, dtype=float).reshape(-1)
    n = system.n if isinstance(system, ThermalSystem) else system
    if n is not None and arr.size != n:
        raise ValueError(f"expected {n} populations, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("populations must be finite")
    if np.any(arr < -TOL_P):
        raise ValueError(f"negative population {arr.min():.3g}")
    total = arr.sum()
    if abs(total - 1.0) > TOL_P:
        raise ValueError(f"populations sum to {total!r}, not 1")
    arr = np.clip(arr, 0.0, None)
    return arr / arr.sum()


def _ratio_keys(p: np.ndarray, system: ThermalSystem):
    # (class, log ratio); class 2: w=0,p>0 ; 1: ordinary ; 0: w=0,p=0
    keys = []
    for i, (pi, e) in enumerate(zip(p, system.energies)):
        if e == INFINITY:
            keys.append((2, math.inf) if pi > 0 else (0, -math.inf))
        else:
            keys.append((1, (math.log(pi) if pi > 0 else -math.inf) + e))
    return keys


def beta_order(p, system: ThermalSystem) -> tuple:
    """Permutation of level indices sorting ``p_i / w_i`` non-increasingly.

    Ratios within a relative ``TOL_TIE`` of each other are treated as tied
    and ordered by ascending level index.
    """
    p = populations(p, system)
    keys = _ratio_keys(p, system)
    rough = sorted(range(system.n), key=lambda i: (-keys[i][0], -keys[i][1], i))
    # regroup near-ties so rounding noise cannot reorder equal ratios
    order, group = [], [rough[0]]
    for i in rough[1:]:
        head = keys[group[0]]
        cls, val = keys[i]
        tied = cls == head[0] and (
            val == head[1] or (math.isfinite(val) and abs(val - head[1]) <= TOL_TIE)
        )
        if tied:
            group.append(i)
        else:
            order.extend(sorted(group))
            group = [i]
    order.extend(sorted(group))
    return tuple(order)


@dataclass(frozen=True)
class PhotoisomerInstance:
    """Three-level photoswitch: ground 0, cis level ``delta``, excited ``w``.

    The initial state after photoexcitation is ``(1 - q, 0, q)``.
    """

    delta: float
    w: float
    q: float

    def __post_init__(self):
        delta, w, q = float(self.delta), parse_energy(self.w), float(self.q)
        if not (math.isfinite(delta) and delta >= 0):
            raise ValueError(f"delta must be a finite non-negative number, got {delta}")
        if w < delta:
            raise ValueError(f"w={w} must be >= delta={delta}")
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"q={q} outside [0, 1]")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "q", q)

    @property
    def system(self) -> ThermalSystem:
        return ThermalSystem((0.0, self.delta, self.w))

    @property
    def initial_state(self) -> np.ndarray:
        return np.array([1.0 - self.q, 0.0, self.q])

    @property
    def w_is_infinite(self) -> bool:
        return self.w == INFINITY

    @property
    def e_delta(self) -> float:
        return math.exp(-self.delta)

    @property
    def e_w(self) -> float:
        return 0.0 if self.w == INFINITY else math.exp(-self.w)
