"""Spectra and embeddability of three-level Gibbs-stochastic matrices.

A Gibbs-stochastic matrix is embeddable when it equals ``exp(Q)`` for a
single rate matrix ``Q``.  For 3x3 matrices with real spectrum
``{1, l1, l2}``:

* a zero eigenvalue rules embeddability out;
* a negative eigenvalue is only possible when ``l1 == l2`` (necessary, not
  sufficient, so that case stays undetermined here);
* with ``l1, l2 > 0`` the matrix is embeddable iff every off-diagonal entry
  satisfies ``G_ij >= f(l1, l2) * pi_i``.

Complex spectra are reported as undetermined.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .gibbs_maps import ConstraintError, GibbsStochasticMatrix, validate
from .thermo import ThermalSystem, gibbs_state

# |lambda| below this counts as a zero eigenvalue
TOL_ZERO = 1e-12
# discriminant above -TOL_DISC counts as a real (double) root
TOL_DISC = 1e-13
# two negative eigenvalues closer than this count as equal
TOL_EQUAL = 1e-8
# slack on the entry bound f(l1, l2) * pi_i
TOL_BOUND = 1e-9


@dataclass(frozen=True)
class Spectrum:
    values: tuple
    is_complex: bool

    def __iter__(self):
        return iter(self.values)


def _det3(m) -> float:
    return float(
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )


def spectrum3(m) -> Spectrum:
    """Eigenvalues ``(1, l1, l2)`` of a 3x3 stochastic matrix, ``l1 >= l2``.

    The characteristic polynomial is divided by ``(x - 1)``, leaving
    ``x**2 - (tr - 1) x + det``.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError("spectrum3 needs a 3x3 matrix")
    s = float(np.trace(m)) - 1.0
    p = _det3(m)
    disc = s * s - 4.0 * p
    if disc < -TOL_DISC:
        r = 0.5 * math.sqrt(-disc)
        return Spectrum((1.0, complex(0.5 * s, r), complex(0.5 * s, -r)), True)
    r = math.sqrt(max(disc, 0.0))
    # avoid cancellation: larger-magnitude root first, the other from the product
    big = 0.5 * (s + math.copysign(r, s)) if s != 0 else 0.5 * r
    small = p / big if big != 0 else 0.5 * (s - r)
    l1, l2 = max(big, small), min(big, small)
    return Spectrum((1.0, l1, l2), False)


def _f_from_logs(a: float, b: float) -> float:
    # f with a = ln l1, b = ln l2, via midpoint m and half-gap h:
    #   f = exp(m) m sinh(h)/h - (expm1(a) + expm1(b)) / 2
    # smooth through a == b, where it reduces to l ln l - l + 1
    m = 0.5 * (a + b)
    h = 0.5 * (b - a)
    shc = math.sinh(h) / h if h != 0 else 1.0
    return math.exp(m) * m * shc - 0.5 * (math.expm1(a) + math.expm1(b))


def f_lambda(l1: float, l2: float) -> float:
    """Entry bound ``((l2-1) ln l1 - (l1-1) ln l2) / (ln l2 - ln l1)``.

    Extended by continuity to ``l1 == l2 = l`` as ``l ln l - l + 1``.
    """
    if l1 <= 0 or l2 <= 0:
        raise ValueError(f"f_lambda needs positive arguments, got ({l1}, {l2})")
    if l1 == 1.0 or l2 == 1.0:
        # numerator vanishes; the double root 1 is the continuity limit 0
        return 0.0
    return _f_from_logs(math.log(l1), math.log(l2))


class Embeddability(enum.Enum):
    EMBEDDABLE = "EMBEDDABLE"
    NOT_EMBEDDABLE = "NOT_EMBEDDABLE"
    UNDETERMINED = "UNDETERMINED"


@dataclass(frozen=True)
class EmbeddabilityVerdict:
    status: Embeddability
    clause: Optional[str]
    reason: str
    spectrum: tuple
    f_value: Optional[float] = None

    @property
    def embeddable(self) -> bool:
        return self.status is Embeddability.EMBEDDABLE


def embeddability_check(m, system: Optional[ThermalSystem] = None) -> EmbeddabilityVerdict:
    if isinstance(m, GibbsStochasticMatrix):
        system = system or m.system
        m = m.entries
    m = np.asarray(m, dtype=float)
    if system is None:
        raise ValueError("a ThermalSystem is needed for a bare array")
    if system.n != 3:
        raise ValueError("embeddability is only characterized here for 3 levels")
    check = validate(m, system)
    if not check:
        raise ConstraintError("; ".join(check.problems))

    sp = spectrum3(m)
    values = sp.values
    if sp.is_complex:
        return EmbeddabilityVerdict(
            Embeddability.UNDETERMINED, None, "complex spectrum", values
        )
    _, l1, l2 = values
    if abs(l1) <= TOL_ZERO or abs(l2) <= TOL_ZERO:
        return EmbeddabilityVerdict(
            Embeddability.NOT_EMBEDDABLE, "a", "zero eigenvalue", values
        )
    if l1 < 0 or l2 < 0:
        if abs(l1 - l2) <= TOL_EQUAL:
            return EmbeddabilityVerdict(
                Embeddability.UNDETERMINED,
                "b",
                "equal negative eigenvalues: necessary condition met, not sufficient",
                values,
            )
        return EmbeddabilityVerdict(
            Embeddability.NOT_EMBEDDABLE,
            "b",
            "negative eigenvalue without an equal partner",
            values,
        )

    f = f_lambda(l1, l2)
    pi = gibbs_state(system)
    slack = m - f * pi[:, None]
    np.fill_diagonal(slack, np.inf)
    i, j = np.unravel_index(np.argmin(slack), slack.shape)
    if slack[i, j] < -TOL_BOUND:
        return EmbeddabilityVerdict(
            Embeddability.NOT_EMBEDDABLE,
            "c",
            f"entry ({i}, {j}) = {m[i, j]:.6g} below bound f*pi_{i} = {f * pi[i]:.6g}",
            values,
            f,
        )
    return EmbeddabilityVerdict(
        Embeddability.EMBEDDABLE, "c", "positive spectrum and entry bound satisfied", values, f
    )
