"""Thermomajorization curves and the thermomajorization preorder."""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass

import numpy as np

from .thermo import TOL_P, TOL_TIE, ThermalSystem, beta_order, populations

# slack for curve dominance; optimal states sit exactly on curve contact
TOL_C = 1e-9


@dataclass(frozen=True)
class ThermoCurve:
    """Piecewise-linear concave curve through the beta-ordered partial sums.

    ``xs[k]`` is the cumulated Gibbs weight and ``ys[k]`` the cumulated
    population of the first ``k`` beta-ordered levels, with ``xs[0] = ys[0]
    = 0``.  A populated level of zero weight gives a vertical step at 0.
    """

    xs: tuple
    ys: tuple
    order: tuple

    @property
    def elbows(self) -> list:
        return [(x, y) for x, y in zip(self.xs, self.ys)]

    @property
    def z(self) -> float:
        return self.xs[-1]

    def slopes(self) -> list:
        """Slopes of the non-degenerate segments, inf for vertical ones."""
        out = []
        for k in range(1, len(self.xs)):
            dx = self.xs[k] - self.xs[k - 1]
            dy = self.ys[k] - self.ys[k - 1]
            if dx > 0:
                out.append(dy / dx)
            elif dy > 0:
                out.append(np.inf)
        return out

    def __call__(self, x: float) -> float:
        return curve_eval(self, x)

    def to_dict(self) -> dict:
        return {"elbows": [[float(x), float(y)] for x, y in self.elbows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_curve(p, system: ThermalSystem) -> ThermoCurve:
    p = populations(p, system)
    order = beta_order(p, system)
    w = system.weights
    xs, ys = [0.0], [0.0]
    for i in order:
        xs.append(xs[-1] + float(w[i]))
        ys.append(ys[-1] + float(p[i]))
    return ThermoCurve(tuple(xs), tuple(ys), order)


def curve_eval(curve: ThermoCurve, x: float) -> float:
    """Value of the curve at ``x`` in ``[0, Z]``.

    At a vertical step the upper value is returned, which is the one that
    matters for dominance.
    """
    xs, ys = curve.xs, curve.ys
    z = xs[-1]
    slack = 1e-12 * max(1.0, z)
    if not (-slack <= x <= z + slack):
        raise ValueError(f"x={x} outside [0, {z}]")
    if x >= z:
        return ys[-1]
    x = max(x, 0.0)
    k = bisect.bisect_right(xs, x) - 1
    x0, x1 = xs[k], xs[k + 1]
    y0, y1 = ys[k], ys[k + 1]
    if x1 == x0:
        return y1
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def thermomajorizes(p1, p2, system: ThermalSystem, tol: float = TOL_C) -> bool:
    """True iff the curve of ``p1`` lies nowhere below the curve of ``p2``.

    Both curves are concave and piecewise linear, so checking the union of
    their elbow abscissas is enough.
    """
    c1, c2 = build_curve(p1, system), build_curve(p2, system)
    z = min(c1.z, c2.z)
    for x in sorted(set(c1.xs) | set(c2.xs)):
        x = min(x, z)
        if curve_eval(c1, x) < curve_eval(c2, x) - tol:
            return False
    return True


def is_concave(curve: ThermoCurve) -> bool:
    # tied beta-ratios may differ by rounding noise
    s = curve.slopes()
    return all(a == b or a >= b - TOL_TIE * abs(b) for a, b in zip(s, s[1:]))


def endpoints_ok(curve: ThermoCurve, system: ThermalSystem) -> bool:
    return (
        curve.xs[0] == 0.0
        and curve.ys[0] == 0.0
        and abs(curve.z - system.partition_function) <= TOL_P
        and abs(curve.ys[-1] - 1.0) <= TOL_P
    )
