"""Photoisomerization yield bounds.

For the photoisomer ``(1 - q, 0, q)`` on levels ``(0, Delta, W)`` the module
provides the closed-form optima under thermal (``gamma_star``) and
Markovian thermal (``gamma_markov``) operations, the numerically optimized
embeddable yield in the ``W -> INFINITY`` limit, and brute-force or
optimization oracles that check each of them independently.
"""

from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import linprog, minimize

from .gibbs_maps import (
    GS3Params,
    GS4Params,
    gs4_from_params,
    gs4_matrix,
    gs4_param_array,
    gs4_system,
    sample_gibbs_stochastic,
)
from .markov import ordering_paths, path_yield, photoisomer_ordering
from .thermo import CIS, INFINITY, PhotoisomerInstance, gibbs_state, parse_energy


def q_tilde(w: float) -> float:
    """Excitation threshold ``1 / (1 + e^W)`` above which W leads the beta-order."""
    w = parse_energy(w)
    if w == INFINITY:
        return 0.0
    return math.exp(-w) / (1.0 + math.exp(-w))


def gamma_th(instance: PhotoisomerInstance) -> float:
    """Equilibrium cis population ``e^-Delta / Z``."""
    ed, ew = instance.e_delta, instance.e_w
    return ed / (1.0 + ed + ew)


def yield_of_gs3(params: GS3Params, instance: PhotoisomerInstance) -> float:
    q, ed, ew = instance.q, instance.e_delta, instance.e_w
    return (1 - q) * ed * (1 - params.g3) + ((1 + ew) * q - ew) * params.g4


def gamma_star(instance: PhotoisomerInstance) -> float:
    q, ed, ew = instance.q, instance.e_delta, instance.e_w
    if q >= q_tilde(instance.w):
        return q + (1 - q) * (ed - ew)
    return (1 - q) * ed


def optimal_gs3_params(instance: PhotoisomerInstance) -> GS3Params:
    """A GS3 parametrization attaining ``gamma_star``."""
    return GS3Params(1.0, 0.0, 0.0, 1.0 if instance.q >= q_tilde(instance.w) else 0.0)


def gamma_star_bruteforce(instance: PhotoisomerInstance, grid_n: int = 200) -> float:
    """Maximize the GS3 yield over a ``grid_n x grid_n`` grid of (g3, g4).

    A grid point is kept when some (g1, g2) in the unit box completes it to
    a valid matrix.  With ``s = g1 e^-D + g2 e^-W`` the remaining entry
    constraints read ``L <= s <= 1`` where ``L = (1-g3) e^-D - g4 e^-W``,
    while ``s`` ranges over ``[0, (1-g3) e^-D + (1-g4) e^-W]``.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    q, ed, ew = instance.q, instance.e_delta, instance.e_w
    g = np.linspace(0.0, 1.0, grid_n)
    g3, g4 = np.meshgrid(g, g, indexing="ij")
    low = (1 - g3) * ed - g4 * ew
    s_max = (1 - g3) * ed + (1 - g4) * ew
    feasible = (low >= 0) & (np.maximum(low, 0.0) <= np.minimum(1.0, s_max))
    values = (1 - q) * ed * (1 - g3) + ((1 + ew) * q - ew) * g4
    return float(values[feasible].max())


def gamma_markov(instance: PhotoisomerInstance) -> float:
    q, ed, ew = instance.q, instance.e_delta, instance.e_w
    if q >= q_tilde(instance.w):
        return (q + (1 - q) * ed / (1 + ed)) * ed / (ed + ew)
    return (1 - q * ew / (ew + ed)) * ed / (1 + ed)


def gamma_markov_paths(instance: PhotoisomerInstance) -> tuple:
    """Yield bounds reached by the two full-thermalization routes (A, B)."""
    path_a, path_b = ordering_paths(photoisomer_ordering(instance))
    return path_yield(instance, path_a), path_yield(instance, path_b)


# ---------------------------------------------------------------------------
# embeddable yield, W -> INFINITY


def _f_logs(a, b):
    # vectorized twin of embedding._f_from_logs
    m = 0.5 * (a + b)
    h = 0.5 * (b - a)
    with np.errstate(invalid="ignore", divide="ignore"):
        shc = np.where(h == 0, 1.0, np.sinh(h) / np.where(h == 0, 1.0, h))
    return np.exp(m) * m * shc - 0.5 * (np.expm1(a) + np.expm1(b))


def f_k(k1: float, k2: float) -> float:
    """``(k1 ln(1-k2) - k2 ln(1-k1)) / (ln(1-k2) - ln(1-k1))`` on ``[0, 1)^2``.

    Continuous through ``k1 == k2``; zero when either argument is zero.
    """
    if not (0 <= k1 < 1 and 0 <= k2 < 1):
        raise ValueError(f"f_k needs arguments in [0, 1), got ({k1}, {k2})")
    if k1 == 0 or k2 == 0:
        return 0.0
    return float(_f_logs(math.log1p(-k1), math.log1p(-k2)))


def _f_k_array(k1, k2):
    out = _f_logs(np.log1p(-k1), np.log1p(-k2))
    return np.where((k1 == 0) | (k2 == 0), 0.0, out)


class EmbedOptimum(NamedTuple):
    value: float
    k1: float
    k2: float
    k3: float


@functools.lru_cache(maxsize=8)
def _f_grid(grid_n: int, k_max: float):
    k = np.linspace(0.0, k_max, grid_n)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    f = _f_k_array(k1, k2)
    for arr in (k1, k2, f):
        arr.flags.writeable = False
    return k1, k2, f


def _embed_objective(k1, k2, f, delta: float, q: float):
    """Yield with k3 at its smallest admissible value; -inf where infeasible.

    The yield falls with k3, so k3 sits on ``max(-1, 2f/Z - k2)``.
    """
    ed = math.exp(-delta)
    z = 1.0 + ed
    g_th = ed / z
    k3 = np.maximum(-1.0, 2 * f / z - k2)
    feasible = (k3 <= k2 - 2 * f * ed / z) & (k1 >= f)
    value = (1 - q) * g_th * k1 + 0.5 * q * (k2 - k3)
    return np.where(feasible, value, -np.inf), k3


def embed_argmax(delta: float, q: float, grid_n: int = 400, k_max: float = 1 - 1e-6,
                 refine: bool = True) -> EmbedOptimum:
    """Optimal embeddable yield and its (k1, k2, k3) for ``W = INFINITY``.

    Here ``k1 = (1 + e^-D) g1``, ``k2 = g2 + g4`` and ``k3 = g2 - g4`` for
    the limiting three-level matrix with entries ``g1, g2, g4``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    k1, k2, f = _f_grid(grid_n, k_max)
    values, k3 = _embed_objective(k1, k2, f, delta, q)
    idx = np.unravel_index(np.argmax(values), values.shape)
    best = EmbedOptimum(float(values[idx]), float(k1[idx]), float(k2[idx]), float(k3[idx]))
    if not refine:
        return best

    def neg(x):
        a, b = np.clip(x, 0.0, k_max)
        val, _ = _embed_objective(a, b, _f_k_array(a, b), delta, q)
        return -float(val) if np.isfinite(val) else 1e3

    res = minimize(
        neg,
        x0=[best.k1, best.k2],
        method="Nelder-Mead",
        bounds=[(0.0, k_max), (0.0, k_max)],
        options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000},
    )
    a, b = (float(v) for v in np.clip(res.x, 0.0, k_max))
    val, k3r = _embed_objective(a, b, _f_k_array(a, b), delta, q)
    if np.isfinite(val) and float(val) > best.value:
        best = EmbedOptimum(float(val), a, b, float(k3r))
    return best


def gamma_embed_optimize(delta: float, q: float, grid_n: int = 400, k_max: float = 1 - 1e-6,
                         refine: bool = True) -> float:
    return embed_argmax(delta, q, grid_n, k_max, refine).value


def embed_matrix_params(opt: EmbedOptimum, delta: float) -> tuple:
    """(g1, g2, g4) of the limiting matrix realizing an embeddable optimum."""
    z = 1.0 + math.exp(-delta)
    return opt.k1 / z, 0.5 * (opt.k2 + opt.k3), 0.5 * (opt.k2 - opt.k3)


# ---------------------------------------------------------------------------
# four-level model


def _gs4_yields(instance: PhotoisomerInstance, w_prime: float, mats: np.ndarray) -> np.ndarray:
    p = np.array([1 - instance.q, 0.0, instance.q, 0.0])
    return mats[:, CIS, :] @ p


def gs4_random_yields(instance: PhotoisomerInstance, w_prime: float, samples: int, seed=0):
    """Yields of random valid GS4 matrices, rebuilt from their (g1..g9).

    Returns ``(yields, params)``; every matrix passed the entry, column and
    Gibbs checks.
    """
    system = gs4_system(instance.delta, instance.w, w_prime)
    mats = sample_gibbs_stochastic(system, samples, rng=seed)
    params = gs4_param_array(mats)
    rebuilt = gs4_matrix(params, instance.e_delta, instance.e_w, math.exp(-w_prime))
    pi = gibbs_state(system)
    ok = (
        (rebuilt.min(axis=(1, 2)) >= -1e-12)
        & (np.abs(rebuilt.sum(axis=1) - 1).max(axis=1) <= 1e-9)
        & (np.abs(rebuilt @ pi - pi).max(axis=1) <= 1e-9)
        & (params.min(axis=1) >= -1e-12)
        & (params.max(axis=1) <= 1 + 1e-12)
    )
    if not ok.all():
        raise ArithmeticError(f"{(~ok).sum()} sampled GS4 matrices failed validation")
    return _gs4_yields(instance, w_prime, rebuilt), params


def gs4_lp_optimum(instance: PhotoisomerInstance, w_prime: float):
    """Best GS4 yield by linear programming over couplings.

    ``G`` is Gibbs-stochastic iff ``J = G diag(pi)`` is non-negative with
    both marginals ``pi``; the yield is linear in ``J``.  The LP solution is
    rescaled onto the exact marginals before it is turned back into a
    validated matrix.
    """
    w_prime = parse_energy(w_prime)
    if instance.w_is_infinite or w_prime == INFINITY:
        raise ValueError("the four-level LP needs finite W and W'")
    system = gs4_system(instance.delta, instance.w, w_prime)
    pi = gibbs_state(system)
    n = 4
    p = np.array([1 - instance.q, 0.0, instance.q, 0.0])
    cost = np.zeros((n, n))
    cost[CIS, :] = -p / pi
    a_eq = np.zeros((2 * n, n * n))
    for i in range(n):
        a_eq[i, i * n : (i + 1) * n] = 1.0
        a_eq[n + i, i::n] = 1.0
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=np.concatenate([pi, pi]), bounds=(0, None),
                  method="highs")
    if not res.success:
        raise ArithmeticError(f"GS4 linear program failed: {res.message}")
    joint = np.clip(res.x.reshape(n, n), 0.0, None)
    for _ in range(200):
        joint *= (pi / joint.sum(axis=1))[:, None]
        joint *= pi / joint.sum(axis=0)
    params = GS4Params(*map(float, np.clip(gs4_param_array(joint / pi), 0.0, 1.0)))
    g = gs4_from_params(params, instance.delta, instance.w, w_prime)
    return float(g.apply(p)[CIS]), params


def gamma_star_gs4_bound(instance: PhotoisomerInstance, w_prime: float, samples: int = 10_000,
                         seed=0) -> float:
    """Best four-level yield over random samples and the LP optimum."""
    w_prime = parse_energy(w_prime)
    if w_prime < instance.w:
        raise ValueError("w_prime must be >= w")
    yields, _ = gs4_random_yields(instance, w_prime, samples, seed)
    best = float(yields.max())
    lp_value, _ = gs4_lp_optimum(instance, w_prime)
    return max(best, lp_value)


# ---------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class YieldReport:
    delta: float
    w: float
    q: float
    gamma_star: float
    gamma_markov: float
    gamma_embed: Optional[float]
    gamma_th: float
    q_tilde: float
    excited_first: bool
    gap_star_markov: float
    gap_markov_embed: Optional[float]

    def hierarchy_ok(self, tol: float = 1e-6) -> bool:
        chain = [self.gamma_th]
        if self.gamma_embed is not None:
            chain.append(self.gamma_embed)
        chain += [self.gamma_markov, self.gamma_star]
        return all(a <= b + tol for a, b in zip(chain, chain[1:]))

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.w == INFINITY:
            d["w"] = "inf"
        return d


SWEEP_COLUMNS = ("delta", "q", "w", "gamma_star", "gamma_markov", "gamma_embed", "gamma_th")
BOUND_NAMES = ("gamma_star", "gamma_markov", "gamma_embed", "gamma_th")


def sweep_cell(delta: float, q: float, w: float, outputs=BOUND_NAMES, embed_grid: int = 400) -> dict:
    """One sweep row; bounds not requested (or unavailable) are None."""
    inst = PhotoisomerInstance(delta, w, q)
    row = {"delta": delta, "q": q, "w": inst.w}
    row["gamma_star"] = gamma_star(inst) if "gamma_star" in outputs else None
    row["gamma_markov"] = gamma_markov(inst) if "gamma_markov" in outputs else None
    row["gamma_th"] = gamma_th(inst) if "gamma_th" in outputs else None
    row["gamma_embed"] = None
    if "gamma_embed" in outputs:
        if not inst.w_is_infinite:
            raise ValueError("gamma_embed is only available for w = inf")
        row["gamma_embed"] = gamma_embed_optimize(delta, q, grid_n=embed_grid)
    return row


def sweep_table(delta_min: float, delta_max: float, steps: int, q_list, w,
                outputs=BOUND_NAMES, embed_grid: int = 400, workers: int = 1) -> list:
    """Rows over a linear delta grid (delta-major, then ``q_list`` order)."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if delta_min > delta_max:
        raise ValueError("delta_min must not exceed delta_max")
    w = parse_energy(w)
    cells = [(float(d), float(q)) for d in np.linspace(delta_min, delta_max, steps) for q in q_list]
    job = functools.partial(_sweep_job, w=w, outputs=tuple(outputs), embed_grid=embed_grid)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, cells, chunksize=max(1, len(cells) // (4 * workers))))
    return [job(c) for c in cells]


def _sweep_job(cell, w, outputs, embed_grid):
    return sweep_cell(cell[0], cell[1], w, outputs, embed_grid)


def report(instance: PhotoisomerInstance, embed_grid: int = 400) -> YieldReport:
    """All bounds for one instance; the embeddable yield only at W = INFINITY."""
    g_star = gamma_star(instance)
    g_markov = gamma_markov(instance)
    g_embed = None
    if instance.w_is_infinite and instance.delta > 0:
        g_embed = gamma_embed_optimize(instance.delta, instance.q, grid_n=embed_grid)
    return YieldReport(
        delta=instance.delta,
        w=instance.w,
        q=instance.q,
        gamma_star=g_star,
        gamma_markov=g_markov,
        gamma_embed=g_embed,
        gamma_th=gamma_th(instance),
        q_tilde=q_tilde(instance.w),
        excited_first=instance.q >= q_tilde(instance.w),
        gap_star_markov=g_star - g_markov,
        gap_markov_embed=None if g_embed is None else g_markov - g_embed,
    )
