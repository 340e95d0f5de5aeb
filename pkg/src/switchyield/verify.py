"""Numerical verification suites.

Each check compares an implementation against an independent oracle and
reports the measured deviation next to its tolerance.  Suites are grouped
by subject: ``gs3``, ``gs4``, ``markov``, ``embed`` and ``curves``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from . import bounds
from .curves import build_curve, curve_eval, thermomajorizes
from .embedding import TOL_ZERO, Embeddability, embeddability_check, spectrum3
from .gibbs_maps import (
    block_embed_gs3,
    complete_thermalization,
    gs3_from_params,
    gs3_inf_from_params,
    gs4_from_params,
    sample_gs3_batch,
)
from .markov import (
    ThermalizationStep,
    apply_steps,
    initial_curve,
    max_yield_search,
    ordering_paths,
    photoisomer_ordering,
    thermalized_curve,
)
from .rates import exp_rate, thermal_rate_matrix
from .thermo import INFINITY, PhotoisomerInstance, ThermalSystem

GRID_DELTAS = (0.25, 0.5, 1.0, 2.0, 4.0)
GRID_QS = (0.0, 0.1, 0.5, 0.9, 1.0)
EMBED_QS = (0.0, 0.4, 0.7, 1.0)
EMBED_DELTAS = (0.1, 6.0, 25)


def grid_ws(delta: float) -> tuple:
    return (delta, delta + 1.0, delta + 3.0, INFINITY)


def grid_instances(finite_only: bool = False):
    for d in GRID_DELTAS:
        for w in grid_ws(d):
            if finite_only and w == INFINITY:
                continue
            for q in GRID_QS:
                yield PhotoisomerInstance(d, w, q)


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    tolerance: str
    deviation: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        text = (f"[{tag}] criterion {self.criterion}: {self.name} "
                f"(tol {self.tolerance}, measured {self.deviation:.3e}, {self.seconds:.1f}s)")
        return text + (f" -- {self.detail}" if self.detail else "")


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def check_gamma_star_oracle(grid_n: int = 200) -> CheckResult:
    """Closed-form gamma_star against the (g3, g4) grid maximization."""
    worst = 0.0
    excess = -math.inf
    where = ""
    for inst in grid_instances():
        brute = bounds.gamma_star_bruteforce(inst, grid_n)
        exact = bounds.gamma_star(inst)
        if abs(brute - exact) > worst:
            worst = abs(brute - exact)
            where = f"delta={inst.delta}, w={inst.w}, q={inst.q}"
        excess = max(excess, brute - exact)
    ok = worst <= 5e-3 and excess <= 1e-9
    return CheckResult(1, "gamma_star vs brute-force grid", ok, "5e-3 (excess 1e-9)", worst,
                       f"worst at {where}; max excess {excess:.2e}")


@_timed
def check_markov_paths() -> CheckResult:
    worst = 0.0
    count = 0
    for inst in grid_instances(finite_only=True):
        if inst.q < bounds.q_tilde(inst.w):
            continue
        a, b = bounds.gamma_markov_paths(inst)
        worst = max(worst, abs(max(a, b) - bounds.gamma_markov(inst)))
        count += 1
    return CheckResult(2, "best full-thermalization path equals gamma_markov", worst <= 1e-12,
                       "1e-12", worst, f"{count} instances with q >= q_tilde")


@_timed
def check_markov_search() -> CheckResult:
    """Sequence search reaches gamma_markov but never certifies more."""
    deficit = -math.inf
    excess = -math.inf
    for inst in grid_instances(finite_only=True):
        res = max_yield_search(inst.initial_state, inst.system)
        replay = apply_steps(inst.initial_state, res.witness, inst.system)[1]
        gm = bounds.gamma_markov(inst)
        deficit = max(deficit, gm - replay)
        excess = max(excess, replay - gm)
    ok = deficit <= 1e-2 and excess <= 1e-6
    return CheckResult(2, "search yield within [gamma_markov - 1e-2, gamma_markov + 1e-6]", ok,
                       "1e-2 below / 1e-6 above", max(deficit, excess, 0.0),
                       f"max deficit {deficit:.2e}, max excess {excess:.2e}")


@_timed
def check_markov_gap() -> CheckResult:
    smallest = math.inf
    for inst in grid_instances(finite_only=True):
        if 0 < inst.delta < inst.w:
            smallest = min(smallest, bounds.gamma_star(inst) - bounds.gamma_markov(inst))
    spot = PhotoisomerInstance(1.0, 3.0, 0.5)
    spot_gap = bounds.gamma_star(spot) - bounds.gamma_markov(spot)
    ok = smallest > 1e-6 and abs(spot_gap - 0.100) <= 5e-3
    return CheckResult(3, "strict gap gamma_star - gamma_markov", ok, "gap > 1e-6; spot 0.100 +- 5e-3",
                       abs(spot_gap - 0.100), f"smallest gap {smallest:.3e}, spot gap {spot_gap:.6f}")


def _embed_deltas():
    lo, hi, n = EMBED_DELTAS
    return np.linspace(lo, hi, n)


@_timed
def check_embed_approximation(grid_n: int = 400) -> CheckResult:
    worst = 0.0
    where = ""
    for d in _embed_deltas():
        for q in EMBED_QS:
            value = bounds.gamma_embed_optimize(float(d), q, grid_n=grid_n)
            ref = max(q, math.exp(-d) / (1 + math.exp(-d)))
            if abs(value - ref) > worst:
                worst = abs(value - ref)
                where = f"delta={d:.4f}, q={q}: gamma_E={value:.6f} vs {ref:.6f}"
    return CheckResult(4, "gamma_embed vs max(q, gamma_th)", worst <= 1e-2, "1e-2", worst,
                       f"worst at {where}")


def _random_gs4_yields(inst, w_prime, samples, seed):
    yields, _ = bounds.gs4_random_yields(inst, w_prime, samples, seed)
    return float(yields.max())


GS4_INSTANCES = ((1.0, 3.0, 0.5), (0.5, 1.5, 0.02), (2.0, 2.5, 0.9))


@_timed
def check_gs4_reduction(samples: int = 100_000, seed: int = 2024) -> CheckResult:
    excess = -math.inf
    attain = 0.0
    for k, (d, w, q) in enumerate(GS4_INSTANCES):
        inst = PhotoisomerInstance(d, w, q)
        g_star = bounds.gamma_star(inst)
        for j, w_prime in enumerate((w, w + 1.0)):
            best = _random_gs4_yields(inst, w_prime, samples, seed + 10 * k + j)
            excess = max(excess, best - g_star)
            block = block_embed_gs3(bounds.optimal_gs3_params(inst))
            g4 = gs4_from_params(block, d, w, w_prime)
            y = g4.apply([1 - q, 0.0, q, 0.0])[1]
            attain = max(attain, abs(y - g_star))
    ok = excess <= 1e-9 and attain <= 1e-12
    return CheckResult(5, "random GS4 yields never exceed gamma_star; block embedding attains it", ok,
                       "1e-9 / exact (1e-12)", max(excess, 0.0),
                       f"max sampled excess {excess:.3e}, block-embedding error {attain:.1e}")


@_timed
def check_embed_classifier(trials: int = 1000, seed: int = 7) -> CheckResult:
    rng = np.random.default_rng(seed)
    checked = 0
    numerically_zero = 0
    misses = []
    while checked < trials:
        energies = tuple(rng.uniform(0.0, 4.0, 3))
        system = ThermalSystem(energies)
        r = rng.exponential(1.0, (3, 3))
        r = np.triu(r, 1)
        r = r + r.T
        g = exp_rate(thermal_rate_matrix(system, r), float(rng.uniform(0.0, 5.0)))
        sp = spectrum3(g.entries)
        if sp.is_complex or min(sp.values[1:]) <= 0:
            continue
        if min(sp.values[1:]) <= TOL_ZERO:
            # clause (a) territory: excluded from the positive sample, counted below
            numerically_zero += 1
            continue
        checked += 1
        verdict = embeddability_check(g)
        if verdict.status is not Embeddability.EMBEDDABLE:
            misses.append(verdict.reason)
    # rank-deficient and clause (b) matrices
    negatives = []
    system = ThermalSystem((0.0, 1.0, 3.0))
    negatives.append(("complete thermalization", complete_thermalization(system), "a"))
    d = 1.0
    g1_zero = 1.0 / (1.0 + math.exp(-d))
    negatives.append(("zero eigenvalue", gs3_inf_from_params(g1_zero, 0.2, 0.3, d), "a"))
    negatives.append(("one negative eigenvalue", gs3_inf_from_params(0.9, 0.2, 0.3, d), "b"))
    doubly = np.array([[0.1, 0.45, 0.45], [0.45, 0.0, 0.55], [0.45, 0.55, 0.0]])
    negatives.append(("two distinct negative eigenvalues", (doubly, ThermalSystem((0.0, 0.0, 0.0))), "b"))
    wrong = []
    for label, m, clause in negatives:
        verdict = embeddability_check(*m) if isinstance(m, tuple) else embeddability_check(m)
        if verdict.status is not Embeddability.NOT_EMBEDDABLE or verdict.clause != clause:
            wrong.append(f"{label}: {verdict.status.value}/{verdict.clause}")
    ok = not misses and not wrong
    detail = (f"{checked} exp(Qt) matrices, {len(misses)} misclassified, "
              f"{numerically_zero} skipped as numerically singular; negatives wrong: {wrong or 'none'}")
    return CheckResult(6, "embeddability classifier soundness", ok, "exact verdicts",
                       float(len(misses) + len(wrong)), detail)


@_timed
def check_closed_curves(triples: int = 20, seed: int = 11) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    min_gap = math.inf
    for _ in range(triples):
        d = float(rng.uniform(0.0, 4.0))
        w = d + float(rng.uniform(0.0, 4.0))
        qt = bounds.q_tilde(w)
        q = float(rng.uniform(qt, 1.0))
        inst = PhotoisomerInstance(d, w, q)
        system = inst.system
        z = system.partition_function
        curve0 = build_curve(inst.initial_state, system)
        path_b = ordering_paths(photoisomer_ordering(inst))[1]
        after = apply_steps(inst.initial_state, [ThermalizationStep(p) for p in path_b], system)
        curve1 = build_curve(after, system)
        for x in np.linspace(0.0, z, 100):
            x = min(float(x), z)
            f0 = initial_curve(x, inst)
            f1 = thermalized_curve(x, inst)
            worst = max(worst, abs(f0 - curve_eval(curve0, x)), abs(f1 - curve_eval(curve1, x)))
            if 0 < x < z:
                min_gap = min(min_gap, f0 - f1)
    ok = worst <= 1e-12 and min_gap > 0
    return CheckResult(7, "closed-form curves match build_curve; thermalized curve strictly below", ok,
                       "1e-12; gap > 0", worst, f"smallest interior gap {min_gap:.3e}")


@_timed
def check_order_monotonicity(pairs: int = 10_000, seed: int = 5) -> CheckResult:
    rng = np.random.default_rng(seed)
    failures = 0
    per = 100
    done = 0
    while done < pairs:
        d = float(rng.uniform(0.0, 3.0))
        w = d + float(rng.uniform(0.0, 3.0))
        inst = PhotoisomerInstance(d, w, 0.5)
        params = sample_gs3_batch(rng, inst, per)
        for prm in params:
            g = gs3_from_params(prm, inst)
            p = rng.dirichlet(np.ones(3))
            if not thermomajorizes(p, g.apply(p), inst.system):
                failures += 1
        done += per
    return CheckResult(7, "p thermomajorizes G p for random GS3 G", failures == 0, "tol_c 1e-9",
                       float(failures), f"{done} pairs, {failures} failures")


@_timed
def check_sweep_hierarchy(rows=None) -> CheckResult:
    if rows is None:
        lo, hi, n = EMBED_DELTAS
        rows = bounds.sweep_table(lo, hi, n, EMBED_QS, INFINITY)
    worst = -math.inf
    for r in rows:
        chain = (r["gamma_th"], r["gamma_embed"] + 1e-6, r["gamma_markov"] + 2e-6, r["gamma_star"] + 3e-6)
        worst = max(worst, max(a - b for a, b in zip(chain, chain[1:])))
    return CheckResult(8, "hierarchy on the w=inf sweep", worst <= 0, "1e-6 per link",
                       max(worst, 0.0), f"{len(rows)} rows, largest violation {worst:.3e}")


SUITES: Dict[str, List[Callable[[], CheckResult]]] = {
    "gs3": [check_gamma_star_oracle, check_markov_gap],
    "gs4": [check_gs4_reduction],
    "markov": [check_markov_paths, check_markov_search],
    "embed": [check_embed_approximation, check_embed_classifier, check_sweep_hierarchy],
    "curves": [check_closed_curves, check_order_monotonicity],
}


def run_suite(name: str, echo: Callable[[str], None] = print) -> List[CheckResult]:
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join([*SUITES, 'all'])}")
    results = []
    for n in names:
        for check in SUITES[n]:
            res = check()
            echo(res.line())
            results.append(res)
    return results
