"""Two-level thermalizations and reachability under Markovian thermal maps.

A partial thermalization of the pair ``(i, j)`` with strength ``lam`` is
``exp(t Q_ij)`` for a two-level detailed-balance generator, with
``lam = 1 - exp(-t)``; ``lam = 1`` is its infinite-time limit (full
thermalization).  Sequences of them are therefore Markovian thermal maps,
and a sequence that reproduces a target state is a constructive proof of
reachability.  Failing to find one proves nothing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .curves import build_curve, curve_eval
from .thermo import (
    CIS,
    EXCITED,
    GROUND,
    PhotoisomerInstance,
    ThermalSystem,
    populations,
)

# L1 distance at which a search endpoint counts as the target
TOL_R = 1e-3
DEFAULT_MAX_STEPS = 6
DEFAULT_LAMBDA_STEP = 0.01
_REFINE_POINTS = 21
_SWEEPS = 3


@dataclass(frozen=True)
class ThermalizationStep:
    pair: tuple
    lam: float = 1.0

    def __post_init__(self):
        i, j = (int(k) for k in self.pair)
        if i == j:
            raise ValueError("a thermalization needs two distinct levels")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda={self.lam} outside [0, 1]")
        object.__setattr__(self, "pair", (i, j))
        object.__setattr__(self, "lam", float(self.lam))

    def to_dict(self) -> dict:
        return {"pair": list(self.pair), "lambda": self.lam}

    @classmethod
    def from_dict(cls, d) -> "ThermalizationStep":
        return cls(tuple(d["pair"]), d.get("lambda", 1.0))


def _pair_weights(system: ThermalSystem, i: int, j: int):
    w = system.weights
    wi, wj = float(w[i]), float(w[j])
    if wi + wj <= 0:
        raise ValueError(f"levels {i} and {j} both have zero Gibbs weight")
    return wi, wj


def full_thermalization(p, i: int, j: int, system: ThermalSystem) -> np.ndarray:
    """Redistribute ``p_i + p_j`` between ``i`` and ``j`` in Gibbs proportion."""
    return partial_thermalization(p, i, j, 1.0, system)


def partial_thermalization(p, i: int, j: int, lam: float, system: ThermalSystem) -> np.ndarray:
    if i == j:
        raise ValueError("a thermalization needs two distinct levels")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda={lam} outside [0, 1]")
    wi, wj = _pair_weights(system, i, j)
    p = populations(p, system)
    out = p.copy()
    total = p[i] + p[j]
    out[i] = (1 - lam) * p[i] + lam * total * wi / (wi + wj)
    out[j] = (1 - lam) * p[j] + lam * total * wj / (wi + wj)
    return out


def apply_steps(p, steps: Sequence[ThermalizationStep], system: ThermalSystem) -> np.ndarray:
    out = populations(p, system)
    for step in steps:
        out = partial_thermalization(out, *step.pair, step.lam, system)
    return out


# ---------------------------------------------------------------------------
# closed-form curves of the photoisomer


def _check_x(x: float, z: float):
    if not -1e-12 <= x <= z * (1 + 1e-12):
        raise ValueError(f"x={x} outside [0, {z}]")


def _require_excited_first(instance: PhotoisomerInstance):
    from .bounds import q_tilde

    if instance.q < q_tilde(instance.w):
        raise ValueError("closed form needs q >= q_tilde (excited level first in beta-order)")


def initial_curve(x: float, instance: PhotoisomerInstance) -> float:
    """Curve of ``(1 - q, 0, q)`` when its beta-order is ``(W, 0, Delta)``."""
    _require_excited_first(instance)
    q, ew, ed = instance.q, instance.e_w, instance.e_delta
    _check_x(x, 1 + ed + ew)
    if x < ew:
        return q * x / ew
    if x <= 1 + ew:
        return q + (1 - q) * (x - ew)
    return 1.0


def thermalized_curve(x: float, instance: PhotoisomerInstance) -> float:
    """Curve after fully thermalizing (0, Delta) and then (W, Delta)."""
    _require_excited_first(instance)
    q, ew, ed = instance.q, instance.e_w, instance.e_delta
    _check_x(x, 1 + ed + ew)
    knee = ed + ew
    if x <= knee:
        return (q + (1 - q) * ed / (1 + ed)) * x / knee
    return min(1.0, q + (1 - q) * (x - ew) / (1 + ed))


def ordering_paths(ordering) -> tuple:
    """Full-thermalization pair sequences bringing the last level to the front.

    For a beta-order ``(a, b, d)`` the adjacent swaps must alternate, which
    leaves two routes: A swaps ``(a, b)``, then ``(a, d)``, then ``(b, d)``;
    B swaps ``(b, d)`` then ``(a, d)``.
    """
    ordering = tuple(int(k) for k in ordering)
    if len(ordering) != 3 or len(set(ordering)) != 3:
        raise ValueError(f"expected an ordering of 3 distinct levels, got {ordering}")
    a, b, d = ordering
    path_a = [(a, b), (a, d), (b, d)]
    path_b = [(b, d), (a, d)]
    return path_a, path_b


def photoisomer_ordering(instance: PhotoisomerInstance) -> tuple:
    """Beta-order of ``(1 - q, 0, q)`` with the empty cis level last."""
    from .bounds import q_tilde

    if instance.q >= q_tilde(instance.w):
        return (EXCITED, GROUND, CIS)
    return (GROUND, EXCITED, CIS)


def path_yield(instance: PhotoisomerInstance, pairs) -> float:
    """Curve value at ``exp(-Delta)`` after full thermalizations along ``pairs``.

    Any state reachable afterwards has cis population at most this value.
    """
    system = instance.system
    steps = [ThermalizationStep(pair) for pair in pairs]
    final = apply_steps(instance.initial_state, steps, system)
    return curve_eval(build_curve(final, system), instance.e_delta)


# ---------------------------------------------------------------------------
# search


@dataclass
class ReachabilityResult:
    """Outcome of a thermalization-sequence search.

    ``reachable`` is one-sided: True comes with a replayable ``witness``;
    False only means nothing was found at the recorded ``resolution``.
    """

    reachable: bool
    witness: Optional[tuple]
    achieved: np.ndarray
    score: float
    resolution: dict = field(default_factory=dict)

    @property
    def message(self) -> str:
        if self.reachable:
            return f"reachable with {len(self.witness)} step(s)"
        r = self.resolution
        return (
            f"not found at resolution max_steps={r.get('max_steps')}, "
            f"lambda_step={r.get('lambda_step')}"
        )

    def to_dict(self) -> dict:
        return {
            "reachable": self.reachable,
            "witness": None if self.witness is None else [s.to_dict() for s in self.witness],
            "achieved": [float(v) for v in self.achieved],
            "score": self.score,
            "resolution": dict(self.resolution),
            "message": self.message,
        }


def pair_sequences(n: int, length: int):
    """All pair sequences of the given length without immediate repeats."""
    pairs = list(itertools.combinations(range(n), 2))

    def extend(prefix):
        if len(prefix) == length:
            yield tuple(prefix)
            return
        for pair in pairs:
            if not prefix or prefix[-1] != pair:
                yield from extend(prefix + [pair])

    yield from extend([])


def _step_batch(states: np.ndarray, pair, lam, w: np.ndarray) -> np.ndarray:
    i, j = pair
    out = states.copy()
    total = states[:, i] + states[:, j]
    share = w[i] / (w[i] + w[j])
    out[:, i] = (1 - lam) * states[:, i] + lam * total * share
    out[:, j] = (1 - lam) * states[:, j] + lam * total * (1 - share)
    return out


def _replay_batch(states, seq, lams, w):
    for pair, lam in zip(seq, lams):
        states = _step_batch(states, pair, lam, w)
    return states


def _local_grid(center: float, step: float) -> np.ndarray:
    lo, hi = max(0.0, center - step), min(1.0, center + step)
    return np.linspace(lo, hi, _REFINE_POINTS)


def _fit_lambdas(p0, seq, objective, grid, w):
    """Greedy per-step choice, then coordinate sweeps on the final objective."""
    lams = np.zeros(len(seq))
    state = p0[None, :]
    for k, pair in enumerate(seq):
        cand = _step_batch(np.repeat(state, len(grid), axis=0), pair, grid, w)
        best = int(np.argmin(objective(cand)))
        lams[k] = grid[best]
        state = cand[best : best + 1]
    value = float(objective(state)[0])

    step = grid[1] - grid[0] if len(grid) > 1 else 1.0
    for _ in range(_SWEEPS):
        improved = False
        for k, pair in enumerate(seq):
            prefix = _replay_batch(p0[None, :], seq[:k], lams[:k], w)
            for trial in (grid, _local_grid(lams[k], step), _local_grid(lams[k], step / 10)):
                here = _step_batch(np.repeat(prefix, len(trial), axis=0), pair, trial, w)
                tail = _replay_batch(here, seq[k + 1 :], lams[k + 1 :], w)
                vals = objective(tail)
                best = int(np.argmin(vals))
                if vals[best] < value - 1e-15:
                    value = float(vals[best])
                    lams[k] = trial[best]
                    improved = True
        if not improved:
            break
    return lams, value


def _search(p0, system, objective: Callable, done: Callable, max_steps, lambda_step):
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    if not 0 < lambda_step <= 1:
        raise ValueError("lambda_step must be in (0, 1]")
    w = system.weights
    grid = np.linspace(0.0, 1.0, int(round(1 / lambda_step)) + 1)
    best_seq, best_lams, best_val = (), np.zeros(0), float(objective(p0[None, :])[0])
    if done(best_val):
        return best_seq, best_lams, best_val
    for seq in pair_sequences(system.n, max_steps):
        # two zero-weight levels cannot be thermalized against each other
        if any(w[i] + w[j] == 0 for i, j in seq):
            continue
        lams, val = _fit_lambdas(p0, seq, objective, grid, w)
        if val < best_val - 1e-15:
            best_seq, best_lams, best_val = seq, lams, val
            if done(val):
                break
    return best_seq, best_lams, best_val


def _witness(seq, lams) -> tuple:
    return tuple(ThermalizationStep(pair, float(lam)) for pair, lam in zip(seq, lams) if lam > 0)


def ctm_reachable(
    p0,
    target,
    system: ThermalSystem,
    max_steps: int = DEFAULT_MAX_STEPS,
    lambda_step: float = DEFAULT_LAMBDA_STEP,
    yield_level: Optional[int] = None,
    tol: float = TOL_R,
) -> ReachabilityResult:
    """Search for a thermalization sequence taking ``p0`` to ``target``.

    By default the endpoint must be within ``tol`` of ``target`` in L1.  With
    ``yield_level`` set, only that coordinate matters: success means some
    reachable state has at least ``target[yield_level]`` there.
    """
    p0 = populations(p0, system)
    target = populations(target, system)
    resolution = {"max_steps": max_steps, "lambda_step": lambda_step, "tol": tol}
    if yield_level is None:
        def objective(states):
            return np.abs(states - target).sum(axis=1)

        def done(val):
            return val <= tol
    else:
        goal = target[yield_level]
        resolution["yield_level"] = yield_level

        def objective(states):
            return -states[:, yield_level]

        def done(val):
            return -val >= goal

    seq, lams, _ = _search(p0, system, objective, done, max_steps, lambda_step)
    witness = _witness(seq, lams)
    achieved = apply_steps(p0, witness, system)
    score = float(objective(achieved[None, :])[0])
    reachable = bool(done(score))
    return ReachabilityResult(reachable, witness if reachable else None, achieved, score, resolution)


def max_yield_search(
    p0,
    system: ThermalSystem,
    level: int = CIS,
    max_steps: int = DEFAULT_MAX_STEPS,
    lambda_step: float = DEFAULT_LAMBDA_STEP,
) -> ReachabilityResult:
    """Largest population of ``level`` found over thermalization sequences."""
    p0 = populations(p0, system)

    def objective(states):
        return -states[:, level]

    seq, lams, _ = _search(p0, system, objective, lambda v: False, max_steps, lambda_step)
    witness = _witness(seq, lams)
    achieved = apply_steps(p0, witness, system)
    return ReachabilityResult(
        True,
        witness,
        achieved,
        float(achieved[level]),
        {"max_steps": max_steps, "lambda_step": lambda_step, "yield_level": level},
    )
