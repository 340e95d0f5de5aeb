"""Gibbs-stochastic matrices: construction, validation and sampling.

Matrices act on population column vectors, ``q = G @ p``, so every column
sums to one and the Gibbs vector is a fixed point.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import astuple, dataclass, field

import numpy as np

from .thermo import INFINITY, PhotoisomerInstance, ThermalSystem, gibbs_state, parse_energy

# entries above -TOL_M are clamped to zero
TOL_M = 1e-12
# column sums and Gibbs fixed point
TOL_COL = 1e-9

MAX_REJECTIONS = 10**6


class ConstraintError(ValueError):
    """A matrix or parameter set violates a Gibbs-stochastic constraint."""


class SamplerError(RuntimeError):
    """Rejection sampling gave up on a degenerate instance."""


@dataclass
class Validation:
    ok: bool
    problems: list = field(default_factory=list)
    max_column_error: float = 0.0
    max_gibbs_error: float = 0.0
    min_entry: float = 0.0

    def __bool__(self):
        return self.ok


def validate(m, system: ThermalSystem) -> Validation:
    """Check non-negativity, column sums and the Gibbs fixed point."""
    m = np.asarray(m, dtype=float)
    problems = []
    if m.shape != (system.n, system.n):
        return Validation(False, [f"shape {m.shape} does not match {system.n} levels"])
    if not np.all(np.isfinite(m)):
        return Validation(False, ["non-finite entries"])
    min_entry = float(m.min())
    if min_entry < -TOL_M:
        i, j = np.unravel_index(np.argmin(m), m.shape)
        problems.append(f"negative entry ({i}, {j}) = {min_entry:.3g}")
    col_err = float(np.abs(m.sum(axis=0) - 1.0).max())
    if col_err > TOL_COL:
        j = int(np.argmax(np.abs(m.sum(axis=0) - 1.0)))
        problems.append(f"column {j} sums to {m[:, j].sum()!r}")
    g = gibbs_state(system)
    gibbs_err = float(np.abs(m @ g - g).max())
    if gibbs_err > TOL_COL:
        problems.append(f"Gibbs state not fixed (max deviation {gibbs_err:.3g})")
    return Validation(not problems, problems, col_err, gibbs_err, min_entry)


@dataclass(frozen=True, eq=False)
class GibbsStochasticMatrix:
    entries: np.ndarray
    system: ThermalSystem

    @classmethod
    def from_array(cls, m, system: ThermalSystem) -> "GibbsStochasticMatrix":
        m = np.array(m, dtype=float)
        check = validate(m, system)
        if not check:
            raise ConstraintError("; ".join(check.problems))
        m[m < 0] = 0.0
        m.flags.writeable = False
        return cls(m, system)

    @property
    def n(self) -> int:
        return self.system.n

    def apply(self, p) -> np.ndarray:
        return self.entries @ np.asarray(p, dtype=float)

    def __matmul__(self, other):
        if isinstance(other, GibbsStochasticMatrix):
            return GibbsStochasticMatrix.from_array(self.entries @ other.entries, self.system)
        return self.apply(other)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)

    def to_dict(self) -> dict:
        return {
            "energies": [_energy_json(e) for e in self.system.energies],
            "matrix": self.entries.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _energy_json(e):
    return "inf" if e == INFINITY else e


def load_matrix(doc) -> GibbsStochasticMatrix:
    """Read ``{"energies": [...], "matrix": [[...], ...]}`` (row-major)."""
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    try:
        energies = [parse_energy(e) for e in doc["energies"]]
        matrix = np.array(doc["matrix"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix document: {exc}") from exc
    if matrix.ndim != 2:
        raise ValueError("matrix must be a 2-d array")
    return GibbsStochasticMatrix.from_array(matrix, ThermalSystem(tuple(energies)))


def complete_thermalization(system: ThermalSystem) -> GibbsStochasticMatrix:
    """The map sending every state to the Gibbs state."""
    g = gibbs_state(system)
    return GibbsStochasticMatrix.from_array(np.tile(g[:, None], (1, system.n)), system)


# ---------------------------------------------------------------------------
# three levels


@dataclass(frozen=True)
class GS3Params:
    g1: float
    g2: float
    g3: float
    g4: float

    def constraints(self, e_delta: float, e_w: float) -> dict:
        """Entries of the generic matrix that must be non-negative."""
        g1, g2, g3, g4 = astuple(self)
        return {
            "G[0,0] = 1 - g1 e^-D - g2 e^-W": 1 - g1 * e_delta - g2 * e_w,
            "G[1,0] = (1 - g3) e^-D - g4 e^-W": (1 - g3) * e_delta - g4 * e_w,
            "G[2,0] = (g2 + g4) e^-W - (1 - g1 - g3) e^-D": (g2 + g4) * e_w
            - (1 - g1 - g3) * e_delta,
            "G[2,1] = 1 - g1 - g3": 1 - g1 - g3,
            "G[2,2] = 1 - g2 - g4": 1 - g2 - g4,
        }


def gs3_matrix(g1, g2, g3, g4, e_delta, e_w) -> np.ndarray:
    """Generic three-level Gibbs-stochastic matrix; broadcasts over params."""
    g1, g2, g3, g4 = np.broadcast_arrays(*(np.asarray(g, dtype=float) for g in (g1, g2, g3, g4)))
    m = np.empty(g1.shape + (3, 3))
    m[..., 0, 0] = 1 - g1 * e_delta - g2 * e_w
    m[..., 0, 1] = g1
    m[..., 0, 2] = g2
    m[..., 1, 0] = (1 - g3) * e_delta - g4 * e_w
    m[..., 1, 1] = g3
    m[..., 1, 2] = g4
    m[..., 2, 0] = (g2 + g4) * e_w - (1 - g1 - g3) * e_delta
    m[..., 2, 1] = 1 - g1 - g3
    m[..., 2, 2] = 1 - g2 - g4
    return m


def _check_unit_box(values, names):
    for name, v in zip(names, values):
        if not (-TOL_M <= v <= 1 + TOL_M):
            raise ConstraintError(f"{name} = {v} outside [0, 1]")


def _checked(m: np.ndarray, system: ThermalSystem) -> GibbsStochasticMatrix:
    i, j = np.unravel_index(np.argmin(m), m.shape)
    if m[i, j] < -TOL_M:
        raise ConstraintError(f"entry ({i}, {j}) = {m[i, j]:.6g} is negative")
    return GibbsStochasticMatrix.from_array(m, system)


def gs3_from_params(params: GS3Params, instance: PhotoisomerInstance) -> GibbsStochasticMatrix:
    _check_unit_box(astuple(params), ("g1", "g2", "g3", "g4"))
    m = gs3_matrix(*astuple(params), instance.e_delta, instance.e_w)
    return _checked(m, instance.system)


def gs3_inf_from_params(g1: float, g2: float, g4: float, delta: float) -> GibbsStochasticMatrix:
    """Three-level Gibbs-stochastic matrix with the top level at INFINITY."""
    _check_unit_box((g1,), ("g1",))
    if g2 < -TOL_M or g4 < -TOL_M:
        raise ConstraintError(f"g2={g2}, g4={g4} must be non-negative")
    if g2 + g4 > 1 + TOL_M:
        raise ConstraintError(f"g2 + g4 = {g2 + g4} exceeds 1")
    e_d = math.exp(-delta)
    m = np.array(
        [
            [1 - g1 * e_d, g1, g2],
            [g1 * e_d, 1 - g1, g4],
            [0.0, 0.0, 1 - g2 - g4],
        ]
    )
    return _checked(m, ThermalSystem((0.0, delta, INFINITY)))


def gs3_params_from_matrix(m) -> GS3Params:
    m = np.asarray(m, dtype=float)
    return GS3Params(m[0, 1], m[0, 2], m[1, 1], m[1, 2])


# ---------------------------------------------------------------------------
# four levels (extra level W' above W)


@dataclass(frozen=True)
class GS4Params:
    g1: float
    g2: float
    g3: float
    g4: float
    g5: float
    g6: float
    g7: float
    g8: float
    g9: float


def gs4_matrix(g, e_delta, e_w, e_wp) -> np.ndarray:
    """Generic four-level matrix from ``g[..., 0:9]`` = (g1, ..., g9)."""
    g = np.asarray(g, dtype=float)
    g1, g2, g3, g4, g5, g6, g7, g8, g9 = np.moveaxis(g, -1, 0)
    m = np.empty(g.shape[:-1] + (4, 4))
    m[..., 0, :] = np.stack([1 - g1 * e_delta - g2 * e_w - g5 * e_wp, g1, g2, g5], axis=-1)
    m[..., 1, :] = np.stack([(1 - g3) * e_delta - g4 * e_w - g6 * e_wp, g3, g4, g6], axis=-1)
    m[..., 2, :] = np.stack([(1 - g8) * e_w - g7 * e_delta - g9 * e_wp, g7, g8, g9], axis=-1)
    m[..., 3, :] = np.stack(
        [
            (g5 + g6 + g9) * e_wp
            - (1 - g1 - g3 - g7) * e_delta
            - (1 - g2 - g4 - g8) * e_w,
            1 - g1 - g3 - g7,
            1 - g2 - g4 - g8,
            1 - g5 - g6 - g9,
        ],
        axis=-1,
    )
    return m


def gs4_system(delta: float, w: float, w_prime: float) -> ThermalSystem:
    return ThermalSystem((0.0, delta, w, w_prime))


def _exp_neg(e: float) -> float:
    return 0.0 if e == INFINITY else math.exp(-e)


def gs4_from_params(params: GS4Params, delta: float, w: float, w_prime: float) -> GibbsStochasticMatrix:
    w, w_prime = parse_energy(w), parse_energy(w_prime)
    if w_prime < w:
        raise ConstraintError(f"w_prime={w_prime} must be >= w={w}")
    values = astuple(params)
    _check_unit_box(values, [f"g{k}" for k in range(1, 10)])
    m = gs4_matrix(values, math.exp(-delta), _exp_neg(w), _exp_neg(w_prime))
    return _checked(m, gs4_system(delta, w, w_prime))


def gs4_params_from_matrix(m) -> GS4Params:
    m = np.asarray(m, dtype=float)
    return GS4Params(*gs4_param_array(m))


def gs4_param_array(m) -> np.ndarray:
    """Inverse of ``gs4_matrix``: read (g1, ..., g9) off the free entries."""
    m = np.asarray(m, dtype=float)
    idx = [(0, 1), (0, 2), (1, 1), (1, 2), (0, 3), (1, 3), (2, 1), (2, 2), (2, 3)]
    return np.stack([m[..., i, j] for i, j in idx], axis=-1)


def block_embed_gs3(params: GS3Params) -> GS4Params:
    """GS3 parameters of ``G3 (+) 1``: the fourth level is left untouched."""
    g1, g2, g3, g4 = astuple(params)
    return GS4Params(g1, g2, g3, g4, 0.0, 0.0, 1 - g1 - g3, 1 - g2 - g4, 0.0)


# ---------------------------------------------------------------------------
# sampling


def _gs3_feasible(g: np.ndarray, e_delta: float, e_w: float) -> np.ndarray:
    g1, g2, g3, g4 = g.T
    return (
        (1 - g1 * e_delta - g2 * e_w >= 0)
        & ((1 - g3) * e_delta - g4 * e_w >= 0)
        & ((g2 + g4) * e_w - (1 - g1 - g3) * e_delta >= 0)
        & (1 - g1 - g3 >= 0)
        & (1 - g2 - g4 >= 0)
    )


def sample_gs3_batch(rng, instance: PhotoisomerInstance, size: int, batch: int = 8192) -> list:
    """Uniform-in-box rejection samples of valid GS3 parameters."""
    rng = np.random.default_rng(rng)
    accepted, rejected = [], 0
    while len(accepted) < size:
        g = rng.random((batch, 4))
        ok = _gs3_feasible(g, instance.e_delta, instance.e_w)
        for row, good in zip(g, ok):
            if good:
                accepted.append(GS3Params(*map(float, row)))
                if len(accepted) == size:
                    break
            else:
                rejected += 1
                if rejected >= MAX_REJECTIONS:
                    raise SamplerError(
                        f"no GS3 sample after {MAX_REJECTIONS} rejections for {instance}"
                    )
    return accepted


def sample_gs3(seed, instance: PhotoisomerInstance) -> GS3Params:
    """One rejection sample; identical for identical seeds."""
    return sample_gs3_batch(seed, instance, 1, batch=1024)[0]


def _northwest_corner(a: np.ndarray, b: np.ndarray, rows, cols) -> np.ndarray:
    n = len(a)
    out = np.zeros((n, n))
    a = a[list(rows)].copy()
    b = b[list(cols)].copy()
    i = j = 0
    while i < n and j < n:
        if a[i] <= b[j]:
            out[rows[i], cols[j]] = a[i]
            b[j] -= a[i]
            i += 1
        else:
            out[rows[i], cols[j]] = b[j]
            a[i] -= b[j]
            j += 1
    return out


def coupling_vertices(pi: np.ndarray, rng=None, limit: int = 2000) -> np.ndarray:
    """Vertices of the polytope of couplings with both marginals ``pi``.

    Built with the northwest-corner rule over row and column orders; all
    order pairs are used when there are at most ``limit`` of them.
    """
    n = len(pi)
    perms = list(itertools.permutations(range(n)))
    if len(perms) ** 2 <= limit:
        pairs = itertools.product(perms, perms)
    else:
        rng = np.random.default_rng(rng)
        pairs = ((tuple(rng.permutation(n)), tuple(rng.permutation(n))) for _ in range(limit))
    verts = np.array([_northwest_corner(pi, pi, r, c) for r, c in pairs])
    _, keep = np.unique(np.round(verts, 14).reshape(len(verts), -1), axis=0, return_index=True)
    return verts[np.sort(keep)]


def sample_gibbs_stochastic(system: ThermalSystem, size: int, rng=None, mix: int = 3,
                            alpha: float = 0.5) -> np.ndarray:
    """Random Gibbs-stochastic matrices, shape ``(size, n, n)``.

    A Gibbs-stochastic ``G`` is the same thing as a coupling ``J = G diag(pi)``
    with both marginals equal to the Gibbs vector ``pi``.  Samples are
    Dirichlet mixtures of ``mix`` random polytope vertices, so faces and
    edges (where optima live) are visited too.  Columns of zero-weight
    levels are unconstrained apart from stochasticity and drawn from a
    Dirichlet distribution.
    """
    rng = np.random.default_rng(rng)
    pi = gibbs_state(system)
    live = np.flatnonzero(pi > 0)
    dead = np.flatnonzero(pi == 0)
    verts = coupling_vertices(pi[live], rng)
    pick = rng.integers(0, len(verts), size=(size, mix))
    weights = rng.dirichlet(np.full(mix, alpha), size=size)
    joint = np.einsum("sk,skij->sij", weights, verts[pick])
    out = np.zeros((size, system.n, system.n))
    out[np.ix_(np.arange(size), live, live)] = joint / pi[live]
    if len(dead):
        out[:, :, dead] = np.moveaxis(rng.dirichlet(np.ones(system.n), size=(size, len(dead))), -1, 1)
    out = np.clip(out, 0.0, None)
    return out / out.sum(axis=1, keepdims=True)
