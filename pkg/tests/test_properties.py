"""Property-based checks of the structural invariants."""

import math

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from switchyield.bounds import gamma_markov, gamma_star, gamma_th, q_tilde
from switchyield.curves import build_curve, endpoints_ok, is_concave, thermomajorizes
from switchyield.embedding import spectrum3
from switchyield.gibbs_maps import gs3_from_params, sample_gs3, validate
from switchyield.markov import partial_thermalization
from switchyield.thermo import INFINITY, PhotoisomerInstance, ThermalSystem, beta_order, gibbs_state

SETTINGS = settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])

energy = st.floats(0.0, 8.0, allow_nan=False)
energies = st.lists(st.one_of(energy, st.just(INFINITY)), min_size=2, max_size=4).filter(
    lambda es: any(e != INFINITY for e in es))


@st.composite
def system_and_state(draw):
    es = draw(energies)
    raw = draw(st.lists(st.floats(0.0, 1.0), min_size=len(es), max_size=len(es)))
    assume(sum(raw) > 1e-6)
    p = np.array(raw) / sum(raw)
    return ThermalSystem(tuple(es)), p


@st.composite
def instances(draw, finite=True):
    d = draw(st.floats(0.0, 5.0))
    w = d + draw(st.floats(0.0, 5.0)) if finite else draw(st.one_of(st.just(INFINITY), st.floats(d, d + 5.0)))
    q = draw(st.floats(0.0, 1.0))
    return PhotoisomerInstance(d, w, q)


@SETTINGS
@given(system_and_state())
def test_beta_ratios_non_increasing(sp):
    system, p = sp
    order = beta_order(p, system)
    w = system.weights
    ratios = [math.inf if w[i] == 0 and p[i] > 0 else (-math.inf if w[i] == 0 else p[i] / w[i])
              for i in order]
    for a, b in zip(ratios, ratios[1:]):
        assert a >= b or (math.isfinite(a) and math.isclose(a, b, rel_tol=1e-11))


@SETTINGS
@given(system_and_state())
def test_curves_are_concave_with_right_endpoints(sp):
    system, p = sp
    c = build_curve(p, system)
    assert is_concave(c)
    assert endpoints_ok(c, system)


@SETTINGS
@given(st.floats(0.0, 12.0), st.floats(0.0, 1.0))
def test_threshold_matches_order(w, q):
    s = ThermalSystem((0.0, min(w, 0.5 * w), w))
    qt = q_tilde(w)
    assume(abs(q - qt) > 1e-12)
    first = beta_order([1 - q, 0.0, q], s)[0]
    assert (first == 2) == (q >= qt)


@SETTINGS
@given(instances(), st.integers(0, 2**32 - 1))
def test_gs3_samples_fix_gibbs_and_contract_order(inst, seed):
    prm = sample_gs3(seed, inst)
    g = gs3_from_params(prm, inst)
    pi = gibbs_state(inst.system)
    assert np.allclose(g.apply(pi), pi, atol=1e-12)
    assert bool(validate(g.entries, inst.system))
    p = np.random.default_rng(seed).dirichlet(np.ones(3))
    assert thermomajorizes(p, g.apply(p), inst.system)
    for lam in spectrum3(g.entries).values:
        assert abs(np.linalg.det(g.entries - lam * np.eye(3))) <= 1e-8


@SETTINGS
@given(instances(finite=False))
def test_hierarchy_of_closed_forms(inst):
    assert 0 <= gamma_th(inst) <= 1
    assert gamma_th(inst) <= gamma_markov(inst) + 1e-12
    assert gamma_markov(inst) <= gamma_star(inst) + 1e-9


@SETTINGS
@given(instances(), st.integers(0, 2), st.integers(1, 2), st.floats(0.0, 1.0))
def test_thermalizations_contract(inst, i, shift, lam):
    j = (i + shift) % 3
    p = inst.initial_state
    out = partial_thermalization(p, i, j, lam, inst.system)
    assert thermomajorizes(p, out, inst.system)
    assert math.isclose(out.sum(), 1.0, abs_tol=1e-12)


@SETTINGS
@given(instances(), st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_transitivity(inst, s1, s2):
    g1 = gs3_from_params(sample_gs3(s1, inst), inst)
    g2 = gs3_from_params(sample_gs3(s2, inst), inst)
    p = np.random.default_rng(s1 ^ s2).dirichlet(np.ones(3))
    q = g1.apply(p)
    r = g2.apply(q)
    assert thermomajorizes(p, q, inst.system) and thermomajorizes(q, r, inst.system)
    assert thermomajorizes(p, r, inst.system)
