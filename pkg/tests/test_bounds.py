import math

import numpy as np
import pytest
import scipy.linalg

from switchyield.bounds import (
    YieldReport,
    embed_argmax,
    embed_matrix_params,
    f_k,
    gamma_embed_optimize,
    gamma_markov,
    gamma_markov_paths,
    gamma_star,
    gamma_star_bruteforce,
    gamma_star_gs4_bound,
    gamma_th,
    gs4_lp_optimum,
    optimal_gs3_params,
    q_tilde,
    report,
    sweep_table,
    yield_of_gs3,
)
from switchyield.embedding import Embeddability, embeddability_check
from switchyield.gibbs_maps import GS3Params, GS4Params, gs3_from_params, gs3_inf_from_params, gs4_from_params, sample_gs3_batch
from switchyield.thermo import INFINITY, PhotoisomerInstance

INST = PhotoisomerInstance(1.0, 3.0, 0.5)


def test_q_tilde_examples():
    assert q_tilde(0.0) == 0.5
    assert q_tilde(INFINITY) == 0.0
    assert q_tilde(3.0) == pytest.approx(1 / (1 + math.exp(3)), rel=1e-15)
    assert q_tilde(3.0) == pytest.approx(0.047426, abs=1e-6)
    assert q_tilde(2000.0) == 0.0


def test_gamma_th_examples():
    assert gamma_th(PhotoisomerInstance(0.0, INFINITY, 0.3)) == 0.5
    assert gamma_th(PhotoisomerInstance(0.0, 0.0, 0.3)) == pytest.approx(1 / 3)
    assert gamma_th(INST) == pytest.approx(0.259497, abs=1e-6)


def test_yield_formula_matches_matrix_action():
    assert yield_of_gs3(GS3Params(0, 0, 1, 0), INST) == 0.0
    q0 = PhotoisomerInstance(1.0, 3.0, 0.0)
    assert yield_of_gs3(GS3Params(1, 0, 0, 0), q0) == pytest.approx(math.exp(-1))
    assert yield_of_gs3(GS3Params(1, 0, 0, 1), INST) == pytest.approx(0.659046, abs=1e-6)
    rng = np.random.default_rng(0)
    for prm in sample_gs3_batch(rng, INST, 200):
        direct = gs3_from_params(prm, INST).apply(INST.initial_state)[1]
        assert yield_of_gs3(prm, INST) == pytest.approx(direct, abs=1e-12)


def test_gamma_star_examples():
    assert gamma_star(PhotoisomerInstance(1.0, 2.0, 1.0)) == 1.0
    assert gamma_star(PhotoisomerInstance(1.5, 1.5, 0.6)) == pytest.approx(0.6)
    assert gamma_star(INST) == pytest.approx(0.659046, abs=1e-6)


def test_optimal_params_attain_gamma_star():
    for q in (0.0, 0.01, 0.3, 1.0):
        inst = PhotoisomerInstance(1.0, 3.0, q)
        g = gs3_from_params(optimal_gs3_params(inst), inst)
        assert g.apply(inst.initial_state)[1] == pytest.approx(gamma_star(inst), abs=1e-14)


def test_bruteforce_oracle():
    assert abs(gamma_star_bruteforce(INST, 200) - 0.659046) <= 5e-3
    q0 = PhotoisomerInstance(1.0, 3.0, 0.0)
    assert gamma_star_bruteforce(q0, 200) == pytest.approx(math.exp(-1), abs=5e-3)
    rng = np.random.default_rng(1)
    for _ in range(30):
        d = rng.uniform(0, 3)
        inst = PhotoisomerInstance(d, d + rng.uniform(0, 3), rng.uniform())
        assert gamma_star_bruteforce(inst, 60) <= gamma_star(inst) + 1e-9
    with pytest.raises(ValueError):
        gamma_star_bruteforce(INST, 1)


def test_bruteforce_feasibility_matches_matrix_validation():
    # every grid point the oracle keeps has a valid completion
    from switchyield.gibbs_maps import _gs3_feasible

    inst = PhotoisomerInstance(0.5, 1.2, 0.3)
    ed, ew = inst.e_delta, inst.e_w
    rng = np.random.default_rng(2)
    for g3, g4 in rng.uniform(0, 1, (300, 2)):
        low = (1 - g3) * ed - g4 * ew
        s_max = (1 - g3) * ed + (1 - g4) * ew
        claimed = low >= 0 and max(low, 0) <= min(1, s_max)
        g12 = rng.uniform(0, 1, (20000, 2))
        full = np.column_stack([g12, np.full(20000, g3), np.full(20000, g4)])
        found = _gs3_feasible(full, ed, ew).any()
        if found:
            assert claimed


def test_gamma_markov_examples():
    assert gamma_markov(INST) == pytest.approx(0.558840, abs=1e-6)
    inf0 = PhotoisomerInstance(1.0, INFINITY, 0.0)
    assert gamma_markov(inf0) == pytest.approx(math.exp(-1) / (1 + math.exp(-1)), rel=1e-15)
    assert gamma_markov(inf0) == pytest.approx(0.268941, abs=1e-6)


def test_branch_continuity():
    for d, w in [(0.5, 1.0), (1.0, 3.0), (2.0, 6.0), (0.0, 0.0)]:
        qt = q_tilde(w)
        above, below = PhotoisomerInstance(d, w, qt), PhotoisomerInstance(d, w, np.nextafter(qt, 0))
        assert gamma_star(above) == pytest.approx(gamma_star(below), abs=1e-9)
        assert gamma_markov(above) == pytest.approx(gamma_markov(below), abs=1e-9)


def test_paths():
    a, b = gamma_markov_paths(INST)
    assert b >= a and b == pytest.approx(gamma_markov(INST), abs=1e-12)
    d = PhotoisomerInstance(2.0, 2.0, 0.5)
    assert max(gamma_markov_paths(d)) == pytest.approx(gamma_markov(d), abs=1e-12)
    q1 = PhotoisomerInstance(1.0, 3.0, 1.0)
    _, b1 = gamma_markov_paths(q1)
    assert b1 == pytest.approx(q1.e_delta / (q1.e_delta + q1.e_w), abs=1e-12)


def test_path_b_dominates_on_grid():
    for d in np.linspace(0.1, 4, 10):
        for w in d + np.linspace(0, 4, 10):
            a, b = gamma_markov_paths(PhotoisomerInstance(d, w, 0.5))
            assert b >= a - 1e-15


def test_f_k_examples():
    assert f_k(0.0, 0.5) == 0.0
    rng = np.random.default_rng(3)
    for a, b in rng.uniform(0, 0.999, (50, 2)):
        assert f_k(a, b) == pytest.approx(f_k(b, a), rel=1e-13)
    assert f_k(0.3, 0.3) == pytest.approx(f_k(0.3, 0.3 + 1e-7), abs=1e-7)
    with pytest.raises(ValueError):
        f_k(1.0, 0.3)


def test_f_k_is_f_lambda_of_one_minus_k():
    from switchyield.embedding import f_lambda

    for k1, k2 in [(0.2, 0.7), (0.5, 0.5), (0.9, 0.1)]:
        assert f_k(k1, k2) == pytest.approx(f_lambda(1 - k1, 1 - k2), rel=1e-12)


def test_embed_examples():
    assert gamma_embed_optimize(1.0, 0.7) == pytest.approx(0.7, abs=1e-2)
    assert gamma_embed_optimize(1.0, 0.0) == pytest.approx(0.268941, abs=1e-2)
    for d in (0.2, 1.0, 3.0):
        for q in (0.0, 0.3, 0.8, 1.0):
            assert gamma_embed_optimize(d, q) <= gamma_markov(PhotoisomerInstance(d, INFINITY, q)) + 1e-6
    with pytest.raises(ValueError):
        gamma_embed_optimize(0.0, 0.5)


def test_embed_optimum_is_a_genuine_exponential():
    # the optimizer's matrix has a real logarithm that is a valid generator
    for d, q in [(1.0, 0.4), (0.35, 0.4), (2.0, 0.1)]:
        opt = embed_argmax(d, q)
        g = gs3_inf_from_params(*embed_matrix_params(opt, d), d)
        assert g.apply([1 - q, 0.0, q])[1] == pytest.approx(opt.value, abs=1e-9)
        assert embeddability_check(g).status is Embeddability.EMBEDDABLE
        log = scipy.linalg.logm(g.entries).real
        off = log - np.diag(np.diag(log))
        assert off.min() >= -1e-9
        assert np.allclose(scipy.linalg.expm(log), g.entries, atol=1e-9)


def test_embed_beats_independent_random_search():
    # random embeddable maps exp(Q) of the limiting model never beat the optimizer
    rng = np.random.default_rng(8)
    d, q = 1.0, 0.4
    best = gamma_embed_optimize(d, q)
    ed = math.exp(-d)
    for _ in range(2000):
        a, b, c = rng.exponential(1.0, 3) * rng.uniform(0, 5)
        # detailed balance on the 0-1 pair, level 2 drains freely
        lq = np.array([[-a * ed, a, b], [a * ed, -a, c], [0.0, 0.0, -(b + c)]])
        g = scipy.linalg.expm(lq)
        assert (g @ [1 - q, 0.0, q])[1] <= best + 1e-9


def test_gs4_bound():
    assert gamma_star_gs4_bound(INST, 3.0, samples=2000) <= gamma_star(INST) + 1e-9
    assert gamma_star_gs4_bound(INST, 4.0, samples=2000) <= gamma_star(INST) + 1e-9
    value, _ = gs4_lp_optimum(INST, 4.0)
    assert value == pytest.approx(gamma_star(INST), abs=1e-9)
    with pytest.raises(ValueError):
        gamma_star_gs4_bound(INST, 2.0, samples=10)


def test_gs4_g6_lowers_yield():
    from dataclasses import asdict

    from switchyield.gibbs_maps import block_embed_gs3

    base = asdict(block_embed_gs3(optimal_gs3_params(INST)))
    p = [0.5, 0.0, 0.5, 0.0]
    y0 = gs4_from_params(GS4Params(**base), 1.0, 3.0, 4.0).apply(p)[1]
    y1 = gs4_from_params(GS4Params(**{**base, "g6": 0.1}), 1.0, 3.0, 4.0).apply(p)[1]
    assert y0 == pytest.approx(gamma_star(INST), abs=1e-14)
    assert y1 == pytest.approx(y0 - 0.5 * math.exp(-4.0) * 0.1, abs=1e-14)
    assert y1 < y0


def test_report_examples():
    r = report(PhotoisomerInstance(1.0, INFINITY, 1.0))
    assert r.gamma_star == 1.0 and r.gamma_embed is not None
    r = report(INST)
    assert (r.gamma_star, r.gamma_markov, r.gamma_th) == pytest.approx((0.659046, 0.558840, 0.259497), abs=1e-6)
    assert r.gamma_embed is None and r.gap_markov_embed is None
    assert r.hierarchy_ok()
    assert r.to_dict()["w"] == 3.0
    assert isinstance(r, YieldReport)


def test_sweep_table_shape_and_errors():
    rows = sweep_table(0.5, 1.0, 2, [0.0, 1.0], 3.0, outputs=("gamma_star", "gamma_th"))
    assert [(r["delta"], r["q"]) for r in rows] == [(0.5, 0.0), (0.5, 1.0), (1.0, 0.0), (1.0, 1.0)]
    assert all(r["gamma_markov"] is None and r["gamma_embed"] is None for r in rows)
    with pytest.raises(ValueError):
        sweep_table(0.5, 1.0, 2, [0.0], 3.0)
    with pytest.raises(ValueError):
        sweep_table(1.0, 0.5, 2, [0.0], INFINITY)
