import json

import numpy as np
import pytest

from rmtlab.core_linalg import HermitianMatrix, eigen_skew, refine_eigenpair
from rmtlab.ensembles import (RankOnePerturbedModel, TournamentMatrix, cyclic_tournament,
                              sample_tournament, tournament_to_skew)
from rmtlab.errors import InvalidInputError
from rmtlab.interlacing import (check_gue_once, check_interlacing_once, check_real_root,
                                gue_eigenvalues, run_gue_variant, run_interlace_experiment, wilson)
from rmtlab.secular import build_secular, solve_perturbed


def test_cyclic_boundary_degenerate():
    rec = check_interlacing_once(cyclic_tournament(3), 0, 1)
    assert rec.boundary_degenerate
    assert not rec.interlaced
    assert rec.real_root_dev == 0.0


def test_n1_empty_record():
    rec = check_interlacing_once(TournamentMatrix(1, []), 0, 0)
    assert rec.counts == [] and rec.interlaced is None


def test_window_bounds():
    with pytest.raises(InvalidInputError):
        check_interlacing_once(sample_tournament(11, seed=0), 3, 5)


def test_n201_typical_draw():
    D = sample_tournament(201, seed=(1, 201))
    rec = check_interlacing_once(D, 50, 5)
    assert rec.interlaced
    assert rec.counts == [1] * 5
    assert rec.max_residual <= 1e-8 * np.linalg.norm(D.perturbed())
    assert rec.re_dev < 0.5


def test_window_roots_match_inverse_iteration():
    D = sample_tournament(41, seed=3)
    A = D.perturbed()
    spec = eigen_skew(tournament_to_skew(D))
    ps = solve_perturbed(build_secular(spec), spec, None, polish=False)
    for s in ps.roots:
        assert abs(refine_eigenpair(A, s).s - s) <= 1e-8 * max(1.0, abs(s))


def test_real_root():
    assert check_real_root(cyclic_tournament(3)) <= 1e-14
    assert check_real_root(TournamentMatrix(1, [])) == 0.0
    assert check_real_root(sample_tournament(201, seed=(5, 5))) <= 10
    with pytest.raises(InvalidInputError):
        check_real_root(sample_tournament(4, seed=0))


def test_zero_trials():
    rep = run_interlace_experiment(51, 0)
    r = rep.rates()
    assert r["trials"] == 0 and r["interlace_rate"] is None and r["interlace_ci95"] is None
    assert json.loads(rep.to_json())["interlace_rate"] is None


def test_alpha_range():
    with pytest.raises(InvalidInputError):
        run_interlace_experiment(51, 1, alpha=0.5)


def test_report_determinism_and_order():
    a = run_interlace_experiment(41, 6, seed=(3, 1), n_gaps=3)
    b = run_interlace_experiment(41, 6, seed=(3, 1), n_gaps=3, jobs=2)
    assert a.to_json() == b.to_json()
    assert a.to_csv() == b.to_csv()
    rates = a.rates()
    assert 0 <= rates["interlace_rate"] <= 1
    lo, hi = rates["interlace_ci95"]
    assert 0 <= lo <= rates["interlace_rate"] <= hi <= 1
    doc = json.loads(a.to_json(verbose=True))
    assert len(doc["per_trial"]) == 6
    assert a.to_csv().count("\n") == 7


def test_bijection_when_interlaced():
    rep = run_interlace_experiment(61, 10, seed=4, n_gaps=4)
    for r in rep.usable:
        if r.interlaced:
            assert r.counts == [1] * 4


def test_wilson():
    assert wilson(0, 0) is None
    lo, hi = wilson(95, 100)
    # textbook Wilson score interval
    z, p, n = 1.959963984540054, 0.95, 100
    c = (p + z * z / (2 * n)) / (1 + z * z / n)
    h = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n)
    assert abs(lo - (c - h)) < 1e-12 and abs(hi - (c + h)) < 1e-12


# ---------------------------------------------------------------------------
# GUE variant


def test_gue_degenerate_flagged():
    G = HermitianMatrix.from_dense(np.zeros((2, 2)))
    rec = check_gue_once(RankOnePerturbedModel(G, [1.0, 0.0], 2.0), 0, 1)
    assert rec.boundary_degenerate and not rec.interlaced


def test_gue_three_by_three():
    G = HermitianMatrix.from_dense(np.diag([1.0, 2.0, 3.0]))
    model = RankOnePerturbedModel(G, np.ones(3) / np.sqrt(3), 3.0)
    z, _ = gue_eigenvalues(model)
    A = model.dense()
    oracle = np.array([refine_eigenpair(A, s).s for s in np.linalg.eigvals(A)])
    d = np.abs(z[:, None] - oracle[None, :])
    assert d.min(1).max() <= 1e-9
    rec = check_gue_once(model, 0, 2)
    assert rec.interlaced
    bulk = np.sort(np.delete(z, np.argmax(z.imag)).real)
    assert 1 < bulk[0] < 2 < bulk[1] < 3


def test_gue_small_n_rejected():
    with pytest.raises(InvalidInputError):
        run_gue_variant(3, 1)


def test_gue_run_small():
    rep = run_gue_variant(16, 10, seed=2)
    r = rep.rates()
    assert r["trials"] == 10 and r["failures"] == 0
    assert r["interlace_rate"] >= 0.7
