import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmtlab.core_linalg import SkewMatrix, eigen_skew, label_to_position, refine_eigenpair
from rmtlab.ensembles import cyclic_tournament, sample_tournament, tournament_to_skew
from rmtlab.errors import PoleProximityError, SecularAnomalyError
from rmtlab.secular import (build_secular, eval_F, eval_F_derivative, eval_F_direct, find_all_mu,
                            find_mu, make_secular, solve_perturbed)


def tournament_problem(n, seed, trial=0):
    D = sample_tournament(n, seed, trial)
    spec = eigen_skew(tournament_to_skew(D))
    return D, spec, build_secular(spec)


def cyclic():
    D = cyclic_tournament(3)
    spec = eigen_skew(tournament_to_skew(D))
    return D, spec, build_secular(spec)


def hausdorff(a, b):
    d = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    return max(d.min(0).max(), d.min(1).max())


# ---------------------------------------------------------------------------
# construction and evaluation


def test_cyclic_weights():
    _, _, f = cyclic()
    np.testing.assert_allclose(f.weights, [0, 3, 0], atol=1e-12)
    assert f.position(0) == 1


def test_n1_weights():
    spec = eigen_skew(SkewMatrix(1, []))
    f = build_secular(spec)
    assert f.poles.tolist() == [0.0] and f.weights.tolist() == [1.0]


@pytest.mark.parametrize("n", [11, 12, 31])
def test_parseval_and_pairing(n):
    _, spec, f = tournament_problem(n, seed=(2, n))
    assert abs(f.weights.sum() - n) <= 1e-8
    np.testing.assert_allclose(f.weights, f.weights[::-1], atol=1e-10)
    # direct basis expansion of the all-ones vector
    c = spec.eigenvectors.conj().T @ np.ones(n)
    np.testing.assert_allclose(spec.eigenvectors @ c, np.ones(n), atol=1e-12)
    np.testing.assert_allclose(np.abs(c) ** 2, f.weights, atol=1e-12)


def test_cyclic_F_values():
    _, _, f = cyclic()
    assert abs(eval_F(f, 3.0) - 1) <= 1e-15
    assert abs(eval_F_derivative(f, 3.0) + 1 / 3) <= 1e-15


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 50), st.integers(0, 1000))
def test_F_odd_on_real_axis(s, trial):
    _, _, f = tournament_problem(9, seed=5, trial=trial)
    assert abs(eval_F(f, -s) + eval_F(f, s)) <= 1e-12 * max(1.0, abs(eval_F(f, s)))
    assert abs(eval_F(f, s).imag) == 0.0


def test_two_summation_forms():
    _, _, f = tournament_problem(11, seed=3)
    for s in (0.7 + 0.3j, 2.5, -0.1 + 4j):
        a, b = eval_F(f, s), eval_F_direct(f, s)
        assert abs(a - b) <= 1e-11 * abs(b)
    xs = np.linspace(0.1, 5, 50)
    np.testing.assert_allclose(eval_F(f, xs), eval_F_direct(f, xs), rtol=1e-11)


def test_derivative_finite_difference():
    _, _, f = tournament_problem(11, seed=3)
    rng = np.random.default_rng(0)
    for _ in range(10):
        s = complex(rng.normal(), rng.normal() * 3)
        h = 1e-6
        fd = (eval_F(f, s + h) - eval_F(f, s - h)) / (2 * h)
        d = eval_F_derivative(f, s)
        assert abs(fd - d) <= 1e-5 * abs(d)


def test_derivative_at_mu_direct_sum():
    f = make_secular([-1, 0, 1], [1, 1, 1])
    mu = 1 / np.sqrt(3)
    direct = sum(w / (mu - lam) ** 2 for lam, w in zip([-1, 0, 1], [1, 1, 1]))
    d = eval_F_derivative(f, 1j * mu)
    assert abs(d.imag) <= 1e-12
    assert abs(d.real - direct) <= 1e-12 * direct


def test_pole_proximity():
    _, _, f = cyclic()
    with pytest.raises(PoleProximityError) as e:
        eval_F(f, 1j * np.sqrt(3))
    assert e.value.index == 1
    with pytest.raises(PoleProximityError):
        eval_F_derivative(f, 0.0)


# ---------------------------------------------------------------------------
# zeros on the imaginary axis


def test_mu_closed_form():
    f = make_secular([-1, 0, 1], [1, 1, 1])
    assert abs(find_mu(f, 0) - 1 / np.sqrt(3)) <= 1e-10
    assert abs(find_mu(f, -1) + 1 / np.sqrt(3)) <= 1e-10


def test_mu_symmetric_pair():
    f = make_secular([-1, 1], [2, 2])
    assert abs(find_mu(f, -1)) <= 1e-12


def test_mu_skipped_for_degenerate_weight():
    _, _, f = cyclic()
    assert find_mu(f, 0) is None
    z = find_all_mu(f)
    assert z.skipped.all() and np.isnan(z.mu).all()


def test_mu_anomaly():
    # a corrupted weight elsewhere destroys the sign change across (0, 1)
    f = make_secular([0.0, 1.0, 2.0], [1.0, 1.0, np.inf])
    with pytest.raises(SecularAnomalyError):
        find_mu(f, 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 40), st.integers(0, 10_000))
def test_mu_strictly_interlaced(n, trial):
    _, _, f = tournament_problem(n, seed=8, trial=trial)
    z = find_all_mu(f)
    live = ~z.skipped
    assert np.all(f.poles[:-1][live] < z.mu[live])
    assert np.all(z.mu[live] < f.poles[1:][live])


# ---------------------------------------------------------------------------
# full perturbed spectrum


def test_cyclic_roots():
    D, spec, f = cyclic()
    ps = solve_perturbed(f, spec, D.perturbed())
    order = np.argsort(ps.roots.imag)
    np.testing.assert_allclose(ps.roots[order], [-1j * np.sqrt(3), 3, 1j * np.sqrt(3)], atol=1e-12)
    assert [ps.tags[k] for k in order] == ["persisted", "real-root", "persisted"]


def test_n1_root():
    spec = eigen_skew(SkewMatrix(1, []))
    ps = solve_perturbed(build_secular(spec), spec, np.ones((1, 1)))
    np.testing.assert_allclose(ps.roots, [1.0])


def test_residuals_n31():
    D, spec, f = tournament_problem(31, seed=(4, 31))
    A = D.perturbed()
    ps = solve_perturbed(f, spec, A)
    assert ps.n == 31
    assert np.nanmax(ps.residuals) <= 1e-9 * np.linalg.norm(A)
    assert not ps.failures


@pytest.mark.parametrize("n", [5, 15, 31])
def test_oracle_equivalence(n):
    # every root, and nothing else, is found by independent inverse-iteration sweeps
    for t in range(3):
        D, spec, f = tournament_problem(n, seed=(6, n), trial=t)
        A = D.perturbed()
        ps = solve_perturbed(f, spec, A, polish=False)
        oracle = [refine_eigenpair(A, s0).s for s0 in np.linalg.eigvals(A)]
        assert hausdorff(ps.roots, oracle) <= 1e-8


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([3, 4, 7, 10, 25, 64, 101, 201]), st.integers(0, 10_000))
def test_trace_and_conjugation(n, trial):
    _, spec, f = tournament_problem(n, seed=12, trial=trial)
    ps = solve_perturbed(f, spec, polish=False)
    assert ps.n == n
    assert abs(ps.roots.sum() - n) <= 1e-8 * n
    assert hausdorff(ps.roots, ps.roots.conj()) <= 1e-9


def test_aberth_route_agrees():
    D, spec, f = tournament_problem(21, seed=1)
    a = solve_perturbed(f, spec, polish=False)
    b = solve_perturbed(f, spec, polish=False, method="aberth")
    assert hausdorff(a.roots, b.roots) <= 1e-8


def test_json_report():
    D, spec, f = cyclic()
    doc = json.loads(solve_perturbed(f, spec, D.perturbed()).to_json())
    assert doc["schema_version"] == 1
    assert {r["tag"] for r in doc["roots"]} == {"persisted", "real-root"}
    assert set(doc["roots"][0]) == {"re", "im", "tag", "residual", "interval_index"}


def test_separation_statistic():
    n, alpha = 201, 0.25
    m = n // 2
    seps = []
    for t in range(200):
        _, spec, f = tournament_problem(n, seed=(13, 0), trial=t)
        z = find_all_mu(f)
        for j in range(int(np.ceil(alpha * m)), int(np.floor((1 - alpha) * m))):
            p = label_to_position(n, j)
            mu = z.mu[p]
            seps.append(min(mu - f.poles[p], f.poles[p + 1] - mu) * np.sqrt(n))
    assert np.percentile(seps, 5) > 0.01
