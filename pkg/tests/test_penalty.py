import numpy as np
import pytest
from scipy.optimize import brentq

from helpers import catalog_problem, problem
from vacone.catalog import load_catalog
from vacone.penalty import (PenaltyConfig, am_residual, am_trace, penalty_objective, solve_subproblem,
                            trace_and_classify, trace_csv)
from vacone.stationarity import nnamcq_check, verify_mcert

SQUARE = catalog_problem("am_not_m_square")


def square_root_of_stationarity(k):
    """Root of 1 + 2k x^3 + x, the derivative of the square-example penalty for x < 0."""
    return brentq(lambda x: 1 + 2 * k * x ** 3 + x, -2.0, 0.0, xtol=1e-15)


def test_objective_closed_form():
    val, grad, _ = penalty_objective(SQUARE, 1, [0], [1.0])
    assert val == pytest.approx(2.0)
    assert grad == pytest.approx([4.0])


def test_objective_vanishes_at_feasible_reference():
    p = catalog_problem("ccp_affine")
    val, grad, _ = penalty_objective(p, 100, [0, 0], [0.0, 0.0])
    assert val == 0 and list(grad) == [1.0, 1.0]


def test_objective_without_penalty_weight():
    val, grad, _ = penalty_objective(SQUARE, 0, [0], [1.0])
    assert val == pytest.approx(1.5) and grad == pytest.approx([2.0])


@pytest.mark.parametrize("k", [1.0, 1e2, 1e4, 1e6])
def test_subproblem_matches_root(k):
    r = solve_subproblem(SQUARE, k, [0.0], [0.0], 1e-10)
    assert r.status == "converged"
    assert r.x[0] == pytest.approx(square_root_of_stationarity(k), rel=1e-6)


def test_subproblem_immediate_at_stationary_reference():
    p = problem(["x"], [[["1", "0", "le"]]], "x^2", [0])
    r = solve_subproblem(p, 10.0, [0.0], [0.0], 1e-8)
    assert r.iterations == 0 and r.x[0] == 0


def test_subproblem_two_dimensional_grid_oracle():
    p = catalog_problem("subregular_not_am_regular")
    k = 100.0
    r = solve_subproblem(p, k, [0.0, 0.0], [0.0, 0.0], 1e-10)
    g = np.linspace(-0.1, 0.1, 801)
    X1, X2 = np.meshgrid(g, g, indexing="ij")
    theta = X2 + k / 2 * (np.maximum(0, X2 - X1 ** 2) ** 2 + np.maximum(0, -X2) ** 2) + (X1 ** 2 + X2 ** 2) / 2
    i, j = np.unravel_index(np.argmin(theta), theta.shape)
    assert abs(r.x[0] - g[i]) <= 2.5e-4 and abs(r.x[1] - g[j]) <= 2.5e-4
    assert r.state.branch[0] == 0


def test_square_trace_follows_oracle():
    t = am_trace(SQUARE, None, PenaltyConfig.up_to(1e6, tol=1e-8))
    for rec in t.records:
        x = square_root_of_stationarity(rec.k)
        assert rec.x[0] == pytest.approx(x, rel=1e-5)
        assert rec.lam[0] == pytest.approx(rec.k * x * x, rel=1e-4)
        assert np.linalg.norm(rec.eps) <= rec.inner_tol
        # the recorded residual is the stationarity residual plus the proximal pull
        assert am_residual(rec, t.xbar)[0] == pytest.approx(rec.eps[0] - rec.x[0])
    lam = [r.lam[0] for r in t.records]
    assert all(b > a for a, b in zip(lam, lam[1:]))


def test_square_trace_classifies_abnormal():
    _, c = trace_and_classify(SQUARE, PenaltyConfig.up_to(1e6, tol=1e-8))
    assert c.name == "Abnormal" and c.lam == (1,)


def test_affine_trace_gives_exact_multiplier():
    p = catalog_problem("ccp_affine")
    _, c = trace_and_classify(p)
    assert c.name == "MLimit"
    assert verify_mcert(p, p.point, c.cert)


def test_nnamcq_instance_gives_mlimit():
    p = problem(["x1 + x2"], [[["1", "0", "le"]]], "-x1 - x2 + x1^2", [0, 0])
    assert nnamcq_check(p)
    _, c = trace_and_classify(p)
    assert c.name == "MLimit" and c.cert.lam == (1,)


def test_csv_layout():
    t = am_trace(catalog_problem("ccp_affine"), None, PenaltyConfig.up_to(10))
    lines = trace_csv(t).splitlines()
    assert lines[0] == "k,x1,x2,y_norm,lambda_norm,eps_norm,branch"
    assert len(lines) == 3


def test_single_row_trace():
    assert len(am_trace(SQUARE, None, PenaltyConfig.up_to(1)).records) == 1


def test_infeasible_reference_point():
    with pytest.raises(ValueError):
        am_trace(SQUARE.with_point([1]), None)


def test_bad_schedule():
    with pytest.raises(ValueError):
        PenaltyConfig(k_schedule=(10.0, 1.0))


@pytest.mark.parametrize("entry", [e for e in load_catalog() if e.problem.has_gk], ids=lambda e: e.id)
def test_catalog_trace_invariants(entry):
    p = entry.problem
    t = am_trace(p, None, PenaltyConfig())
    assert t.status == "complete"
    res = []
    for r in t.records:
        assert np.linalg.norm(r.eps) <= r.inner_tol
        res.append(float(np.dot(r.y, r.y)) + float(np.dot(r.nu, r.nu)) / r.k ** 2)
    assert all(b <= 1.1 * a for a, b in zip(res, res[1:]))
    if p.local_minimizer:
        assert np.linalg.norm(t.records[-1].y) <= 1e-3


def test_decoupled_trace_stays_in_C():
    p = catalog_problem("dam_regular_not_am_regular")
    t, c = trace_and_classify(p, PenaltyConfig(decoupled=True))
    for r in t.records:
        assert r.x[0] >= 0
        assert r.nu[0] <= 0
    assert c.name == "MLimit" and c.cert.nu == (-1,)
