import numpy as np
import pytest

from torus_killing.field import FourierField
from torus_killing.killing import system_residual
from torus_killing.lattice import HONEYCOMB, DualLattice
from torus_killing.search import (
    SearchProblem, classify_result, minimize, problem_from_json, shift_experiment, verify,
)

SQUARE = DualLattice(np.eye(2))


@pytest.fixture(scope="module")
def honeycomb_runs():
    return [minimize(SearchProblem(HONEYCOMB, band=3, seed=s)) for s in range(3)]


def test_single_line_start_is_a_fixed_point():
    res = minimize(SearchProblem(HONEYCOMB, band=3, init="single_line", seed=1))
    assert res.residual_norm <= 1e-12
    assert len(res.trace) - 1 <= 1
    assert res.classification == "OneDimensional"


def test_unpenalized_honeycomb_outcomes(honeycomb_runs):
    for res in honeycomb_runs:
        collapsed = res.residual_norm <= 1e-10 and sum(e <= 1e-8 for e in res.line_energies) >= 2
        stuck = res.residual_norm > 1e-6
        assert collapsed or stuck
        assert res.classification == ("OneDimensional" if collapsed else classify_result(res))


def test_objective_never_increases(honeycomb_runs):
    for res in honeycomb_runs:
        objs = [t["objective"] for t in res.trace if t["accepted"]]
        assert all(b <= a for a, b in zip(objs, objs[1:]))


def test_reported_norm_is_reproducible(honeycomb_runs):
    for res in honeycomb_runs:
        assert verify(res) <= 1e-12
        assert system_residual(res.field, res.constants).norm == pytest.approx(res.residual_norm, abs=1e-12)


def test_same_seed_same_trace(honeycomb_runs):
    again = minimize(SearchProblem(HONEYCOMB, band=3, seed=0))
    assert again.trace == honeycomb_runs[0].trace
    assert np.array_equal(again.field.coeffs, honeycomb_runs[0].field.coeffs)


def test_iterates_keep_parity_and_zero_mode(honeycomb_runs):
    for res in honeycomb_runs:
        assert res.field.real
        assert res.field.zero_mode == 1.0


def test_barrier_keeps_lines_alive():
    res = minimize(SearchProblem(HONEYCOMB, band=3, eta=1e3, seed=0))
    assert res.residual_norm > 1e-6
    assert min(res.line_energies) > 1e-8
    assert res.classification == "NonOneDimensional"


def test_general_lattice_run():
    res = minimize(SearchProblem(SQUARE, band=2, eta=1e-2, init="random", seed=3, max_iters=100))
    assert res.line_energies is None
    assert verify(res) <= 1e-12
    assert res.penalty > 0


def test_shift_of_one_dimensional_start():
    f = FourierField.from_dict(SQUARE, {(0, 0): 1.0, (1, 0): 0.15})
    out = shift_experiment(SearchProblem(SQUARE, band=1, init=f), 2.0)
    assert out["jointResidual"] <= 1e-12
    assert out["classification"] == "OneDimensional"
    assert out["observational"]


def test_penalized_shift_stays_positive():
    out = shift_experiment(SearchProblem(HONEYCOMB, band=3, eta=1e3, seed=2), 1.0)
    assert out["jointResidual"] > 1e-6


def test_zero_shift_rejected():
    with pytest.raises(ValueError):
        shift_experiment(SearchProblem(HONEYCOMB), 0.0)


def test_degenerate_problems_rejected():
    with pytest.raises(ValueError):
        SearchProblem(HONEYCOMB, band=0)
    with pytest.raises(ValueError):
        SearchProblem(HONEYCOMB, eta=-1)
    with pytest.raises(ValueError):
        minimize(SearchProblem(HONEYCOMB, init="sideways"))


def test_problem_json():
    p = problem_from_json({"lattice": {"pq": {"p": [0, 1], "q": [-1, 1]}}, "band": 2, "eta": 5, "seed": 4})
    assert p.three_line and p.band == 2 and p.eta == 5.0 and p.seed == 4
    assert p.init == "three_line"
    res = minimize(p)
    doc = res.to_json()
    assert doc["observational"] and doc["trace"]["iterations"] == len(res.trace) - 1
