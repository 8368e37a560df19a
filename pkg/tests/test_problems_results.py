import numpy as np
import pytest

from neuraltr.problems import UnknownProblemError, get_problem, list_problems
from neuraltr.results import BudgetExceeded, CountingObjective, ObjectiveError, TraceRecord, close_trace


def test_registry_minimizers():
    for name, dim, _ in list_problems():
        p = get_problem(name)
        assert p.dim == dim
        if p.known_minimizer is not None:
            assert p(p.known_minimizer) == pytest.approx(p.known_minimum, abs=1e-12)


def test_example3_values():
    f = get_problem("example3")
    e = np.e
    assert f([0.0, 0.0]) == pytest.approx(16.0)
    assert f([1.0, 1.0]) == pytest.approx(1.0 + e**2)
    assert f([0.0, 2.0]) == pytest.approx(17.0 + e**2)


def test_sphere_any_dimension():
    p = get_problem("sphere", 7)
    assert p.dim == 7 and p(np.ones(7)) == 7.0
    with pytest.raises(ValueError):
        get_problem("sphere2", 3)
    with pytest.raises(UnknownProblemError):
        get_problem("nope")


def test_nonsmooth_problems_are_flagged():
    flags = {name: smooth for name, _, smooth in list_problems()}
    assert not flags["l1norm"] and not flags["maxabs"] and not flags["piecewise_quad"]


def test_counting_objective_caches_and_budgets():
    calls = []
    obj = CountingObjective(lambda x: calls.append(1) or float(x.sum()), budget=2)
    assert obj([1.0, 2.0]) == 3.0
    assert obj([1.0, 2.0]) == 3.0
    assert obj.evals == 1 and len(calls) == 1
    obj([0.0, 0.0])
    with pytest.raises(BudgetExceeded):
        obj([5.0, 5.0])


def test_counting_objective_flags_non_finite():
    obj = CountingObjective(lambda x: np.inf)
    with pytest.raises(ObjectiveError):
        obj([0.0])
    raising = CountingObjective(lambda x: 1 / 0)
    with pytest.raises(ObjectiveError):
        raising([0.0])


def test_trace_row_format_and_close():
    rec = TraceRecord(0, 1, np.array([0.1, 0.2]), 1.0 / 3.0, 1.0, accepted=True, update="init")
    row = rec.row()
    assert row[0] == "0" and row[2] == "0.33333333333333331" and row[7] == "1" and row[-2:] == ["0.10000000000000001",
                                                                                              "0.20000000000000001"]
    trace = [rec]
    close_trace(trace, 1, np.zeros(2), 0.0, 1.0)
    assert len(trace) == 1
    close_trace(trace, 4, np.zeros(2), 0.0, 1.0)
    assert trace[-1].update == "final" and trace[-1].evals == 4
