from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlectra import qadiabatic as qa
from qlectra.errors import BadSchedule, BadTimeStep, DegenerateGap, IndexOutOfRange


def test_gap_formula_matches_eigensolve():
    N, n = 64, 6
    H0, H1 = qa.grover_hamiltonians(n, 5)
    s_grid = np.linspace(0, 1, 100)
    for s in s_grid:
        w = np.linalg.eigvalsh((1 - s) * H0 + s * H1)
        assert w[1] - w[0] == pytest.approx(qa.grover_gap(s, N), abs=1e-8)
    assert qa.grover_gap(0.5, N) == pytest.approx(1 / 8, abs=1e-12)
    assert np.argmin(qa.grover_gap(np.linspace(0, 1, 101), N)) == 50


def test_roland_cerf_total_time_closed_form():
    assert qa.roland_cerf_time(1.0, 4, 1.0) == pytest.approx(4 * math.pi / (3 * math.sqrt(3)), abs=1e-9)


def test_roland_cerf_scales_like_sqrt_n():
    N = 1024
    ratio = qa.roland_cerf_time(1.0, N, 1.0) / (math.pi / 2 * math.sqrt(N))
    assert 0.95 < ratio <= 1.0


@settings(max_examples=30, deadline=None)
@given(N=st.integers(2, 256), eps=st.floats(0.05, 2.0))
def test_schedule_monotone_and_inverts(N, eps):
    sch = qa.roland_cerf_schedule(N, eps)
    ts = np.linspace(0, sch.T, 9)
    ss = [sch.s(t) for t in ts]
    assert ss[0] == pytest.approx(0, abs=1e-9) and ss[-1] == pytest.approx(1, abs=1e-9)
    assert all(b >= a - 1e-12 for a, b in zip(ss, ss[1:]))
    for t, s in zip(ts, ss):
        assert qa.roland_cerf_time(s, N, eps) == pytest.approx(t, abs=1e-6)


def test_schedule_errors():
    with pytest.raises(BadSchedule):
        qa.Schedule("linear", 0.0)
    with pytest.raises(BadSchedule):
        qa.Schedule("tabulated", 1.0, {"ts": [0, 0.5, 0.4], "ss": [0, 0.5, 1]})
    with pytest.raises(BadSchedule):
        qa.Schedule("cubic", 1.0)
    with pytest.raises(BadSchedule):
        qa.adiabatic_grover(2, 0, 0.1, schedule="sigmoid")


def test_tabulated_schedule_interpolates():
    sch = qa.Schedule("tabulated", 2.0, {"ts": [0, 1, 2], "ss": [0, 0.8, 1]})
    assert sch.s(0.5) == pytest.approx(0.4)
    assert sch.sdot(1.5) == pytest.approx(0.2)


def test_evolve_rejects_bad_step():
    with pytest.raises(BadTimeStep):
        qa.evolve(lambda t: np.eye(2), np.array([1, 0], complex), 1.0, 0.0)


def test_two_state_success():
    rc = qa.adiabatic_grover(1, 0, 0.1)
    lin = qa.adiabatic_grover(1, 0, 0.1, schedule="linear")
    assert rc["success"] > 0.99
    assert lin["success"] > 0.99


@pytest.mark.parametrize("T", [5.0, 10.0, 20.0, 40.0])
def test_roland_cerf_beats_linear_at_equal_time(T):
    rc = qa.adiabatic_grover(4, 3, 0.2, "roland_cerf", T=T)
    lin = qa.adiabatic_grover(4, 3, 0.2, "linear", T=T)
    assert rc["success"] >= lin["success"] - 1e-12


def test_adiabaticity_margins():
    N, n, eps = 16, 4, 0.3
    H0, H1 = qa.grover_hamiltonians(n, 0)
    ts_rc = qa.roland_cerf_schedule(N, eps)
    m_rc = qa.adiabaticity_margin(qa.TDHamiltonian(H0, H1, ts_rc), np.linspace(0, ts_rc.T, 41))
    assert m_rc <= eps + 1e-6
    T = qa.linear_time(N, eps)
    m_lin = qa.adiabaticity_margin(qa.TDHamiltonian(H0, H1, qa.linear_schedule(T)), np.linspace(0, T, 41))
    assert m_lin <= eps + 1e-6


def test_margin_detects_crossing():
    H0 = np.diag([0.0, 1.0])
    H1 = np.diag([1.0, 0.0])
    td = qa.TDHamiltonian(H0, H1, qa.linear_schedule(1.0))
    with pytest.raises(DegenerateGap):
        qa.adiabaticity_margin(td, [0.5])


@pytest.mark.parametrize("n", [2, 4, 6])
def test_continuous_grover_peak(n):
    r = qa.continuous_grover(n, 1)
    N = 2 ** n
    assert r["p_peak"] > 0.99
    # the exact peak sits at pi sqrt(N) / (2 weight) for weight 1/2
    assert r["t_peak"] == pytest.approx(math.pi * math.sqrt(N), rel=1e-6)
    assert abs(r["t_peak"] - r["pi_over_gap"]) / r["pi_over_gap"] < 0.02


def test_driver_ground_state_uniform():
    H = qa.build_driver(3)
    g = qa.ground_state(H)
    assert np.allclose(np.abs(g), 1 / math.sqrt(8))
    assert np.linalg.eigvalsh(H.mat)[0] == pytest.approx(0.0, abs=1e-12)


def test_disagree2_ground_states():
    H = qa.build_problem(qa.ProblemSpec("disagree2"))
    assert qa.ground_states(H) == [1, 2]


clause = st.lists(st.integers(1, 4).flatmap(lambda k: st.sampled_from([k, -k])), min_size=3, max_size=3)


@settings(max_examples=40, deadline=None)
@given(clauses=st.lists(clause, min_size=1, max_size=4), kind=st.sampled_from(["sat3", "exact_cover"]))
def test_problem_diagonal_is_cost(clauses, kind):
    spec = qa.ProblemSpec(kind, clauses=tuple(tuple(c) for c in clauses), n_vars=4)
    H = qa.build_problem(spec).mat
    assert np.allclose(H, np.diag(np.diag(H)))
    assert np.allclose(np.diag(H).real, [spec.cost(x) for x in range(16)])
    assert sorted(qa.ground_states(H)) == sorted(qa.classical_minima(spec))


@settings(max_examples=30, deadline=None)
@given(h=st.lists(st.floats(-2, 2), min_size=3, max_size=3),
       J=st.lists(st.tuples(st.sampled_from([(0, 1), (1, 2), (0, 2)]), st.floats(-2, 2)), max_size=3))
def test_ising_diagonal_is_cost(h, J):
    spec = qa.ProblemSpec("ising", h=tuple(h), J=tuple((i, j, v) for (i, j), v in J))
    H = qa.build_problem(spec).mat
    assert np.allclose(np.diag(H).real, [spec.cost(x) for x in range(8)])


def test_problem_validation():
    with pytest.raises(IndexOutOfRange):
        qa.build_problem(qa.ProblemSpec("sat3", clauses=((1, 2, 0),)))
    with pytest.raises(IndexOutOfRange):
        qa.build_problem(qa.ProblemSpec("ising", J=((0, 0, 1.0),)))
    with pytest.raises(IndexOutOfRange):
        qa.problem_from_json({"tsp": []})


def test_problem_from_json():
    spec = qa.problem_from_json({"sat3": [[1, -2, 3]]})
    assert spec.kind == "sat3" and spec.n == 3
    spec = qa.problem_from_json({"ising": {"h": [1, 0], "j": [[0, 1, -1]]}})
    assert spec.n == 2


def test_anneal_improves_with_time():
    Ht = qa.build_problem(qa.ProblemSpec("disagree2"))
    Hd = qa.build_driver(2)
    pops = []
    for T in (50.0, 100.0, 200.0):
        psi0 = qa.ground_state(Ht.mat + 10 * Hd.mat)
        r = qa.anneal(Ht, Hd, lambda t, T=T: 10 * (1 - t / T), T, psi0)
        pops.append(r["ground_population"])
    assert pops[0] < pops[1] < pops[2]
    assert pops[-1] > 0.99


def test_anneal_rejects_increasing_driver():
    Ht = qa.build_problem(qa.ProblemSpec("disagree2"))
    with pytest.raises(BadSchedule):
        qa.anneal(Ht, qa.build_driver(2), ([0, 1, 2], [1, 2, 0]), 2.0, np.ones(4) / 2)
