from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlectra import qalgo
from qlectra.errors import BadCutoff, BadTimeStep, Exhausted, FactorNotFound, NoSolutions, NotCoprime
from qlectra.qgate import GateMatrix, run, unitary_of
from qlectra.qstate import Ket


def oracle(n, marked):
    marked = set(marked)
    return qalgo.BooleanOracle(n, lambda x: x in marked)


@pytest.mark.parametrize("n,expected_k,expected_p", [(2, 1, 1.0), (3, 2, 0.9453125)])
def test_grover_closed_form(n, expected_k, expected_p):
    f = oracle(n, [1])
    rep = qalgo.grover(f, n, 1)
    theta = math.asin(1 / math.sqrt(2 ** n))
    assert rep.iterations == expected_k
    assert rep.success_prob == pytest.approx(expected_p, abs=1e-9)
    assert rep.success_prob == pytest.approx(math.sin((2 * expected_k + 1) * theta) ** 2, abs=1e-9)
    assert rep.oracle_calls == expected_k


def test_grover_needs_solutions():
    with pytest.raises(NoSolutions):
        qalgo.grover(oracle(3, []), 3, 0)


def test_multi_solution_iterations():
    # N = 64, l = 4: theta = asin(1/4), k = round(pi/(4 theta) - 1/2)
    theta = math.asin(0.25)
    k = qalgo.grover_iterations(6, 4)
    assert k == round(math.pi / (4 * theta) - 0.5) == 3
    rep = qalgo.grover(oracle(6, [3, 9, 27, 40]), 6, 4)
    assert rep.success_prob == pytest.approx(math.sin(7 * theta) ** 2, abs=1e-12)


def test_matrix_free_step_matches_reflections():
    n = 3
    f = oracle(n, [5])
    D = qalgo.diffusion(n).mat
    I_f = qalgo.oracle_reflection(f).mat
    a = qalgo.uniform(n)
    assert np.allclose(qalgo.grover_step(f, a), D @ I_f @ a)


def test_ancilla_oracle_kicks_phase():
    n = 2
    f = oracle(n, [2])
    psi = Ket((2,) * n, qalgo.uniform(n))
    out = qalgo.reflect_with_ancilla(f, psi)
    minus = np.array([1, -1]) / np.sqrt(2)
    assert np.allclose(out.amps, np.kron(qalgo.oracle_reflection(f).mat @ psi.amps, minus))
    assert f.query_count == 1


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 6), data=st.data())
def test_grover_step_is_unitary(n, data):
    marked = data.draw(st.sets(st.integers(0, 2 ** n - 1), min_size=1, max_size=3))
    f = oracle(n, marked)
    a = qalgo.uniform(n)
    for _ in range(3):
        a = qalgo.grover_step(f, a)
        assert np.linalg.norm(a) == pytest.approx(1.0)


def test_unknown_count_search_finds_solution():
    hits = 0
    for seed in range(30):
        f = oracle(6, [17, 44])
        try:
            x, q = qalgo.grover_unknown(f, 6, np.random.default_rng(seed))
        except Exhausted:
            continue
        assert x in (17, 44)
        hits += 1
    assert hits >= 28


def test_unknown_count_exhausts_without_solutions():
    with pytest.raises(Exhausted):
        qalgo.grover_unknown(oracle(4, []), 4, np.random.default_rng(0), max_stages=3)


def test_minimize_finds_argmin():
    rng = np.random.default_rng(2)
    vals = rng.permutation(32)
    found = [qalgo.grover_minimize(vals, 5, np.random.default_rng(s))[0] for s in range(10)]
    assert sum(v == int(np.argmin(vals)) for v in found) >= 9


@pytest.mark.parametrize("n", range(1, 9))
def test_qft_matches_dft(n):
    F = unitary_of(qalgo.qft(n)).mat
    assert np.max(np.abs(F - qalgo.dft_matrix(n))) < 1e-9
    ladder = unitary_of(qalgo.qft(n, reverse=False)).mat
    P = qalgo.bit_reverse_perm(n)
    assert np.max(np.abs(ladder - qalgo.dft_matrix(n)[P])) < 1e-9


def test_qft_truncation_monotone_and_bounded():
    n = 5
    F = unitary_of(qalgo.qft(n)).mat
    errs = [np.linalg.norm(unitary_of(qalgo.qft(n, c)).mat - F, 2) for c in range(1, n)]
    assert all(a >= b - 1e-12 for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-12
    for c, e in zip(range(1, n), errs):
        assert e <= qalgo.qft_truncation_bound(n, c) + 1e-9


def test_qft_bad_cutoff():
    with pytest.raises(BadCutoff):
        qalgo.qft(4, 0)


@pytest.mark.parametrize("n_bits,c", [(3, 5), (4, 3), (5, 31)])
def test_phase_estimation_exact(n_bits, c):
    U = GateMatrix(np.diag([1, np.exp(2j * np.pi * c / 2 ** n_bits)]))
    p = qalgo.phase_estimate_distribution(U, Ket((2,), [0, 1]), n_bits)
    assert p[c] == pytest.approx(1.0, abs=1e-9)


def test_phase_estimation_inexact_concentrates():
    U = GateMatrix(np.diag([1, np.exp(2j * np.pi * 0.3)]))
    p = qalgo.phase_estimate_distribution(U, Ket((2,), [0, 1]), 5)
    # nearest grid points to 0.3 * 32 = 9.6
    assert p[9] + p[10] > 0.8


def test_convergents_of_known_fraction():
    assert qalgo.convergents(Fraction(415, 93))[-1] == Fraction(415, 93)
    assert [f.denominator for f in qalgo.convergents(Fraction(3, 8))] == [1, 2, 3, 8]


@settings(max_examples=50, deadline=None)
@given(p=st.integers(1, 10 ** 6), q=st.integers(1, 10 ** 6))
def test_convergents_terminate_at_value(p, q):
    cs = qalgo.convergents(Fraction(p, q))
    assert cs[-1] == Fraction(p, q)
    dens = [c.denominator for c in cs]
    assert dens == sorted(dens)


@pytest.mark.parametrize("y,q", [(2, 15), (7, 15), (2, 21), (2, 33), (5, 33)])
def test_shor_order_matches_brute_force(y, q):
    assert qalgo.shor_order(y, q, np.random.default_rng(1)) == qalgo.brute_order(y, q)


def test_shor_order_errors():
    with pytest.raises(NotCoprime):
        qalgo.shor_order(3, 15, np.random.default_rng(0))


def test_shor_factor_small():
    a, b = qalgo.shor_factor(15, np.random.default_rng(0))
    assert {a, b} == {3, 5}
    assert qalgo.shor_factor(14, np.random.default_rng(0)) == (2, 7)
    with pytest.raises(FactorNotFound):
        qalgo.shor_factor(3, np.random.default_rng(0))


def test_modmul_is_permutation():
    P = qalgo.modmul_matrix(7, 15, 4)
    assert np.allclose(P @ P.T, np.eye(16))


def test_grid_conventions():
    X = qalgo.PotentialGrid.coords(4)
    p = qalgo.PotentialGrid.momenta(4)
    assert X[1] == pytest.approx(0.25) and X[-1] == pytest.approx(3.75)
    assert p[0] == pytest.approx(-2.0) and p[8] == pytest.approx(0.0)


def test_free_particle_kinetic_spectrum():
    grid = qalgo.PotentialGrid(4, np.zeros(16), mass=2.0)
    w = np.sort(np.linalg.eigvalsh(qalgo.kinetic_matrix(grid)))
    assert np.allclose(w, np.sort(qalgo.PotentialGrid.momenta(4) ** 2 / 4.0))


def test_zalka_fidelity_and_first_order():
    n = 6
    grid = qalgo.PotentialGrid.harmonic(n)
    psi0 = qalgo.gaussian_packet(n, 3.0, 0.5)
    exact = qalgo.exact_propagate(grid, psi0, 1.0)
    got = qalgo.zalka_wiesner(grid, psi0, 1.0, 1e-3)
    assert abs(np.vdot(exact.amps, got.amps)) ** 2 >= 0.999
    dts = [0.02, 0.01, 0.005, 0.0025]
    errs = [np.linalg.norm(qalgo.zalka_wiesner(grid, psi0, 1.0, dt).amps - exact.amps) for dt in dts]
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert abs(slope - 1.0) <= 0.15


def test_zalka_time_step_errors():
    grid = qalgo.PotentialGrid.harmonic(3)
    psi0 = qalgo.gaussian_packet(3, 1.4, 0.5)
    for t, dt in [(1.0, 0.0), (0.1, 0.2), (1.0, 0.3)]:
        with pytest.raises(BadTimeStep):
            qalgo.zalka_wiesner(grid, psi0, t, dt)


def test_zalka_preserves_norm():
    grid = qalgo.PotentialGrid.from_samples(5, [0, 6], [0, 3])
    psi = qalgo.zalka_wiesner(grid, qalgo.gaussian_packet(5, 2.0, 0.4, p0=1.0), 0.5, 0.01)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)


def test_qft_circuit_runs_on_basis_state():
    n = 3
    out = run(qalgo.qft(n), Ket.qubits("001"))
    assert np.allclose(out.amps, qalgo.dft_matrix(n)[:, 1])
