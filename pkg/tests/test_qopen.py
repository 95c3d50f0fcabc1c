from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlectra import qopen as Q
from qlectra.errors import BadDensity, BadRatio, CutoffTooSmall, DimensionOverflow, NotFound


def test_destroy_lowers():
    a = Q.destroy(4)
    assert np.allclose(a @ np.eye(4)[:, 2], math.sqrt(2) * np.eye(4)[:, 1])


def test_ratio_guard():
    with pytest.raises(BadRatio):
        Q.CavityModel(100.0, (2.0,))
    with pytest.warns(UserWarning):
        Q.CavityModel(100.0, (0.5,))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_rabi_half_period_transfer(n):
    model = Q.CavityModel(0.0, (1.0,), n_max=4)
    U = Q.propagator(Q.jc_hamiltonian(model), math.pi / (2 * math.sqrt(n)))
    amp = U[2 * (n - 1) + 1, 2 * n]
    assert abs(amp - (-1j)) < 1e-6


def test_rabi_trajectory_columns():
    r = Q.rabi_trajectory(Q.CavityModel(0.0, (1.0,), 3), 1, math.pi, math.pi / 20)
    assert r["p_n0"][0] == pytest.approx(1.0)
    assert r["p_n1m1"][10] == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(r["p_n0"] + r["p_n1m1"], 1.0)


def test_rwa_agrees_with_full_model():
    g, w = 1.0, 1000.0
    ts = np.linspace(0, math.pi / g, 21)
    pops = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for rwa in (True, False):
            m = Q.CavityModel(w, (g,), 3, rwa)
            psi = np.zeros(m.dim, complex)
            psi[2] = 1.0
            pops.append(np.abs(Q.trajectory(Q.jc_hamiltonian(m), psi, ts)[:, 1]) ** 2)
    assert np.max(np.abs(pops[0] - pops[1])) < g / w


def test_excitation_number_conserved_under_tch():
    cav = Q.CavityModel(0.0, (1.0,), 2)
    net = Q.CavityNetwork((cav, cav), ((0, 1, 3.0),))
    H = Q.tch_hamiltonian(net)
    Nop = Q.excitation_operator([c.dims for c in net.cavities])
    assert np.allclose(H @ Nop, Nop @ H)


def test_network_dimension_guard():
    cav = Q.CavityModel(0.0, (1.0, 1.0), 7)
    with pytest.raises(DimensionOverflow):
        Q.tch_hamiltonian(Q.CavityNetwork((cav, cav, cav)))


def test_cutoff_detection():
    m = Q.CavityModel(0.0, (1.0,), 1)
    H = Q.jc_hamiltonian(m)
    psi = np.zeros(m.dim, complex)
    psi[2] = 1.0  # one photon already at the top level
    with pytest.raises(CutoffTooSmall):
        Q.check_cutoff(Q.trajectory(H, psi, [0.0]), m.dims, 0)


def test_network_from_json():
    net = Q.network_from_json({"g": [1, 1], "n_max": 2, "hops": [[0, 1, 5.0]]})
    assert net.dims == (3, 2, 3, 2)


def _damping(gamma=1.0):
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    return Q.LindbladModel(np.zeros((2, 2)), ((sm, gamma),))


def test_amplitude_damping_matches_exponential():
    ts, rhos = Q.lindblad_evolve(_damping(), np.diag([0, 1]).astype(complex), 5.0, 1e-3, store_every=50)
    pop = rhos[:, 1, 1].real
    assert np.max(np.abs(pop - np.exp(-ts))) < 1e-3
    assert np.max(np.abs(np.trace(rhos, axis1=1, axis2=2) - 1)) < 1e-6


def test_lindblad_first_order():
    errs = []
    for dt in (4e-3, 2e-3, 1e-3):
        ts, rhos = Q.lindblad_evolve(_damping(), np.diag([0, 1]).astype(complex), 2.0, dt, store_every=10 ** 6)
        errs.append(abs(rhos[-1, 1, 1].real - math.exp(-2.0)))
    slope = np.polyfit(np.log([4e-3, 2e-3, 1e-3]), np.log(errs), 1)[0]
    assert abs(slope - 1) < 0.15


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_lindblad_keeps_density_valid(seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    H = g + g.conj().T
    L = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho0 = np.eye(3, dtype=complex) / 3
    _, rhos = Q.lindblad_evolve(Q.LindbladModel(H, ((L, 0.3),)), rho0, 0.5, 2e-3, store_every=50)
    for r in rhos:
        assert np.trace(r).real == pytest.approx(1.0, abs=1e-9)
        assert np.allclose(r, r.conj().T)
        assert np.linalg.eigvalsh(r).min() > -1e-3


def test_commensuration_search():
    n1, n2, err = Q.cocsign_timings(0.05)
    assert (n1, n2) == (4, 6)
    assert err == pytest.approx(abs(math.sqrt(2) * 6 - 8.5))
    with pytest.raises(NotFound):
        Q.cocsign_timings(1e-6, n_cap=5)


@settings(max_examples=30, deadline=None)
@given(tol=st.floats(0.02, 1.0))
def test_commensuration_result_within_tol(tol):
    n1, n2, err = Q.cocsign_timings(tol)
    assert err <= tol
    assert err == pytest.approx(Q.commensuration_error(n1, n2))


def test_cocsign_phases():
    r = Q.cocsign_simulate(4, 6, g=1.0, nu=1000.0)
    target = {"00": 0.0, "01": 0.0, "10": math.pi, "11": 0.0}
    for k, ph in target.items():
        diff = (r.phases[k] - ph + math.pi) % (2 * math.pi) - math.pi
        assert abs(diff) <= math.pi * 0.05
        assert r.fidelity[k] > 0.99


def test_cocsign_ratio_guard():
    with pytest.raises(BadRatio):
        Q.cocsign_simulate(4, 6, g=1.0, nu=50.0)


def test_randomized_decoupling_small_residual():
    d = np.ones((3, 3)) - np.eye(3)
    res = np.array([Q.randomized_decoupling(d, (0, 1), 1000.0, 1.0, 1e-4, np.random.default_rng(s))[1]
                    for s in range(20)])
    assert np.sqrt(np.mean(res ** 2, axis=0)).max() < 0.05


def test_decoupling_density_guard():
    d = np.ones((3, 3)) - np.eye(3)
    with pytest.raises(BadDensity):
        Q.randomized_decoupling(d, (0, 1), 1e4, 1.0, 1e-4, np.random.default_rng(0))


def test_binary_periodic_decoupling_cancels():
    d = np.ones((4, 4)) - np.eye(4)
    _, res, cycle = Q.periodic_decoupling(d, (0, 1), 1.0, 1e-3, "binary")
    assert cycle == 4
    assert np.max(np.abs(res)) < 1e-9


def test_predicted_phase_without_flips():
    d = np.array([[0, 0.3, 0.2], [0.3, 0, 0.1], [0.2, 0.1, 0]])
    out = Q.predicted_phase(d, (0, 1), 2.0, [1, -1, 1])
    assert out["target"] == pytest.approx(0.3 * 2.0 * -1)


def test_cnot_from_diagonal():
    r = Q.cnot_from_diagonal([0, 0, 0, 1.0])
    assert (r["n"], r["m"]) == (22, 3)
    assert r["phase_error"] <= 1e-2
    exact = Q.cnot_from_diagonal([0, 0, 0, math.pi])
    assert exact["n"] == 1
    assert exact["operator_error"] < 1e-12
    with pytest.raises(NotFound):
        Q.cnot_from_diagonal([1, 1, 1, 1])
