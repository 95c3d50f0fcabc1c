from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlectra.errors import BadParams, DimensionMismatch, TargetCollision, UnsupportedControlCount
from qlectra.qgate import (
    Circuit,
    GateMatrix,
    Permute,
    Step,
    apply,
    circuit_from_json,
    circuit_to_json,
    controlled,
    controlled_matrix,
    embed,
    gate_root,
    make_gate,
    one_qubit_from_params,
    one_qubit_params,
    random_unitary,
    run,
    u_seq,
    unitary_of,
)
from qlectra.qstate import Ket

seeds = st.integers(0, 2 ** 32 - 1)


def test_hadamard_matrix():
    H = make_gate("H").mat
    assert np.allclose(H, np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    out = apply(Ket.qubits("0"), make_gate("H"), (0,))
    assert np.allclose(out.amps, [1 / np.sqrt(2), 1 / np.sqrt(2)])


def test_cnot_truth_table():
    c = make_gate("CNOT")
    for x, y in [("00", "00"), ("01", "01"), ("10", "11"), ("11", "10")]:
        assert np.allclose(apply(Ket.qubits(x), c, (0, 1)).amps, Ket.qubits(y).amps)


def test_cnot_reversed_targets():
    # control on the second qubit
    out = apply(Ket.qubits("01"), make_gate("CNOT"), (1, 0))
    assert np.allclose(out.amps, Ket.qubits("11").amps)


def test_toffoli_and_swap():
    assert np.allclose(apply(Ket.qubits("110"), make_gate("TOFFOLI"), (0, 1, 2)).amps, Ket.qubits("111").amps)
    assert np.allclose(apply(Ket.qubits("10"), make_gate("SWAP"), (0, 1)).amps, Ket.qubits("01").amps)


def test_parametric_gates():
    U = make_gate("U", k=3, j=1).mat
    assert np.isclose(U[3, 3], np.exp(1j * np.pi / 4))
    with pytest.raises(BadParams):
        make_gate("U", k=1, j=2)
    with pytest.raises(BadParams):
        make_gate("H", phi=1.0)
    with pytest.raises(BadParams):
        make_gate("NOPE")


def test_non_unitary_rejected():
    with pytest.raises(BadParams):
        GateMatrix(np.array([[1, 1], [0, 1]]))


def test_target_errors():
    with pytest.raises(TargetCollision):
        Circuit((2, 2), (Step(make_gate("CNOT"), (0, 0)),))
    with pytest.raises(DimensionMismatch):
        Circuit((2, 2), (Step(make_gate("CNOT"), (0, 2)),))
    with pytest.raises(DimensionMismatch):
        Circuit((3, 2), (Step(make_gate("CNOT"), (0, 1)),))


def test_three_controls_unsupported():
    with pytest.raises(UnsupportedControlCount):
        controlled(make_gate("X"), 3)


def test_lambda2_x_is_toffoli():
    assert np.allclose(unitary_of(controlled(make_gate("X"), 2)).mat, make_gate("TOFFOLI").mat, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, d=st.integers(2, 3))
def test_lambda2_network_matches_block_form(seed, d):
    U = random_unitary(d, np.random.default_rng(seed))
    net = unitary_of(controlled(U, 2)).mat
    assert np.allclose(net, controlled_matrix(U, 2), atol=1e-9)
    assert controlled(U, 2).gate_count() == 5


@settings(max_examples=40, deadline=None)
@given(seed=seeds, d=st.integers(1, 4))
def test_gate_root_squares_back(seed, d):
    U = random_unitary(d, np.random.default_rng(seed))
    V = gate_root(U)
    assert np.allclose(V.mat @ V.mat, U.mat, atol=1e-9)
    assert np.allclose(V.mat.conj().T @ V.mat, np.eye(d), atol=1e-9)


def test_gate_root_of_minus_identity():
    V = gate_root(GateMatrix(-np.eye(2)))
    assert np.allclose(V.mat, 1j * np.eye(2))


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_one_qubit_params_round_trip(seed):
    U = random_unitary(2, np.random.default_rng(seed))
    assert np.allclose(one_qubit_from_params(*one_qubit_params(U)), U.mat, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=seeds, n=st.integers(1, 3))
def test_circuit_inverse(seed, n):
    rng = np.random.default_rng(seed)
    dims = (2,) * (n + 1)
    steps = []
    for _ in range(5):
        t = tuple(int(x) for x in rng.permutation(n + 1)[:2])
        steps.append(Step(random_unitary(4, rng), t))
    steps.append(Permute(tuple(int(x) for x in rng.permutation(n + 1))))
    c = Circuit(dims, tuple(steps))
    U = unitary_of(c).mat
    assert np.allclose(unitary_of(c.inverse()).mat @ U, np.eye(U.shape[0]), atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=seeds)
def test_apply_matches_embedded_matrix(seed):
    rng = np.random.default_rng(seed)
    dims = (2, 3, 2)
    g = random_unitary(4, rng)
    psi = Ket(dims, rng.normal(size=12) + 1j * rng.normal(size=12))
    direct = apply(psi, g, (2, 0)).amps
    assert np.allclose(direct, embed(g, (2, 0), dims) @ psi.amps)


def test_permute_convention():
    c = Circuit((2, 2, 2), (Permute((2, 1, 0)),))
    assert np.allclose(run(c, Ket.qubits("100")).amps, Ket.qubits("001").amps)


def test_u_seq_powers():
    ph = np.exp(2j * np.pi * 3 / 8)
    U = GateMatrix(np.diag([1, ph]))
    c = u_seq(U, 3)
    for a in range(8):
        bits = format(a, "03b")
        psi = Ket((2, 2, 2, 2), np.kron([0, 1], Ket.qubits(bits).amps))
        out = run(c, psi)
        assert np.allclose(out.amps, ph ** a * psi.amps)


def test_json_round_trip():
    c = Circuit((2, 2), (Step(make_gate("H"), (0,)), Step(make_gate("CNOT"), (0, 1)), Permute((1, 0))))
    back = circuit_from_json(circuit_to_json(c))
    assert np.allclose(unitary_of(back).mat, unitary_of(c).mat)
    named = circuit_from_json({"dims": [2], "steps": [{"gate": {"name": "PHASE", "phi": 0.5}, "targets": [0]}]})
    assert np.isclose(unitary_of(named).mat[1, 1], np.exp(0.5j))
