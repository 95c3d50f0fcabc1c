"""Gate matrices, circuits and their action on registers.

A circuit is a list of steps over a fixed register signature.  A step is
either a gate acting on a tuple of target subsystems or a ``Permute`` that
reorders subsystems (used for the bit reversal at the end of the QFT).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import BadParams, DimensionMismatch, TargetCollision, UnsupportedControlCount
from .qstate import Ket

UNITARY_TOL = 1e-9


@dataclass(frozen=True)
class GateMatrix:
    mat: np.ndarray
    name: str = "U"
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise BadParams(f"gate matrix must be square, got {m.shape}")
        if self.check:
            err = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
            if err > UNITARY_TOL:
                raise BadParams(f"gate {self.name} not unitary (err {err:.2e})")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def dag(self) -> "GateMatrix":
        return GateMatrix(self.mat.conj().T, self.name + "^dag", check=False)

    def __matmul__(self, other: "GateMatrix") -> "GateMatrix":
        return GateMatrix(self.mat @ other.mat, f"{self.name}*{other.name}", check=False)

    def power(self, p: int) -> "GateMatrix":
        return GateMatrix(np.linalg.matrix_power(self.mat, p), f"{self.name}^{p}", check=False)


@dataclass(frozen=True)
class Step:
    gate: GateMatrix
    targets: tuple[int, ...]


@dataclass(frozen=True)
class Permute:
    """Subsystem reordering: output axis i carries input axis order[i]."""
    order: tuple[int, ...]


StepLike = Union[Step, Permute]


@dataclass(frozen=True)
class Circuit:
    dims: tuple[int, ...]
    steps: tuple[StepLike, ...] = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        steps = tuple(s if isinstance(s, (Step, Permute)) else Step(s[0], tuple(s[1])) for s in self.steps)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "steps", steps)
        for s in steps:
            if isinstance(s, Permute):
                if sorted(s.order) != list(range(len(dims))):
                    raise DimensionMismatch(f"bad permutation {s.order}")
                if any(dims[o] != dims[i] for i, o in enumerate(s.order)):
                    raise DimensionMismatch("permutation must preserve the register signature")
            else:
                _check_targets(dims, s.gate, s.targets)

    def __add__(self, other: "Circuit") -> "Circuit":
        if self.dims != other.dims:
            raise DimensionMismatch("circuit signatures differ")
        return Circuit(self.dims, self.steps + other.steps)

    def gate_count(self) -> int:
        return sum(isinstance(s, Step) for s in self.steps)

    def inverse(self) -> "Circuit":
        out = []
        for s in reversed(self.steps):
            if isinstance(s, Permute):
                out.append(Permute(tuple(int(i) for i in np.argsort(s.order))))
            else:
                out.append(Step(s.gate.dag, s.targets))
        return Circuit(self.dims, tuple(out))


def _check_targets(dims, g: GateMatrix, targets):
    targets = tuple(targets)
    if len(set(targets)) != len(targets):
        raise TargetCollision(f"repeated target in {targets}")
    if any(t < 0 or t >= len(dims) for t in targets):
        raise DimensionMismatch(f"targets {targets} out of range for {len(dims)} subsystems")
    if int(np.prod([dims[t] for t in targets])) != g.dim:
        raise DimensionMismatch(f"gate dim {g.dim} does not match targets {targets} of {dims}")


# --- gate library -----------------------------------------------------------

_S2 = 1 / np.sqrt(2)
_FIXED = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]]),
    "H": _S2 * np.array([[1, 1], [1, -1]]),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "CSIGN": np.diag([1, 1, 1, -1]),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]),
}
_TOFFOLI = np.eye(8)
_TOFFOLI[6:, 6:] = [[0, 1], [1, 0]]
_FIXED["TOFFOLI"] = _TOFFOLI


def make_gate(name: str, **params) -> GateMatrix:
    """Named gate constructor.

    Fixed: X Y Z H I CNOT CSIGN SWAP TOFFOLI.
    Parametric: PHASE(phi) = diag(1, e^{i phi}); U(k, j) = diag(1,1,1,e^{i pi/2^{k-j}});
    CPHASE(phi) = diag(1,1,1,e^{i phi}).
    """
    key = name.upper()
    if key in _FIXED:
        if params:
            raise BadParams(f"{name} takes no parameters")
        return GateMatrix(_FIXED[key], key)
    try:
        if key in ("PHASE", "LAMBDA"):
            phi = float(params["phi"])
            return GateMatrix(np.diag([1, np.exp(1j * phi)]), f"L({phi:g})")
        if key == "CPHASE":
            phi = float(params["phi"])
            return GateMatrix(np.diag([1, 1, 1, np.exp(1j * phi)]), f"CP({phi:g})")
        if key == "U":
            k, j = int(params["k"]), int(params["j"])
            if k <= j:
                raise BadParams("U_{k,j} requires k > j")
            return GateMatrix(np.diag([1, 1, 1, np.exp(1j * np.pi / 2 ** (k - j))]), f"U{k},{j}")
    except (KeyError, TypeError, ValueError) as e:
        raise BadParams(f"bad parameters for {name}: {params}") from e
    raise BadParams(f"unknown gate {name!r}")


def gate_from_json(doc) -> GateMatrix:
    if isinstance(doc, str):
        return make_gate(doc)
    if "name" in doc:
        params = {k: v for k, v in doc.items() if k != "name"}
        return make_gate(doc["name"], **params)
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    return GateMatrix(re + 1j * im, doc.get("label", "U"))


def circuit_from_json(doc: dict) -> Circuit:
    steps = []
    for s in doc["steps"]:
        if "permute" in s:
            steps.append(Permute(tuple(s["permute"])))
        else:
            steps.append(Step(gate_from_json(s["gate"]), tuple(s["targets"])))
    return Circuit(tuple(doc["dims"]), tuple(steps))


def circuit_to_json(c: Circuit) -> dict:
    steps = []
    for s in c.steps:
        if isinstance(s, Permute):
            steps.append({"permute": list(s.order)})
        else:
            steps.append({"gate": {"re": s.gate.mat.real.tolist(), "im": s.gate.mat.imag.tolist(),
                                   "label": s.gate.name}, "targets": list(s.targets)})
    return {"dims": list(c.dims), "steps": steps}


# --- application ------------------------------------------------------------

def apply_tensor(t: np.ndarray, mat: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply `mat` to axes `targets` of tensor t (extra trailing axes ride along)."""
    k = len(targets)
    tdims = [t.shape[i] for i in targets]
    g = mat.reshape(tdims + tdims)
    out = np.tensordot(g, t, axes=(list(range(k, 2 * k)), list(targets)))
    # tensordot puts the gate's output axes first; move them back into place
    return np.moveaxis(out, list(range(k)), list(targets))


def apply(psi: Ket, g: GateMatrix, targets: Sequence[int]) -> Ket:
    targets = tuple(targets)
    _check_targets(psi.dims, g, targets)
    return Ket(psi.dims, apply_tensor(psi.tensor(), g.mat, targets).reshape(-1))


def _run_tensor(c: Circuit, t: np.ndarray) -> np.ndarray:
    n = len(c.dims)
    for s in c.steps:
        if isinstance(s, Permute):
            extra = tuple(range(n, t.ndim))
            t = t.transpose(tuple(s.order) + extra)
        else:
            t = apply_tensor(t, s.gate.mat, s.targets)
    return t


def run(c: Circuit, psi: Ket) -> Ket:
    if tuple(psi.dims) != c.dims:
        raise DimensionMismatch(f"ket dims {psi.dims} vs circuit {c.dims}")
    return Ket(c.dims, _run_tensor(c, psi.tensor()).reshape(-1))


def unitary_of(c: Circuit) -> GateMatrix:
    d = int(np.prod(c.dims))
    t = np.eye(d, dtype=complex).reshape(c.dims + (d,))
    out = _run_tensor(c, t).reshape(d, d)
    return GateMatrix(out, "circuit", check=False)


def embed(g: GateMatrix, targets: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Full-register matrix of a gate acting on `targets`."""
    return unitary_of(Circuit(tuple(dims), (Step(g, tuple(targets)),))).mat


# --- constructions ------------------------------------------------------------

def gate_root(U: GateMatrix) -> GateMatrix:
    """Principal square root: eigenphases halved into (-pi/2, pi/2]."""
    # Schur form of a normal matrix is diagonal, giving an orthonormal eigenbasis
    # even when eigenvalues are degenerate.
    from scipy.linalg import schur

    T, Z = schur(U.mat, output="complex")
    lam = np.diag(T)
    ph = np.angle(lam)
    ph = np.where(ph <= -np.pi + 1e-15, np.pi, ph)  # angle -pi maps to +pi
    root = np.abs(lam) ** 0.5 * np.exp(0.5j * ph)
    V = Z @ np.diag(root) @ Z.conj().T
    return GateMatrix(V, f"sqrt({U.name})", check=False)


def controlled_matrix(U: GateMatrix, k: int = 1, ctrl_dim: int = 2) -> np.ndarray:
    """Direct block construction: identity unless all k controls are in the top state."""
    d = U.dim
    nc = ctrl_dim ** k
    M = np.eye(nc * d, dtype=complex)
    M[-d:, -d:] = U.mat
    return M


def controlled(U: GateMatrix, k: int = 1) -> Circuit:
    """Circuit for Lambda_k U on a register (controls..., target).

    k = 1 is a single controlled-U step.  k = 2 uses the five-gate network
    built from CNOT and controlled V, V^dag with V^2 = U.
    """
    if k not in (1, 2):
        raise UnsupportedControlCount(f"only k in (1, 2) is supported, got {k}")
    d = U.dim
    if k == 1:
        return Circuit((2, d), (Step(GateMatrix(controlled_matrix(U), f"C{U.name}"), (0, 1)),))
    V = gate_root(U)
    cV = GateMatrix(controlled_matrix(V), f"C{V.name}", check=False)
    cVd = GateMatrix(controlled_matrix(V.dag), f"C{V.name}^dag", check=False)
    cnot = make_gate("CNOT")
    steps = (
        Step(cV, (1, 2)),
        Step(cnot, (0, 1)),
        Step(cVd, (1, 2)),
        Step(cnot, (0, 1)),
        Step(cV, (0, 2)),
    )
    return Circuit((2, 2, d), steps)


def u_seq(U: GateMatrix, n_ctrl: int) -> Circuit:
    """|x, a> -> |U^a x, a> on register (target, counter qubits), counter big-endian."""
    steps = []
    P = U.mat
    for j in range(n_ctrl):
        # counter qubit at register index n_ctrl - j carries weight 2^j
        steps.append(Step(GateMatrix(controlled_matrix(GateMatrix(P, check=False)), f"C{U.name}^{2**j}",
                                     check=False), (n_ctrl - j, 0)))
        P = P @ P
    return Circuit((U.dim,) + (2,) * n_ctrl, tuple(steps))


def one_qubit_params(U: GateMatrix) -> tuple[float, float, float, float]:
    """Return (alpha, beta, gamma, theta) with
    U = e^{i alpha} [[e^{i beta} cos t, e^{i gamma} sin t], [-e^{-i gamma} sin t, e^{-i beta} cos t]].
    """
    m = U.mat
    if m.shape != (2, 2):
        raise BadParams("one-qubit gate expected")
    det = np.linalg.det(m)
    alpha = 0.5 * np.angle(det)
    su = m * np.exp(-1j * alpha)
    theta = float(np.arctan2(abs(su[0, 1]), abs(su[0, 0])))
    beta = float(np.angle(su[0, 0])) if abs(su[0, 0]) > 1e-12 else 0.0
    gamma = float(np.angle(su[0, 1])) if abs(su[0, 1]) > 1e-12 else 0.0
    return float(alpha), beta, gamma, theta


def one_qubit_from_params(alpha, beta, gamma, theta) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.exp(1j * alpha) * np.array(
        [[np.exp(1j * beta) * c, np.exp(1j * gamma) * s], [-np.exp(-1j * gamma) * s, np.exp(-1j * beta) * c]]
    )


def random_unitary(d: int, rng: np.random.Generator) -> GateMatrix:
    from scipy.stats import unitary_group

    if d == 1:
        return GateMatrix(np.exp(2j * np.pi * rng.random()).reshape(1, 1), "R")
    return GateMatrix(unitary_group.rvs(d, random_state=rng), "R")
