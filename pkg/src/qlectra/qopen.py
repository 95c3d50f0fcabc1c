"""Cavity QED (JC / Tavis-Cummings / JCH), Rabi dynamics, Lindblad
integration, the coCSign photon schedule, NOT-based decoupling of an
always-on diagonal interaction, and CNOT from a fixed diagonal gate."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import (BadDensity, BadRatio, BadTimeStep, CutoffTooSmall, DimensionMismatch,
                     DimensionOverflow, NotFound)
from .qstate import DensityOp

MAX_DIM = 4096


# --- operators ------------------------------------------------------------------

def destroy(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)


SIGMA = np.array([[0, 1], [0, 0]], dtype=complex)  # atom lowering |1> -> |0>


def _kron(*ops) -> np.ndarray:
    return reduce(np.kron, ops)


def _embed(op: np.ndarray, site: int, dims: Sequence[int]) -> np.ndarray:
    return _kron(*[op if i == site else np.eye(d) for i, d in enumerate(dims)])


@dataclass(frozen=True)
class CavityModel:
    """One field mode (photons 0..n_max) coupled to len(g) two-level atoms.

    omega = 0 selects the interaction frame (free part dropped); otherwise
    the RWA requires max(g)/omega <= 1e-2 and warns above 1e-3.
    """
    omega: float
    g: tuple = (1.0,)
    n_max: int = 3
    rwa: bool = True

    def __post_init__(self):
        g = tuple(float(x) for x in (self.g if np.iterable(self.g) else (self.g,)))
        object.__setattr__(self, "g", g)
        if any(x < 0 for x in g):
            raise BadRatio("couplings must be non-negative")
        if self.n_max < 1:
            raise BadRatio("n_max must be >= 1")
        if self.rwa and self.omega > 0 and g:
            ratio = max(g) / self.omega
            if ratio > 1e-2:
                raise BadRatio(f"g/omega = {ratio:.3g} too large for the RWA")
            if ratio > 1e-3:
                warnings.warn(f"g/omega = {ratio:.3g} exceeds 1e-3; RWA accuracy degrades", stacklevel=2)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.n_max + 1,) + (2,) * len(self.g)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))


def _cavity_terms(model: CavityModel, offset: int, dims: Sequence[int]) -> np.ndarray:
    a = _embed(destroy(model.n_max + 1), offset, dims)
    H = model.omega * a.conj().T @ a
    for k, gk in enumerate(model.g):
        s = _embed(SIGMA, offset + 1 + k, dims)
        H = H + model.omega * s.conj().T @ s
        if model.rwa:
            H = H + gk * (a.conj().T @ s + a @ s.conj().T)
        else:
            H = H + gk * (a.conj().T + a) @ (s + s.conj().T)
    return H


def jc_hamiltonian(model: CavityModel) -> np.ndarray:
    """JC (one atom) or Tavis-Cummings (several atoms); photon factor first."""
    return _cavity_terms(model, 0, model.dims)


def excitation_operator(dims_per_cavity: Sequence[tuple[int, ...]]) -> np.ndarray:
    dims = [d for cav in dims_per_cavity for d in cav]
    N = np.zeros((int(np.prod(dims)),) * 2, dtype=complex)
    for i, d in enumerate(dims):
        N += _embed(np.diag(np.arange(d)).astype(complex), i, dims)
    return N


@dataclass(frozen=True)
class CavityNetwork:
    cavities: tuple
    hops: tuple = ()  # (i, j, mu)

    def __post_init__(self):
        object.__setattr__(self, "cavities", tuple(self.cavities))
        object.__setattr__(self, "hops", tuple(tuple(h) for h in self.hops))
        m = len(self.cavities)
        seen = {}
        for i, j, mu in self.hops:
            if not (0 <= i < m and 0 <= j < m) or i == j:
                raise DimensionMismatch(f"bad hop ({i}, {j})")
            if mu < 0:
                raise BadRatio("hop amplitudes must be non-negative")
            key = (min(i, j), max(i, j))
            if key in seen and seen[key] != mu:
                raise DimensionMismatch(f"asymmetric hop {key}")
            seen[key] = mu

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for c in self.cavities for d in c.dims)

    def offsets(self) -> list[int]:
        out, k = [], 0
        for c in self.cavities:
            out.append(k)
            k += len(c.dims)
        return out


def hop_operator(net: CavityNetwork, i: int, j: int) -> np.ndarray:
    dims = net.dims
    off = net.offsets()
    ai = _embed(destroy(net.cavities[i].n_max + 1), off[i], dims)
    aj = _embed(destroy(net.cavities[j].n_max + 1), off[j], dims)
    return ai.conj().T @ aj + aj.conj().T @ ai


def tch_hamiltonian(net: CavityNetwork, include_hops: bool = True) -> np.ndarray:
    dims = net.dims
    D = int(np.prod(dims))
    if D > MAX_DIM:
        raise DimensionOverflow(f"total dimension {D} > {MAX_DIM}")
    H = np.zeros((D, D), dtype=complex)
    for c, off in zip(net.cavities, net.offsets()):
        H += _cavity_terms(c, off, dims)
    if include_hops:
        done = set()
        for i, j, mu in net.hops:
            key = (min(i, j), max(i, j))
            if key in done:
                continue
            done.add(key)
            H += mu * hop_operator(net, i, j)
    return H


def network_from_json(doc: dict) -> CavityNetwork:
    """{"omega", "g": [...] (one atom per cavity), "n_max", "rwa", "hops": [[i, j, mu], ...]}."""
    omega = float(doc.get("omega", 0.0))
    n_max = int(doc.get("n_max", 3))
    rwa = bool(doc.get("rwa", True))
    g = doc.get("g", [1.0])
    cavs = tuple(CavityModel(omega, (float(x),), n_max, rwa) for x in g)
    return CavityNetwork(cavs, tuple(tuple(h) for h in doc.get("hops", [])))


# --- unitary dynamics --------------------------------------------------------------

def propagator(H: np.ndarray, t: float) -> np.ndarray:
    w, v = np.linalg.eigh(H)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def trajectory(H: np.ndarray, psi0: np.ndarray, times: Sequence[float]) -> np.ndarray:
    """States at the requested times (exact, via one eigendecomposition)."""
    w, v = np.linalg.eigh(H)
    c0 = v.conj().T @ psi0
    return np.array([v @ (np.exp(-1j * w * t) * c0) for t in times])


def rabi_trajectory(model: CavityModel, n: int, T: float, dt: float) -> dict:
    """Populations of |n, 0> and |n-1, 1> starting from |n, 0> (single atom)."""
    if not dt > 0:
        raise BadTimeStep("dt must be positive")
    if len(model.g) != 1 or not 1 <= n <= model.n_max:
        raise DimensionMismatch("rabi_trajectory needs one atom and 1 <= n <= n_max")
    H = jc_hamiltonian(model)
    psi0 = np.zeros(model.dim, dtype=complex)
    psi0[2 * n] = 1.0
    times = np.arange(0, T + 0.5 * dt, dt)
    states = trajectory(H, psi0, times)
    check_cutoff(states, model.dims, 0)
    pops = np.abs(states) ** 2
    return {"t": times, "p_n0": pops[:, 2 * n], "p_n1m1": pops[:, 2 * (n - 1) + 1], "states": states}


def check_cutoff(states: np.ndarray, dims: Sequence[int], photon_axis: int, tol: float = 1e-6):
    """Raise CutoffTooSmall if the top photon level ever holds more than tol."""
    states = np.atleast_2d(states)
    t = np.abs(states.reshape((states.shape[0],) + tuple(dims))) ** 2
    top = np.take(t, dims[photon_axis] - 1, axis=1 + photon_axis)
    worst = float(top.reshape(states.shape[0], -1).sum(axis=1).max())
    if worst > tol:
        raise CutoffTooSmall(f"top photon level population {worst:.3g} > {tol}")
    return worst


# --- Lindblad ------------------------------------------------------------------------

@dataclass(frozen=True)
class LindbladModel:
    H: np.ndarray
    factors: tuple = ()  # (A, gamma)

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        object.__setattr__(self, "H", H)
        for A, gam in self.factors:
            if gam < 0:
                raise BadTimeStep("rates must be non-negative")
            if np.shape(A) != H.shape:
                raise DimensionMismatch("factor shape differs from H")

    def dissipator(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho)
        for A, gam in self.factors:
            A = np.asarray(A, dtype=complex)
            AdA = A.conj().T @ A
            out += gam * (A @ rho @ A.conj().T - 0.5 * (AdA @ rho + rho @ AdA))
        return out


def _clamp_psd(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    if w.min() >= 0:
        return rho
    neg = -w[w < 0].sum()
    w = np.clip(w, 0, None)
    # take the negative mass back from the positive eigenvalues in proportion
    w = w - neg * w / w.sum()
    return (v * w) @ v.conj().T


def lindblad_evolve(model: LindbladModel, rho0: np.ndarray | DensityOp, T: float, dt: float,
                    store_every: int = 1, clamp_every: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Two-step Euler: unitary commutator step, then the dissipator on the
    intermediate matrix; hermitize and renormalize every step and clamp
    negative eigenvalues every `clamp_every` steps."""
    if not dt > 0 or T < 0:
        raise BadTimeStep("need dt > 0 and T >= 0")
    scale = max([np.linalg.norm(model.H, 2)] + [g for _, g in model.factors])
    if dt * scale > 0.1:
        warnings.warn(f"dt * rate = {dt * scale:.3g} > 0.1; Euler error will be large", stacklevel=2)
    rho = np.array(rho0.mat if isinstance(rho0, DensityOp) else rho0, dtype=complex)
    H = model.H
    steps = int(round(T / dt))
    ts, out = [0.0], [rho.copy()]
    for k in range(1, steps + 1):
        rt = rho - 1j * (H @ rho - rho @ H) * dt
        rho = rt + model.dissipator(rt) * dt
        rho = rho + rho.conj().T
        rho = rho / np.trace(rho).real
        if k % clamp_every == 0:
            rho = _clamp_psd(rho)
        if k % store_every == 0 or k == steps:
            ts.append(k * dt)
            out.append(rho.copy())
    return np.array(ts), np.array(out)


# --- coCSign ---------------------------------------------------------------------------

def commensuration_error(n1: int, n2: int) -> float:
    """|2 n2 tau2 - 2 n1 tau1 - tau1/2| in units of tau1 (tau2 = tau1/sqrt 2)."""
    return abs(2 * n2 / math.sqrt(2) - 2 * n1 - 0.5)


def cocsign_timings(tol: float = 0.05, n_cap: int = 10) -> tuple[int, int, float]:
    best = None
    for n1 in range(1, n_cap + 1):
        for n2 in range(1, n_cap + 1):
            e = commensuration_error(n1, n2)
            if best is None or e < best[2] - 1e-15:
                best = (n1, n2, e)
    if best[2] > tol:
        raise NotFound(f"best pair {best[:2]} has error {best[2]:.4g} > tol {tol}")
    return best


LOGICAL = {0: (0, 1), 1: (1, 0)}  # logical bit -> (photons, atom excitation)


@dataclass
class CoCSignResult:
    times: dict
    phases: dict  # relative phases, bookkeeping frame
    raw_phases: dict  # relative phases against free evolution of the idle cavities
    fidelity: dict  # |<reference|final>| per logical input
    entangling_phase: float
    n1: int
    n2: int
    tolerance: float = field(default=0.0)


def _cocsign_network(g: float, n_max: int) -> CavityNetwork:
    cav = CavityModel(0.0, (g,), n_max, True)
    return CavityNetwork((cav, cav, cav))  # x, C, y


def _product_state(net: CavityNetwork, locals_: Sequence[tuple[int, int]]) -> np.ndarray:
    vecs = []
    for c, (nph, at) in zip(net.cavities, locals_):
        v = np.zeros(c.dim, dtype=complex)
        v[2 * nph + at] = 1.0
        vecs.append(v)
    return _kron(*vecs)


def _wrap(x: float) -> float:
    return float((x + np.pi) % (2 * np.pi) - np.pi)


def cocsign_simulate(n1: int, n2: int, g: float = 1.0, nu: float = 1000.0, n_max: int = 3) -> CoCSignResult:
    """Full JCH simulation of the coCSign photon schedule on cavities (x, C, y).

    Logical |0> = |0>ph|1>at, |1> = |1>ph|0>at.  Timeline (tau1 = pi/g):
    hop x<->C at 0, y<->C at tau1/2, C<->x at tau1/2 + 2 n2 tau2, C<->y a
    further tau1/2 later; each hop switches nu (a_i^+ a_j + h.c.) on for
    pi/(2 nu) with the atom couplings left on.  The free part
    omega (a^+a + sigma^+sigma) is dropped (common phase).
    """
    if nu / g < 100:
        raise BadRatio(f"nu/g = {nu / g:.3g} < 100")
    tau1 = math.pi / g
    tau2 = math.pi / (g * math.sqrt(2))
    dtau = math.pi / (2 * nu)
    t0 = 0.0
    t1 = tau1 / 2
    t2 = t1 + 2 * n2 * tau2
    t3 = t2 + tau1 / 2
    t_end = t3 + dtau
    net = _cocsign_network(g, n_max)
    Hint = tch_hamiltonian(net, include_hops=False)
    X, C, Y = 0, 1, 2
    hop = {(X, C): hop_operator(net, X, C), (Y, C): hop_operator(net, Y, C)}
    segments = [  # (duration, hamiltonian)
        (dtau, Hint + nu * hop[(X, C)]),
        (t1 - (t0 + dtau), Hint),
        (dtau, Hint + nu * hop[(Y, C)]),
        (t2 - (t1 + dtau), Hint),
        (dtau, Hint + nu * hop[(X, C)]),
        (t3 - (t2 + dtau), Hint),
        (dtau, Hint + nu * hop[(Y, C)]),
    ]
    if any(d < 0 for d, _ in segments):
        raise BadRatio("hop windows overlap; increase nu/g")
    U = np.eye(Hint.shape[0], dtype=complex)
    for d, H in segments:
        U = propagator(H, d) @ U

    Hcav = jc_hamiltonian(CavityModel(0.0, (g,), n_max, True))

    def idle(bit: int, t: float) -> np.ndarray:
        v = np.zeros(Hcav.shape[0], dtype=complex)
        nph, at = LOGICAL[bit]
        v[2 * nph + at] = 1.0
        return propagator(Hcav, t) @ v

    vac = np.zeros(Hcav.shape[0], dtype=complex)
    vac[0] = 1.0
    raw, book, fid = {}, {}, {}
    finals = {}
    for x in (0, 1):
        for y in (0, 1):
            psi = U @ _product_state(net, [LOGICAL[x], (0, 0), LOGICAL[y]])
            check_cutoff(psi[None, :], net.dims, 0)
            check_cutoff(psi[None, :], net.dims, 2)
            check_cutoff(psi[None, :], net.dims, 4)
            finals[(x, y)] = psi
            ref_raw = _kron(idle(x, t_end), vac, idle(y, t_end))
            # bookkeeping frame: an idle cavity's own Rabi clock only runs while
            # its excitation is at home (x's photon is away t0..t2 when x = 1,
            # y's photon is away t1..t3 when y = 0)
            tx = t_end - (t2 - t0) * x
            ty = t_end - (t3 - t1) * (1 - y)
            ref_book = _kron(idle(x, tx), vac, idle(y, ty))
            a_raw = np.vdot(ref_raw, psi)
            a_book = np.vdot(ref_book, psi)
            raw[(x, y)] = float(np.angle(a_raw))
            book[(x, y)] = float(np.angle(a_book))
            fid[(x, y)] = float(abs(a_book))
    key = lambda xy: f"{xy[0]}{xy[1]}"  # noqa: E731
    rel_raw = {key(k): _wrap(v - raw[(0, 0)]) for k, v in raw.items()}
    rel_book = {key(k): _wrap(v - book[(0, 0)]) for k, v in book.items()}
    ent = _wrap(raw[(0, 0)] - raw[(0, 1)] - raw[(1, 0)] + raw[(1, 1)])
    tol = math.pi * (commensuration_error(n1, n2) + 10 * g / nu)
    return CoCSignResult({"t0": t0, "t1": t1, "t2": t2, "t3": t3, "t_end": t_end, "dtau": dtau},
                         rel_book, rel_raw, {key(k): v for k, v in fid.items()}, ent, n1, n2, tol)


# --- decoupling --------------------------------------------------------------------------

def _pair_phase(d: np.ndarray, C: np.ndarray, dt: float) -> float:
    """dt * sum_t sum_{p<q} d_pq c_p(t) c_q(t) for a bit history C (n x M)."""
    Du = np.triu(d, 1)
    return float(dt * np.einsum("pt,pq,qt->", C, Du, C))


def predicted_phase(d: np.ndarray, pair: tuple[int, int], T: float, b: Sequence[int]) -> dict:
    """Split of the expected phase into the two-qubit target term and the
    single-qubit / constant terms that local gates can cancel."""
    d = np.asarray(d, float)
    n = d.shape[0]
    j, k = pair
    others = [p for p in range(n) if p not in pair]
    local = 0.5 * T * (sum(d[p, j] for p in others) * b[j] + sum(d[p, k] for p in others) * b[k])
    const = 0.25 * T * sum(d[p, q] for i, p in enumerate(others) for q in others[i + 1:])
    return {"target": d[j, k] * T * b[j] * b[k], "local": local, "const": const}


def _flip_histories(n_flip: int, M: int, flip_prob: float, rng) -> np.ndarray:
    flips = rng.random((n_flip, M)) < flip_prob
    # parity before the step's interaction: a NOT at step t acts before slot t
    return np.cumsum(flips, axis=1) % 2


def _decoupling_phases(d, pair, T, dt, parity: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(d, float)
    n = d.shape[0]
    j, k = pair
    others = [p for p in range(n) if p not in pair]
    M = parity.shape[1]
    achieved, residual = [], []
    for x in range(2 ** n):
        b = [(x >> (n - 1 - i)) & 1 for i in range(n)]
        C = np.empty((n, M))
        for i in range(n):
            C[i] = b[i]
        for r, p in enumerate(others):
            C[p] = np.bitwise_xor(b[p], parity[r])
        total = _pair_phase(d, C, dt)
        pred = predicted_phase(d, pair, T, b)
        two = total - pred["local"] - pred["const"]
        achieved.append(two)
        residual.append(two - pred["target"])
    return np.array(achieved), np.array(residual)


def randomized_decoupling(d, pair: tuple[int, int], lam: float, T: float, dt: float,
                          rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """One realization: NOTs on every qubit outside `pair` at Bernoulli(lam dt)
    slots, final restoring NOT when a qubit's flip count is odd.

    Returns (two-qubit phase per basis string after removing the locally
    compensable terms, residual against d_jk T b_j b_k).
    """
    d = np.asarray(d, float)
    if d.shape[0] != d.shape[1] or np.max(np.abs(d - d.T)) > 1e-12:
        raise DimensionMismatch("d must be a symmetric matrix")
    if not dt > 0:
        raise BadTimeStep("dt must be positive")
    if lam * dt > 0.5:
        raise BadDensity(f"lambda*dt = {lam * dt:.3g} > 0.5")
    M = int(round(T / dt))
    n_flip = d.shape[0] - 2
    parity = _flip_histories(n_flip, M, lam * dt, rng) if n_flip else np.zeros((0, M), int)
    return _decoupling_phases(d, pair, T, dt, parity)


def decoupling_study(d, pair, lam: float, T: float, dt: float, seeds: Sequence[int]) -> dict:
    """Residual statistics over independent seeds (one stream per seed)."""
    res = np.array([randomized_decoupling(d, pair, lam, T, dt, np.random.default_rng(s))[1] for s in seeds])
    rms = np.sqrt(np.mean(res ** 2, axis=0))
    return {"rms_per_string": rms, "rms": float(rms.max()), "max_abs": float(np.abs(res).max()),
            "M": int(round(T / dt))}


def periodic_decoupling(d, pair: tuple[int, int], T: float, dt: float, periods: str = "binary"):
    """Deterministic NOT schedule.  The r-th qubit outside the pair flips every
    h_r slots with h_r = 2^r ("binary", exact cancellation over a full cycle)
    or h_r = r + 1 (the literal j * k * dt schedule, which leaves residual
    correlations for half-periods sharing their power of two).

    Returns (two-qubit phases, residuals, cycle length in slots).
    """
    d = np.asarray(d, float)
    if not dt > 0:
        raise BadTimeStep("dt must be positive")
    n_flip = d.shape[0] - 2
    M = int(round(T / dt))
    if periods == "binary":
        half = [2 ** r for r in range(n_flip)]
    elif periods == "linear":
        half = [r + 1 for r in range(n_flip)]
    else:
        raise BadTimeStep(f"unknown period scheme {periods!r}")
    t = np.arange(M)
    parity = np.array([(t // h) % 2 for h in half]) if n_flip else np.zeros((0, M), int)
    cycle = 2 * int(np.lcm.reduce(half)) if half else 1
    ach, res = _decoupling_phases(d, pair, T, dt, parity)
    return ach, res, cycle


# --- CNOT from a diagonal interaction ------------------------------------------------------

def cnot_from_diagonal(E: Sequence[float], eps: float = 1e-2, n_cap: int = 100) -> dict:
    """Smallest n <= n_cap with |dE n - pi (2m+1)| <= eps, and the assembled
    (I x H) (E (A x B))^n (I x H)."""
    E1, E2, E3, E4 = (float(e) for e in E)
    dE = E1 - E2 - E3 + E4
    if dE == 0:
        raise NotFound("Delta E = 0: the diagonal gate is not entangling")
    found = None
    for n in range(1, n_cap + 1):
        m = round((n * dE / math.pi - 1) / 2)
        err = abs(n * dE - math.pi * (2 * m + 1))
        if err <= eps:
            found = (n, int(m), err)
            break
    if found is None:
        raise NotFound(f"no n <= {n_cap} within eps = {eps}")
    n, m, err = found
    Emat = np.diag(np.exp(1j * np.array([E1, E2, E3, E4])))
    A = np.diag([1, np.exp(1j * (E1 - E3))])
    B = np.diag([np.exp(-1j * E1), np.exp(-1j * E2)])
    Ustep = Emat @ np.kron(A, B)
    H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    IH = np.kron(np.eye(2), H)
    gate = IH @ np.linalg.matrix_power(Ustep, n) @ IH
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    return {"n": n, "m": m, "phase_error": err, "gate": gate, "step": Ustep,
            "sequence": ["IxH"] + ["E(AxB)"] * n + ["IxH"],
            "operator_error": float(np.linalg.norm(gate - cnot, 2))}
