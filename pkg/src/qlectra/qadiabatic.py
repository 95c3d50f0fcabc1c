"""Time-dependent Hamiltonian evolution, adiabatic and continuous Grover,
problem Hamiltonians and quantum annealing."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BadSchedule, BadTimeStep, DegenerateGap, IndexOutOfRange
from .qstate import Ket

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class Hamiltonian:
    mat: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise BadSchedule(f"Hamiltonian must be square, got {m.shape}")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-9:
            raise BadSchedule("Hamiltonian is not Hermitian")
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def diag(self) -> np.ndarray:
        return np.real(np.diag(self.mat))


def _mat(h) -> np.ndarray:
    return h.mat if isinstance(h, Hamiltonian) else np.asarray(h, dtype=complex)


# --- schedules -----------------------------------------------------------------

def grover_gap(s, N: int):
    """g(s) = sqrt(1 - 4 (N-1)/N s (1-s))."""
    s = np.asarray(s, dtype=float)
    g = np.sqrt(np.clip(1 - 4 * (N - 1) / N * s * (1 - s), 0, None))
    return float(g) if g.ndim == 0 else g


def roland_cerf_time(s, N: int, eps: float):
    """Elapsed time t(s) of the locally adiabatic schedule ds/dt = eps g^2."""
    r = math.sqrt(N - 1)
    s = np.asarray(s, dtype=float)
    t = N / (2 * eps * r) * (np.arctan((2 * s - 1) * r) + np.arctan(r))
    return float(t) if t.ndim == 0 else t


def _bisect(fn, target, lo=0.0, hi=1.0, tol=1e-10):
    flo = fn(lo) - target
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = fn(mid) - target
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Schedule:
    """s(t) on [0, T].

    kind: "linear", "roland_cerf" (params N, eps; T is its natural duration
    unless stretched), or "tabulated" (params ts, ss; linear interpolation).
    """
    kind: str
    T: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.T > 0:
            raise BadSchedule("schedule horizon must be positive")
        if self.kind == "tabulated":
            ts = np.asarray(self.params["ts"], float)
            ss = np.asarray(self.params["ss"], float)
            if np.any(np.diff(ts) <= 0):
                raise BadSchedule("tabulated times must be strictly increasing")
            if np.any(ss < 0) or np.any(ss > 1) or np.any(np.diff(ss) < 0):
                raise BadSchedule("tabulated s must be non-decreasing within [0, 1]")
        elif self.kind not in ("linear", "roland_cerf"):
            raise BadSchedule(f"unknown schedule kind {self.kind!r}")

    def _rc_scale(self) -> float:
        N, eps = self.params["N"], self.params["eps"]
        return roland_cerf_time(1.0, N, eps) / self.T

    def s(self, t: float) -> float:
        x = min(max(t, 0.0), self.T)
        if self.kind == "linear":
            return x / self.T
        if self.kind == "roland_cerf":
            N, eps = self.params["N"], self.params["eps"]
            tau = x * self._rc_scale()
            return _bisect(lambda s: roland_cerf_time(s, N, eps), tau)
        return float(np.interp(x, self.params["ts"], self.params["ss"]))

    def sdot(self, t: float) -> float:
        if self.kind == "linear":
            return 1 / self.T
        if self.kind == "roland_cerf":
            return self.params["eps"] * grover_gap(self.s(t), self.params["N"]) ** 2 * self._rc_scale()
        ts, ss = np.asarray(self.params["ts"]), np.asarray(self.params["ss"])
        i = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2))
        return float((ss[i + 1] - ss[i]) / (ts[i + 1] - ts[i]))


def linear_schedule(T: float) -> Schedule:
    return Schedule("linear", T)


def roland_cerf_schedule(N: int, eps: float, T: float | None = None) -> Schedule:
    """Locally adiabatic schedule; by default T = t(1).  Passing T stretches
    the same profile to a different horizon (equivalent to rescaling eps)."""
    if N < 2 or eps <= 0:
        raise BadSchedule("need N >= 2 and eps > 0")
    T1 = roland_cerf_time(1.0, N, eps)
    return Schedule("roland_cerf", T if T is not None else T1, {"N": N, "eps": eps})


@dataclass(frozen=True)
class TDHamiltonian:
    H0: np.ndarray
    H1: np.ndarray
    schedule: Schedule

    @property
    def T(self) -> float:
        return self.schedule.T

    def at(self, t: float) -> np.ndarray:
        s = self.schedule.s(t)
        return (1 - s) * _mat(self.H0) + s * _mat(self.H1)

    def dot(self, t: float) -> np.ndarray:
        return self.schedule.sdot(t) * (_mat(self.H1) - _mat(self.H0))


# --- propagation -----------------------------------------------------------------

def expm_herm(H: np.ndarray, dt: float) -> np.ndarray:
    w, v = np.linalg.eigh(H)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def evolve(Hfn: Callable[[float], np.ndarray], psi0: np.ndarray, T: float, dt: float,
           store: bool = False):
    """Midpoint eigendecomposition propagator: psi <- exp(-i H(t + dt/2) dt) psi."""
    if not dt > 0:
        raise BadTimeStep(f"dt must be positive, got {dt}")
    steps = max(1, int(math.ceil(T / dt - 1e-9)))
    h = T / steps
    psi = np.asarray(psi0, dtype=complex).copy()
    ts, traj = [0.0], [psi.copy()] if store else None
    for k in range(steps):
        psi = expm_herm(Hfn((k + 0.5) * h), h) @ psi
        if store:
            ts.append((k + 1) * h)
            traj.append(psi.copy())
    if store:
        return np.array(ts), np.array(traj)
    return psi


def evolve_td(td: TDHamiltonian, psi0: Ket, dt: float | None = None):
    """Trajectory (times, states) under i d/dt psi = H(t) psi."""
    dt = td.T / 2000 if dt is None else dt
    return evolve(td.at, psi0.amps, td.T, dt, store=True)


# --- Grover in Hamiltonian form ------------------------------------------------

def grover_hamiltonians(n: int, marked: int) -> tuple[np.ndarray, np.ndarray]:
    """H0 = I - |0~><0~|, Hm = I - |m><m|."""
    N = 2 ** n
    if not 0 <= marked < N:
        raise IndexOutOfRange(f"marked={marked} outside 0..{N - 1}")
    u = np.full(N, 1 / math.sqrt(N))
    H0 = np.eye(N) - np.outer(u, u)
    Hm = np.eye(N)
    Hm[marked, marked] = 0.0
    return H0.astype(complex), Hm.astype(complex)


def linear_time(N: int, eps: float) -> float:
    """Horizon at which the linear schedule meets margin eps: T = N / eps."""
    return N / eps


def adiabatic_grover(n: int, marked: int, eps: float, schedule: str = "roland_cerf",
                     T: float | None = None, dt: float | None = None) -> dict:
    N = 2 ** n
    H0, Hm = grover_hamiltonians(n, marked)
    if schedule == "roland_cerf":
        sch = roland_cerf_schedule(N, eps, T)
    elif schedule == "linear":
        sch = linear_schedule(T if T is not None else linear_time(N, eps))
    else:
        raise BadSchedule(f"unknown schedule {schedule!r}")
    td = TDHamiltonian(H0, Hm, sch)
    psi0 = np.full(N, 1 / math.sqrt(N), dtype=complex)
    psi = evolve(td.at, psi0, sch.T, dt if dt is not None else sch.T / 2000)
    return {"T": sch.T, "success": float(abs(psi[marked]) ** 2), "schedule": schedule}


def continuous_grover_hamiltonian(n: int, marked: int, weight: float = 0.5) -> np.ndarray:
    """H = weight (|0~><0~| + |w><w|)."""
    N = 2 ** n
    u = np.full(N, 1 / math.sqrt(N))
    e = np.zeros(N)
    e[marked] = 1.0
    return (weight * (np.outer(u, u) + np.outer(e, e))).astype(complex)


def continuous_grover(n: int, marked: int, weight: float = 0.5, samples: int = 4000) -> dict:
    """Locate the first maximum of |<w|psi(t)>|^2 under the fixed Hamiltonian."""
    from scipy.optimize import minimize_scalar

    N = 2 ** n
    if not 0 <= marked < N:
        raise IndexOutOfRange(f"marked={marked} outside 0..{N - 1}")
    H = continuous_grover_hamiltonian(n, marked, weight)
    w, v = np.linalg.eigh(H)
    c0 = v.conj().T @ np.full(N, 1 / math.sqrt(N))
    vm = v[marked]

    def prob(t):
        return float(abs(vm @ (np.exp(-1j * w * t) * c0)) ** 2)

    # scan out to a few multiples of the expected peak, keep the first local max
    horizon = 4 * math.pi * math.sqrt(N) / (2 * weight)
    ts = np.linspace(0, horizon, samples)
    ps = np.array([prob(t) for t in ts])
    i = next((k for k in range(1, samples - 1) if ps[k] >= ps[k - 1] and ps[k] > ps[k + 1]), int(np.argmax(ps)))
    res = minimize_scalar(lambda t: -prob(t), bounds=(ts[i - 1], ts[i + 1]), method="bounded",
                          options={"xatol": 1e-12})
    alpha = 1 / math.sqrt(N)
    return {"t_peak": float(res.x), "p_peak": -float(res.fun), "gap": 2 * math.sin(alpha / 2),
            "pi_over_gap": math.pi / (2 * math.sin(alpha / 2))}


# --- problem Hamiltonians -------------------------------------------------------

def _kron_site(op: np.ndarray, i: int, n: int) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for k in range(n):
        out = np.kron(out, op if k == i else np.eye(2))
    return out


def build_driver(n: int) -> Hamiltonian:
    """H_I = sum_i (1 - sigma_x^i)/2; ground state |0~> with energy 0."""
    if n < 1:
        raise IndexOutOfRange("n must be >= 1")
    N = 2 ** n
    H = sum(0.5 * (np.eye(N) - _kron_site(SX, i, n)) for i in range(n))
    return Hamiltonian(H)


def bits_of(x: int, n: int) -> list[int]:
    return [(x >> (n - 1 - i)) & 1 for i in range(n)]


@dataclass(frozen=True)
class ProblemSpec:
    """kind in {"disagree2", "exact_cover", "sat3", "ising"}.

    exact_cover / sat3: clauses of three signed 1-based literals (-k = not x_k).
    ising: h (list, spin i on qubit i) and J as [i, j, value] triples (0-based);
    bit 0 is spin +1, bit 1 is spin -1.
    """
    kind: str
    clauses: tuple = ()
    h: tuple = ()
    J: tuple = ()
    n_vars: int | None = None

    @property
    def n(self) -> int:
        if self.kind == "disagree2":
            return 2
        if self.kind == "ising":
            m = max([len(self.h)] + [max(i, j) + 1 for i, j, _ in self.J])
            return self.n_vars or m
        m = max(abs(l) for c in self.clauses for l in c)
        return self.n_vars or m

    def validate(self):
        n = self.n
        if self.kind in ("exact_cover", "sat3"):
            if not self.clauses:
                raise IndexOutOfRange("no clauses")
            for c in self.clauses:
                if len(c) != 3 or any(l == 0 or abs(l) > n for l in c):
                    raise IndexOutOfRange(f"bad clause {c}")
        elif self.kind == "ising":
            for i, j, _ in self.J:
                if not (0 <= i < n and 0 <= j < n) or i == j:
                    raise IndexOutOfRange(f"bad coupling ({i}, {j})")
        elif self.kind != "disagree2":
            raise IndexOutOfRange(f"unknown problem kind {self.kind!r}")
        if n > 12:
            raise IndexOutOfRange(f"{n} variables exceeds desk scale (12)")

    def cost(self, x: int) -> float:
        n = self.n
        b = bits_of(x, n)

        def lit(l):
            v = b[abs(l) - 1]
            return v if l > 0 else 1 - v

        if self.kind == "disagree2":
            return float(b[0] == b[1])
        if self.kind == "exact_cover":
            return float(sum((1 - sum(lit(l) for l in c)) ** 2 for c in self.clauses))
        if self.kind == "sat3":
            return float(sum(all(lit(l) == 0 for l in c) for c in self.clauses))
        s = [1 - 2 * v for v in b]
        e = sum(hv * s[i] for i, hv in enumerate(self.h))
        e += sum(v * s[i] * s[j] for i, j, v in self.J)
        return float(e)


def _lit_projector(l: int, n: int) -> np.ndarray:
    """Projector on the subspace where literal l is false."""
    # x_k false <=> bit 0 <=> (1 + sigma_z)/2 ; not x_k false <=> bit 1
    P = 0.5 * (np.eye(2) + (SZ if l > 0 else -SZ))
    return _kron_site(P, abs(l) - 1, n)


def build_problem(spec: ProblemSpec) -> Hamiltonian:
    spec.validate()
    n = spec.n
    N = 2 ** n
    if spec.kind == "disagree2":
        return Hamiltonian(0.5 * (np.eye(4) + np.kron(SZ, SZ)))
    if spec.kind == "ising":
        H = np.zeros((N, N), dtype=complex)
        for i, hv in enumerate(spec.h):
            H += hv * _kron_site(SZ, i, n)
        for i, j, v in spec.J:
            H += v * _kron_site(SZ, i, n) @ _kron_site(SZ, j, n)
        return Hamiltonian(H)
    if spec.kind == "sat3":
        # one penalty per clause: product of "literal false" projectors
        H = np.zeros((N, N), dtype=complex)
        for c in spec.clauses:
            P = np.eye(N, dtype=complex)
            for l in c:
                P = P @ _lit_projector(l, n)
            H += P
        return Hamiltonian(H)
    # exact cover: (1 - l1 - l2 - l3)^2 with literal operators (1 -/+ sigma_z)/2
    H = np.zeros((N, N), dtype=complex)
    I = np.eye(N)
    for c in spec.clauses:
        S = I.copy()
        for l in c:
            S = S - (I - _lit_projector(l, n))
        H += S @ S
    return Hamiltonian(H)


def ground_states(H, tol: float = 1e-9) -> list[int]:
    d = np.real(np.diag(_mat(H)))
    return [int(i) for i in np.flatnonzero(d <= d.min() + tol)]


def classical_minima(spec: ProblemSpec, tol: float = 1e-9) -> list[int]:
    c = np.array([spec.cost(x) for x in range(2 ** spec.n)])
    return [int(i) for i in np.flatnonzero(c <= c.min() + tol)]


def problem_from_json(doc: dict) -> ProblemSpec:
    if "ising" in doc:
        d = doc["ising"]
        return ProblemSpec("ising", h=tuple(d.get("h", ())), J=tuple(tuple(x) for x in d.get("j", ())),
                           n_vars=d.get("n"))
    if "sat3" in doc:
        return ProblemSpec("sat3", clauses=tuple(tuple(c) for c in doc["sat3"]))
    if "exact_cover" in doc:
        return ProblemSpec("exact_cover", clauses=tuple(tuple(c) for c in doc["exact_cover"]))
    if "disagree2" in doc:
        return ProblemSpec("disagree2")
    raise IndexOutOfRange(f"unrecognized problem document keys {sorted(doc)}")


# --- annealing --------------------------------------------------------------------

def anneal(H_tar, H_d, G: Callable[[float], float] | tuple[Sequence[float], Sequence[float]],
           T: float, psi0: Ket | np.ndarray, dt: float | None = None) -> dict:
    """Evolve under H(t) = H_tar + G(t) H_d and report the final state and the
    population of the ground subspace of H_tar."""
    Ht, Hd = _mat(H_tar), _mat(H_d)
    if callable(G):
        Gf = G
        grid = np.linspace(0, T, 513)
        vals = np.array([G(t) for t in grid])
    else:
        ts, gs = (np.asarray(a, float) for a in G)
        if np.any(np.diff(ts) <= 0):
            raise BadSchedule("G table times must increase")
        vals = gs
        Gf = lambda t: float(np.interp(t, ts, gs))  # noqa: E731
    if np.any(np.diff(vals) > 1e-12):
        raise BadSchedule("G(t) must be non-increasing")
    dt = T / 2000 if dt is None else dt
    amps = psi0.amps if isinstance(psi0, Ket) else np.asarray(psi0, dtype=complex)
    psi = evolve(lambda t: Ht + Gf(t) * Hd, amps, T, dt)
    w, v = np.linalg.eigh(Ht)
    gs_vecs = v[:, w <= w.min() + 1e-9]
    pop = float(np.sum(np.abs(gs_vecs.conj().T @ psi) ** 2))
    return {"psi": psi, "ground_population": pop}


def ground_state(H) -> np.ndarray:
    w, v = np.linalg.eigh(_mat(H))
    return v[:, 0]


# --- adiabaticity ---------------------------------------------------------------

def adiabaticity_margin(td: TDHamiltonian, times: Sequence[float], cluster_tol: float = 1e-9) -> float:
    """max_t |<1|dH/dt|0>| / g^2 with degenerate excited levels handled via
    the norm of the projection onto the whole first excited eigenspace."""
    worst = 0.0
    for t in times:
        w, v = np.linalg.eigh(td.at(t))
        g = w[1] - w[0]
        if g < 1e-12:
            raise DegenerateGap(f"gap {g:.3g} at t={t}")
        first = np.abs(w - w[1]) <= cluster_tol
        proj = v[:, first].conj().T @ (td.dot(t) @ v[:, 0])
        worst = max(worst, float(np.linalg.norm(proj)) / g ** 2)
    return worst
