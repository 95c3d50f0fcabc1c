"""Grover search family, QFT circuits, phase estimation, Shor order finding
and split-operator (Zalka-Wiesner) simulation on a qubit grid."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import qgate
from .errors import BadCutoff, BadTimeStep, Exhausted, FactorNotFound, NoSolutions, NotCoprime
from .qgate import Circuit, GateMatrix, Permute, Step
from .qstate import Ket, born_distribution, tensor


# --- oracles and reflections -------------------------------------------------

@dataclass
class BooleanOracle:
    n: int
    fn: Callable[[int], int]
    query_count: int = 0
    _table: np.ndarray | None = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return 2 ** self.n

    def table(self) -> np.ndarray:
        """Truth table (classical bookkeeping, not a query)."""
        if self._table is None:
            self._table = np.array([int(bool(self.fn(x))) for x in range(self.N)], dtype=np.int8)
        return self._table

    def check(self, x: int) -> bool:
        """Classical evaluation on a single input; counts as one query."""
        self.query_count += 1
        return bool(self.fn(int(x)))

    def phase_flip(self, amps: np.ndarray) -> np.ndarray:
        """One oracle gate: |x> -> (-1)^{f(x)} |x>."""
        self.query_count += 1
        return np.where(self.table() == 1, -amps, amps)


def oracle_reflection(f: BooleanOracle) -> GateMatrix:
    return GateMatrix(np.diag(1.0 - 2.0 * f.table()), "I_f")


def oracle_gate(f: BooleanOracle) -> GateMatrix:
    """|x, y> -> |x, y xor f(x)> on n+1 qubits (ancilla last)."""
    N = f.N
    P = np.zeros((2 * N, 2 * N))
    for x, fx in enumerate(f.table()):
        for y in (0, 1):
            P[2 * x + (y ^ int(fx)), 2 * x + y] = 1.0
    return GateMatrix(P, "O_f")


def reflect_with_ancilla(f: BooleanOracle, psi: Ket) -> Ket:
    """Apply the oracle with ancilla prepared in (|0>-|1>)/sqrt2; returns the
    full (n+1)-qubit state so the caller can inspect the ancilla."""
    minus = Ket((2,), np.array([1, -1]) / np.sqrt(2))
    full = tensor(psi, minus)
    f.query_count += 1
    return Ket(full.dims, oracle_gate(f).mat @ full.amps)


def diffusion(n: int) -> GateMatrix:
    """2|0~><0~| - I, i.e. -I_{0~}."""
    N = 2 ** n
    return GateMatrix(np.full((N, N), 2.0 / N) - np.eye(N), "D")


def uniform(n: int) -> np.ndarray:
    N = 2 ** n
    return np.full(N, 1 / np.sqrt(N), dtype=complex)


@dataclass
class GroverReport:
    iterations: int
    success_prob: float
    measured: int
    oracle_calls: int
    trajectory: list = field(default_factory=list, repr=False)


def grover_iterations(n: int, l: int) -> int:
    theta = math.asin(math.sqrt(l / 2 ** n))
    return max(0, round(math.pi / (4 * theta) - 0.5))


def grover_step(f: BooleanOracle, amps: np.ndarray) -> np.ndarray:
    a = f.phase_flip(amps)
    return 2 * a.mean() - a  # diffusion applied matrix-free


def grover(f: BooleanOracle, n: int, l: int, rng: np.random.Generator | None = None,
           iterations: int | None = None, keep_trajectory: bool = False) -> GroverReport:
    if l <= 0:
        raise NoSolutions("grover needs l >= 1 known solutions")
    k = grover_iterations(n, l) if iterations is None else int(iterations)
    amps = uniform(n)
    sol = f.table() == 1
    start = f.query_count
    traj = [amps.copy()] if keep_trajectory else []
    for _ in range(k):
        amps = grover_step(f, amps)
        if keep_trajectory:
            traj.append(amps.copy())
    p = np.abs(amps) ** 2
    rng = rng or np.random.default_rng(0)
    measured = int(rng.choice(p.size, p=p / p.sum()))
    return GroverReport(k, float(p[sol].sum()), measured, f.query_count - start, traj)


def grover_unknown(f: BooleanOracle, n: int, rng: np.random.Generator,
                   max_stages: int | None = None) -> tuple[int, int]:
    """Search with an unknown number of solutions.

    Stage s runs tau_s = 2^s iterations while 2^s <= sqrt(N); after that the
    iteration count is drawn uniformly below sqrt(N) so a fixed unlucky angle
    cannot stall the search.  Each stage ends with a measurement and one
    classical verification query.  Raises Exhausted when all stages fail.
    """
    N = 2 ** n
    root = math.sqrt(N)
    if max_stages is None:
        max_stages = int(math.ceil(math.log2(root))) + 1 + 2 * n
    start = f.query_count
    s = 0
    for stage in range(max_stages):
        if 2 ** s <= root:
            tau = 2 ** s
            s += 1
        else:
            tau = int(rng.integers(1, int(math.ceil(root)) + 1))
        amps = uniform(n)
        for _ in range(tau):
            amps = grover_step(f, amps)
        p = np.abs(amps) ** 2
        x = int(rng.choice(N, p=p / p.sum()))
        if f.check(x):
            return x, f.query_count - start
    raise Exhausted(f"no solution after {max_stages} stages ({f.query_count - start} queries)")


def grover_minimize(values: Sequence[int] | Callable[[int], int], n: int, rng: np.random.Generator,
                    max_rounds: int | None = None) -> tuple[int, int, int]:
    """Threshold-descent minimization; returns (argmin, rounds, total queries)."""
    N = 2 ** n
    fvals = np.array([values(x) for x in range(N)] if callable(values) else values)
    x = int(rng.integers(N))
    queries, rounds = 0, 0
    max_rounds = max_rounds or N
    while rounds < max_rounds:
        rounds += 1
        y = fvals[x]
        oracle = BooleanOracle(n, lambda z, y=y: fvals[z] < y)
        try:
            x, q = grover_unknown(oracle, n, rng)
            queries += q
        except Exhausted:
            queries += oracle.query_count
            break
    return x, rounds, queries


# --- QFT ---------------------------------------------------------------------

def dft_matrix(n: int, sign: int = -1) -> np.ndarray:
    N = 2 ** n
    a = np.arange(N)
    return np.exp(sign * 2j * np.pi * np.outer(a, a) / N) / np.sqrt(N)


def bit_reverse_perm(n: int) -> np.ndarray:
    return np.array([int(format(i, f"0{n}b")[::-1], 2) for i in range(2 ** n)])


def qft(n: int, cutoff: int | None = None, reverse: bool = True) -> Circuit:
    """Forward QFT (kernel e^{-2 pi i ab/N}) as H plus controlled phases.

    Qubit j (0 = most significant) gets H, then phases -pi/2^{k-j} controlled
    by every later qubit k with k - j <= cutoff.  Without the final Permute the
    output is bit-reversed; ``reverse=True`` appends that subsystem reordering.
    """
    if n < 1:
        raise BadCutoff("n must be >= 1")
    if cutoff is not None and cutoff < 1:
        raise BadCutoff(f"cutoff must be >= 1, got {cutoff}")
    H = qgate.make_gate("H")
    steps: list = []
    for j in range(n):
        steps.append(Step(H, (j,)))
        for k in range(j + 1, n):
            d = k - j
            if cutoff is not None and d > cutoff:
                continue
            steps.append(Step(qgate.make_gate("U", k=d, j=0).dag, (k, j)))
    if reverse and n > 1:
        steps.append(Permute(tuple(range(n - 1, -1, -1))))
    return Circuit((2,) * n, tuple(steps))


def qft_inverse(n: int, cutoff: int | None = None, reverse: bool = True) -> Circuit:
    return qft(n, cutoff, reverse).inverse()


def qft_truncation_bound(n: int, cutoff: int) -> float:
    """Sum over omitted gates of pi/2^{k-j}."""
    return sum(math.pi / 2 ** (k - j) for j in range(n) for k in range(j + 1, n) if k - j > cutoff)


# --- phase estimation --------------------------------------------------------

def _counter_circuit(base: Circuit, offset: int, dims: tuple[int, ...]) -> Circuit:
    """Relabel a circuit on qubits 0..m-1 onto subsystems offset..offset+m-1 of dims."""
    steps = []
    n = len(dims)
    for s in base.steps:
        if isinstance(s, Permute):
            order = list(range(n))
            for i, o in enumerate(s.order):
                order[offset + i] = offset + o
            steps.append(Permute(tuple(order)))
        else:
            steps.append(Step(s.gate, tuple(offset + t for t in s.targets)))
    return Circuit(dims, tuple(steps))


def phase_estimate_distribution(U: GateMatrix, psi_in: Ket, n_bits: int) -> np.ndarray:
    """Distribution of the counter after QFT . U_seq . QFT on |psi_in, 0>."""
    dims = (U.dim,) + (2,) * n_bits
    F = _counter_circuit(qft(n_bits), 1, dims)
    rev = F + qgate.u_seq(U, n_bits) + F
    start = tensor(Ket((U.dim,), psi_in.amps), Ket.basis((2,) * n_bits, 0))
    out = qgate.run(rev, start)
    p = np.abs(out.amps.reshape(U.dim, -1)) ** 2
    return p.sum(axis=0)


def phase_estimate(U: GateMatrix, psi_in: Ket, n_bits: int, rng: np.random.Generator) -> int:
    p = phase_estimate_distribution(U, psi_in, n_bits)
    return int(rng.choice(p.size, p=p / p.sum()))


# --- Shor ----------------------------------------------------------------------

def modmul_matrix(y: int, q: int, n: int) -> np.ndarray:
    """Permutation |x> -> |y x mod q> for x < q, identity on x >= q."""
    D = 2 ** n
    perm = np.arange(D)
    perm[:q] = (y * np.arange(q)) % q
    P = np.zeros((D, D))
    P[perm, np.arange(D)] = 1.0
    return P


@lru_cache(maxsize=64)
def _shor_distribution(y: int, q: int, t: int) -> tuple[float, ...]:
    n = q.bit_length()
    U = GateMatrix(modmul_matrix(y, q, n), f"M{y}", check=False)
    dims = (U.dim,) + (2,) * t
    F = _counter_circuit(qft(t), 1, dims)
    rev = F + qgate.u_seq(U, t) + F
    start = np.zeros(U.dim * 2 ** t, dtype=complex)
    start[1 * 2 ** t] = 1.0  # target |1>, counter |0>
    out = qgate.run(rev, Ket(dims, start))
    p = (np.abs(out.amps.reshape(U.dim, -1)) ** 2).sum(axis=0)
    return tuple(p / p.sum())


def convergents(frac: Fraction) -> list[Fraction]:
    out, a, b = [], frac.numerator, frac.denominator
    h0, h1, k0, k1 = 0, 1, 1, 0
    while b:
        c = a // b
        h0, h1 = h1, c * h1 + h0
        k0, k1 = k1, c * k1 + k0
        out.append(Fraction(h1, k1))
        a, b = b, a - c * b
    return out


def order_from_measurement(c: int, t: int, y: int, q: int) -> int | None:
    """Continued-fraction recovery of the order from counter value c.

    A convergent s/r' with gcd(s, r) > 1 yields a divisor r' of r, so small
    multiples of each denominator are also tried before reducing to the
    minimal exponent.
    """
    for cv in convergents(Fraction(c, 2 ** t)):
        d = cv.denominator
        if d >= q:
            break
        for m in range(d, q, d):
            if pow(y, m, q) == 1:
                return minimal_order(y, q, m)
    return None


def _prime_factors(m: int) -> list[int]:
    out, p = [], 2
    while p * p <= m:
        if m % p == 0:
            out.append(p)
            while m % p == 0:
                m //= p
        p += 1
    if m > 1:
        out.append(m)
    return out


def minimal_order(y: int, q: int, multiple: int) -> int:
    """Smallest r dividing `multiple` with y^r = 1 mod q."""
    r = multiple
    for p in _prime_factors(multiple):
        while r % p == 0 and pow(y, r // p, q) == 1:
            r //= p
    return r


def brute_order(y: int, q: int) -> int:
    r, v = 1, y % q
    while v != 1:
        v = v * y % q
        r += 1
    return r


def shor_order(y: int, q: int, rng: np.random.Generator, max_tries: int = 20) -> int:
    if q < 2:
        raise NotCoprime("q must be >= 2")
    if math.gcd(y, q) != 1:
        raise NotCoprime(f"gcd({y}, {q}) = {math.gcd(y, q)}")
    if y % q == 1:
        return 1
    t = 2 * q.bit_length()
    p = np.array(_shor_distribution(y % q, q, t))
    for _ in range(max_tries):
        c = int(rng.choice(p.size, p=p))
        r = order_from_measurement(c, t, y, q)
        if r is not None:
            return r
    raise FactorNotFound(f"order of {y} mod {q} not recovered in {max_tries} measurements")


def shor_factor(q: int, rng: np.random.Generator, max_attempts: int = 20) -> tuple[int, int]:
    if q < 4:
        raise FactorNotFound(f"{q} has no nontrivial factorization")
    if q % 2 == 0:
        return 2, q // 2
    for _ in range(max_attempts):
        y = int(rng.integers(2, q))
        g = math.gcd(y, q)
        if g > 1:
            return g, q // g
        try:
            r = shor_order(y, q, rng, max_tries=1)
        except FactorNotFound:
            continue
        if r % 2 or pow(y, r // 2, q) == q - 1:
            continue
        f = math.gcd(pow(y, r // 2, q) - 1, q)
        if 1 < f < q:
            return f, q // f
    raise FactorNotFound(f"no factor of {q} in {max_attempts} attempts")


# --- Zalka-Wiesner -------------------------------------------------------------

@dataclass(frozen=True)
class PotentialGrid:
    """Potential V sampled at X_k = k/sqrt(N), k < N = 2^n (box [0, sqrt N))."""
    n: int
    samples: np.ndarray
    mass: float = 1.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape != (2 ** self.n,):
            raise BadTimeStep(f"need {2 ** self.n} samples, got {s.shape}")
        object.__setattr__(self, "samples", s)

    @property
    def N(self) -> int:
        return 2 ** self.n

    @property
    def dx(self) -> float:
        return 1 / math.sqrt(self.N)

    @staticmethod
    def coords(n: int) -> np.ndarray:
        N = 2 ** n
        return np.arange(N) / math.sqrt(N)

    @staticmethod
    def momenta(n: int) -> np.ndarray:
        N = 2 ** n
        return math.sqrt(N) * (np.arange(N) / N - 0.5)

    @classmethod
    def from_function(cls, n: int, fn, mass: float = 1.0) -> "PotentialGrid":
        return cls(n, np.array([fn(x) for x in cls.coords(n)], dtype=float), mass)

    @classmethod
    def from_samples(cls, n: int, xs, vs, mass: float = 1.0) -> "PotentialGrid":
        """Linear resampling of tabulated (x, V) onto the grid."""
        return cls(n, np.interp(cls.coords(n), np.asarray(xs, float), np.asarray(vs, float)), mass)

    @classmethod
    def harmonic(cls, n: int, omega: float = 1.0, mass: float = 1.0) -> "PotentialGrid":
        c = math.sqrt(2 ** n) / 2
        return cls.from_function(n, lambda x: 0.5 * mass * omega ** 2 * (x - c) ** 2, mass)


@lru_cache(maxsize=16)
def _qft_matrix(n: int) -> np.ndarray:
    m = qgate.unitary_of(qft(n)).mat
    m.setflags(write=False)
    return m


def kinetic_diag(grid: PotentialGrid) -> np.ndarray:
    return PotentialGrid.momenta(grid.n) ** 2 / (2 * grid.mass)


def kinetic_matrix(grid: PotentialGrid) -> np.ndarray:
    """K = A^{-1} QFT^{-1} K_diag QFT A with A = diag(e^{i pi a})."""
    F = _qft_matrix(grid.n)
    A = np.exp(1j * np.pi * np.arange(grid.N))
    M = F * A[None, :]  # QFT . A
    return M.conj().T @ (kinetic_diag(grid)[:, None] * M)


def hamiltonian(grid: PotentialGrid) -> np.ndarray:
    return kinetic_matrix(grid) + np.diag(grid.samples)


def exact_propagate(grid: PotentialGrid, psi0: Ket, t: float) -> Ket:
    """Dense eigendecomposition propagator exp(-iHt) (reference solution)."""
    w, v = np.linalg.eigh(hamiltonian(grid))
    return Ket(psi0.dims, v @ (np.exp(-1j * w * t) * (v.conj().T @ psi0.amps)))


def zalka_wiesner(grid: PotentialGrid, psi0: Ket, t: float, dt: float) -> Ket:
    """First-order Trotter product [exp(-iK dt) exp(-iV dt)]^{t/dt}."""
    if not dt > 0 or t < dt:
        raise BadTimeStep(f"need dt > 0 and t >= dt (t={t}, dt={dt})")
    steps = int(round(t / dt))
    if abs(steps * dt - t) > 1e-9 * max(1.0, t):
        raise BadTimeStep(f"t/dt = {t / dt} is not an integer")
    F = _qft_matrix(grid.n)
    A = np.exp(1j * np.pi * np.arange(grid.N))
    eV = np.exp(-1j * grid.samples * dt)
    eK = np.exp(-1j * kinetic_diag(grid) * dt)
    Fd = F.conj().T
    psi = np.asarray(psi0.amps, dtype=complex).copy()
    for _ in range(steps):
        psi = eV * psi
        psi = A.conj() * (Fd @ (eK * (F @ (A * psi))))
    return Ket(psi0.dims, psi)


def gaussian_packet(n: int, center: float, width: float, p0: float = 0.0) -> Ket:
    X = PotentialGrid.coords(n)
    v = np.exp(-((X - center) ** 2) / (4 * width ** 2) + 2j * np.pi * p0 * X)
    return Ket((2 ** n,), v / np.linalg.norm(v))
