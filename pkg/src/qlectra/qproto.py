"""Two-party protocols, Bell-type statistics and amplitude-granularity tools."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import streams
from .errors import AllTruncated, AllZero, BadParams, NotEquilibrium, NumericalError, TooLarge
from .qgate import Circuit, Step, make_gate, run
from .qstate import DensityOp, Ket, _require_normalized, density_of, epr

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)
H2 = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


# ---------------------------------------------------------------- teleport

# (bit of A, bit of C) -> Bob's correction, applied as Z^c X^a
CORRECTIONS = {
    (0, 0): ("I", I2),
    (1, 0): ("X", SX),
    (0, 1): ("Z", SZ),
    (1, 1): ("XZ", SZ @ SX),
}


def teleport_circuit() -> Circuit:
    """Alice's part on register (A, B, C): CNOT with control C, target A, then H on C."""
    return Circuit((2, 2, 2), (Step(make_gate("CNOT"), (2, 0)), Step(make_gate("H"), (2,))))


def teleport_premeasure(lam: complex, mu: complex) -> Ket:
    psi_c = Ket((2,), [lam, mu])
    _require_normalized(psi_c)
    start = Ket((2, 2, 2), np.kron(epr().amps, psi_c.amps))
    return run(teleport_circuit(), start)


def teleport_branches(lam: complex, mu: complex) -> dict[tuple[int, int], tuple[float, Ket]]:
    """Every measurement branch: (a, c) -> (probability, corrected Bob state)."""
    t = teleport_premeasure(lam, mu).tensor()  # axes A, B, C
    out = {}
    for (a, c), (_, corr) in CORRECTIONS.items():
        bob = t[a, :, c]
        p = float(np.vdot(bob, bob).real)
        out[(a, c)] = (p, Ket((2,), corr @ (bob / np.sqrt(p))))
    return out


def teleport(lam: complex, mu: complex, rng: np.random.Generator) -> tuple[Ket, tuple[int, int]]:
    t = teleport_premeasure(lam, mu).tensor()
    # measure A and C together; outcome index = 2a + c
    probs = np.sum(np.abs(t) ** 2, axis=1).reshape(-1)
    k = int(rng.choice(4, p=probs / probs.sum()))
    a, c = divmod(k, 2)
    bob = t[a, :, c] / np.sqrt(probs[k])
    return Ket((2,), CORRECTIONS[(a, c)][1] @ bob), (a, c)


def fidelity(a: Ket, b: Ket) -> float:
    return float(abs(np.vdot(a.amps, b.amps)) ** 2)


# ---------------------------------------------------------------- BB84

QBER_THRESHOLD = 0.12


@dataclass
class BB84Result:
    key: np.ndarray
    bob_key: np.ndarray
    qber: float
    verdict: str
    n_sifted: int
    n_checked: int
    errors: int

    @property
    def errors_seen(self) -> bool:
        return self.errors > 0


def _prepare(bits: np.ndarray, bases: np.ndarray) -> np.ndarray:
    amps = np.zeros((bits.size, 2), dtype=complex)
    amps[np.arange(bits.size), bits] = 1.0
    had = bases == 1
    amps[had] = amps[had] @ H2.T
    return amps


def _measure(amps: np.ndarray, bases: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    a = amps.copy()
    had = bases == 1
    a[had] = a[had] @ H2.T
    p1 = np.abs(a[:, 1]) ** 2
    return (rng.random(p1.size) < p1).astype(np.int64)


def bb84(n_bits: int, eve: bool, check_fraction: float, rng: np.random.Generator,
         check_count: int | None = None) -> BB84Result:
    """Prepare-and-measure key exchange with optional intercept-resend attack.

    check_count, when given, fixes the number of disclosed sifted bits.
    """
    if n_bits < 16:
        raise BadParams("bb84 needs n_bits >= 16")
    if check_count is None and not 0 < check_fraction <= 1:
        raise BadParams("check_fraction must be in (0, 1]")
    bits = rng.integers(0, 2, n_bits)
    a_bases = rng.integers(0, 2, n_bits)
    e_bases = rng.integers(0, 2, n_bits)  # drawn unconditionally to keep streams aligned
    b_bases = rng.integers(0, 2, n_bits)
    amps = _prepare(bits, a_bases)
    if eve:
        seen = _measure(amps, e_bases, rng)
        amps = _prepare(seen, e_bases)
    got = _measure(amps, b_bases, rng)

    keep = np.flatnonzero(a_bases == b_bases)
    k = int(check_count) if check_count is not None else max(1, int(round(check_fraction * keep.size)))
    k = min(k, keep.size)
    pick = np.sort(rng.choice(keep.size, size=k, replace=False))
    checked = keep[pick]
    errors = int(np.sum(bits[checked] != got[checked]))
    qber = errors / k if k else 0.0
    rest = np.setdiff1d(keep, checked, assume_unique=True)
    return BB84Result(
        key=bits[rest], bob_key=got[rest], qber=qber,
        verdict="EveDetected" if qber > QBER_THRESHOLD else "clean",
        n_sifted=int(keep.size), n_checked=k, errors=errors,
    )


# ---------------------------------------------------------------- detectors

@dataclass(frozen=True)
class DetectorSetting:
    observable: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.observable, dtype=complex)
        if m.shape != (2, 2) or np.max(np.abs(m - m.conj().T)) > 1e-9:
            raise BadParams("observable must be a Hermitian 2x2 matrix")
        w = np.linalg.eigvalsh(m)
        if np.max(np.abs(w - np.array([-1.0, 1.0]))) > 1e-9:
            raise BadParams(f"observable eigenvalues {w} are not (-1, +1)")
        m.setflags(write=False)
        object.__setattr__(self, "observable", m)

    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        """(P_plus, P_minus)."""
        p = 0.5 * (I2 + self.observable)
        return p, I2 - p


def joint_probs(rho: DensityOp, A: DetectorSetting, B: DetectorSetting) -> np.ndarray:
    """p[i, j] for outcomes (+1, -1)[i] on the first party and [j] on the second."""
    PA, PB = A.projectors(), B.projectors()
    p = np.array([[np.trace(rho.mat @ np.kron(pa, pb)).real for pb in PB] for pa in PA])
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def correlation(rho: DensityOp, A: DetectorSetting, B: DetectorSetting) -> float:
    return float(np.trace(rho.mat @ np.kron(A.observable, B.observable)).real)


# ---------------------------------------------------------------- CHSH

CHSH_ALICE = (DetectorSetting(SX, "X"), DetectorSetting(SZ, "Y"))
CHSH_BOB = (DetectorSetting((SX + SZ) / np.sqrt(2), "a"), DetectorSetting((SX - SZ) / np.sqrt(2), "b"))
CHSH_SIGN = np.array([[1, 1], [1, -1]])  # minus on (Y, b)


def classical_mixture() -> DensityOp:
    return DensityOp((2, 2), np.diag([0.5, 0, 0, 0.5]))


def chsh_exact(rho: DensityOp | None = None) -> float:
    rho = density_of(epr()) if rho is None else rho
    total = 0.0
    for i, A in enumerate(CHSH_ALICE):
        for j, B in enumerate(CHSH_BOB):
            total += CHSH_SIGN[i, j] * correlation(rho, A, B)
    return total / 4


def _chsh_batch(size: int, rng: np.random.Generator, probs: np.ndarray):
    """probs[i, j] is the flattened 2x2 outcome table for setting pair (i, j)."""
    sa = rng.integers(0, 2, size)
    sb = rng.integers(0, 2, size)
    u = rng.random(size)
    cdf = np.cumsum(probs[sa, sb], axis=1)
    k = np.minimum((u[:, None] >= cdf).sum(axis=1), 3)
    oa = np.where(k // 2 == 0, 1, -1)
    ob = np.where(k % 2 == 0, 1, -1)
    xi = CHSH_SIGN[sa, sb] * oa * ob
    return sa, sb, oa, ob, xi


def _chsh_tables(rho: DensityOp) -> np.ndarray:
    return np.array([[joint_probs(rho, A, B).reshape(-1) for B in CHSH_BOB] for A in CHSH_ALICE])


def chsh_sample(shots: int, rng: np.random.Generator, rho: DensityOp | None = None,
                records: list | None = None) -> tuple[float, float]:
    """Monte-Carlo estimate of the weighted correlation and its standard error.

    If ``records`` is a list it receives one dict per trial.
    """
    rho = density_of(epr()) if rho is None else rho
    sa, sb, oa, ob, xi = _chsh_batch(int(shots), rng, _chsh_tables(rho))
    if records is not None:
        records.extend(_chsh_records(sa, sb, oa, ob))
    return float(xi.mean()), float(xi.std(ddof=1) / np.sqrt(xi.size))


def _chsh_records(sa, sb, oa, ob):
    for i in range(sa.size):
        yield {"setting_a": CHSH_ALICE[sa[i]].label, "setting_b": CHSH_BOB[sb[i]].label,
               "outcome_a": int(oa[i]), "outcome_b": int(ob[i])}


def chsh_sample_seeded(shots: int, seed: int, workers: int | None = None,
                       rho: DensityOp | None = None) -> tuple[float, float]:
    """Batched variant with per-batch counter streams; result independent of workers."""
    rho = density_of(epr()) if rho is None else rho
    tables = _chsh_tables(rho)

    def job(_b, size, rng):
        xi = _chsh_batch(size, rng, tables)[4]
        return int(xi.sum()), int(xi.size)

    parts = streams.map_batches(job, shots, seed, workers)
    s = sum(p[0] for p in parts)
    n = sum(p[1] for p in parts)
    mean = s / n
    # xi is +-1, so E[xi^2] = 1
    var = max(0.0, (n - n * mean * mean) / (n - 1))
    return mean, math.sqrt(var / n)


# ---------------------------------------------------------------- polymer

TYPES = ("a", "b")
SITE1 = {"a": DetectorSetting(SX, "a1"), "b": DetectorSetting(SZ, "b1")}
SITE2 = {"a": DetectorSetting((SX - SZ) / np.sqrt(2), "a2"), "b": DetectorSetting((SX + SZ) / np.sqrt(2), "b2")}


def glued(types: tuple[str, str], shifts: tuple[int, int]) -> bool:
    """aa, ab, bb glue on equal shifts; ba glues on opposite shifts."""
    same = shifts[0] == shifts[1]
    return (not same) if types == ("b", "a") else same


@dataclass(frozen=True)
class PolymerTrial:
    types: tuple[str, str]
    shifts: tuple[int, int]
    glued: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "glued", glued(self.types, self.shifts))


@dataclass(frozen=True)
class Classical:
    """Deterministic local strategy: type -> shift (+1/-1) at each site."""
    site1: tuple[int, int] = (1, 1)  # shift for (a, b)
    site2: tuple[int, int] = (1, 1)

    def shifts(self, t1: str, t2: str) -> tuple[int, int]:
        return self.site1[TYPES.index(t1)], self.site2[TYPES.index(t2)]


EPR = "EPR"


def all_classical_strategies() -> list[Classical]:
    vals = (1, -1)
    return [Classical((a, b), (c, d)) for a, b, c, d in itertools.product(vals, repeat=4)]


def polymer_expected(control) -> float:
    """Exact expected glue fraction over uniform type pairs."""
    total = 0.0
    rho = density_of(epr())
    for t1, t2 in itertools.product(TYPES, repeat=2):
        if control == EPR:
            p = joint_probs(rho, SITE1[t1], SITE2[t2])
            sign = [1, -1]
            total += sum(p[i, j] for i in range(2) for j in range(2) if glued((t1, t2), (sign[i], sign[j])))
        else:
            total += float(glued((t1, t2), control.shifts(t1, t2)))
    return total / 4


def _polymer_tables():
    rho = density_of(epr())
    return np.array([[joint_probs(rho, SITE1[t1], SITE2[t2]).reshape(-1) for t2 in TYPES] for t1 in TYPES])


def _polymer_batch(size: int, rng: np.random.Generator, control, tables=None):
    t1 = rng.integers(0, 2, size)
    t2 = rng.integers(0, 2, size)
    u = rng.random(size)
    if control == EPR:
        cdf = np.cumsum(tables[t1, t2], axis=1)
        k = np.minimum((u[:, None] >= cdf).sum(axis=1), 3)
        s1 = np.where(k // 2 == 0, 1, -1)
        s2 = np.where(k % 2 == 0, 1, -1)
    else:
        s1 = np.asarray(control.site1)[t1]
        s2 = np.asarray(control.site2)[t2]
    ba = (t1 == 1) & (t2 == 0)
    g = np.where(ba, s1 != s2, s1 == s2)
    return t1, t2, s1, s2, g


def polymer_run(M: int, control, rng: np.random.Generator, records: list | None = None) -> float:
    if M < 1:
        raise BadParams("M must be >= 1")
    tables = _polymer_tables() if control == EPR else None
    t1, t2, s1, s2, g = _polymer_batch(int(M), rng, control, tables)
    if records is not None:
        sym = {1: "+", -1: "-"}
        for i in range(g.size):
            records.append({"trial": i, "types": TYPES[t1[i]] + TYPES[t2[i]],
                            "shifts": sym[int(s1[i])] + sym[int(s2[i])], "glued": int(g[i])})
    return float(g.mean())


def polymer_run_seeded(M: int, control, seed: int, workers: int | None = None) -> float:
    if M < 1:
        raise BadParams("M must be >= 1")
    tables = _polymer_tables() if control == EPR else None
    parts = streams.map_batches(lambda b, s, rng: int(_polymer_batch(s, rng, control, tables)[4].sum()),
                                M, seed, workers)
    return sum(parts) / M


# ---------------------------------------------------------------- granularity

@dataclass(frozen=True)
class GrainedState:
    eps: float
    pairs: np.ndarray  # (dim, 2) integers: real and imaginary grain counts
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        if self.eps <= 0:
            raise BadParams("grain size must be positive")
        p = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        if not p.any():
            raise AllZero("every amplitude rounds to zero")
        p.setflags(write=False)
        object.__setattr__(self, "pairs", p)
        if not self.dims:
            object.__setattr__(self, "dims", (p.shape[0],))


def capacity(eps: float) -> float:
    """Q = log2 [1/eps^2]."""
    return math.log2(math.floor(1.0 / eps ** 2))


def quantize_state(psi: Ket, eps: float) -> GrainedState:
    if eps <= 0:
        raise BadParams("eps must be positive")
    n = np.rint(psi.amps.real / eps)
    m = np.rint(psi.amps.imag / eps)
    return GrainedState(eps, np.stack([n, m], axis=1), psi.dims)


def reconstruct(g: GrainedState) -> Ket:
    return Ket(g.dims, g.eps * (g.pairs[:, 0] + 1j * g.pairs[:, 1]))


def granular_evolve(psi: Ket, U: np.ndarray, eps: float) -> Ket:
    if not 0 < eps < 1:
        raise BadParams("eps must lie in (0, 1)")
    phi = np.asarray(U) @ psi.amps
    phi = np.where(np.abs(phi) < eps, 0.0, phi)
    nrm = np.linalg.norm(phi)
    if nrm == 0:
        raise AllTruncated(f"no amplitude survives eps={eps}")
    return Ket(psi.dims, phi / nrm)


def grover_matrix(n: int, marked: Sequence[int]) -> np.ndarray:
    N = 2 ** n
    flip = np.ones(N)
    flip[list(marked)] = -1
    return (np.full((N, N), 2.0 / N) - np.eye(N)) * flip[None, :]


def granular_grover(n: int, marked: Sequence[int], eps: float, max_iter: int | None = None,
                    tol: float = 1e-12) -> dict:
    """Iterate Grover with truncation until all weight sits on the marked set."""
    N = 2 ** n
    G = grover_matrix(n, marked)
    theta = math.asin(math.sqrt(len(marked) / N))
    standard = max(0, round(math.pi / (4 * theta) - 0.5))
    max_iter = max_iter or 4 * standard + 4
    psi = Ket((N,), np.full(N, 1 / np.sqrt(N)))
    it, p = 0, len(marked) / N
    probs = [p]
    while p < 1 - tol and it < max_iter:
        psi = granular_evolve(psi, G, eps)
        it += 1
        p = float(np.sum(np.abs(psi.amps[list(marked)]) ** 2))
        probs.append(p)
    return {"iterations": it, "success_prob": p, "reached": p >= 1 - tol,
            "standard_iterations": standard,
            "standard_success": math.sin((2 * standard + 1) * theta) ** 2, "trajectory": probs}


# ---------------------------------------------------------------- equilibrium and quanta

def _abs_components(x) -> np.ndarray:
    x = np.asarray(x)
    return np.abs(x.real) + np.abs(x.imag)


def column_sums(A: np.ndarray, psi: Ket, tol: float = 1e-12) -> dict[int, float]:
    A = np.asarray(A, dtype=complex)
    support = np.flatnonzero(np.abs(psi.amps) > tol)
    return {int(j): float(_abs_components(A[:, j]).sum()) for j in support}


def equilibrium_check(A: np.ndarray, psi: Ket, tol: float = 1e-9) -> bool:
    A = np.asarray(A, dtype=complex)
    if A.shape != (psi.dim, psi.dim):
        raise BadParams(f"operator {A.shape} does not match state dim {psi.dim}")
    sums = list(column_sums(A, psi).values())
    return max(sums) - min(sums) <= tol


UNIT_TYPES = (1, -1, 1j, -1j)


@dataclass
class QuantaSet:
    """Grouped amplitude quanta.

    Each row of ``groups`` is (b_in, b_fin, t_in, t_fin, count, first_id): a block
    of ``count`` quanta with consecutive ids that share every other attribute.
    Types are indices into UNIT_TYPES.
    """
    eps: float
    groups: np.ndarray
    nu: int
    coarse_eps: float
    dim: int

    def __post_init__(self):
        if not self.satisfies_q():
            raise NumericalError("constructed quanta violate condition Q")

    @property
    def size(self) -> int:
        return int(self.groups[:, 4].sum())

    def satisfies_q(self) -> bool:
        types = np.asarray(UNIT_TYPES)
        g = self.groups
        fin_seen: dict[tuple[int, int, int], set] = {}
        in_seen: dict[int, set] = {}
        for b_in, b_fin, t_in, t_fin, count, _ in g:
            if count == 0:
                continue
            fs = fin_seen.setdefault((b_in, b_fin, t_in), set())
            if -types[t_fin] in fs:
                return False
            fs.add(types[t_fin])
            ins = in_seen.setdefault(b_in, set())
            if -types[t_in] in ins:
                return False
            ins.add(types[t_in])
        return True

    def _weighted(self, col_state: int, col_type: int) -> np.ndarray:
        types = np.asarray(UNIT_TYPES)
        # exact integer accumulation of real and imaginary unit counts
        acc = np.zeros((self.dim, 2), dtype=np.int64)
        for row in self.groups:
            t = types[row[col_type]]
            acc[row[col_state], 0] += int(round(t.real)) * int(row[4])
            acc[row[col_state], 1] += int(round(t.imag)) * int(row[4])
        return acc[:, 0] + 1j * acc[:, 1]

    def theta_in(self) -> np.ndarray:
        return self.eps * self._weighted(0, 2)

    def theta_fin(self) -> np.ndarray:
        """Final state with the normalizing size, so it has unit norm."""
        v = self._weighted(1, 3).astype(complex)
        nrm = np.linalg.norm(v)
        return v / nrm if nrm else v

    def counts(self) -> np.ndarray:
        """n[i, j]: number of quanta with b_in = j and b_fin = i."""
        n = np.zeros((self.dim, self.dim), dtype=np.int64)
        for row in self.groups:
            n[row[1], row[0]] += row[4]
        return n



def _round_units(x: np.ndarray, eps: float) -> np.ndarray:
    return np.rint(_abs_components_split(x) / eps).astype(np.int64)


def _abs_components_split(x) -> np.ndarray:
    x = np.asarray(x)
    return np.stack([np.abs(x.real), np.abs(x.imag)], axis=-1)


def _column_units(col: np.ndarray, eps: float, total: int) -> np.ndarray:
    """Round |Re|, |Im| of a column to eps units with a fixed total (largest remainder)."""
    x = _abs_components_split(col).reshape(-1) / eps
    base = np.floor(x).astype(np.int64)
    short = int(total - base.sum())
    if short < 0 or short > x.size:
        raise NumericalError("cannot equalize column totals")
    order = np.argsort(-(x - base), kind="stable")
    base[order[:short]] += 1
    return base.reshape(-1, 2)


def amplitude_quantization(A: np.ndarray, psi: Ket, eps: float) -> QuantaSet:
    """Quantize psi and the action of A with grain eps, following the refinement
    construction: each eps-unit of psi_j is split into nu smaller quanta, one for
    every eps-unit of column j of A, and quantum types multiply."""
    A = np.asarray(A, dtype=complex)
    if not equilibrium_check(A, psi):
        raise NotEquilibrium(f"column sums differ: {column_sums(A, psi)}")
    if eps <= 0:
        raise BadParams("eps must be positive")
    d = psi.dim
    units_in = _round_units(psi.amps, eps)  # (d, 2): M_j, N_j
    support = [j for j in range(d) if units_in[j].any()]
    if not support:
        raise AllZero("every amplitude rounds to zero")
    a = next(iter(column_sums(A, psi).values()))
    nu = int(round(a / eps))
    units_A = {j: _column_units(A[:, j], eps, nu) for j in support}  # (d, 2): R_ij, I_ij

    def sgn(v: float) -> int:
        return -1 if v < 0 else 1

    rows = []
    next_id = 0
    for j in support:
        lam = psi.amps[j]
        ins = [(UNIT_TYPES.index(sgn(lam.real)), units_in[j, 0]),
               (UNIT_TYPES.index(1j * sgn(lam.imag)), units_in[j, 1])]
        for i in range(d):
            aij = A[i, j]
            outs = [(sgn(aij.real), units_A[j][i, 0]), (1j * sgn(aij.imag), units_A[j][i, 1])]
            for t_in, c_in in ins:
                if c_in == 0:
                    continue
                for t_a, c_a in outs:
                    if c_a == 0:
                        continue
                    t_fin = UNIT_TYPES[t_in] * t_a
                    count = int(c_in) * int(c_a)
                    rows.append((j, i, t_in, UNIT_TYPES.index(t_fin), count, next_id))
                    next_id += count
    groups = np.array(rows, dtype=np.int64).reshape(-1, 6)
    return QuantaSet(eps=eps / nu, groups=groups, nu=nu, coarse_eps=eps, dim=d)


def quanta_report(A: np.ndarray, psi: Ket, eps: float) -> dict:
    """Errors of the realized pair against psi and A psi, plus the agreement ratio."""
    A = np.asarray(A, dtype=complex)
    th = amplitude_quantization(A, psi, eps)
    target = A @ psi.amps
    target = target / np.linalg.norm(target)
    # theta_in counts quanta of size eps/nu, nu per coarse unit
    theta_in = th.theta_in()
    n = th.counts()
    expected = _abs_components(A) * _abs_components(psi.amps)[None, :]
    mask = expected > 0
    ratio = np.where(mask, n * eps ** 2 / np.where(mask, expected, 1), 1.0)
    return {
        "eps": eps,
        "nu": th.nu,
        "quanta": th.size,
        "in_error": float(np.linalg.norm(theta_in - psi.amps)),
        "fin_error": float(np.linalg.norm(th.theta_fin() - target)),
        "agreement_max_rel": float(np.max(np.abs(ratio - 1.0))),
        "condition_q": th.satisfies_q(),
    }


# ---------------------------------------------------------------- complexity

def _cut_rank1(psi: np.ndarray, n: int, left: Sequence[int], tol: float) -> bool:
    rest = [q for q in range(n) if q not in left]
    m = psi.reshape((2,) * n).transpose(list(left) + rest).reshape(2 ** len(left), -1)
    s = np.linalg.svd(m, compute_uv=False)
    return s.size < 2 or s[1] <= tol


def _check_register(psi: Ket) -> int:
    n = len(psi.dims)
    if any(d != 2 for d in psi.dims):
        raise BadParams("complexity is defined on qubit registers")
    if n > 12:
        raise TooLarge(f"{n} qubits exceeds the 12-qubit limit")
    _require_normalized(psi)
    return n


def naive_complexity(psi: Ket, tol: float = 1e-8) -> int:
    """Largest factor in the finest split of psi into contiguous tensor factors."""
    n = _check_register(psi)
    cuts = [0] + [k for k in range(1, n) if _cut_rank1(psi.amps, n, range(k), tol)] + [n]
    return max(b - a for a, b in zip(cuts, cuts[1:]))


def factor_blocks(psi: Ket, tol: float = 1e-8) -> list[tuple[int, ...]]:
    """Finest factorization into (not necessarily contiguous) particle blocks.

    Product cuts of a pure state are closed under intersection, so the block of
    qubit q is the intersection of every product side containing q.
    """
    n = _check_register(psi)
    full = (1 << n) - 1
    sides = [full]
    for mask in range(1, full):
        if mask & 1 and _cut_rank1(psi.amps, n, [q for q in range(n) if mask >> q & 1], tol):
            sides.append(mask)
            sides.append(full ^ mask)
    blocks = set()
    for q in range(n):
        b = full
        for s in sides:
            if s >> q & 1:
                b &= s
        blocks.add(tuple(i for i in range(n) if b >> i & 1))
    return sorted(blocks)


def quantum_complexity(psi: Ket, tol: float = 1e-8) -> int:
    """Minimum of naive_complexity over particle orderings.

    A permutation that makes every block contiguous attains the largest block
    size, and no ordering can do better, so this equals the largest block.
    """
    return max(len(b) for b in factor_blocks(psi, tol))


def permute_particles(psi: Ket, order: Sequence[int]) -> Ket:
    t = psi.tensor().transpose(list(order))
    return Ket(tuple(psi.dims[i] for i in order), t.reshape(-1))


def gsa_state(n: int, t: float, target: int = 0) -> Ket:
    """sin(t)|x0> + cos(t)/sqrt(N-1) sum_{x != x0} |x>."""
    N = 2 ** n
    v = np.full(N, math.cos(t) / math.sqrt(N - 1))
    v[target] = math.sin(t)
    return Ket((2,) * n, v)


# ---------------------------------------------------------------- oscillator chain

def oscillator_chain_spectrum(N: int, m: float = 1.0, K: float = 1.0) -> np.ndarray:
    """omega_q = sqrt(2K/m (1 - cos(q d))), d = 2 pi / N, q = 0..N-1."""
    if N < 2:
        raise BadParams("chain needs N >= 2")
    q = np.arange(N)
    return np.sqrt(np.clip(2 * K / m * (1 - np.cos(2 * np.pi * q / N)), 0.0, None))


def chain_force_matrix(N: int, m: float = 1.0, K: float = 1.0) -> np.ndarray:
    F = 2 * np.eye(N) - np.roll(np.eye(N), 1, axis=1) - np.roll(np.eye(N), -1, axis=1)
    return K / m * F


def chain_eigenfrequencies(N: int, m: float = 1.0, K: float = 1.0) -> np.ndarray:
    w = np.linalg.eigvalsh(chain_force_matrix(N, m, K))
    return np.sqrt(np.clip(w, 0.0, None))


def random_equilibrium(d: int, rng: np.random.Generator) -> tuple[np.ndarray, Ket]:
    """Random complex A with equal absolute-component column sums, and a full-support state."""
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    A = A / _abs_components(A).sum(axis=0)[None, :]
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return A, Ket((d,), v / np.linalg.norm(v))
