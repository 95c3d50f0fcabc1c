"""Dense kets and density operators over mixed-dimension registers.

Basis ordering is lexicographic with the first subsystem most significant,
so the amplitude of |j k> in a two-part register (dA, dB) sits at j*dB + k.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyPartition, InvalidDensity, NotNormalized

NORM_TOL = 1e-6
PSD_TOL = 1e-9


def _as_dims(dims) -> tuple[int, ...]:
    out = tuple(int(d) for d in dims)
    if not out or any(d < 1 for d in out):
        raise DimensionMismatch(f"bad dims {dims!r}")
    return out


@dataclass(frozen=True)
class Ket:
    dims: tuple[int, ...]
    amps: np.ndarray

    def __post_init__(self):
        dims = _as_dims(self.dims)
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.size != int(np.prod(dims)):
            raise DimensionMismatch(f"{amps.size} amplitudes for dims {dims}")
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def basis(cls, dims, index: int) -> "Ket":
        dims = _as_dims(dims)
        v = np.zeros(int(np.prod(dims)), dtype=complex)
        v[index] = 1.0
        return cls(dims, v)

    @classmethod
    def qubits(cls, bits: str) -> "Ket":
        """Ket.qubits('01') -> |01>."""
        return cls.basis((2,) * len(bits), int(bits, 2))

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "Ket":
        return Ket(self.dims, self.amps / self.norm())

    def tensor(self) -> np.ndarray:
        return self.amps.reshape(self.dims)


@dataclass(frozen=True)
class DensityOp:
    dims: tuple[int, ...]
    mat: np.ndarray

    def __post_init__(self):
        dims = _as_dims(self.dims)
        mat = np.asarray(self.mat, dtype=complex)
        n = int(np.prod(dims))
        if mat.shape != (n, n):
            raise DimensionMismatch(f"matrix {mat.shape} for dims {dims}")
        mat.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", mat)

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def validate(self, tol: float = PSD_TOL) -> np.ndarray:
        """Check hermiticity, unit trace and positivity; return eigenvalues."""
        m = self.mat
        if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
            raise InvalidDensity("not Hermitian")
        if abs(np.trace(m) - 1.0) > tol:
            raise InvalidDensity(f"trace {np.trace(m).real:.3g} != 1")
        w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if w.min() < -tol:
            raise InvalidDensity(f"negative eigenvalue {w.min():.3g}")
        return np.clip(w, 0.0, None)


@dataclass(frozen=True)
class Bipartition:
    keep: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "keep", tuple(sorted(set(int(k) for k in self.keep))))

    def check(self, n: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if not self.keep or len(self.keep) >= n:
            raise EmptyPartition(f"keep={self.keep} is not a proper nonempty subset of {n} parts")
        if self.keep[0] < 0 or self.keep[-1] >= n:
            raise DimensionMismatch(f"keep={self.keep} out of range for {n} parts")
        rest = tuple(i for i in range(n) if i not in self.keep)
        return self.keep, rest

    def complement(self, n: int) -> "Bipartition":
        return Bipartition(self.check(n)[1])


@dataclass(frozen=True)
class SchmidtForm:
    coeffs: np.ndarray
    basisA: np.ndarray
    basisB: np.ndarray
    dimsA: tuple[int, ...] = field(default=())
    dimsB: tuple[int, ...] = field(default=())

    @property
    def rank(self) -> int:
        return int(self.coeffs.size)

    def reconstruct(self) -> np.ndarray:
        return np.einsum("q,aq,bq->ab", self.coeffs, self.basisA, self.basisB).reshape(-1)


def _require_normalized(psi: Ket):
    if abs(psi.norm() - 1.0) > NORM_TOL:
        raise NotNormalized(f"norm {psi.norm():.6g}")


def tensor(a: Ket, b: Ket) -> Ket:
    return Ket(a.dims + b.dims, np.kron(a.amps, b.amps))


def tensor_all(kets: Sequence[Ket]) -> Ket:
    out = kets[0]
    for k in kets[1:]:
        out = tensor(out, k)
    return out


def born_distribution(psi: Ket) -> np.ndarray:
    _require_normalized(psi)
    p = np.abs(psi.amps) ** 2
    return p / p.sum()


def measure(psi: Ket, rng: np.random.Generator) -> tuple[int, Ket]:
    p = born_distribution(psi)
    j = int(rng.choice(p.size, p=p))
    return j, Ket.basis(psi.dims, j)


def sample_counts(psi: Ket, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Histogram of `shots` independent measurements (one multinomial draw)."""
    return rng.multinomial(shots, born_distribution(psi))


def _split(psi: Ket, part: Bipartition):
    keep, rest = part.check(len(psi.dims))
    t = psi.tensor().transpose(keep + rest)
    dk = int(np.prod([psi.dims[i] for i in keep]))
    return t.reshape(dk, -1), keep, rest


def partial_measure(psi: Ket, part: Bipartition, rng: np.random.Generator) -> tuple[int, Ket]:
    """Measure the subsystems in `part.keep`; return outcome and the residual
    normalized state of the remaining subsystems."""
    _require_normalized(psi)
    m, keep, rest = _split(psi, part)
    p = np.sum(np.abs(m) ** 2, axis=1)
    p = p / p.sum()
    j = int(rng.choice(p.size, p=p))
    resid = m[j] / np.sqrt(p[j] * np.sum(np.abs(m) ** 2))
    return j, Ket(tuple(psi.dims[i] for i in rest), resid)


def density_of(psi: Ket) -> DensityOp:
    return DensityOp(psi.dims, np.outer(psi.amps, psi.amps.conj()))


def mixture(weights: Sequence[float], kets: Sequence[Ket]) -> DensityOp:
    """rho = sum_k p_k |psi_k><psi_k|."""
    mat = sum(w * np.outer(k.amps, k.amps.conj()) for w, k in zip(weights, kets))
    return DensityOp(kets[0].dims, mat)


def partial_trace(rho: DensityOp, part: Bipartition) -> DensityOp:
    """Reduce rho onto the subsystems listed in part.keep."""
    n = len(rho.dims)
    keep, rest = part.check(n)
    t = rho.mat.reshape(rho.dims + rho.dims)
    t = t.transpose(keep + rest + tuple(n + i for i in keep) + tuple(n + i for i in rest))
    dk = int(np.prod([rho.dims[i] for i in keep]))
    dr = rho.mat.shape[0] // dk
    red = np.einsum("ajbj->ab", t.reshape(dk, dr, dk, dr))
    return DensityOp(tuple(rho.dims[i] for i in keep), red)


def schmidt(psi: Ket, part: Bipartition) -> SchmidtForm:
    _require_normalized(psi)
    m, keep, rest = _split(psi, part)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    # svd already sorts descending; drop exact zeros only
    r = max(1, int(np.sum(s > 1e-15)))
    return SchmidtForm(
        coeffs=s[:r],
        basisA=u[:, :r],
        basisB=vh[:r].T,
        dimsA=tuple(psi.dims[i] for i in keep),
        dimsB=tuple(psi.dims[i] for i in rest),
    )


def _xlogx_sum(w: np.ndarray) -> float:
    w = w[w > 0]
    return float(-np.sum(w * np.log(w)))


def entropy(rho: DensityOp) -> float:
    """von Neumann entropy with natural log."""
    return max(0.0, _xlogx_sum(rho.validate()))


def mutual_information(rho: DensityOp, part: Bipartition) -> float:
    ra = partial_trace(rho, part)
    rb = partial_trace(rho, part.complement(len(rho.dims)))
    return entropy(ra) + entropy(rb) - entropy(rho)


def relative_entropy(rho: DensityOp, sigma: DensityOp) -> float:
    """S(rho || sigma) = tr rho (ln rho - ln sigma); +inf if supp rho not in supp sigma."""
    wr, vr = np.linalg.eigh(rho.mat)
    ws, vs = np.linalg.eigh(sigma.mat)
    wr = np.clip(wr, 0, None)
    ws = np.clip(ws, 0, None)
    # tr rho ln sigma = sum_ij wr_i |<r_i|s_j>|^2 ln ws_j
    ov = np.abs(vr.conj().T @ vs) ** 2
    mask = ws > 1e-14
    if (ov[:, ~mask] * wr[:, None]).sum() > 1e-12:
        return float("inf")
    cross = float(np.sum(wr[:, None] * ov[:, mask] * np.log(ws[mask])[None, :]))
    return -_xlogx_sum(wr) - cross


def purify(rho: DensityOp) -> Ket:
    """Return |Psi> = sum_i sqrt(A_i)|phi_i>|phi_i> on the doubled register."""
    w, v = np.linalg.eigh(rho.mat)
    rho.validate()
    w = np.clip(w, 0.0, None)
    amps = np.einsum("i,ai,bi->ab", np.sqrt(w), v, v.conj()).reshape(-1)
    return Ket(rho.dims + rho.dims, amps)


def random_ket(dims, rng: np.random.Generator) -> Ket:
    d = int(np.prod(dims))
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return Ket(dims, v / np.linalg.norm(v))


def random_density(dims, rng: np.random.Generator, rank: int | None = None) -> DensityOp:
    d = int(np.prod(dims))
    r = rank or d
    g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    m = g @ g.conj().T
    return DensityOp(dims, m / np.trace(m))


def epr() -> Ket:
    return Ket((2, 2), np.array([1, 0, 0, 1]) / np.sqrt(2))


# serialization: {"dims": [...], "re": [...], "im": [...]}
def ket_to_json(psi: Ket) -> dict:
    return {"dims": list(psi.dims), "re": psi.amps.real.tolist(), "im": psi.amps.imag.tolist()}


def ket_from_json(doc: dict) -> Ket:
    try:
        re = np.asarray(doc["re"], dtype=float)
        im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
        return Ket(doc["dims"], re + 1j * im)
    except (KeyError, TypeError, ValueError) as e:
        raise DimensionMismatch(f"bad ket document: {e}") from e


def density_to_json(rho: DensityOp) -> dict:
    return {"dims": list(rho.dims), "re": rho.mat.real.tolist(), "im": rho.mat.imag.tolist()}


def density_from_json(doc: dict) -> DensityOp:
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    return DensityOp(doc["dims"], re + 1j * im)
