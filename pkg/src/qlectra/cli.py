"""qlectra: run named experiments and emit JSON or CSV reports.

    qlectra <experiment> [--seed N] [--out PATH] [--format json|csv] [--param key=value ...]
    qlectra run -f config.json [same overrides]
    qlectra list

Exit status 0 on success, 2 on configuration errors, 3 on numerical failures;
errors are reported as a single JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import qadiabatic, qalgo, qgate, qopen, qproto, streams
from .errors import ConfigError, IOFailure, NumericalError, QlectraError, SchemaViolation, UnknownExperiment
from .qstate import Ket, density_of, entropy, epr, partial_trace, Bipartition

SCHEMA_VERSION = 1
FORMATS = ("json", "csv")


@dataclass(frozen=True)
class Param:
    kind: type
    default: Any = None
    required: bool = False
    choices: tuple = ()
    help: str = ""


@dataclass(frozen=True)
class Experiment:
    name: str
    run: Callable[[dict, int, int], dict]
    params: dict
    help: str = ""


@dataclass
class ExperimentConfig:
    name: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    format: str = "json"


@dataclass
class Report:
    name: str
    params: dict
    seed: int
    metrics: dict
    series: dict | None = None  # {"columns": [...], "rows": [[...], ...]}
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "params": self.params, "seed": self.seed, "metrics": self.metrics,
                "series": self.series, "wall_time": self.wall_time}


REGISTRY: dict[str, Experiment] = {}


def experiment(name: str, help: str = "", **params: Param):
    def deco(fn):
        if name in REGISTRY:
            raise RuntimeError(f"duplicate experiment id {name}")
        REGISTRY[name] = Experiment(name, fn, params, help)
        return fn
    return deco


def list_experiments() -> dict[str, Experiment]:
    return dict(REGISTRY)


def _series(columns, *cols) -> dict:
    rows = [list(r) for r in zip(*cols)]
    return {"columns": list(columns), "rows": rows}


# ---------------------------------------------------------------- experiments

@experiment("grover", "Grover search with a known solution count",
            n=Param(int, 3), marked=Param(int, 0))
def _grover(p, seed, workers):
    n, marked = p["n"], p["marked"]
    if not 0 <= marked < 2 ** n:
        raise SchemaViolation("marked outside the register")
    f = qalgo.BooleanOracle(n, lambda x: x == marked)
    rep = qalgo.grover(f, n, 1, np.random.default_rng(seed), keep_trajectory=True)
    theta = math.asin(math.sqrt(1 / 2 ** n))
    probs = [float(np.abs(a[marked]) ** 2) for a in rep.trajectory]
    return {"metrics": {"iterations": rep.iterations, "success_prob": rep.success_prob,
                        "closed_form": math.sin((2 * rep.iterations + 1) * theta) ** 2,
                        "oracle_calls": rep.oracle_calls, "measured": rep.measured},
            "series": _series(("iteration", "success_prob"), range(len(probs)), probs)}


@experiment("grover-adiabatic", "Local adiabatic Grover (roland_cerf or linear schedule)",
            n=Param(int, 4), marked=Param(int, 0), eps=Param(float, 0.2),
            schedule=Param(str, "roland_cerf", choices=("roland_cerf", "linear")),
            T=Param(float, 0.0, help="0 selects the schedule's own horizon"), steps=Param(int, 2000))
def _grover_adiabatic(p, seed, workers):
    T = p["T"] or None
    r = qadiabatic.adiabatic_grover(p["n"], p["marked"], p["eps"], p["schedule"], T)
    if p["steps"] != 2000:
        r = qadiabatic.adiabatic_grover(p["n"], p["marked"], p["eps"], p["schedule"], r["T"], r["T"] / p["steps"])
    N = 2 ** p["n"]
    s = np.linspace(0, 1, 101)
    return {"metrics": {"T": r["T"], "success": r["success"], "gap_min": float(qadiabatic.grover_gap(0.5, N))},
            "series": _series(("s", "gap"), s, qadiabatic.grover_gap(s, N))}


@experiment("grover-continuous", "Time-independent Grover Hamiltonian",
            n=Param(int, 4), marked=Param(int, 0), weight=Param(float, 0.5))
def _grover_continuous(p, seed, workers):
    r = qadiabatic.continuous_grover(p["n"], p["marked"], p["weight"])
    return {"metrics": r}


@experiment("qft", "QFT circuit vs DFT and truncation errors", n=Param(int, 5))
def _qft(p, seed, workers):
    n = p["n"]
    F = qgate.unitary_of(qalgo.qft(n)).mat
    err = float(np.max(np.abs(F - qalgo.dft_matrix(n))))
    cuts = list(range(1, n + 1))
    errs = [float(np.linalg.norm(qgate.unitary_of(qalgo.qft(n, c)).mat - F, 2)) for c in cuts]
    bounds = [qalgo.qft_truncation_bound(n, c) for c in cuts]
    return {"metrics": {"dft_error": err, "gates": qalgo.qft(n).gate_count()},
            "series": _series(("cutoff", "error", "bound"), cuts, errs, bounds)}


@experiment("phase-estimate", "Eigenphase estimation of diag(1, e^{2 pi i w})",
            n_bits=Param(int, 3), w=Param(float, 0.625))
def _phase_estimate(p, seed, workers):
    n, w = p["n_bits"], p["w"]
    U = qgate.GateMatrix(np.diag([1, np.exp(2j * np.pi * w)]), "U")
    dist = qalgo.phase_estimate_distribution(U, Ket((2,), [0, 1]), n)
    c = qalgo.phase_estimate(U, Ket((2,), [0, 1]), n, np.random.default_rng(seed))
    best = int(np.argmax(dist))
    return {"metrics": {"measured": c, "estimate": c / 2 ** n, "mode": best, "p_mode": float(dist[best])},
            "series": _series(("c", "probability"), range(dist.size), dist)}


@experiment("shor", "Order finding and factoring", q=Param(int, 15), max_attempts=Param(int, 20))
def _shor(p, seed, workers):
    q = p["q"]
    a, b = qalgo.shor_factor(q, np.random.default_rng(seed), p["max_attempts"])
    y = next(y for y in range(2, q) if math.gcd(y, q) == 1)
    r = qalgo.shor_order(y, q, np.random.default_rng(seed))
    return {"metrics": {"factor_1": a, "factor_2": b, "y": y, "order": r,
                        "order_brute": qalgo.brute_order(y, q)}}


@experiment("zalka", "Split-operator propagation in a harmonic well",
            n=Param(int, 6), t=Param(float, 1.0), dt=Param(float, 1e-3), omega=Param(float, 1.0),
            center=Param(float, 3.0), width=Param(float, 0.5))
def _zalka(p, seed, workers):
    grid = qalgo.PotentialGrid.harmonic(p["n"], p["omega"])
    psi0 = qalgo.gaussian_packet(p["n"], p["center"], p["width"])
    exact = qalgo.exact_propagate(grid, psi0, p["t"])
    dts = [p["dt"] * k for k in (8, 4, 2, 1)]
    errs = []
    for dt in dts:
        got = qalgo.zalka_wiesner(grid, psi0, p["t"], dt)
        errs.append(float(np.linalg.norm(got.amps - exact.amps)))
    fid = float(abs(np.vdot(exact.amps, qalgo.zalka_wiesner(grid, psi0, p["t"], p["dt"]).amps)) ** 2)
    slope = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
    return {"metrics": {"fidelity": fid, "slope": slope, "steps": int(round(p["t"] / p["dt"]))},
            "series": _series(("dt", "error"), dts, errs)}


@experiment("anneal", "Annealing with a decaying driver on a problem Hamiltonian",
            problem=Param(str, "disagree2", help="JSON problem document or 'disagree2'"),
            T=Param(float, 100.0), G0=Param(float, 10.0), steps=Param(int, 2000))
def _anneal(p, seed, workers):
    doc = {"disagree2": True} if p["problem"] == "disagree2" else _json_param(p["problem"])
    spec = qadiabatic.problem_from_json(doc)
    Ht = qadiabatic.build_problem(spec)
    Hd = qadiabatic.build_driver(spec.n)
    T, G0 = p["T"], p["G0"]
    psi0 = qadiabatic.ground_state(Ht.mat + G0 * Hd.mat)
    r = qadiabatic.anneal(Ht, Hd, lambda t: G0 * (1 - t / T), T, psi0, T / p["steps"])
    return {"metrics": {"ground_population": r["ground_population"], "n": spec.n,
                        "ground_states": len(qadiabatic.ground_states(Ht))}}


@experiment("lindblad", "Amplitude damping of a two-level atom",
            gamma=Param(float, 1.0), T=Param(float, 5.0), dt=Param(float, 1e-3), store_every=Param(int, 100))
def _lindblad(p, seed, workers):
    sm = np.array([[0, 1], [0, 0]], dtype=complex)  # |1> -> |0>
    model = qopen.LindbladModel(np.zeros((2, 2)), ((sm, p["gamma"]),))
    ts, rhos = qopen.lindblad_evolve(model, np.diag([0, 1]).astype(complex), p["T"], p["dt"], p["store_every"])
    pop = rhos[:, 1, 1].real
    exact = np.exp(-p["gamma"] * ts)
    tr = np.abs(np.trace(rhos, axis1=1, axis2=2) - 1)
    return {"metrics": {"max_error": float(np.max(np.abs(pop - exact))), "trace_error": float(tr.max())},
            "series": _series(("t", "p_excited", "exact"), ts, pop, exact)}


@experiment("rabi", "Jaynes-Cummings vacuum/Fock Rabi oscillation",
            n=Param(int, 1), g=Param(float, 1.0), omega=Param(float, 0.0), n_max=Param(int, 3),
            T=Param(float, 2 * math.pi), dt=Param(float, 0.01), rwa=Param(bool, True))
def _rabi(p, seed, workers):
    model = qopen.CavityModel(p["omega"], (p["g"],), p["n_max"], p["rwa"])
    r = qopen.rabi_trajectory(model, p["n"], p["T"], p["dt"])
    half = math.pi / (2 * p["g"] * math.sqrt(p["n"]))  # tau_n / 2
    U = qopen.propagator(qopen.jc_hamiltonian(model), half)
    amp = U[2 * (p["n"] - 1) + 1, 2 * p["n"]]
    return {"metrics": {"transfer_amp_re": float(amp.real), "transfer_amp_im": float(amp.imag),
                        "min_p_n0": float(r["p_n0"].min())},
            "series": _series(("t", "p_n0", "p_n1m1"), r["t"], r["p_n0"], r["p_n1m1"])}


@experiment("cocsign", "Commensuration search and the coCSign photon schedule",
            nu=Param(float, 1000.0), g=Param(float, 1.0), tol=Param(float, 0.05), n_cap=Param(int, 10))
def _cocsign(p, seed, workers):
    n1, n2, err = qopen.cocsign_timings(p["tol"], p["n_cap"])
    r = qopen.cocsign_simulate(n1, n2, p["g"], p["nu"])
    m = {"n1": n1, "n2": n2, "commensuration_error": err, "entangling_phase": r.entangling_phase,
         "tolerance": r.tolerance}
    for k in sorted(r.phases):
        key = "".join(map(str, k)) if isinstance(k, tuple) else str(k)
        m[f"phase_{key}"] = float(r.phases[k])
        m[f"fidelity_{key}"] = float(r.fidelity[k])
    return {"metrics": m}


@experiment("decouple", "Suppressing couplings to spectator qubits by NOT pulses",
            n_qubits=Param(int, 3), lam=Param(float, 1000.0), T=Param(float, 1.0), dt=Param(float, 1e-4),
            seeds=Param(int, 50), mode=Param(str, "random", choices=("random", "binary", "linear")))
def _decouple(p, seed, workers):
    d = np.ones((p["n_qubits"],) * 2) - np.eye(p["n_qubits"])
    pair = (0, 1)
    if p["mode"] != "random":
        _, res, cycle = qopen.periodic_decoupling(d, pair, p["T"], p["dt"], p["mode"])
        return {"metrics": {"max_abs": float(np.max(np.abs(res))), "cycle_slots": int(cycle)}}

    def one(k):
        return qopen.randomized_decoupling(d, pair, p["lam"], p["T"], p["dt"], streams.stream(seed, k))[1]

    res = np.array([one(k) for k in range(p["seeds"])])
    rms = np.sqrt(np.mean(res ** 2, axis=0))
    return {"metrics": {"rms": float(rms.max()), "max_abs": float(np.abs(res).max()),
                        "M": int(round(p["T"] / p["dt"]))},
            "series": _series(("string", "rms"), range(rms.size), rms)}


@experiment("teleport", "Teleportation of random single-qubit states", trials=Param(int, 100))
def _teleport(p, seed, workers):
    rng = np.random.default_rng(seed)
    worst, counts = 1.0, {k: 0 for k in qproto.CORRECTIONS}
    for _ in range(p["trials"]):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        target = Ket((2,), v)
        for _, bob in qproto.teleport_branches(*v).values():
            worst = min(worst, qproto.fidelity(bob, target))
        _, bits = qproto.teleport(*v, rng)
        counts[bits] += 1
    m = {"min_fidelity": worst}
    m.update({f"branch_{a}{c}": n for (a, c), n in counts.items()})
    return {"metrics": m}


@experiment("bb84", "BB84 with optional intercept-resend eavesdropper",
            n_bits=Param(int, 4096), eve=Param(bool, False), check_fraction=Param(float, 0.5))
def _bb84(p, seed, workers):
    r = qproto.bb84(p["n_bits"], p["eve"], p["check_fraction"], np.random.default_rng(seed))
    return {"metrics": {"qber": r.qber, "eve_detected": int(r.verdict == "EveDetected"),
                        "sifted": r.n_sifted, "checked": r.n_checked, "key_length": int(r.key.size),
                        "key_mismatches": int(np.sum(r.key != r.bob_key))}}


@experiment("chsh", "CHSH correlation of EPR pairs", shots=Param(int, 100000),
            state=Param(str, "epr", choices=("epr", "mixture")))
def _chsh(p, seed, workers):
    rho = density_of(epr()) if p["state"] == "epr" else qproto.classical_mixture()
    est, se = qproto.chsh_sample_seeded(p["shots"], seed, workers, rho)
    exact = qproto.chsh_exact(rho)
    return {"metrics": {"exact": exact, "estimate": est, "stderr": se,
                        "deviation_sigma": abs(est - exact) / se if se > 0 else 0.0, "classical_bound": 0.5}}


@experiment("polymer", "EPR-controlled polymer assembly",
            M=Param(int, 100000), control=Param(str, "epr", help="'epr' or a strategy like '++--'"))
def _polymer(p, seed, workers):
    ctl = p["control"]
    if ctl.lower() == "epr":
        control = qproto.EPR
    else:
        if len(ctl) != 4 or set(ctl) - {"+", "-"}:
            raise SchemaViolation("classical control is four signs: site1 (a, b), site2 (a, b)")
        s = [1 if c == "+" else -1 for c in ctl]
        control = qproto.Classical((s[0], s[1]), (s[2], s[3]))
    frac = qproto.polymer_run_seeded(p["M"], control, seed, workers)
    best = max(qproto.polymer_expected(c) for c in qproto.all_classical_strategies())
    return {"metrics": {"glue_fraction": frac, "expected": qproto.polymer_expected(control),
                        "best_classical": best}}


@experiment("granular", "Grover iterations with small-amplitude truncation",
            n=Param(int, 6), eps=Param(float, 0.12), marked=Param(int, 0))
def _granular(p, seed, workers):
    r = qproto.granular_grover(p["n"], [p["marked"]], p["eps"])
    traj = r.pop("trajectory")
    r["reached"] = int(r["reached"])
    return {"metrics": r, "series": _series(("iteration", "success_prob"), range(len(traj)), traj)}


@experiment("quanta", "Amplitude quantization of an equilibrium pair",
            instance=Param(str, "hadamard", choices=("hadamard", "random")), dim=Param(int, 3),
            eps=Param(float, 0.001))
def _quanta(p, seed, workers):
    if p["instance"] == "hadamard":
        A = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        psi = Ket((2,), [1 / math.sqrt(2)] * 2)
    else:
        A, psi = qproto.random_equilibrium(p["dim"], np.random.default_rng(seed))
    ladder = sorted({0.1, 0.01, p["eps"]}, reverse=True)
    reps = [qproto.quanta_report(A, psi, e) for e in ladder]
    last = reps[-1]
    m = {k: (int(v) if isinstance(v, bool) else v) for k, v in last.items()}
    return {"metrics": m, "series": _series(("eps", "in_error", "fin_error", "agreement_max_rel"),
                                            [r["eps"] for r in reps], [r["in_error"] for r in reps],
                                            [r["fin_error"] for r in reps], [r["agreement_max_rel"] for r in reps])}


@experiment("complexity", "Naive and particle-permutation complexity of a state",
            state=Param(str, "gsa", choices=("epr", "epr2", "epr2-crossed", "gsa", "ghz", "product")),
            n=Param(int, 4), t=Param(float, 0.7))
def _complexity(p, seed, workers):
    n = p["n"]
    kind = p["state"]
    if kind == "epr":
        psi = epr()
    elif kind == "epr2":
        psi = Ket((2,) * 4, np.kron(epr().amps, epr().amps))
    elif kind == "epr2-crossed":
        psi = qproto.permute_particles(Ket((2,) * 4, np.kron(epr().amps, epr().amps)), [0, 2, 1, 3])
    elif kind == "gsa":
        psi = qproto.gsa_state(n, p["t"])
    elif kind == "ghz":
        v = np.zeros(2 ** n)
        v[0] = v[-1] = 1 / math.sqrt(2)
        psi = Ket((2,) * n, v)
    else:
        psi = Ket.qubits("0" * n)
    return {"metrics": {"naive": qproto.naive_complexity(psi), "quantum": qproto.quantum_complexity(psi),
                        "qubits": len(psi.dims)}}


@experiment("phonons", "Oscillator-chain spectrum vs circulant eigensolve",
            N=Param(int, 64), m=Param(float, 1.0), K=Param(float, 1.0))
def _phonons(p, seed, workers):
    w = qproto.oscillator_chain_spectrum(p["N"], p["m"], p["K"])
    ref = qproto.chain_eigenfrequencies(p["N"], p["m"], p["K"])
    return {"metrics": {"max_deviation": float(np.max(np.abs(np.sort(w) - ref))), "max_frequency": float(w.max())},
            "series": _series(("q", "omega"), range(w.size), w)}


@experiment("entropy", "Entropy of an EPR pair and of its reduced state")
def _entropy(p, seed, workers):
    rho = density_of(epr())
    return {"metrics": {"S_pair": entropy(rho), "S_reduced": entropy(partial_trace(rho, Bipartition((0,)))),
                        "ln2": math.log(2)}}


# ---------------------------------------------------------------- config handling

def _json_param(raw):
    if isinstance(raw, (dict, list)):
        return raw
    try:
        return json.loads(raw)
    except (TypeError, json.JSONDecodeError) as e:
        raise SchemaViolation(f"expected a JSON document, got {raw!r}") from e


def _coerce(name: str, spec: Param, value):
    try:
        if spec.kind is bool:
            if isinstance(value, str):
                low = value.lower()
                if low in ("1", "true", "yes", "on"):
                    return True
                if low in ("0", "false", "no", "off"):
                    return False
                raise ValueError(value)
            if isinstance(value, (bool, int)) and value in (0, 1):
                return bool(value)
            raise ValueError(value)
        if spec.kind is int:
            if isinstance(value, bool):
                raise ValueError(value)
            x = float(value) if isinstance(value, str) else value
            if isinstance(x, float):
                if not x.is_integer():
                    raise ValueError(value)
                x = int(x)
            out = int(x)
        elif spec.kind is float:
            if isinstance(value, bool):
                raise ValueError(value)
            out = float(value)
            if not math.isfinite(out):
                raise ValueError(value)
        else:
            out = value if isinstance(value, str) else json.dumps(value)
    except (TypeError, ValueError) as e:
        raise SchemaViolation(f"parameter {name}: cannot read {value!r} as {spec.kind.__name__}") from e
    if spec.choices and out not in spec.choices:
        raise SchemaViolation(f"parameter {name}: {out!r} not in {list(spec.choices)}")
    return out


def resolve_params(exp: Experiment, given: dict) -> dict:
    extra = sorted(set(given) - set(exp.params))
    if extra:
        raise SchemaViolation(f"unknown parameters for {exp.name}: {extra}")
    out = {}
    for name, spec in exp.params.items():
        if name in given:
            out[name] = _coerce(name, spec, given[name])
        elif spec.required:
            raise SchemaViolation(f"missing required parameter {name} for {exp.name}")
        else:
            out[name] = spec.default
    return out


def _parse_kv(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise SchemaViolation(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _check_seed(seed) -> int:
    try:
        s = int(seed)
    except (TypeError, ValueError) as e:
        raise SchemaViolation(f"seed must be an integer, got {seed!r}") from e
    if isinstance(seed, float) and not seed.is_integer():
        raise SchemaViolation(f"seed must be an integer, got {seed!r}")
    if not 0 <= s < 2 ** 64:
        raise SchemaViolation("seed must fit in 64 unsigned bits")
    return s


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise IOFailure(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"{path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaViolation("config must be a JSON object")
    if doc.get("schema") != SCHEMA_VERSION:
        raise SchemaViolation(f"config schema must be {SCHEMA_VERSION}, got {doc.get('schema')!r}")
    allowed = {"schema", "name", "params", "seed", "output", "out", "format"}
    extra = sorted(set(doc) - allowed)
    if extra:
        raise SchemaViolation(f"unknown config keys {extra}")
    return doc


def build_config(name: str | None, file_doc: dict | None, seed=None, out=None, fmt=None,
                 params: dict | None = None) -> ExperimentConfig:
    """Merge a config document with command-line overrides (flags win)."""
    doc = file_doc or {}
    name = name or doc.get("name")
    if not name:
        raise SchemaViolation("no experiment name given")
    if name not in REGISTRY:
        raise UnknownExperiment(f"unknown experiment {name!r}; try `qlectra list`")
    merged = dict(doc.get("params") or {})
    if not isinstance(merged, dict):
        raise SchemaViolation("params must be an object")
    merged.update(params or {})
    output = doc.get("output") or {}
    if isinstance(output, str):
        output = {"path": output}
    path = out or output.get("path") or doc.get("out")
    fmt = fmt or output.get("format") or doc.get("format") or "json"
    if fmt not in FORMATS:
        raise SchemaViolation(f"format must be one of {FORMATS}")
    s = seed if seed is not None else doc.get("seed", 0)
    return ExperimentConfig(name, resolve_params(REGISTRY[name], merged), _check_seed(s), path, fmt)


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, complex):
        raise NumericalError("complex value in report; split it into real and imaginary parts")
    return x


def run(config: ExperimentConfig, workers: int | None = None) -> Report:
    exp = REGISTRY.get(config.name)
    if exp is None:
        raise UnknownExperiment(f"unknown experiment {config.name!r}")
    workers = streams.worker_count() if workers is None else workers
    t0 = time.perf_counter()
    with np.errstate(all="ignore"):
        out = exp.run(dict(config.params), config.seed, workers)
    metrics = _clean(out["metrics"])
    if not metrics:
        raise NumericalError(f"{config.name} produced no metrics")
    for k, v in metrics.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise NumericalError(f"metric {k} is not numeric: {v!r}")
    return Report(config.name, dict(config.params), config.seed, metrics,
                  _clean(out.get("series")), time.perf_counter() - t0)


# ---------------------------------------------------------------- emission

def fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    s = format(x, ".17g")
    # keep integral floats recognizable as floats
    return s if any(c in s for c in ".en") else s + ".0"


def to_json(obj) -> str:
    """JSON text with every float written to 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    return json.dumps(obj)


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return fmt_float(v).replace("null", "nan")
    s = str(v)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def render(report: Report, fmt: str) -> str:
    if fmt == "json":
        return to_json(report.to_dict()) + "\n"
    if fmt == "csv":
        series = report.series or {"columns": [], "rows": []}
        lines = [",".join(series["columns"])]
        lines += [",".join(_csv_cell(v) for v in row) for row in series["rows"]]
        return "\n".join(lines) + "\n"
    raise SchemaViolation(f"unknown format {fmt!r}")


def write_atomic(path: str, text: str):
    folder = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".qlectra-", dir=folder)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as e:
        raise IOFailure(f"cannot write {path}: {e}") from e


def emit(report: Report, fmt: str = "json", path: str | None = None) -> str:
    text = render(report, fmt)
    if path:
        write_atomic(path, text)
    return text


# ---------------------------------------------------------------- entry point

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SchemaViolation(message)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=str, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--param", nargs="+", action="extend", default=[], metavar="KEY=VALUE")


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qlectra", description="Run quantum-computation experiments.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("list", help="list registered experiments")
    r = sub.add_parser("run", help="run from a JSON config file")
    r.add_argument("-f", "--file", required=True)
    r.add_argument("--name", default=None)
    _common(r)
    for name, exp in REGISTRY.items():
        _common(sub.add_parser(name, help=exp.help))
    return ap


def _fail(err: Exception, code: int) -> int:
    doc = {"error": type(err).__name__, "message": str(err), "exit_code": code}
    sys.stderr.write(json.dumps(doc) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
        if args.command == "list":
            for name, exp in REGISTRY.items():
                schema = {k: (v.kind.__name__, v.default) for k, v in exp.params.items()}
                print(f"{name}\t{exp.help}\t{json.dumps(schema)}")
            return 0
        file_doc = load_config_file(args.file) if args.command == "run" else None
        name = (args.name if args.command == "run" else args.command)
        seed = _check_seed(args.seed) if args.seed is not None else None
        cfg = build_config(name, file_doc, seed, args.out, args.format, _parse_kv(args.param))
        report = run(cfg)
        text = emit(report, cfg.format, cfg.out)
        if not cfg.out:
            sys.stdout.write(text)
        return 0
    except QlectraError as e:
        return _fail(e, e.exit_code)
    except (np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError, OverflowError) as e:
        return _fail(e, 3)


if __name__ == "__main__":
    sys.exit(main())
