"""Hamiltonians, the layered hybrid ansatz, poly-DLA splitting and datasets.

All builders are deterministic under their seed.  Open boundary conditions
are used for every chain model; random couplings are drawn from a standard
normal stream (recorded in result files by the bench layer).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import backend
from .backend import GateOp, StateVector, cnot, hadamard, pauli_rotation, rot_y, rot_z
from .dla import ClosureExceeded, DlaBasis, close_algebra
from .pauli import PauliString, commutator

__all__ = [
    "Observable",
    "ObservableParseError",
    "HeliaAnsatz",
    "PhaseSample",
    "PhaseDataset",
    "SplitResult",
    "xy_hamiltonian",
    "tfim_hamiltonian",
    "ltfim_hamiltonian",
    "heisenberg_bond_alt",
    "xy_generators",
    "tfim_generators",
    "coupling_generators",
    "dla_generators",
    "generators_of",
    "load_observable",
    "save_observable",
    "parse_observable",
    "format_observable",
    "split_poly_dla",
    "magnitude_coverage",
    "build_helia",
    "build_hea",
    "make_phase_dataset",
    "save_phase_datasets",
    "load_phase_datasets",
]

logger = logging.getLogger(__name__)


class ObservableParseError(ValueError):
    """Malformed observable file; carries the offending line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(message + where)


class Observable:
    """Real-weighted sum of phase-free Pauli strings; Hermitian by construction.

    Zero-coefficient terms are pruned.  Terms given with a phase power fold
    the phase into the coefficient; a residual imaginary factor (odd phase
    power) is rejected since it would break Hermiticity.
    """

    __slots__ = ("n_qubits", "terms")

    def __init__(self, n_qubits: int, terms: Optional[Iterable[Tuple[PauliString, float]]] = None):
        self.n_qubits = n_qubits
        self.terms: Dict[PauliString, float] = {}
        if terms:
            for pauli, coeff in terms:
                self.add_term(pauli, coeff)

    def add_term(self, pauli: PauliString, coeff: float) -> None:
        if pauli.n_qubits != self.n_qubits:
            raise ValueError("term register size mismatch")
        if pauli.phase_power:
            if pauli.phase_power == 2:
                coeff = -coeff
            else:
                raise ValueError(f"term {pauli!r} has imaginary phase; not Hermitian")
            pauli = pauli.canonical()
        coeff = float(coeff)
        if not np.isfinite(coeff):
            raise ValueError("non-finite coefficient")
        new = self.terms.get(pauli, 0.0) + coeff
        if new == 0.0:
            self.terms.pop(pauli, None)
        else:
            self.terms[pauli] = new

    def coefficient(self, pauli: PauliString) -> float:
        return self.terms.get(pauli.canonical(), 0.0)

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Observable):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self.terms == other.terms

    def __repr__(self) -> str:
        return f"Observable(n_qubits={self.n_qubits}, terms={len(self.terms)})"

    def __add__(self, other: "Observable") -> "Observable":
        if other.n_qubits != self.n_qubits:
            raise ValueError("register size mismatch")
        out = Observable(self.n_qubits, self.terms.items())
        for pauli, coeff in other.terms.items():
            out.add_term(pauli, coeff)
        return out

    def scaled(self, factor: float) -> "Observable":
        return Observable(self.n_qubits,
                          ((p, c * factor) for p, c in self.terms.items()))


def generators_of(obs: Observable) -> List[PauliString]:
    """The observable's Pauli terms as a generator list (insertion order)."""
    return list(obs.terms.keys())


# ---------------------------------------------------------------------------
# Pauli helpers and generator families
# ---------------------------------------------------------------------------

def _chain_term(n: int, placements: Sequence[Tuple[int, str]]) -> PauliString:
    letters = ["I"] * n
    for site, letter in placements:
        letters[site] = letter
    return PauliString.from_text("".join(letters))


def coupling_generators(n: int, letter: str) -> List[PauliString]:
    """Nearest-neighbour two-site generators ``L_j L_{j+1}`` on an open chain."""
    return [_chain_term(n, [(j, letter), (j + 1, letter)]) for j in range(n - 1)]


def field_generators(n: int, letter: str) -> List[PauliString]:
    return [_chain_term(n, [(j, letter)]) for j in range(n)]


def xy_generators(n: int) -> List[PauliString]:
    """Interleaved ``X_j X_{j+1}``, ``Y_j Y_{j+1}`` open-chain generators."""
    gens = []
    for j in range(n - 1):
        gens.append(_chain_term(n, [(j, "X"), (j + 1, "X")]))
        gens.append(_chain_term(n, [(j, "Y"), (j + 1, "Y")]))
    return gens

def tfim_generators(n: int) -> List[PauliString]:
    return coupling_generators(n, "X") + field_generators(n, "Z")


_COUPLING_FAMILIES = {"XY": ("X", "Y"), "YZ": ("Z", "Y"), "ZX": ("X", "Z")}


def dla_generators(family: str, n: int) -> List[PauliString]:
    """Generator sets by family name: XY / YZ / ZX coupling pairs, or TFIM."""
    name = family.upper()
    if name == "TFIM":
        return tfim_generators(n)
    try:
        first, second = _COUPLING_FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown DLA family {family!r}") from None
    gens = []
    for j in range(n - 1):
        gens.append(_chain_term(n, [(j, first), (j + 1, first)]))
        gens.append(_chain_term(n, [(j, second), (j + 1, second)]))
    return gens


# ---------------------------------------------------------------------------
# Hamiltonian builders
# ---------------------------------------------------------------------------

def xy_hamiltonian(n: int, seed: int) -> Observable:
    """Open-chain XY model with seeded standard-normal couplings; 2(n-1) terms."""
    if n < 2:
        raise ValueError("need at least 2 qubits")
    rng = np.random.default_rng(seed)
    alphas = rng.standard_normal(n - 1)
    betas = rng.standard_normal(n - 1)
    obs = Observable(n)
    for j in range(n - 1):
        obs.add_term(_chain_term(n, [(j, "X"), (j + 1, "X")]), alphas[j])
        obs.add_term(_chain_term(n, [(j, "Y"), (j + 1, "Y")]), betas[j])
    return obs


def tfim_hamiltonian(n: int, seed: int) -> Observable:
    """Open-chain transverse-field Ising model; (n-1) + n terms."""
    if n < 2:
        raise ValueError("need at least 2 qubits")
    rng = np.random.default_rng(seed)
    alphas = rng.standard_normal(n - 1)
    betas = rng.standard_normal(n)
    obs = Observable(n)
    for j in range(n - 1):
        obs.add_term(_chain_term(n, [(j, "X"), (j + 1, "X")]), alphas[j])
    for j in range(n):
        obs.add_term(_chain_term(n, [(j, "Z")]), betas[j])
    return obs


def ltfim_hamiltonian(n: int, seed: int) -> Observable:
    """Ising chain with both transverse and longitudinal fields; (n-1) + 2n terms."""
    if n < 2:
        raise ValueError("need at least 2 qubits")
    rng = np.random.default_rng(seed)
    alphas = rng.standard_normal(n - 1)
    betas = rng.standard_normal(n)
    gammas = rng.standard_normal(n)
    obs = Observable(n)
    for j in range(n - 1):
        obs.add_term(_chain_term(n, [(j, "X"), (j + 1, "X")]), alphas[j])
    for j in range(n):
        obs.add_term(_chain_term(n, [(j, "Z")]), betas[j])
    for j in range(n):
        obs.add_term(_chain_term(n, [(j, "X")]), gammas[j])
    return obs


def heisenberg_bond_alt(n: int, j_odd: float, j_even: float) -> Observable:
    """Bond-alternating spin-1/2 Heisenberg chain (XX+YY+ZZ per bond).

    ``j_odd`` weights bonds (2i-1, 2i) and ``j_even`` bonds (2i, 2i+1), open
    boundaries, ``n`` even.
    """
    if n % 2 or n < 4:
        raise ValueError("n must be even and >= 4")
    obs = Observable(n)
    for i in range(1, n // 2):
        a, b = 2 * i - 1, 2 * i
        for letter in "XYZ":
            obs.add_term(_chain_term(n, [(a, letter), (b, letter)]), j_odd)
    for i in range(n // 2):
        a, b = 2 * i, 2 * i + 1
        for letter in "XYZ":
            obs.add_term(_chain_term(n, [(a, letter), (b, letter)]), j_even)
    return obs


# ---------------------------------------------------------------------------
# Observable text files
# ---------------------------------------------------------------------------

def parse_observable(text: str) -> Observable:
    """Parse the text format: ``n_qubits`` line, then ``<pauli> <coeff>`` lines.

    ``#`` starts a comment (full-line or trailing); duplicate Pauli lines sum.
    """
    n_qubits = None
    obs = None
    count = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n_qubits is None:
            try:
                n_qubits = int(line)
            except ValueError:
                raise ObservableParseError(
                    f"expected qubit count, got {line!r}", lineno) from None
            if n_qubits < 1:
                raise ObservableParseError("qubit count must be positive", lineno)
            obs = Observable(n_qubits)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ObservableParseError(
                f"expected '<pauli> <coefficient>', got {line!r}", lineno)
        try:
            pauli = PauliString.from_text(parts[0])
        except ValueError as exc:
            raise ObservableParseError(str(exc), lineno) from None
        if pauli.n_qubits != n_qubits:
            raise ObservableParseError(
                f"term has {pauli.n_qubits} qubits, header says {n_qubits}", lineno)
        try:
            coeff = float(parts[1])
        except ValueError:
            raise ObservableParseError(
                f"bad coefficient {parts[1]!r}", lineno) from None
        obs.add_term(pauli, coeff)
        count += 1
    if n_qubits is None:
        raise ObservableParseError("empty observable file")
    if count == 0:
        raise ObservableParseError("observable has no terms")
    return obs


def format_observable(obs: Observable) -> str:
    lines = [str(obs.n_qubits)]
    lines.extend(f"{pauli} {coeff!r}" for pauli, coeff in obs.terms.items())
    return "\n".join(lines) + "\n"


def load_observable(path) -> Observable:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_observable(fh.read())


def save_observable(obs: Observable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_observable(obs))


# ---------------------------------------------------------------------------
# Greedy poly-DLA splitting
# ---------------------------------------------------------------------------

class SplitResult(NamedTuple):
    inside: Observable
    outside: Observable
    basis: DlaBasis


def _try_extend_closure(elems: List[PauliString], seen: Dict, new: PauliString,
                        max_dim: int) -> bool:
    """Extend a closed element list by one generator, rolling back on overflow."""
    start = len(elems)
    c = new.canonical()
    if c.key() in seen:
        return True
    if len(elems) >= max_dim:
        return False
    seen[c.key()] = len(elems)
    elems.append(c)
    i = start
    ok = True
    while i < len(elems):
        a = elems[i]
        for j in range(i):
            res = commutator(a, elems[j])
            if res is None:
                continue
            cc = res[1]
            if cc.key() in seen:
                continue
            if len(elems) >= max_dim:
                ok = False
                break
            seen[cc.key()] = len(elems)
            elems.append(cc)
        if not ok:
            break
        i += 1
    if not ok:
        for e in elems[start:]:
            del seen[e.key()]
        del elems[start:]
    return ok


def split_poly_dla(obs: Observable, max_dim: Optional[int] = None) -> SplitResult:
    """Greedy split of an observable into a poly-DLA part and a remainder.

    Terms are taken in descending coefficient magnitude (ties broken by text
    form); a term is kept inside only while the running generator closure
    stays within ``max_dim`` (default ``n_qubits**2``).  ``inside + outside``
    reproduces the input exactly.
    """
    if not obs.terms:
        raise ValueError("observable has no terms")
    if max_dim is None:
        max_dim = obs.n_qubits ** 2
    order = sorted(obs.terms.items(), key=lambda kv: (-abs(kv[1]), str(kv[0])))
    elems: List[PauliString] = []
    seen: Dict = {}
    inside = Observable(obs.n_qubits)
    outside = Observable(obs.n_qubits)
    for pauli, coeff in order:
        if _try_extend_closure(elems, seen, pauli, max_dim):
            inside.add_term(pauli, coeff)
        else:
            outside.add_term(pauli, coeff)
    return SplitResult(inside, outside, DlaBasis(elems))


def magnitude_coverage(inside: Observable, outside: Observable) -> float:
    """Fraction of total coefficient magnitude captured inside, identity excluded."""
    def total(o: Observable) -> float:
        return sum(abs(c) for p, c in o.terms.items() if not p.is_identity)

    kept = total(inside)
    whole = kept + total(outside)
    return kept / whole if whole else 1.0


# ---------------------------------------------------------------------------
# Ansatz construction
# ---------------------------------------------------------------------------

@dataclass
class HeliaAnsatz:
    """Partitioned circuit: layered hardware block, optional Hadamard wall,
    then one full-angle Pauli rotation per DLA basis element.

    Parameter slots are contiguous: ``[0, theta_count)`` for the hardware
    block and ``[theta_count, theta_count + phi_count)`` for the algebra
    block.
    """

    n_qubits: int
    uq_gates: List[GateOp]
    hadamard_prelayer: bool
    ug_gates: List[GateOp]
    theta_count: int
    phi_count: int
    basis: Optional[DlaBasis]

    def __post_init__(self):
        slots = sorted(g.param_slot for g in self.uq_gates if g.param_slot is not None)
        if slots != list(range(self.theta_count)):
            raise ValueError("hardware-block slots must be exactly 0..theta_count-1")
        slots = sorted(g.param_slot for g in self.ug_gates)
        want = list(range(self.theta_count, self.theta_count + self.phi_count))
        if slots != want:
            raise ValueError("algebra-block slots must follow the hardware block")
        if self.basis is not None:
            for g in self.ug_gates:
                if g.generator not in self.basis:
                    raise ValueError(f"generator {g.generator} outside the basis")

    @property
    def param_count(self) -> int:
        return self.theta_count + self.phi_count

    @property
    def theta_indices(self) -> range:
        return range(self.theta_count)

    @property
    def phi_indices(self) -> range:
        return range(self.theta_count, self.param_count)

    @property
    def prelayer_gates(self) -> List[GateOp]:
        if not self.hadamard_prelayer:
            return []
        return [hadamard(q) for q in range(self.n_qubits)]

    @property
    def gates(self) -> List[GateOp]:
        """Full circuit: hardware block, optional Hadamard wall, algebra block."""
        return list(self.uq_gates) + self.prelayer_gates + list(self.ug_gates)

    def split_params(self, params: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return params[: self.theta_count], params[self.theta_count:]

    def state_before_ug(self, params: np.ndarray) -> StateVector:
        """State entering the algebra block: hardware block plus optional wall on |0...0>."""
        state = backend.zero_state(self.n_qubits)
        gates = list(self.uq_gates) + self.prelayer_gates
        return backend.run_circuit(gates, params, state)


def build_helia(n: int, uq_layers: int, basis: Optional[DlaBasis],
                hadamard_prelayer: bool = False) -> HeliaAnsatz:
    """Layered rotation/entangler block followed by DLA Pauli rotations.

    Each hardware layer is one Y-rotation and one Z-rotation per qubit, then a
    linear CNOT ladder; ``theta_count = 2 n uq_layers``.  The algebra block
    carries one full-angle rotation per basis element, in basis order.
    """
    if basis is not None and basis.n_qubits != n:
        raise ValueError("basis register size mismatch")
    uq_gates: List[GateOp] = []
    slot = 0
    for _ in range(uq_layers):
        for q in range(n):
            uq_gates.append(rot_y(q, slot))
            uq_gates.append(rot_z(q, slot + 1))
            slot += 2
        for q in range(n - 1):
            uq_gates.append(cnot(q, q + 1))
    ug_gates: List[GateOp] = []
    if basis is not None:
        for m, elem in enumerate(basis):
            ug_gates.append(pauli_rotation(elem, slot + m))
    return HeliaAnsatz(
        n_qubits=n,
        uq_gates=uq_gates,
        hadamard_prelayer=hadamard_prelayer,
        ug_gates=ug_gates,
        theta_count=slot,
        phi_count=len(ug_gates),
        basis=basis,
    )


def build_hea(n: int, layers: int) -> HeliaAnsatz:
    """Pure hardware-efficient ansatz (no algebra block, no prelayer)."""
    return build_helia(n, layers, basis=None, hadamard_prelayer=False)


# ---------------------------------------------------------------------------
# Phase-classification dataset
# ---------------------------------------------------------------------------

@dataclass
class PhaseSample:
    state: StateVector
    label: int
    j_odd: float
    j_even: float
    energy: float


@dataclass
class PhaseDataset:
    samples: List[PhaseSample]
    split: str

    def __len__(self) -> int:
        return len(self.samples)

    def states_matrix(self) -> np.ndarray:
        return np.stack([s.state.amplitudes for s in self.samples])

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.float64)


def make_phase_dataset(n: int, train_count: int, test_count: int,
                       seed: int, tol: float = 1e-8) -> Tuple[PhaseDataset, PhaseDataset]:
    """Ground states of the bond-alternating chain labeled by the coupling order.

    Couplings are uniform on [-1, 1]; a draw is labeled -1 when ``J < J'`` and
    +1 when ``J > J'`` (exact ties are redrawn, as are eigensolver failures).
    """
    if n % 2 or train_count < 1 or test_count < 1:
        raise ValueError("need even n and positive sample counts")
    rng = np.random.default_rng(seed)

    def draw() -> PhaseSample:
        while True:
            j_odd, j_even = rng.uniform(-1.0, 1.0, size=2)
            if j_odd == j_even:
                continue
            ham = heisenberg_bond_alt(n, j_odd, j_even)
            try:
                energy, state = backend.ground_state(ham, tol=tol)
            except backend.EigensolverError as exc:
                logger.warning("eigensolver failed for (J=%.6f, J'=%.6f): %s; resampling",
                               j_odd, j_even, exc)
                continue
            label = -1 if j_odd < j_even else 1
            return PhaseSample(state, label, j_odd, j_even, energy)

    train = PhaseDataset([draw() for _ in range(train_count)], "train")
    test = PhaseDataset([draw() for _ in range(test_count)], "test")
    return train, test


def save_phase_datasets(prefix, train: PhaseDataset, test: PhaseDataset,
                        n_qubits: int, seed: Optional[int] = None) -> None:
    """Flat binary cache (one float64 record per sample) plus a JSON sidecar."""
    import json

    dim = 2 ** n_qubits
    record = 3 + 2 * dim
    rows = []
    for ds in (train, test):
        for s in ds.samples:
            rows.append(np.concatenate([
                [s.j_odd, s.j_even, float(s.label)],
                s.state.amplitudes.real,
                s.state.amplitudes.imag,
            ]))
    np.asarray(rows, dtype=np.float64).tofile(f"{prefix}.bin")
    sidecar = {
        "n_qubits": n_qubits,
        "record_floats": record,
        "train_count": len(train),
        "test_count": len(test),
        "seed": seed,
        "layout": "j_odd j_even label re[dim] im[dim]",
    }
    with open(f"{prefix}.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=1, sort_keys=True)


def load_phase_datasets(prefix) -> Tuple[PhaseDataset, PhaseDataset]:
    import json

    with open(f"{prefix}.json", "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    n = sidecar["n_qubits"]
    record = sidecar["record_floats"]
    dim = 2 ** n
    data = np.fromfile(f"{prefix}.bin", dtype=np.float64).reshape(-1, record)
    if data.shape[0] != sidecar["train_count"] + sidecar["test_count"]:
        raise ValueError("cache record count does not match sidecar")

    def build(rows, split):
        samples = []
        for row in rows:
            amps = row[3:3 + dim] + 1j * row[3 + dim:]
            state = StateVector(n, amps)
            ham = heisenberg_bond_alt(n, row[0], row[1])
            samples.append(PhaseSample(state, int(row[2]), row[0], row[1],
                                       backend.expectation(state, ham)))
        return PhaseDataset(samples, split)

    t = sidecar["train_count"]
    return build(data[:t], "train"), build(data[t:], "test")
