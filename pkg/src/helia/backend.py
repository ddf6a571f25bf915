"""Exact statevector simulator standing in for the quantum processor.

Amplitude-index convention: qubit 0 is the leftmost character of a Pauli text
string and the most significant bit of the amplitude index, so basis state
``|q0 q1 ... q_{n-1}>`` lives at index ``sum_q q * 2**(n-1-q)``.

Gate angle conventions:

* ``roty`` / ``rotz`` are half-angle, ``exp(-i theta sigma / 2)``;
* ``prot`` (multi-qubit Pauli rotation) is full-angle, ``exp(-i theta P)``,
  applied as ``cos(theta) I - i sin(theta) P``.

All kernels operate on arrays of shape ``(batch, 2**n)``; a single state is a
batch of one.  Besides plain circuit execution the module provides the two
gradient back-ends used by the trainers: batched evaluation of shifted
parameter vectors (for the two-point shift rule) and a reverse-mode sweep that
yields the same derivatives from one forward and one backward pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .pauli import PauliString

__all__ = [
    "StateVector",
    "GateOp",
    "EigensolverError",
    "rot_y",
    "rot_z",
    "hadamard",
    "cnot",
    "pauli_rotation",
    "zero_state",
    "apply_gate",
    "run_circuit",
    "run_circuits_batched",
    "batch_expectations",
    "expectation",
    "sample_expectation",
    "apply_observable",
    "analytic_gradient",
    "ground_state",
]

_SQRT_HALF = 1.0 / np.sqrt(2.0)

TRAINABLE_KINDS = ("roty", "rotz", "prot")
FIXED_KINDS = ("h", "cnot")


class EigensolverError(RuntimeError):
    """Iterative ground-state solve failed to reach the requested residual."""


@dataclass
class StateVector:
    """An n-qubit pure state as a dense complex amplitude vector."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        dim = 2 ** self.n_qubits
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (dim,):
            raise ValueError(f"expected {dim} amplitudes, got shape {amps.shape}")
        self.amplitudes = amps

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())


def zero_state(n_qubits: int) -> StateVector:
    amps = np.zeros(2 ** n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


@dataclass(frozen=True)
class GateOp:
    """One circuit operation.

    ``kind`` is one of ``roty``, ``rotz``, ``h``, ``cnot``, ``prot``.
    Trainable kinds carry exactly one ``param_slot``; ``h`` and ``cnot`` carry
    none.  ``generator`` is set for ``prot`` only and must be a phase-free
    Pauli string.
    """

    kind: str
    targets: Tuple[int, ...]
    generator: Optional[PauliString] = None
    param_slot: Optional[int] = None

    def __post_init__(self):
        if self.kind in TRAINABLE_KINDS:
            if self.param_slot is None:
                raise ValueError(f"{self.kind} gate needs a param_slot")
        elif self.kind in FIXED_KINDS:
            if self.param_slot is not None:
                raise ValueError(f"{self.kind} gate cannot carry a param_slot")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "prot":
            if self.generator is None:
                raise ValueError("prot gate needs a generator")
            if self.generator.phase_power != 0:
                raise ValueError("prot generator must be phase-free")

    @property
    def angle_convention(self) -> str:
        """``half`` for roty/rotz (shift-rule r = 1/2), ``full`` for prot (r = 1)."""
        return "full" if self.kind == "prot" else "half"

    @property
    def shift_scale(self) -> float:
        """Two-eigenvalue generator scale r of exp(-i theta G), |eig(G)| = r."""
        return 1.0 if self.kind == "prot" else 0.5


def rot_y(qubit: int, param_slot: int) -> GateOp:
    return GateOp("roty", (qubit,), None, param_slot)


def rot_z(qubit: int, param_slot: int) -> GateOp:
    return GateOp("rotz", (qubit,), None, param_slot)


def hadamard(qubit: int) -> GateOp:
    return GateOp("h", (qubit,))


def cnot(control: int, target: int) -> GateOp:
    if control == target:
        raise ValueError("cnot control and target must differ")
    return GateOp("cnot", (control, target))


def pauli_rotation(generator: PauliString, param_slot: int) -> GateOp:
    return GateOp("prot", tuple(
        q for q in range(generator.n_qubits)
        if (generator.x >> q) & 1 or (generator.z >> q) & 1
    ), generator, param_slot)


# ---------------------------------------------------------------------------
# Pauli-action kernels
# ---------------------------------------------------------------------------

_PAULI_KERNEL_CACHE: Dict[Tuple[int, int, int, int], Tuple[np.ndarray, np.ndarray]] = {}


def _index_mask(bits: int, n: int) -> int:
    """Map qubit-indexed bits to amplitude-index bits (qubit 0 = MSB)."""
    out = 0
    for q in range(n):
        if (bits >> q) & 1:
            out |= 1 << (n - 1 - q)
    return out


def _pauli_kernel(pauli: PauliString) -> Tuple[np.ndarray, np.ndarray]:
    """Gather indices and per-amplitude factors realizing ``P |psi>``.

    ``P|b> = phi * (-1)**parity(z & b) |b ^ x>`` with ``phi = i**(k + |x&z|)``;
    the returned ``src`` and ``coef`` satisfy ``(P psi)[j] = coef[j] *
    psi[src[j]]``.
    """
    key = (pauli.n_qubits, pauli.x, pauli.z, pauli.phase_power)
    hit = _PAULI_KERNEL_CACHE.get(key)
    if hit is not None:
        return hit
    n = pauli.n_qubits
    dim = 1 << n
    xm = _index_mask(pauli.x, n)
    zm = _index_mask(pauli.z, n)
    idx = np.arange(dim, dtype=np.uint64)
    src = (idx ^ np.uint64(xm)).astype(np.intp)
    parity = np.bitwise_count(idx & np.uint64(zm)).astype(np.int64) & 1
    phi = 1j ** ((pauli.phase_power + (pauli.x & pauli.z).bit_count()) % 4)
    signs = np.where(parity[src] == 0, 1.0, -1.0)
    coef = (phi * signs).astype(np.complex128)
    _PAULI_KERNEL_CACHE[key] = (src, coef)
    return src, coef


def _pauli_apply(amps: np.ndarray, pauli: PauliString) -> np.ndarray:
    """``P @ psi`` for a (batch, dim) array; returns a new array."""
    src, coef = _pauli_kernel(pauli)
    return amps[..., src] * coef


# ---------------------------------------------------------------------------
# Gate kernels on (batch, dim) arrays
# ---------------------------------------------------------------------------

def _check_target(n: int, q: int) -> None:
    if not 0 <= q < n:
        raise ValueError(f"target qubit {q} out of range for {n} qubits")


def _broadcast_entry(u):
    if isinstance(u, np.ndarray) and u.ndim > 0:
        return u[:, None, None]
    return u


def _apply_1q(amps: np.ndarray, n: int, q: int, u00, u01, u10, u11) -> None:
    """In-place single-qubit gate; matrix entries may be (batch,) arrays."""
    batch = amps.shape[0]
    view = amps.reshape(batch, 1 << q, 2, 1 << (n - 1 - q))
    a0 = view[:, :, 0, :].copy()
    a1 = view[:, :, 1, :]
    u00, u01, u10, u11 = (_broadcast_entry(u) for u in (u00, u01, u10, u11))
    view[:, :, 0, :] = u00 * a0 + u01 * a1
    view[:, :, 1, :] = u10 * a0 + u11 * a1


def _apply_gate_batch(amps: np.ndarray, n: int, gate: GateOp, angles) -> None:
    """Apply one gate in place to a (batch, dim) array.

    ``angles`` is a scalar or a (batch,) array for trainable gates and is
    ignored for fixed gates.
    """
    if angles is not None:
        a = np.asarray(angles, dtype=np.float64)
        angles = float(a) if a.ndim == 0 else a
    kind = gate.kind
    if kind == "roty":
        q = gate.targets[0]
        _check_target(n, q)
        c = np.cos(0.5 * angles)
        s = np.sin(0.5 * angles)
        _apply_1q(amps, n, q, c, -s, s, c)
    elif kind == "rotz":
        q = gate.targets[0]
        _check_target(n, q)
        phase = np.exp(-0.5j * (angles if isinstance(angles, np.ndarray) else float(angles)))
        _apply_1q(amps, n, q, phase, 0.0, 0.0, np.conj(phase))
    elif kind == "h":
        q = gate.targets[0]
        _check_target(n, q)
        _apply_1q(amps, n, q, _SQRT_HALF, _SQRT_HALF, _SQRT_HALF, -_SQRT_HALF)
    elif kind == "cnot":
        c, t = gate.targets
        _check_target(n, c)
        _check_target(n, t)
        p1, p2 = (c, t) if c < t else (t, c)
        batch = amps.shape[0]
        view = amps.reshape(
            batch, 1 << p1, 2, 1 << (p2 - p1 - 1), 2, 1 << (n - 1 - p2))
        caxis_first = c < t
        if caxis_first:
            sub = view[:, :, 1, :, :, :]
            tmp = sub[:, :, :, 0, :].copy()
            sub[:, :, :, 0, :] = sub[:, :, :, 1, :]
            sub[:, :, :, 1, :] = tmp
        else:
            sub = view[:, :, :, :, 1, :]
            tmp = sub[:, :, 0, :, :].copy()
            sub[:, :, 0, :, :] = sub[:, :, 1, :, :]
            sub[:, :, 1, :, :] = tmp
    elif kind == "prot":
        if gate.generator.n_qubits != n:
            raise ValueError("prot generator register size mismatch")
        c = np.cos(angles)
        s = np.sin(angles)
        if isinstance(c, np.ndarray):
            c = c[:, None]
            s = s[:, None]
        pa = _pauli_apply(amps, gate.generator)
        amps *= c
        amps -= 1j * s * pa
    else:  # pragma: no cover - constructor forbids this
        raise ValueError(f"unknown gate kind {kind!r}")


def _resolve_angle(gate: GateOp, params: np.ndarray):
    if gate.param_slot is None:
        return None
    if gate.param_slot >= len(params):
        raise ValueError(
            f"unresolved parameter slot {gate.param_slot} "
            f"(only {len(params)} parameters supplied)")
    return params[..., gate.param_slot]


def apply_gate(state: StateVector, gate: GateOp, angle: Optional[float] = None) -> StateVector:
    """Apply one gate to a single state, returning a new StateVector."""
    if gate.param_slot is not None and angle is None:
        raise ValueError("trainable gate needs an angle")
    amps = state.amplitudes[None, :].copy()
    _apply_gate_batch(amps, state.n_qubits, gate, angle)
    return StateVector(state.n_qubits, amps[0])


def run_circuit(gates: Sequence[GateOp], params: Sequence[float],
                initial: StateVector) -> StateVector:
    """Left-to-right application of a gate list (index 0 acts first)."""
    params = np.asarray(params, dtype=np.float64)
    amps = initial.amplitudes[None, :].copy()
    n = initial.n_qubits
    for gate in gates:
        _apply_gate_batch(amps, n, gate, _resolve_angle(gate, params))
    return StateVector(n, amps[0])


def run_circuits_batched(gates: Sequence[GateOp], params_matrix: np.ndarray,
                         initial: np.ndarray, n_qubits: int) -> np.ndarray:
    """Run one circuit structure over a batch of parameter vectors.

    ``initial`` is a (dim,) vector shared across the batch or a (batch, dim)
    array of per-row initial states.
    """
    params_matrix = np.asarray(params_matrix, dtype=np.float64)
    batch = params_matrix.shape[0]
    dim = 1 << n_qubits
    initial = np.asarray(initial, dtype=np.complex128)
    if initial.ndim == 1:
        amps = np.broadcast_to(initial, (batch, dim)).copy()
    else:
        if initial.shape != (batch, dim):
            raise ValueError("initial batch shape mismatch")
        amps = initial.copy()
    for gate in gates:
        if gate.param_slot is None:
            _apply_gate_batch(amps, n_qubits, gate, None)
        else:
            if gate.param_slot >= params_matrix.shape[1]:
                raise ValueError(f"unresolved parameter slot {gate.param_slot}")
            _apply_gate_batch(amps, n_qubits, gate, params_matrix[:, gate.param_slot])
    return amps


# ---------------------------------------------------------------------------
# Expectation values
# ---------------------------------------------------------------------------

def _expectation_batch(amps: np.ndarray, obs) -> np.ndarray:
    out = np.zeros(amps.shape[0], dtype=np.float64)
    for pauli, coeff in obs.terms.items():
        pa = _pauli_apply(amps, pauli)
        out += coeff * np.einsum("bi,bi->b", amps.conj(), pa).real
    return out


def expectation(state: StateVector, obs) -> float:
    """Exact ``<psi|O|psi>`` of a Hermitian Pauli-sum observable."""
    if obs.n_qubits != state.n_qubits:
        raise ValueError("observable and state qubit counts differ")
    return float(_expectation_batch(state.amplitudes[None, :], obs)[0])


def batch_expectations(gates: Sequence[GateOp], params_matrix: np.ndarray,
                       obs, initial: np.ndarray, n_qubits: int) -> np.ndarray:
    """Expectations of ``obs`` after running each parameter row."""
    amps = run_circuits_batched(gates, params_matrix, initial, n_qubits)
    return _expectation_batch(amps, obs)


def pauli_expectation(state: StateVector, pauli: PauliString) -> float:
    pa = _pauli_apply(state.amplitudes[None, :], pauli)
    return float(np.vdot(state.amplitudes, pa[0]).real)


def sample_expectation(state: StateVector, obs, shots: int, seed: int) -> float:
    """Unbiased shot-sampled estimator of ``<psi|O|psi>``.

    Each Pauli term is measured in its own eigenbasis with ``shots`` draws of
    its +/-1 outcome; identity terms contribute exactly.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if obs.n_qubits != state.n_qubits:
        raise ValueError("observable and state qubit counts differ")
    rng = np.random.default_rng(seed)
    total = 0.0
    for pauli, coeff in obs.terms.items():
        if pauli.is_identity:
            total += coeff
            continue
        mean = pauli_expectation(state, pauli)
        p_plus = min(1.0, max(0.0, 0.5 * (1.0 + mean)))
        ups = rng.binomial(shots, p_plus)
        total += coeff * (2.0 * ups / shots - 1.0)
    return float(total)


def apply_observable(obs, amps: np.ndarray) -> np.ndarray:
    """``O @ psi`` for (…, dim) amplitude arrays."""
    out = np.zeros_like(amps)
    for pauli, coeff in obs.terms.items():
        out += coeff * _pauli_apply(amps, pauli)
    return out


# ---------------------------------------------------------------------------
# Reverse-mode (adjoint) gradients
# ---------------------------------------------------------------------------

_GENERATOR_CACHE: Dict[Tuple[str, int, int], PauliString] = {}


def _gate_generator_pauli(gate: GateOp, n: int) -> PauliString:
    """The Pauli whose (possibly scaled) exponential realizes the gate."""
    if gate.kind == "prot":
        return gate.generator
    letter = "Y" if gate.kind == "roty" else "Z"
    key = (letter, n, gate.targets[0])
    hit = _GENERATOR_CACHE.get(key)
    if hit is None:
        hit = PauliString.single(n, gate.targets[0], letter)
        _GENERATOR_CACHE[key] = hit
    return hit


def _apply_gate_inverse(amps: np.ndarray, n: int, gate: GateOp, angle) -> None:
    if gate.param_slot is None:
        _apply_gate_batch(amps, n, gate, None)  # h and cnot are involutions
    else:
        _apply_gate_batch(amps, n, gate, -angle)


def analytic_gradient(gates: Sequence[GateOp], params: np.ndarray, obs,
                      indices: Optional[Sequence[int]] = None,
                      initial: Optional[np.ndarray] = None,
                      n_qubits: Optional[int] = None,
                      weights: Optional[np.ndarray] = None) -> np.ndarray:
    """Exact loss gradient from one forward and one backward sweep.

    Computes ``d/d theta_k  sum_b w_b <psi_b| U^dag O U |psi_b>`` for the
    selected parameter slots.  Values agree with the two-point shift rule to
    machine precision (both are exact derivatives); this routine costs two
    circuit passes total instead of two per parameter.

    ``initial`` is a (dim,) vector or a (batch, dim) array; ``weights``
    defaults to ones.
    """
    params = np.asarray(params, dtype=np.float64)
    if n_qubits is None:
        if obs is None:
            raise ValueError("n_qubits required when obs is None")
        n_qubits = obs.n_qubits
    dim = 1 << n_qubits
    if initial is None:
        initial = np.zeros(dim, dtype=np.complex128)
        initial[0] = 1.0
    initial = np.asarray(initial, dtype=np.complex128)
    if initial.ndim == 1:
        phi = initial[None, :].copy()
    else:
        phi = initial.copy()
    index_list = None if indices is None else [int(i) for i in indices]
    if index_list is None:
        wanted = set(g.param_slot for g in gates if g.param_slot is not None)
    else:
        wanted = set(index_list)

    for gate in gates:
        _apply_gate_batch(phi, n_qubits, gate, _resolve_angle(gate, params))
    lam = apply_observable(obs, phi)
    if weights is not None:
        lam = lam * np.asarray(weights, dtype=np.float64)[:, None]

    grads = np.zeros(len(params), dtype=np.float64)
    for gate in reversed(gates):
        angle = _resolve_angle(gate, params)
        slot = gate.param_slot
        if slot is not None and slot in wanted:
            gen = _gate_generator_pauli(gate, n_qubits)
            gphi = _pauli_apply(phi, gen)
            overlap = np.einsum("bi,bi->b", lam.conj(), gphi).sum()
            # d/dtheta <lam|U...|phi> pair: 2 r Im<lam|sigma|phi>, r folded in.
            grads[slot] += 2.0 * gate.shift_scale * overlap.imag
        _apply_gate_inverse(phi, n_qubits, gate, angle)
        _apply_gate_inverse(lam, n_qubits, gate, angle)
    if index_list is None:
        return grads
    return grads[index_list]


# ---------------------------------------------------------------------------
# Ground-state solver
# ---------------------------------------------------------------------------

GROUND_STATE_QUBIT_BOUND = 14


def _canonical_phase(vec: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(vec)))
    phase = vec[k] / abs(vec[k])
    return vec / phase


def ground_state(obs, tol: float = 1e-10,
                 max_qubits: int = GROUND_STATE_QUBIT_BOUND) -> Tuple[float, StateVector]:
    """Lowest eigenpair of a Hermitian Pauli-sum observable.

    Uses matrix-free implicitly-restarted Lanczos through the Pauli-term
    action for registers above 5 qubits and dense diagonalization below.  The
    returned state has residual ``||O v - E v|| <= tol * max(1, |E|)`` and a
    deterministic global phase.
    """
    n = obs.n_qubits
    if n > max_qubits:
        raise ValueError(f"ground_state limited to {max_qubits} qubits, got {n}")
    dim = 1 << n

    if dim <= 32:
        mat = np.zeros((dim, dim), dtype=np.complex128)
        eye = np.eye(dim, dtype=np.complex128)
        mat = apply_observable(obs, eye).T
        vals, vecs = np.linalg.eigh(mat)
        energy = float(vals[0])
        vec = _canonical_phase(vecs[:, 0])
        return energy, StateVector(n, vec)

    def matvec(v):
        return apply_observable(obs, np.asarray(v, dtype=np.complex128)[None, :])[0]

    op = LinearOperator((dim, dim), matvec=matvec, dtype=np.complex128)
    rng = np.random.default_rng(0x6D1A)
    v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v0 /= np.linalg.norm(v0)

    last_residual = np.inf
    for ncv in (20, 40, 80):
        if ncv >= dim:
            ncv = dim - 1
        vals, vecs = eigsh(op, k=1, which="SA", v0=v0, ncv=ncv,
                           maxiter=20000, tol=min(tol, 1e-10) * 1e-2)
        energy = float(vals[0])
        vec = vecs[:, 0]
        vec = vec / np.linalg.norm(vec)
        residual = float(np.linalg.norm(matvec(vec) - energy * vec))
        if residual <= tol * max(1.0, abs(energy)):
            return energy, StateVector(n, _canonical_phase(vec))
        last_residual = residual
    raise EigensolverError(
        f"Lanczos residual {last_residual:.2e} above tolerance {tol:.2e}")
