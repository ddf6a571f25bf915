"""Lie-algebraic classical simulation of the algebra block.

An observable living inside a closed Pauli basis is a real coefficient
vector.  Conjugation by the block's Pauli-rotation gates acts on that vector
through the per-gate Givens plans, so the Heisenberg-evolved operator, the
cost and its exact gradient are all classical computations of size dim(g);
the only quantum input is the vector of basis-element expectations on the
state prepared before the block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import backend
from .backend import StateVector
from .dla import DlaBasis, RotationPlan, adjoint_rotation_plans
from .pauli import PauliString

__all__ = [
    "CoeffVector",
    "ExpectationVector",
    "TermOutsideDla",
    "project_observable",
    "heisenberg_evolve",
    "gsim_cost",
    "gsim_gradient",
    "measure_dla_expectations",
    "measure_dla_expectations_batch",
    "analytic_initial_expectations",
    "g_purity",
]


class TermOutsideDla(ValueError):
    """Observable has Pauli terms outside the basis; they are listed on ``.terms``."""

    def __init__(self, terms: Sequence[PauliString]):
        self.terms = tuple(terms)
        preview = ", ".join(str(t) for t in self.terms[:5])
        more = "" if len(self.terms) <= 5 else f" (+{len(self.terms) - 5} more)"
        super().__init__(f"terms outside the algebra basis: {preview}{more}")


@dataclass
class CoeffVector:
    """Real coefficients of an operator over a DLA basis."""

    basis: DlaBasis
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.basis.dim,):
            raise ValueError("coefficient length must equal the basis dimension")
        self.values = vals

    def copy(self) -> "CoeffVector":
        return CoeffVector(self.basis, self.values.copy())


@dataclass
class ExpectationVector:
    """Per-basis-element expectation values on some state."""

    basis: DlaBasis
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.basis.dim,):
            raise ValueError("expectation length must equal the basis dimension")
        self.values = vals


VectorLike = Union[CoeffVector, ExpectationVector, np.ndarray]


def _values(v: VectorLike) -> np.ndarray:
    if isinstance(v, (CoeffVector, ExpectationVector)):
        return v.values
    return np.asarray(v, dtype=np.float64)


def project_observable(obs, basis: DlaBasis) -> CoeffVector:
    """Coefficient vector of an observable whose terms all lie in the basis."""
    values = np.zeros(basis.dim)
    missing = []
    for pauli, coeff in obs.terms.items():
        idx = basis.index.get(pauli.key())
        if idx is None:
            missing.append(pauli)
        else:
            values[idx] = coeff
    if missing:
        raise TermOutsideDla(missing)
    return CoeffVector(basis, values)


def _resolve_plans(plans_or_basis) -> Tuple[RotationPlan, ...]:
    if isinstance(plans_or_basis, DlaBasis):
        return adjoint_rotation_plans(plans_or_basis)
    return tuple(plans_or_basis)


def heisenberg_evolve(coeffs: CoeffVector, ug_params: np.ndarray,
                      plans=None, direction: str = "forward") -> CoeffVector:
    """Evolve a coefficient vector through the algebra block.

    ``forward`` produces the coefficients of ``U_g^dag O U_g`` for the block
    ``U_g = exp(-i t_{g-1} G_{g-1}) ... exp(-i t_0 G_0)`` (gate 0 acts first
    on the state), so plans are applied from the last gate down to the first.
    ``reverse`` undoes a forward evolution exactly.
    """
    params = np.asarray(ug_params, dtype=np.float64)
    plans = _resolve_plans(plans if plans is not None else coeffs.basis)
    if len(plans) != len(params):
        raise ValueError(f"{len(params)} parameters but {len(plans)} rotation plans")
    if direction not in ("forward", "reverse"):
        raise ValueError(f"unknown direction {direction!r}")
    values = coeffs.values.copy()
    if direction == "forward":
        for m in range(len(plans) - 1, -1, -1):
            plans[m].apply(values, params[m])
    else:
        for m in range(len(plans)):
            plans[m].apply(values, -params[m])
    return CoeffVector(coeffs.basis, values)


def gsim_cost(evolved: VectorLike, measured: VectorLike) -> float:
    """Inner product of evolved coefficients with measured expectations."""
    a = _values(evolved)
    b = _values(measured)
    if isinstance(evolved, (CoeffVector, ExpectationVector)) and \
            isinstance(measured, (CoeffVector, ExpectationVector)):
        if evolved.basis is not measured.basis and evolved.basis != measured.basis:
            raise ValueError("coefficients and measurements use different bases")
    if a.shape != b.shape:
        raise ValueError("vector length mismatch")
    return float(a @ b)


def gsim_gradient(coeffs: CoeffVector, ug_params: np.ndarray,
                  plans=None, measured: VectorLike = None) -> np.ndarray:
    """Exact gradient of :func:`gsim_cost` w.r.t. every block parameter.

    One forward pass stores each rotation's input vector; the backward pass
    transposes the rotations onto the measurement vector, so the whole
    gradient costs two sweeps regardless of the parameter count.
    """
    params = np.asarray(ug_params, dtype=np.float64)
    plans = _resolve_plans(plans if plans is not None else coeffs.basis)
    if len(plans) != len(params):
        raise ValueError(f"{len(params)} parameters but {len(plans)} rotation plans")
    g = len(plans)
    meas = _values(measured)

    inputs: List[np.ndarray] = [None] * g
    v = coeffs.values.copy()
    for m in range(g - 1, -1, -1):
        inputs[m] = v.copy()
        plans[m].apply(v, params[m])

    grads = np.zeros(g)
    w = meas.copy()
    for m in range(g):
        grads[m] = w @ plans[m].apply_derivative(inputs[m], params[m])
        plans[m].apply(w, -params[m])  # orthogonal: transpose = inverse
    return grads


def measure_dla_expectations(state: StateVector, basis: DlaBasis,
                             meter=None, shots: Optional[int] = None,
                             seed: Optional[int] = None) -> ExpectationVector:
    """Expectation of every basis element on a state; dim(g) circuit charges.

    Exact by default; with ``shots`` each element is estimated from its own
    seeded +/-1 outcome draws.
    """
    if basis.n_qubits != state.n_qubits:
        raise ValueError("basis and state qubit counts differ")
    if meter is not None:
        meter.charge(basis.dim)
    amps = state.amplitudes[None, :]
    values = np.empty(basis.dim)
    if shots is None:
        for m, elem in enumerate(basis):
            pa = backend._pauli_apply(amps, elem)
            values[m] = np.vdot(amps[0], pa[0]).real
    else:
        rng = np.random.default_rng(seed)
        for m, elem in enumerate(basis):
            if elem.is_identity:
                values[m] = 1.0
                continue
            pa = backend._pauli_apply(amps, elem)
            mean = np.vdot(amps[0], pa[0]).real
            p_plus = min(1.0, max(0.0, 0.5 * (1.0 + mean)))
            values[m] = 2.0 * rng.binomial(shots, p_plus) / shots - 1.0
    return ExpectationVector(basis, values)


def measure_dla_expectations_batch(amps: np.ndarray, basis: DlaBasis,
                                   meter=None) -> np.ndarray:
    """Exact (batch, dim(g)) expectation table for a batch of states."""
    if meter is not None:
        meter.charge(basis.dim * amps.shape[0])
    out = np.empty((amps.shape[0], basis.dim))
    conj = amps.conj()
    for m, elem in enumerate(basis):
        pa = backend._pauli_apply(amps, elem)
        out[:, m] = np.einsum("bi,bi->b", conj, pa).real
    return out


def analytic_initial_expectations(basis: DlaBasis,
                                  hadamard_prelayer: bool) -> ExpectationVector:
    """Basis expectations of ``|0...0>`` (or ``H^n |0...0>``) in closed form.

    ``<0|P|0> = 1`` iff P is built from I and Z only; after a Hadamard wall
    the same holds with X in place of Z.  No circuit charges.
    """
    values = np.zeros(basis.dim)
    for m, elem in enumerate(basis):
        if hadamard_prelayer:
            diagonal = elem.z == 0  # only I/X sites survive conjugation
        else:
            diagonal = elem.x == 0
        if diagonal:
            values[m] = 1.0
    return ExpectationVector(basis, values)


def g_purity(target, basis: DlaBasis) -> float:
    """Squared Hilbert-Schmidt overlap of an operator with the algebra span.

    ``sum_i |Tr[B_i^dag O]|^2`` over the Schmidt-orthonormal basis.  For an
    Observable this is ``2^n * sum of squared in-basis coefficients``; for a
    pure state (density operator ``|psi><psi|``) it is ``sum_m <G_m>^2 / 2^n``,
    which never exceeds 1.
    """
    if isinstance(target, StateVector):
        if target.n_qubits != basis.n_qubits:
            raise ValueError("state and basis qubit counts differ")
        o = measure_dla_expectations(target, basis).values
        return float(np.sum(o * o) / 2 ** basis.n_qubits)
    if target.n_qubits != basis.n_qubits:
        raise ValueError("observable and basis qubit counts differ")
    total = 0.0
    for pauli, coeff in target.terms.items():
        if pauli.key() in basis.index:
            total += coeff * coeff
    return float(total * 2 ** basis.n_qubits)
