"""Exact n-qubit Pauli-string algebra in the binary symplectic representation.

A Pauli string is stored as two packed bit words (one X bit and one Z bit per
qubit) plus an overall phase tracked as a power of i.  Products and
commutators then reduce to XOR/AND/popcount on machine words instead of
2^n-dimensional matrix algebra.  A dense-matrix builder is provided as a test
oracle for small qubit counts.

Conventions
-----------
* Qubit ``q`` occupies bit ``q`` of the packed words (bit 0 = qubit 0).
* The single-qubit operator for bits ``(x, z)`` is ``i**(x*z) * X**x * Z**z``,
  i.e. ``(0,0) -> I``, ``(1,0) -> X``, ``(0,1) -> Z``, ``(1,1) -> Y``.
* A full string is ``i**phase_power`` times the tensor product of those
  single-qubit operators; a string with ``phase_power == 0`` is Hermitian and
  squares to the identity.
* In text form qubit 0 is the leftmost character, e.g. ``"XXIIYZ"``.
"""

from __future__ import annotations

from typing import Iterable, Optional, Tuple

import numpy as np

__all__ = [
    "PauliString",
    "QubitCountMismatch",
    "OracleBoundExceeded",
    "multiply",
    "commutes",
    "commutator",
    "to_dense",
]

_LETTER_TO_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_TO_LETTER = {v: k for k, v in _LETTER_TO_BITS.items()}

_SINGLE_QUBIT_DENSE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

DENSE_ORACLE_BOUND = 10


class QubitCountMismatch(ValueError):
    """Raised when two Pauli strings act on different qubit counts."""


class OracleBoundExceeded(ValueError):
    """Raised when a dense-matrix oracle is requested beyond its qubit bound."""


class PauliString:
    """An n-qubit Pauli operator ``i**phase_power * P_0 (x) ... (x) P_{n-1}``.

    Parameters
    ----------
    n_qubits : int
        Number of qubits, at least 1.
    x : int
        Packed X bits, bit ``q`` set iff qubit ``q`` carries an X component.
    z : int
        Packed Z bits, analogous.
    phase_power : int
        Overall factor ``i**phase_power``; stored mod 4.
    """

    __slots__ = ("n_qubits", "x", "z", "phase_power")

    def __init__(self, n_qubits: int, x: int = 0, z: int = 0, phase_power: int = 0):
        if n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {n_qubits}")
        mask = (1 << n_qubits) - 1
        if x & ~mask or z & ~mask:
            raise ValueError("bit word has bits set beyond n_qubits")
        self.n_qubits = n_qubits
        self.x = x
        self.z = z
        self.phase_power = phase_power & 3

    # -- constructors -----------------------------------------------------

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits)

    @classmethod
    def from_text(cls, text: str) -> "PauliString":
        """Parse a string over {I,X,Y,Z}; qubit 0 is the leftmost character."""
        if not text:
            raise ValueError("empty Pauli text")
        x = z = 0
        for q, letter in enumerate(text):
            try:
                xb, zb = _LETTER_TO_BITS[letter]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {letter!r} in {text!r}") from None
            x |= xb << q
            z |= zb << q
        return cls(len(text), x, z)

    @classmethod
    def from_bits(cls, x_bits: Iterable[int], z_bits: Iterable[int],
                  phase_power: int = 0) -> "PauliString":
        xs = list(x_bits)
        zs = list(z_bits)
        if len(xs) != len(zs):
            raise ValueError("x_bits and z_bits must have equal length")
        x = z = 0
        for q, (xb, zb) in enumerate(zip(xs, zs)):
            x |= (int(xb) & 1) << q
            z |= (int(zb) & 1) << q
        return cls(len(xs), x, z, phase_power)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> "PauliString":
        """A single-site Pauli (letter in {X,Y,Z}) on an n-qubit register."""
        if not 0 <= qubit < n_qubits:
            raise ValueError(f"qubit {qubit} out of range for {n_qubits} qubits")
        xb, zb = _LETTER_TO_BITS[letter]
        return cls(n_qubits, xb << qubit, zb << qubit)

    # -- accessors ---------------------------------------------------------

    @property
    def x_bits(self) -> Tuple[int, ...]:
        return tuple((self.x >> q) & 1 for q in range(self.n_qubits))

    @property
    def z_bits(self) -> Tuple[int, ...]:
        return tuple((self.z >> q) & 1 for q in range(self.n_qubits))

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0 and self.phase_power == 0

    @property
    def weight(self) -> int:
        """Number of non-identity sites."""
        return (self.x | self.z).bit_count()

    def canonical(self) -> "PauliString":
        """The phase-free (Hermitian) representative with the same bits."""
        if self.phase_power == 0:
            return self
        return PauliString(self.n_qubits, self.x, self.z)

    def key(self) -> Tuple[int, int]:
        """Hashable (x, z) key identifying the phase-free string."""
        return (self.x, self.z)

    def phase(self) -> complex:
        return 1j ** self.phase_power

    # -- algebra -----------------------------------------------------------

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (self.n_qubits == other.n_qubits and self.x == other.x
                and self.z == other.z and self.phase_power == other.phase_power)

    def __hash__(self) -> int:
        return hash((self.n_qubits, self.x, self.z, self.phase_power))

    def __str__(self) -> str:
        letters = "".join(
            _BITS_TO_LETTER[((self.x >> q) & 1, (self.z >> q) & 1)]
            for q in range(self.n_qubits)
        )
        return letters

    def __repr__(self) -> str:
        prefix = {0: "", 1: "i*", 2: "-", 3: "-i*"}[self.phase_power]
        return f"PauliString({prefix}{self})"


def _check_same_register(a: PauliString, b: PauliString) -> None:
    if a.n_qubits != b.n_qubits:
        raise QubitCountMismatch(
            f"qubit counts differ: {a.n_qubits} vs {b.n_qubits}")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Product ``a * b`` with exact phase accumulation.

    Per qubit, writing each factor as ``i**(x z) X**x Z**z`` and commuting the
    inner ``Z**z_a X**x_b`` pair costs ``(-1)**(z_a x_b)``; the result is
    re-expressed in canonical form, which removes its own ``i**(x z)`` factor.
    """
    _check_same_register(a, b)
    x = a.x ^ b.x
    z = a.z ^ b.z
    phase = (
        a.phase_power
        + b.phase_power
        + (a.x & a.z).bit_count()
        + (b.x & b.z).bit_count()
        + 2 * (a.z & b.x).bit_count()
        - (x & z).bit_count()
    )
    return PauliString(a.n_qubits, x, z, phase & 3)


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff ``ab == ba``, from the parity of the symplectic inner product."""
    _check_same_register(a, b)
    parity = ((a.x & b.z).bit_count() + (a.z & b.x).bit_count()) & 1
    return parity == 0


def commutator(a: PauliString, b: PauliString) -> Optional[Tuple[complex, PauliString]]:
    """``[a, b]`` as ``(coefficient, phase-free string)``, or None if it vanishes.

    For anticommuting strings ``[a, b] = 2 a b``; the scalar absorbs the
    product's phase power.
    """
    if commutes(a, b):
        return None
    prod = multiply(a, b)
    coeff = 2.0 * (1j ** prod.phase_power)
    return coeff, prod.canonical()


def to_dense(a: PauliString, max_qubits: int = DENSE_ORACLE_BOUND) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix of the operator; test oracle for small n.

    Qubit 0 is the first (most significant) Kronecker factor, matching the
    text form and the statevector amplitude-index convention.
    """
    if a.n_qubits > max_qubits:
        raise OracleBoundExceeded(
            f"dense oracle limited to {max_qubits} qubits, got {a.n_qubits}")
    out = np.array([[1.0 + 0.0j]])
    for letter in str(a):
        out = np.kron(out, _SINGLE_QUBIT_DENSE[letter])
    return (1j ** a.phase_power) * out
