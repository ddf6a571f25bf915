"""Dynamical Lie algebra closure, structure constants and adjoint rotation plans.

The closure of a Pauli generator set is computed over phase-free strings: two
distinct Pauli strings are Hilbert-Schmidt orthogonal, so linear independence
is set membership and no Gram-Schmidt step is needed.  Commutation data is
expressed against the Schmidt-orthonormal basis ``{i G_a / sqrt(2^n)}``.

For a basis element ``P`` and any basis element ``Q`` anticommuting with it,

    exp(i t P) Q exp(-i t P) = cos(2t) Q + i sin(2t) P Q,

and ``i P Q`` is again a (signed) phase-free string, so conjugating by the
gate ``exp(-i t P)`` acts on the coefficient vector as a set of disjoint
planar (Givens) rotations by angle ``2t``.  That identity is validated against
the dense-matrix oracle in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .pauli import PauliString, QubitCountMismatch, commutator, commutes, multiply

__all__ = [
    "ClosureExceeded",
    "ClosureViolation",
    "DlaBasis",
    "StructureTensor",
    "RotationPlan",
    "close_algebra",
    "structure_constants",
    "adjoint_rotation_plan",
    "adjoint_rotation_plans",
    "export_text",
    "parse_text",
]


class ClosureExceeded(RuntimeError):
    """Closure grew past the allowed dimension (exponential-DLA generator set)."""

    def __init__(self, max_dim: int):
        super().__init__(f"Lie closure exceeded max_dim = {max_dim}")
        self.max_dim = max_dim


class ClosureViolation(RuntimeError):
    """A commutator of basis elements fell outside the basis."""


class DlaBasis:
    """Ordered basis of phase-free Pauli strings, closed under commutation.

    The stored elements are the unnormalized (eigenvalue +/-1) strings; the
    Schmidt normalization ``1/sqrt(2^n)`` that makes ``Tr[G^dag G] = 1`` is
    carried in :attr:`normalization` and applied analytically where formulas
    need it (structure constants, purity).
    """

    __slots__ = ("elements", "n_qubits", "index", "normalization", "_plans")

    def __init__(self, elements: Sequence[PauliString]):
        if not elements:
            raise ValueError("a DLA basis needs at least one element")
        n = elements[0].n_qubits
        index: Dict[Tuple[int, int], int] = {}
        elems: List[PauliString] = []
        for e in elements:
            if e.n_qubits != n:
                raise QubitCountMismatch("basis elements act on different registers")
            c = e.canonical()
            if c.key() in index:
                raise ValueError(f"duplicate basis element {c}")
            index[c.key()] = len(elems)
            elems.append(c)
        self.elements: Tuple[PauliString, ...] = tuple(elems)
        self.n_qubits = n
        self.index = index
        self.normalization = 2.0 ** (-n / 2.0)
        self._plans: Optional[Tuple["RotationPlan", ...]] = None

    @property
    def dim(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i: int) -> PauliString:
        return self.elements[i]

    def __contains__(self, p: PauliString) -> bool:
        return p.key() in self.index

    def position(self, p: PauliString) -> int:
        try:
            return self.index[p.key()]
        except KeyError:
            raise KeyError(f"{p} is not a basis element") from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, DlaBasis):
            return NotImplemented
        return self.elements == other.elements

    def __hash__(self):
        return hash(self.elements)

    def __repr__(self) -> str:
        return f"DlaBasis(n_qubits={self.n_qubits}, dim={self.dim})"


def close_algebra(generators: Sequence[PauliString],
                  max_dim: Optional[int] = None) -> DlaBasis:
    """Lie closure of a Pauli generator set under nested commutators.

    Elements are accumulated in deterministic insertion order, generators
    first.  ``max_dim`` defaults to ``n_qubits ** 2``; a closure that would
    grow past it raises :class:`ClosureExceeded`.
    """
    if not generators:
        raise ValueError("generator set must be nonempty")
    n = generators[0].n_qubits
    if max_dim is None:
        max_dim = n * n
    elems: List[PauliString] = []
    seen: Dict[Tuple[int, int], int] = {}
    for g in generators:
        if g.n_qubits != n:
            raise QubitCountMismatch("generators act on different registers")
        c = g.canonical()
        if c.key() not in seen:
            seen[c.key()] = len(elems)
            elems.append(c)
    if max_dim < len(elems):
        raise ValueError(
            f"max_dim = {max_dim} is below the {len(elems)} distinct generators")

    # Every unordered pair is commutated exactly once: element i is paired
    # with all earlier elements; appended elements reach the frontier later.
    i = 1
    while i < len(elems):
        a = elems[i]
        for j in range(i):
            res = commutator(a, elems[j])
            if res is None:
                continue
            c = res[1]
            if c.key() in seen:
                continue
            if len(elems) >= max_dim:
                raise ClosureExceeded(max_dim)
            seen[c.key()] = len(elems)
            elems.append(c)
        i += 1
    return DlaBasis(elems)


@dataclass(frozen=True)
class StructureTensor:
    """Sparse commutation table ``[i G_a^, i G_b^] = f * i G_c^`` over a basis.

    ``entries`` maps an index pair ``(a, b)`` to ``(c, f)``; both orders are
    stored, with ``f`` antisymmetric.  For a Pauli basis each pair maps to at
    most one target element.
    """

    basis: DlaBasis
    entries: Dict[Tuple[int, int], Tuple[int, float]]

    def entry(self, a: int, b: int) -> Optional[Tuple[int, float]]:
        return self.entries.get((a, b))

    def __len__(self) -> int:
        return len(self.entries)


def structure_constants(basis: DlaBasis) -> StructureTensor:
    """Structure constants of a closed Pauli basis in Schmidt normalization.

    With normalized elements ``G^ = G / sqrt(2^n)`` and ``[G_a, G_b] =
    kappa G_c`` (kappa purely imaginary), the constant is ``f = i kappa /
    sqrt(2^n)``, which is real.
    """
    entries: Dict[Tuple[int, int], Tuple[int, float]] = {}
    root_dim = 2.0 ** (basis.n_qubits / 2.0)
    for a in range(basis.dim):
        for b in range(a + 1, basis.dim):
            res = commutator(basis[a], basis[b])
            if res is None:
                continue
            kappa, c = res
            try:
                g = basis.position(c)
            except KeyError:
                raise ClosureViolation(
                    f"[{basis[a]}, {basis[b]}] ~ {c} is outside the basis") from None
            f = (1j * kappa / root_dim).real
            entries[(a, b)] = (g, f)
            entries[(b, a)] = (g, -f)
    return StructureTensor(basis, entries)


@dataclass(frozen=True)
class RotationPlan:
    """Planar-rotation plan for conjugation by ``exp(-i t G_m)``.

    Each pair ``(a, b, sign)`` satisfies ``i G_m G_a = sign * G_b`` and the
    Heisenberg map sends the coefficient pair ``(c_a, c_b)`` through a Givens
    rotation by ``2 t``:

        c_a' = cos(2t) c_a - sign * sin(2t) c_b
        c_b' = cos(2t) c_b + sign * sin(2t) c_a

    Elements commuting with ``G_m`` are fixed points and do not appear.
    """

    generator_index: int
    pairs: Tuple[Tuple[int, int, int], ...]
    idx_a: np.ndarray = field(repr=False, compare=False, default=None)
    idx_b: np.ndarray = field(repr=False, compare=False, default=None)
    signs: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        a = np.fromiter((p[0] for p in self.pairs), dtype=np.intp, count=len(self.pairs))
        b = np.fromiter((p[1] for p in self.pairs), dtype=np.intp, count=len(self.pairs))
        s = np.fromiter((p[2] for p in self.pairs), dtype=np.float64, count=len(self.pairs))
        object.__setattr__(self, "idx_a", a)
        object.__setattr__(self, "idx_b", b)
        object.__setattr__(self, "signs", s)

    def apply(self, values: np.ndarray, angle: float) -> None:
        """In-place Givens rotations by ``2 * angle`` on a coefficient vector."""
        if not self.pairs:
            return
        c = np.cos(2.0 * angle)
        s = np.sin(2.0 * angle) * self.signs
        va = values[self.idx_a]
        vb = values[self.idx_b]
        values[self.idx_a] = c * va - s * vb
        values[self.idx_b] = c * vb + s * va

    def apply_derivative(self, values: np.ndarray, angle: float) -> np.ndarray:
        """Derivative of :meth:`apply` w.r.t. ``angle`` (zero off the pairs)."""
        out = np.zeros_like(values)
        if not self.pairs:
            return out
        dc = -2.0 * np.sin(2.0 * angle)
        ds = 2.0 * np.cos(2.0 * angle) * self.signs
        va = values[self.idx_a]
        vb = values[self.idx_b]
        out[self.idx_a] = dc * va - ds * vb
        out[self.idx_b] = dc * vb + ds * va
        return out


def adjoint_rotation_plan(basis: DlaBasis, generator_index: int) -> RotationPlan:
    """Rotation plan for the basis element at ``generator_index``.

    Raises :class:`ClosureViolation` if some anticommuting partner is missing
    from the basis (possible only if the basis is not actually closed).
    """
    if not 0 <= generator_index < basis.dim:
        raise IndexError(f"generator index {generator_index} out of range")
    gm = basis[generator_index]
    pairs: List[Tuple[int, int, int]] = []
    for a, ga in enumerate(basis.elements):
        if commutes(gm, ga):
            continue
        prod = multiply(gm, ga)
        try:
            b = basis.position(prod)
        except KeyError:
            raise ClosureViolation(
                f"partner of {ga} under {gm} is outside the basis") from None
        # i * G_m * G_a = i^(p+1) * G_b must be Hermitian: p is odd.
        p = (prod.phase_power + 1) & 3
        sign = 1 if p == 0 else -1
        if a < b:
            pairs.append((a, b, sign))
    return RotationPlan(generator_index, tuple(pairs))


def adjoint_rotation_plans(basis: DlaBasis) -> Tuple[RotationPlan, ...]:
    """Plans for every basis element, cached on the basis."""
    if basis._plans is None:
        basis._plans = tuple(
            adjoint_rotation_plan(basis, m) for m in range(basis.dim))
    return basis._plans


def export_text(basis: DlaBasis) -> str:
    """Text export: header ``<n_qubits> <dim>`` then one Pauli string per line."""
    lines = [f"{basis.n_qubits} {basis.dim}"]
    lines.extend(str(e) for e in basis.elements)
    return "\n".join(lines) + "\n"


def parse_text(text: str) -> DlaBasis:
    """Inverse of :func:`export_text`."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty DLA export")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"bad header line {lines[0]!r}")
    n, dim = int(head[0]), int(head[1])
    elems = [PauliString.from_text(ln) for ln in lines[1:]]
    if len(elems) != dim:
        raise ValueError(f"header claims {dim} elements, found {len(elems)}")
    basis = DlaBasis(elems)
    if basis.n_qubits != n:
        raise ValueError("header qubit count does not match elements")
    return basis
