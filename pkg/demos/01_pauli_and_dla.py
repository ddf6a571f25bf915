"""Pauli strings in symplectic form, Lie closure and structure constants.

Walks through the algebra layer: products and commutators computed on packed
bit words, the closure of coupling generators, and the commutation table in
the Schmidt-normalized basis.
"""

import numpy as np

from helia.dla import close_algebra, export_text, structure_constants
from helia.models import tfim_generators, xy_generators
from helia.pauli import PauliString, commutator, commutes, multiply

# Products carry their phase as a power of i: XY = iZ.
x, y = PauliString.from_text("X"), PauliString.from_text("Y")
prod = multiply(x, y)
print(f"X * Y = i^{prod.phase_power} * {prod}")

a = PauliString.from_text("XXIIYZ")
b = PauliString.from_text("ZIIIYX")
print(f"{a} and {b} commute? {commutes(a, b)}")

b = PauliString.from_text("ZIIIIZ")
print(f"\n{a} and {b} commute? {commutes(a, b)}")
coeff, c = commutator(a, b)
print(f"[{a}, {b}] = {coeff} * {c}")

# XY-chain generators close at n^2 - n; the transverse-field Ising chain at
# 2n^2 - n.  Closure size is what makes the classical block affordable.
for n in (4, 6, 8):
    xy = close_algebra(xy_generators(n), max_dim=n * n)
    tfim = close_algebra(tfim_generators(n), max_dim=2 * n * n)
    print(f"n={n}: dim(xy) = {xy.dim} (= {n * n - n}), "
          f"dim(tfim) = {tfim.dim} (= {2 * n * n - n})")

basis = close_algebra(xy_generators(4), max_dim=16)
tensor = structure_constants(basis)
print(f"\nXY basis at n=4 has {len(tensor) // 2} commuting pairs with nonzero "
      "structure constants; a few entries:")
for (alpha, beta), (gamma, f) in list(sorted(tensor.entries.items()))[:4]:
    print(f"  [i{basis[alpha]}^, i{basis[beta]}^] = {f:+.4f} * i{basis[gamma]}^")

print("\nExport format (header then one string per line):")
print("\n".join(export_text(basis).splitlines()[:5]), "...")
