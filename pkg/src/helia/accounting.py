"""Quantum-circuit call accounting.

A QPU call is one unique circuit evaluation; by default shot multiplicity is
excluded from the count.  When a meter is constructed with ``shots``, each
circuit instead charges ``shots`` units.
"""

from __future__ import annotations

from typing import Optional

__all__ = ["QpuMeter"]


class QpuMeter:
    """Monotone counter of quantum-circuit evaluations."""

    __slots__ = ("calls", "shots_per_circuit")

    def __init__(self, shots_per_circuit: Optional[int] = None):
        self.calls = 0
        self.shots_per_circuit = shots_per_circuit

    def charge(self, circuits: int) -> None:
        if circuits < 0:
            raise ValueError("cannot charge a negative circuit count")
        factor = self.shots_per_circuit if self.shots_per_circuit else 1
        self.calls += circuits * factor
