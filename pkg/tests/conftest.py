"""Shared test helpers: random generators and dense-matrix oracles."""

import numpy as np

from helia.pauli import PauliString, to_dense


def random_pauli(rng, n_qubits, with_phase=False):
    """Uniformly random PauliString on n qubits (identity included)."""
    x = int(rng.integers(0, 1 << n_qubits))
    z = int(rng.integers(0, 1 << n_qubits))
    phase = int(rng.integers(0, 4)) if with_phase else 0
    return PauliString(n_qubits, x, z, phase)


def random_nonidentity_pauli(rng, n_qubits, with_phase=False):
    while True:
        p = random_pauli(rng, n_qubits, with_phase)
        if p.x or p.z:
            return p


def dense_observable(obs):
    """Dense matrix of an Observable, for oracle comparisons at small n."""
    dim = 2 ** obs.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for pauli, coeff in obs.terms.items():
        out += coeff * to_dense(pauli)
    return out


def random_state(rng, n_qubits):
    """Haar-ish random normalized statevector as a plain array."""
    dim = 2 ** n_qubits
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _embed_1q(u, n, q):
    out = np.array([[1.0 + 0.0j]])
    for pos in range(n):
        out = np.kron(out, u if pos == q else np.eye(2))
    return out


def dense_gate_matrix(gate, angle, n):
    """Dense unitary of one GateOp; oracle for the statevector kernels."""
    from scipy.linalg import expm

    if gate.kind == "roty":
        y = np.array([[0, -1j], [1j, 0]])
        return _embed_1q(expm(-0.5j * angle * y), n, gate.targets[0])
    if gate.kind == "rotz":
        z = np.diag([1.0, -1.0]).astype(complex)
        return _embed_1q(expm(-0.5j * angle * z), n, gate.targets[0])
    if gate.kind == "h":
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        return _embed_1q(h.astype(complex), n, gate.targets[0])
    if gate.kind == "cnot":
        c, t = gate.targets
        dim = 2 ** n
        mat = np.zeros((dim, dim), dtype=complex)
        for b in range(dim):
            if (b >> (n - 1 - c)) & 1:
                mat[b ^ (1 << (n - 1 - t)), b] = 1.0
            else:
                mat[b, b] = 1.0
        return mat
    if gate.kind == "prot":
        from scipy.linalg import expm

        return expm(-1j * angle * to_dense(gate.generator))
    raise ValueError(gate.kind)


def dense_circuit_matrix(gates, params, n):
    dim = 2 ** n
    mat = np.eye(dim, dtype=complex)
    for gate in gates:
        angle = None if gate.param_slot is None else params[gate.param_slot]
        mat = dense_gate_matrix(gate, angle, n) @ mat
    return mat


def random_circuit(rng, n, n_gates, with_prot=True, max_weight=3):
    """Random gate list plus a matching parameter vector."""
    from helia import backend as bk

    gates = []
    params = []
    kinds = ["roty", "rotz", "h", "cnot"] + (["prot"] if with_prot else [])
    for _ in range(n_gates):
        kind = kinds[rng.integers(len(kinds))]
        if kind == "roty":
            gates.append(bk.rot_y(int(rng.integers(n)), len(params)))
            params.append(float(rng.uniform(-np.pi, np.pi)))
        elif kind == "rotz":
            gates.append(bk.rot_z(int(rng.integers(n)), len(params)))
            params.append(float(rng.uniform(-np.pi, np.pi)))
        elif kind == "h":
            gates.append(bk.hadamard(int(rng.integers(n))))
        elif kind == "cnot":
            c, t = rng.choice(n, size=2, replace=False)
            gates.append(bk.cnot(int(c), int(t)))
        else:
            p = random_nonidentity_pauli(rng, n)
            while p.weight > max_weight:
                p = random_nonidentity_pauli(rng, n)
            gates.append(bk.pauli_rotation(p, len(params)))
            params.append(float(rng.uniform(-np.pi, np.pi)))
    return gates, np.array(params)


def random_observable(rng, n, n_terms):
    from helia.models import Observable

    obs = Observable(n)
    while len(obs.terms) < n_terms:
        obs.add_term(random_nonidentity_pauli(rng, n), float(rng.standard_normal()))
    return obs
