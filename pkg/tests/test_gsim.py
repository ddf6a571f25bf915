"""Classical algebra-block simulation against statevector and dense oracles."""

import numpy as np
import pytest
from scipy.linalg import expm

from helia import backend as bk
from helia import gsim
from helia.dla import DlaBasis, adjoint_rotation_plan, adjoint_rotation_plans, close_algebra
from helia.models import Observable, build_helia, tfim_generators, xy_generators
from helia.pauli import PauliString, to_dense

from conftest import random_state


def xy_basis(n):
    return close_algebra(xy_generators(n))


def tfim_basis(n):
    return close_algebra(tfim_generators(n), max_dim=2 * n * n)


def reconstruct_dense(basis, values):
    out = np.zeros((2 ** basis.n_qubits,) * 2, dtype=complex)
    for c, g in zip(values, basis.elements):
        out += c * to_dense(g)
    return out


def dense_ug(basis, params):
    """Dense unitary of the algebra block (gate for element 0 acts first)."""
    dim = 2 ** basis.n_qubits
    mat = np.eye(dim, dtype=complex)
    for elem, theta in zip(basis.elements, params):
        mat = expm(-1j * theta * to_dense(elem)) @ mat
    return mat


class TestProjection:
    def test_single_term(self):
        basis = xy_basis(4)
        obs = Observable(4, [(basis[0], 0.5)])
        coeffs = gsim.project_observable(obs, basis)
        assert coeffs.values[0] == 0.5
        assert np.count_nonzero(coeffs.values) == 1

    def test_term_outside(self):
        basis = xy_basis(4)
        obs = Observable(4, [(PauliString.from_text("ZIII"), 1.0)])
        with pytest.raises(gsim.TermOutsideDla) as err:
            gsim.project_observable(obs, basis)
        assert str(err.value.terms[0]) == "ZIII"

    def test_round_trip(self):
        basis = xy_basis(4)
        rng = np.random.default_rng(3)
        picks = rng.choice(basis.dim, size=6, replace=False)
        obs = Observable(4, [(basis[int(i)], float(rng.standard_normal())) for i in picks])
        coeffs = gsim.project_observable(obs, basis)
        rebuilt = Observable(4, [(basis[m], c) for m, c in enumerate(coeffs.values) if c])
        assert rebuilt == obs


class TestHeisenbergEvolve:
    def test_zero_params_identity(self):
        basis = xy_basis(4)
        rng = np.random.default_rng(0)
        coeffs = gsim.CoeffVector(basis, rng.standard_normal(basis.dim))
        out = gsim.heisenberg_evolve(coeffs, np.zeros(basis.dim))
        np.testing.assert_array_equal(out.values, coeffs.values)

    def test_forward_then_reverse(self):
        basis = xy_basis(4)
        rng = np.random.default_rng(1)
        coeffs = gsim.CoeffVector(basis, rng.standard_normal(basis.dim))
        params = rng.uniform(-2, 2, size=basis.dim)
        fwd = gsim.heisenberg_evolve(coeffs, params)
        back = gsim.heisenberg_evolve(fwd, params, direction="reverse")
        np.testing.assert_allclose(back.values, coeffs.values, atol=1e-12)

    def test_single_param_round_trip(self):
        basis = DlaBasis([PauliString.from_text(t) for t in "XYZ"])
        plan = [adjoint_rotation_plan(basis, 0)]
        coeffs = gsim.CoeffVector(basis, np.array([0.0, 0.3, 0.9]))
        theta = 0.77
        fwd = gsim.heisenberg_evolve(coeffs, [theta], plan)
        back = gsim.heisenberg_evolve(fwd, [-theta], plan)
        np.testing.assert_allclose(back.values, coeffs.values, atol=1e-12)

    def test_matches_dense_conjugation(self):
        basis = xy_basis(4)
        rng = np.random.default_rng(7)
        coeffs = gsim.CoeffVector(basis, rng.standard_normal(basis.dim))
        params = rng.uniform(-np.pi, np.pi, size=basis.dim)
        evolved = gsim.heisenberg_evolve(coeffs, params)
        ug = dense_ug(basis, params)
        want = ug.conj().T @ reconstruct_dense(basis, coeffs.values) @ ug
        np.testing.assert_allclose(reconstruct_dense(basis, evolved.values), want, atol=1e-10)

    def test_norm_preserved(self):
        basis = tfim_basis(4)
        rng = np.random.default_rng(9)
        coeffs = gsim.CoeffVector(basis, rng.standard_normal(basis.dim))
        evolved = gsim.heisenberg_evolve(coeffs, rng.uniform(-3, 3, size=basis.dim))
        assert np.linalg.norm(evolved.values) == pytest.approx(
            np.linalg.norm(coeffs.values), abs=1e-12)

    def test_plan_count_mismatch(self):
        basis = xy_basis(4)
        coeffs = gsim.CoeffVector(basis, np.zeros(basis.dim))
        with pytest.raises(ValueError):
            gsim.heisenberg_evolve(coeffs, np.zeros(3), adjoint_rotation_plans(basis))


class TestCost:
    def test_zero_measured(self):
        basis = xy_basis(4)
        rng = np.random.default_rng(2)
        coeffs = gsim.CoeffVector(basis, rng.standard_normal(basis.dim))
        measured = gsim.ExpectationVector(basis, np.zeros(basis.dim))
        assert gsim.gsim_cost(coeffs, measured) == 0.0

    def test_zero_params_reproduces_raw_expectation(self):
        n = 4
        basis = tfim_basis(n)
        rng = np.random.default_rng(5)
        amps = random_state(rng, n)
        state = bk.StateVector(n, amps)
        from helia.models import tfim_hamiltonian

        ham = tfim_hamiltonian(n, seed=8)
        coeffs = gsim.project_observable(ham, basis)
        measured = gsim.measure_dla_expectations(state, basis)
        assert gsim.gsim_cost(coeffs, measured) == pytest.approx(
            bk.expectation(state, ham), abs=1e-12)

    def test_hybrid_equivalence_small(self):
        # g-sim cost == statevector expectation of the conjugated Hamiltonian
        # on the pre-block state, for the full layered ansatz with prelayer.
        from helia.models import xy_hamiltonian

        n = 4
        basis = xy_basis(n)
        ham = xy_hamiltonian(n, seed=3)
        ansatz = build_helia(n, 1, basis, hadamard_prelayer=True)
        rng = np.random.default_rng(13)
        coeffs = gsim.project_observable(ham, basis)
        for _ in range(10):
            params = rng.standard_normal(ansatz.param_count)
            theta, phi = ansatz.split_params(params)
            evolved = gsim.heisenberg_evolve(coeffs, phi)
            measured = gsim.measure_dla_expectations(ansatz.state_before_ug(params), basis)
            classical = gsim.gsim_cost(evolved, measured)
            full = bk.expectation(
                bk.run_circuit(ansatz.gates, params, bk.zero_state(n)), ham)
            assert classical == pytest.approx(full, abs=1e-10)


class TestGradient:
    def test_zero_measured_zero_gradient(self):
        basis = xy_basis(4)
        rng = np.random.default_rng(4)
        coeffs = gsim.CoeffVector(basis, rng.standard_normal(basis.dim))
        grads = gsim.gsim_gradient(coeffs, rng.standard_normal(basis.dim),
                                   measured=np.zeros(basis.dim))
        np.testing.assert_array_equal(grads, np.zeros(basis.dim))

    def test_su2_closed_form(self):
        # H = Z under a single X-rotation gate: cost(phi) = cos(2 phi) on |0>.
        basis = DlaBasis([PauliString.from_text(t) for t in "XYZ"])
        plans = [adjoint_rotation_plan(basis, 0)]
        coeffs = gsim.CoeffVector(basis, np.array([0.0, 0.0, 1.0]))
        measured = np.array([0.0, 0.0, 1.0])
        for phi in np.linspace(-1.2, 1.2, 7):
            cost = gsim.gsim_cost(
                gsim.heisenberg_evolve(coeffs, [phi], plans), measured)
            assert cost == pytest.approx(np.cos(2 * phi), abs=1e-12)
            grad = gsim.gsim_gradient(coeffs, [phi], plans, measured)
            assert grad[0] == pytest.approx(-2 * np.sin(2 * phi), abs=1e-12)

    def test_matches_finite_differences(self):
        n = 6
        basis = xy_basis(n)
        rng = np.random.default_rng(21)
        coeffs = gsim.CoeffVector(basis, rng.standard_normal(basis.dim))
        measured = rng.uniform(-1, 1, size=basis.dim)
        params = rng.standard_normal(basis.dim)
        grads = gsim.gsim_gradient(coeffs, params, measured=measured)
        h = 1e-5
        for m in rng.choice(basis.dim, size=12, replace=False):
            up, dn = params.copy(), params.copy()
            up[m] += h
            dn[m] -= h
            c_up = gsim.gsim_cost(gsim.heisenberg_evolve(coeffs, up), measured)
            c_dn = gsim.gsim_cost(gsim.heisenberg_evolve(coeffs, dn), measured)
            assert grads[m] == pytest.approx((c_up - c_dn) / (2 * h), abs=1e-6)

    def test_finite_difference_agreement_across_seeds(self):
        # All parameters, 20 independent instances at a smaller register.
        n = 4
        basis = xy_basis(n)
        h = 1e-5
        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            coeffs = gsim.CoeffVector(basis, rng.standard_normal(basis.dim))
            measured = rng.uniform(-1, 1, size=basis.dim)
            params = rng.standard_normal(basis.dim)
            grads = gsim.gsim_gradient(coeffs, params, measured=measured)
            for m in range(basis.dim):
                up, dn = params.copy(), params.copy()
                up[m] += h
                dn[m] -= h
                c_up = gsim.gsim_cost(gsim.heisenberg_evolve(coeffs, up), measured)
                c_dn = gsim.gsim_cost(gsim.heisenberg_evolve(coeffs, dn), measured)
                assert grads[m] == pytest.approx((c_up - c_dn) / (2 * h), abs=1e-6)


class TestMeasurement:
    def test_zero_state_xy_all_zero(self):
        basis = xy_basis(6)
        vec = gsim.measure_dla_expectations(bk.zero_state(6), basis)
        np.testing.assert_array_equal(vec.values, np.zeros(basis.dim))

    def test_zero_state_tfim_z_fields(self):
        n = 4
        basis = tfim_basis(n)
        vec = gsim.measure_dla_expectations(bk.zero_state(n), basis)
        for m, elem in enumerate(basis):
            if elem.x == 0:  # built from I and Z only
                assert vec.values[m] == 1.0
            else:
                assert vec.values[m] == pytest.approx(0.0, abs=1e-15)

    def test_random_state_per_term(self):
        n = 6
        basis = xy_basis(n)
        rng = np.random.default_rng(6)
        state = bk.StateVector(n, random_state(rng, n))
        vec = gsim.measure_dla_expectations(state, basis)
        for m in rng.choice(basis.dim, size=10, replace=False):
            obs = Observable(n, [(basis[int(m)], 1.0)])
            assert vec.values[m] == pytest.approx(bk.expectation(state, obs), abs=1e-12)

    def test_meter_charges_dim(self):
        from helia.accounting import QpuMeter

        basis = xy_basis(4)
        meter = QpuMeter()
        gsim.measure_dla_expectations(bk.zero_state(4), basis, meter=meter)
        assert meter.calls == basis.dim

    def test_analytic_initial_expectations(self):
        for n, prelayer in [(4, False), (4, True), (6, False), (6, True)]:
            basis = tfim_basis(n) if not prelayer else xy_basis(n)
            analytic = gsim.analytic_initial_expectations(basis, prelayer)
            state = bk.zero_state(n)
            if prelayer:
                for q in range(n):
                    state = bk.apply_gate(state, bk.hadamard(q))
            measured = gsim.measure_dla_expectations(state, basis)
            np.testing.assert_allclose(analytic.values, measured.values, atol=1e-12)

    def test_batch_matches_single(self):
        n = 4
        basis = xy_basis(n)
        rng = np.random.default_rng(8)
        states = np.stack([random_state(rng, n) for _ in range(3)])
        table = gsim.measure_dla_expectations_batch(states, basis)
        for b in range(3):
            single = gsim.measure_dla_expectations(bk.StateVector(n, states[b]), basis)
            np.testing.assert_allclose(table[b], single.values, atol=1e-12)

    def test_shot_sampling_seeded(self):
        n = 4
        basis = xy_basis(n)
        rng = np.random.default_rng(10)
        state = bk.StateVector(n, random_state(rng, n))
        a = gsim.measure_dla_expectations(state, basis, shots=500, seed=3)
        b = gsim.measure_dla_expectations(state, basis, shots=500, seed=3)
        np.testing.assert_array_equal(a.values, b.values)
        assert np.all(np.abs(a.values) <= 1.0)


class TestPurity:
    def test_normalized_basis_element_is_one(self):
        n = 4
        basis = xy_basis(n)
        elem = basis[5]
        obs = Observable(n, [(elem, 2.0 ** (-n / 2))])
        assert gsim.g_purity(obs, basis) == pytest.approx(1.0)

    def test_zero_state_vs_xy_is_zero(self):
        basis = xy_basis(6)
        assert gsim.g_purity(bk.zero_state(6), basis) == 0.0

    def test_observable_matches_dense_trace(self):
        from conftest import dense_observable, random_observable

        n = 4
        basis = xy_basis(n)
        rng = np.random.default_rng(11)
        obs = random_observable(rng, n, 8)
        dense = dense_observable(obs)
        want = 0.0
        for elem in basis:
            b = basis.normalization * to_dense(elem)
            want += abs(np.trace(b.conj().T @ dense)) ** 2
        assert gsim.g_purity(obs, basis) == pytest.approx(want, abs=1e-10)

    def test_state_purity_bounded_by_one(self):
        n = 4
        basis = tfim_basis(n)
        rng = np.random.default_rng(14)
        for _ in range(20):
            state = bk.StateVector(n, random_state(rng, n))
            p = gsim.g_purity(state, basis)
            assert 0.0 <= p <= 1.0 + 1e-12

    def test_state_matches_density_trace_oracle(self):
        n = 4
        basis = xy_basis(n)
        rng = np.random.default_rng(15)
        amps = random_state(rng, n)
        rho = np.outer(amps, amps.conj())
        want = 0.0
        for elem in basis:
            b = basis.normalization * to_dense(elem)
            want += abs(np.trace(b.conj().T @ rho)) ** 2
        got = gsim.g_purity(bk.StateVector(n, amps), basis)
        assert got == pytest.approx(want, abs=1e-10)
