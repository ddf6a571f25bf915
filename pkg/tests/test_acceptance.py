"""Acceptance suite: one test per criterion, at the stated tolerances.

Each test prints a PASS line on success (visible with ``pytest -v -s``); the
test name carries the criterion number.  Heavy suites run at the desk-scale
configurations pinned below; paper-scale budgets are reachable through the
JSON configs in configs/extended/.
"""

import json

import numpy as np
import pytest

from helia import backend as bk
from helia import bench, gsim, models, training
from helia.bench import ExperimentConfig
from helia.dla import adjoint_rotation_plans, close_algebra
from helia.models import build_helia, tfim_generators, xy_generators
from helia.pauli import PauliString


def announce(num, text):
    print(f"\n[acceptance] criterion {num}: PASS - {text}")


# -- criterion 1 -------------------------------------------------------------

def test_criterion_01_dla_dimensions():
    """XY closes at n^2-n and TFIM at 2n^2-n, exactly, for n in {4,6,8}."""
    for n in (4, 6, 8):
        xy = close_algebra(xy_generators(n), max_dim=n * n)
        assert xy.dim == n * n - n
        tf = close_algebra(tfim_generators(n), max_dim=2 * n * n)
        assert tf.dim == 2 * n * n - n
    announce(1, "DLA dimensions exact for XY (n^2-n) and TFIM (2n^2-n), n in {4,6,8}")


# -- criterion 2 -------------------------------------------------------------

def test_criterion_02_hybrid_equivalence():
    """g-sim cost == statevector expectation of the joint cost, <= 1e-9."""
    checked = 0
    worst = 0.0
    for family in ("xy", "tfim"):
        for n in (4, 6, 8):
            if family == "xy":
                ham = models.xy_hamiltonian(n, seed=n)
                basis = close_algebra(xy_generators(n), max_dim=n * n)
                prelayer = True
            else:
                ham = models.tfim_hamiltonian(n, seed=n)
                basis = close_algebra(tfim_generators(n), max_dim=2 * n * n)
                prelayer = False
            ansatz = build_helia(n, 1, basis, hadamard_prelayer=prelayer)
            coeffs = gsim.project_observable(ham, basis)
            rng = np.random.default_rng(1000 + n + (0 if family == "xy" else 1))
            for _ in range(9):
                params = rng.standard_normal(ansatz.param_count)
                _, phi = ansatz.split_params(params)
                evolved = gsim.heisenberg_evolve(coeffs, phi)
                measured = gsim.measure_dla_expectations(
                    ansatz.state_before_ug(params), basis)
                classical = gsim.gsim_cost(evolved, measured)
                quantum = bk.expectation(
                    bk.run_circuit(ansatz.gates, params, bk.zero_state(n)), ham)
                worst = max(worst, abs(classical - quantum))
                checked += 1
    assert checked >= 50
    assert worst <= 1e-9
    announce(2, f"hybrid equivalence over {checked} random draws, max |gap| = {worst:.2e}")


# -- criterion 3 -------------------------------------------------------------

def _finite_difference(fn, params, step=1e-5):
    grads = np.empty(len(params))
    for i in range(len(params)):
        up, dn = params.copy(), params.copy()
        up[i] += step
        dn[i] -= step
        grads[i] = (fn(up) - fn(dn)) / (2 * step)
    return grads


def test_criterion_03_gradient_correctness():
    """(a) shift rule vs FD <= 1e-6; (b) g-sim vs FD <= 1e-6;
    (c) simultaneous combined == all-parameter shift rule <= 1e-8."""
    n = 6
    basis = close_algebra(xy_generators(n), max_dim=n * n)
    ham = models.xy_hamiltonian(n, seed=2)
    ansatz = build_helia(n, 1, basis, hadamard_prelayer=True)
    coeffs = gsim.project_observable(ham, basis)
    plans = adjoint_rotation_plans(basis)
    rng = np.random.default_rng(33)
    params = rng.standard_normal(ansatz.param_count)

    # (a) two-point shift rule vs central finite differences on the full circuit.
    def cost(p):
        return bk.expectation(bk.run_circuit(ansatz.gates, p, bk.zero_state(n)), ham)

    psr = training.psr_gradient(ansatz.gates, params, ham, range(ansatz.param_count))
    fd = _finite_difference(cost, params)
    gap_a = float(np.max(np.abs(psr - fd)))
    assert gap_a <= 1e-6

    # (b) algebra-block reverse accumulation vs finite differences.
    measured = gsim.measure_dla_expectations(ansatz.state_before_ug(params), basis)
    _, phi = ansatz.split_params(params)

    def gcost(p):
        return gsim.gsim_cost(gsim.heisenberg_evolve(coeffs, p, plans), measured.values)

    ggrad = gsim.gsim_gradient(coeffs, phi, plans, measured.values)
    gfd = _finite_difference(gcost, phi)
    gap_b = float(np.max(np.abs(ggrad - gfd)))
    assert gap_b <= 1e-6

    # (c) simultaneous combined gradient vs all-parameter shift rule.
    gap_c = 0.0
    for _ in range(3):
        params = rng.standard_normal(ansatz.param_count)
        _, phi = ansatz.split_params(params)
        tgrad = training.psr_gradient(ansatz.gates, params, ham, ansatz.theta_indices)
        o = gsim.measure_dla_expectations(ansatz.state_before_ug(params), basis)
        pgrad = gsim.gsim_gradient(coeffs, phi, plans, o.values)
        combined = np.concatenate([tgrad, pgrad])
        full = training.psr_gradient(ansatz.gates, params, ham, range(ansatz.param_count))
        gap_c = max(gap_c, float(np.max(np.abs(combined - full))))
    assert gap_c <= 1e-8
    announce(3, f"gradients: psr-fd {gap_a:.1e}, gsim-fd {gap_b:.1e}, sim-vs-full {gap_c:.1e}")


# -- criterion 4 -------------------------------------------------------------

def test_criterion_04_qpu_accounting():
    """Exact per-iteration charges for three configurations."""
    configs = [(4, 1, "xy"), (6, 1, "xy"), (4, 2, "tfim")]
    for n, layers, family in configs:
        if family == "xy":
            basis = close_algebra(xy_generators(n), max_dim=n * n)
            ham = models.xy_hamiltonian(n, seed=0)
            prelayer = True
        else:
            basis = close_algebra(tfim_generators(n), max_dim=2 * n * n)
            ham = models.tfim_hamiltonian(n, seed=0)
            prelayer = False
        ansatz = build_helia(n, layers, basis, hadamard_prelayer=prelayer)
        p, g = ansatz.theta_count, ansatz.phi_count
        iters = 3
        full = training.train_full_psr(ansatz, ham, iters, seed=1)
        assert np.array_equal(np.diff([r.qpu_calls for r in full.records]),
                              [2 * (p + g)] * iters)
        alt = training.train_alternate(ansatz, ham, iters, seed=1)
        assert np.array_equal(np.diff([r.qpu_calls for r in alt.records]),
                              [2 * p + g] * iters)
        sim = training.train_simultaneous(ansatz, ham, iters, seed=1)
        assert np.array_equal(np.diff([r.qpu_calls for r in sim.records]),
                              [2 * p + g] * iters)
        gonly = training.train_gsim_only(basis, ham, prelayer, iters, seed=1)
        assert all(r.qpu_calls == 0 for r in gonly.records)
    announce(4, "charges exact: 2(p+g) full-psr, 2p+g alternate/simultaneous, 0 g-sim")


# -- criterion 5 -------------------------------------------------------------

FIG3_CONFIG = dict(task="vqe", family="tfim", n_qubits=6, hamiltonian_seed=0,
                   uq_layers=1, methods=("alt", "gsim", "hea-psr"), iters=500,
                   trials=8, master_seed=11)


@pytest.fixture(scope="module")
def fig3_report():
    return bench.run_vqe(ExperimentConfig.from_dict(FIG3_CONFIG))


def test_criterion_05_fig3_desk_reproduction(fig3_report):
    """6-qubit TFIM, 500 iterations, 8 seeds: the alternating hybrid reaches
    relative error < 1e-3 in a majority of seeds; the single-block baselines
    do not."""
    def successes(method):
        rows = fig3_report["methods"][method]["per_trial"]
        return sum(r["relative_error"] < 1e-3 for r in rows)

    alt, gonly, hea = successes("alt"), successes("gsim"), successes("hea-psr")
    assert alt > 4, f"alternating hybrid succeeded only {alt}/8"
    assert gonly <= 4, f"algebra-only unexpectedly succeeded {gonly}/8"
    assert hea <= 4, f"hardware-only unexpectedly succeeded {hea}/8"
    announce(5, f"fig-3 analogue: alt {alt}/8, gsim {gonly}/8, hea {hea}/8 successes")


# -- criterion 6 -------------------------------------------------------------

XY_SWEEP_BASE = dict(task="vqe", family="xy", hamiltonian_seed=2, uq_layers=1,
                     methods=("full-psr", "alt+sim"), iters=500, alt_iters=250,
                     trials=8, master_seed=11, gradient_engine="adjoint")


@pytest.fixture(scope="module")
def xy_sweep_reports():
    out = {}
    for n in (6, 8, 10):
        cfg = ExperimentConfig.from_dict({**XY_SWEEP_BASE, "n_qubits": n})
        out[n] = bench.run_vqe(cfg)
    return out


def test_criterion_06_xy_success_and_reduction(xy_sweep_reports):
    """6-10 qubit XY at equal budgets: alt+sim success >= full-psr success,
    and mean circuit-call reduction at the best-energy point > 0 for n >= 8."""
    summary = []
    for n, report in xy_sweep_reports.items():
        fp = report["methods"]["full-psr"]["metrics"]
        asim = report["methods"]["alt+sim"]["metrics"]
        assert asim["success_fraction"] >= fp["success_fraction"], f"ordering fails at n={n}"
        if n >= 8:
            assert asim["qpu_reduction_mean_all"] > 0.0, f"no call reduction at n={n}"
        summary.append(
            f"n={n}: {asim['success_fraction']:.2f}>={fp['success_fraction']:.2f}"
            f" red {asim['qpu_reduction_mean_all']:.0f}%")
    announce(6, "; ".join(summary))


# -- criterion 7 -------------------------------------------------------------

BP_CONFIG = dict(task="bp-variance", family="xy", qubit_list=(4, 6, 8, 10),
                 uq_layers=1, iters=50, trials=16, hea_depth=50, master_seed=11)


@pytest.fixture(scope="module")
def bp_report():
    return bench.bp_variance_sweep(ExperimentConfig.from_dict(BP_CONFIG))


def test_criterion_07_barren_plateau_directionality(bp_report):
    """Fitted log-variance-vs-n slopes of the hybrid ansatz's first hardware
    and first algebra gradients are strictly shallower than the deep
    hardware-only baseline's."""
    slopes = bp_report["slopes"]
    assert slopes["theta"] > slopes["hea"]
    assert slopes["phi"] > slopes["hea"]
    announce(7, f"slopes theta {slopes['theta']:.3f}, phi {slopes['phi']:.3f} "
                f"vs deep-circuit {slopes['hea']:.3f}")


# -- criterion 8 -------------------------------------------------------------

def test_criterion_08_purity_facts():
    """Unit purity for a normalized basis element, zero for the all-zero
    state against the XY algebra, and steeper linear-depth decay."""
    n = 6
    basis = close_algebra(xy_generators(n), max_dim=n * n)
    elem_obs = models.Observable(n, [(basis[3], 2.0 ** (-n / 2))])
    assert gsim.g_purity(elem_obs, basis) == pytest.approx(1.0, abs=1e-12)
    assert gsim.g_purity(bk.zero_state(n), basis) == 0.0

    cfg = ExperimentConfig(task="purity", qubit_list=(4, 6, 8), samples=1000,
                           master_seed=11)
    report = bench.purity_depth_sweep(cfg)
    for entry in report["table"].values():
        assert 0.0 <= entry["mean_purity"] <= 1.0
    slopes = report["log_purity_slopes"]
    assert slopes["linear"] < slopes["constant"]
    announce(8, f"purity: element 1.0, zero-state 0.0; slopes linear "
                f"{slopes['linear']:.3f} < constant {slopes['constant']:.3f}")


# -- criterion 9 -------------------------------------------------------------

CLASSIFY_BASE = dict(task="classify", n_qubits=8, methods=("gsim", "alt+sim"),
                     iters=400, alt_iters=200, trials=5, train_count=40,
                     test_count=40, uq_layers=2, eval_every=10,
                     hamiltonian_seed=1, master_seed=23,
                     gradient_engine="adjoint")


@pytest.fixture(scope="module")
def classification_reports():
    out = {}
    for fam in ("XY", "YZ", "ZX"):
        cfg = ExperimentConfig.from_dict({**CLASSIFY_BASE, "dla": fam})
        out[fam] = bench.run_classification(cfg)
    return out


def test_criterion_09_classification_ordering(classification_reports):
    """8 qubits, 40+40 samples, 5 seeds: mean peak test accuracy of the
    hybrid alt+sim scheme >= the all-classical scheme for at least 2 of the
    3 algebra choices."""
    wins = []
    lines = []
    for fam, report in classification_reports.items():
        g = report["methods"]["gsim"]["peak_accuracy_mean"]
        a = report["methods"]["alt+sim"]["peak_accuracy_mean"]
        wins.append(a >= g)
        lines.append(f"{fam}: {a:.3f} vs {g:.3f}")
    assert sum(wins) >= 2, f"ordering held for only {sum(wins)}/3 ({lines})"
    announce(9, "; ".join(lines) + f" -> {sum(wins)}/3")


# -- criterion 10 ------------------------------------------------------------

PRETRAIN_CONFIG = dict(task="vqe", family="ltfim", n_qubits=8, hamiltonian_seed=0,
                       uq_layers=3, methods=("full-psr", "pretrain"), iters=1450,
                       schedule=(250, 100, 200, 1000), trials=4, master_seed=11,
                       gradient_engine="adjoint")


@pytest.fixture(scope="module")
def pretrain_report():
    return bench.run_vqe(ExperimentConfig.from_dict(PRETRAIN_CONFIG))


def test_criterion_10_pretraining_pipeline(pretrain_report):
    """8-qubit LTFIM with the 250/100/200/1000 schedule: strictly fewer total
    circuit calls than equal-iteration full-psr, and median relative error no
    worse, over 4 seeds."""
    fp_rows = pretrain_report["methods"]["full-psr"]["per_trial"]
    pt_rows = pretrain_report["methods"]["pretrain"]["per_trial"]
    for fp, pt in zip(fp_rows, pt_rows):
        assert pt["total_qpu"] < fp["total_qpu"]
    fp_med = float(np.median([r["relative_error"] for r in fp_rows]))
    pt_med = float(np.median([r["relative_error"] for r in pt_rows]))
    assert pt_med <= fp_med
    saved = 100.0 * (1 - pt_rows[0]["total_qpu"] / fp_rows[0]["total_qpu"])
    announce(10, f"pretraining: {saved:.1f}% fewer calls, median error "
                 f"{pt_med:.2e} <= {fp_med:.2e}")


# -- criterion 11 ------------------------------------------------------------

def test_criterion_11_determinism(fig3_report):
    """Re-running a report's embedded config reproduces its metrics exactly."""
    embedded = dict(fig3_report["config"])
    rerun = bench.run_vqe(ExperimentConfig.from_dict(embedded))
    assert rerun["config_digest"] == fig3_report["config_digest"]
    a = {m: fig3_report["methods"][m] for m in fig3_report["methods"]}
    b = {m: rerun["methods"][m] for m in rerun["methods"]}
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    # Same property for a classical-suite report.
    cfg = ExperimentConfig(task="purity", qubit_list=(4,), samples=200, master_seed=3)
    first = bench.purity_depth_sweep(cfg)
    second = bench.purity_depth_sweep(
        ExperimentConfig.from_dict(first["config"]))
    assert first["table"] == second["table"]
    announce(11, "reports reproduce bit-for-bit from their embedded configs")
