"""Metrics, experiment suites and report assembly.

Conventions fixed here: relative error takes the absolute value of the
normalized gap (ground-state targets make the raw ratio negative); the
success threshold is strict (exactly 1e-3 counts as failure); error quantiles
use linear interpolation and are computed over successful trials when any
exist, otherwise over all trials; circuit-call reduction is measured at each
trial's best-energy point and is reported both over the method's successful
trials and over all trials.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import backend, gsim, models, training
from .dla import DlaBasis, adjoint_rotation_plans, close_algebra, export_text
from .models import Observable, build_hea, build_helia
from .training import TrainTrace, config_digest

__all__ = [
    "MetricReport",
    "ExperimentConfig",
    "relative_error",
    "success_rate",
    "qpu_reduction",
    "gradient_variance",
    "run_vqe",
    "bp_variance_sweep",
    "purity_depth_sweep",
    "run_classification",
    "dla_info",
    "trial_seeds_for",
]

SCHEMA_VERSION = 1
SUCCESS_THRESHOLD = 1e-3


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def relative_error(e_t: float, e_star: float) -> float:
    """``|(E_t - E*) / E*|``; the reference energy must be nonzero."""
    if e_star == 0:
        raise ValueError("reference energy must be nonzero")
    return abs((e_t - e_star) / e_star)


def success_rate(errors: Sequence[float], threshold: float = SUCCESS_THRESHOLD) -> float:
    """Fraction of trials strictly below the threshold."""
    errors = list(errors)
    if not errors:
        raise ValueError("no trials")
    return sum(1 for e in errors if e < threshold) / len(errors)


def qpu_reduction(method_calls: float, psr_calls: float) -> float:
    """Percent reduction vs the all-shift-rule baseline; may be negative."""
    if psr_calls <= 0:
        raise ValueError("baseline call count must be positive")
    return 100.0 * (1.0 - method_calls / psr_calls)


def gradient_variance(values: Sequence[float]) -> float:
    """Population variance of a gradient stream."""
    return float(np.var(np.asarray(values, dtype=np.float64)))


@dataclass
class MetricReport:
    """Per-method summary statistics over a set of trials."""

    trial_count: int
    success_fraction: float
    error_median: float
    error_q25: float
    error_q75: float
    stats_population: str            # "successful" or "all"
    e_star: float
    qpu_reduction_mean: Optional[float] = None
    qpu_reduction_std: Optional[float] = None
    qpu_reduction_mean_all: Optional[float] = None
    qpu_reduction_std_all: Optional[float] = None

    def __post_init__(self):
        assert 0.0 <= self.success_fraction <= 1.0
        assert self.error_q25 <= self.error_median <= self.error_q75


def summarize_method(errors: Sequence[float], e_star: float,
                     reductions: Optional[Sequence[float]] = None,
                     threshold: float = SUCCESS_THRESHOLD) -> MetricReport:
    errors = np.asarray(list(errors), dtype=np.float64)
    succ_mask = errors < threshold
    frac = float(np.mean(succ_mask))
    pool = errors[succ_mask] if succ_mask.any() else errors
    population = "successful" if succ_mask.any() else "all"
    q25, med, q75 = np.percentile(pool, [25, 50, 75])
    report = MetricReport(
        trial_count=len(errors),
        success_fraction=frac,
        error_median=float(med),
        error_q25=float(q25),
        error_q75=float(q75),
        stats_population=population,
        e_star=float(e_star),
    )
    if reductions is not None:
        red = np.asarray(list(reductions), dtype=np.float64)
        if succ_mask.any():
            report.qpu_reduction_mean = float(np.mean(red[succ_mask]))
            report.qpu_reduction_std = float(np.std(red[succ_mask]))
        report.qpu_reduction_mean_all = float(np.mean(red))
        report.qpu_reduction_std_all = float(np.std(red))
    return report


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------

_FAMILY_BUILDERS = {
    "xy": models.xy_hamiltonian,
    "tfim": models.tfim_hamiltonian,
    "ltfim": models.ltfim_hamiltonian,
}


@dataclass
class ExperimentConfig:
    """One fully reproducible experiment; the digest hashes every semantic field."""

    task: str
    family: str = "xy"               # hamiltonian family, or DLA family for dla-info
    n_qubits: int = 6
    hamiltonian_seed: int = 0
    hamiltonian_path: Optional[str] = None
    uq_layers: int = 1
    prelayer: Optional[bool] = None  # None -> on for xy, off otherwise
    dla: Optional[str] = None        # classification DLA choice: XY | YZ | ZX
    methods: Tuple[str, ...] = ("full-psr",)
    iters: int = 500
    alt_iters: int = 250
    max_total_iters: Optional[int] = None
    schedule: Tuple[int, int, int, int] = (250, 100, 200, 1000)
    max_dim: Optional[int] = None
    trials: int = 8
    master_seed: int = 1234
    shots: Optional[int] = None
    gradient_engine: str = "psr"
    qubit_list: Tuple[int, ...] = ()
    depth_profiles: Tuple[str, ...] = ("constant", "logarithmic", "linear")
    samples: int = 1000
    hea_depth: int = 50
    train_count: int = 40
    test_count: int = 40
    eval_every: int = 10
    threshold: float = SUCCESS_THRESHOLD

    def to_dict(self) -> Dict:
        out = asdict(self)
        for key in ("methods", "schedule", "qubit_list", "depth_profiles"):
            out[key] = list(out[key])
        return out

    @classmethod
    def from_dict(cls, data: Dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        if "task" not in data:
            raise ValueError("config needs a 'task' field")
        kwargs = dict(data)
        for key in ("methods", "schedule", "qubit_list", "depth_profiles"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    @property
    def digest(self) -> str:
        return config_digest(self.to_dict())

    def resolved_prelayer(self) -> bool:
        if self.prelayer is not None:
            return self.prelayer
        # The wall of Hadamards works around all-zero initial expectations of
        # the XY algebra; field-carrying families and file-loaded observables
        # default to no wall.
        return self.family == "xy" and self.hamiltonian_path is None

    def default_max_dim(self, n: Optional[int] = None) -> int:
        n = self.n_qubits if n is None else n
        if self.max_dim is not None:
            return self.max_dim
        if self.family in ("tfim", "ltfim"):
            return 2 * n * n - n
        return n * n

    def hamiltonian(self, n: Optional[int] = None) -> Observable:
        n = self.n_qubits if n is None else n
        if self.hamiltonian_path is not None:
            return models.load_observable(self.hamiltonian_path)
        try:
            builder = _FAMILY_BUILDERS[self.family]
        except KeyError:
            raise ValueError(f"unknown hamiltonian family {self.family!r}") from None
        return builder(n, self.hamiltonian_seed)


def trial_seeds_for(master_seed: int, trials: int) -> List[int]:
    rng = np.random.default_rng(master_seed)
    return [int(s) for s in rng.integers(2 ** 31, size=trials)]


def _report_skeleton(config: ExperimentConfig) -> Dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "task": config.task,
        "config": config.to_dict(),
        "config_digest": config.digest,
        "master_seed": config.master_seed,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }


# ---------------------------------------------------------------------------
# VQE suite
# ---------------------------------------------------------------------------

def _vqe_ansatz_parts(config: ExperimentConfig):
    """Hamiltonian, split basis and shared ansatz for the VQE methods."""
    ham = config.hamiltonian()
    inside, outside, basis = models.split_poly_dla(ham, config.default_max_dim())
    ansatz = build_helia(config.n_qubits, config.uq_layers, basis,
                         hadamard_prelayer=config.resolved_prelayer())
    return ham, inside, outside, basis, ansatz


def _run_vqe_method_trial(config: ExperimentConfig, method: str, seed: int) -> TrainTrace:
    ham, inside, outside, basis, ansatz = _vqe_ansatz_parts(config)
    opts = dict(gradient_engine=config.gradient_engine, shots=config.shots)
    if method == "full-psr":
        return training.train_full_psr(ansatz, ham, config.iters, seed, **opts)
    if method == "hea-psr":
        hea = build_hea(config.n_qubits, config.uq_layers)
        return training.train_full_psr(hea, ham, config.iters, seed, **opts)
    if method == "gsim":
        return training.train_gsim_only(basis, ham, config.resolved_prelayer(),
                                        config.iters, seed)
    if method == "alt":
        return training.train_alternate(ansatz, ham, config.iters, seed, **opts)
    if method == "sim":
        return training.train_simultaneous(ansatz, ham, config.iters, seed, **opts)
    if method == "alt+sim":
        cap = config.max_total_iters if config.max_total_iters else config.iters
        return training.train_alt_then_sim(ansatz, ham, alt_iters=config.alt_iters,
                                           seed=seed, max_iters=cap, **opts)
    if method == "pretrain":
        return training.pretrain_general(ham, config.uq_layers, config.schedule,
                                         seed=seed, max_dim=config.default_max_dim(),
                                         prelayer=config.resolved_prelayer(), **opts)
    raise ValueError(f"unknown method {method!r}")


def _vqe_trial_payload(payload: Tuple[Dict, str, int]) -> Dict:
    config_dict, method, seed = payload
    config = ExperimentConfig.from_dict(config_dict)
    trace = _run_vqe_method_trial(config, method, seed)
    return {
        "seed": seed,
        "best_cost": trace.best_cost,
        "best_iteration": trace.best_iteration,
        "qpu_at_best": trace.qpu_calls_at_best,
        "total_qpu": trace.qpu_calls,
        "trace_csv": trace.to_csv(),
        "config_digest": trace.config_hash,
    }


def _parallel_map(fn: Callable, payloads: List, jobs: int) -> List:
    if jobs <= 1 or len(payloads) <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, payloads))


def run_vqe(config: ExperimentConfig, jobs: int = 1) -> Dict:
    """Run every configured method over the shared trial seeds and summarize.

    The reference energy is the exact ground energy when the register fits
    the eigensolver bound, otherwise the lowest energy reached across all
    trials of all methods.
    """
    ham = config.hamiltonian()
    seeds = trial_seeds_for(config.master_seed, config.trials)

    payloads = [(config.to_dict(), method, seed)
                for method in config.methods for seed in seeds]
    rows = _parallel_map(_vqe_trial_payload, payloads, jobs)
    by_method: Dict[str, List[Dict]] = {}
    for (_, method, _seed), row in zip(payloads, rows):
        by_method.setdefault(method, []).append(row)

    if config.n_qubits <= backend.GROUND_STATE_QUBIT_BOUND:
        e_star, _ = backend.ground_state(ham, tol=1e-10)
        e_star_source = "exact"
    else:
        e_star = min(r["best_cost"] for rows_m in by_method.values() for r in rows_m)
        e_star_source = "best-trial"

    report = _report_skeleton(config)
    report["trial_seeds"] = seeds
    report["e_star"] = e_star
    report["e_star_source"] = e_star_source
    report["methods"] = {}
    baseline = by_method.get("full-psr")
    for method, rows_m in by_method.items():
        errors = [relative_error(r["best_cost"], e_star) for r in rows_m]
        for r, err in zip(rows_m, errors):
            r["relative_error"] = err
        reductions = None
        if baseline is not None and method != "full-psr":
            reductions = [qpu_reduction(r["qpu_at_best"], b["qpu_at_best"])
                          for r, b in zip(rows_m, baseline)]
            for r, red in zip(rows_m, reductions):
                r["qpu_reduction_at_best"] = red
        metrics = summarize_method(errors, e_star, reductions, config.threshold)
        report["methods"][method] = {
            "per_trial": [{k: v for k, v in r.items() if k != "trace_csv"}
                          for r in rows_m],
            "metrics": asdict(metrics),
        }
    report["_traces"] = {
        method: [r["trace_csv"] for r in rows_m]
        for method, rows_m in by_method.items()
    }
    return report


# ---------------------------------------------------------------------------
# Barren-plateau variance sweep
# ---------------------------------------------------------------------------

def _fit_log_slope(ns: Sequence[int], variances: Sequence[float]) -> float:
    if len(ns) < 2:
        return float("nan")
    ys = np.log(np.asarray(variances, dtype=np.float64))
    return float(np.polyfit(np.asarray(ns, dtype=np.float64), ys, 1)[0])


def bp_variance_sweep(config: ExperimentConfig, jobs: int = 1) -> Dict:
    """Variance of the first hardware and first algebra gradient vs qubit count.

    The layered hybrid ansatz is trained with the alternating scheme and a
    deep hardware-only circuit (``hea_depth`` layers, all-shift-rule updates)
    is trained on the same problem as the reference; gradient values come
    from the reverse-mode engine, which is pinned equal to the shift rule in
    the test suite.  Variances pool every iteration of every trial; each
    trial draws its own Hamiltonian instance, so the cross-qubit comparison
    reflects the coupling ensemble rather than one fixed draw per size.
    """
    if config.trials < 2:
        raise ValueError("variance sweep needs at least 2 trials")
    qubits = config.qubit_list or (4, 6, 8, 10)
    seeds = trial_seeds_for(config.master_seed, config.trials)
    report = _report_skeleton(config)
    per_n = {}
    for n in qubits:
        cfg_n = replace(config, n_qubits=n)
        theta_stream: List[float] = []
        phi_stream: List[float] = []
        hea_stream: List[float] = []
        for seed in seeds:
            ham = replace(cfg_n, hamiltonian_seed=seed).hamiltonian(n)
            inside, _, basis = models.split_poly_dla(ham, cfg_n.default_max_dim(n))
            ansatz = build_helia(n, config.uq_layers, basis,
                                 hadamard_prelayer=cfg_n.resolved_prelayer())
            trace = training.train_alternate(
                ansatz, ham, config.iters, seed,
                gradient_engine="adjoint", record_first_grads=True)
            theta_stream.extend(trace.extras["first_theta_grads"])
            phi_stream.extend(trace.extras["first_phi_grads"])
            hea = build_hea(n, config.hea_depth)
            hea_trace = training.train_full_psr(
                hea, ham, config.iters, seed,
                gradient_engine="adjoint", record_first_grads=True)
            hea_stream.extend(hea_trace.extras["first_theta_grads"])
        per_n[n] = {
            "theta_variance": gradient_variance(theta_stream),
            "phi_variance": gradient_variance(phi_stream),
            "hea_variance": gradient_variance(hea_stream),
        }
    report["per_qubit"] = {str(n): v for n, v in per_n.items()}
    ns = list(per_n)
    report["slopes"] = {
        "theta": _fit_log_slope(ns, [per_n[n]["theta_variance"] for n in ns]),
        "phi": _fit_log_slope(ns, [per_n[n]["phi_variance"] for n in ns]),
        "hea": _fit_log_slope(ns, [per_n[n]["hea_variance"] for n in ns]),
    }
    return report


# ---------------------------------------------------------------------------
# Purity-vs-depth sweep
# ---------------------------------------------------------------------------

def _profile_depth(profile: str, n: int) -> int:
    if profile == "constant":
        return 1
    if profile == "logarithmic":
        return max(1, round(np.log2(n)))
    if profile == "linear":
        return n
    raise ValueError(f"unknown depth profile {profile!r}")


def purity_depth_sweep(config: ExperimentConfig, jobs: int = 1) -> Dict:
    """Mean algebra-overlap purity of random layered-circuit states.

    For each qubit count and depth profile, ``samples`` random parameter
    draws (uniform on [0, 2pi)) of the layered hardware circuit are scored by
    their overlap purity with the XY-coupling algebra.
    """
    qubits = config.qubit_list or (4, 6, 8)
    report = _report_skeleton(config)
    table = {}
    for n in qubits:
        basis = close_algebra(models.xy_generators(n))
        dim = 2 ** n
        zero = backend.zero_state(n).amplitudes
        for profile in config.depth_profiles:
            depth = _profile_depth(profile, n)
            ansatz = build_hea(n, depth)
            rng = np.random.default_rng(
                np.random.SeedSequence([config.master_seed, n, depth]))
            params = rng.uniform(0.0, 2.0 * np.pi,
                                 size=(config.samples, ansatz.param_count))
            amps = backend.run_circuits_batched(ansatz.gates, params, zero, n)
            o = gsim.measure_dla_expectations_batch(amps, basis)
            purities = np.einsum("bm,bm->b", o, o) / dim
            table[f"{n}:{profile}"] = {
                "n_qubits": n,
                "profile": profile,
                "depth": depth,
                "mean_purity": float(np.mean(purities)),
            }
    report["table"] = table
    slopes = {}
    for profile in config.depth_profiles:
        vals = [table[f"{n}:{profile}"]["mean_purity"] for n in qubits]
        slopes[profile] = _fit_log_slope(list(qubits), vals)
    report["log_purity_slopes"] = slopes
    return report


# ---------------------------------------------------------------------------
# Phase classification
# ---------------------------------------------------------------------------

def _classification_accuracy(preds: np.ndarray, labels: np.ndarray) -> float:
    signs = np.where(preds > 0, 1.0, -1.0)
    return float(np.mean(signs == labels))


def _classification_predictions(gates, params, operator, states) -> np.ndarray:
    tiled = np.tile(params, (states.shape[0], 1)) if len(params) else \
        np.zeros((states.shape[0], 0))
    out = backend.run_circuits_batched(gates, tiled, states, states.shape[1].bit_length() - 1)
    pa = backend._pauli_apply(out, operator)
    return np.einsum("bi,bi->b", out.conj(), pa).real


def _run_classification_trial(config: ExperimentConfig, method: str, seed: int,
                              train_states, train_labels, test_states, test_labels,
                              basis: DlaBasis, operator_index: int) -> Dict:
    n = config.n_qubits
    operator = basis[operator_index]
    op_obs = Observable(n, [(operator, 1.0)])
    coeffs = gsim.CoeffVector(basis, np.eye(basis.dim)[operator_index])
    plans = adjoint_rotation_plans(basis)
    rng = np.random.default_rng(seed)
    m_train = train_states.shape[0]

    if method == "gsim":
        ansatz = build_helia(n, 0, basis)
    else:
        ansatz = build_helia(n, config.uq_layers, basis)
    params = rng.standard_normal(ansatz.param_count)
    p = ansatz.theta_count
    adam_theta = training.OptimState(p)
    adam_phi = training.OptimState(ansatz.phi_count)
    engine = training.make_engine(config.gradient_engine)
    uq_and_pre = list(ansatz.uq_gates) + ansatz.prelayer_gates

    def predictions(states) -> np.ndarray:
        return _classification_predictions(ansatz.gates, params, operator, states)

    def o_table(states) -> np.ndarray:
        if p:
            tiled = np.tile(params[:p], (states.shape[0], 1))
            pre = backend.run_circuits_batched(uq_and_pre, tiled, states, n)
        else:
            pre = states
        return gsim.measure_dla_expectations_batch(pre, basis)

    peak = 0.0
    history = []
    it = 0
    alt_phase = config.alt_iters if method == "alt+sim" else 0

    def evaluate() -> float:
        return _classification_accuracy(predictions(test_states), test_labels)

    peak = evaluate()
    while it < config.iters:
        mode = "alt" if it < alt_phase else "sim"
        preds = predictions(train_states)
        residuals = 2.0 * (preds - train_labels) / m_train
        if method == "gsim":
            table = o_table(train_states)
            pgrad = gsim.gsim_gradient(coeffs, params, plans, residuals @ table)
            params = training.adam_step(adam_phi, params, pgrad)
        elif method == "full-psr":
            grads = engine(ansatz.gates, params, op_obs,
                           list(range(ansatz.param_count)),
                           initial=train_states, weights=residuals)
            params[:p] = training.adam_step(adam_theta, params[:p], grads[:p])
            params[p:] = training.adam_step(adam_phi, params[p:], grads[p:])
        elif method == "alt+sim":
            if mode == "sim":
                table = o_table(train_states)
                tgrad = engine(ansatz.gates, params, op_obs, list(range(p)),
                               initial=train_states, weights=residuals)
                pgrad = gsim.gsim_gradient(coeffs, params[p:], plans, residuals @ table)
                params[:p] = training.adam_step(adam_theta, params[:p], tgrad)
                params[p:] = training.adam_step(adam_phi, params[p:], pgrad)
            else:
                tgrad = engine(ansatz.gates, params, op_obs, list(range(p)),
                               initial=train_states, weights=residuals)
                params[:p] = training.adam_step(adam_theta, params[:p], tgrad)
                table = o_table(train_states)
                preds2 = _classification_predictions(ansatz.gates, params, operator,
                                                     train_states)
                residuals2 = 2.0 * (preds2 - train_labels) / m_train
                pgrad = gsim.gsim_gradient(coeffs, params[p:], plans, residuals2 @ table)
                params[p:] = training.adam_step(adam_phi, params[p:], pgrad)
        else:
            raise ValueError(f"unknown classification method {method!r}")
        it += 1
        if it % config.eval_every == 0 or it == config.iters:
            acc = evaluate()
            history.append({"iteration": it, "test_accuracy": acc})
            peak = max(peak, acc)
    train_acc = _classification_accuracy(predictions(train_states), train_labels)
    return {
        "seed": seed,
        "peak_test_accuracy": peak,
        "final_train_accuracy": train_acc,
        "history": history,
    }


def run_classification(config: ExperimentConfig, jobs: int = 1) -> Dict:
    """MSE-trained phase classifier; peak test accuracy per trial and method.

    The dataset (ground states labeled by the coupling order) and the random
    basis-element measurement operator are fixed per experiment; trials vary
    only the parameter initialization.
    """
    n = config.n_qubits
    family = (config.dla or "ZX").upper()
    basis = close_algebra(models.dla_generators(family, n), max_dim=n * n)
    train, test = models.make_phase_dataset(
        n, config.train_count, config.test_count, config.hamiltonian_seed)
    op_rng = np.random.default_rng(
        np.random.SeedSequence([config.master_seed, 0xC1A55]))
    operator_index = int(op_rng.integers(basis.dim))
    seeds = trial_seeds_for(config.master_seed, config.trials)

    train_states = train.states_matrix()
    test_states = test.states_matrix()
    train_labels = train.labels()
    test_labels = test.labels()

    report = _report_skeleton(config)
    report["dla"] = family
    report["measurement_operator"] = str(basis[operator_index])
    report["trial_seeds"] = seeds
    report["methods"] = {}
    for method in config.methods:
        rows = [
            _run_classification_trial(config, method, seed, train_states,
                                      train_labels, test_states, test_labels,
                                      basis, operator_index)
            for seed in seeds
        ]
        peaks = np.array([r["peak_test_accuracy"] for r in rows])
        report["methods"][method] = {
            "per_trial": rows,
            "peak_accuracy_mean": float(np.mean(peaks)),
            "peak_accuracy_std": float(np.std(peaks)),
        }
    return report


# ---------------------------------------------------------------------------
# DLA info
# ---------------------------------------------------------------------------

def dla_info(config: ExperimentConfig) -> Dict:
    """Closure dimension and basis export for a generator family."""
    n = config.n_qubits
    fam = config.family
    if fam in ("xy", "tfim"):
        gens = models.dla_generators("XY" if fam == "xy" else "TFIM", n)
        cap = config.default_max_dim(n)
    else:
        gens = models.dla_generators(fam, n)
        cap = config.max_dim or n * n
    basis = close_algebra(gens, max_dim=cap)
    report = _report_skeleton(config)
    report["n_qubits"] = n
    report["dimension"] = basis.dim
    report["basis_text"] = export_text(basis)
    return report
