"""Gradient engines, Adam, and the training drivers with exact call accounting.

Per-iteration quantum-circuit charges are structural properties of each
scheme: full shift-rule training charges ``2(p + g)``, the alternating and
simultaneous hybrid schemes charge ``2p + g`` (two shifted circuits per
hardware parameter plus one expectation circuit per algebra basis element),
and the all-classical driver charges nothing after its closed-form initial
expectations.  Logged costs are always full-Hamiltonian expectations,
evaluated on the simulator free of charge (diagnostics, not a training
resource).

Two gradient engines are available for the hardware block.  ``psr`` evaluates
the loss at two shifted parameter values per index, exactly as the quantum
procedure would.  ``adjoint`` produces the same derivatives (both are exact;
equality is pinned to 1e-10 in the tests) from a single forward/backward
simulator sweep, and charges the meter identically since it stands in for the
same hardware procedure.  Heavy experiment suites default to ``adjoint``;
the trainers default to ``psr``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import backend, gsim
from .accounting import QpuMeter
from .backend import GateOp
from .dla import DlaBasis, adjoint_rotation_plans
from .gsim import CoeffVector
from .models import HeliaAnsatz, Observable

__all__ = [
    "OptimState",
    "TrainTrace",
    "IterationRecord",
    "adam_step",
    "psr_gradient",
    "make_engine",
    "train_full_psr",
    "train_gsim_only",
    "train_alternate",
    "train_simultaneous",
    "train_alt_then_sim",
    "pretrain_general",
    "observable_digest",
    "config_digest",
]


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------

@dataclass
class OptimState:
    """Adam state for one parameter block."""

    size: int
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: np.ndarray = None
    v: np.ndarray = None

    def __post_init__(self):
        if self.m is None:
            self.m = np.zeros(self.size)
        if self.v is None:
            self.v = np.zeros(self.size)


def adam_step(state: OptimState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """One bias-corrected Adam update; returns the new parameter vector."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != (state.size,):
        raise ValueError("parameter/gradient length mismatch")
    state.step_count += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1 ** state.step_count)
    v_hat = state.v / (1.0 - state.beta2 ** state.step_count)
    return params - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)


# ---------------------------------------------------------------------------
# Gradient engines
# ---------------------------------------------------------------------------

def _shift_table(gates: Sequence[GateOp], indices: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """Per-index (r, shift) pairs; shift = pi / (4 r) from the gate owning the slot.

    A slot shared by several gates has no two-eigenvalue generator, so the
    two-point rule would be silently wrong; such slots are rejected.
    """
    slot_to_gate: Dict[int, GateOp] = {}
    shared = set()
    for g in gates:
        if g.param_slot is not None:
            if g.param_slot in slot_to_gate:
                shared.add(g.param_slot)
            slot_to_gate[g.param_slot] = g
    rs = np.empty(len(indices))
    for k, idx in enumerate(indices):
        idx = int(idx)
        if idx in shared:
            raise ValueError(
                f"parameter slot {idx} is shared by several gates; its effective "
                "generator has no two-eigenvalue spectrum")
        gate = slot_to_gate.get(idx)
        if gate is None:
            raise ValueError(f"no trainable gate owns parameter slot {idx}")
        rs[k] = gate.shift_scale
    return rs, np.pi / (4.0 * rs)


def psr_gradient(gates: Sequence[GateOp], params: np.ndarray, obs: Observable,
                 indices: Sequence[int], initial: Optional[np.ndarray] = None,
                 weights: Optional[np.ndarray] = None,
                 meter: Optional[QpuMeter] = None,
                 shots: Optional[int] = None,
                 shot_seed: Optional[int] = None) -> np.ndarray:
    """Two-point shift-rule gradient: ``r (l(x + pi/4r e_i) - l(x - pi/4r e_i))``.

    Charges ``2 * len(indices)`` circuit evaluations.  ``initial`` may be a
    single state vector or a (batch, dim) array combined with ``weights``
    (mean-squared-error style losses differentiate a weighted sum of
    per-state expectations).
    """
    params = np.asarray(params, dtype=np.float64)
    indices = [int(i) for i in indices]
    n = obs.n_qubits
    rs, shifts = _shift_table(gates, indices)
    if meter is not None:
        batch_factor = 1
        if initial is not None and np.asarray(initial).ndim == 2:
            batch_factor = np.asarray(initial).shape[0]
        meter.charge(2 * len(indices) * batch_factor)
    if not indices:
        return np.zeros(0)

    k = len(indices)
    mat = np.tile(params, (2 * k, 1))
    for j, (idx, shift) in enumerate(zip(indices, shifts)):
        mat[2 * j, idx] += shift
        mat[2 * j + 1, idx] -= shift

    if initial is None:
        initial = backend.zero_state(n).amplitudes

    def eval_rows(init_vec) -> np.ndarray:
        if shots is None:
            return backend.batch_expectations(gates, mat, obs, init_vec, n)
        seed_rng = np.random.default_rng(shot_seed)
        vals = np.empty(2 * k)
        for row in range(2 * k):
            state = backend.run_circuit(gates, mat[row], backend.StateVector(n, init_vec))
            vals[row] = backend.sample_expectation(
                state, obs, shots, int(seed_rng.integers(2 ** 63)))
        return vals

    initial = np.asarray(initial, dtype=np.complex128)
    if initial.ndim == 1:
        vals = eval_rows(initial)
    else:
        weights_arr = np.ones(initial.shape[0]) if weights is None else np.asarray(weights)
        vals = np.zeros(2 * k)
        for b in range(initial.shape[0]):
            vals += weights_arr[b] * eval_rows(initial[b])
    return rs * (vals[0::2] - vals[1::2])


def _adjoint_engine(gates, params, obs, indices, initial=None, weights=None,
                    meter=None, shots=None, shot_seed=None) -> np.ndarray:
    """Exact stand-in for :func:`psr_gradient`; identical values and charges."""
    if shots is not None:
        raise ValueError("the reverse-mode engine has no shot-noise mode")
    indices = [int(i) for i in indices]
    if meter is not None:
        batch_factor = 1
        if initial is not None and np.asarray(initial).ndim == 2:
            batch_factor = np.asarray(initial).shape[0]
        meter.charge(2 * len(indices) * batch_factor)
    if not indices:
        return np.zeros(0)
    return backend.analytic_gradient(gates, params, obs, indices=indices,
                                     initial=initial, weights=weights)


def make_engine(name: str) -> Callable:
    """Gradient engine by name: ``psr`` (shifted evaluations) or ``adjoint``."""
    if name == "psr":
        return psr_gradient
    if name == "adjoint":
        return _adjoint_engine
    raise ValueError(f"unknown gradient engine {name!r}")


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------

def _param_hash(block: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(block, dtype=np.float64).tobytes()).hexdigest()[:12]


def observable_digest(obs: Observable) -> str:
    items = sorted((str(p), float(c).hex()) for p, c in obs.terms.items())
    payload = json.dumps([obs.n_qubits, items])
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def config_digest(config: Dict) -> str:
    payload = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


@dataclass
class IterationRecord:
    iteration: int
    cost: float
    theta_hash: str
    phi_hash: str
    qpu_calls: int
    phase: str


@dataclass
class TrainTrace:
    """Per-iteration training record with cumulative circuit accounting."""

    method: str
    seed: int
    config: Dict
    records: List[IterationRecord] = field(default_factory=list)
    extras: Dict[str, list] = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return config_digest(self.config)

    def record(self, iteration: int, cost: float, theta: np.ndarray,
               phi: np.ndarray, qpu_calls: int, phase: str) -> None:
        if self.records and qpu_calls < self.records[-1].qpu_calls:
            raise ValueError("qpu_calls must be non-decreasing")
        self.records.append(IterationRecord(
            iteration, float(cost), _param_hash(theta), _param_hash(phi),
            int(qpu_calls), phase))

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.records])

    @property
    def qpu_calls(self) -> int:
        return self.records[-1].qpu_calls if self.records else 0

    @property
    def best_cost(self) -> float:
        return float(min(r.cost for r in self.records))

    @property
    def best_record(self) -> IterationRecord:
        return min(self.records, key=lambda r: (r.cost, r.iteration))

    @property
    def best_iteration(self) -> int:
        return self.best_record.iteration

    @property
    def qpu_calls_at_best(self) -> int:
        return self.best_record.qpu_calls

    def to_json(self) -> Dict:
        return {
            "schema_version": 1,
            "method": self.method,
            "seed": self.seed,
            "config": self.config,
            "config_digest": self.config_hash,
            "records": [vars(r) for r in self.records],
            "final": {
                "best_cost": self.best_cost,
                "best_iteration": self.best_iteration,
                "qpu_calls_at_best": self.qpu_calls_at_best,
                "total_qpu_calls": self.qpu_calls,
            },
            "extras": {k: list(map(float, v)) for k, v in self.extras.items()},
        }

    def to_csv(self) -> str:
        lines = ["iteration,cost,qpu_calls,phase"]
        lines.extend(f"{r.iteration},{r.cost!r},{r.qpu_calls},{r.phase}"
                     for r in self.records)
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Shared driver plumbing
# ---------------------------------------------------------------------------

@dataclass
class _Session:
    """Mutable state shared by the hybrid training loops."""

    ansatz: HeliaAnsatz
    psr_obs: Observable            # observable measured by the shift rule
    log_obs: Observable            # observable whose expectation is logged
    coeffs: Optional[CoeffVector]  # algebra-block projection of psr_obs
    plans: Optional[tuple]
    params: np.ndarray
    adam_theta: OptimState
    adam_phi: OptimState
    meter: QpuMeter
    engine: Callable
    trace: TrainTrace
    shots: Optional[int] = None
    shot_rng: Optional[np.random.Generator] = None
    record_first_grads: bool = False

    def log_cost(self, iteration: int, phase: str) -> float:
        theta, phi = self.ansatz.split_params(self.params)
        state = backend.run_circuit(self.ansatz.gates, self.params,
                                    backend.zero_state(self.ansatz.n_qubits))
        cost = backend.expectation(state, self.log_obs)
        self.trace.record(iteration, cost, theta, phi, self.meter.calls, phase)
        return cost

    def next_shot_seed(self) -> Optional[int]:
        if self.shots is None:
            return None
        return int(self.shot_rng.integers(2 ** 63))

    def theta_gradient(self) -> np.ndarray:
        return self.engine(self.ansatz.gates, self.params, self.psr_obs,
                           list(self.ansatz.theta_indices), meter=self.meter,
                           shots=self.shots, shot_seed=self.next_shot_seed())

    def phi_gradient_from_state(self) -> np.ndarray:
        """Measure basis expectations on the current pre-block state, then backpropagate classically."""
        state = self.ansatz.state_before_ug(self.params)
        measured = gsim.measure_dla_expectations(
            state, self.ansatz.basis, meter=self.meter,
            shots=self.shots, seed=self.next_shot_seed())
        _, phi = self.ansatz.split_params(self.params)
        return gsim.gsim_gradient(self.coeffs, phi, self.plans, measured.values)

    def note_first_grads(self, tgrad: Optional[np.ndarray],
                         pgrad: Optional[np.ndarray]) -> None:
        if not self.record_first_grads:
            return
        if tgrad is not None and len(tgrad):
            self.extras_list("first_theta_grads").append(float(tgrad[0]))
        if pgrad is not None and len(pgrad):
            self.extras_list("first_phi_grads").append(float(pgrad[0]))

    def extras_list(self, key: str) -> list:
        return self.trace.extras.setdefault(key, [])


def _init_session(ansatz: HeliaAnsatz, psr_obs: Observable, log_obs: Observable,
                  method: str, iters, seed: int, lr_theta: float, lr_phi: float,
                  gradient_engine: str, shots: Optional[int],
                  charge_shots: bool, record_first_grads: bool,
                  needs_projection: bool) -> _Session:
    rng = np.random.default_rng(seed)
    params = rng.standard_normal(ansatz.param_count)
    coeffs = None
    plans = None
    if needs_projection and ansatz.basis is not None and ansatz.phi_count:
        coeffs = gsim.project_observable(psr_obs, ansatz.basis)
        plans = adjoint_rotation_plans(ansatz.basis)
    config = {
        "method": method,
        "iters": iters if isinstance(iters, (int, list)) else list(iters),
        "seed": seed,
        "lr_theta": lr_theta,
        "lr_phi": lr_phi,
        "gradient_engine": gradient_engine,
        "shots": shots,
        "charge_shots": charge_shots,
        "n_qubits": ansatz.n_qubits,
        "theta_count": ansatz.theta_count,
        "phi_count": ansatz.phi_count,
        "hadamard_prelayer": ansatz.hadamard_prelayer,
        "observable": observable_digest(log_obs),
        "psr_observable": observable_digest(psr_obs),
    }
    return _Session(
        ansatz=ansatz,
        psr_obs=psr_obs,
        log_obs=log_obs,
        coeffs=coeffs,
        plans=plans,
        params=params,
        adam_theta=OptimState(ansatz.theta_count, learning_rate=lr_theta),
        adam_phi=OptimState(ansatz.phi_count, learning_rate=lr_phi),
        meter=QpuMeter(shots if charge_shots else None),
        engine=make_engine(gradient_engine),
        trace=TrainTrace(method, seed, config),
        shots=shots,
        shot_rng=np.random.default_rng(np.random.SeedSequence([seed, 0x5407])) if shots else None,
        record_first_grads=record_first_grads,
    )


def _hybrid_iteration(s: _Session, mode: str) -> None:
    """One alternating or simultaneous step; charges 2p + g."""
    p = s.ansatz.theta_count
    if mode == "sim":
        # Measure on the pre-update hardware parameters: the combined update
        # is one exact gradient step on the joint cost.
        pgrad = s.phi_gradient_from_state()
        tgrad = s.theta_gradient()
        s.note_first_grads(tgrad, pgrad)
        s.params[:p] = adam_step(s.adam_theta, s.params[:p], tgrad)
        s.params[p:] = adam_step(s.adam_phi, s.params[p:], pgrad)
    elif mode == "alt":
        tgrad = s.theta_gradient()
        s.params[:p] = adam_step(s.adam_theta, s.params[:p], tgrad)
        pgrad = s.phi_gradient_from_state()  # uses the updated hardware block
        s.note_first_grads(tgrad, pgrad)
        s.params[p:] = adam_step(s.adam_phi, s.params[p:], pgrad)
    else:
        raise ValueError(f"unknown hybrid mode {mode!r}")


class _ConvergenceRule:
    """Stop once the best cost improves by < tol over a sliding window."""

    def __init__(self, window: int = 20, tol: float = 1e-8):
        self.window = window
        self.tol = tol
        self._history: List[float] = []

    def update(self, cost: float) -> bool:
        self._history.append(cost)
        if len(self._history) <= self.window:
            return False
        window_best = min(self._history[-self.window:])
        prior_best = min(self._history[:-self.window])
        return prior_best - window_best < self.tol


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------

_DRIVER_DEFAULTS = dict(lr_theta=0.01, lr_phi=0.01, gradient_engine="psr",
                        shots=None, charge_shots=False, record_first_grads=False)


def train_full_psr(ansatz: HeliaAnsatz, obs: Observable, iters: int, seed: int,
                   **opts) -> TrainTrace:
    """Shift-rule training of every parameter; 2(p+g) circuit charges per iteration."""
    kw = {**_DRIVER_DEFAULTS, **opts}
    s = _init_session(ansatz, obs, obs, "full-psr", iters, seed,
                      kw["lr_theta"], kw["lr_phi"], kw["gradient_engine"],
                      kw["shots"], kw["charge_shots"], kw["record_first_grads"],
                      needs_projection=False)
    p = ansatz.theta_count
    all_indices = list(range(ansatz.param_count))
    s.log_cost(0, "init")
    for i in range(iters):
        grads = s.engine(ansatz.gates, s.params, obs, all_indices, meter=s.meter,
                         shots=s.shots, shot_seed=s.next_shot_seed())
        s.note_first_grads(grads[:p], grads[p:])
        s.params[:p] = adam_step(s.adam_theta, s.params[:p], grads[:p])
        s.params[p:] = adam_step(s.adam_phi, s.params[p:], grads[p:])
        s.log_cost(i + 1, "psr-full")
    return s.trace


def train_gsim_only(basis: DlaBasis, obs: Observable, prelayer: bool,
                    iters: int, seed: int, **opts) -> TrainTrace:
    """All-classical training of the algebra block on the fixed initial state.

    The initial-state expectations of ``|0...0>`` (or the Hadamard wall state)
    are closed-form, so the quantum charge is exactly zero.
    """
    kw = {**_DRIVER_DEFAULTS, **opts}
    from .models import build_helia

    ansatz = build_helia(basis.n_qubits, 0, basis, hadamard_prelayer=prelayer)
    s = _init_session(ansatz, obs, obs, "gsim", iters, seed,
                      kw["lr_theta"], kw["lr_phi"], "psr", None, False,
                      kw["record_first_grads"], needs_projection=True)
    measured = gsim.analytic_initial_expectations(basis, prelayer).values

    def cost_of(phi: np.ndarray) -> float:
        return gsim.gsim_cost(
            gsim.heisenberg_evolve(s.coeffs, phi, s.plans), measured)

    s.trace.record(0, cost_of(s.params), s.params[:0], s.params, 0, "init")
    for i in range(iters):
        pgrad = gsim.gsim_gradient(s.coeffs, s.params, s.plans, measured)
        s.note_first_grads(None, pgrad)
        s.params = adam_step(s.adam_phi, s.params, pgrad)
        s.trace.record(i + 1, cost_of(s.params), s.params[:0], s.params, 0, "gsim")
    return s.trace


def _train_hybrid(ansatz, obs, iters, seed, mode, method, **opts) -> TrainTrace:
    kw = {**_DRIVER_DEFAULTS, **opts}
    if ansatz.basis is None or ansatz.phi_count == 0:
        raise ValueError("hybrid training needs an algebra block")
    s = _init_session(ansatz, obs, obs, method, iters, seed,
                      kw["lr_theta"], kw["lr_phi"], kw["gradient_engine"],
                      kw["shots"], kw["charge_shots"], kw["record_first_grads"],
                      needs_projection=True)
    s.log_cost(0, "init")
    for i in range(iters):
        _hybrid_iteration(s, mode)
        s.log_cost(i + 1, mode)
    return s.trace


def train_alternate(ansatz: HeliaAnsatz, obs: Observable, iters: int,
                    seed: int, **opts) -> TrainTrace:
    """Hardware step first, then the algebra step on the updated state; 2p+g."""
    return _train_hybrid(ansatz, obs, iters, seed, "alt", "alternate", **opts)


def train_simultaneous(ansatz: HeliaAnsatz, obs: Observable, iters: int,
                       seed: int, **opts) -> TrainTrace:
    """Joint gradient step: both blocks differentiated at the same point; 2p+g."""
    return _train_hybrid(ansatz, obs, iters, seed, "sim", "simultaneous", **opts)


def train_alt_then_sim(ansatz: HeliaAnsatz, obs: Observable,
                       alt_iters: int = 500, seed: int = 0,
                       max_iters: int = 2000, window: int = 20,
                       conv_tol: float = 1e-8, **opts) -> TrainTrace:
    """Alternating phase of fixed length, then simultaneous until convergence.

    Convergence: best cost improves by less than ``conv_tol`` over a sliding
    window of ``window`` iterations, or the ``max_iters`` total-iteration cap.
    """
    kw = {**_DRIVER_DEFAULTS, **opts}
    if ansatz.basis is None or ansatz.phi_count == 0:
        raise ValueError("hybrid training needs an algebra block")
    s = _init_session(ansatz, obs, obs, "alt+sim",
                      [alt_iters, max_iters, window], seed,
                      kw["lr_theta"], kw["lr_phi"], kw["gradient_engine"],
                      kw["shots"], kw["charge_shots"], kw["record_first_grads"],
                      needs_projection=True)
    s.trace.config["conv_tol"] = conv_tol
    rule = _ConvergenceRule(window, conv_tol)
    rule.update(s.log_cost(0, "init"))
    it = 0
    while it < alt_iters and it < max_iters:
        _hybrid_iteration(s, "alt")
        it += 1
        rule.update(s.log_cost(it, "alt"))
    while it < max_iters:
        _hybrid_iteration(s, "sim")
        it += 1
        # The rule spans both phases but only gates the simultaneous loop, so
        # an already-plateaued run stops early and saves its circuit budget.
        if rule.update(s.log_cost(it, "sim")):
            break
    return s.trace


def pretrain_general(obs: Observable, uq_layers: int,
                     schedule: Tuple[int, int, int, int] = (250, 100, 200, 1000),
                     seed: int = 0, max_dim: Optional[int] = None,
                     prelayer: bool = False, **opts) -> TrainTrace:
    """Warm-start pipeline for observables whose full algebra is exponential.

    The observable is split greedily into a poly-DLA part and a remainder.
    Phases: alternating then simultaneous training against the reduced
    observable, then shift-rule training of the hardware block only and of
    the whole circuit against the full observable.  All logged costs are
    full-observable expectations; per-iteration charges are 2p+g, 2p+g, 2p
    and 2(p+g).
    """
    kw = {**_DRIVER_DEFAULTS, **opts}
    from .models import build_helia, split_poly_dla

    t_alt, t_sim, t_uq, t_full = schedule
    inside, outside, basis = split_poly_dla(obs, max_dim)
    ansatz = build_helia(obs.n_qubits, uq_layers, basis, hadamard_prelayer=prelayer)
    s = _init_session(ansatz, inside, obs, "pretrain", list(schedule), seed,
                      kw["lr_theta"], kw["lr_phi"], kw["gradient_engine"],
                      kw["shots"], kw["charge_shots"], kw["record_first_grads"],
                      needs_projection=True)
    s.trace.config["split_inside_terms"] = len(inside.terms)
    s.trace.config["split_basis_dim"] = basis.dim
    p = ansatz.theta_count
    it = 0
    s.log_cost(it, "init")
    for _ in range(t_alt):
        _hybrid_iteration(s, "alt")
        it += 1
        s.log_cost(it, "alt")
    for _ in range(t_sim):
        _hybrid_iteration(s, "sim")
        it += 1
        s.log_cost(it, "sim")
    # Exponential-DLA phases train against the full observable.
    theta_idx = list(ansatz.theta_indices)
    all_idx = list(range(ansatz.param_count))
    for _ in range(t_uq):
        grads = s.engine(ansatz.gates, s.params, obs, theta_idx, meter=s.meter,
                         shots=s.shots, shot_seed=s.next_shot_seed())
        s.params[:p] = adam_step(s.adam_theta, s.params[:p], grads)
        it += 1
        s.log_cost(it, "psr-uq")
    for _ in range(t_full):
        grads = s.engine(ansatz.gates, s.params, obs, all_idx, meter=s.meter,
                         shots=s.shots, shot_seed=s.next_shot_seed())
        s.params[:p] = adam_step(s.adam_theta, s.params[:p], grads[:p])
        s.params[p:] = adam_step(s.adam_phi, s.params[p:], grads[p:])
        it += 1
        s.log_cost(it, "psr-full")
    return s.trace
