"""
Ideal gate states, angle-averaged fidelities and the truth table.

Inputs are parametrized by two real angles (epsilon, beta) on [0, 2pi)^2.
Every fidelity integrand is a trigonometric polynomial of degree <= 4 in
each angle, so the uniform periodic product rule is exact once the grid
has more than 4 points per axis; 9 is required for margin.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    GateModel,
    GateTransferMatrix,
    IntegratorConfig,
    ProcessMap,
    TrajectoryRecord,
    build_gate_model,
    compute_process_map,
    compute_transfer_matrix,
    is_open,
    propagate_operators,
    propagate_states,
)
from .hamiltonians import SystemParams
from .hilbert import COMPUTATIONAL_KETS, LOGICAL_KETS
from .pulses import PulseParams, step_window

MIN_EXACT_GRID = 9
DEFAULT_GRID = 16

IDEAL_STAGES = ("input", "step1", "step2", "whole")
# fidelity stage -> (ideal input stage, ideal output stage)
FIDELITY_STAGES = {
    "step1": ("input", "step1"),
    "step2": ("step1", "step2"),
    "step3": ("step2", "whole"),
    "whole": ("input", "whole"),
}
# Which logical slot (g1g1, g1g2, g0g1, g0g2, g0a) carries each input amplitude
# (sin e sin b, sin e cos b, cos e sin b, cos e cos b) at every stage.
_SLOTS = {
    "input": (0, 1, 2, 3),
    "step1": (0, 1, 4, 3),
    "step2": (0, 1, 4, 2),
    "whole": (0, 1, 3, 2),
}


@dataclass(frozen=True)
class GateAngles:
    epsilon: float
    beta: float


@dataclass(frozen=True)
class FidelityResult:
    value: float
    stage: str
    grid: int


@dataclass(frozen=True)
class TruthTable:
    """Rows: inputs |00>,|01>,|10>,|11>; columns: output populations on the same kets."""

    matrix: np.ndarray
    labels: tuple[str, ...] = ("00", "01", "10", "11")

    def cnot_diagonal(self) -> np.ndarray:
        return np.array([self.matrix[i, CNOT_TARGET[i]] for i in range(4)])

    def off_target(self) -> np.ndarray:
        mask = np.ones((4, 4), dtype=bool)
        mask[np.arange(4), CNOT_TARGET] = False
        return self.matrix[mask]


CNOT_TARGET = (0, 1, 3, 2)
CNOT = np.eye(4)[list(CNOT_TARGET)].T  # CNOT[out, in]


def ideal_amplitudes(epsilon, beta, stage: str) -> np.ndarray:
    """Amplitudes over the logical kets, shape broadcast(epsilon, beta) + (5,)."""
    if stage == "step3":
        stage = "whole"
    if stage not in _SLOTS:
        raise ValueError(f"stage must be one of {IDEAL_STAGES}, got {stage!r}")
    e, b = np.broadcast_arrays(np.asarray(epsilon, dtype=float), np.asarray(beta, dtype=float))
    se, ce, sb, cb = np.sin(e), np.cos(e), np.sin(b), np.cos(b)
    out = np.zeros(e.shape + (5,), dtype=complex)
    for slot, amp in zip(_SLOTS[stage], (se * sb, se * cb, ce * sb, ce * cb)):
        out[..., slot] = amp
    return out


def ideal_state(angles: GateAngles, stage: str) -> np.ndarray:
    return ideal_amplitudes(angles.epsilon, angles.beta, stage)


def angle_grid(n_grid: int) -> tuple[np.ndarray, np.ndarray]:
    """Flattened (epsilon, beta) nodes of the uniform periodic product rule."""
    if n_grid < MIN_EXACT_GRID:
        warnings.warn(
            f"n_grid={n_grid} < {MIN_EXACT_GRID}: angle quadrature is no longer guaranteed exact",
            stacklevel=3,
        )
    nodes = 2.0 * np.pi * np.arange(n_grid) / n_grid
    e, b = np.meshgrid(nodes, nodes, indexing="ij")
    return e.ravel(), b.ravel()


def _stage_vectors(stage: str, n_grid: int):
    if stage not in FIDELITY_STAGES:
        raise ValueError(f"stage must be one of {tuple(FIDELITY_STAGES)}, got {stage!r}")
    s_in, s_out = FIDELITY_STAGES[stage]
    e, b = angle_grid(n_grid)
    return ideal_amplitudes(e, b, s_in), ideal_amplitudes(e, b, s_out)


def _as_extended(M) -> np.ndarray:
    m = M.extended if isinstance(M, GateTransferMatrix) else np.asarray(M, dtype=complex)
    if m.shape == (4, 4):
        ext = np.zeros((5, 5), dtype=complex)
        ext[:4, :4] = m
        return ext
    if m.shape != (5, 5):
        raise ValueError(f"transfer matrix must be 4x4 or 5x5, got {m.shape}")
    return m


def _pure_value(M5: np.ndarray, c_in: np.ndarray, c_out: np.ndarray) -> float:
    amp = np.einsum("ga,ab,gb->g", c_out.conj(), M5, c_in)
    return float(np.mean(np.abs(amp) ** 2))


def average_fidelity_pure(M, stage: str = "whole", n_grid: int = DEFAULT_GRID) -> FidelityResult:
    """Angle-averaged |<ideal_out| M |ideal_in>|^2 for a (logical) transfer matrix."""
    c_in, c_out = _stage_vectors(stage, n_grid)
    return FidelityResult(_pure_value(_as_extended(M), c_in, c_out), stage, n_grid)


def _mixed_value(Q: np.ndarray, c: np.ndarray, c_out: np.ndarray) -> float:
    # Q[i, j, a, b] = <L_a| image(|in_i><in_j|) |L_b>
    val = np.einsum("gi,gj,ga,gb,ijab->g", c, c.conj(), c_out.conj(), c_out, Q)
    return float(np.mean(np.abs(val)))


def _input_coefficients(c_in: np.ndarray, inputs) -> np.ndarray:
    slots = [LOGICAL_KETS.index(s) for s in inputs]
    missing = [a for a in range(5) if a not in slots]
    if missing and np.max(np.abs(c_in[:, missing])) > 0:
        raise ValueError("process map inputs do not cover the ideal input states of this stage")
    return c_in[:, slots]


def average_fidelity_mixed(pm: ProcessMap, stage: str = "whole", n_grid: int = DEFAULT_GRID) -> FidelityResult:
    """Angle-averaged |<ideal_out| rho |ideal_out>|, rho rebuilt from the process map by linearity."""
    c_in, c_out = _stage_vectors(stage, n_grid)
    c = _input_coefficients(c_in, pm.inputs)
    idx = [pm.basis.index(s) for s in LOGICAL_KETS]
    Q = pm.images[:, :, idx][:, :, :, idx]
    return FidelityResult(_mixed_value(Q, c, c_out), stage, n_grid)


# --------------------------------------------------------------------------
# Time-resolved fidelities


def _pure_trace(model: GateModel, span, stage, cfg, n_grid):
    c_in, c_out = _stage_vectors(stage, n_grid)
    idx = [model.basis.index(s) for s in LOGICAL_KETS]
    X0 = np.zeros((model.basis.dim, 5), dtype=complex)
    X0[idx, np.arange(5)] = 1.0
    times, values = [], []

    def on_sample(t, X):
        times.append(t)
        values.append(_pure_value(X[idx, :], c_in, c_out))

    propagate_states(X0, model.hamiltonians, span, cfg, on_sample)
    return np.asarray(times), np.asarray(values)


def _mixed_trace(model: GateModel, span, stage, cfg, n_grid):
    c_in, c_out = _stage_vectors(stage, n_grid)
    d = model.basis.dim
    idx = [model.basis.index(s) for s in LOGICAL_KETS]
    pairs = [(i, j) for i in range(5) for j in range(i, 5)]
    R0 = np.zeros((d * d, len(pairs)), dtype=complex)
    for col, (i, j) in enumerate(pairs):
        R0[idx[i] * d + idx[j], col] = 1.0
    flat = np.array([[a * d + b for b in idx] for a in idx])
    times, values = [], []

    def on_sample(t, R):
        Q = np.zeros((5, 5, 5, 5), dtype=complex)
        for col, (i, j) in enumerate(pairs):
            Q[i, j] = R[flat, col]
            if i != j:
                Q[j, i] = Q[i, j].conj().T
        times.append(t)
        values.append(_mixed_value(Q, c_in, c_out))

    propagate_operators(R0, model.hamiltonians, model.collapse, span, cfg, on_sample)
    return np.asarray(times), np.asarray(values)


def fidelity_trace(model: GateModel, span, stage: str, cfg: IntegratorConfig, n_grid: int = DEFAULT_GRID):
    """(times, F(t)) over ``span`` starting from the ideal input of ``stage``."""
    run = _mixed_trace if model.open_system else _pure_trace
    return run(model, span, stage, cfg, n_grid)


def stepwise_fidelity_traces(
    sp: SystemParams,
    p: PulseParams,
    cfg: IntegratorConfig = IntegratorConfig(),
    n_grid: int = DEFAULT_GRID,
    basis_mode: str = "closure",
) -> TrajectoryRecord:
    """F_step1..3 (each from its ideal step input, NaN outside the step) and F_whole."""
    model = build_gate_model(sp, p, basis_mode)
    times, whole = fidelity_trace(model, model.span, "whole", cfg, n_grid)
    key = np.round(times, 9)
    obs = {}
    for k in (1, 2, 3):
        col = np.full(times.shape, np.nan)
        t_k, f_k = fidelity_trace(model, step_window(k, p), f"step{k}", cfg, n_grid)
        pos = {v: i for i, v in enumerate(key)}
        for t, f in zip(np.round(t_k, 9), f_k):
            if t in pos:
                col[pos[t]] = f
        obs[f"F_step{k}"] = col
    obs["F_whole"] = whole
    return TrajectoryRecord(times, obs)


# --------------------------------------------------------------------------
# Whole-gate summaries


def gate_fidelity(
    sp: SystemParams,
    p: PulseParams,
    cfg: IntegratorConfig = IntegratorConfig(),
    n_grid: int = DEFAULT_GRID,
    basis_mode: str = "closure",
) -> FidelityResult:
    """Whole-gate average fidelity; mixed-state form whenever any decay rate is nonzero."""
    if is_open(sp):
        pm = compute_process_map(sp, p, cfg, basis_mode=basis_mode)
        return average_fidelity_mixed(pm, "whole", n_grid)
    M = compute_transfer_matrix(sp, p, cfg, basis_mode=basis_mode)
    return average_fidelity_pure(M, "whole", n_grid)


def truth_table(
    sp: SystemParams,
    p: PulseParams,
    cfg: IntegratorConfig = IntegratorConfig(),
    noise: tuple[float, float] | None = None,
    basis_mode: str = "closure",
    drives: bool = True,
) -> TruthTable:
    if noise is not None:
        from dataclasses import replace

        sp = replace(sp, gamma=noise[0], kappa=noise[1])
    if is_open(sp):
        pm = compute_process_map(sp, p, cfg, basis_mode=basis_mode, drives=drives)
        idx = [pm.basis.index(s) for s in COMPUTATIONAL_KETS]
        table = np.array([[np.real(pm.images[i, i][o, o]) for o in idx] for i in range(4)])
    else:
        M = compute_transfer_matrix(sp, p, cfg, basis_mode=basis_mode, drives=drives)
        table = (np.abs(M.entries) ** 2).T
    return TruthTable(table)
