"""
Closed (Schrodinger) and open (Lindblad) propagation under the piecewise
step Hamiltonians, plus linear maps on the logical subspace.

Both equations are integrated by one fixed-step classical RK4 kernel on
``dx/dt = (S + sum_k c_k(t) D_k) x`` where ``S``, ``D_k`` are sparse and
``c_k`` are the real drive envelopes, evaluated exactly at the RK4 stage
times. Density operators are vectorized row-major, so
``vec(A rho B) = (A kron B^T) vec(rho)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sps

from .errors import IntegratorAccuracyError, OutOfWindowError
from .hamiltonians import (
    SystemParams,
    TimeDependentHamiltonian,
    build_collapse_ops,
    build_step_hamiltonian,
    hamiltonian_terms,
)
from .hilbert import (
    COMPUTATIONAL_KETS,
    LOGICAL_KETS,
    BasisSet,
    BasisState,
    DensityOperator,
    OperatorMatrix,
    StateVector,
    build_full_basis,
    dagger,
    reachable_closure,
)
from .pulses import PulseParams

DRIFT_TOLERANCE = 1e-4
BASIS_MODES = ("full", "closure")


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    method: str = "rk4"
    record_stride: int = 50

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.method != "rk4":
            raise ValueError(f"unsupported integration method {self.method!r}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    observables: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.observables[name]

    @property
    def names(self) -> list[str]:
        return list(self.observables)


class _Recorder:
    def __init__(self):
        self.times: list[float] = []
        self.rows: list[dict[str, float]] = []

    def add(self, t: float, values: dict[str, float]):
        if self.times and t <= self.times[-1]:
            return
        self.times.append(t)
        self.rows.append(values)

    def record(self) -> TrajectoryRecord:
        names = list(self.rows[0]) if self.rows else []
        return TrajectoryRecord(
            np.asarray(self.times),
            {n: np.asarray([r[n] for r in self.rows]) for n in names},
        )


# --------------------------------------------------------------------------
# RK4 kernel


@dataclass(frozen=True)
class LinearGenerator:
    """dx/dt = static @ x + sum_k coefficients(t)[k] * drives[k] @ x on [t_start, t_end]."""

    static: OperatorMatrix
    drives: tuple[OperatorMatrix, ...]
    coefficients: Callable[[np.ndarray], np.ndarray]
    t_start: float
    t_end: float

    @property
    def dim(self) -> int:
        return self.static.shape[0]


def time_nodes(t_a: float, t_b: float, dt: float) -> np.ndarray:
    """Whole steps of ``dt`` from t_a, with a shortened last step landing on t_b."""
    span = t_b - t_a
    n_full = int(math.floor(span / dt + 1e-9))
    nodes = t_a + dt * np.arange(n_full + 1)
    if span - n_full * dt > 1e-12 * max(1.0, abs(span)):
        nodes = np.append(nodes, t_b)
    nodes[-1] = t_b
    return nodes


def _rk4(gen: LinearGenerator, x: np.ndarray, cfg: IntegratorConfig, on_sample, sample_start: bool):
    nodes = time_nodes(gen.t_start, gen.t_end, cfg.dt)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    c_nodes = gen.coefficients(nodes)
    c_mids = gen.coefficients(mids)
    n = gen.dim
    nd = len(gen.drives)
    stacked = sps.vstack([gen.static, *gen.drives]).tocsr()

    def f(y, c):
        z = stacked @ y
        out = z[:n].copy()
        for k in range(nd):
            out += c[k] * z[(k + 1) * n : (k + 2) * n]
        return out

    def sample(i, y):
        if on_sample is None:
            return y
        replaced = on_sample(float(nodes[i]), y)
        return y if replaced is None else replaced

    if sample_start:
        x = sample(0, x)
    last = len(nodes) - 1
    for i in range(last):
        h = nodes[i + 1] - nodes[i]
        cm = c_mids[:, i]
        k1 = f(x, c_nodes[:, i])
        k2 = f(x + (0.5 * h) * k1, cm)
        k3 = f(x + (0.5 * h) * k2, cm)
        k4 = f(x + h * k3, c_nodes[:, i + 1])
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (i + 1) % cfg.record_stride == 0 or i + 1 == last:
            x = sample(i + 1, x)
    return x


def run_generators(
    generators: Sequence[LinearGenerator],
    x0: np.ndarray,
    cfg: IntegratorConfig,
    on_sample: Callable[[float, np.ndarray], np.ndarray | None] | None = None,
) -> np.ndarray:
    """Integrate consecutive segments; the state at each junction seeds the next segment."""
    x = np.array(x0, dtype=complex)
    for n, gen in enumerate(generators):
        x = _rk4(gen, x, cfg, on_sample, sample_start=(n == 0))
    return x


# --------------------------------------------------------------------------
# Hamiltonian segments and generators


def _as_list(H) -> list[TimeDependentHamiltonian]:
    if isinstance(H, TimeDependentHamiltonian):
        return [H]
    return list(H)


def hamiltonian_segments(H, span: tuple[float, float]) -> list[tuple[float, float, TimeDependentHamiltonian]]:
    """Split ``span`` at window boundaries of the given (piecewise) Hamiltonians."""
    t_a, t_b = map(float, span)
    if not t_b > t_a:
        raise ValueError(f"empty time span {span}")
    tol = 1e-9 * max(1.0, abs(t_b))
    pieces = []
    for h in _as_list(H):
        lo, hi = (t_a, t_b) if h.window is None else h.window
        lo, hi = max(lo, t_a), min(hi, t_b)
        if hi - lo > tol:
            pieces.append((lo, hi, h))
    pieces.sort(key=lambda seg: seg[0])
    cursor = t_a
    for lo, hi, _ in pieces:
        if abs(lo - cursor) > tol:
            raise OutOfWindowError(f"span {span} is not covered contiguously near t={cursor}")
        cursor = hi
    if not pieces or abs(cursor - t_b) > tol:
        raise OutOfWindowError(f"span {span} extends past the available step windows")
    return pieces


def _pulse_coefficients(h: TimeDependentHamiltonian):
    return lambda t: h.coefficients(t)


def schrodinger_generators(H, span) -> list[LinearGenerator]:
    gens = []
    for lo, hi, h in hamiltonian_segments(H, span):
        gens.append(
            LinearGenerator(
                (-1j * h.static).tocsr(),
                tuple((-1j * op).tocsr() for op in h.hermitian_channels()),
                _pulse_coefficients(h),
                lo,
                hi,
            )
        )
    return gens


def commutator_superop(h: OperatorMatrix) -> OperatorMatrix:
    """-i[h, .] on row-major vectorized operators."""
    eye = sps.identity(h.shape[0], dtype=complex, format="csr")
    return (-1j * (sps.kron(h, eye) - sps.kron(eye, h.T))).tocsr()


def dissipator_superop(collapse: Sequence[OperatorMatrix], dim: int) -> OperatorMatrix:
    """sum_c  c rho c^dag - {c^dag c, rho}/2, vectorized."""
    eye = sps.identity(dim, dtype=complex, format="csr")
    out = sps.csr_matrix((dim * dim, dim * dim), dtype=complex)
    for c in collapse:
        c = sps.csr_matrix(c)
        c.eliminate_zeros()
        if c.nnz == 0:
            continue
        cdc = (dagger(c) @ c).tocsr()
        out = out + sps.kron(c, c.conj()) - 0.5 * sps.kron(cdc, eye) - 0.5 * sps.kron(eye, cdc.T)
    return out.tocsr()


def lindblad_generators(H, collapse: Sequence[OperatorMatrix], span) -> list[LinearGenerator]:
    gens = []
    dissipator = None
    for lo, hi, h in hamiltonian_segments(H, span):
        if dissipator is None:
            dissipator = dissipator_superop(collapse, h.dim)
        gens.append(
            LinearGenerator(
                (commutator_superop(h.static) + dissipator).tocsr(),
                tuple(commutator_superop(op) for op in h.hermitian_channels()),
                _pulse_coefficients(h),
                lo,
                hi,
            )
        )
    return gens


def _span_of(H) -> tuple[float, float]:
    windows = [h.window for h in _as_list(H)]
    if any(w is None for w in windows):
        raise ValueError("a time span is required for Hamiltonians without windows")
    return min(w[0] for w in windows), max(w[1] for w in windows)


# --------------------------------------------------------------------------
# Public propagation API


def propagate_states(
    X0: np.ndarray,
    H,
    span: tuple[float, float] | None = None,
    cfg: IntegratorConfig = IntegratorConfig(),
    on_sample=None,
) -> np.ndarray:
    """Propagate amplitude column(s) ``X0`` (dim or dim x m); no renormalization."""
    span = _span_of(H) if span is None else span
    return run_generators(schrodinger_generators(H, span), X0, cfg, on_sample)


def propagate_operators(
    R0: np.ndarray,
    H,
    collapse: Sequence[OperatorMatrix],
    span: tuple[float, float] | None = None,
    cfg: IntegratorConfig = IntegratorConfig(),
    on_sample=None,
) -> np.ndarray:
    """Propagate vectorized operator column(s) ``R0`` (dim^2 or dim^2 x m) under the Lindbladian."""
    span = _span_of(H) if span is None else span
    return run_generators(lindblad_generators(H, collapse, span), R0, cfg, on_sample)


def _track_indices(basis: BasisSet, track) -> list[tuple[str, int]]:
    states = basis.states if track is None else [basis.lookup(basis.index(s)) for s in track]
    return [(s.label, basis.index(s)) for s in states]


def evolve_state(
    psi0: StateVector,
    H,
    span: tuple[float, float] | None = None,
    cfg: IntegratorConfig = IntegratorConfig(),
    track: Sequence[BasisState | str] | None = None,
) -> tuple[StateVector, TrajectoryRecord]:
    """Schrodinger evolution of a pure state; records populations and the norm."""
    if not psi0.is_physical(1e-6):
        raise ValueError(f"initial state norm {psi0.norm} is not 1 within 1e-6")
    tracked = _track_indices(psi0.basis, track)
    rec = _Recorder()

    def on_sample(t, x):
        pops = np.abs(x) ** 2
        row = {label: float(pops[i]) for label, i in tracked}
        row["norm"] = float(np.sqrt(np.sum(pops)))
        rec.add(t, row)

    x = propagate_states(psi0.amplitudes, H, span, cfg, on_sample)
    drift = abs(np.linalg.norm(x) - 1.0)
    if drift > DRIFT_TOLERANCE:
        raise IntegratorAccuracyError(f"norm drift {drift:.3e} exceeds {DRIFT_TOLERANCE}; reduce dt")
    return StateVector(psi0.basis, x), rec.record()


def evolve_density(
    rho0: DensityOperator,
    H,
    collapse: Sequence[OperatorMatrix],
    span: tuple[float, float] | None = None,
    cfg: IntegratorConfig = IntegratorConfig(),
    track: Sequence[BasisState | str] | None = None,
) -> tuple[DensityOperator, TrajectoryRecord]:
    """Lindblad evolution; the state is symmetrized once per recorded sample."""
    if rho0.hermiticity_error() > 1e-9 or abs(rho0.trace - 1.0) > 1e-6:
        raise ValueError("initial density operator must be Hermitian with unit trace")
    d = rho0.basis.dim
    tracked = _track_indices(rho0.basis, track)
    rec = _Recorder()

    def on_sample(t, x):
        rho = x.reshape(d, d)
        rho = 0.5 * (rho + rho.conj().T)
        pops = np.real(np.diag(rho))
        row = {label: float(pops[i]) for label, i in tracked}
        row["trace"] = float(np.sum(pops))
        row["min_eigenvalue"] = float(np.linalg.eigvalsh(rho)[0])
        rec.add(t, row)
        return rho.reshape(-1)

    x = propagate_operators(rho0.matrix.reshape(-1), H, collapse, span, cfg, on_sample)
    rho = DensityOperator(rho0.basis, x.reshape(d, d))
    drift = abs(rho.trace - 1.0)
    if drift > DRIFT_TOLERANCE:
        raise IntegratorAccuracyError(f"trace drift {drift:.3e} exceeds {DRIFT_TOLERANCE}; reduce dt")
    return rho, rec.record()


# --------------------------------------------------------------------------
# Gate model assembly


@dataclass(frozen=True)
class GateModel:
    basis: BasisSet
    hamiltonians: tuple[TimeDependentHamiltonian, ...]
    collapse: tuple[OperatorMatrix, ...]
    open_system: bool

    @property
    def span(self) -> tuple[float, float]:
        return _span_of(self.hamiltonians)

    def step(self, k: int) -> TimeDependentHamiltonian:
        return self.hamiltonians[k - 1]


def model_basis(
    sp: SystemParams,
    basis_mode: str = "closure",
    open_system: bool = False,
    extra_seeds: Sequence[BasisState | str] = (),
) -> BasisSet:
    """Full basis, or the closure of the logical kets under all step terms (and jumps)."""
    if basis_mode not in BASIS_MODES:
        raise ValueError(f"basis_mode must be one of {BASIS_MODES}, got {basis_mode!r}")
    full = build_full_basis(sp.n_max)
    if basis_mode == "full":
        return full
    gens = []
    for k in (1, 2, 3):
        gens += hamiltonian_terms(k, sp, full)
    if open_system:
        gens += [c for c in build_collapse_ops(sp, full) if c.count_nonzero()]
    return reachable_closure(list(LOGICAL_KETS) + list(extra_seeds), gens, full)


def is_open(sp: SystemParams) -> bool:
    return sp.gamma > 0 or sp.kappa > 0 or sp.fiber_rate > 0


def build_gate_model(
    sp: SystemParams,
    p: PulseParams,
    basis_mode: str = "closure",
    open_system: bool | None = None,
    drives: bool = True,
    extra_seeds: Sequence[BasisState | str] = (),
) -> GateModel:
    open_system = is_open(sp) if open_system is None else open_system
    basis = model_basis(sp, basis_mode, open_system, extra_seeds)
    hams = tuple(build_step_hamiltonian(k, sp, p, basis, drives=drives) for k in (1, 2, 3))
    collapse = tuple(build_collapse_ops(sp, basis)) if open_system else ()
    return GateModel(basis, hams, collapse, open_system)


# --------------------------------------------------------------------------
# Linear maps on the logical subspace


@dataclass(frozen=True)
class GateTransferMatrix:
    """Amplitude map among the logical kets (|00>,|01>,|10>,|11>,|g0 a>), photonic vacuum.

    ``extended[a, j] = <L_a| U |L_j>``; ``entries`` is the 4x4 computational block.
    """

    extended: np.ndarray

    @property
    def entries(self) -> np.ndarray:
        return self.extended[:4, :4]

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.entries, compute_uv=False)


def _check_norms(X: np.ndarray):
    drift = np.max(np.abs(np.linalg.norm(X, axis=0) - 1.0))
    if drift > DRIFT_TOLERANCE:
        raise IntegratorAccuracyError(f"norm drift {drift:.3e} exceeds {DRIFT_TOLERANCE}; reduce dt")


def compute_transfer_matrix(
    sp: SystemParams,
    p: PulseParams,
    cfg: IntegratorConfig = IntegratorConfig(),
    basis_mode: str = "closure",
    drives: bool = True,
    span: tuple[float, float] | None = None,
) -> GateTransferMatrix:
    model = build_gate_model(sp, p, basis_mode, open_system=False, drives=drives)
    idx = [model.basis.index(s) for s in LOGICAL_KETS]
    X0 = np.zeros((model.basis.dim, len(idx)), dtype=complex)
    X0[idx, np.arange(len(idx))] = 1.0
    X = propagate_states(X0, model.hamiltonians, span or model.span, cfg)
    _check_norms(X)
    return GateTransferMatrix(X[idx, :])


@dataclass(frozen=True)
class ProcessMap:
    """Images of |inputs[i]><inputs[j]| after propagation, over ``basis``."""

    basis: BasisSet
    inputs: tuple[BasisState, ...]
    images: np.ndarray  # (n, n, d, d)

    def reconstruct(self, rho_in: np.ndarray) -> DensityOperator:
        """Propagated state for an initial density ``rho_in`` given on ``inputs``."""
        return DensityOperator(self.basis, np.einsum("ij,ijab->ab", rho_in, self.images))

    def apply(self, coeffs: np.ndarray) -> DensityOperator:
        c = np.asarray(coeffs, dtype=complex)
        return self.reconstruct(np.outer(c, c.conj()))


def compute_process_map(
    sp: SystemParams,
    p: PulseParams,
    cfg: IntegratorConfig = IntegratorConfig(),
    gamma: float | None = None,
    kappa: float | None = None,
    basis_mode: str = "closure",
    inputs: Sequence[BasisState] = COMPUTATIONAL_KETS,
    span: tuple[float, float] | None = None,
    drives: bool = True,
    use_symmetry: bool = True,
) -> ProcessMap:
    """Propagate every |i><j| over ``inputs`` through the Lindblad dynamics.

    With ``use_symmetry`` only i <= j are integrated and the rest follow from
    image(|j><i|) = image(|i><j|)^dagger.
    """
    if gamma is not None:
        sp = replace(sp, gamma=gamma)
    if kappa is not None:
        sp = replace(sp, kappa=kappa)
    model = build_gate_model(sp, p, basis_mode, open_system=True, drives=drives)
    d = model.basis.dim
    idx = [model.basis.index(s) for s in inputs]
    n = len(idx)
    pairs = [(i, j) for i in range(n) for j in range(n) if (i <= j or not use_symmetry)]
    R0 = np.zeros((d * d, len(pairs)), dtype=complex)
    for col, (i, j) in enumerate(pairs):
        R0[idx[i] * d + idx[j], col] = 1.0
    R = propagate_operators(R0, model.hamiltonians, model.collapse, span or model.span, cfg)
    images = np.zeros((n, n, d, d), dtype=complex)
    for col, (i, j) in enumerate(pairs):
        images[i, j] = R[:, col].reshape(d, d)
        if use_symmetry and i != j:
            images[j, i] = images[i, j].conj().T
    traces = np.real(np.einsum("iiaa->i", images))
    drift = np.max(np.abs(traces - 1.0))
    if drift > DRIFT_TOLERANCE:
        raise IntegratorAccuracyError(f"trace drift {drift:.3e} exceeds {DRIFT_TOLERANCE}; reduce dt")
    return ProcessMap(model.basis, tuple(inputs), images)
