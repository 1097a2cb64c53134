"""
Atom-cavity-fiber coupling, step drive Hamiltonians, collapse operators and
the quantum Zeno reductions used as validation oracles.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sps

from .errors import InvalidStepError, UnsupportedConfigurationError
from .hilbert import (
    AtomLevel,
    BasisSet,
    BasisState,
    OperatorMatrix,
    build_atomic_op,
    build_full_basis,
    build_mode_op,
    dagger,
    embedding,
    ket,
)
from .pulses import STEP_TRANSITIONS, PulseParams, mu, step_pulses, step_window, theta_omega

ATOMS = ("A", "B")
DECAY_TARGETS = (AtomLevel.a, AtomLevel.g1, AtomLevel.g2, AtomLevel.g0)

# Labels of the kets spanning the single-excitation step-1 dynamics.
PHI = {
    1: "g1g1|000",
    2: "g1g2|000",
    3: "g0g1|000",
    4: "g0g2|000",
    5: "g1e|000",
    6: "g0e|000",
    7: "g1a|000",
    8: "g1g0|001",
    9: "g0a|000",
    10: "g0g0|001",
    11: "g1g0|010",
    12: "g0g0|010",
    13: "g1g0|100",
    14: "g0g0|100",
    15: "eg0|000",
}


@dataclass(frozen=True)
class SystemParams:
    """Couplings and decay rates in units of Omega0.

    ``gamma`` is the total spontaneous emission rate of each atom; it is
    split evenly over the four ground levels. ``kappa_f=None`` means the
    fiber leaks at the cavity rate ``kappa``.
    """

    g: float = 10.0
    nu: float = 10.0
    gamma: float = 0.0
    kappa: float = 0.0
    kappa_f: float | None = None
    n_max: int = 1

    def __post_init__(self):
        if self.g <= 0 or self.nu <= 0:
            raise ValueError("g and nu must be positive")
        if self.gamma < 0 or self.kappa < 0 or (self.kappa_f is not None and self.kappa_f < 0):
            raise ValueError("decay rates must be non-negative")

    @property
    def fiber_rate(self) -> float:
        return self.kappa if self.kappa_f is None else self.kappa_f


@dataclass(frozen=True)
class DriveChannel:
    """Real coefficient c(t) multiplying (coupling + coupling^dagger)."""

    coefficient: Callable[[np.ndarray], np.ndarray]
    coupling: OperatorMatrix
    name: str = ""


@dataclass(frozen=True)
class TimeDependentHamiltonian:
    static: OperatorMatrix
    channels: tuple[DriveChannel, ...] = ()
    window: tuple[float, float] | None = None
    basis: BasisSet | None = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        return self.static.shape[0]

    def hermitian_channels(self) -> list[OperatorMatrix]:
        return [(c.coupling + dagger(c.coupling)).tocsr() for c in self.channels]

    def coefficients(self, t) -> np.ndarray:
        """Channel coefficients, shape (n_channels, len(t))."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if not self.channels:
            return np.zeros((0, t.size))
        return np.vstack([np.broadcast_to(c.coefficient(t), t.shape) for c in self.channels])

    def at(self, t: float) -> OperatorMatrix:
        h = self.static.copy()
        coeffs = self.coefficients([t])[:, 0]
        for c, op in zip(coeffs, self.hermitian_channels()):
            h = h + c * op
        return h.tocsr()

    def without_drives(self) -> "TimeDependentHamiltonian":
        return TimeDependentHamiltonian(self.static, (), self.window, self.basis)


def build_H_acf(sp: SystemParams, basis: BasisSet) -> OperatorMatrix:
    """Resonant atom-cavity couplings of both atoms plus cavity-fiber hopping.

    Operator products are formed on the full product basis and then
    restricted, so reduced bases get the projection of the full coupling.
    """
    if basis.n_max != sp.n_max:
        raise ValueError(f"basis truncation {basis.n_max} does not match n_max={sp.n_max}")
    full = build_full_basis(basis.n_max)
    b = build_mode_op("fiber", full)
    h = sps.csr_matrix((full.dim, full.dim), dtype=complex)
    for atom, mode in (("A", "cavA"), ("B", "cavB")):
        a = build_mode_op(mode, full)
        sigma = build_atomic_op(atom, AtomLevel.e, AtomLevel.g0, full)
        h = h + sp.g * (a @ sigma) + sp.nu * (b @ dagger(a))
    h = (h + dagger(h)).tocsr()
    if basis == full:
        return h
    emb = embedding(basis, full)
    return (emb.T @ h @ emb).tocsr()


def step_couplings(k: int, basis: BasisSet) -> tuple[OperatorMatrix, OperatorMatrix]:
    """|e>_B<first| and |e>_B<second| for the two drives of step ``k``."""
    if k not in STEP_TRANSITIONS:
        raise InvalidStepError(f"step must be 1, 2 or 3, got {k!r}")
    return tuple(
        build_atomic_op("B", AtomLevel.e, AtomLevel[lower], basis) for lower in STEP_TRANSITIONS[k]
    )


def build_step_hamiltonian(
    k: int, sp: SystemParams, p: PulseParams, basis: BasisSet, drives: bool = True
) -> TimeDependentHamiltonian:
    window = step_window(k, p)
    static = build_H_acf(sp, basis)
    if not drives:
        return TimeDependentHamiltonian(static, (), window, basis)
    first, second = step_couplings(k, basis)
    lo1, lo2 = STEP_TRANSITIONS[k]
    channels = (
        DriveChannel(lambda t, k=k: step_pulses(t, k, p)[0], first, f"e<->{lo1}"),
        DriveChannel(lambda t, k=k: step_pulses(t, k, p)[1], second, f"e<->{lo2}"),
    )
    return TimeDependentHamiltonian(static, channels, window, basis)


def build_collapse_ops(sp: SystemParams, basis: BasisSet) -> list[OperatorMatrix]:
    """Eight atomic decay branches (rate gamma/4 each) then cavity A, cavity B, fiber."""
    ops = []
    branch = np.sqrt(sp.gamma / 4.0)
    for atom in ATOMS:
        for k in DECAY_TARGETS:
            ops.append((branch * build_atomic_op(atom, k, AtomLevel.e, basis)).tocsr())
    ops.append((np.sqrt(sp.kappa) * build_mode_op("cavA", basis)).tocsr())
    ops.append((np.sqrt(sp.kappa) * build_mode_op("cavB", basis)).tocsr())
    ops.append((np.sqrt(sp.fiber_rate) * build_mode_op("fiber", basis)).tocsr())
    return ops


def dissipation_channels(basis: BasisSet) -> list[OperatorMatrix]:
    """Unit-rate jump operators; the structure of every possible collapse channel."""
    return build_collapse_ops(SystemParams(gamma=4.0, kappa=1.0, n_max=basis.n_max), basis)


def dark_weights(sp: SystemParams) -> tuple[float, float, float]:
    """Weights of |phi6>, |phi12>, |phi15> in the cavity-fiber dark state."""
    norm = np.sqrt(2 * sp.nu**2 + sp.g**2)
    return sp.nu / norm, -sp.g / norm, sp.nu / norm


def zeno_states(sp: SystemParams, basis: BasisSet) -> dict[str, np.ndarray]:
    """The seven dark kets of H_acf spanning the Zeno subspace, keyed phi1..phi9, phid."""
    out = {f"phi{i}": basis.vector(PHI[i]) for i in (1, 2, 3, 4, 7, 9)}
    w6, w12, w15 = dark_weights(sp)
    out["phid"] = w6 * basis.vector(PHI[6]) + w12 * basis.vector(PHI[12]) + w15 * basis.vector(PHI[15])
    return out


def zeno_projectors(sp: SystemParams, basis: BasisSet) -> list[OperatorMatrix]:
    if not np.isclose(sp.nu, sp.g):
        raise UnsupportedConfigurationError("the Zeno subspace is set up for nu == g")
    projs = []
    for v in zeno_states(sp, basis).values():
        col = sps.csr_matrix(v.reshape(-1, 1))
        projs.append((col @ col.conj().T).tocsr())
    return projs


ZENO_LABELS = ("phi3", "phi9", "phid")


@dataclass(frozen=True)
class ZenoModel:
    """Three-level model on (phi3, phi9, phid) with real couplings omega1(t), omega2(t).

    H(t) = omega1 (|phid><phi3| + h.c.) + omega2 (|phid><phi9| + h.c.).
    """

    omega1: Callable[[np.ndarray], np.ndarray]
    omega2: Callable[[np.ndarray], np.ndarray]
    window: tuple[float, float] | None = None

    @staticmethod
    def couplings() -> tuple[OperatorMatrix, OperatorMatrix]:
        c1 = sps.csr_matrix(([1.0 + 0j], ([2], [0])), shape=(3, 3))
        c2 = sps.csr_matrix(([1.0 + 0j], ([2], [1])), shape=(3, 3))
        return c1, c2

    def hamiltonian(self, t: float) -> np.ndarray:
        return self.as_hamiltonian().at(t).toarray()

    def as_hamiltonian(self) -> TimeDependentHamiltonian:
        c1, c2 = self.couplings()
        return TimeDependentHamiltonian(
            sps.csr_matrix((3, 3), dtype=complex),
            (DriveChannel(self.omega1, c1, "phi3<->phid"), DriveChannel(self.omega2, c2, "phi9<->phid")),
            self.window,
        )


def build_zeno_effective(p: PulseParams, sp: SystemParams) -> ZenoModel:
    """Step-1 Zeno model: applied drives scaled by the phid overlap 1/sqrt(3)."""
    if not np.isclose(sp.nu, sp.g):
        raise UnsupportedConfigurationError("the three-level Zeno model requires nu == g")
    w = dark_weights(sp)[0]
    return ZenoModel(
        lambda t: w * step_pulses(t, 1, p)[0],
        lambda t: w * step_pulses(t, 1, p)[1],
        step_window(1, p),
    )


def dressed_dark_state(s, p: PulseParams) -> np.ndarray:
    """Dressed dark state amplitudes on (phi3, phi9, phid)."""
    theta, _ = theta_omega(s, p)
    m = mu(s, p)
    return np.array(
        [np.cos(m) * np.cos(theta), np.cos(m) * np.sin(theta), 1j * np.sin(m)], dtype=complex
    )


def hamiltonian_terms(k: int, sp: SystemParams, basis: BasisSet) -> list[OperatorMatrix]:
    """Structural terms of the step-k Hamiltonian and their adjoints, for closure searches."""
    h_acf = build_H_acf(sp, basis)
    terms = [h_acf]
    for op in step_couplings(k, basis):
        terms += [op, dagger(op)]
    return terms


def phi(i: int) -> BasisState:
    return ket(PHI[i])


def zeno_leakage(states: np.ndarray, sp: SystemParams, basis: BasisSet) -> np.ndarray:
    """1 - population inside the seven-state Zeno subspace, per column of ``states``."""
    vecs = np.array(list(zeno_states(sp, basis).values()))
    overlaps = vecs.conj() @ states
    return 1.0 - np.sum(np.abs(overlaps) ** 2, axis=0)

