"""
Hilbert space of two five-level atoms, two cavity modes and one fiber mode.

Product kets are written ``<atomA><atomB>|<nA><nF><nB>``, e.g. ``g0g1|000``
is atom A in g0, atom B in g1 and all three bosonic modes empty. Operators
are ``scipy.sparse.csr_matrix`` instances over a :class:`BasisSet`; any
image that falls outside the basis (photon truncation, reduced closure
bases) is dropped, i.e. operators are projected onto the basis span.
"""
from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sps

from .errors import InvalidTruncationError, LabelParseError

MAX_TRUNCATION = 3

OperatorMatrix = sps.csr_matrix


class AtomLevel(IntEnum):
    """Atomic levels, in basis ordering. ``e`` is the only excited level."""

    a = 0
    g1 = 1
    g2 = 2
    g0 = 3
    e = 4

    @property
    def label(self) -> str:
        return self.name

    @classmethod
    def parse(cls, text: str) -> "AtomLevel":
        try:
            return cls[text]
        except KeyError:
            raise LabelParseError(f"unknown atomic level {text!r}") from None


class BasisState(NamedTuple):
    atom_a: AtomLevel
    atom_b: AtomLevel
    n_a: int = 0
    n_f: int = 0
    n_b: int = 0

    @property
    def label(self) -> str:
        return f"{self.atom_a.label}{self.atom_b.label}|{self.n_a}{self.n_f}{self.n_b}"

    @classmethod
    def parse(cls, label: str) -> "BasisState":
        """Parse ``"g0g1|000"``; the photon part defaults to vacuum if omitted."""
        text = label.strip()
        atoms, _, photons = text.partition("|")
        match = re.fullmatch(r"(g[0-2]|a|e)(g[0-2]|a|e)", atoms)
        if match is None:
            raise LabelParseError(f"cannot parse ket label {label!r}")
        photons = photons or "000"
        if not re.fullmatch(r"\d\d\d", photons):
            raise LabelParseError(f"cannot parse photon numbers in {label!r}")
        return cls(
            AtomLevel.parse(match.group(1)),
            AtomLevel.parse(match.group(2)),
            int(photons[0]),
            int(photons[1]),
            int(photons[2]),
        )

    def __str__(self) -> str:
        return self.label


def ket(label: str) -> BasisState:
    return BasisState.parse(label)


# Encoding |00>,|01>,|10>,|11> = |g1g1>,|g1g2>,|g0g1>,|g0g2> with photonic vacuum.
COMPUTATIONAL_KETS: tuple[BasisState, ...] = tuple(
    ket(s) for s in ("g1g1|000", "g1g2|000", "g0g1|000", "g0g2|000")
)
# Computational kets plus the auxiliary |g0 a> used between steps.
LOGICAL_KETS: tuple[BasisState, ...] = COMPUTATIONAL_KETS + (ket("g0a|000"),)


@dataclass(frozen=True)
class BasisSet:
    states: tuple[BasisState, ...]
    n_max: int
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {s: i for i, s in enumerate(self.states)}
        if len(index) != len(self.states):
            raise ValueError("basis contains duplicate states")
        for s in self.states:
            if not all(0 <= n <= self.n_max for n in (s.n_a, s.n_f, s.n_b)):
                raise InvalidTruncationError(f"{s.label} exceeds truncation {self.n_max}")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[BasisState]:
        return iter(self.states)

    def __contains__(self, state) -> bool:
        return state in self._index

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.states]

    def index(self, state: BasisState | str) -> int:
        if isinstance(state, str):
            state = BasisState.parse(state)
        try:
            return self._index[state]
        except KeyError:
            raise LabelParseError(f"{state.label} is not in this basis") from None

    def lookup(self, i: int) -> BasisState:
        return self.states[i]

    def vector(self, state: BasisState | str) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(state)] = 1.0
        return v


def build_full_basis(n_max: int = 1) -> BasisSet:
    """Full product basis, lexicographic in (atomA, atomB, nA, nF, nB)."""
    if not isinstance(n_max, (int, np.integer)) or n_max < 1 or n_max > MAX_TRUNCATION:
        raise InvalidTruncationError(f"photon truncation must be in [1, {MAX_TRUNCATION}], got {n_max!r}")
    photons = range(n_max + 1)
    states = tuple(
        BasisState(la, lb, na, nf, nb)
        for la, lb, na, nf, nb in itertools.product(AtomLevel, AtomLevel, photons, photons, photons)
    )
    return BasisSet(states, int(n_max))


def _from_map(basis: BasisSet, image) -> OperatorMatrix:
    # image(state) -> iterable of (new_state, amplitude)
    rows, cols, vals = [], [], []
    for j, s in enumerate(basis.states):
        for new, amp in image(s):
            i = basis._index.get(new)
            if i is not None:
                rows.append(i)
                cols.append(j)
                vals.append(amp)
    # coo -> csr sums duplicate entries
    return sps.coo_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)), shape=(basis.dim, basis.dim)
    ).tocsr()


def build_atomic_op(atom: str, upper: AtomLevel, lower: AtomLevel, basis: BasisSet) -> OperatorMatrix:
    """|upper><lower| on atom ``"A"`` or ``"B"``, identity on everything else."""
    upper, lower = AtomLevel(upper), AtomLevel(lower)
    if atom not in ("A", "B"):
        raise ValueError(f"atom must be 'A' or 'B', got {atom!r}")
    slot = 0 if atom == "A" else 1

    def image(s: BasisState):
        if s[slot] == lower:
            yield s._replace(**{("atom_a", "atom_b")[slot]: upper}), 1.0

    return _from_map(basis, image)


_MODE_FIELDS = {"cavA": "n_a", "fiber": "n_f", "cavB": "n_b"}


def build_mode_op(mode: str, basis: BasisSet) -> OperatorMatrix:
    """Truncated annihilation operator of ``cavA``, ``fiber`` or ``cavB``."""
    try:
        name = _MODE_FIELDS[mode]
    except KeyError:
        raise ValueError(f"mode must be one of {sorted(_MODE_FIELDS)}, got {mode!r}") from None

    def image(s: BasisState):
        n = getattr(s, name)
        if n > 0:
            yield s._replace(**{name: n - 1}), np.sqrt(n)

    return _from_map(basis, image)


def reachable_closure(
    seeds: Sequence[BasisState | str],
    generators: Iterable[OperatorMatrix],
    basis: BasisSet,
) -> BasisSet:
    """Smallest subset of ``basis`` containing the seeds and closed under the generators.

    States are ordered by breadth-first discovery; within one expansion,
    newly found states are taken in full-basis index order, and seeds are
    sorted by index so the result does not depend on their order.
    """
    if not seeds:
        raise ValueError("reachable_closure needs at least one seed state")
    gens = [sps.csc_matrix(g) for g in generators]
    start = sorted({basis.index(s) for s in seeds})
    seen = set(start)
    order = list(start)
    queue = deque(start)
    while queue:
        j = queue.popleft()
        found = set()
        for g in gens:
            lo, hi = g.indptr[j], g.indptr[j + 1]
            rows = g.indices[lo:hi][np.abs(g.data[lo:hi]) > 0]
            found.update(int(r) for r in rows)
        for i in sorted(found - seen):
            seen.add(i)
            order.append(i)
            queue.append(i)
    return BasisSet(tuple(basis.states[i] for i in order), basis.n_max)


def embedding(sub: BasisSet, parent: BasisSet) -> OperatorMatrix:
    """Isometry mapping ``sub`` amplitudes into ``parent`` (shape parent.dim x sub.dim)."""
    rows = [parent.index(s) for s in sub.states]
    return sps.csr_matrix(
        (np.ones(sub.dim), (rows, np.arange(sub.dim))), shape=(parent.dim, sub.dim)
    )


def dagger(op: OperatorMatrix) -> OperatorMatrix:
    return op.conj().T.tocsr()


@dataclass(frozen=True)
class StateVector:
    basis: BasisSet
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dim,):
            raise ValueError(f"amplitude length {amps.shape} does not match basis size {self.basis.dim}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_label(cls, basis: BasisSet, label: BasisState | str) -> "StateVector":
        return cls(basis, basis.vector(label))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_physical(self, eps: float = 1e-6) -> bool:
        return abs(self.norm - 1.0) <= eps

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def population(self, state: BasisState | str) -> float:
        return float(abs(self.amplitudes[self.basis.index(state)]) ** 2)

    def density(self) -> "DensityOperator":
        a = self.amplitudes
        return DensityOperator(self.basis, np.outer(a, a.conj()))


@dataclass(frozen=True)
class DensityOperator:
    basis: BasisSet
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(f"density shape {m.shape} does not match basis size {self.basis.dim}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_label(cls, basis: BasisSet, label: BasisState | str) -> "DensityOperator":
        return StateVector.from_label(basis, label).density()

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))[0])

    def is_physical(self, eps: float = 1e-6) -> bool:
        return self.hermiticity_error() <= 1e-9 and abs(self.trace - 1.0) <= eps

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix))

    def population(self, state: BasisState | str) -> float:
        i = self.basis.index(state)
        return float(np.real(self.matrix[i, i]))

    def trace_distance(self, other: "DensityOperator") -> float:
        return 0.5 * float(np.sum(np.linalg.svd(self.matrix - other.matrix, compute_uv=False)))
