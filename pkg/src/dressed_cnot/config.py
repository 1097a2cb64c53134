"""Scenario and sweep configuration, loaded from one JSON document."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .dynamics import BASIS_MODES, IntegratorConfig
from .hamiltonians import SystemParams
from .pulses import REG_CENTERS, PulseParams


@dataclass(frozen=True)
class ScenarioConfig:
    """All run parameters in units of Omega0 = 1 (times in 1/Omega0)."""

    omega0: float = 1.0
    tf: float = 20.0
    tau: float = 2.0
    t0: float = 2.0
    g: float = 10.0
    nu: float = 10.0
    gamma: float = 0.0
    kappa: float = 0.0
    kappa_f: float | None = None
    N_max: int = 1
    dt: float = 1e-3
    N_grid: int = 16
    reg_center: str = "as_written"
    basis_mode: str = "closure"
    record_stride: int = 50
    output_dir: str = "out"

    def __post_init__(self):
        if self.omega0 != 1.0:
            raise ValueError("omega0 is the unit of frequency and must be 1.0")
        reg = self.reg_center.replace("-", "_")
        if reg not in REG_CENTERS:
            raise ValueError(f"reg_center must be one of {REG_CENTERS}, got {self.reg_center!r}")
        object.__setattr__(self, "reg_center", reg)
        if self.basis_mode not in BASIS_MODES:
            raise ValueError(f"basis_mode must be one of {BASIS_MODES}, got {self.basis_mode!r}")
        if self.N_grid < 1:
            raise ValueError("N_grid must be positive")
        # validate the derived objects eagerly
        self.system(), self.pulse(), self.integrator()

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        with open(path) as fh:
            data = json.load(fh)
        data.pop("sweep", None)
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def override(self, **changes) -> "ScenarioConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def system(self) -> SystemParams:
        return SystemParams(
            g=self.g, nu=self.nu, gamma=self.gamma, kappa=self.kappa, kappa_f=self.kappa_f, n_max=self.N_max
        )

    def pulse(self) -> PulseParams:
        return PulseParams(omega0=self.omega0, tf=self.tf, tau=self.tau, t0=self.t0, reg_center=self.reg_center)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(dt=self.dt, record_stride=self.record_stride)


def _default_axis() -> tuple[float, ...]:
    return tuple(float(v) for v in np.linspace(0.0, 0.1, 11))


@dataclass(frozen=True)
class SweepSpec:
    gamma_axis: tuple[float, ...] = field(default_factory=_default_axis)
    kappa_axis: tuple[float, ...] = field(default_factory=_default_axis)
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "gamma_axis", tuple(float(v) for v in self.gamma_axis))
        object.__setattr__(self, "kappa_axis", tuple(float(v) for v in self.kappa_axis))
        for name in ("gamma_axis", "kappa_axis"):
            axis = getattr(self, name)
            if not axis:
                raise ValueError(f"{name} must not be empty")
            if any(v < 0 or not np.isfinite(v) for v in axis):
                raise ValueError(f"{name} values must be finite and non-negative")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @classmethod
    def load(cls, path: str | Path) -> "SweepSpec":
        with open(path) as fh:
            data = json.load(fh)
        return cls(**data.get("sweep", {}))

    def points(self) -> list[tuple[int, int, float, float]]:
        return [
            (i, j, gam, kap)
            for i, gam in enumerate(self.gamma_axis)
            for j, kap in enumerate(self.kappa_axis)
        ]
