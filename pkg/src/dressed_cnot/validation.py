"""
Self-consistency checks behind the ``validate`` command.

Each check takes a :class:`ScenarioConfig` and returns a :class:`CheckResult`;
none of them raise on a numerical failure, so a report always covers every
check.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .config import ScenarioConfig
from .dynamics import (
    build_gate_model,
    compute_transfer_matrix,
    evolve_density,
    evolve_state,
    propagate_states,
)
from .hamiltonians import PHI, build_zeno_effective
from .hilbert import LOGICAL_KETS, DensityOperator, StateVector, build_full_basis, embedding
from .metrics import average_fidelity_pure, gate_fidelity
from .pulses import (
    correction_gains,
    gz_literal,
    mu,
    regularizer,
    step_window,
    theta_dot,
    theta_omega,
)

XI_TOL = 1e-6
GZ_TOL = 1e-12
GZ_LITERAL_TOL = 1e-6
THETA_TOL = 1e-8
MU_TOL = 1e-3
ZENO_TOL = 0.02
CLOSURE_TOL = 1e-10
LINDBLAD_TOL = 1e-6
DT_TOL = 1e-6
QUADRATURE_TOL = 1e-12


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.detail} (value={self.value:.3e}, tol={self.tolerance:.1e})"


def _result(name, value, tol, detail="") -> CheckResult:
    value = float(value)
    return CheckResult(name, bool(np.isfinite(value) and value <= tol), value, tol, detail)


def _closed(cfg: ScenarioConfig) -> ScenarioConfig:
    return replace(cfg, gamma=0.0, kappa=0.0, kappa_f=0.0)


def check_xi_decoupling(cfg: ScenarioConfig) -> CheckResult:
    p = cfg.pulse()
    s = np.linspace(0.0, p.tf, 3000)
    worst = np.max(np.abs(correction_gains(s, p).xi))
    return _result("xi_decoupling", worst, XI_TOL, "max |xi(s)| on 3000 points")


def check_gz_identity(cfg: ScenarioConfig) -> CheckResult:
    p = cfg.pulse()
    s = np.linspace(0.0, p.tf, 3000)
    gains = correction_gains(s, p)
    worst = np.max(np.abs(gains.g_z - regularizer(s, p) / p.tau))
    # the unsimplified form only where it is well conditioned (theta_dot not ~0)
    ok = np.abs(theta_dot(s, p)) > 1e-3
    literal = np.max(np.abs(gz_literal(s[ok], p) - gains.g_z[ok]) / np.maximum(1.0, np.abs(gains.g_z[ok])))
    return CheckResult(
        "gz_identity", bool(worst <= GZ_TOL and literal <= GZ_LITERAL_TOL), float(worst), GZ_TOL,
        f"literal form relative gap {literal:.1e} (tol {GZ_LITERAL_TOL:.0e})",
    )


def check_boundary_conditions(cfg: ScenarioConfig) -> CheckResult:
    p = cfg.pulse()
    th0, _ = theta_omega(0.0, p)
    th1, _ = theta_omega(p.tf, p)
    m0, m1 = abs(float(mu(0.0, p))), abs(float(mu(p.tf, p)))
    scaled = max(th0 / THETA_TOL, abs(th1 - np.pi / 2) / THETA_TOL, m0 / MU_TOL, m1 / MU_TOL)
    return CheckResult(
        "boundary_conditions", bool(scaled <= 1.0), float(scaled), 1.0,
        f"theta(0)={float(th0):.1e}, pi/2-theta(tf)={float(np.pi / 2 - th1):.1e}, |mu(0)|={m0:.1e}, |mu(tf)|={m1:.1e}",
    )


def step1_transfer(cfg: ScenarioConfig) -> tuple[float, float]:
    """Population moved phi3 -> phi9 over step 1: (full model, three-level Zeno model)."""
    c = _closed(cfg)
    sp, p = c.system(), c.pulse()
    model = build_gate_model(sp, p, c.basis_mode)
    window = step_window(1, p)
    x = propagate_states(model.basis.vector(PHI[3]), model.step(1), window, c.integrator())
    full = abs(x[model.basis.index(PHI[9])]) ** 2
    zeno = build_zeno_effective(p, sp)
    z = propagate_states(np.array([1.0, 0.0, 0.0], dtype=complex), zeno.as_hamiltonian(), window, c.integrator())
    return float(full), float(abs(z[1]) ** 2)


def check_zeno_model(cfg: ScenarioConfig) -> CheckResult:
    try:
        full, zeno = step1_transfer(cfg)
    except ValueError as exc:
        return CheckResult("zeno_model", False, float("nan"), ZENO_TOL, str(exc))
    return _result("zeno_model", abs(full - zeno), ZENO_TOL, f"step-1 transfer full={full:.6f} zeno={zeno:.6f}")


def closure_deviation(cfg: ScenarioConfig) -> float:
    """Largest amplitude gap between closure-basis and full-basis closed trajectories."""
    c = _closed(cfg)
    sp, p, icfg = c.system(), c.pulse(), c.integrator()
    samples = {}
    for mode in ("full", "closure"):
        model = build_gate_model(sp, p, mode)
        emb = embedding(model.basis, build_full_basis(sp.n_max))
        idx = [model.basis.index(s) for s in LOGICAL_KETS]
        X0 = np.zeros((model.basis.dim, len(idx)), dtype=complex)
        X0[idx, np.arange(len(idx))] = 1.0
        rows = []
        propagate_states(X0, model.hamiltonians, model.span, icfg, lambda t, X: rows.append(emb @ X))
        samples[mode] = np.array(rows)
    return float(np.max(np.abs(samples["full"] - samples["closure"])))


def check_closure_equivalence(cfg: ScenarioConfig) -> CheckResult:
    return _result("closure_equivalence", closure_deviation(cfg), CLOSURE_TOL, "closure vs full basis, closed system")


def lindblad_deviation(cfg: ScenarioConfig, label: str = "g0g1|000") -> float:
    """Trace distance between zero-rate Lindblad and Schrodinger evolution of one ket."""
    c = _closed(cfg)
    sp, p, icfg = c.system(), c.pulse(), c.integrator()
    model = build_gate_model(sp, p, c.basis_mode, open_system=True)
    psi, _ = evolve_state(StateVector.from_label(model.basis, label), model.hamiltonians, model.span, icfg, track=[])
    rho, _ = evolve_density(
        DensityOperator.from_label(model.basis, label), model.hamiltonians, model.collapse, model.span, icfg, track=[]
    )
    return rho.trace_distance(psi.density())


def check_lindblad_vs_schrodinger(cfg: ScenarioConfig) -> CheckResult:
    return _result("lindblad_vs_schrodinger", lindblad_deviation(cfg), LINDBLAD_TOL, "zero rates, input g0g1|000")


def check_dt_halving(cfg: ScenarioConfig) -> CheckResult:
    sp, p = cfg.system(), cfg.pulse()
    coarse = gate_fidelity(sp, p, cfg.integrator(), cfg.N_grid, cfg.basis_mode).value
    fine = gate_fidelity(sp, p, replace(cfg.integrator(), dt=cfg.dt / 2), cfg.N_grid, cfg.basis_mode).value
    return _result("dt_halving", abs(coarse - fine), DT_TOL, f"F(dt)={coarse:.9f} F(dt/2)={fine:.9f}")


def check_quadrature_exactness(cfg: ScenarioConfig) -> CheckResult:
    c = _closed(cfg)
    M = compute_transfer_matrix(c.system(), c.pulse(), c.integrator(), c.basis_mode)
    gaps = [
        abs(average_fidelity_pure(M, stage, 9).value - average_fidelity_pure(M, stage, 64).value)
        for stage in ("whole", "step1", "step2", "step3")
    ]
    return _result("quadrature_exactness", max(gaps), QUADRATURE_TOL, "N_grid 9 vs 64")


CHECKS: tuple[Callable[[ScenarioConfig], CheckResult], ...] = (
    check_xi_decoupling,
    check_gz_identity,
    check_boundary_conditions,
    check_zeno_model,
    check_closure_equivalence,
    check_lindblad_vs_schrodinger,
    check_dt_halving,
    check_quadrature_exactness,
)


def run_validation(cfg: ScenarioConfig, checks=CHECKS) -> list[CheckResult]:
    """Run every check; an exception inside a check is reported as its failure."""
    results = []
    for check in checks:
        try:
            results.append(check(cfg))
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            name = check.__name__.removeprefix("check_")
            results.append(CheckResult(name, False, float("nan"), float("nan"), f"{type(exc).__name__}: {exc}"))
    return results
