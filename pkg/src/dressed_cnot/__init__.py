"""Dressed-state shortcut CNOT gate between two atoms in fiber-coupled cavities."""
from .config import ScenarioConfig, SweepSpec
from .dynamics import IntegratorConfig, build_gate_model, compute_process_map, compute_transfer_matrix
from .hamiltonians import SystemParams
from .metrics import average_fidelity_mixed, average_fidelity_pure, gate_fidelity, truth_table
from .pulses import PulseParams

__all__ = [
    "IntegratorConfig",
    "PulseParams",
    "ScenarioConfig",
    "SweepSpec",
    "SystemParams",
    "average_fidelity_mixed",
    "average_fidelity_pure",
    "build_gate_model",
    "compute_process_map",
    "compute_transfer_matrix",
    "gate_fidelity",
    "truth_table",
]
