"""Energy teleportation on critical Ising chains: simulator and closed-form checks."""

from .analytics import AnalyticConfig, delta, eb_closed_form, fit_c, residual_energy_analytic
from .chain import ChainSpec, build_energy_density, build_hamiltonian, calibrated_chain
from .cooling import CoolingResult, LocalChannel, minimize_residual, random_channel
from .eigensolver import EigenResult, expectation, ground_state
from .pauli import HermitianOperator, PauliString
from .protocol import (
    AxisSweepResult,
    MeasurementSetup,
    MixedEnsemble,
    ProtocolResult,
    axis_sweep,
    run_protocol,
)

__all__ = [
    "AnalyticConfig",
    "AxisSweepResult",
    "ChainSpec",
    "CoolingResult",
    "EigenResult",
    "HermitianOperator",
    "LocalChannel",
    "MeasurementSetup",
    "MixedEnsemble",
    "PauliString",
    "ProtocolResult",
    "axis_sweep",
    "build_energy_density",
    "build_hamiltonian",
    "calibrated_chain",
    "delta",
    "eb_closed_form",
    "expectation",
    "fit_c",
    "ground_state",
    "minimize_residual",
    "random_channel",
    "residual_energy_analytic",
    "run_protocol",
]

__version__ = "0.1.0"
