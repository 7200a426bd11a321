"""Pulsed ESR spectrometer simulator.

Bismuth donors in silicon coupled to a superconducting microresonator:
spin Hamiltonian and transitions, strip magnetostatics and coupling
distributions, mean-field ensemble dynamics through pulse sequences, and a
quantum-limited detection chain with matched-filter sensitivity figures.
"""

__version__ = "0.1.0"

from .detection import (
    MatchedFilter,
    NoiseModel,
    amplify,
    cpmg_snr_gain,
    nmin,
    nmin_critical_coupling,
    snr_lorentzian_echo,
    snr_matched_filter,
    snr_vs_gain,
)
from .distributions import FrequencyDistribution
from .ensemble import (
    CavityParams,
    EnsembleState,
    SolverConfig,
    SubEnsemble,
    analytic_echo,
    analytic_sminus,
    cooperativity,
    discretize_ensemble,
    integrate,
)
from .errors import (
    AmbiguousCrossingError,
    ConfigError,
    CrossingNotFoundError,
    EsrSimError,
    FieldDomainError,
    FitFailureError,
    InvalidInputError,
    SolverFailureError,
)
from .field_geometry import (
    CouplingDistribution,
    ImplantationProfile,
    StripGeometry,
    coupling_constant,
    coupling_distribution,
    current_density,
    vacuum_current,
    vacuum_field,
)
from .pulses import AcquisitionWindow, DriveSegment, IdealRotation, PulseSequence
from .sequences import (
    EchoObservables,
    build_sequence,
    calibrate_pi_amplitude,
    echo_area,
    field_sweep,
    fit_decay,
    integrate_phase_cycled,
)
from .spin_model import (
    EnergyLevels,
    SpinSystem,
    Transition,
    build_hamiltonian,
    eigensystem,
    find_crossing_field,
    fit_hyperfine_constant,
    transition_table,
)
from .trace import TimeTrace
