"""Zero-energy modes of the 2D Dirac operator in graphene under magnetic
fields with constant asymptotics, with a honeycomb tight-binding check."""

__version__ = "0.1.0"

from .errors import ConfigError, CoverageError, DimensionError, RegimeError, SolverError, ZeroModeError
from .field import (
    PHI0,
    Bump,
    FieldProfile,
    FluxReport,
    GaugePotential,
    Grid,
    ScalarPotential,
    gauge_from_lambda,
    solve_lambda,
    total_flux,
    verify_curl,
)
from .modes import (
    K,
    KPRIME,
    SpinorField,
    ZeroMode,
    build_mode,
    count_modes_compact_flux,
    count_modes_constant_asymptotics,
    dirac_residual,
    gram_matrix,
    mode_certificates,
    norm_squared,
    normalizable,
    overlap,
    valley_pair_state,
)
from .lattice import (
    HoneycombPatch,
    SparseHamiltonian,
    SpectrumResult,
    build_patch,
    chiral_index,
    near_zero_spectrum,
    peierls_hamiltonian,
    robustness_sweep,
    sublattice_polarization,
)
from .config import ScenarioConfig, parse_config
from .pipeline import RunReport, run_pipeline
