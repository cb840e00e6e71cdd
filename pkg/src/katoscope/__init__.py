"""Occupation-norm analysis of Schrodinger potentials on model geometries.

The package measures how much weight a potential accumulates along heat flow
started from the worst point of a space, classifies potentials by the
small-time decay of that quantity, and cross-checks the deterministic
machinery against Monte Carlo paths and a spectral reference on circles.
"""

__version__ = "0.1.0"

from .geometry import (
    ClosedBall,
    ConformalCircle,
    Euclidean,
    FiniteUnionOfBalls,
    GeometryError,
    Hyperbolic,
    Model,
    Point,
    Sphere,
    Torus,
    WholeSpace,
    circle_chart,
    unit_ball_volume,
    volume_doubling_check,
)
from .heatkernel import hk_eval, hk_mass, ck_residual, gaussian_bound_fit
from .potentials import (
    Bump,
    Constant,
    LogSingularity,
    Potential,
    PotentialError,
    PowerSingularity,
    Sum,
    Truncated,
    classical_kato_test_euclidean,
    mollify,
    negative_part,
    positive_part,
    scale,
    sup_norm,
)
from .dynkin import (
    DoublingExponent,
    DynkinEstimate,
    KatoVerdict,
    TimePowerBound,
    doubling_exponent_from_crossing,
    doubling_kernel_chain_check,
    dynkin_norm,
    holder_bound,
    kato_detect,
    l1_lower_check,
    localized_norm,
    metric_comparability,
    mollification_convergence,
    resolvent_sandwich,
    ricci_doubling_exponent,
    time_subadditivity_check,
)
from .stochastics import (
    ExitTimeEstimate,
    KhasminskiiCheck,
    LocalizationMC,
    MCEstimate,
    PathSample,
    exit_time_mean,
    exp_difference_bound,
    fk_expectation,
    fk_functional,
    first_times,
    khasminskii_bound,
    khasminskii_check,
    localization_mc,
    mc_dynkin_norm,
    sample_endpoints,
    sample_path,
)
from .schrodinger import (
    KatoDecomposablePotential,
    SemigroupField,
    SpectralOracle,
    continuity_probe,
    exhaustion_convergence,
    fk_semigroup,
    kato_decompose,
    spectral_field,
    spectral_oracle,
)
from .config import ConfigError, Scenario, emit_config, parse_config
from .report import Report, emit_report, load_report, new_report

__all__ = [name for name in dir() if not name.startswith("_")]
