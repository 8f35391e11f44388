"""Spectral Schrodinger laboratory on the torus.

Band-limited fields, exact mode-wise Duhamel propagation, equal-mass dyadic
time decompositions with certified geometric error bounds, potential and
Lipschitz fixed-point solvers, and concentration-measure diagnostics.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .ck_decomposition import (
    CertificateReport,
    DyadicPartition,
    MassProfile,
    SquareBlock,
    block_fields,
    certify,
    dyadic_breakpoints,
    mass_profile,
    partition_to_csv,
    squares,
    truncated_sum,
)
from .measure_lab import (
    DataFamily,
    SpaceTimeMeasure,
    ac_proxy_report,
    concentration_density,
    energy_quadrature,
    make_family,
    validate_ac_report,
    weak_star_pairing,
)
from .nls_solver import (
    LipschitzNonlinearity,
    PicardNonConvergence,
    global_solve,
    lipschitz_integral,
    make_nonlinearity,
    nls_source,
    picard_solve,
    subdivide,
    validate_lipschitz,
)
from .potential_evolution import (
    BoundedPotential,
    GronwallReport,
    apply_potential,
    evolve_with_potential,
    gronwall_certificate,
    induced_source,
    multiplication_potential,
    operator_potential,
    piece_norm_bounds,
)
from .propagator import (
    StepSource,
    Trajectory,
    duhamel_solution,
    duhamel_source_transform,
    free_evolve,
    sample_trajectory,
)
from .torus_field import (
    FourierField,
    SpatialSamples,
    evaluate_on_grid,
    field_from_json,
    field_from_samples,
    field_to_json,
    from_coefficients,
    l2_norm,
    linear_combination,
    zero_field,
)

__version__ = "0.1.0"
