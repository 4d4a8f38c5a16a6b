"""Finite metric measure spaces, their invariants, and finite stand-ins for pyramids."""
from .core import (
    INF,
    Decision,
    ExtendedFiniteMmSpace,
    FiniteMmSpace,
    PointedSpace,
    WeightVector,
    atoms_generator,
    cycle_space,
    direct_sum,
    dissipation_space,
    gapped_sum,
    l1_distance,
    lipschitz_dominates,
    lipschitz_dominates_eps,
    lp_power,
    lp_product,
    mm_isomorphic,
    one_point,
    restrict_normalize,
    scale,
    two_point,
    wedge_sum,
)
from .distances import (
    MmIsoCertificate,
    box_distance_exact,
    box_upper_from_prokhorov,
    certify_mm_iso,
    distortion,
    find_mm_iso,
    max_coupling_mass,
)
from .errors import InvalidParameter, Refusal, ResourceLimit
from .invariants import (
    LipschitzFunction,
    covering_number,
    covering_number_flagged,
    eps_supporting_net,
    obs_diameter,
    partial_diameter,
    separation_distance,
)
from .measures import (
    MeasureOnSpace,
    convex_combination,
    prokhorov_flow,
    prokhorov_subset_oracle,
    pushforward,
    total_variation,
)
from .pyramids import (
    PyramidApprox,
    atoms_limit_of_scaling,
    cov_of_pyramid,
    decompose_extended,
    direct_sum_pyramids,
    measurement_sample,
    obsdiam_of_pyramid,
    rho_empirical,
    rho_upper,
    sep_of_pyramid,
)
from .results import Cert, CertifiedInterval, Flagged

__version__ = "0.1.0"
