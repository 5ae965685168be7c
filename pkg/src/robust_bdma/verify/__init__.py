"""Independent verification of robust beamforming solutions."""
from .lmi import (
    EVE_CONSTRAINT,
    USER_CONSTRAINT,
    ConstraintCheck,
    FeasibilityReport,
    LmiBlock,
    build_x_matrices,
    check_lmi_feasibility,
    lmi_block,
    maximize_margin,
    schur_path_feasible,
)
from .structure import (
    KktReport,
    RankReport,
    VerificationError,
    check_rank_structure,
    check_solution_rank,
    eve_constraint_residual,
    kkt_residuals,
    orthogonal_complement_basis,
    p2_constraint,
    p2_power_oracle,
    solution_ranks,
)
from .worst_case import (
    WorstCase,
    is_aligned,
    robust_quadratic_margin,
    trust_region_min,
    worst_case_eve_sinr,
    worst_case_user_sinr,
)
