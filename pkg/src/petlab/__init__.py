"""petlab: PET induction and joint ergodicity of polynomial multiple averages.

Exact symbolic machinery (rational lattices, vdC differencing, coefficient
tracking, characteristic-factor descriptors, torus-rotation ergodicity tests)
plus desk-scale numerical verification of the convergence statements.
"""

from .exactmath import (
    Lattice,
    Rat,
    is_finite_index,
    lattice_contains,
    lattice_member,
    lattice_sum,
    qvec,
    saturate,
    zero_lattice,
)
from .factors import (
    INFINITY,
    Certificate,
    LinearStage,
    SeminormDescriptor,
    analyze_target,
    certificate,
    extract_linear,
    group_at,
    r_lattice_view,
    seminorm_descriptor,
    span_H,
    thmT2_R,
)
from .petcore import (
    FINISHED,
    CoeffSet,
    FSlot,
    PetError,
    PetTerminalError,
    PetTuple,
    coeff_set,
    dimension_increment,
    equiv_sets,
    family_tuple,
    k_reduction,
    lesssim,
    run_pet,
    select_rho,
    vdc_step,
    weight,
    weight_less,
)
from .polyalg import VPoly
from .simulate import (
    NumericBinding,
    PhasePoly,
    convergence_probe,
    exp_sum,
    multi_average_norm,
)
from .systems import (
    SymPhase,
    TorusSystem,
    check_t1,
    check_t2,
    eigenvalue_phase,
    product_polynomial_ergodic,
    subgroup_action_ergodic,
    uniform_for,
)

__version__ = "0.1.0"
