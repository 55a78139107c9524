"""quenchbound: numerical certification of entanglement-spreading bounds
after local quenches on finite quantum spin lattices.
"""

from .bounds import (
    BoundConstants,
    EnsembleLetter,
    QuenchEnsemble,
    RegimeError,
    area_law_envelope,
    bound_constants,
    certify_area_law,
    certify_holevo,
    certify_lemma1,
    certify_theorem,
    holevo_capacity,
    lemma1_constants,
    lemma1_rhs,
    theorem_constants,
    theorem_rhs,
)
from .decay import (
    DecayFunction,
    LRConstants,
    c_mu,
    check_lr_bound,
    f_norm,
    lr_commutator_rhs,
    lr_constants,
    lr_velocity,
    phi_norm,
)
from .lattice import (
    GrowthConstants,
    LatticeGraph,
    ShellDecomposition,
    boundary_and_interior,
    distance_matrix,
    enlargement,
    fit_growth_constants,
    phi_boundary,
    region_distance,
    shell_decomposition,
    shell_set,
    sphere,
    verify_shell_cover,
)
from .quantum import (
    Interaction,
    ProductSpace,
    Propagator,
    alicki_rhs,
    audenaert_rhs,
    binary_entropy,
    build_hamiltonian,
    conditional_entropy,
    embed_operator,
    evolve,
    partial_trace,
    telescoping_entropy,
    trace_norm,
    von_neumann_entropy,
)
from .quench import (
    EntropyProfile,
    QuenchScenario,
    all_down_state,
    entanglement_profile,
    entropy_variation,
    heisenberg,
    on_site_field,
    reduced_distance,
    transverse_field_ising,
)
from .report import CertificationReport, GridPoint, MARGIN_TOLERANCE

__version__ = "0.1.0"
