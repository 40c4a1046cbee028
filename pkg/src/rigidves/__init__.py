"""Arithmetic uniformization of rigid variable elliptic structures.

Fiber-algebra arithmetic, the transport and Poincare disk pictures, the
canonical coordinate xi = y - lambda*x with its characteristic Jacobian,
the Burgers-transform structure solver, the reduction of rigid
variable-structure Vekua problems to standard form, and a
finite-difference harness that verifies each identity at desk scale.
"""

from .grids import (
    ComplexGridField,
    GridSpec,
    convergence_order,
    max_norm,
    partial_x,
    partial_y,
    rms_norm,
    wirtinger,
)
from .structures import (
    AffineLambdaStructure,
    ConstantStructure,
    DeltaFamilyStructure,
    EllipticStructure,
    SampledStructure,
    structure_from_json,
)
from .algebra import (
    AlgebraElement,
    AlgebraSection,
    alg_conj,
    alg_inv,
    alg_mul,
    alg_norm,
    cr_apply,
    homogeneity_check,
    leibniz_residual,
    obstruction_field,
)
from .spectral import (
    SpectralField,
    divergence_form_residual,
    intertwining_residual,
    lambda_from_structure,
    structure_from_lambda,
    transport,
    transport_residual,
    untransport,
)
from .poincare import (
    BeltramiField,
    cayley,
    cayley_inv,
    cr_beltrami_residual,
    self_dilatation_residual,
    xi_disk_form,
)
from .canonical import (
    CanonicalChart,
    build_chart,
    injectivity_scan,
    invert_xi,
    jacobian_check,
    phi_burgers_form,
    phi_factored,
    StructureProvider,
)
from .burgers import BurgersSolution, burgers_field, burgers_solve_point
from .seedlang import (
    ExprSeed,
    Seed,
    eval_seed,
    eval_seed_dual,
    make_builtin_seed,
    parse_seed,
    print_expr,
)
from .vekua import (
    PassengerField,
    ReducedVekua,
    VekuaProblem,
    coefficient_bound_report,
    manufacture,
    passenger_axis_identity,
    reduce_problem,
    reduced_residual,
    wirtinger_in_xi,
)

__version__ = "0.1.0"
