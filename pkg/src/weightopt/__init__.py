"""weightopt: bang-bang minimization of the principal Dirichlet eigenvalue
λ₁(m) of -Δu = λ m u over rearrangement classes of bounded weights, with
the rearrangement calculus and Steiner symmetrization checks behind it."""

from .eig import (
    EigenPair,
    NoConvergence,
    WeightNotPositiveAnywhere,
    assemble_stiffness,
    principal_positive_eigenvalue,
    rayleigh,
)
from .grid import (
    GridDomain,
    ScalarField,
    VerticalAxis,
    from_mask,
    make_box,
    make_ellipse,
    make_rectangle,
    measure,
    reflect_field,
    transpose_field,
    transposed,
)
from .optimize import (
    BangBangWeight,
    DescentError,
    InfeasibleClassError,
    MismatchedClassesError,
    OptimizeReport,
    compare_split_vs_merged,
    decompose,
    is_fixed_point,
    optimize_single,
    optimize_two,
    rearrangement_step,
)
from .rearrange import (
    MeasureMismatchError,
    ResourceClass,
    StepProfile,
    comonotone,
    decreasing_rearrangement,
    equimeasurable,
    hl_inner,
    hl_pairing,
    in_closure,
    pair_family,
    precedes,
    scale_class_generator,
)
from .steiner import (
    AxisSection,
    SteinerAxisError,
    SymmetrizationReport,
    check_ps_hl,
    row_sections,
    symmetrize_function,
    symmetrize_set,
    symmetry_defect,
)

__version__ = "0.1.0"

__all__ = [
    "AxisSection",
    "BangBangWeight",
    "DescentError",
    "EigenPair",
    "GridDomain",
    "InfeasibleClassError",
    "MeasureMismatchError",
    "MismatchedClassesError",
    "NoConvergence",
    "OptimizeReport",
    "ResourceClass",
    "ScalarField",
    "SteinerAxisError",
    "StepProfile",
    "SymmetrizationReport",
    "VerticalAxis",
    "WeightNotPositiveAnywhere",
    "assemble_stiffness",
    "check_ps_hl",
    "comonotone",
    "compare_split_vs_merged",
    "decompose",
    "decreasing_rearrangement",
    "equimeasurable",
    "from_mask",
    "hl_inner",
    "hl_pairing",
    "in_closure",
    "is_fixed_point",
    "make_box",
    "make_ellipse",
    "make_rectangle",
    "measure",
    "optimize_single",
    "optimize_two",
    "pair_family",
    "precedes",
    "principal_positive_eigenvalue",
    "rayleigh",
    "rearrangement_step",
    "reflect_field",
    "row_sections",
    "scale_class_generator",
    "symmetrize_function",
    "symmetrize_set",
    "symmetry_defect",
    "transpose_field",
    "transposed",
]
