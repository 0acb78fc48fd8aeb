"""Finite nilspaces, fibrations, translations and nilspace systems.

The main entry points are re-exported here; see the submodules for the rest.
"""
from .grp import Group, cyclic
from .maps import (
    NilMap,
    Partition,
    diagonal,
    find_isomorphism,
    is_fibration,
    is_morphism,
    is_translation,
    product_map,
    tran_group,
)
from .nilspace import (
    Nilspace,
    build_dk,
    build_power,
    build_product,
    build_quotient,
    build_sub,
    factor,
    point_space,
    step,
    structure_group,
    verify_axioms,
)
from .dynamics import NilspaceSystem, ProductMetric, fiber_diameters, induced_translation, is_consistent
from .refine import (
    coarsest_fibration_factor,
    common_refinement,
    consistent_tower,
    delta_fibration,
    fiber_product,
    h_consistent_refinement,
    ker_witness,
)
from .report import (
    InputError,
    InternalConsistencyError,
    NilspaceError,
    NotConsistent,
    Report,
    ResourceError,
    StructureError,
)

__all__ = [
    "Group",
    "InputError",
    "InternalConsistencyError",
    "NilMap",
    "Nilspace",
    "NilspaceError",
    "NilspaceSystem",
    "NotConsistent",
    "Partition",
    "ProductMetric",
    "Report",
    "ResourceError",
    "StructureError",
    "build_dk",
    "build_power",
    "build_product",
    "build_quotient",
    "build_sub",
    "coarsest_fibration_factor",
    "common_refinement",
    "consistent_tower",
    "cyclic",
    "delta_fibration",
    "diagonal",
    "factor",
    "fiber_diameters",
    "fiber_product",
    "find_isomorphism",
    "h_consistent_refinement",
    "induced_translation",
    "is_consistent",
    "is_fibration",
    "is_morphism",
    "is_translation",
    "ker_witness",
    "point_space",
    "product_map",
    "step",
    "structure_group",
    "tran_group",
    "verify_axioms",
]

__version__ = "0.1.0"
