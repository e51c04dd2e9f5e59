"""Finite checks of shearing, the circle property and eq-extensions over
generalized indiscernible sequences indexed by ordered structures."""

from .circle import (
    CircleWitness,
    check_circle_witness,
    circle_to_shearing,
    search_circle_witness,
    shearing_to_circle,
    strong_pairwise,
)
from .eq_extension import ClosureReport, EqExtension, build_eq_extension, closure, find_indistinguishable_pair
from .oracle import (
    Diagram,
    Literal,
    TheoryDescriptor,
    consistent,
    evaluate,
    minimal_inconsistent_subfamilies,
    realize_in_model,
)
from .relations import InvariantRelation
from .shearing import (
    Formula,
    Labeling,
    ShearingInstance,
    ShearingReport,
    build_demo_instance,
    build_unsuperstable_chain,
    check_labeling_coherence,
    check_shearing,
    derive_self_collision,
    instantiate_family,
    verify_chain,
)
from .structures import (
    ClassDescriptor,
    IndexModel,
    QfType,
    enumerate_realizations,
    extend_realizing,
    qf_type_of,
    realizable,
    validate_structure,
)

__version__ = "0.1.0"

__all__ = [
    "CircleWitness",
    "check_circle_witness",
    "circle_to_shearing",
    "search_circle_witness",
    "shearing_to_circle",
    "strong_pairwise",
    "ClosureReport",
    "EqExtension",
    "build_eq_extension",
    "closure",
    "find_indistinguishable_pair",
    "Diagram",
    "Literal",
    "TheoryDescriptor",
    "consistent",
    "evaluate",
    "minimal_inconsistent_subfamilies",
    "realize_in_model",
    "InvariantRelation",
    "Formula",
    "Labeling",
    "ShearingInstance",
    "ShearingReport",
    "build_demo_instance",
    "build_unsuperstable_chain",
    "check_labeling_coherence",
    "check_shearing",
    "derive_self_collision",
    "instantiate_family",
    "verify_chain",
    "ClassDescriptor",
    "IndexModel",
    "QfType",
    "enumerate_realizations",
    "extend_realizing",
    "qf_type_of",
    "realizable",
    "validate_structure",
]
