"""policymap: compile zone-level network policy onto device interfaces.

The pipeline: parse a GraphML topology, derive the zone-conduit model,
compute every valid device path between every zone pair by semiring
matrix closure, then place policy rules on concrete (device, interface,
direction) triples or audit an existing placement against the intent.
"""

from .algebra import (
    EPSILON,
    INVALID,
    ONE,
    ZERO,
    DevicePath,
    DirectedDevice,
    PathSet,
    PhysicalDevice,
    concat_path,
    concat_sets,
    union_sets,
)
from .closure import (
    brute_force_paths,
    check_convergence,
    identity_matrix,
    iterate,
    matrix_product,
    matrix_union,
    right_iterate,
)
from .mapper import (
    AssignmentClass,
    DeviceAssignment,
    Direction,
    DirectionConvention,
    MeasurementStrategy,
    VerificationReport,
    map_policy,
    verify_assignments,
)
from .policy import (
    ANY_SERVICES,
    EMPTY_SERVICES,
    UNBOUNDED,
    MeasurementValue,
    PolicyContext,
    PolicyDocument,
    PolicyRule,
    QosValue,
    SecurityValue,
    ServiceSet,
    compose_parallel,
    compose_serial,
    derive_end_to_end,
    parse_policy,
)
from .topology import (
    NetworkTopology,
    PathMatrix,
    Zone,
    ZoneConduitModel,
    adjacency_matrix,
    build_model,
    parse_topology,
    transitivity_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "EPSILON",
    "INVALID",
    "ONE",
    "ZERO",
    "DevicePath",
    "DirectedDevice",
    "PathSet",
    "PhysicalDevice",
    "concat_path",
    "concat_sets",
    "union_sets",
    "brute_force_paths",
    "check_convergence",
    "identity_matrix",
    "iterate",
    "matrix_product",
    "matrix_union",
    "right_iterate",
    "AssignmentClass",
    "DeviceAssignment",
    "Direction",
    "DirectionConvention",
    "MeasurementStrategy",
    "VerificationReport",
    "map_policy",
    "verify_assignments",
    "ANY_SERVICES",
    "EMPTY_SERVICES",
    "UNBOUNDED",
    "MeasurementValue",
    "PolicyContext",
    "PolicyDocument",
    "PolicyRule",
    "QosValue",
    "SecurityValue",
    "ServiceSet",
    "compose_parallel",
    "compose_serial",
    "derive_end_to_end",
    "parse_policy",
    "NetworkTopology",
    "PathMatrix",
    "Zone",
    "ZoneConduitModel",
    "adjacency_matrix",
    "build_model",
    "parse_topology",
    "transitivity_matrix",
]
