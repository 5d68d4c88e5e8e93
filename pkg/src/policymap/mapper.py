"""Placing rules on device interfaces and auditing existing placements.

Mapping: a rule between two zones is placed on the directed devices that
occur in the valid paths between them.  Security rules go on every device
of every path (defence in depth: any single device failure leaves the
policy enforced).  Measurement rules go on every device or, with the
``first`` strategy, on the first device of each path only.  QoS rules are
replicated with the full bandwidth on every device of every path, a
conservative over-provision since splitting a guarantee across paths has
no canonical ratio.

Each placement is one (device, interface, direction) assignment.  By
default a directed device receives its rule inbound on the ingress
interface; the egress-outbound convention is equivalent, since either one
filters source-to-destination traffic at that device, and auditing
accepts both.

Auditing classifies every existing assignment against the computed paths
for its rule's zone pair:

* incorrect-firewall: the device occurs in no path (no interface of it
  could realize the filtering);
* incorrect-interface: the device occurs, but the interface is not an
  ingress or egress of any of its occurrences;
* incorrect-direction: device and interface match an occurrence, but the
  (interface, direction) pair does not filter source-to-destination
  traffic;
* correct otherwise.

The audit also re-derives the end-to-end policy each zone pair actually
implements and compares it with the intended rule value.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

from .algebra import DirectedDevice
from .errors import ContextMismatch, UnreachablePair
from .policy import (
    EMPTY_SERVICES,
    MeasurementValue,
    PolicyContext,
    PolicyRule,
    PolicyValue,
    QosValue,
    SecurityValue,
    compose_parallel,
    derive_end_to_end,
)
from .topology import PathMatrix, ZoneConduitModel


class Direction(str, Enum):
    INBOUND = "inbound"
    OUTBOUND = "outbound"


class DirectionConvention(str, Enum):
    INGRESS_INBOUND = "ingress-inbound"
    EGRESS_OUTBOUND = "egress-outbound"


class MeasurementStrategy(str, Enum):
    ALL = "all"
    FIRST = "first"


class AssignmentClass(str, Enum):
    CORRECT = "correct"
    INCORRECT_FIREWALL = "incorrect_firewall"
    INCORRECT_INTERFACE = "incorrect_interface"
    INCORRECT_DIRECTION = "incorrect_direction"


ERROR_CLASSES = (
    AssignmentClass.INCORRECT_FIREWALL,
    AssignmentClass.INCORRECT_INTERFACE,
    AssignmentClass.INCORRECT_DIRECTION,
)


@dataclass(frozen=True)
class DeviceAssignment:
    """One rule placed on a (device, interface, direction) triple."""

    device_id: str
    interface: str
    direction: Direction
    rule: PolicyRule

    def sort_key(self):
        return (
            self.rule.context.value,
            self.rule.src,
            self.rule.dst,
            self.device_id,
            self.interface,
            self.direction.value,
        )


@dataclass(frozen=True)
class AssignmentFinding:
    assignment: DeviceAssignment
    classification: AssignmentClass


@dataclass(frozen=True)
class PolicyDelta:
    """A zone pair whose implemented policy violates the intended one."""

    src: str
    dst: str
    context: PolicyContext
    intended: PolicyValue
    derived: PolicyValue


@dataclass(frozen=True)
class VerificationReport:
    findings: tuple[AssignmentFinding, ...]
    deltas: tuple[PolicyDelta, ...]
    # QoS pairs implemented above the intended guarantee (informational).
    overprovisioned: tuple[PolicyDelta, ...] = ()

    @property
    def counts(self) -> dict[str, int]:
        out = {cls.value: 0 for cls in AssignmentClass}
        for finding in self.findings:
            out[finding.classification.value] += 1
        return out

    @property
    def error_count(self) -> int:
        counts = self.counts
        return sum(counts[cls.value] for cls in ERROR_CLASSES)

    @property
    def clean(self) -> bool:
        return self.error_count == 0 and not self.deltas


def path_devices(astar: PathMatrix, i: int, j: int) -> frozenset[DirectedDevice]:
    """Every directed-device occurrence across the valid paths from i to j."""
    out = set()
    for path in astar.cell(i, j):
        out.update(path.steps)
    return frozenset(out)


def _placement(dev: DirectedDevice, convention: DirectionConvention) -> tuple[str, Direction]:
    if convention is DirectionConvention.INGRESS_INBOUND:
        return dev.ingress_interface, Direction.INBOUND
    return dev.egress_interface, Direction.OUTBOUND


def assignments_for_rule(
    rule: PolicyRule,
    astar: PathMatrix,
    model: ZoneConduitModel,
    convention: DirectionConvention = DirectionConvention.INGRESS_INBOUND,
    measurement_strategy: MeasurementStrategy = MeasurementStrategy.ALL,
) -> list[DeviceAssignment]:
    """Assignments implementing one rule; raises UnreachablePair if impossible."""
    i = model.zone_index(rule.src)
    j = model.zone_index(rule.dst)
    paths = astar.cell(i, j)
    if not paths:
        raise UnreachablePair(rule.src, rule.dst, rule.context.value)

    if rule.context is PolicyContext.MEASUREMENT and (
        measurement_strategy is MeasurementStrategy.FIRST
    ):
        targets: Iterable[DirectedDevice] = {
            path.steps[0] for path in paths if path.steps
        }
    else:
        targets = path_devices(astar, i, j)

    placed = {(dev.device_id, *_placement(dev, convention)) for dev in targets}
    assignments = [
        DeviceAssignment(device_id, interface, direction, rule)
        for device_id, interface, direction in placed
    ]
    assignments.sort(key=DeviceAssignment.sort_key)
    return assignments


def map_policy(
    ctx: PolicyContext,
    rules: Sequence[PolicyRule],
    astar: PathMatrix,
    model: ZoneConduitModel,
    convention: DirectionConvention = DirectionConvention.INGRESS_INBOUND,
    measurement_strategy: MeasurementStrategy = MeasurementStrategy.ALL,
) -> list[DeviceAssignment]:
    """Map every rule of one context onto concrete device assignments."""
    out: list[DeviceAssignment] = []
    for rule in rules:
        if rule.context is not ctx:
            raise ContextMismatch(
                f"{rule.context.value} rule passed to {ctx.value} mapping"
            )
        out.extend(
            assignments_for_rule(rule, astar, model, convention, measurement_strategy)
        )
    out.sort(key=DeviceAssignment.sort_key)
    return out


def _realizations(occurrences: frozenset[DirectedDevice], device_id: str):
    """(interface, direction) pairs that filter the pair's traffic at a device."""
    out = set()
    for dev in occurrences:
        if dev.device_id != device_id:
            continue
        out.add((dev.ingress_interface, Direction.INBOUND))
        out.add((dev.egress_interface, Direction.OUTBOUND))
    return out


def classify_assignment(
    assignment: DeviceAssignment, occurrences: frozenset[DirectedDevice]
) -> AssignmentClass:
    devices = {dev.device_id for dev in occurrences}
    if assignment.device_id not in devices:
        return AssignmentClass.INCORRECT_FIREWALL
    interfaces = set()
    for dev in occurrences:
        if dev.device_id == assignment.device_id:
            interfaces.update((dev.ingress_interface, dev.egress_interface))
    if assignment.interface not in interfaces:
        return AssignmentClass.INCORRECT_INTERFACE
    if (assignment.interface, assignment.direction) not in _realizations(
        occurrences, assignment.device_id
    ):
        return AssignmentClass.INCORRECT_DIRECTION
    return AssignmentClass.CORRECT


def verify_assignments(
    ctx: PolicyContext,
    rules: Sequence[PolicyRule],
    astar: PathMatrix,
    model: ZoneConduitModel,
    existing: Sequence[DeviceAssignment],
) -> VerificationReport:
    """Audit existing assignments of one context against the intended rules."""
    intended: dict[tuple[str, str], PolicyRule] = {}
    for rule in rules:
        if rule.context is not ctx:
            raise ContextMismatch(
                f"{rule.context.value} rule passed to {ctx.value} verification"
            )
        intended[(rule.src, rule.dst)] = rule

    by_pair: dict[tuple[str, str], list[DeviceAssignment]] = {}
    for assignment in existing:
        if assignment.rule.context is not ctx:
            raise ContextMismatch(
                f"{assignment.rule.context.value} assignment passed to "
                f"{ctx.value} verification"
            )
        by_pair.setdefault((assignment.rule.src, assignment.rule.dst), []).append(
            assignment
        )

    pairs = sorted(set(intended) | set(by_pair))
    occurrence_cache: dict[tuple[str, str], frozenset[DirectedDevice]] = {}
    for src, dst in pairs:
        i, j = model.zone_index(src), model.zone_index(dst)
        occurrence_cache[(src, dst)] = path_devices(astar, i, j)

    findings = []
    for assignment in existing:
        pair = (assignment.rule.src, assignment.rule.dst)
        findings.append(
            AssignmentFinding(
                assignment, classify_assignment(assignment, occurrence_cache[pair])
            )
        )

    deltas = []
    overprovisioned = []
    default = _absent_device_default(ctx)
    for src, dst in pairs:
        i, j = model.zone_index(src), model.zone_index(dst)
        paths = astar.cell(i, j)
        if not paths:
            # Unreachable pair: nothing flows, so nothing to compare; any
            # assignments here were already flagged incorrect-firewall.
            continue
        occurrences = occurrence_cache[(src, dst)]
        device_policies = {}
        for dev in occurrences:
            # An assignment gives this occurrence its value only if it sits
            # where this orientation's traffic actually crosses the device.
            realizers = {
                (dev.ingress_interface, Direction.INBOUND),
                (dev.egress_interface, Direction.OUTBOUND),
            }
            values: list[PolicyValue] = []
            for assignment in by_pair.get((src, dst), ()):
                if (
                    assignment.device_id == dev.device_id
                    and (assignment.interface, assignment.direction) in realizers
                    and assignment.rule.value not in values
                ):
                    values.append(assignment.rule.value)
            if values:
                device_policies[dev] = reduce(
                    lambda p, q: compose_parallel(ctx, p, q), values
                )
            else:
                device_policies[dev] = default

        derived = derive_end_to_end(ctx, device_policies, paths)
        rule = intended.get((src, dst))
        wanted = rule.value if rule is not None else default
        if ctx is PolicyContext.QOS:
            assert isinstance(derived, QosValue) and isinstance(wanted, QosValue)
            delta = PolicyDelta(src, dst, ctx, wanted, derived)
            if _qos_less(derived, wanted):
                deltas.append(delta)
            elif _qos_less(wanted, derived):
                overprovisioned.append(delta)
        elif derived != wanted:
            deltas.append(PolicyDelta(src, dst, ctx, wanted, derived))

    return VerificationReport(
        findings=tuple(findings),
        deltas=tuple(deltas),
        overprovisioned=tuple(overprovisioned),
    )


def _absent_device_default(ctx: PolicyContext) -> PolicyValue:
    """Value a device implements when nothing is assigned to it.

    A firewall with no rule denies everything, a collector with no rule
    captures nothing, a QoS device with no rule guarantees nothing.
    """
    if ctx is PolicyContext.SECURITY:
        return SecurityValue(EMPTY_SERVICES)
    if ctx is PolicyContext.MEASUREMENT:
        return MeasurementValue(EMPTY_SERVICES)
    return QosValue(Fraction(0), None)


def _qos_less(a: QosValue, b: QosValue) -> bool:
    from .policy import _Unbounded  # sentinel comparison only

    if isinstance(a.bandwidth, _Unbounded):
        return False
    if isinstance(b.bandwidth, _Unbounded):
        return True
    return a.bandwidth < b.bandwidth
