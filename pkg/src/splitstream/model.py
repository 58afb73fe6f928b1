"""Domain model for windowed stream operators on an edge-cloud topology.

An operator consumes raw samples from logical sensors (atomic) or the outputs
of other operators (composite), evaluates a window function every step, and
emits results at a fixed frequency. Sensors are wired to exactly one edge
node; operators are placed fractionally between edge and cloud by an offload
ratio decided elsewhere.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum, unique

SensorId = int
NodeId = int
OperatorId = int

# Absolute tolerance for offload-ratio domain and equality checks.
GAMMA_TOL = 1e-9
# Relative tolerance for latency and capacity comparisons.
REL_TOL = 1e-9


@unique
class FunctionKind(str, Enum):
    """Window functions the engine knows how to evaluate."""

    MEAN = "mean"
    MSQRT = "msqrt"
    MAX = "max"
    MIN = "min"
    FIRST = "first"
    LAST = "last"
    RANGE = "range"
    STD = "std"
    VAR = "var"
    COV = "cov"
    SPEED = "speed"
    ACC = "acc"
    DISP = "disp"
    CC = "cc"
    FILTER = "filter"
    TREND = "trend"
    SURGE = "surge"
    AVGWS = "avgws"
    AVGWA = "avgwa"
    GF = "gf"
    FWS = "fws"
    TI = "ti"
    AOA = "aoa"
    AWD = "awd"


@dataclass(frozen=True)
class OperatorSpec:
    """One stream operator.

    Atomic operators (empty deps) read sensor samples directly. Composite
    operators read the outputs of their dependencies; their listed sensors
    record which raw streams the pipeline is over.
    """

    id: OperatorId
    sensors: tuple[SensorId, ...]
    deps: tuple[OperatorId, ...]
    func: FunctionKind
    iterative: bool
    window_s: float
    step_s: float
    freq_s: float
    t_req_s: float | None = None

    @property
    def atomic(self) -> bool:
        return not self.deps


@dataclass(frozen=True)
class Topology:
    """Wiring of logical sensors to edge nodes (one node per sensor)."""

    sensor_node: dict[SensorId, NodeId]
    nodes: frozenset[NodeId]

    @classmethod
    def build(cls, sensor_node: dict[SensorId, NodeId]) -> "Topology":
        return cls(dict(sensor_node), frozenset(sensor_node.values()))


@dataclass(frozen=True)
class Workload:
    """A set of operators plus the sensor topology they run against."""

    operators: tuple[OperatorSpec, ...]
    sensors: frozenset[SensorId]
    topology: Topology
    by_id: dict[OperatorId, OperatorSpec] = field(repr=False, default_factory=dict)

    @classmethod
    def build(cls, operators: list[OperatorSpec], topology: Topology) -> "Workload":
        sensors = set(topology.sensor_node)
        for op in operators:
            sensors.update(op.sensors)
        return cls(
            operators=tuple(operators),
            sensors=frozenset(sensors),
            topology=topology,
            by_id={op.id: op for op in operators},
        )

    def operator(self, op_id: OperatorId) -> OperatorSpec:
        try:
            return self.by_id[op_id]
        except KeyError:
            raise KeyError(f"unknown operator id {op_id}") from None


# Violation categories reported by validate_workload.
V_CYCLE = "cycle"
V_DANGLING = "dangling-ref"
V_UNWIRED = "unwired-sensor"
V_NONPOSITIVE = "nonpositive-duration"


@dataclass(frozen=True)
class WorkloadViolation:
    category: str
    subject: int
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[WorkloadViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_workload(w: Workload) -> ValidationReport:
    """Structural checks: acyclic deps, resolvable references, wired sensors,
    positive durations. An empty report means the workload is usable."""
    out: list[WorkloadViolation] = []
    seen: set[OperatorId] = set()
    for op in w.operators:
        if op.id in seen:
            out.append(WorkloadViolation(V_DANGLING, op.id, "duplicate operator id"))
        seen.add(op.id)

    ids = set(w.by_id)
    for op in w.operators:
        for dep in op.deps:
            if dep not in ids:
                out.append(
                    WorkloadViolation(V_DANGLING, op.id, f"dep {dep} does not exist")
                )
        for s in op.sensors:
            if s not in w.topology.sensor_node:
                out.append(
                    WorkloadViolation(V_UNWIRED, s, f"sensor {s} of op {op.id} has no node")
                )
        for name, value in (
            ("window_s", op.window_s),
            ("step_s", op.step_s),
            ("freq_s", op.freq_s),
        ):
            if value <= 0:
                out.append(
                    WorkloadViolation(V_NONPOSITIVE, op.id, f"{name} = {value}")
                )
        if op.t_req_s is not None and op.t_req_s <= 0:
            out.append(
                WorkloadViolation(V_NONPOSITIVE, op.id, f"t_req_s = {op.t_req_s}")
            )

    out.extend(_find_cycles(w))
    return ValidationReport(tuple(out))


def _find_cycles(w: Workload) -> list[WorkloadViolation]:
    """One violation per dependency cycle, anchored at its smallest member."""
    color: dict[OperatorId, int] = {}  # 0 unvisited, 1 on stack, 2 done
    stack: list[OperatorId] = []
    cycles: list[tuple[OperatorId, ...]] = []

    def visit(u: OperatorId) -> None:
        color[u] = 1
        stack.append(u)
        for v in w.by_id[u].deps:
            if v not in w.by_id:
                continue
            c = color.get(v, 0)
            if c == 0:
                visit(v)
            elif c == 1:
                cycle = tuple(stack[stack.index(v):])
                cycles.append(cycle)
        stack.pop()
        color[u] = 2

    for op in w.operators:
        if color.get(op.id, 0) == 0:
            visit(op.id)

    out = []
    reported: set[frozenset[OperatorId]] = set()
    for cycle in cycles:
        key = frozenset(cycle)
        if key in reported:
            continue
        reported.add(key)
        members = ",".join(str(i) for i in sorted(cycle))
        out.append(WorkloadViolation(V_CYCLE, min(cycle), f"cycle through {members}"))
    return out


def topological_order(w: Workload) -> list[OperatorId]:
    """Evaluation order: every atomic operator first (ascending id), then
    composites once all their deps are placed, ties broken by ascending id.

    Raises ValueError on cycles or dangling deps; run validate_workload first
    for a full diagnosis.
    """
    indeg: dict[OperatorId, int] = {}
    consumers: dict[OperatorId, list[OperatorId]] = {op.id: [] for op in w.operators}
    for op in w.operators:
        indeg[op.id] = 0
        for dep in op.deps:
            if dep not in w.by_id:
                raise ValueError(f"operator {op.id} depends on unknown operator {dep}")
    for op in w.operators:
        for dep in op.deps:
            indeg[op.id] += 1
            consumers[dep].append(op.id)

    # Key (composite?, id) keeps atomics strictly ahead of composites.
    ready = [(0 if w.by_id[i].atomic else 1, i) for i, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order: list[OperatorId] = []
    while ready:
        _, u = heapq.heappop(ready)
        order.append(u)
        for v in consumers[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, (0 if w.by_id[v].atomic else 1, v))
    if len(order) != len(w.operators):
        missing = sorted(set(w.by_id) - set(order))
        raise ValueError(f"dependency cycle involving operators {missing}")
    return order


def sensor_clusters(w: Workload) -> list[tuple[OperatorId, ...]]:
    """Partition operators into groups linked by shared sensors or deps.

    Offload decisions interact only inside a group (sensor-level ratios are
    maxima over co-consumers; composite ratios derive from deps), so each
    group can be searched independently when node capacity is not contended.
    Clusters are ordered by smallest member; members ascend.
    """
    parent: dict[OperatorId, OperatorId] = {op.id: op.id for op in w.operators}

    def find(x: OperatorId) -> OperatorId:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: OperatorId, b: OperatorId) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    first_user: dict[SensorId, OperatorId] = {}
    for op in w.operators:
        for s in op.sensors:
            if s in first_user:
                union(op.id, first_user[s])
            else:
                first_user[s] = op.id
        for dep in op.deps:
            if dep in parent:
                union(op.id, dep)

    groups: dict[OperatorId, list[OperatorId]] = {}
    for op in w.operators:
        groups.setdefault(find(op.id), []).append(op.id)
    return [tuple(sorted(g)) for _, g in sorted(groups.items())]


def transitive_sensors(w: Workload, op_id: OperatorId) -> frozenset[SensorId]:
    """All sensors reachable through op's dependency closure, own included."""
    seen: set[OperatorId] = set()
    sensors: set[SensorId] = set()
    stack = [op_id]
    while stack:
        u = stack.pop()
        if u in seen or u not in w.by_id:
            continue
        seen.add(u)
        op = w.by_id[u]
        sensors.update(op.sensors)
        stack.extend(op.deps)
    return frozenset(sensors)
