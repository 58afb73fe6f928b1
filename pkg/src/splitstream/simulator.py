"""Trace-driven simulator for a placed operator graph.

The simulator replays synthetic sensor streams against an assignment and
accounts for every byte that crosses an edge uplink, so the analytic data
volumes can be cross-checked against a concrete packet trace. Three frame
kinds exist on the wire: RAW carries sensor samples streamed to the cloud
(the shared fraction of each sensor's stream, deduplicated across the
operators that consume it), INTERMEDIATE carries a serialized partial state
when an operator's window is split between edge and cloud, and RESULT
carries finished window values for operators that complete at the edge.

Modeling choices, kept deliberately simple and aligned with the analytic
cost model:

* Raw uplink is batched per second with a credit accumulator, so the number
  of samples shipped over the whole run is exact to within one sample of
  the configured fraction.
* Links have latency = bytes / bandwidth and no queueing; compute runs
  unqueued at each site. Cloud-to-edge delivery of finished values is not
  charged, mirroring the cost model's uplink-only accounting.
* Split windows are evaluated as a prefix/suffix split of the window's
  samples (edge aggregates the prefix share, the cloud folds in the rest),
  while the uplink traffic for the cloud share is modeled as the streamed
  sample fraction. Byte accounting follows the stream; values follow the
  split contract.
* Derived operators consume the emission series of their dependencies
  (latest closed window, held between closes). Their own compute is charged
  through the cloud-side result coefficient when any share runs in the
  cloud; edge-side compute on emission streams is treated as negligible.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .costs import Assignment, Profile, effective_t_req, le_with_tol, windows_in_horizon
from .functions import (
    DEFAULT_CONTEXT,
    FunctionContext,
    eval_function,
    is_splittable,
    merge,
    output_arity,
    partial_eval,
    state_length,
    state_to_vector,
)
from .model import (
    GAMMA_TOL,
    NodeId,
    OperatorId,
    SensorId,
    Workload,
    topological_order,
    transitive_sensors,
)

# ---------------------------------------------------------------------------
# Synthetic traces.


@dataclass(frozen=True)
class SignalSpec:
    """Sinusoid-plus-noise generator parameters for one sensor."""

    offset: float = 0.0
    amplitude: float = 1.0
    period_s: float = 120.0
    phase: float = 0.0
    noise_std: float = 0.1


@dataclass(frozen=True)
class StreamConfig:
    duration_s: float = 600.0
    sample_rate_hz: float = 10.0
    seed: int = 0
    signals: dict[SensorId, SignalSpec] = field(default_factory=dict)


@dataclass(frozen=True)
class Trace:
    """Aligned sample arrays per sensor; sample m lands at m / rate."""

    duration_s: float
    sample_rate_hz: float
    samples: dict[SensorId, np.ndarray]

    def times(self, sensor: SensorId) -> np.ndarray:
        n = len(self.samples[sensor])
        return np.arange(n, dtype=np.float64) / self.sample_rate_hz


def generate_trace(config: StreamConfig, sensors) -> Trace:
    """Deterministic per-sensor streams; each sensor is seeded independently
    so traces are stable under any sensor ordering."""
    n = int(round(config.duration_s * config.sample_rate_hz))
    t = np.arange(n, dtype=np.float64) / config.sample_rate_hz
    samples: dict[SensorId, np.ndarray] = {}
    for sid in sorted(sensors):
        rng = np.random.default_rng([config.seed, sid])
        spec = config.signals.get(sid)
        if spec is None:
            spec = SignalSpec(
                offset=rng.uniform(-5.0, 5.0),
                amplitude=rng.uniform(0.5, 3.0),
                period_s=rng.uniform(30.0, 900.0),
                phase=rng.uniform(0.0, 2.0 * math.pi),
                noise_std=rng.uniform(0.01, 0.3),
            )
        wave = spec.offset + spec.amplitude * np.sin(
            2.0 * math.pi * t / spec.period_s + spec.phase
        )
        samples[sid] = wave + rng.normal(0.0, spec.noise_std, n)
    return Trace(config.duration_s, config.sample_rate_hz, samples)


# ---------------------------------------------------------------------------
# Wire frames.

FRAME_HEADER = struct.Struct("<BIIII")
KIND_RAW = 0
KIND_INTERMEDIATE = 1
KIND_RESULT = 2
RAW_OP_SENTINEL = 0  # RAW frames carry no operator; kind disambiguates


@dataclass(frozen=True)
class Frame:
    kind: int
    op_id: int
    sensor_id: int
    window_idx: int
    payload: np.ndarray

    @property
    def wire_size(self) -> int:
        return FRAME_HEADER.size + 8 * len(self.payload)


def encode_frame(frame: Frame) -> bytes:
    payload = np.asarray(frame.payload, dtype="<f8")
    header = FRAME_HEADER.pack(
        frame.kind, frame.op_id, frame.sensor_id, frame.window_idx, len(payload)
    )
    return header + payload.tobytes()


def decode_frame(buf: bytes, offset: int = 0) -> tuple[Frame, int]:
    if offset + FRAME_HEADER.size > len(buf):
        raise ValueError("truncated frame header")
    kind, op_id, sensor_id, window_idx, count = FRAME_HEADER.unpack_from(buf, offset)
    start = offset + FRAME_HEADER.size
    end = start + 8 * count
    if end > len(buf):
        raise ValueError("truncated frame payload")
    payload = np.frombuffer(buf, dtype="<f8", count=count, offset=start).copy()
    return Frame(kind, op_id, sensor_id, window_idx, payload), end


# ---------------------------------------------------------------------------
# Reports.


@dataclass
class RawUplinkStats:
    sensor_id: SensorId
    node: NodeId
    share: float
    samples_sent: int = 0
    frames: int = 0
    payload_bytes: int = 0
    wire_bytes: int = 0


@dataclass
class OpSimStats:
    op_id: OperatorId
    gamma: float
    windows: int = 0
    emissions: int = 0
    int_frames: int = 0
    int_payload_bytes: int = 0
    res_frames: int = 0
    res_payload_bytes: int = 0
    latency_mean_s: float = 0.0
    latency_p50_s: float = 0.0
    latency_p95_s: float = 0.0
    latency_max_s: float = 0.0
    t_req_s: float | None = None
    t_req_violations: int = 0


@dataclass
class SimReport:
    duration_s: float
    sample_rate_hz: float
    per_op: dict[OperatorId, OpSimStats]
    per_sensor_raw: dict[SensorId, RawUplinkStats]
    raw_payload_bytes: int
    raw_wire_bytes: int
    int_payload_bytes: int
    int_wire_bytes: int
    res_payload_bytes: int
    res_wire_bytes: int
    warnings: list[str]
    frames: list[Frame] | None = None

    @property
    def total_payload_bytes(self) -> int:
        return self.raw_payload_bytes + self.int_payload_bytes + self.res_payload_bytes

    @property
    def total_wire_bytes(self) -> int:
        return self.raw_wire_bytes + self.int_wire_bytes + self.res_wire_bytes


def compare_runs(reports: list[SimReport], labels: list[str] | None = None) -> dict:
    """Side-by-side byte/latency comparison; percentages are computed
    against the first report. Operators absent from a report show None
    rather than zero."""
    if not reports:
        raise ValueError("nothing to compare")
    if labels is None:
        labels = [f"run-{i}" for i in range(len(reports))]
    if len(labels) != len(reports):
        raise ValueError("one label per report required")

    def reduction(base: float, other: float) -> float:
        return 100.0 * (1.0 - other / base) if base > 0 else 0.0

    base = reports[0]
    aggregate = {
        "payload_bytes": [r.total_payload_bytes for r in reports],
        "wire_bytes": [r.total_wire_bytes for r in reports],
        "payload_reduction_pct": [
            reduction(base.total_payload_bytes, r.total_payload_bytes) for r in reports
        ],
        "wire_reduction_pct": [
            reduction(base.total_wire_bytes, r.total_wire_bytes) for r in reports
        ],
        "t_req_violations": [
            sum(s.t_req_violations for s in r.per_op.values()) for r in reports
        ],
    }
    op_ids = sorted({op for r in reports for op in r.per_op})
    per_operator = {}
    for op in op_ids:
        rows = [r.per_op.get(op) for r in reports]
        per_operator[op] = {
            "payload_bytes": [
                (s.int_payload_bytes + s.res_payload_bytes) if s else None for s in rows
            ],
            "latency_mean_s": [s.latency_mean_s if s else None for s in rows],
            "t_req_violations": [s.t_req_violations if s else None for s in rows],
        }
    return {"labels": list(labels), "aggregate": aggregate, "per_operator": per_operator}


# ---------------------------------------------------------------------------
# Simulation internals.


@dataclass
class _OpSeries:
    """Per-operator emission series exposed to downstream consumers."""

    times: np.ndarray
    values: np.ndarray  # (n_emissions, arity)
    avail_edge: np.ndarray
    avail_cloud: np.ndarray
    arity: int


def _raw_uplink(trace: Trace, sensor: SensorId, share: float, node: NodeId,
                bandwidth: float, collect: bool) -> tuple[RawUplinkStats, np.ndarray, list[Frame]]:
    """Stream `share` of one sensor's samples cloudward in per-second
    batches. Returns the stats, a prefix-max arrival time per whole second
    (index s = batches 1..s landed), and frames when collected."""
    x = trace.samples[sensor]
    n = len(x)
    rate = trace.sample_rate_hz
    n_seconds = int(math.ceil(trace.duration_s - 1e-9))
    stats = RawUplinkStats(sensor, node, share)
    ready = np.zeros(n_seconds + 1, dtype=np.float64)
    frames: list[Frame] = []
    if share <= GAMMA_TOL or n == 0 or n_seconds == 0:
        return stats, ready, frames
    seconds = np.arange(1, n_seconds + 1, dtype=np.float64)
    cum_samples = np.minimum(n, np.ceil(seconds * rate - 1e-9)).astype(np.int64)
    cum_sent = np.floor(share * cum_samples + 1e-9).astype(np.int64)
    sends = np.diff(np.concatenate(([0], cum_sent)))
    wire = np.where(sends > 0, FRAME_HEADER.size + 8 * sends, 0)
    arrivals = np.where(sends > 0, seconds + wire / bandwidth, 0.0)
    ready[1:] = np.maximum.accumulate(arrivals)
    stats.samples_sent = int(cum_sent[-1])
    stats.frames = int(np.count_nonzero(sends))
    stats.payload_bytes = 8 * stats.samples_sent
    stats.wire_bytes = int(np.sum(wire))
    if collect:
        for s in range(1, n_seconds + 1):
            sent = int(sends[s - 1])
            if sent == 0:
                continue
            hi = int(cum_samples[s - 1])
            frames.append(Frame(KIND_RAW, RAW_OP_SENTINEL, sensor, s - 1, x[hi - sent:hi]))
    return stats, ready, frames


def _percentiles(latencies: list[float]) -> tuple[float, float, float, float]:
    if not latencies:
        return 0.0, 0.0, 0.0, 0.0
    arr = np.array(latencies, dtype=np.float64)
    return (
        float(arr.mean()),
        float(np.percentile(arr, 50)),
        float(np.percentile(arr, 95)),
        float(arr.max()),
    )


def run_sim(
    workload: Workload,
    profile: Profile,
    assignment: Assignment,
    trace: Trace,
    *,
    ctx: FunctionContext | None = None,
    collect_frames: bool = False,
) -> SimReport:
    """Replay the trace through the placed operator graph."""
    if ctx is None:
        ctx = FunctionContext(sample_rate_hz=trace.sample_rate_hz)
    missing = [j for j in workload.sensors if j not in trace.samples]
    if missing:
        raise ValueError(f"trace lacks sensors {sorted(missing)}")

    rate = trace.sample_rate_hz
    duration = trace.duration_s
    n_seconds = int(math.ceil(duration - 1e-9))
    warnings: list[str] = []
    frames: list[Frame] = [] if collect_frames else None

    # Shared raw uplink, one stream per sensor regardless of consumer count.
    raw_stats: dict[SensorId, RawUplinkStats] = {}
    raw_ready: dict[SensorId, np.ndarray] = {}
    for sid in sorted(workload.sensors):
        node = workload.topology.sensor_node[sid]
        share = assignment.gamma_sensor.get(sid, 0.0)
        stats, ready, raw_frames = _raw_uplink(
            trace, sid, share, node, profile.bandwidth[node], collect_frames
        )
        raw_stats[sid] = stats
        raw_ready[sid] = ready
        if frames is not None:
            frames.extend(raw_frames)

    def raw_ready_at(sensors, t_close: float) -> float:
        idx = min(n_seconds, int(math.ceil(t_close - 1e-9)))
        ready = 0.0
        for j in sensors:
            ready = max(ready, float(raw_ready[j][idx]))
        return ready

    per_op: dict[OperatorId, OpSimStats] = {}
    series: dict[OperatorId, _OpSeries] = {}
    int_payload = int_wire = res_payload = res_wire = 0

    for op_id in topological_order(workload):
        op = workload.operator(op_id)
        gamma = assignment.op_gamma(workload, op_id)
        at_edge = gamma <= GAMMA_TOL
        at_cloud = gamma >= 1.0 - GAMMA_TOL
        stats = OpSimStats(op_id, gamma)
        stats.t_req_s = effective_t_req(op, profile)
        per_op[op_id] = stats

        if op.window_s > duration + 1e-9:
            warnings.append(
                f"operator {op_id}: window {op.window_s}s exceeds the trace "
                f"({duration}s); no windows close"
            )

        if at_edge and any(
            assignment.op_gamma(workload, d) >= 1.0 - GAMMA_TOL for d in op.deps
        ):
            warnings.append(
                f"operator {op_id} computes at the edge from cloud-resident "
                "inputs; the downlink is not charged"
            )

        # Input channel sources: own sensors first, then dependency outputs.
        dep_series = [series[d] for d in op.deps]
        n_channels = len(op.sensors) + sum(s.arity for s in dep_series)

        # Compute-time coefficients under the assignment's split.
        edge_share = 1.0 - gamma
        edge_time = 0.0
        if edge_share > GAMMA_TOL:
            for j in op.sensors:
                k = workload.topology.sensor_node[j]
                edge_time += (
                    profile.cpu_edge[(op_id, j, k)] / profile.cpu_unit_edge[k]
                )
            edge_time *= edge_share
        cloud_cycles = 0.0
        if gamma > GAMMA_TOL:
            cloud_cycles = gamma * sum(
                profile.cpu_cloud[(op_id, j)] for j in op.sensors
            ) + profile.cpu_res[op_id]
        cloud_time = cloud_cycles / profile.cpu_unit_cloud

        home = sorted(
            {workload.topology.sensor_node[j] for j in transitive_sensors(workload, op_id)}
        )
        uplink_bw = (
            profile.bandwidth[home[0]]
            if home
            else max(profile.bandwidth.values(), default=1.0)
        )

        close_times: list[float] = []
        win_values: list[np.ndarray] = []
        win_avail_edge: list[float] = []
        win_avail_cloud: list[float] = []
        latencies: list[float] = []

        m = 0
        while True:
            t_close = op.window_s + m * op.step_s
            if t_close > duration + 1e-9:
                break
            t_open = t_close - op.window_s

            channels: list[np.ndarray] = []
            times: list[np.ndarray] = []
            lo_idx = int(round(t_open * rate))
            hi_idx = int(round(t_close * rate))
            for j in op.sensors:
                x = trace.samples[j]
                hi = min(hi_idx, len(x))
                channels.append(x[lo_idx:hi])
                times.append(np.arange(lo_idx, hi, dtype=np.float64) / rate)
            input_edge = 0.0
            input_cloud = 0.0
            for s in dep_series:
                lo = int(np.searchsorted(s.times, t_open + 1e-9, side="left"))
                hi = int(np.searchsorted(s.times, t_close + 1e-9, side="left"))
                for c in range(s.arity):
                    channels.append(s.values[lo:hi, c])
                    times.append(s.times[lo:hi])
                if hi > lo:
                    input_edge = max(input_edge, float(s.avail_edge[lo:hi].max()))
                    input_cloud = max(input_cloud, float(s.avail_cloud[lo:hi].max()))

            edge_state = None
            if at_edge or at_cloud or not is_splittable(op.func):
                value = eval_function(op.func, channels, times, ctx)
            else:
                cut_channels = []
                cut_times = []
                rest_channels = []
                rest_times = []
                for x, t in zip(channels, times):
                    cut = int(round(edge_share * len(x)))
                    cut_channels.append(x[:cut])
                    cut_times.append(t[:cut])
                    rest_channels.append(x[cut:])
                    rest_times.append(t[cut:])
                edge_state = partial_eval(op.func, cut_channels, cut_times, ctx)
                value = merge(op.func, edge_state, rest_channels, rest_times, ctx)

            if at_edge:
                start = max(t_close, input_edge)
                avail_edge = start + edge_time
                payload_len = output_arity(op.func, n_channels)
                wire_bytes = FRAME_HEADER.size + 8 * payload_len
                avail_cloud = avail_edge + wire_bytes / uplink_bw
                stats.res_frames += 1
                stats.res_payload_bytes += 8 * payload_len
                res_payload += 8 * payload_len
                res_wire += wire_bytes
                if frames is not None:
                    frames.append(Frame(KIND_RESULT, op_id, 0, m, value))
            elif at_cloud:
                start = max(t_close, input_cloud, raw_ready_at(op.sensors, t_close))
                avail_cloud = start + cloud_time
                avail_edge = avail_cloud
            else:
                start = max(t_close, input_edge)
                state_len = state_length(op.func, n_channels, ctx)
                wire_bytes = FRAME_HEADER.size + 8 * state_len
                int_arrive = start + edge_time + wire_bytes / uplink_bw
                cloud_start = max(
                    int_arrive, input_cloud, raw_ready_at(op.sensors, t_close)
                )
                avail_cloud = cloud_start + cloud_time
                avail_edge = avail_cloud
                stats.int_frames += 1
                stats.int_payload_bytes += 8 * state_len
                int_payload += 8 * state_len
                int_wire += wire_bytes
                if frames is not None:
                    if edge_state is not None:
                        vec = state_to_vector(edge_state, ctx)
                    else:
                        vec = np.zeros(0, dtype=np.float64)
                    if len(vec) < state_len:
                        vec = np.concatenate(
                            [vec, np.full(state_len - len(vec), np.nan)]
                        )
                    frames.append(Frame(KIND_INTERMEDIATE, op_id, 0, m, vec))

            latency = avail_cloud - t_close
            latencies.append(latency)
            if stats.t_req_s is not None and not le_with_tol(latency, stats.t_req_s):
                stats.t_req_violations += 1

            close_times.append(t_close)
            win_values.append(value)
            win_avail_edge.append(avail_edge)
            win_avail_cloud.append(avail_cloud)
            m += 1

        stats.windows = len(close_times)
        expected = windows_in_horizon(op.window_s, op.step_s, duration)
        if stats.windows != expected:
            warnings.append(
                f"operator {op_id}: closed {stats.windows} windows, expected {expected}"
            )
        (
            stats.latency_mean_s,
            stats.latency_p50_s,
            stats.latency_p95_s,
            stats.latency_max_s,
        ) = _percentiles(latencies)

        # Emission series: every freq_s, repeating the latest closed window.
        arity = output_arity(op.func, n_channels)
        em_times: list[float] = []
        em_values: list[np.ndarray] = []
        em_edge: list[float] = []
        em_cloud: list[float] = []
        if close_times:
            closes = np.array(close_times)
            r = 1
            while True:
                t_emit = r * op.freq_s
                if t_emit > duration + 1e-9:
                    break
                w_idx = int(np.searchsorted(closes, t_emit + 1e-9, side="left")) - 1
                if w_idx >= 0:
                    em_times.append(t_emit)
                    em_values.append(win_values[w_idx])
                    em_edge.append(max(t_emit, win_avail_edge[w_idx]))
                    em_cloud.append(max(t_emit, win_avail_cloud[w_idx]))
                r += 1
        stats.emissions = len(em_times)
        series[op_id] = _OpSeries(
            times=np.array(em_times, dtype=np.float64),
            values=(
                np.array(em_values, dtype=np.float64).reshape(len(em_times), arity)
                if em_times
                else np.zeros((0, arity))
            ),
            avail_edge=np.array(em_edge, dtype=np.float64),
            avail_cloud=np.array(em_cloud, dtype=np.float64),
            arity=arity,
        )

    return SimReport(
        duration_s=duration,
        sample_rate_hz=rate,
        per_op=per_op,
        per_sensor_raw=raw_stats,
        raw_payload_bytes=sum(s.payload_bytes for s in raw_stats.values()),
        raw_wire_bytes=sum(s.wire_bytes for s in raw_stats.values()),
        int_payload_bytes=int_payload,
        int_wire_bytes=int_wire,
        res_payload_bytes=res_payload,
        res_wire_bytes=res_wire,
        warnings=warnings,
        frames=frames,
    )
