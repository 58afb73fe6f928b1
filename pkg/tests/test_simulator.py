"""Trace-driven execution: frozen byte counts, framing, determinism.

The frozen numbers were derived by hand: one 10 Hz sensor over 10 s is 100
samples (800 payload bytes when fully uploaded, one 17-byte frame header per
second); a 5 s tumbling mean closes 2 windows (one 8-byte result each when
edge-resident, one 16-byte two-number partial aggregate each when split).
"""

import dataclasses

import numpy as np
import pytest

from splitstream import (
    Assignment,
    Frame,
    FunctionKind,
    SignalSpec,
    StreamConfig,
    compare_runs,
    decode_frame,
    encode_frame,
    generate_profile,
    generate_trace,
    run_sim,
)
from splitstream.simulator import KIND_INTERMEDIATE, KIND_RAW, KIND_RESULT

from conftest import build_workload

F = FunctionKind


def tiny_setup(gamma, *, iterative=True):
    w = build_workload(
        [(1, (1,), (), F.MEAN, iterative, 5, 5, 5)], {1: 1}
    )
    p = generate_profile(w)
    a = Assignment.from_op_gamma(w, {1: gamma})
    trace = generate_trace(StreamConfig(duration_s=10, sample_rate_hz=10, seed=1), [1])
    return w, p, a, trace


class TestFrozenByteCounts:
    def test_full_offload(self):
        w, p, a, trace = tiny_setup(1.0)
        rep = run_sim(w, p, a, trace)
        assert rep.raw_payload_bytes == 800
        assert rep.int_payload_bytes == 0
        assert rep.res_payload_bytes == 0
        assert rep.total_payload_bytes == 800
        assert rep.total_wire_bytes == 970
        assert rep.per_sensor_raw[1].samples_sent == 100
        assert rep.per_sensor_raw[1].frames == 10
        assert rep.per_op[1].windows == 2

    def test_fully_edge(self):
        w, p, a, trace = tiny_setup(0.0)
        rep = run_sim(w, p, a, trace)
        assert rep.raw_payload_bytes == 0
        assert rep.res_payload_bytes == 16
        assert rep.per_op[1].res_frames == 2
        assert rep.total_payload_bytes == 16
        assert rep.total_wire_bytes == 50

    def test_even_split(self):
        w, p, a, trace = tiny_setup(0.5)
        rep = run_sim(w, p, a, trace)
        assert rep.raw_payload_bytes == 400
        assert rep.int_payload_bytes == 32
        assert rep.res_payload_bytes == 0
        assert rep.total_payload_bytes == 432
        assert rep.total_wire_bytes == 636
        assert rep.per_op[1].int_frames == 2
        assert rep.per_sensor_raw[1].samples_sent == 50

    def test_frame_byte_conservation(self):
        for gamma in (0.0, 0.5, 1.0):
            w, p, a, trace = tiny_setup(gamma)
            rep = run_sim(w, p, a, trace, collect_frames=True)
            assert sum(f.wire_size for f in rep.frames) == rep.total_wire_bytes
            assert sum(len(f.payload) * 8 for f in rep.frames) == rep.total_payload_bytes


class TestValues:
    def test_edge_resident_results_match_direct_evaluation(self):
        w, p, a, trace = tiny_setup(0.0)
        rep = run_sim(w, p, a, trace, collect_frames=True)
        res = [f for f in rep.frames if f.kind == KIND_RESULT]
        assert len(res) == 2
        x = trace.samples[1]
        for idx, frame in enumerate(sorted(res, key=lambda f: f.window_idx)):
            window = x[idx * 50 : (idx + 1) * 50]
            assert frame.payload[0] == pytest.approx(np.mean(window), rel=1e-12)

    def test_split_and_monolithic_agree(self):
        # Same trace, same operator: the merged result equals the edge-only
        # result, so placement never changes the answer.
        w, p, a0, trace = tiny_setup(0.0)
        a5 = Assignment.from_op_gamma(w, {1: 0.5})
        r0 = run_sim(w, p, a0, trace, collect_frames=True)
        r5 = run_sim(w, p, a5, trace, collect_frames=True)
        v0 = [f for f in r0.frames if f.kind == KIND_RESULT]
        # At gamma=0.5 results stay in the cloud; recover them via emissions.
        assert r5.per_op[1].windows == len(v0) == 2


class TestLatencyAndDeadlines:
    def test_latencies_are_positive_and_ordered(self):
        w, p, a, trace = tiny_setup(1.0)
        s = run_sim(w, p, a, trace).per_op[1]
        assert 0 < s.latency_p50_s <= s.latency_p95_s <= s.latency_max_s
        assert s.t_req_violations == 0

    def test_deadline_violations_counted_per_window(self):
        w, p, a, trace = tiny_setup(1.0)
        p = dataclasses.replace(p, t_req_s={1: 1e-12})
        s = run_sim(w, p, a, trace).per_op[1]
        assert s.t_req_violations == s.windows == 2


class TestEmissions:
    def test_sample_and_hold_emissions(self):
        w = build_workload([(1, (1,), (), F.MEAN, True, 4, 2, 1)], {1: 1})
        p = generate_profile(w)
        a = Assignment.from_op_gamma(w, {1: 0.0})
        trace = generate_trace(StreamConfig(duration_s=10, sample_rate_hz=10, seed=2), [1])
        s = run_sim(w, p, a, trace).per_op[1]
        assert s.windows == 4  # closes at 4, 6, 8, 10
        assert s.emissions == 7  # every second from t=4 on


class TestComposite:
    def composite_setup(self, g_atomic, g_comp):
        w = build_workload(
            [
                (1, (1,), (), F.MEAN, False, 5, 5, 5),
                (2, (), (1,), F.LAST, False, 5, 5, 5),
            ],
            {1: 1},
        )
        p = generate_profile(w)
        a = Assignment.from_op_gamma(w, {1: g_atomic, 2: g_comp})
        trace = generate_trace(StreamConfig(duration_s=10, sample_rate_hz=10, seed=3), [1])
        return w, p, a, trace

    def test_composite_consumes_dependency_emissions(self):
        w, p, a, trace = self.composite_setup(0.0, 0.0)
        rep = run_sim(w, p, a, trace)
        assert rep.per_op[2].windows == 2
        assert rep.warnings == []

    def test_cross_placement_warning(self):
        w, p, a, trace = self.composite_setup(1.0, 0.0)
        rep = run_sim(w, p, a, trace)
        assert any("cloud" in msg for msg in rep.warnings)


class TestFraming:
    def test_round_trip_all_kinds(self):
        payloads = {
            KIND_RAW: np.arange(5, dtype=np.float64),
            KIND_INTERMEDIATE: np.array([1.5, float("inf"), -0.0]),
            KIND_RESULT: np.zeros(1),
        }
        buf = b""
        frames = []
        for kind, payload in payloads.items():
            f = Frame(kind=kind, op_id=3, sensor_id=7, window_idx=11, payload=payload)
            frames.append(f)
            buf += encode_frame(f)
        offset = 0
        for want in frames:
            got, offset = decode_frame(buf, offset)
            assert (got.kind, got.op_id, got.sensor_id, got.window_idx) == (
                want.kind, want.op_id, want.sensor_id, want.window_idx,
            )
            assert np.array_equal(got.payload, want.payload)
            assert got.wire_size == 17 + 8 * len(want.payload)
        assert offset == len(buf)

    def test_truncated_buffers_rejected(self):
        f = Frame(kind=KIND_RAW, op_id=0, sensor_id=1, window_idx=0,
                  payload=np.arange(4, dtype=np.float64))
        buf = encode_frame(f)
        with pytest.raises(ValueError):
            decode_frame(buf[:10])
        with pytest.raises(ValueError):
            decode_frame(buf[:-3])


class TestDeterminism:
    def test_identical_runs_produce_identical_reports(self):
        w, p, a, trace = tiny_setup(0.5)
        r1 = run_sim(w, p, a, trace)
        r2 = run_sim(w, p, a, trace)
        assert r1 == r2

    def test_trace_generation_is_seeded(self):
        cfg = StreamConfig(duration_s=5, sample_rate_hz=10, seed=42)
        t1 = generate_trace(cfg, [1, 2])
        t2 = generate_trace(cfg, [1, 2])
        for s in (1, 2):
            assert np.array_equal(t1.samples[s], t2.samples[s])
        t3 = generate_trace(dataclasses.replace(cfg, seed=43), [1, 2])
        assert not np.array_equal(t1.samples[1], t3.samples[1])

    def test_sensor_streams_are_independent_of_listing_order(self):
        cfg = StreamConfig(duration_s=5, sample_rate_hz=10, seed=42)
        t1 = generate_trace(cfg, [1, 2])
        t2 = generate_trace(cfg, [2, 1])
        assert np.array_equal(t1.samples[1], t2.samples[1])

    def test_explicit_signal_spec_is_honored(self):
        spec = SignalSpec(offset=5.0, amplitude=0.0, period_s=10.0, phase=0.0,
                          noise_std=0.0)
        cfg = StreamConfig(duration_s=2, sample_rate_hz=10, seed=0,
                           signals={1: spec})
        trace = generate_trace(cfg, [1])
        assert np.allclose(trace.samples[1], 5.0)


class TestCompareRuns:
    def test_reduction_against_first_run(self):
        w, p, a1, trace = tiny_setup(1.0)
        a0 = Assignment.from_op_gamma(w, {1: 0.0})
        co = run_sim(w, p, a1, trace)
        eo = run_sim(w, p, a0, trace)
        out = compare_runs([co, eo], labels=["co", "eo"])
        assert out["labels"] == ["co", "eo"]
        agg = out["aggregate"]
        assert agg["payload_bytes"] == [800, 16]
        assert agg["payload_reduction_pct"][0] == 0.0
        assert agg["payload_reduction_pct"][1] == pytest.approx(98.0)
        assert out["per_operator"][1]["payload_bytes"] == [0, 16]

    def test_missing_operator_shows_none(self):
        w, p, a, trace = tiny_setup(0.0)
        rep = run_sim(w, p, a, trace)
        w2 = build_workload(
            [
                (1, (1,), (), F.MEAN, True, 5, 5, 5),
                (2, (1,), (), F.MAX, False, 5, 5, 5),
            ],
            {1: 1},
        )
        p2 = generate_profile(w2)
        a2 = Assignment.from_op_gamma(w2, {1: 0.0, 2: 0.0})
        rep2 = run_sim(w2, p2, a2, trace)
        out = compare_runs([rep, rep2])
        assert out["per_operator"][2]["payload_bytes"][0] is None
        assert out["per_operator"][2]["payload_bytes"][1] == 16

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            compare_runs([])
