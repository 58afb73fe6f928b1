"""Window-function registry: evaluation, partial aggregation, merging.

Functions fall into two shapes. Per-channel functions map independently over
every input channel (output arity = channel count). Cross-channel functions
combine the first two channels into one value; a single channel is paired
with itself. Composite operators feed dependency outputs in as channels, so
the same registry serves raw windows and derived series.

Splittable functions (the catalog's iterative ones) additionally support
partial_eval/merge: the edge evaluates a prefix into a PartialState, the
cloud folds in the remaining samples, and the merged result must match a
monolithic evaluation to 1e-9 relative. Partial states carry moments shifted
to a per-part reference where naive running sums would lose precision
(std/var/cov/trend at large sample magnitudes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import FunctionKind

F = FunctionKind

PER_CHANNEL = {
    F.MEAN, F.MSQRT, F.MAX, F.MIN, F.FIRST, F.LAST, F.RANGE, F.STD, F.VAR,
    F.DISP, F.FILTER, F.SURGE, F.GF, F.SPEED, F.ACC, F.TREND,
}

CROSS_CHANNEL = {F.COV, F.CC, F.AVGWS, F.AVGWA, F.AOA, F.AWD, F.FWS, F.TI}

SPLITTABLE = {
    F.MEAN, F.MSQRT, F.STD, F.VAR, F.COV, F.SPEED, F.ACC, F.DISP, F.TREND,
    F.SURGE, F.AVGWS, F.GF, F.AOA, F.AWD,
}


@dataclass(frozen=True)
class FunctionContext:
    """Knobs the window functions need beyond the samples themselves."""

    sample_rate_hz: float = 10.0
    disp_baseline: float = 0.0
    filter_len: int = 5
    gf_subwindow_s: float = 3.0

    def gf_k(self) -> int:
        return max(1, int(round(self.gf_subwindow_s * self.sample_rate_hz)))


DEFAULT_CONTEXT = FunctionContext()


@dataclass(frozen=True)
class PartialState:
    """Mergeable aggregate of a sample prefix for one splittable function."""

    func: FunctionKind
    n_channels: int
    parts: tuple


def output_arity(func: FunctionKind, n_channels: int) -> int:
    if n_channels <= 0:
        return 0
    return n_channels if func in PER_CHANNEL else 1


def is_splittable(func: FunctionKind) -> bool:
    return func in SPLITTABLE


def _as_arrays(
    channels: Sequence[np.ndarray], times: Sequence[np.ndarray] | None, ctx: FunctionContext
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    chans = [np.asarray(c, dtype=np.float64) for c in channels]
    if times is None:
        ts = [np.arange(len(c), dtype=np.float64) / ctx.sample_rate_hz for c in chans]
    else:
        ts = [np.asarray(t, dtype=np.float64) for t in times]
    return chans, ts


def _pair(chans: list[np.ndarray], ts: list[np.ndarray]):
    """First two channels aligned on their most recent samples."""
    if not chans:
        return None
    x = chans[0]
    y = chans[1] if len(chans) > 1 else chans[0]
    tx = ts[0]
    m = min(len(x), len(y))
    return x[len(x) - m:], y[len(y) - m:], tx[len(tx) - m:]


# ---------------------------------------------------------------------------
# Monolithic evaluation (independent of the partial/merge machinery).


def _eval_channel(func: FunctionKind, x: np.ndarray, t: np.ndarray, ctx: FunctionContext) -> float:
    n = len(x)
    if n == 0:
        return 0.0
    if func is F.MEAN:
        return float(np.mean(x))
    if func is F.MSQRT:
        return float(np.sqrt(np.mean(np.square(x))))
    if func is F.MAX:
        return float(np.max(x))
    if func is F.MIN:
        return float(np.min(x))
    if func is F.FIRST:
        return float(x[0])
    if func is F.LAST:
        return float(x[-1])
    if func is F.RANGE:
        return float(np.max(x) - np.min(x))
    if func is F.STD:
        return float(np.std(x))
    if func is F.VAR:
        return float(np.var(x))
    if func is F.DISP:
        return float(np.mean(x) - ctx.disp_baseline)
    if func is F.FILTER:
        m = min(ctx.filter_len, n)
        return float(np.mean(x[n - m:]))
    if func is F.SURGE:
        mean = float(np.mean(x))
        return float(x[-1]) / mean if mean != 0.0 else 0.0
    if func is F.GF:
        k = ctx.gf_k()
        mean = float(np.mean(x))
        if mean == 0.0:
            return 0.0
        if n < k:
            return 1.0
        rolling = np.convolve(x, np.ones(k), mode="valid") / k
        return float(np.max(rolling)) / mean
    if func in (F.SPEED, F.ACC):
        if n < 2:
            return 0.0
        dt = float(t[-1] - t[-2])
        return float(x[-1] - x[-2]) / dt if dt != 0.0 else 0.0
    if func is F.TREND:
        tc = t - t.mean()
        denom = float(np.dot(tc, tc))
        if denom == 0.0:
            return 0.0
        return float(np.dot(tc, x - x.mean())) / denom
    raise ValueError(f"{func.value} is not a per-channel function")


def _eval_cross(func: FunctionKind, x: np.ndarray, y: np.ndarray, t: np.ndarray, ctx: FunctionContext) -> float:
    n = len(x)
    if n == 0:
        return 0.0
    if func is F.COV:
        return float(np.mean((x - x.mean()) * (y - y.mean())))
    if func is F.CC:
        dx = x - x.mean()
        dy = y - y.mean()
        denom = math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy)))
        return float(np.dot(dx, dy)) / denom if denom != 0.0 else 0.0
    if func is F.AVGWS:
        return float(np.mean(np.hypot(x, y)))
    if func is F.AVGWA:
        return math.degrees(math.atan2(float(y.mean()), float(x.mean()))) % 360.0
    if func is F.AOA:
        return math.atan2(float(y.mean()), float(x.mean()))
    if func is F.AWD:
        mx, my = float(x.mean()), float(y.mean())
        if mx == 0.0:
            return math.copysign(math.pi / 2.0, my) if my != 0.0 else 0.0
        return math.atan(my / mx)
    if func is F.FWS:
        return float(x[-1]) - float(np.mean(x))
    if func is F.TI:
        mean = float(np.mean(x))
        return float(np.std(y)) / mean if mean != 0.0 else 0.0
    raise ValueError(f"{func.value} is not a cross-channel function")


def eval_function(
    func: FunctionKind,
    channels: Sequence[np.ndarray],
    times: Sequence[np.ndarray] | None = None,
    ctx: FunctionContext = DEFAULT_CONTEXT,
) -> np.ndarray:
    """Evaluate one window; returns one value per channel (per-channel
    functions) or a single value (cross-channel functions)."""
    chans, ts = _as_arrays(channels, times, ctx)
    if not chans:
        return np.zeros(0, dtype=np.float64)
    if func in PER_CHANNEL:
        return np.array(
            [_eval_channel(func, x, t, ctx) for x, t in zip(chans, ts)],
            dtype=np.float64,
        )
    x, y, t = _pair(chans, ts)
    return np.array([_eval_cross(func, x, y, t, ctx)], dtype=np.float64)


# ---------------------------------------------------------------------------
# Partial states. Per-channel states are tuples; _NONE marks absent values.

_NAN = float("nan")


def _partial_channel(func: FunctionKind, x: np.ndarray, t: np.ndarray, ctx: FunctionContext) -> tuple:
    n = len(x)
    if func in (F.MEAN, F.DISP):
        return (n, float(np.sum(x)))
    if func is F.MSQRT:
        return (n, float(np.sum(np.square(x))))
    if func in (F.STD, F.VAR):
        if n == 0:
            return (0, 0.0, 0.0, 0.0)
        x0 = float(x[0])
        d = x - x0
        return (n, float(np.sum(d)), float(np.dot(d, d)), x0)
    if func is F.SURGE:
        if n == 0:
            return (0, 0.0, _NAN)
        return (n, float(np.sum(x)), float(x[-1]))
    if func in (F.SPEED, F.ACC):
        if n == 0:
            return (0, _NAN, _NAN, _NAN, _NAN)
        if n == 1:
            return (1, _NAN, _NAN, float(t[0]), float(x[0]))
        return (n, float(t[-2]), float(x[-2]), float(t[-1]), float(x[-1]))
    if func is F.TREND:
        if n == 0:
            return (0, 0.0, 0.0, 0.0, 0.0, 0.0)
        t0 = float(t[0])
        dt = t - t0
        return (
            n,
            t0,
            float(np.sum(dt)),
            float(np.sum(x)),
            float(np.dot(dt, dt)),
            float(np.dot(dt, x)),
        )
    if func is F.GF:
        k = ctx.gf_k()
        if n == 0:
            return (0, 0.0, _NAN, (), ())
        best = _NAN
        if n >= k:
            rolling = np.convolve(x, np.ones(k), mode="valid") / k
            best = float(np.max(rolling))
        keep = k - 1
        head = tuple(float(v) for v in x[:keep])
        tail = tuple(float(v) for v in x[max(0, n - keep):]) if keep else ()
        return (n, float(np.sum(x)), best, head, tail)
    raise ValueError(f"{func.value} has no per-channel partial form")


def _partial_cross(func: FunctionKind, x: np.ndarray, y: np.ndarray, ctx: FunctionContext) -> tuple:
    n = len(x)
    if func is F.COV:
        if n == 0:
            return (0, 0.0, 0.0, 0.0, 0.0, 0.0)
        x0, y0 = float(x[0]), float(y[0])
        dx = x - x0
        dy = y - y0
        return (n, float(np.sum(dx)), float(np.sum(dy)), float(np.dot(dx, dy)), x0, y0)
    if func is F.AVGWS:
        return (n, float(np.sum(np.hypot(x, y))))
    if func in (F.AOA, F.AWD):
        return (n, float(np.sum(x)), float(np.sum(y)))
    raise ValueError(f"{func.value} has no cross-channel partial form")


def partial_eval(
    func: FunctionKind,
    channels: Sequence[np.ndarray],
    times: Sequence[np.ndarray] | None = None,
    ctx: FunctionContext = DEFAULT_CONTEXT,
) -> PartialState:
    """Aggregate a sample prefix; rejected for non-splittable functions."""
    if func not in SPLITTABLE:
        raise ValueError(f"{func.value} is not splittable")
    chans, ts = _as_arrays(channels, times, ctx)
    if func in PER_CHANNEL:
        parts = tuple(_partial_channel(func, x, t, ctx) for x, t in zip(chans, ts))
        return PartialState(func, len(chans), parts)
    paired = _pair(chans, ts)
    if paired is None:
        return PartialState(func, 0, ())
    x, y, _t = paired
    return PartialState(func, len(chans), (_partial_cross(func, x, y, ctx),))


def _merge_channel(func: FunctionKind, a: tuple, b: tuple, ctx: FunctionContext) -> tuple:
    if a[0] == 0:
        return b
    if b[0] == 0:
        return a
    if func in (F.MEAN, F.DISP, F.MSQRT):
        return (a[0] + b[0], a[1] + b[1])
    if func in (F.STD, F.VAR):
        na, da, d2a, x0a = a
        nb, db, d2b, x0b = b
        shift = x0b - x0a
        db2 = db + nb * shift
        d2b2 = d2b + 2.0 * shift * db + nb * shift * shift
        return (na + nb, da + db2, d2a + d2b2, x0a)
    if func is F.SURGE:
        return (a[0] + b[0], a[1] + b[1], b[2])
    if func in (F.SPEED, F.ACC):
        na = a[0]
        nb = b[0]
        n = na + nb
        if nb >= 2:
            return (n, b[1], b[2], b[3], b[4])
        # b has exactly one sample: previous point comes from a's last
        return (n, a[3], a[4], b[3], b[4])
    if func is F.TREND:
        na, t0a, sta, sya, stta, stya = a
        nb, t0b, stb, syb, sttb, styb = b
        shift = t0b - t0a
        stb2 = stb + nb * shift
        sttb2 = sttb + 2.0 * shift * stb + nb * shift * shift
        styb2 = styb + shift * syb
        return (na + nb, t0a, sta + stb2, sya + syb, stta + sttb2, stya + styb2)
    if func is F.GF:
        k = ctx.gf_k()
        na, sa, besta, heada, taila = a
        nb, sb, bestb, headb, tailb = b
        candidates = [v for v in (besta, bestb) if not math.isnan(v)]
        boundary = taila + headb
        if len(boundary) >= k:
            arr = np.array(boundary, dtype=np.float64)
            rolling = np.convolve(arr, np.ones(k), mode="valid") / k
            candidates.append(float(np.max(rolling)))
        best = max(candidates) if candidates else _NAN
        keep = k - 1
        head = (heada + headb)[:keep]
        joined = taila + tailb
        tail = joined[max(0, len(joined) - keep):] if keep else ()
        return (na + nb, sa + sb, best, head, tail)
    raise ValueError(f"{func.value} has no per-channel merge")


def _merge_cross(func: FunctionKind, a: tuple, b: tuple) -> tuple:
    if a[0] == 0:
        return b
    if b[0] == 0:
        return a
    if func is F.COV:
        na, dxa, dya, dxya, x0a, y0a = a
        nb, dxb, dyb, dxyb, x0b, y0b = b
        sx = x0b - x0a
        sy = y0b - y0a
        dxb2 = dxb + nb * sx
        dyb2 = dyb + nb * sy
        dxyb2 = dxyb + sx * dyb + sy * dxb + nb * sx * sy
        return (na + nb, dxa + dxb2, dya + dyb2, dxya + dxyb2, x0a, y0a)
    if func is F.AVGWS:
        return (a[0] + b[0], a[1] + b[1])
    if func in (F.AOA, F.AWD):
        return (a[0] + b[0], a[1] + b[1], a[2] + b[2])
    raise ValueError(f"{func.value} has no cross merge")


def merge_states(a: PartialState, b: PartialState, ctx: FunctionContext = DEFAULT_CONTEXT) -> PartialState:
    if a.func is not b.func:
        raise ValueError(f"cannot merge {a.func.value} with {b.func.value}")
    if a.n_channels == 0:
        return b
    if b.n_channels == 0:
        return a
    if len(a.parts) != len(b.parts):
        raise ValueError("partial states cover different channel counts")
    if a.func in PER_CHANNEL:
        parts = tuple(
            _merge_channel(a.func, pa, pb, ctx) for pa, pb in zip(a.parts, b.parts)
        )
    else:
        parts = (_merge_cross(a.func, a.parts[0], b.parts[0]),)
    return PartialState(a.func, a.n_channels, parts)


def _finalize_channel(func: FunctionKind, s: tuple, ctx: FunctionContext) -> float:
    n = s[0]
    if n == 0:
        return 0.0
    if func is F.MEAN:
        return s[1] / n
    if func is F.DISP:
        return s[1] / n - ctx.disp_baseline
    if func is F.MSQRT:
        return math.sqrt(s[1] / n)
    if func in (F.STD, F.VAR):
        _n, d, d2, _x0 = s
        var = max((d2 - d * d / n) / n, 0.0)
        return math.sqrt(var) if func is F.STD else var
    if func is F.SURGE:
        mean = s[1] / n
        return s[2] / mean if mean != 0.0 else 0.0
    if func in (F.SPEED, F.ACC):
        if n < 2:
            return 0.0
        _n, tp, yp, tl, yl = s
        dt = tl - tp
        return (yl - yp) / dt if dt != 0.0 else 0.0
    if func is F.TREND:
        _n, _t0, st, sy, stt, sty = s
        denom = n * stt - st * st
        if denom == 0.0:
            return 0.0
        return (n * sty - st * sy) / denom
    if func is F.GF:
        _n, total, best, _head, _tail = s
        mean = total / n
        if mean == 0.0:
            return 0.0
        if math.isnan(best):
            return 1.0
        return best / mean
    raise ValueError(f"{func.value} has no per-channel finalize")


def _finalize_cross(func: FunctionKind, s: tuple) -> float:
    n = s[0]
    if n == 0:
        return 0.0
    if func is F.COV:
        _n, dx, dy, dxy, _x0, _y0 = s
        return (dxy - dx * dy / n) / n
    if func is F.AVGWS:
        return s[1] / n
    if func is F.AOA:
        return math.atan2(s[2] / n, s[1] / n)
    if func is F.AWD:
        mx, my = s[1] / n, s[2] / n
        if mx == 0.0:
            return math.copysign(math.pi / 2.0, my) if my != 0.0 else 0.0
        return math.atan(my / mx)
    raise ValueError(f"{func.value} has no cross finalize")


def finalize(state: PartialState, ctx: FunctionContext = DEFAULT_CONTEXT) -> np.ndarray:
    if state.n_channels == 0:
        return np.zeros(0, dtype=np.float64)
    if state.func in PER_CHANNEL:
        return np.array(
            [_finalize_channel(state.func, s, ctx) for s in state.parts],
            dtype=np.float64,
        )
    return np.array([_finalize_cross(state.func, state.parts[0])], dtype=np.float64)


def merge(
    func: FunctionKind,
    edge_state: PartialState,
    cloud: PartialState | Sequence[np.ndarray],
    times: Sequence[np.ndarray] | None = None,
    ctx: FunctionContext = DEFAULT_CONTEXT,
) -> np.ndarray:
    """Fold the cloud-side share (a state or raw samples) into the edge
    state and finalize to the window's value(s)."""
    if isinstance(cloud, PartialState):
        cloud_state = cloud
    else:
        cloud_state = partial_eval(func, cloud, times, ctx)
    return finalize(merge_states(edge_state, cloud_state, ctx), ctx)


# ---------------------------------------------------------------------------
# Serialized state size, for partial-aggregate payloads and profiles.

_CHANNEL_STATE_LEN = {
    F.MEAN: 2, F.DISP: 2, F.MSQRT: 2, F.STD: 4, F.VAR: 4, F.SURGE: 3,
    F.SPEED: 5, F.ACC: 5, F.TREND: 6,
}

_CROSS_STATE_LEN = {F.COV: 6, F.AVGWS: 2, F.AOA: 3, F.AWD: 3}


def state_length(func: FunctionKind, n_channels: int, ctx: FunctionContext = DEFAULT_CONTEXT) -> int:
    """Number of 8-byte values in a serialized partial state."""
    if func not in SPLITTABLE or n_channels <= 0:
        return 0
    if func is F.GF:
        return (2 * ctx.gf_k() + 3) * n_channels
    if func in _CHANNEL_STATE_LEN:
        return _CHANNEL_STATE_LEN[func] * n_channels
    return _CROSS_STATE_LEN[func]


def state_to_vector(state: PartialState, ctx: FunctionContext = DEFAULT_CONTEXT) -> np.ndarray:
    """Flatten a partial state into the fixed-size f64 layout."""
    out: list[float] = []
    if state.func is F.GF:
        keep = ctx.gf_k() - 1
        for n, total, best, head, tail in state.parts:
            row = [float(n), total, best, float(len(head))]
            row.extend(head)
            row.extend([_NAN] * (keep - len(head)))
            row.append(float(len(tail)))
            row.extend(tail)
            row.extend([_NAN] * (keep - len(tail)))
            out.extend(row)
    else:
        for part in state.parts:
            out.extend(float(v) for v in part)
    return np.array(out, dtype=np.float64)
