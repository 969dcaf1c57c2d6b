"""Gaze/scene trace data model and the line-delimited JSON trace format.

A trace file is UTF-8 text, one JSON object per line. The first line is
always the ``meta`` record; a ``truth`` record follows when ground truth is
present; ``gaze`` and ``frame`` records then appear in timestamp order
(gaze first on ties). Floats are written with Python's shortest
round-trip repr, so ``read_trace(write_trace(t)) == t`` exactly.
"""

from __future__ import annotations

import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ._atomic import atomic_open

DEFAULT_GAZE_RATE = 30.0
DEFAULT_FRAME_RATE = 30.0

RECORD_KINDS = ("meta", "truth", "gaze", "frame")


class TraceError(Exception):
    """Base class for trace problems."""


class TraceParseError(TraceError):
    """A line could not be decoded into a record."""

    def __init__(self, message, line=None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class TraceValidationError(TraceError):
    """Decoded records violate a trace invariant."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class TraceIOError(TraceError, OSError):
    """Writing to the sink failed."""

    def __init__(self, message, position):
        self.position = position
        super().__init__(f"{message} (after {position} records)")


@dataclass(frozen=True)
class GazeSample:
    t: float
    x: float
    y: float
    valid: bool = True


@dataclass(frozen=True, eq=False)
class SceneFrame:
    t: float
    luma: np.ndarray
    instances: np.ndarray | None = None

    def __post_init__(self):
        luma = np.array(self.luma, dtype=np.float64, copy=True)
        if luma.ndim != 2:
            raise TraceValidationError(f"frame at t={self.t}: luma must be 2-D, got shape {luma.shape}")
        luma.setflags(write=False)
        object.__setattr__(self, "luma", luma)
        if self.instances is not None:
            inst = np.array(self.instances, dtype=np.int32, copy=True)
            inst.setflags(write=False)
            object.__setattr__(self, "instances", inst)

    @property
    def height(self):
        return self.luma.shape[0]

    @property
    def width(self):
        return self.luma.shape[1]

    def __eq__(self, other):
        if not isinstance(other, SceneFrame):
            return NotImplemented
        if self.t != other.t or not np.array_equal(self.luma, other.luma):
            return False
        if (self.instances is None) != (other.instances is None):
            return False
        return self.instances is None or np.array_equal(self.instances, other.instances)

    __hash__ = None


@dataclass(frozen=True)
class AttentionTruth:
    """Ground-truth attention epochs as ``(t_start, t_end, instance_id)``."""

    intervals: tuple = ()

    def __post_init__(self):
        ivs = tuple((float(a), float(b), int(k)) for a, b, k in self.intervals)
        object.__setattr__(self, "intervals", tuple(sorted(ivs)))

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def total_duration(self):
        return sum(b - a for a, b, _ in self.intervals)

    def contains(self, t):
        """Instance id of the epoch covering ``t`` (half-open), else ``None``."""
        for a, b, k in self.intervals:
            if a <= t < b:
                return k
        return None


@dataclass(frozen=True, eq=False)
class Trace:
    gaze: tuple = ()
    frames: tuple = ()
    truth: AttentionTruth | None = None
    gaze_rate: float = DEFAULT_GAZE_RATE
    frame_rate: float = DEFAULT_FRAME_RATE
    seed: int | None = None
    scenario: str | None = None
    _arrays: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gaze", tuple(self.gaze))
        object.__setattr__(self, "frames", tuple(self.frames))

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            self.gaze == other.gaze
            and len(self.frames) == len(other.frames)
            and all(a == b for a, b in zip(self.frames, other.frames))
            and self.truth == other.truth
            and self.gaze_rate == other.gaze_rate
            and self.frame_rate == other.frame_rate
            and self.seed == other.seed
            and self.scenario == other.scenario
        )

    __hash__ = None

    def __len__(self):
        return len(self.gaze)

    @property
    def is_empty(self):
        return not self.gaze and not self.frames

    def gaze_arrays(self):
        """Columnar ``(t, x, y, valid)`` view of the gaze stream, cached."""
        if "gaze" not in self._arrays:
            n = len(self.gaze)
            t = np.fromiter((g.t for g in self.gaze), dtype=np.float64, count=n)
            x = np.fromiter((g.x for g in self.gaze), dtype=np.float64, count=n)
            y = np.fromiter((g.y for g in self.gaze), dtype=np.float64, count=n)
            v = np.fromiter((g.valid for g in self.gaze), dtype=np.uint8, count=n)
            for a in (t, x, y, v):
                a.setflags(write=False)
            self._arrays["gaze"] = (t, x, y, v)
        return self._arrays["gaze"]

    def frame_times(self):
        if "frame_t" not in self._arrays:
            ft = np.fromiter((f.t for f in self.frames), dtype=np.float64, count=len(self.frames))
            ft.setflags(write=False)
            self._arrays["frame_t"] = ft
        return self._arrays["frame_t"]

    def frame_at(self, t):
        """Latest frame with timestamp ``<= t``; the first frame if none."""
        if not self.frames:
            raise TraceError("trace has no scene frames")
        ft = self.frame_times()
        i = int(np.searchsorted(ft, t + 1e-9, side="right")) - 1
        return self.frames[max(i, 0)]

    def span(self):
        """``(start, end)`` of the operating time covered by the gaze stream."""
        if not self.gaze:
            return (0.0, 0.0)
        return (self.gaze[0].t, self.gaze[-1].t + 1.0 / self.gaze_rate)

    def duration(self):
        a, b = self.span()
        return b - a


def validate(trace):
    """Return the list of invariant violations of ``trace`` (empty if valid)."""
    problems = []
    if not (trace.gaze_rate > 0 and trace.frame_rate > 0):
        problems.append("rates must be positive")
    elif trace.gaze_rate < trace.frame_rate:
        problems.append(f"gaze_rate {trace.gaze_rate} < frame_rate {trace.frame_rate}")
    prev = -math.inf
    for i, g in enumerate(trace.gaze):
        if not math.isfinite(g.t) or g.t < 0:
            problems.append(f"gaze[{i}]: t={g.t} must be finite and >= 0")
        if g.t <= prev:
            problems.append(f"gaze[{i}]: t={g.t} not strictly increasing")
        prev = g.t
        if g.valid and not (0.0 <= g.x <= 1.0 and 0.0 <= g.y <= 1.0):
            problems.append(f"gaze[{i}]: valid sample at ({g.x}, {g.y}) outside [0,1]^2")
        if len(problems) > 20:
            break
    prev = -math.inf
    for i, f in enumerate(trace.frames):
        if f.t <= prev:
            problems.append(f"frame[{i}]: t={f.t} not strictly increasing")
        prev = f.t
        if f.luma.size == 0:
            problems.append(f"frame[{i}]: empty luma")
        elif not (np.all(np.isfinite(f.luma)) and f.luma.min() >= 0.0 and f.luma.max() <= 1.0):
            problems.append(f"frame[{i}]: luma values outside [0,1]")
        if f.instances is not None and f.instances.shape != f.luma.shape:
            problems.append(f"frame[{i}]: instances shape {f.instances.shape} != luma shape {f.luma.shape}")
        if len(problems) > 20:
            break
    if trace.gaze and trace.frames:
        tol = 1.0 / trace.frame_rate + 1e-9
        if abs(trace.gaze[0].t - trace.frames[0].t) > tol or abs(trace.gaze[-1].t - trace.frames[-1].t) > tol:
            problems.append("gaze and frame streams do not cover the same time span")
    if trace.truth is not None:
        last_end = -math.inf
        for a, b, k in trace.truth.intervals:
            if not a < b:
                problems.append(f"truth interval ({a}, {b}, {k}): t_start must be < t_end")
            if a < last_end:
                problems.append(f"truth interval ({a}, {b}, {k}) overlaps its predecessor")
            last_end = max(last_end, b)
    return problems


def check(trace):
    problems = validate(trace)
    if problems:
        raise TraceValidationError(problems)
    return trace


def _records(trace):
    meta = {
        "kind": "meta",
        "seed": trace.seed,
        "scenario": trace.scenario,
        "gaze_rate": trace.gaze_rate,
        "frame_rate": trace.frame_rate,
    }
    yield meta
    if trace.truth is not None:
        yield {"kind": "truth", "intervals": [[a, b, k] for a, b, k in trace.truth.intervals]}
    gi = fi = 0
    gaze, frames = trace.gaze, trace.frames
    while gi < len(gaze) or fi < len(frames):
        if fi >= len(frames) or (gi < len(gaze) and gaze[gi].t <= frames[fi].t):
            g = gaze[gi]
            gi += 1
            yield {"kind": "gaze", "t": g.t, "x": g.x, "y": g.y, "valid": bool(g.valid)}
        else:
            f = frames[fi]
            fi += 1
            yield {
                "kind": "frame",
                "t": f.t,
                "width": f.width,
                "height": f.height,
                "luma": f.luma.ravel().tolist(),
            }


def write_trace(trace, sink):
    """Write ``trace`` to a text sink or a path.

    Paths are written atomically (temp file then rename).
    """
    check(trace)
    if isinstance(sink, (str, os.PathLike)):
        with atomic_open(sink) as fh:
            write_trace(trace, fh)
        return True
    n = 0
    dumps = json.JSONEncoder(ensure_ascii=False, separators=(",", ":"), allow_nan=False).encode
    try:
        for rec in _records(trace):
            sink.write(dumps(rec))
            sink.write("\n")
            n += 1
    except OSError as exc:
        raise TraceIOError(f"write failed: {exc}", n) from exc
    return True


def dumps_trace(trace):
    buf = io.StringIO()
    write_trace(trace, buf)
    return buf.getvalue()


def _need(rec, key, types, lineno):
    if key not in rec:
        raise TraceParseError(f"{rec.get('kind')} record missing field {key!r}", lineno)
    val = rec[key]
    if isinstance(val, bool) and bool not in types:
        raise TraceParseError(f"field {key!r} has wrong type", lineno)
    if not isinstance(val, types):
        raise TraceParseError(f"field {key!r} has wrong type {type(val).__name__}", lineno)
    return val


def read_trace(source):
    """Parse a trace from a path, a text stream, or an iterable of lines."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            return read_trace(fh)
    if isinstance(source, (bytes, bytearray)):
        source = io.StringIO(source.decode("utf-8"))
    num = (int, float)
    meta = None
    truth = None
    gaze = []
    frames = []
    loads = json.loads
    for lineno, line in enumerate(source, 1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        if not line.strip():
            continue
        try:
            rec = loads(line)
        except json.JSONDecodeError as exc:
            raise TraceParseError(f"malformed JSON: {exc.msg}", lineno) from None
        if not isinstance(rec, dict):
            raise TraceParseError("record is not a JSON object", lineno)
        kind = rec.get("kind")
        if kind == "gaze":
            gaze.append(
                GazeSample(
                    float(_need(rec, "t", num, lineno)),
                    float(_need(rec, "x", num, lineno)),
                    float(_need(rec, "y", num, lineno)),
                    _need(rec, "valid", (bool,), lineno),
                )
            )
        elif kind == "frame":
            w = _need(rec, "width", (int,), lineno)
            h = _need(rec, "height", (int,), lineno)
            luma = _need(rec, "luma", (list,), lineno)
            if len(luma) != w * h:
                raise TraceParseError(f"luma has {len(luma)} values, expected {w}x{h}", lineno)
            try:
                arr = np.array(luma, dtype=np.float64).reshape(h, w)
            except (TypeError, ValueError):
                raise TraceParseError("luma must be an array of numbers", lineno) from None
            frames.append(SceneFrame(float(_need(rec, "t", num, lineno)), arr))
        elif kind == "meta":
            if meta is not None:
                raise TraceParseError("duplicate meta record", lineno)
            if gaze or frames or truth is not None:
                raise TraceParseError("meta record must come first", lineno)
            meta = rec
        elif kind == "truth":
            if truth is not None:
                raise TraceParseError("duplicate truth record", lineno)
            ivs = _need(rec, "intervals", (list,), lineno)
            try:
                truth = AttentionTruth(tuple((a, b, k) for a, b, k in ivs))
            except (TypeError, ValueError):
                raise TraceParseError("truth intervals must be [t_start, t_end, id] triples", lineno) from None
        else:
            raise TraceParseError(f"unknown record kind {kind!r}", lineno)
    if meta is None:
        raise TraceParseError("missing meta record")
    trace = Trace(
        gaze=gaze,
        frames=frames,
        truth=truth,
        gaze_rate=float(meta.get("gaze_rate", DEFAULT_GAZE_RATE)),
        frame_rate=float(meta.get("frame_rate", DEFAULT_FRAME_RATE)),
        seed=meta.get("seed"),
        scenario=meta.get("scenario"),
    )
    return check(trace)


def loads_trace(text):
    return read_trace(io.StringIO(text))
