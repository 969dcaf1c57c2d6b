"""Two-stage attention trigger.

The always-on stage looks only at gaze: a potential attention epoch is a
period ``T`` during which at least ``majority_q`` of the valid gaze samples
sit inside a small square (side ``area_fraction``) centred on the window
median. When that holds the gate asks a fusion handle for a decision; an
accepted decision starts a fixed-length recording, a rejected one goes to
cooldown.

Phases::

    Idle -> Candidate -> FusionPending -> Recording -> Cooldown -> Idle
                |               `--------(reject)------^
                `--(window broken)--> Idle
"""

from __future__ import annotations

import csv
import enum
import io
import math
from fractions import Fraction
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .oculomotor import Movement, MovementEstimate, OculomotorConfig, classify_arrays, _transition_ends_at

EPS = 1e-9


class GateProtocolError(RuntimeError):
    """A fusion decision arrived while no fusion request was outstanding."""


class Phase(enum.Enum):
    IDLE = "Idle"
    CANDIDATE = "Candidate"
    FUSION_PENDING = "FusionPending"
    RECORDING = "Recording"
    COOLDOWN = "Cooldown"


class EventKind(enum.Enum):
    BEGIN = "Begin"
    INVOKE_FUSION = "InvokeFusion"
    START_RECORDING = "StartRecording"
    FUSION_REJECTED = "FusionRejected"
    STOP_RECORDING = "StopRecording"
    END = "End"


@dataclass(frozen=True)
class GateConfig:
    T: float = 1.0
    area_fraction: float = 0.05
    majority_q: float = 0.90
    window_N: int = 4
    snippet_duration: float = 10.0
    cooldown: float = 0.5
    run_len: int = 3

    def __post_init__(self):
        errs = []
        if not self.T > 0:
            errs.append("T must be > 0")
        if not 0 < self.area_fraction < 1:
            errs.append("area_fraction must be in (0, 1)")
        if not 0 < self.majority_q <= 1:
            errs.append("majority_q must be in (0, 1]")
        if self.window_N < 1:
            errs.append("window_N must be >= 1")
        if not self.snippet_duration > 0:
            errs.append("snippet_duration must be > 0")
        if self.cooldown < 0:
            errs.append("cooldown must be >= 0")
        if self.run_len < 1:
            errs.append("run_len must be >= 1")
        if errs:
            raise ValueError("; ".join(errs))


@dataclass(frozen=True)
class GateState:
    phase: Phase = Phase.IDLE
    phase_entry_t: float = 0.0
    active_snippet: float | None = None
    candidate_t: float | None = None
    pending_t: float | None = None
    score: float | None = None
    free_t: float | None = None  # when the gate last became free to fire


@dataclass(frozen=True)
class Snippet:
    t_start: float
    t_end: float
    trigger_score: float

    @property
    def duration(self):
        return self.t_end - self.t_start


@dataclass(frozen=True)
class GateEvent:
    kind: EventKind
    t: float
    phase: Phase
    score: float | None = None
    accepted: bool | None = None
    snippet: Snippet | None = None


def _half(cfg):
    return 0.5 * cfg.area_fraction


def potential_attention(window, cfg=GateConfig()):
    """Majority-in-box test on a window of gaze samples spanning ``cfg.T``."""
    window = list(window)
    if len(window) >= 2:
        # n samples cover n sample periods of operating time
        covered = (window[-1].t - window[0].t) * len(window) / (len(window) - 1)
        if covered < cfg.T - EPS:
            raise ValueError(f"window covers {covered:.3f} s < T={cfg.T}")
    return box_majority_samples(window, cfg)


def box_majority_samples(window, cfg=GateConfig()):
    n = len(window)
    if n == 0:
        return False
    x = np.fromiter((s.x for s in window), dtype=np.float64, count=n)
    y = np.fromiter((s.y for s in window), dtype=np.float64, count=n)
    v = np.fromiter((bool(s.valid) for s in window), dtype=np.uint8, count=n)
    return bool(kernels.box_majority(x, y, v, 0, n, _half(cfg), float(cfg.majority_q)))


class _Buffer:
    """Append-only columnar gaze history."""

    def __init__(self, capacity=1024):
        capacity = max(16, int(capacity))
        self.t = np.empty(capacity)
        self.x = np.empty(capacity)
        self.y = np.empty(capacity)
        self.v = np.empty(capacity, dtype=np.uint8)
        self.labels = np.empty(capacity, dtype=np.int8)
        self.n = 0

    def append(self, sample, label):
        if self.n == len(self.t):
            for name in ("t", "x", "y", "v", "labels"):
                old = getattr(self, name)
                new = np.empty(2 * len(old), dtype=old.dtype)
                new[: self.n] = old[: self.n]
                setattr(self, name, new)
        i = self.n
        self.t[i] = sample.t
        self.x[i] = sample.x
        self.y[i] = sample.y
        self.v[i] = 1 if sample.valid else 0
        self.labels[i] = int(label)
        self.n += 1
        return i

    def first_at_or_after(self, t):
        return int(np.searchsorted(self.t[: self.n], t - EPS, side="left"))


class AttentionGate:
    """Streaming gate state machine. One instance per gaze stream.

    Feed samples in time order through :meth:`step`; answer every
    ``InvokeFusion`` event with :meth:`deliver`; call :meth:`finish` at the
    end of the stream to close an open recording.
    """

    def __init__(self, cfg=GateConfig(), capacity=1024):
        self.cfg = cfg
        self.state = GateState()
        self.snippets = []
        self._buf = _Buffer(capacity)
        self._clock = -math.inf

    def _enter(self, phase, clock, **kw):
        self.state = replace(self.state, phase=phase, phase_entry_t=clock, **kw)

    def _majority(self, lo, hi):
        b = self._buf
        return bool(kernels.box_majority(b.x, b.y, b.v, lo, hi, _half(self.cfg), float(self.cfg.majority_q)))

    def step(self, estimate, sample, clock=None):
        """Advance by one gaze sample; returns a :class:`GateEvent` or ``None``."""
        clock = sample.t if clock is None else clock
        if clock < self._clock:
            raise ValueError(f"clock went backwards: {clock} < {self._clock}")
        self._clock = clock
        label = estimate.label if isinstance(estimate, MovementEstimate) else Movement(estimate)
        i = self._buf.append(sample, label)
        cfg, st = self.cfg, self.state

        if st.free_t is None:
            self.state = st = replace(st, free_t=clock)

        if st.phase is Phase.IDLE:
            lo = self._buf.first_at_or_after(max(st.free_t, clock - cfg.T))
            r = cfg.run_len
            recent = self._buf.labels[i + 1 - 2 * r : i + 1] if i + 1 >= 2 * r else ()
            if (len(recent) and _transition_ends_at(recent, 2 * r - 1, r)) or self._majority(lo, i + 1):
                self._enter(Phase.CANDIDATE, clock, candidate_t=clock)
                st = self.state
            else:
                return None

        if st.phase is Phase.CANDIDATE:
            # fire on the trailing T window alone, so triggers pack greedily
            if clock - st.free_t >= cfg.T - EPS and self._majority(self._buf.first_at_or_after(clock - cfg.T), i + 1):
                self._enter(Phase.FUSION_PENDING, clock, candidate_t=None, pending_t=clock)
                return GateEvent(EventKind.INVOKE_FUSION, clock, Phase.FUSION_PENDING)
            if not self._majority(self._buf.first_at_or_after(max(st.candidate_t, clock - cfg.T)), i + 1):
                self._enter(Phase.IDLE, clock, candidate_t=None)
            return None

        if st.phase is Phase.RECORDING:
            if clock - st.active_snippet >= cfg.snippet_duration - EPS:
                snip = Snippet(st.active_snippet, st.active_snippet + cfg.snippet_duration, st.score)
                self.snippets.append(snip)
                self._enter(Phase.COOLDOWN, clock, active_snippet=None, score=None)
                return GateEvent(EventKind.STOP_RECORDING, snip.t_end, Phase.COOLDOWN, snippet=snip)
            return None

        if st.phase is Phase.COOLDOWN:
            if clock - st.phase_entry_t >= cfg.cooldown - EPS:
                self._enter(Phase.IDLE, clock, free_t=clock)
            return None

        return None  # FusionPending waits for deliver()

    def deliver(self, accepted, score, clock):
        """Apply the fusion outcome for the outstanding request."""
        if self.state.phase is not Phase.FUSION_PENDING:
            raise GateProtocolError(f"fusion decision delivered in phase {self.state.phase.value}")
        if clock < self.state.pending_t:
            raise ValueError("decision delivered before it was requested")
        self._clock = max(self._clock, clock)
        if accepted:
            self._enter(Phase.RECORDING, clock, active_snippet=clock, score=float(score), pending_t=None)
            return GateEvent(EventKind.START_RECORDING, clock, Phase.RECORDING, score=float(score), accepted=True)
        self._enter(Phase.COOLDOWN, clock, pending_t=None)
        return GateEvent(EventKind.FUSION_REJECTED, clock, Phase.COOLDOWN, score=float(score), accepted=False)

    def finish(self, clock):
        """Close the stream at ``clock``; a running recording is cut there."""
        st = self.state
        if st.phase is Phase.RECORDING:
            end = min(clock, st.active_snippet + self.cfg.snippet_duration)
            if end > st.active_snippet:
                self.snippets.append(Snippet(st.active_snippet, end, st.score))
        return GateEvent(EventKind.END, clock, st.phase)


def gate_step(gate, estimate, sample, clock=None):
    """Functional spelling of :meth:`AttentionGate.step`: ``(state, event)``."""
    ev = gate.step(estimate, sample, clock)
    return gate.state, ev


# -- fusion handles -------------------------------------------------------


@dataclass
class FusionContext:
    """What a fusion handle may look at when the gate asks for a decision."""

    trace: object
    index: int
    clock: float
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    valid: np.ndarray
    labels: np.ndarray
    likelihood: np.ndarray
    gate_cfg: GateConfig


class AlwaysAccept:
    uses_scene = False

    def __call__(self, ctx):
        return True, 1.0


class AlwaysReject:
    uses_scene = False

    def __call__(self, ctx):
        return False, 0.0


class EyeOnlyRule:
    """Eye-tracking-alone decision rule.

    Accepts when the current run of pursuit/fixation labels covers the
    whole trailing ``T`` window and was entered through a saccade run of at
    least ``run_len`` samples. Never reads scene frames.
    """

    uses_scene = False

    def __call__(self, ctx):
        labels, t, i = ctx.labels, ctx.t, ctx.index
        cfg = ctx.gate_cfg
        j = i
        while j >= 0 and labels[j] in (Movement.SMOOTH_PURSUIT, Movement.FIXATION):
            j -= 1
        run_start = t[j + 1] if j + 1 <= i else math.inf
        if run_start > ctx.clock - cfg.T + EPS:
            return False, 0.0
        k = j
        while k >= 0 and labels[k] == Movement.SACCADE:
            k -= 1
        ok = j - k >= cfg.run_len
        return ok, 1.0 if ok else 0.0


# -- replay ---------------------------------------------------------------


@dataclass(frozen=True)
class AttentionDecision:
    t: float
    a_t: int
    score: float
    stage: str  # "GateRejected" | "FusionRejected" | "Accepted"


@dataclass
class GateRun:
    snippets: list
    decisions: list
    events: list
    span: tuple
    uses_scene: bool
    estimates_labels: np.ndarray = field(repr=False, default=None)
    estimates_likelihood: np.ndarray = field(repr=False, default=None)

    def log_rows(self):
        return [
            (ev.t, ev.phase.value, ev.kind.value, ev.score, ev.accepted)
            for ev in self.events
        ]

    def phase_time(self):
        """Seconds spent in FusionPending and in Recording."""
        return phase_durations(self.log_rows())


def collect_snippets(trace, cfg=GateConfig(), fusion=None, ocfg=OculomotorConfig()):
    """Replay the gate over ``trace`` with ``fusion`` answering every request.

    The decision for a request raised at sample ``i`` is delivered at sample
    ``i + 1`` (one gaze period of fusion latency).
    """
    fusion = AlwaysAccept() if fusion is None else fusion
    t, x, y, v = trace.gaze_arrays()
    n = len(t)
    if n == 0:
        return GateRun([], [], [], (0.0, 0.0), getattr(fusion, "uses_scene", False))
    labels, lik = classify_arrays(t, x, y, v, ocfg)
    gate = AttentionGate(cfg, capacity=n)
    start, end = trace.span()
    events = [GateEvent(EventKind.BEGIN, start, Phase.IDLE)]
    decisions = []
    pending = None
    gaze = trace.gaze
    for i in range(n):
        clock = float(t[i])
        if pending is not None:
            ok, score = pending
            events.append(gate.deliver(ok, score, clock))
            pending = None
        ev = gate.step(int(labels[i]), gaze[i], clock)
        if ev is None:
            continue
        events.append(ev)
        if ev.kind is EventKind.INVOKE_FUSION:
            ctx = FusionContext(trace, i, clock, t, x, y, v, labels, lik, cfg)
            ok, score = fusion(ctx)
            ok = bool(ok)
            decisions.append(AttentionDecision(clock, int(ok), float(score), "Accepted" if ok else "FusionRejected"))
            pending = (ok, float(score))
    events.append(gate.finish(end))
    return GateRun(gate.snippets, decisions, events, (start, end), getattr(fusion, "uses_scene", False), labels, lik)


# -- decision log ---------------------------------------------------------

LOG_COLUMNS = ("t", "phase", "event", "score", "accepted")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_decision_log(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_COLUMNS)
    for r in rows:
        w.writerow([_fmt(c) for c in r])
    return buf.getvalue()


def parse_decision_log(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    rows = []
    for rec in csv.DictReader(lines):
        acc = rec["accepted"]
        rows.append(
            (
                float(rec["t"]),
                rec["phase"],
                rec["event"],
                float(rec["score"]) if rec["score"] else None,
                None if acc == "" else acc == "1",
            )
        )
    return rows


def _snap(t):
    # sample clocks are rational; recover the exact time from its float
    return Fraction(float(t)).limit_denominator(1_000_000)


def phase_durations(rows, exact=False):
    """Return ``(span, {phase: seconds})`` integrated over a decision log.

    Times are snapped to the nearest fraction with denominator at most 10**6
    (exact for sample clocks up to 1 MHz) and summed exactly, so equal
    schedules give identical totals however they are cut. With ``exact`` the
    values are :class:`fractions.Fraction` seconds.
    """
    rows = sorted(rows, key=lambda r: r[0])
    if not rows:
        raise ValueError("empty decision log")
    begin = [r for r in rows if r[2] == EventKind.BEGIN.value]
    endr = [r for r in rows if r[2] == EventKind.END.value]
    t0 = _snap(begin[0][0] if begin else rows[0][0])
    t1 = _snap(endr[-1][0] if endr else rows[-1][0])
    totals = {p.value: Fraction(0) for p in Phase}
    for a, b in zip(rows, rows[1:]):
        totals[a[1]] = totals.get(a[1], Fraction(0)) + max(Fraction(0), min(_snap(b[0]), t1) - _snap(a[0]))
    if exact:
        return t1 - t0, totals
    return float(t1 - t0), {k: float(v) for k, v in totals.items()}


def trigger_rate(rows):
    """Fraction of operating time spent in FusionPending or Recording."""
    span, totals = phase_durations(rows, exact=True)
    if span <= 0:
        raise ValueError("decision log covers no time")
    return float((totals[Phase.FUSION_PENDING.value] + totals[Phase.RECORDING.value]) / span)
