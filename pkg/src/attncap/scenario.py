"""Seeded synthetic traces: moving objects on a luma canvas plus a scripted
gaze process, with the attention ground truth implied by the script.

Randomness uses numpy's PCG64 generator. A scenario seed feeds a
``SeedSequence`` whose three spawned children drive, in order, the gaze
jitter, the rendering (background texture and sensor noise), and the
tracker dropouts. Each stream is therefore reproducible on its own and
across platforms.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .trace import AttentionTruth, GazeSample, SceneFrame, Trace

EPS = 1e-9
BUILTIN_NAMES = ("pursuit_basic", "jittery_pursuit", "blank_stare", "multi_object_shift")


class ScenarioValidationError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid scenario: " + "; ".join(self.violations))


class UnknownScenarioError(KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown scenario {name!r}; available: {', '.join(BUILTIN_NAMES)}")

    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class SceneObject:
    id: int
    path: tuple  # ((t, x, y), ...) piecewise-linear, normalized coordinates
    shape: str = "disc"  # "disc" | "square"
    size: float = 0.09  # radius (disc) or half side (square), fraction of canvas width
    intensity: float = 0.9

    def position(self, t):
        ts = [p[0] for p in self.path]
        xs = [p[1] for p in self.path]
        ys = [p[2] for p in self.path]
        return float(np.interp(t, ts, xs)), float(np.interp(t, ts, ys))

    def covers(self, p, t, aspect):
        cx, cy = self.position(t)
        dx = p[0] - cx
        dy = (p[1] - cy) / aspect
        if self.shape == "square":
            return abs(dx) <= self.size and abs(dy) <= self.size
        return math.hypot(dx, dy) <= self.size


@dataclass(frozen=True)
class FollowObject:
    duration: float
    object: int
    jitter: float = 0.003
    lag: float = 0.1
    spike_rate: float = 0.0  # per-sample probability of a one-sample tracker spike
    spike_amplitude: float = 0.06
    kind: str = field(default="follow_object", init=False)


@dataclass(frozen=True)
class FixatePoint:
    duration: float
    point: tuple
    jitter: float = 0.002
    kind: str = field(default="fixate_point", init=False)


@dataclass(frozen=True)
class SaccadeTo:
    duration: float
    target: object  # (x, y) point or an object id
    kind: str = field(default="saccade_to", init=False)


@dataclass(frozen=True)
class WanderBlankly:
    duration: float
    region: tuple  # (x0, y0, x1, y1)
    speed: float = 0.35
    kind: str = field(default="wander_blankly", init=False)


PHASE_TYPES = {c.__dataclass_fields__["kind"].default: c for c in (FollowObject, FixatePoint, SaccadeTo, WanderBlankly)}


@dataclass(frozen=True)
class ScenarioSpec:
    duration: float
    objects: tuple = ()
    gaze_script: tuple = ()
    canvas: tuple = (32, 24)
    dropout: float = 0.0
    seed: int = 0
    name: str = "custom"
    gaze_rate: float = 30.0
    frame_rate: float = 30.0
    start: tuple = (0.5, 0.5)

    def phase_bounds(self):
        t = 0.0
        out = []
        for ph in self.gaze_script:
            out.append((t, t + ph.duration, ph))
            t += ph.duration
        return out

    def object(self, oid):
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(oid)

    @property
    def aspect(self):
        return self.canvas[1] / self.canvas[0]

    # -- JSON ---------------------------------------------------------------

    def to_dict(self):
        return {
            "name": self.name,
            "duration": self.duration,
            "canvas": list(self.canvas),
            "seed": self.seed,
            "gaze_rate": self.gaze_rate,
            "frame_rate": self.frame_rate,
            "start": list(self.start),
            "noise": {"dropout": self.dropout},
            "objects": [
                {"id": o.id, "shape": o.shape, "size": o.size, "intensity": o.intensity, "path": [list(p) for p in o.path]}
                for o in self.objects
            ],
            "gaze_script": [_phase_dict(p) for p in self.gaze_script],
        }

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        errs = []
        objs = []
        for i, o in enumerate(d.get("objects", [])):
            try:
                objs.append(
                    SceneObject(
                        id=int(o["id"]),
                        path=tuple(tuple(float(v) for v in p) for p in o["path"]),
                        shape=o.get("shape", "disc"),
                        size=float(o.get("size", 0.09)),
                        intensity=float(o.get("intensity", 0.9)),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                errs.append(f"objects[{i}]: {exc!r}")
        phases = []
        for i, p in enumerate(d.get("gaze_script", [])):
            kind = p.get("kind") if isinstance(p, dict) else None
            if kind not in PHASE_TYPES:
                errs.append(f"gaze_script[{i}].kind: unknown phase kind {kind!r}")
                continue
            args = {k: v for k, v in p.items() if k != "kind"}
            for key in ("point", "region"):
                if key in args:
                    args[key] = tuple(args[key])
            if kind == "saccade_to" and isinstance(args.get("target"), list):
                args["target"] = tuple(args["target"])
            try:
                phases.append(PHASE_TYPES[kind](**args))
            except TypeError as exc:
                errs.append(f"gaze_script[{i}]: {exc}")
        if errs:
            raise ScenarioValidationError(errs)
        try:
            spec = cls(
                duration=float(d["duration"]),
                objects=tuple(objs),
                gaze_script=tuple(phases),
                canvas=tuple(int(v) for v in d.get("canvas", (32, 24))),
                dropout=float(d.get("noise", {}).get("dropout", 0.0)),
                seed=int(d.get("seed", 0)),
                name=str(d.get("name", "custom")),
                gaze_rate=float(d.get("gaze_rate", 30.0)),
                frame_rate=float(d.get("frame_rate", 30.0)),
                start=tuple(float(v) for v in d.get("start", (0.5, 0.5))),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioValidationError([f"top-level: {exc!r}"]) from None
        return validate_spec(spec)

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))


def _phase_dict(p):
    d = asdict(p)
    for k, v in list(d.items()):
        if isinstance(v, tuple):
            d[k] = list(v)
    return d


def validate_spec(spec):
    errs = []
    if not (spec.duration >= 0 and math.isfinite(spec.duration)):
        errs.append("duration: must be finite and >= 0")
    w, h = spec.canvas if len(spec.canvas) == 2 else (0, 0)
    if w < 1 or h < 1:
        errs.append("canvas: width and height must be >= 1")
    if not 0.0 <= spec.dropout < 1.0:
        errs.append("noise.dropout: must be in [0, 1)")
    if not (spec.gaze_rate > 0 and spec.frame_rate > 0):
        errs.append("gaze_rate/frame_rate: must be > 0")
    elif spec.gaze_rate < spec.frame_rate:
        errs.append("gaze_rate: must be >= frame_rate")
    if not all(0.0 <= v <= 1.0 for v in spec.start):
        errs.append("start: must lie in [0,1]^2")
    ids = set()
    for i, o in enumerate(spec.objects):
        where = f"objects[{i}]"
        if o.id in ids:
            errs.append(f"{where}.id: duplicate id {o.id}")
        ids.add(o.id)
        if o.shape not in ("disc", "square"):
            errs.append(f"{where}.shape: must be 'disc' or 'square'")
        if not o.size > 0:
            errs.append(f"{where}.size: must be > 0")
        if not 0.0 <= o.intensity <= 1.0:
            errs.append(f"{where}.intensity: must be in [0, 1]")
        if not o.path:
            errs.append(f"{where}.path: needs at least one waypoint")
        prev = -math.inf
        for k, p in enumerate(o.path):
            if len(p) != 3:
                errs.append(f"{where}.path[{k}]: waypoint must be (t, x, y)")
                continue
            if p[0] < prev:
                errs.append(f"{where}.path[{k}]: waypoint times must be non-decreasing")
            prev = p[0]
            if not (0.0 <= p[1] <= 1.0 and 0.0 <= p[2] <= 1.0):
                errs.append(f"{where}.path[{k}]: waypoint ({p[1]}, {p[2]}) leaves the canvas")
    total = 0.0
    for i, ph in enumerate(spec.gaze_script):
        where = f"gaze_script[{i}]"
        if not ph.duration > 0:
            errs.append(f"{where}.duration: must be > 0")
        total += ph.duration
        if isinstance(ph, FollowObject):
            if ph.object not in ids:
                errs.append(f"{where}.object: unknown object id {ph.object}")
            if ph.jitter < 0 or ph.lag < 0 or ph.spike_amplitude < 0:
                errs.append(f"{where}: jitter, lag and spike_amplitude must be >= 0")
            if not 0.0 <= ph.spike_rate <= 1.0:
                errs.append(f"{where}.spike_rate: must be in [0, 1]")
        elif isinstance(ph, FixatePoint):
            if not _in_unit(ph.point):
                errs.append(f"{where}.point: must lie in [0,1]^2")
            if ph.jitter < 0:
                errs.append(f"{where}.jitter: must be >= 0")
        elif isinstance(ph, SaccadeTo):
            if isinstance(ph.target, (int, np.integer)) and not isinstance(ph.target, bool):
                if ph.target not in ids:
                    errs.append(f"{where}.target: unknown object id {ph.target}")
            elif not (isinstance(ph.target, tuple) and _in_unit(ph.target)):
                errs.append(f"{where}.target: must be an object id or a point in [0,1]^2")
        elif isinstance(ph, WanderBlankly):
            r = ph.region
            if len(r) != 4 or not (0 <= r[0] < r[2] <= 1 and 0 <= r[1] < r[3] <= 1):
                errs.append(f"{where}.region: must be (x0, y0, x1, y1) inside [0,1]^2 with x0<x1, y0<y1")
            if not ph.speed > 0:
                errs.append(f"{where}.speed: must be > 0")
    if abs(total - spec.duration) > 1e-6:
        errs.append(f"gaze_script: phase durations sum to {total:g}, expected duration {spec.duration:g}")
    if errs:
        raise ScenarioValidationError(errs)
    return spec


def _in_unit(p):
    return len(p) == 2 and 0.0 <= p[0] <= 1.0 and 0.0 <= p[1] <= 1.0


# -- generation ----------------------------------------------------------------


def _streams(seed):
    ss = np.random.SeedSequence(int(seed))
    return [np.random.Generator(np.random.PCG64(c)) for c in ss.spawn(3)]


def _wander_path(start, region, speed, duration, rng):
    """Constant-speed polyline through random waypoints inside ``region``."""
    x0, y0, x1, y1 = region
    pts = [tuple(start)]
    times = [0.0]
    t = 0.0
    while t < duration:
        cur = pts[-1]
        # waypoints at least a quarter region away keep the gaze moving
        for _ in range(20):
            nxt = (rng.uniform(x0, x1), rng.uniform(y0, y1))
            if math.hypot(nxt[0] - cur[0], nxt[1] - cur[1]) >= 0.25 * min(x1 - x0, y1 - y0):
                break
        d = math.hypot(nxt[0] - cur[0], nxt[1] - cur[1])
        t += max(d / speed, 1e-3)
        pts.append(nxt)
        times.append(t)
    return np.array(times), np.array(pts)


def script_positions(spec, times, rng=None):
    """Noise-free intended gaze positions and per-sample jitter sigma.

    Returns ``(pos, sigma, phase_index)``. ``rng`` only drives wander
    waypoints; pass the gaze stream generator for reproducible traces.
    """
    rng = rng or np.random.Generator(np.random.PCG64(0))
    n = len(times)
    pos = np.zeros((n, 2))
    sig = np.zeros(n)
    pidx = np.full(n, -1, dtype=np.int64)
    cur = np.array(spec.start, dtype=float)
    bounds = spec.phase_bounds()
    for k, (s, e, ph) in enumerate(bounds):
        last = k == len(bounds) - 1
        sel = (times >= s - EPS) & ((times < e - EPS) | (last & (times <= e + EPS)))
        ts = times[sel]
        pidx[sel] = k
        if isinstance(ph, FollowObject):
            obj = spec.object(ph.object)
            p = np.array([obj.position(t - ph.lag) for t in ts]).reshape(-1, 2)
            pos[sel] = p
            sig[sel] = ph.jitter
            end = np.array(obj.position(e - ph.lag))
        elif isinstance(ph, FixatePoint):
            pos[sel] = ph.point
            sig[sel] = ph.jitter
            end = np.array(ph.point, dtype=float)
        elif isinstance(ph, SaccadeTo):
            if isinstance(ph.target, tuple):
                tgt = np.array(ph.target, dtype=float)
            else:
                tgt = np.array(spec.object(ph.target).position(e))
            frac = ((ts - s) / ph.duration)[:, None]
            pos[sel] = cur + (tgt - cur) * frac
            end = tgt
        elif isinstance(ph, WanderBlankly):
            wt, wp = _wander_path(cur, ph.region, ph.speed, ph.duration, rng)
            rel = ts - s
            pos[sel] = np.column_stack([np.interp(rel, wt, wp[:, 0]), np.interp(rel, wt, wp[:, 1])])
            end = np.array([np.interp(ph.duration, wt, wp[:, 0]), np.interp(ph.duration, wt, wp[:, 1])])
        else:  # pragma: no cover - validated earlier
            raise TypeError(ph)
        cur = end
    return pos, sig, pidx


def truth_intervals(spec):
    """Attention epochs implied by the script (follow, or fixation on an object)."""
    out = []
    for s, e, ph in spec.phase_bounds():
        if isinstance(ph, FollowObject):
            out.append((s, e, ph.object))
        elif isinstance(ph, FixatePoint):
            for o in spec.objects:
                if o.covers(ph.point, s, spec.aspect):
                    out.append((s, e, o.id))
                    break
    return AttentionTruth(tuple(out))


def _background(w, h, rng):
    coarse = rng.uniform(0.0, 1.0, size=(4, 5))
    yy = np.linspace(0, coarse.shape[0] - 1, h)
    xx = np.linspace(0, coarse.shape[1] - 1, w)
    rows = np.array([np.interp(xx, np.arange(coarse.shape[1]), r) for r in coarse])
    smooth = np.array([np.interp(yy, np.arange(coarse.shape[0]), rows[:, c]) for c in range(w)]).T
    fine = rng.uniform(-1.0, 1.0, size=(h, w))
    return 0.15 + 0.25 * smooth + 0.04 * fine


def render_frame(spec, t, background, rng, noise=0.01):
    w, h = spec.canvas
    img = background.copy()
    cx = np.arange(w) + 0.5
    cy = np.arange(h) + 0.5
    for o in spec.objects:
        ox, oy = o.position(t)
        px, py, rad = ox * w, oy * h, o.size * w
        if o.shape == "square":
            covx = np.clip(rad - np.abs(cx - px) + 0.5, 0.0, 1.0)
            covy = np.clip(rad - np.abs(cy - py) + 0.5, 0.0, 1.0)
            cov = covy[:, None] * covx[None, :]
        else:
            d = np.hypot(cx[None, :] - px, cy[:, None] - py)
            cov = np.clip(rad - d + 0.5, 0.0, 1.0)
        img = (1.0 - cov) * img + cov * o.intensity
    if noise:
        img = img + rng.normal(0.0, noise, size=img.shape)
    return np.round(np.clip(img, 0.0, 1.0), 3)


def generate(spec):
    """Render ``spec`` into a :class:`~attncap.trace.Trace`; deterministic in ``spec.seed``."""
    validate_spec(spec)
    g_rng, r_rng, d_rng = _streams(spec.seed)
    n_gaze = int(math.floor(spec.duration * spec.gaze_rate + 1e-9))
    n_frame = int(math.floor(spec.duration * spec.frame_rate + 1e-9))
    gt = np.arange(n_gaze) / spec.gaze_rate
    ft = np.arange(n_frame) / spec.frame_rate
    truth = truth_intervals(spec)
    if n_gaze == 0:
        return Trace(truth=truth if len(truth) else None, gaze_rate=spec.gaze_rate, frame_rate=spec.frame_rate,
                     seed=spec.seed, scenario=spec.name)
    pos, sig, pidx = script_positions(spec, gt, g_rng)
    noise = g_rng.normal(0.0, 1.0, size=(n_gaze, 2)) * sig[:, None]
    rate = np.zeros(n_gaze)
    amp = np.zeros(n_gaze)
    for k, ph in enumerate(spec.gaze_script):
        if isinstance(ph, FollowObject):
            rate[pidx == k] = ph.spike_rate
            amp[pidx == k] = ph.spike_amplitude
    spike = g_rng.uniform(size=n_gaze) < rate
    ang = g_rng.uniform(0.0, 2.0 * np.pi, size=n_gaze)
    noise += (spike * amp)[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
    xy = np.round(np.clip(pos + noise, 0.0, 1.0), 6)
    valid = d_rng.uniform(size=n_gaze) >= spec.dropout
    gaze = [GazeSample(float(t), float(p[0]), float(p[1]), bool(v)) for t, p, v in zip(gt, xy, valid)]
    bg = _background(spec.canvas[0], spec.canvas[1], r_rng)
    frames = [SceneFrame(float(t), render_frame(spec, t, bg, r_rng)) for t in ft]
    return Trace(
        gaze=gaze,
        frames=frames,
        truth=truth,
        gaze_rate=spec.gaze_rate,
        frame_rate=spec.frame_rate,
        seed=spec.seed,
        scenario=spec.name,
    )


# -- builtin scenarios ---------------------------------------------------------


def tile(spec, duration):
    """Repeat the script (and object paths) of ``spec`` until ``duration``."""
    period = spec.duration
    reps = int(math.ceil(duration / period - 1e-9))
    objects = []
    for o in spec.objects:
        path = [(t + r * period, x, y) for r in range(reps) for (t, x, y) in o.path]
        objects.append(replace(o, path=tuple(path)))
    phases = []
    t = 0.0
    for r in range(reps):
        for ph in spec.gaze_script:
            if t >= duration - EPS:
                break
            d = min(ph.duration, duration - t)
            phases.append(replace(ph, duration=d))
            t += d
    return replace(spec, duration=duration, objects=tuple(objects), gaze_script=tuple(phases))


def builtin(name, seed=0, duration=None):
    """Fully parameterized spec for one of :data:`BUILTIN_NAMES`.

    ``duration`` longer than the scenario's natural length repeats the
    script; shorter truncates it.
    """
    if name not in BUILTIN_NAMES:
        raise UnknownScenarioError(name)
    spec = _BUILDERS[name](seed)
    if duration is not None and abs(duration - spec.duration) > EPS:
        spec = tile(spec, float(duration))
    return validate_spec(spec)


def _pursuit_basic(seed, jitter=0.003):
    obj = SceneObject(1, ((0.0, 0.62, 0.45), (21.0, 0.70, 0.52)), "disc", 0.09, 0.9)
    script = (
        WanderBlankly(4.0, (0.05, 0.05, 0.35, 0.45)),
        SaccadeTo(0.15, 1),
        FollowObject(9.0, 1, jitter=jitter, lag=0.1),
        SaccadeTo(0.15, (0.2, 0.8)),
        WanderBlankly(7.7, (0.05, 0.6, 0.4, 0.95)),
    )
    return ScenarioSpec(21.0, (obj,), script, seed=seed, name="pursuit_basic", start=(0.2, 0.25))


def _jittery_pursuit(seed, jitter=0.006, spike_rate=0.05):
    car = SceneObject(1, ((0.0, 0.70, 0.35), (34.0, 0.78, 0.45)), "disc", 0.10, 0.95)
    van = SceneObject(2, ((0.0, 0.30, 0.70), (34.0, 0.22, 0.62)), "square", 0.08, 0.85)
    script = (
        WanderBlankly(3.0, (0.05, 0.05, 0.45, 0.4)),
        SaccadeTo(0.15, 1),
        FollowObject(9.0, 1, jitter=jitter, lag=0.1, spike_rate=spike_rate),
        SaccadeTo(0.15, (0.55, 0.85)),
        WanderBlankly(4.5, (0.45, 0.65, 0.95, 0.95)),
        SaccadeTo(0.15, 2),
        FollowObject(9.0, 2, jitter=jitter, lag=0.1, spike_rate=spike_rate),
        SaccadeTo(0.15, (0.6, 0.1)),
        WanderBlankly(7.9, (0.45, 0.05, 0.95, 0.2)),
    )
    return ScenarioSpec(34.0, (car, van), script, seed=seed, name="jittery_pursuit", start=(0.25, 0.2))


def _blank_stare(seed, jitter=0.002):
    obj = SceneObject(1, ((0.0, 0.78, 0.28), (24.0, 0.80, 0.32)), "disc", 0.09, 0.9)
    script = (
        WanderBlankly(3.0, (0.05, 0.05, 0.45, 0.45)),
        SaccadeTo(0.15, (0.25, 0.72)),
        FixatePoint(8.0, (0.25, 0.72), jitter=jitter),
        SaccadeTo(0.15, (0.45, 0.3)),
        FixatePoint(8.0, (0.45, 0.3), jitter=jitter),
        SaccadeTo(0.15, (0.15, 0.15)),
        WanderBlankly(4.55, (0.05, 0.05, 0.4, 0.4)),
    )
    return ScenarioSpec(24.0, (obj,), script, seed=seed, name="blank_stare", start=(0.2, 0.2))


def _multi_object_shift(seed, jitter=0.003):
    a = SceneObject(1, ((0.0, 0.25, 0.35), (33.0, 0.32, 0.40)), "disc", 0.09, 0.9)
    b = SceneObject(2, ((0.0, 0.75, 0.62), (33.0, 0.68, 0.58)), "square", 0.08, 0.8)
    script = (
        WanderBlankly(2.5, (0.4, 0.05, 0.95, 0.3)),
        SaccadeTo(0.15, 1),
        FollowObject(9.0, 1, jitter=jitter, lag=0.1),
        SaccadeTo(0.15, (0.55, 0.15)),
        WanderBlankly(4.5, (0.45, 0.05, 0.95, 0.3)),
        SaccadeTo(0.15, 2),
        FollowObject(9.0, 2, jitter=jitter, lag=0.1),
        SaccadeTo(0.15, (0.2, 0.85)),
        WanderBlankly(7.4, (0.05, 0.7, 0.5, 0.95)),
    )
    return ScenarioSpec(33.0, (a, b), script, seed=seed, name="multi_object_shift", start=(0.6, 0.15))


_BUILDERS = {
    "pursuit_basic": _pursuit_basic,
    "jittery_pursuit": _jittery_pursuit,
    "blank_stare": _blank_stare,
    "multi_object_shift": _multi_object_shift,
}

# per-sample tracker spike rate ranges for follow phases of randomized variants
VARIANT_SPIKES = {
    "pursuit_basic": (0.0, 0.03),
    "jittery_pursuit": (0.04, 0.06),
    "blank_stare": (0.0, 0.0),
    "multi_object_shift": (0.0, 0.04),
}

# jitter ranges used by randomized variants
VARIANT_JITTER = {
    "pursuit_basic": (0.002, 0.005),
    "jittery_pursuit": (0.005, 0.007),
    "blank_stare": (0.001, 0.003),
    "multi_object_shift": (0.002, 0.006),
}


def variant(name, seed):
    """Randomized variant of a builtin for corpora.

    Draws jitter from :data:`VARIANT_JITTER`, a follow-phase spike rate from
    :data:`VARIANT_SPIKES`, object intensity and size, and optionally
    mirrors the layout left-right. The layout mirror keeps
    every object clear of every wander region and blank fixation point.
    """
    if name not in BUILTIN_NAMES:
        raise UnknownScenarioError(name)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 7919])))
    lo, hi = VARIANT_JITTER[name]
    spec = _BUILDERS[name](seed, jitter=float(rng.uniform(lo, hi)))
    objs = tuple(
        replace(o, intensity=float(rng.uniform(0.75, 1.0)), size=float(rng.uniform(0.075, 0.105)))
        for o in spec.objects
    )
    s_lo, s_hi = VARIANT_SPIKES[name]
    phases = tuple(
        replace(ph, spike_rate=float(rng.uniform(s_lo, s_hi))) if isinstance(ph, FollowObject) else ph
        for ph in spec.gaze_script
    )
    spec = replace(spec, objects=objs, gaze_script=phases)
    if rng.uniform() < 0.5:
        spec = _mirror(spec)
    return validate_spec(replace(spec, name=name, seed=int(seed)))


def _mirror(spec):
    fx = lambda x: 1.0 - x  # noqa: E731
    objs = tuple(replace(o, path=tuple((t, fx(x), y) for t, x, y in o.path)) for o in spec.objects)
    phases = []
    for ph in spec.gaze_script:
        if isinstance(ph, FixatePoint):
            ph = replace(ph, point=(fx(ph.point[0]), ph.point[1]))
        elif isinstance(ph, SaccadeTo) and isinstance(ph.target, tuple):
            ph = replace(ph, target=(fx(ph.target[0]), ph.target[1]))
        elif isinstance(ph, WanderBlankly):
            x0, y0, x1, y1 = ph.region
            ph = replace(ph, region=(fx(x1), y0, fx(x0), y1))
        phases.append(ph)
    return replace(spec, objects=objs, gaze_script=tuple(phases), start=(fx(spec.start[0]), spec.start[1]))


def corpus_specs(n, seed=0, names=BUILTIN_NAMES):
    """``n`` randomized variants cycling through ``names``; trace ``k`` uses seed ``seed + k``."""
    return [variant(names[k % len(names)], seed + k) for k in range(n)]
