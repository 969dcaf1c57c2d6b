"""Component energy model for the eye-gated capture pipeline.

Per-frame imaging energy is split into sensor, ISP and transfer terms.
Pipeline energy charges the eye path for the whole operating time, the
world camera plus fusion only while fusion runs, and the world camera plus
encoding only while a snippet records. Savings compare against recording
everything with the world camera.

All quantities are SI: watts, seconds, joules, pixels, hertz.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from importlib import resources

import numpy as np


class EnergyParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ImagingParams:
    P_sensor_idle: float = 0.0
    R: float = 0.0  # sensor resolution, pixels
    R_frame: float = 0.0  # transferred frame resolution, pixels
    f: float = 1.0  # external clock, Hz
    T_exp: float = 0.0
    P_ISP_active: float = 0.0
    P_ISP_idle: float = 0.0
    T_ISP: float = 0.0
    k: float = 0.0  # transfer energy, J/pixel
    P_sensor_slope: float = 0.0  # active sensor power per sensor pixel, W/pixel

    def __post_init__(self):
        bad = [f.name for f in fields(self) if not (getattr(self, f.name) >= 0 and math.isfinite(getattr(self, f.name)))]
        if bad:
            raise EnergyParameterError(f"imaging parameters must be finite and >= 0: {', '.join(bad)}")
        if self.R < self.R_frame:
            raise EnergyParameterError(f"sensor resolution R={self.R:g} below frame resolution R_frame={self.R_frame:g}")

    @property
    def P_sensor_active(self):
        return self.P_sensor_slope * self.R

    def readout_time(self):
        if self.f == 0:
            raise EnergyParameterError("external clock f must be > 0")
        return self.R_frame / self.f


def sensor_energy(p):
    """Idle power over the exposure plus active power over the pixel readout."""
    return p.P_sensor_idle * p.T_exp + p.P_sensor_active * p.readout_time()


def isp_energy(p):
    """Active ISP power over processing plus idle power while the sensor exposes and reads out."""
    return p.P_ISP_active * p.T_ISP + p.P_ISP_idle * (p.T_exp + p.readout_time())


def comm_energy(p):
    return p.k * p.R_frame


def imaging_energy(p):
    """Energy of one captured frame, J."""
    return sensor_energy(p) + isp_energy(p) + comm_energy(p)


def camera_power(p, fps):
    """Average camera power when streaming at ``fps`` frames per second."""
    return fps * imaging_energy(p)


@dataclass(frozen=True)
class PipelinePowers:
    P_eye_camera: float
    P_world_camera: float
    P_eye_tracking: float
    P_fusion: float
    P_encoding_storing: float

    def __post_init__(self):
        bad = [f.name for f in fields(self) if not (getattr(self, f.name) >= 0 and math.isfinite(getattr(self, f.name)))]
        if bad:
            raise EnergyParameterError(f"pipeline powers must be finite and >= 0: {', '.join(bad)}")

    @property
    def eye(self):
        return self.P_eye_camera + self.P_eye_tracking

    @property
    def capture(self):
        return self.P_world_camera + self.P_encoding_storing

    def capture_to_eye_ratio(self):
        return self.capture / self.eye


@dataclass(frozen=True)
class DutyTimes:
    T_always_on: float
    T_fusion: float = 0.0
    T_auto_captured: float = 0.0

    def __post_init__(self):
        tol = 1e-9 * max(1.0, self.T_always_on)
        if not self.T_always_on >= 0:
            raise EnergyParameterError("T_always_on must be >= 0")
        for name in ("T_fusion", "T_auto_captured"):
            v = getattr(self, name)
            if not (v >= 0 and v <= self.T_always_on + tol):
                raise EnergyParameterError(f"{name}={v:g} must lie in [0, T_always_on={self.T_always_on:g}]")

    @classmethod
    def from_fractions(cls, T, fusion, capture):
        return cls(T, fusion * T, capture * T)


def memx_terms(times, powers):
    """``(always_on, fusion, capture)`` energy terms, J."""
    return (
        times.T_always_on * powers.eye,
        times.T_fusion * (powers.P_world_camera + powers.P_fusion),
        times.T_auto_captured * powers.capture,
    )


def memx_energy(times, powers):
    a, b, c = memx_terms(times, powers)
    return a + b + c


def baseline_energy(powers, T_always_on):
    """Record-everything reference: world camera and encoding on the whole time."""
    return T_always_on * powers.capture


def savings(E_memx, powers, T_always_on):
    base = baseline_energy(powers, T_always_on)
    if not base > 0:
        raise EnergyParameterError("baseline energy is zero; savings undefined")
    return min(1.0 - E_memx / base, float(np.nextafter(1.0, 0.0)))


def battery_hours(capacity_Wh, average_power_W):
    if not average_power_W > 0:
        raise EnergyParameterError("average power must be > 0 for a battery projection")
    return capacity_Wh / average_power_W


# -- parameter file -----------------------------------------------------------

_IMAGING_KEYS = tuple(f.name for f in fields(ImagingParams))
_POWER_KEYS = tuple(f.name for f in fields(PipelinePowers))
_SCALAR_KEYS = ("battery_capacity_Wh", "world.fps", "eye.fps", "pilot.fusion_fraction", "pilot.capture_fraction")


@dataclass(frozen=True)
class EnergyParams:
    world: ImagingParams
    eye: ImagingParams
    powers: PipelinePowers
    battery_capacity_Wh: float = 0.36
    world_fps: float = 30.0
    eye_fps: float = 30.0
    pilot_fusion_fraction: float = 0.0
    pilot_capture_fraction: float = 0.0

    def pilot_average_power(self):
        d = DutyTimes.from_fractions(1.0, self.pilot_fusion_fraction, self.pilot_capture_fraction)
        return memx_energy(d, self.powers)

    def to_items(self):
        items = [(f"world.{k}", getattr(self.world, k)) for k in _IMAGING_KEYS]
        items += [(f"eye.{k}", getattr(self.eye, k)) for k in _IMAGING_KEYS]
        items += [(k, getattr(self.powers, k)) for k in _POWER_KEYS]
        items += [
            ("battery_capacity_Wh", self.battery_capacity_Wh),
            ("world.fps", self.world_fps),
            ("eye.fps", self.eye_fps),
            ("pilot.fusion_fraction", self.pilot_fusion_fraction),
            ("pilot.capture_fraction", self.pilot_capture_fraction),
        ]
        return items


def parse_params(text, source="<params>"):
    """Parse ``key = value`` lines (``#`` comments) into :class:`EnergyParams`."""
    known = set(f"world.{k}" for k in _IMAGING_KEYS) | set(f"eye.{k}" for k in _IMAGING_KEYS)
    known |= set(_POWER_KEYS) | set(_SCALAR_KEYS)
    vals = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep:
            raise EnergyParameterError(f"{source}:{n}: expected 'key = value'")
        if key not in known:
            raise EnergyParameterError(f"{source}:{n}: unknown parameter {key!r}")
        if key in vals:
            raise EnergyParameterError(f"{source}:{n}: duplicate parameter {key!r}")
        try:
            vals[key] = float(value)
        except ValueError:
            raise EnergyParameterError(f"{source}:{n}: {key} is not a number: {value!r}") from None
    required = [f"{cam}.{k}" for cam in ("world", "eye") for k in _IMAGING_KEYS] + list(_POWER_KEYS)
    missing = [k for k in required if k not in vals]
    if missing:
        raise EnergyParameterError(f"{source}: missing parameters: {', '.join(missing)}")
    return EnergyParams(
        world=ImagingParams(**{k: vals[f"world.{k}"] for k in _IMAGING_KEYS}),
        eye=ImagingParams(**{k: vals[f"eye.{k}"] for k in _IMAGING_KEYS}),
        powers=PipelinePowers(**{k: vals[k] for k in _POWER_KEYS}),
        battery_capacity_Wh=vals.get("battery_capacity_Wh", 0.36),
        world_fps=vals.get("world.fps", 30.0),
        eye_fps=vals.get("eye.fps", 30.0),
        pilot_fusion_fraction=vals.get("pilot.fusion_fraction", 0.0),
        pilot_capture_fraction=vals.get("pilot.capture_fraction", 0.0),
    )


def format_params(params):
    return "".join(f"{k} = {v!r}\n" for k, v in params.to_items())


def load_params(path):
    with open(path, encoding="utf-8") as fh:
        return parse_params(fh.read(), source=str(path))


def default_params_text():
    return resources.files("attncap").joinpath("data/energy_default.txt").read_text(encoding="utf-8")


def default_params():
    return parse_params(default_params_text(), source="energy_default.txt")


# -- reports ------------------------------------------------------------------

REPORT_COLUMNS = (
    "T_always_on", "T_fusion", "T_auto_captured", "E_always_on", "E_fusion", "E_capture",
    "E_MemX", "E_baseline", "savings", "alpha", "average_power_W", "battery_hours",
)


@dataclass(frozen=True)
class EnergyReport:
    times: DutyTimes
    E_always_on: float
    E_fusion: float
    E_capture: float
    E_MemX: float
    E_baseline: float
    savings: float | None
    alpha: float | None
    average_power_W: float | None
    battery_hours: float | None

    def row(self):
        return (
            self.times.T_always_on, self.times.T_fusion, self.times.T_auto_captured,
            self.E_always_on, self.E_fusion, self.E_capture, self.E_MemX, self.E_baseline,
            self.savings, self.alpha, self.average_power_W, self.battery_hours,
        )


def energy_report(times, params, alpha=None):
    """Energy report for duty ``times``; savings and battery life are None on a zero-length span."""
    powers = params.powers
    a, b, c = memx_terms(times, powers)
    e = a + b + c
    base = baseline_energy(powers, times.T_always_on)
    if times.T_always_on > 0:
        sav = savings(e, powers, times.T_always_on) if base > 0 else None
        avg = e / times.T_always_on
        hours = battery_hours(params.battery_capacity_Wh, avg) if avg > 0 else math.inf
    else:
        sav = avg = hours = None
    return EnergyReport(times, a, b, c, e, base, sav, alpha, avg, hours)


def format_report(reports, header=None):
    buf = io.StringIO()
    if header:
        for line in header:
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        w.writerow(["" if v is None else repr(float(v)) for v in r.row()])
    return buf.getvalue()


def duty_from_log(rows, uses_scene=True):
    """Duty times from a decision log. Fusion time counts only for handles that read the scene."""
    from .gate import Phase, phase_durations

    span, totals = phase_durations(rows)
    t_fusion = totals[Phase.FUSION_PENDING.value] if uses_scene else 0.0
    return DutyTimes(span, t_fusion, totals[Phase.RECORDING.value])


def duty_from_run(run):
    if not run.events:
        return DutyTimes(0.0)
    return duty_from_log(run.log_rows(), run.uses_scene)
