"""Environment factors (the privileged vector e) and their spatial/temporal schedules.

A schedule maps (position, control step) to a local factor value. Spatial
schedules read position[0]/position[1] (missing coordinates count as 0);
temporal schedules ignore position. For the differential drive the local
value is a single surface triple; the simulator samples it once per wheel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MSDFactors",
    "WheelFriction",
    "DiffDriveFactors",
    "QuadFactors",
    "PIDGains",
    "Constant",
    "PiecewiseConstantSpatial",
    "RadialContinuous",
    "TimeVarying",
    "SinusoidalWind",
    "DissipatingBrownianWind",
    "MassSwitch",
    "env_at",
    "factor_spec",
    "factor_from_spec",
    "schedule_spec",
    "schedule_from_spec",
]


@dataclass(frozen=True)
class MSDFactors:
    mass: float

    def __post_init__(self):
        if not self.mass > 0.0:
            raise ValueError(f"mass must be positive, got {self.mass}")

    def as_vector(self) -> np.ndarray:
        return np.array([self.mass])

    @classmethod
    def from_vector(cls, v) -> "MSDFactors":
        return cls(float(v[0]))


@dataclass(frozen=True)
class WheelFriction:
    mu_sliding: float
    mu_turning: float
    mu_rolling: float

    def __post_init__(self):
        if min(self.mu_sliding, self.mu_turning, self.mu_rolling) < 0.0:
            raise ValueError(f"friction coefficients must be >= 0, got {self}")

    def as_vector(self) -> np.ndarray:
        return np.array([self.mu_sliding, self.mu_turning, self.mu_rolling])

    @classmethod
    def from_vector(cls, v) -> "WheelFriction":
        return cls(float(v[0]), float(v[1]), float(v[2]))


@dataclass(frozen=True)
class DiffDriveFactors:
    left: WheelFriction
    right: WheelFriction

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.left.as_vector(), self.right.as_vector()])

    @classmethod
    def from_vector(cls, v) -> "DiffDriveFactors":
        return cls(WheelFriction.from_vector(v[:3]), WheelFriction.from_vector(v[3:]))


@dataclass(frozen=True)
class QuadFactors:
    wind: np.ndarray  # force in N, world frame

    def __post_init__(self):
        wind = np.asarray(self.wind, dtype=np.float64)
        if wind.shape != (3,) or not np.all(np.isfinite(wind)):
            raise ValueError(f"wind must be a finite 3-vector, got {self.wind}")
        object.__setattr__(self, "wind", wind)

    def as_vector(self) -> np.ndarray:
        return self.wind.copy()

    @classmethod
    def from_vector(cls, v) -> "QuadFactors":
        return cls(np.asarray(v, dtype=np.float64))


@dataclass(frozen=True)
class PIDGains:
    kp_v: float
    ki_v: float
    kp_h: float
    kd_h: float

    def __post_init__(self):
        if min(self.kp_v, self.ki_v, self.kp_h, self.kd_h) <= 0.0:
            raise ValueError(f"gains must be positive, got {self}")


def _xy(position) -> tuple[float, float]:
    p = np.atleast_1d(np.asarray(position, dtype=np.float64))
    x = float(p[0])
    y = float(p[1]) if p.size > 1 else 0.0
    return x, y


def _lerp_value(a, b, w: float):
    va, vb = a.as_vector(), b.as_vector()
    return type(a).from_vector(va + w * (vb - va))


class Constant:
    """The same factor value everywhere, forever."""

    def __init__(self, value):
        self.value = value

    def at(self, position, step: int, rng=None):
        return self.value


class PiecewiseConstantSpatial:
    """Axis-aligned rectangles in the (x, y) plane, nearest-region fallback.

    regions: list of ((xmin, xmax, ymin, ymax), value). Overlaps resolve to
    the first matching region; positions outside every region take the
    region with the closest boundary.
    """

    def __init__(self, regions):
        if not regions:
            raise ValueError("need at least one region")
        self.regions = [(tuple(map(float, rect)), value) for rect, value in regions]
        for (xmin, xmax, ymin, ymax), _ in self.regions:
            if xmin > xmax or ymin > ymax:
                raise ValueError(f"malformed rect {(xmin, xmax, ymin, ymax)}")

    def at(self, position, step: int, rng=None):
        x, y = _xy(position)
        best, best_d = None, np.inf
        for (xmin, xmax, ymin, ymax), value in self.regions:
            dx = max(xmin - x, 0.0, x - xmax)
            dy = max(ymin - y, 0.0, y - ymax)
            d = np.hypot(dx, dy)
            if d == 0.0:
                return value
            if d < best_d:
                best, best_d = value, d
        return best


class RadialContinuous:
    """Linear blend in radial distance between an inner and an outer value."""

    def __init__(self, center, r_inner: float, r_outer: float, inner, outer):
        if not 0.0 <= r_inner < r_outer:
            raise ValueError(f"need 0 <= r_inner < r_outer, got {r_inner}, {r_outer}")
        self.center = np.asarray(center, dtype=np.float64)
        self.r_inner = float(r_inner)
        self.r_outer = float(r_outer)
        self.inner = inner
        self.outer = outer

    def at(self, position, step: int, rng=None):
        x, y = _xy(position)
        r = float(np.hypot(x - self.center[0], y - self.center[1]))
        if r <= self.r_inner:
            return self.inner
        if r >= self.r_outer:
            return self.outer
        w = (r - self.r_inner) / (self.r_outer - self.r_inner)
        return _lerp_value(self.inner, self.outer, w)


class TimeVarying:
    """Cycles through a value sequence, holding each for `period` steps."""

    def __init__(self, period: int, values):
        if period < 1 or not values:
            raise ValueError("period must be >= 1 and values non-empty")
        self.period = int(period)
        self.values = list(values)

    def at(self, position, step: int, rng=None):
        return self.values[(step // self.period) % len(self.values)]


class SinusoidalWind:
    """x-direction wind oscillating around a nominal force, updated in blocks."""

    def __init__(self, nominal: float, amplitude: float = 0.5, period: int = 100,
                 update_every: int = 10):
        if period < 1 or update_every < 1:
            raise ValueError("period and update_every must be >= 1")
        self.nominal = float(nominal)
        self.amplitude = float(amplitude)
        self.period = int(period)
        self.update_every = int(update_every)

    def at(self, position, step: int, rng=None) -> QuadFactors:
        held = (step // self.update_every) * self.update_every
        d_x = self.nominal + self.amplitude * np.sin(2.0 * np.pi * held / self.period)
        return QuadFactors(np.array([d_x, 0.0, 0.0]))


class DissipatingBrownianWind:
    """Point-source x-wind decaying with distance plus a Brownian time term.

    The Brownian path is generated lazily per control step from an internal
    seeded generator (or a caller-supplied one), and cached so repeated
    queries of the same step agree.
    """

    def __init__(self, source, d0: float = 1.5, decay_length: float = 1.0,
                 sigma: float = 0.05, seed: int = 0):
        if decay_length <= 0.0:
            raise ValueError("decay_length must be positive")
        self.source = np.asarray(source, dtype=np.float64)
        self.d0 = float(d0)
        self.decay_length = float(decay_length)
        self.sigma = float(sigma)
        self.seed = int(seed)
        self._rng = np.random.default_rng(seed)
        self._path = [0.0]  # B_0 = 0

    def _brownian(self, step: int, rng) -> float:
        gen = rng if rng is not None else self._rng
        while len(self._path) <= step:
            self._path.append(self._path[-1] + float(gen.standard_normal()))
        return self._path[step]

    def at(self, position, step: int, rng=None) -> QuadFactors:
        p = np.zeros(3)
        q = np.atleast_1d(np.asarray(position, dtype=np.float64))
        p[: q.size] = q[:3]
        dist = float(np.linalg.norm(p - self.source))
        d_x = self.d0 * np.exp(-dist / self.decay_length) + self.sigma * self._brownian(step, rng)
        return QuadFactors(np.array([d_x, 0.0, 0.0]))


class MassSwitch:
    """Mass starts at `initial` and becomes `final` from `switch_step` on."""

    def __init__(self, initial: float, switch_step: int, final: float):
        if switch_step < 0:
            raise ValueError("switch_step must be >= 0")
        self.initial = MSDFactors(float(initial))
        self.final = MSDFactors(float(final))
        self.switch_step = int(switch_step)

    def at(self, position, step: int, rng=None) -> MSDFactors:
        return self.initial if step < self.switch_step else self.final


def env_at(schedule, position, time_step: int, rng=None):
    """Factor value a simulator experiences at this position and step."""
    return schedule.at(position, time_step, rng)


_FACTOR_KINDS = {
    "msd": MSDFactors,
    "wheel": WheelFriction,
    "diffdrive": DiffDriveFactors,
    "quad": QuadFactors,
}


def factor_spec(value) -> dict:
    """JSON-safe description of a factor value; inverse of factor_from_spec."""
    for kind, cls in _FACTOR_KINDS.items():
        if type(value) is cls:
            return {"kind": kind, "vector": [float(c) for c in value.as_vector()]}
    raise ValueError(f"not a known factor type: {type(value).__name__}")


def factor_from_spec(spec: dict):
    try:
        cls = _FACTOR_KINDS[spec["kind"]]
    except KeyError:
        raise ValueError(f"unknown factor kind {spec.get('kind')!r}") from None
    return cls.from_vector(np.asarray(spec["vector"], dtype=np.float64))


def schedule_spec(schedule) -> dict:
    """JSON-safe description of a schedule; inverse of schedule_from_spec.

    Note the Brownian wind round-trips to a fresh path: rebuilding replays
    the same seed from step 0, which matches the original only if the
    original was also queried from step 0 upward (simulators do that).
    """
    if isinstance(schedule, Constant):
        return {"kind": "constant", "value": factor_spec(schedule.value)}
    if isinstance(schedule, PiecewiseConstantSpatial):
        return {"kind": "piecewise", "regions": [
            {"rect": list(rect), "value": factor_spec(value)}
            for rect, value in schedule.regions]}
    if isinstance(schedule, RadialContinuous):
        return {"kind": "radial", "center": [float(c) for c in schedule.center],
                "r_inner": schedule.r_inner, "r_outer": schedule.r_outer,
                "inner": factor_spec(schedule.inner),
                "outer": factor_spec(schedule.outer)}
    if isinstance(schedule, TimeVarying):
        return {"kind": "time_varying", "period": schedule.period,
                "values": [factor_spec(v) for v in schedule.values]}
    if isinstance(schedule, SinusoidalWind):
        return {"kind": "sinusoidal_wind", "nominal": schedule.nominal,
                "amplitude": schedule.amplitude, "period": schedule.period,
                "update_every": schedule.update_every}
    if isinstance(schedule, DissipatingBrownianWind):
        return {"kind": "brownian_wind", "source": [float(c) for c in schedule.source],
                "d0": schedule.d0, "decay_length": schedule.decay_length,
                "sigma": schedule.sigma, "seed": schedule.seed}
    if isinstance(schedule, MassSwitch):
        return {"kind": "mass_switch", "initial": schedule.initial.mass,
                "switch_step": schedule.switch_step, "final": schedule.final.mass}
    raise ValueError(f"not a known schedule type: {type(schedule).__name__}")


def schedule_from_spec(spec: dict):
    kind = spec.get("kind")
    if kind == "constant":
        return Constant(factor_from_spec(spec["value"]))
    if kind == "piecewise":
        return PiecewiseConstantSpatial(
            [(r["rect"], factor_from_spec(r["value"])) for r in spec["regions"]])
    if kind == "radial":
        return RadialContinuous(spec["center"], spec["r_inner"], spec["r_outer"],
                                factor_from_spec(spec["inner"]),
                                factor_from_spec(spec["outer"]))
    if kind == "time_varying":
        return TimeVarying(spec["period"], [factor_from_spec(v) for v in spec["values"]])
    if kind == "sinusoidal_wind":
        return SinusoidalWind(spec["nominal"], spec["amplitude"], spec["period"],
                              spec["update_every"])
    if kind == "brownian_wind":
        return DissipatingBrownianWind(spec["source"], spec["d0"],
                                       spec["decay_length"], spec["sigma"], spec["seed"])
    if kind == "mass_switch":
        return MassSwitch(spec["initial"], spec["switch_step"], spec["final"])
    raise ValueError(f"unknown schedule kind {kind!r}")
