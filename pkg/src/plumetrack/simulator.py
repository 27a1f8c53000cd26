"""Closed-loop simulation runs, their logs, and derived metrics.

One run steps a scenario at the control period dt_c: advance the field
(grid fields substep for stability), read the four sensors, reconstruct
the local field, update the level-curve observer, compute the planar
control, convert it to actuator commands, and integrate the vessel.  A
record is appended at every control step, so a completed run holds
floor(duration / dt_c) + 1 records at t = 0, dt_c, ..., and runs are
bit-reproducible for a given seed.

A vessel that leaves a grid field's sampling domain truncates the run
(flagged on the log); a degenerate sensor stencil aborts it by raising
:class:`~plumetrack.sensing.DegenerateStencilError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import guidance, sensing, vessel
from .field import DomainError, FrozenGaussian, GridField, PuffPlume
from .guidance import GuidanceGains
from .sensing import NoiseModel, SensorRig
from .vessel import VesselParams, VesselState

CSV_COLUMNS = ("t", "x", "y", "theta", "zx", "zy", "xhat", "yhat",
               "c1", "c2", "c3", "c4", "chat", "gx", "gy", "lap",
               "ux", "uy", "nu", "omega", "sat", "status", "ctrue")

TRACKED_POINTS = ("head", "center")


@dataclass(frozen=True)
class Scenario:
    """Complete run configuration.  ``field0`` is the initial field model
    (PuffPlume, FrozenGaussian, or GridField); analytic fields are
    stateless and may be shared between runs."""

    name: str
    seed: int
    duration: float
    control_period: float
    physics_substep: float
    sign_convention: str
    tracked_point: str
    flow_noise_sigma: float
    field0: object
    rig: SensorRig
    noise_sigma: float
    noise_floor: float
    noise_range_max: float
    noise_seed: int | None
    params: VesselParams
    start_pose: tuple[float, float, float]
    gains: GuidanceGains

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.control_period <= 0:
            raise ValueError("control period must be > 0")
        if not 0 < self.physics_substep <= self.control_period + 1e-12:
            raise ValueError("physics substep must be in (0, control period]")
        if self.sign_convention not in guidance.SIGN_MODES:
            raise ValueError(f"unknown sign convention {self.sign_convention!r}")
        if self.tracked_point not in TRACKED_POINTS:
            raise ValueError(f"tracked point must be one of {TRACKED_POINTS}")
        if self.flow_noise_sigma < 0:
            raise ValueError("flow noise sigma must be >= 0")


@dataclass(frozen=True)
class RunLog:
    """Per-control-step time series of one run."""

    t: np.ndarray                 # (n,)
    pose: np.ndarray              # (n, 3): x, y, theta
    z: np.ndarray                 # (n, 2) head point
    xhat: np.ndarray              # (n, 2) observer estimate
    readings: np.ndarray          # (n, 4)
    chat: np.ndarray              # (n,)
    grad: np.ndarray              # (n, 2)
    lap: np.ndarray               # (n,)
    u: np.ndarray                 # (n, 2)
    nu: np.ndarray                # (n,)
    omega: np.ndarray             # (n,)
    sat: np.ndarray               # (n,) bool
    status: tuple                 # (n,) strings
    ctrue: np.ndarray             # (n,), NaN when the field has no oracle
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.t)

    def to_csv(self) -> str:
        """Fixed-column CSV, floats at 9 significant digits, missing
        ctrue as an empty field."""
        def f(v) -> str:
            return "%.9g" % v

        lines = [",".join(CSV_COLUMNS)]
        for i in range(len(self.t)):
            row = [f(self.t[i]),
                   f(self.pose[i, 0]), f(self.pose[i, 1]), f(self.pose[i, 2]),
                   f(self.z[i, 0]), f(self.z[i, 1]),
                   f(self.xhat[i, 0]), f(self.xhat[i, 1]),
                   f(self.readings[i, 0]), f(self.readings[i, 1]),
                   f(self.readings[i, 2]), f(self.readings[i, 3]),
                   f(self.chat[i]),
                   f(self.grad[i, 0]), f(self.grad[i, 1]), f(self.lap[i]),
                   f(self.u[i, 0]), f(self.u[i, 1]),
                   f(self.nu[i]), f(self.omega[i]),
                   "1" if self.sat[i] else "0",
                   self.status[i],
                   "" if math.isnan(self.ctrue[i]) else f(self.ctrue[i])]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def expected_records(duration: float, control_period: float) -> int:
    """floor(duration / dt_c) + 1 with a tolerance for binary dt_c."""
    return int(math.floor(duration / control_period + 1e-9)) + 1


def run(scenario: Scenario) -> RunLog:
    """Execute one closed-loop run; deterministic for a given seed."""
    sc = scenario
    noise = NoiseModel(sigma=sc.noise_sigma, floor=sc.noise_floor,
                       range_max=sc.noise_range_max,
                       seed=sc.seed if sc.noise_seed is None else sc.noise_seed)
    flow_rng = np.random.default_rng([sc.seed, 2])
    state = VesselState(sc.start_pose[0], sc.start_pose[1],
                        vessel.normalize_heading(sc.start_pose[2]))
    g = guidance.init(state.position)
    fieldmodel = sc.field0
    n_steps = expected_records(sc.duration, sc.control_period) - 1
    dt = sc.control_period

    cols: dict[str, list] = {name: [] for name in (
        "t", "pose", "z", "xhat", "readings", "chat", "grad", "lap",
        "u", "nu", "omega", "sat", "status", "ctrue")}
    truncated = False

    for i in range(n_steps + 1):
        t = i * dt
        if isinstance(fieldmodel, GridField):
            fieldmodel = fieldmodel.advance(t, sc.physics_substep)
        positions = sensing.world_positions(sc.rig, state)
        try:
            samp = sensing.sample(fieldmodel, positions, t, noise)
        except DomainError:
            truncated = True
            break
        est = sensing.estimate(samp)
        v_r = fieldmodel.flow.at(state.position, t)
        if sc.flow_noise_sigma > 0:
            v_r = v_r + sc.flow_noise_sigma * flow_rng.standard_normal(2)
        g = guidance.observer_update(g, sc.gains, sc.sign_convention,
                                     state.position, est.c_hat, est.grad,
                                     est.lap, v_r, dt)
        z = vessel.head_point(state, sc.params.offset)
        driven = z if sc.tracked_point == "head" else state.position
        u = guidance.control(g, sc.gains, sc.sign_convention, state.position,
                             driven, est.c_hat, est.grad, est.lap, v_r)
        cmd, saturated = vessel.to_actuators(u, state.heading, sc.params)
        g = guidance.update_status(g, sc.gains, est.c_hat, est.grad, z, u, t)
        if fieldmodel.has_analytic_truth:
            ctrue = fieldmodel.eval(z, t)[0]
        else:
            ctrue = math.nan

        cols["t"].append(t)
        cols["pose"].append((state.x, state.y, state.heading))
        cols["z"].append(z)
        cols["xhat"].append(g.xhat.copy())
        cols["readings"].append(samp.readings.copy())
        cols["chat"].append(est.c_hat)
        cols["grad"].append(est.grad.copy())
        cols["lap"].append(est.lap)
        cols["u"].append(np.asarray(u, dtype=float))
        cols["nu"].append(cmd.nu)
        cols["omega"].append(cmd.omega)
        cols["sat"].append(saturated)
        cols["status"].append(g.status)
        cols["ctrue"].append(ctrue)

        if i < n_steps:
            state = vessel.step(state, cmd, dt)

    return RunLog(
        t=np.asarray(cols["t"]),
        pose=np.asarray(cols["pose"]).reshape(-1, 3),
        z=np.asarray(cols["z"]).reshape(-1, 2),
        xhat=np.asarray(cols["xhat"]).reshape(-1, 2),
        readings=np.asarray(cols["readings"]).reshape(-1, 4),
        chat=np.asarray(cols["chat"]),
        grad=np.asarray(cols["grad"]).reshape(-1, 2),
        lap=np.asarray(cols["lap"]),
        u=np.asarray(cols["u"]).reshape(-1, 2),
        nu=np.asarray(cols["nu"]),
        omega=np.asarray(cols["omega"]),
        sat=np.asarray(cols["sat"], dtype=bool),
        status=tuple(cols["status"]),
        ctrue=np.asarray(cols["ctrue"]),
        truncated=truncated,
    )


# ---------------------------------------------------------------------------
# level-set oracle and run metrics
# ---------------------------------------------------------------------------

def level_set_radius(fieldmodel, c0: float, t: float) -> float | None:
    """Radius of the circular c = c0 level curve of a single-mound field.

    Defined for a single-seed PuffPlume and for FrozenGaussian; returns
    None when the peak is below c0 (empty level set).
    """
    if isinstance(fieldmodel, FrozenGaussian):
        if fieldmodel.peak < c0:
            return None
        return fieldmodel.sigma * math.sqrt(2.0 * math.log(fieldmodel.peak / c0))
    if isinstance(fieldmodel, PuffPlume):
        puff = fieldmodel.single_puff()
        if puff is None:
            raise ValueError("level-set radius needs a single-puff plume")
        peak = puff.peak(t)
        if peak < c0:
            return None
        tau = t - puff.release_time
        return math.sqrt(4.0 * puff.diffusion * tau * math.log(peak / c0))
    raise ValueError(
        f"no closed-form level set for {type(fieldmodel).__name__}")


def field_centroid(fieldmodel, t: float) -> np.ndarray:
    """Plume centroid used as the winding center."""
    if isinstance(fieldmodel, GridField):
        # mass centroid of the initial cells, advected by the flow
        nx, ny = fieldmodel.shape
        xs = fieldmodel.origin[0] + (np.arange(nx) + 0.5) * fieldmodel.cell_size
        ys = fieldmodel.origin[1] + (np.arange(ny) + 0.5) * fieldmodel.cell_size
        m = fieldmodel.conc.sum()
        if m <= 0:
            return fieldmodel.origin.copy()
        cx = float((fieldmodel.conc.sum(axis=1) @ xs) / m)
        cy = float((fieldmodel.conc.sum(axis=0) @ ys) / m)
        disp = fieldmodel.flow.at(None, t) * (t - fieldmodel.time)
        return np.array([cx, cy]) + disp
    return fieldmodel.centroid(t)


@dataclass(frozen=True)
class RunMetrics:
    """Flat scalar summary of a run.

    Error and patrol statistics are taken over the final half of the log;
    winding is accumulated from the first tracking record (final half if
    tracking was never reached) about the plume centroid at mid-run.
    """

    rms_conc_error: float
    mean_patrol_speed: float
    std_patrol_speed: float
    winding_sign: int
    winding_angle: float          # signed rad; clockwise is negative
    winding_backtrack: float      # largest excursion against the net direction
    mean_level_set_error: float | None
    saturation_fraction: float
    tracking_reached_at: float | None
    truncated: bool
    seed: int

    def as_dict(self) -> dict:
        return {
            "rms_conc_error": self.rms_conc_error,
            "mean_patrol_speed": self.mean_patrol_speed,
            "std_patrol_speed": self.std_patrol_speed,
            "winding_sign": self.winding_sign,
            "winding_angle": self.winding_angle,
            "winding_backtrack": self.winding_backtrack,
            "mean_level_set_error": self.mean_level_set_error,
            "saturation_fraction": self.saturation_fraction,
            "tracking_reached_at": self.tracking_reached_at,
            "truncated": self.truncated,
            "seed": self.seed,
        }


def _winding(points: np.ndarray, center: np.ndarray):
    """(total signed angle, adverse excursion) of a polyline about center."""
    rel = points - center[None, :]
    ang = np.arctan2(rel[:, 1], rel[:, 0])
    d = np.diff(ang)
    d = (d + math.pi) % (2.0 * math.pi) - math.pi
    if d.size == 0:
        return 0.0, 0.0
    cum = np.concatenate(([0.0], np.cumsum(d)))
    total = float(cum[-1])
    if total >= 0.0:
        adverse = float(np.max(np.maximum.accumulate(cum) - cum))
    else:
        adverse = float(np.max(cum - np.minimum.accumulate(cum)))
    return total, adverse


def metrics(log: RunLog, scenario: Scenario) -> RunMetrics:
    """Derived summary statistics for a run log."""
    if len(log) < 2:
        raise ValueError("metrics need at least 2 records")
    t = log.t
    half = t >= t[-1] / 2.0
    if half.sum() < 2:
        half = np.zeros(len(t), dtype=bool)
        half[-2:] = True

    c0 = scenario.gains.c0
    rms = float(np.sqrt(np.mean((log.chat[half] - c0) ** 2)))

    zh = log.z[half]
    dt = np.diff(t[half])
    speeds = np.linalg.norm(np.diff(zh, axis=0), axis=1) / dt
    mean_speed = float(np.mean(speeds))
    std_speed = float(np.std(speeds))

    tracking_at = None
    for i, s in enumerate(log.status):
        if s == guidance.STATUS_TRACKING:
            tracking_at = float(t[i])
            break

    start = int(np.argmax(half)) if tracking_at is None else \
        int(np.argmax(t >= tracking_at))
    center = field_centroid(scenario.field0, float(t[-1]) / 2.0)
    total, adverse = _winding(log.z[start:], center)
    sign = 0 if abs(total) < 1e-6 else (1 if total > 0 else -1)

    ls_err = None
    try:
        radii = [level_set_radius(scenario.field0, c0, float(ti))
                 for ti in t[half]]
    except ValueError:
        radii = None
    if radii is not None and all(r is not None for r in radii):
        dists = [float(np.hypot(*(log.z[j] - field_centroid(scenario.field0,
                                                            float(t[j])))))
                 for j in np.nonzero(half)[0]]
        ls_err = float(np.mean(np.abs(np.asarray(dists) - np.asarray(radii))))

    return RunMetrics(
        rms_conc_error=rms,
        mean_patrol_speed=mean_speed,
        std_patrol_speed=std_speed,
        winding_sign=sign,
        winding_angle=total,
        winding_backtrack=adverse,
        mean_level_set_error=ls_err,
        saturation_fraction=float(np.mean(log.sat)),
        tracking_reached_at=tracking_at,
        truncated=log.truncated,
        seed=scenario.seed,
    )
