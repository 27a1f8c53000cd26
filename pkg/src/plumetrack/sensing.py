"""Four-point concentration sensing and the stencil gradient estimator.

Four point sensors ride at fixed body-frame offsets whose mean is zero, so
the stencil center coincides with the vessel position.  Readings get a
Gaussian noise term, a detection floor, and a range clamp emulating a
fluorometer.  From one synchronized sample the estimator reconstructs the
local concentration, gradient, and Hessian trace by a second-order Taylor
expansion solved in the minimum-norm least-squares sense:

    y_i = c(x_Si) - c_hat,  c_hat = mean of the four readings
    B   = [ (x_Si - x_r)^T | 0.5 vec((x_Si - x_r)(x_Si - x_r)^T) ]   (4 x 6)
    gamma = B^T (B B^T)^-1 y     (computed via SVD least squares)

gamma[0:2] is the gradient estimate and gamma[2] + gamma[5] the Hessian
trace (the Laplacian / divergence estimate).  Because y sums to zero by
construction, equal-arm point-symmetric layouts (the stock cross) cannot
observe the trace at all: the estimate is identically zero for arbitrary
readings.  An unequal-arm cross gives a nonzero but biased trace; four
mean-referenced samples leave 3 observations for 5 unknowns, so the trace
is never faithfully determined.  The tests pin both behaviors down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .vessel import VesselState

# BB^T condition numbers beyond this mean a (nearly) collinear stencil.
CONDITION_LIMIT = 1e10


class DegenerateStencilError(ValueError):
    """Stencil rows are (numerically) linearly dependent."""


@dataclass(frozen=True)
class SensorRig:
    """Body-frame sensor offsets; exactly four, mean zero, not collinear."""

    offsets: np.ndarray              # (4, 2)

    def __post_init__(self):
        o = np.asarray(self.offsets, dtype=float)
        if o.shape != (4, 2):
            raise ValueError("rig needs exactly 4 sensor offsets")
        scale = max(1.0, float(np.abs(o).max()))
        if np.abs(o.mean(axis=0)).max() > 1e-9 * scale:
            raise ValueError("sensor offsets must average to (0, 0)")
        # all collinear <=> every pairwise cross product vanishes
        cross = np.abs(o[:, 0][:, None] * o[:, 1][None, :]
                       - o[:, 1][:, None] * o[:, 0][None, :])
        if cross.max() <= 1e-12 * scale * scale:
            raise ValueError("sensor offsets must not all be collinear")
        object.__setattr__(self, "offsets", o)

    @classmethod
    def cross(cls, arm: float = 0.75) -> "SensorRig":
        """Stock layout: one sensor per axis at distance ``arm``."""
        return cls(np.array([[arm, 0.0], [-arm, 0.0],
                             [0.0, arm], [0.0, -arm]]))

    @classmethod
    def uneven_cross(cls, arm_x: float = 0.75, arm_y: float = 0.45) -> "SensorRig":
        """Demo layout with a nonzero (though biased) trace path."""
        return cls(np.array([[arm_x, 0.0], [-arm_x, 0.0],
                             [0.0, arm_y], [0.0, -arm_y]]))


@dataclass
class NoiseModel:
    """Fluorometer noise: Gaussian sigma, detection floor, range clamp.

    The generator is owned by a single run; draws are consumed in sensor
    order, one per sensor per sample, so runs are bit-reproducible.
    """

    sigma: float = 0.0
    floor: float = 0.01              # ppb; readings below report as 0
    range_max: float = 10000.0       # ppb
    seed: int = 0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.sigma < 0 or self.floor < 0 or self.range_max <= self.floor:
            raise ValueError("need sigma >= 0 and 0 <= floor < range_max")
        self.rng = np.random.default_rng(self.seed)


@dataclass(frozen=True)
class SensorSample:
    """World positions and processed readings of one synchronized sample."""

    positions: np.ndarray            # (4, 2)
    readings: np.ndarray             # (4,)
    t: float


@dataclass(frozen=True)
class StencilEstimate:
    """Reconstructed local field quantities at the stencil center."""

    c_hat: float                     # ppb, mean of the four readings
    grad: np.ndarray                 # (2,), ppb/m
    lap: float                       # ppb/m^2, Hessian trace estimate
    hessian_vec: np.ndarray          # (4,), [H11, H12, H21, H22]
    condition: float                 # cond(B B^T) diagnostic


def world_positions(rig: SensorRig, state: VesselState) -> np.ndarray:
    """Sensor positions: x_Si = x_r + R(theta) offset_i."""
    c, s = math.cos(state.heading), math.sin(state.heading)
    rot = np.array([[c, -s], [s, c]])
    return state.position[None, :] + rig.offsets @ rot.T


def sample(fieldmodel, positions, t: float, noise: NoiseModel) -> SensorSample:
    """Read the field at the sensor positions through the noise model.

    reading_i = clamp(c(x_Si, t) + sigma * g_i, 0, range_max), then zeroed
    when below the detection floor.  One draw per sensor per call, in
    sensor order, even when sigma is zero (keeps the stream aligned).
    """
    pts = np.asarray(positions, dtype=float)
    c, _, _ = fieldmodel.eval_many(pts, t)
    g = noise.rng.standard_normal(len(pts))
    readings = np.clip(c + noise.sigma * g, 0.0, noise.range_max)
    readings[readings < noise.floor] = 0.0
    return SensorSample(pts.copy(), readings, t)


def design_matrix(positions) -> tuple[np.ndarray, np.ndarray]:
    """(B, x_r) for the Taylor system; x_r is the position mean."""
    pts = np.asarray(positions, dtype=float)
    x_r = pts.mean(axis=0)
    d = pts - x_r
    quad = 0.5 * np.stack([np.outer(di, di).ravel() for di in d])
    return np.hstack([d, quad]), x_r


def estimate(samp: SensorSample) -> StencilEstimate:
    """Minimum-norm Taylor reconstruction of (c, grad, trace H).

    Solved with an SVD least squares rather than the explicit
    B^T (B B^T)^-1 product; the two agree to ~1e-10 on well-conditioned
    rigs (tested) and the SVD route stays stable near degeneracy.
    """
    B, _ = design_matrix(samp.positions)
    gram = B @ B.T
    condition = float(np.linalg.cond(gram))
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise DegenerateStencilError(
            f"stencil condition {condition:.3e} exceeds {CONDITION_LIMIT:.0e} "
            "(collinear or coincident sensors)")
    c_hat = float(samp.readings.mean())
    y = samp.readings - c_hat
    gamma, *_ = np.linalg.lstsq(B, y, rcond=None)
    return StencilEstimate(
        c_hat=c_hat,
        grad=gamma[:2].copy(),
        lap=float(gamma[2] + gamma[5]),
        hessian_vec=gamma[2:].copy(),
        condition=condition,
    )
