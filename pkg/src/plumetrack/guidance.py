"""Level-curve observer and tracking control law.

The observer keeps an estimate x_hat of a point on the c = c0 level curve
and is integrated by explicit Euler at the control period:

    x_hat' = n_ff
           + v_d * A g / |A g|
           - k1 * g * (g^T (x_hat - x_r) + c_hat - c0)

with g the gradient estimate at the vessel, A = [[0, -1], [1, 0]] (a +90
degree rotation), and n_ff the normal feedforward for the moving curve.
The planar control adds a proportional pull of the driven point z onto
x_hat:

    u = x_hat' terms - k2 * (z - x_hat)

Two feedforward sign conventions are implemented.  Differentiating
c(x(t), t) = c0 with the dispersion PDE gives the normal velocity
(v . g - k lap) g / |g|^2 ("pde-derived", the default); the alternative
"advection-opposed" convention flips the advection term's sign,
-(v . g + k lap) g / |g|^2.  The two differ only in the advection part;
the measurement-feedback k1 term stabilizes both, which is why either can
track in practice.  The acceptance suite quantifies the difference on a
pure-advection scenario.

With the stock cross rig the Laplacian estimate is identically zero (see
sensing), so the k lap term is inert there regardless of convention.

Sign note: for a radially decreasing field the gradient points inward and
A g then points clockwise around the maximum, so the patrol circulates
clockwise (negative winding).  The tests assert this geometric fact.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

# +90 degree (counter-clockwise) rotation
ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])

SIGN_PDE = "pde-derived"
SIGN_OPPOSED = "advection-opposed"
SIGN_MODES = (SIGN_PDE, SIGN_OPPOSED)

STATUS_SEEKING = "seeking"
STATUS_TRACKING = "tracking"
STATUS_DEGENERATE = "degenerate-gradient"

# status promotion: |c_hat - c0| < 0.1 c0 and |z - x_hat| < 1 m held for 2 s
TRACK_BAND = 0.10
TRACK_DIST = 1.0
TRACK_HOLD = 2.0


class DegenerateGradientError(ValueError):
    """Gradient magnitude below the configured floor."""


@dataclass(frozen=True)
class GuidanceGains:
    """Controller constants; c0 is the tracked concentration.

    k1 multiplies ppb-scale residuals into m/s through the gradient, so
    its effective unit is m^3/(ppb^2 s); it is configured as a bare
    number like the rest of the gains.
    """

    c0: float                    # ppb
    k: float                     # controller diffusion constant, m^2/s
    k1: float                    # gradient/observer gain
    k2: float                    # tracking gain, 1/s
    v_d: float                   # patrol speed, m/s
    grad_floor: float = 0.05     # ppb/m; below this the estimate is unusable

    def __post_init__(self):
        if self.c0 <= 0:
            raise ValueError("tracked concentration c0 must be > 0")
        if self.k < 0:
            raise ValueError("controller diffusion constant k must be >= 0")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("gains k1, k2 must be > 0")
        if self.v_d < 0:
            raise ValueError("patrol speed v_d must be >= 0")
        if self.grad_floor <= 0:
            raise ValueError("gradient floor must be > 0")


@dataclass(frozen=True)
class GuidanceState:
    """Observer estimate plus diagnostic tracking status."""

    xhat: np.ndarray
    last_u: np.ndarray
    status: str = STATUS_SEEKING
    window_start: float | None = None    # start of the current in-band window
    converged: bool = False              # sticky once promoted to tracking


def init(x_r) -> GuidanceState:
    """Fresh observer state anchored at the vessel position."""
    x = np.asarray(x_r, dtype=float).reshape(2).copy()
    return GuidanceState(xhat=x, last_u=np.zeros(2))


def _check_mode(mode: str):
    if mode not in SIGN_MODES:
        raise ValueError(f"unknown sign convention {mode!r}; "
                         f"expected one of {SIGN_MODES}")


def normal_feedforward(grad, lap: float, v, k: float, mode: str) -> np.ndarray:
    """Feedforward normal velocity of the moving level curve."""
    _check_mode(mode)
    g = np.asarray(grad, dtype=float).reshape(2)
    v = np.asarray(v, dtype=float).reshape(2)
    gg = float(g @ g)
    if gg == 0.0:
        raise DegenerateGradientError("zero gradient in normal feedforward")
    if mode == SIGN_PDE:
        speed = (float(v @ g) - k * lap) / gg
    else:
        speed = -(float(v @ g) + k * lap) / gg
    return speed * g


def tangential(grad, v_d: float) -> np.ndarray:
    """Patrol term v_d * A g / |A g| (note |A g| = |g|; A is orthogonal)."""
    g = np.asarray(grad, dtype=float).reshape(2)
    ag = ROT90 @ g
    n = float(np.hypot(ag[0], ag[1]))
    if n == 0.0:
        raise DegenerateGradientError("zero gradient in tangential term")
    return v_d * ag / n


def _correction(gains: GuidanceGains, xhat, x_r, c_hat: float, grad) -> np.ndarray:
    residual = float(grad @ (xhat - x_r)) + (c_hat - gains.c0)
    return -gains.k1 * residual * grad


def observer_update(state: GuidanceState, gains: GuidanceGains, mode: str,
                    x_r, c_hat: float, grad, lap: float, v_r,
                    dt: float) -> GuidanceState:
    """One explicit Euler step of the level-curve observer.

    When the gradient magnitude is below the floor the estimate is held
    and the status flags the degeneracy.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    x_r = np.asarray(x_r, dtype=float).reshape(2)
    grad = np.asarray(grad, dtype=float).reshape(2)
    v_r = np.asarray(v_r, dtype=float).reshape(2)
    for name, val in (("x_r", x_r), ("grad", grad), ("v_r", v_r),
                      ("c_hat", c_hat), ("lap", lap)):
        if not np.all(np.isfinite(val)):
            raise ValueError(f"non-finite observer input {name}")
    if float(np.hypot(grad[0], grad[1])) < gains.grad_floor:
        return replace(state, status=STATUS_DEGENERATE, window_start=None)
    rate = (normal_feedforward(grad, lap, v_r, gains.k, mode)
            + tangential(grad, gains.v_d)
            + _correction(gains, state.xhat, x_r, c_hat, grad))
    return replace(state, xhat=state.xhat + dt * rate)


def control(state: GuidanceState, gains: GuidanceGains, mode: str,
            x_r, z, c_hat: float, grad, lap: float, v_r) -> np.ndarray:
    """Planar control u for the driven point z.

    Full law when the gradient is usable; with a degenerate gradient only
    the -k2 (z - x_hat) pull remains (hold-and-pure-tracking fallback).
    """
    x_r = np.asarray(x_r, dtype=float).reshape(2)
    z = np.asarray(z, dtype=float).reshape(2)
    grad = np.asarray(grad, dtype=float).reshape(2)
    pull = -gains.k2 * (z - state.xhat)
    if float(np.hypot(grad[0], grad[1])) < gains.grad_floor:
        return pull
    return (normal_feedforward(grad, lap, v_r, gains.k, mode)
            + tangential(grad, gains.v_d)
            + _correction(gains, state.xhat, x_r, c_hat, grad)
            + pull)


def update_status(state: GuidanceState, gains: GuidanceGains, c_hat: float,
                  grad, z, u, t: float) -> GuidanceState:
    """Refresh the diagnostic status and remember the applied control.

    Promotion to tracking is sticky and requires the concentration band
    and the z-to-estimate distance to hold for TRACK_HOLD seconds; a
    degenerate gradient resets the window and reports itself regardless.
    """
    grad = np.asarray(grad, dtype=float).reshape(2)
    z = np.asarray(z, dtype=float).reshape(2)
    u = np.asarray(u, dtype=float).reshape(2)
    if float(np.hypot(grad[0], grad[1])) < gains.grad_floor:
        return replace(state, status=STATUS_DEGENERATE,
                       window_start=None, last_u=u)
    converged = state.converged
    window = state.window_start
    in_band = (abs(c_hat - gains.c0) < TRACK_BAND * gains.c0
               and float(np.hypot(*(z - state.xhat))) < TRACK_DIST)
    if in_band:
        window = t if window is None else window
        if t - window >= TRACK_HOLD:
            converged = True
    else:
        window = None
    status = STATUS_TRACKING if converged else STATUS_SEEKING
    return replace(state, status=status, window_start=window,
                   converged=converged, last_u=u)
