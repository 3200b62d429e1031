"""Bloch-vector state and exact rotation propagators for a driven two-level spin.

In the rotating frame of the drive the spin sees an effective field described
by a drive amplitude Omega along the equatorial direction fixed by the drive
phase rho, and a detuning gamma*B along z.  The Bloch vector s precesses about
the instantaneous Larmor vector

    R(t) = (Omega cos rho, Omega sin rho, gamma*B),      ds/dt = R(t) x s(t),

at angular rate |R|.  Sign convention: positive detuning precesses the Bloch
vector from +x toward +y (right-handed about +z).  Signal formulas produced by
the sequence layer are even in this choice; it is fixed here so tests are
deterministic.

Propagation is always by exact axis-angle rotations.  Time-dependent controls
are handled by composing piecewise-constant slices sampled at interval
midpoints, on a mesh that is refined (halving the step) until a Richardson
error estimate meets tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .constants import TWO_PI
from .errors import ConvergenceFailure, InvalidParameter

__all__ = [
    "SpinState",
    "DriveParams",
    "LarmorVector",
    "StepControl",
    "ConvergenceReport",
    "larmor_from_drive",
    "propagate_constant",
    "propagate_swept",
    "propagate_swept_report",
    "apply_ideal_pulse",
    "apply_resonant_pulse",
]

_NORM_SLACK = 1e-6


@dataclass(frozen=True)
class SpinState:
    """Two-level quantum state as a Bloch vector (s_x, s_y, s_z)."""

    s_x: float
    s_y: float
    s_z: float

    def __post_init__(self):
        n = self.norm()
        if not math.isfinite(n):
            raise InvalidParameter("Bloch components must be finite")
        if n > 1.0 + _NORM_SLACK:
            raise InvalidParameter(f"Bloch norm {n} exceeds 1")

    def norm(self) -> float:
        return math.sqrt(self.s_x**2 + self.s_y**2 + self.s_z**2)

    def as_array(self) -> np.ndarray:
        return np.array([self.s_x, self.s_y, self.s_z], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "SpinState":
        x, y, z = np.asarray(arr, dtype=float)
        return cls(float(x), float(y), float(z))

    @classmethod
    def up(cls) -> "SpinState":
        """Initial state |0>, Bloch vector +z."""
        return cls(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class DriveParams:
    """Instantaneous control parameters: Rabi rate, drive phase, detuning.

    All angular frequencies in rad/s, phase in radians.  ``detuning`` is the
    coefficient of the z axis, i.e. gamma*B for a signal field B.
    """

    rabi: float
    phase: float
    detuning: float

    def __post_init__(self):
        if not self.rabi >= 0:
            raise InvalidParameter(f"rabi must be >= 0, got {self.rabi}")
        if not math.isfinite(self.phase):
            raise InvalidParameter("phase must be finite")
        if not math.isfinite(self.detuning):
            raise InvalidParameter("detuning must be finite")


@dataclass(frozen=True)
class LarmorVector:
    """Effective-field axis in spherical form: |R|, polar angle, azimuth."""

    magnitude: float
    polar_angle: float
    azimuth: float


@dataclass(frozen=True)
class StepControl:
    """Mesh policy for time-dependent propagation.

    The initial mesh guarantees at least ``steps_per_phase_turn`` slices per
    2*pi of drive-phase sweep and ``steps_per_larmor_turn`` slices per Larmor
    period; the mesh is then halved until the Richardson estimate (change of
    any Bloch component under one halving) drops below ``tol``, up to
    ``max_depth`` halvings.
    """

    steps_per_phase_turn: int = 64
    steps_per_larmor_turn: int = 64
    tol: float = 1e-6
    max_depth: int = 12
    min_steps: int = 16

    def __post_init__(self):
        if self.steps_per_phase_turn < 1 or self.steps_per_larmor_turn < 1:
            raise InvalidParameter("step densities must be >= 1")
        if not self.tol > 0:
            raise InvalidParameter("tol must be positive")
        if self.max_depth < 1:
            raise InvalidParameter("max_depth must be >= 1")


@dataclass(frozen=True)
class ConvergenceReport:
    """Refinement diagnostics for one swept propagation."""

    steps: int
    error_history: tuple
    converged: bool


# ---------------------------------------------------------------------------
# rotations
# ---------------------------------------------------------------------------

def _rotate(vec: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotate ``vec`` about unit ``axis`` by ``angle`` (right-handed)."""
    c = math.cos(angle)
    s = math.sin(angle)
    cross = np.cross(axis, vec)
    return vec * c + cross * s + axis * np.dot(axis, vec) * (1.0 - c)


def _rotation_matrices(nx, ny, nz, angle) -> np.ndarray:
    """Axis-angle rotation matrices, vectorized over leading dimensions.

    ``nx, ny, nz`` are unit-axis components and ``angle`` rotation angles,
    all broadcastable to a common shape; returns that shape + (3, 3).
    """
    nx, ny, nz, angle = np.broadcast_arrays(nx, ny, nz, angle)
    c = np.cos(angle)
    s = np.sin(angle)
    k = 1.0 - c
    mats = np.empty(angle.shape + (3, 3), dtype=float)
    mats[..., 0, 0] = c + k * nx * nx
    mats[..., 0, 1] = k * nx * ny - s * nz
    mats[..., 0, 2] = k * nx * nz + s * ny
    mats[..., 1, 0] = k * nx * ny + s * nz
    mats[..., 1, 1] = c + k * ny * ny
    mats[..., 1, 2] = k * ny * nz - s * nx
    mats[..., 2, 0] = k * nx * nz - s * ny
    mats[..., 2, 1] = k * ny * nz + s * nx
    mats[..., 2, 2] = c + k * nz * nz
    return mats


def _reduce_time_ordered(mats: np.ndarray) -> np.ndarray:
    """Product of a stack of matrices preserving time order.

    ``mats[0]`` acts first, so the result equals ``mats[-1] @ ... @ mats[0]``.
    Pairwise reduction keeps the pass count logarithmic.
    """
    while mats.shape[0] > 1:
        if mats.shape[0] % 2 == 1:
            tail = mats[-1:]
            mats = np.concatenate([np.matmul(mats[1:-1:2], mats[0:-1:2]), tail], axis=0)
        else:
            mats = np.matmul(mats[1::2], mats[0::2])
    return mats[0]


def _slice_axes(rabi: float, phases: np.ndarray, dets: np.ndarray, dt: float):
    """Unit rotation axes and angles for piecewise-constant slices.

    ``phases`` has shape (n,); ``dets`` has shape (n,) or (n, m) for a batch
    of m detuning channels sharing one phase profile.
    """
    wx = rabi * np.cos(phases)
    wy = rabi * np.sin(phases)
    if dets.ndim == 2:
        wx = wx[:, None]
        wy = wy[:, None]
    r = np.sqrt(wx * wx + wy * wy + dets * dets)
    angle = r * dt
    safe = np.where(r > 0.0, r, 1.0)
    nx = np.where(r > 0.0, wx / safe, 0.0)
    ny = np.where(r > 0.0, wy / safe, 0.0)
    nz = np.where(r > 0.0, dets / safe, 1.0)
    return nx, ny, nz, np.where(r > 0.0, angle, 0.0)


def _sample(fn: Callable, ts: np.ndarray) -> np.ndarray:
    """Evaluate a time function on an array of times, scalar fallback."""
    try:
        vals = np.asarray(fn(ts), dtype=float)
    except Exception:
        return np.array([float(fn(t)) for t in ts], dtype=float)
    if vals.ndim == 0:
        return np.full(ts.shape, float(vals))
    if vals.shape[0] == ts.shape[0] and vals.ndim <= 2:
        return vals
    return np.array([float(fn(t)) for t in ts], dtype=float)


def _compose_swept(states: np.ndarray, rabi: float, phase_fn, det_fn,
                   duration: float, n_steps: int) -> np.ndarray:
    """Apply ``n_steps`` midpoint-sampled constant slices to ``states``.

    ``states`` is (3,) or (m, 3); ``det_fn`` evaluated on midpoints must
    return (n,) or (n, m) to match.
    """
    dt = duration / n_steps
    mids = (np.arange(n_steps) + 0.5) * dt
    phases = _sample(phase_fn, mids)
    dets = _sample(det_fn, mids)
    batch = states.ndim == 2
    if batch and dets.ndim == 1:
        dets = np.broadcast_to(dets[:, None], (n_steps, states.shape[0]))

    m = states.shape[0] if batch else 1
    block = max(1, 262144 // max(1, m))
    total = None
    for start in range(0, n_steps, block):
        sl = slice(start, min(start + block, n_steps))
        nx, ny, nz, ang = _slice_axes(rabi, phases[sl], dets[sl], dt)
        mats = _rotation_matrices(nx, ny, nz, ang)
        part = _reduce_time_ordered(mats)
        total = part if total is None else part @ total
    if batch:
        return np.einsum("mij,mj->mi", total, states)
    return total @ states


def _initial_mesh(rabi: float, phase_fn, det_fn, duration: float,
                  ctl: StepControl) -> int:
    ts = np.linspace(0.0, duration, 257)
    phases = _sample(phase_fn, ts)
    dets = _sample(det_fn, ts)
    span = float(np.sum(np.abs(np.diff(phases))))
    r_max = math.hypot(rabi, float(np.max(np.abs(dets))) if dets.size else 0.0)
    n_phase = ctl.steps_per_phase_turn * span / TWO_PI
    n_larmor = ctl.steps_per_larmor_turn * duration * r_max / TWO_PI
    return max(ctl.min_steps, int(math.ceil(n_phase)), int(math.ceil(n_larmor)))


def _swept_refine(states: np.ndarray, rabi: float, phase_fn, det_fn,
                  duration: float, ctl: StepControl):
    """Richardson-refined composition.  Core of ``propagate_swept``."""
    if duration == 0.0:
        return states.copy(), ConvergenceReport(0, (), True)
    n0 = _initial_mesh(rabi, phase_fn, det_fn, duration, ctl)
    history = []
    prev = None
    for depth in range(ctl.max_depth + 1):
        n = n0 << depth
        out = _compose_swept(states, rabi, phase_fn, det_fn, duration, n)
        if prev is not None:
            err = float(np.max(np.abs(out - prev)))
            history.append(err)
            if err <= ctl.tol:
                return out, ConvergenceReport(n, tuple(history), True)
        prev = out
    raise ConvergenceFailure(
        f"mesh refinement stalled at {n} steps with error "
        f"{history[-1]:.3e} > tol {ctl.tol:.1e}",
        error_history=history,
    )


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def larmor_from_drive(d: DriveParams) -> LarmorVector:
    """Spherical decomposition of the effective field for given controls.

    Magnitude is hypot(rabi, detuning); the polar angle satisfies
    cos(theta) = detuning / magnitude; the azimuth is the drive phase.
    The degenerate zero-field case returns magnitude 0 with theta 0 by
    convention.
    """
    r = math.hypot(d.rabi, d.detuning)
    if r == 0.0:
        return LarmorVector(0.0, 0.0, d.phase)
    theta = math.acos(max(-1.0, min(1.0, d.detuning / r)))
    return LarmorVector(r, theta, d.phase)


def propagate_constant(state: SpinState, d: DriveParams, duration: float) -> SpinState:
    """Evolve under constant controls: one exact rotation about the Larmor axis.

    The rotation angle is |R| * duration.  Negative duration reverses the
    evolution (rotation by the negated angle), which is the time-reversal
    used by the invariant tests.  Bloch norm is preserved to rounding.
    """
    if not math.isfinite(duration):
        raise InvalidParameter("duration must be finite")
    r = math.hypot(d.rabi, d.detuning)
    if r == 0.0 or duration == 0.0:
        return state
    axis = np.array([
        d.rabi * math.cos(d.phase) / r,
        d.rabi * math.sin(d.phase) / r,
        d.detuning / r,
    ])
    return SpinState.from_array(_rotate(state.as_array(), axis, r * duration))


def propagate_swept(state: SpinState, rabi: float,
                    phase_fn: Callable[[float], float],
                    detuning_fn: Callable[[float], float],
                    duration: float,
                    step_control: StepControl | None = None) -> SpinState:
    """Evolve under a time-dependent drive phase and detuning.

    Composes exact constant-parameter rotations over a midpoint-sampled mesh,
    halving the step until the change under one halving is below
    ``step_control.tol`` for every Bloch component.  Deterministic for fixed
    inputs.  Raises ``ConvergenceFailure`` if the tolerance is not met within
    ``max_depth`` halvings.
    """
    out, _ = propagate_swept_report(state, rabi, phase_fn, detuning_fn,
                                    duration, step_control)
    return out


def propagate_swept_report(state: SpinState, rabi: float,
                           phase_fn: Callable[[float], float],
                           detuning_fn: Callable[[float], float],
                           duration: float,
                           step_control: StepControl | None = None):
    """Like ``propagate_swept`` but also returns the ConvergenceReport."""
    if not duration >= 0:
        raise InvalidParameter(f"duration must be >= 0, got {duration}")
    if not rabi >= 0:
        raise InvalidParameter(f"rabi must be >= 0, got {rabi}")
    ctl = step_control or StepControl()
    out, report = _swept_refine(state.as_array(), rabi, phase_fn, detuning_fn,
                                duration, ctl)
    return SpinState.from_array(out), report


def apply_ideal_pulse(state: SpinState, axis_phase: float, angle: float) -> SpinState:
    """Instantaneous rotation about the equatorial axis at ``axis_phase``.

    The axis is (cos axis_phase, sin axis_phase, 0); the rotation sense is
    right-handed about that axis, so (0,0,1) under a pi/2 pulse about +x
    goes to (0,-1,0).
    """
    axis = np.array([math.cos(axis_phase), math.sin(axis_phase), 0.0])
    return SpinState.from_array(_rotate(state.as_array(), axis, angle))


def apply_resonant_pulse(state: SpinState, rabi: float, axis_phase: float,
                         angle: float) -> SpinState:
    """Finite-duration resonant pulse of duration angle/rabi.

    Equivalent to ``apply_ideal_pulse`` at zero detuning; provided for
    robustness studies against the instantaneous idealization.
    """
    if not rabi > 0:
        raise InvalidParameter(f"rabi must be positive, got {rabi}")
    d = DriveParams(rabi=rabi, phase=axis_phase, detuning=0.0)
    return propagate_constant(state, d, angle / rabi)
