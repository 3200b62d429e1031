"""Parameter sweeps, power-law fits and regime scans.

Everything here is deterministic given the spec and seed: grid points are
independent work items ordered by grid index, Monte-Carlo streams derive
from (seed, point index), and serialization uses fixed 9-significant-digit
formatting.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from . import analytic, noise as noise_mod, sequences
from .analytic import DynamicModel, GeometricModel, adiabaticity
from .constants import NV, TWO_PI, PhysicalConstants
from .core import StepControl
from .errors import (AdiabaticityViolation, DegenerateSlope, FitFailure,
                     InvalidParameter, PhasemagError)
from .noise import QuadratureSpec, SpectralDensity, decoherence_function

__all__ = [
    "SweepSpec",
    "SweepRecord",
    "SweepResult",
    "PowerLawFit",
    "SmartControlRow",
    "SmartControlResult",
    "NonadiabaticRow",
    "RegimeRow",
    "run_sweep",
    "fit_power_law",
    "smart_control_curve",
    "nonadiabatic_sensitivity_scan",
    "decoherence_regime_scan",
    "classify_regime",
    "to_jsonl",
    "fmt",
]

_ENGINES = ("analytic", "numeric", "numeric+noise")
_PROTOCOLS = ("ramsey", "hahn", "berry")


def fmt(x) -> str:
    """Canonical 9-significant-digit decimal rendering for output files."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".9g")


@dataclass(frozen=True)
class SweepSpec:
    """One sweep request: protocol, control grids, field grid, engine.

    Angular frequencies in rad/s, times in seconds, fields in tesla.
    ``omegas`` and ``n_rotations`` apply to the berry protocol only.
    """

    protocol: str
    times: Sequence[float]
    b_grid: Sequence[float]
    omegas: Optional[Sequence[float]] = None
    n_rotations: Optional[Sequence[int]] = None
    engine: str = "analytic"
    noise: Optional[SpectralDensity] = None
    seed: int = 0
    ensemble: int = 200
    sigma_p: float = 1.0
    overhead: float = 0.0
    constants: PhysicalConstants = NV
    step_control: Optional[StepControl] = None
    workers: int = 1

    def __post_init__(self):
        if self.protocol not in _PROTOCOLS:
            raise InvalidParameter(f"unknown protocol {self.protocol!r}")
        if self.engine not in _ENGINES:
            raise InvalidParameter(f"unknown engine {self.engine!r}")
        if len(self.times) == 0 or len(self.b_grid) < 2:
            raise InvalidParameter("times nonempty and b_grid of length >= 2 required")
        if self.protocol == "berry" and (not self.omegas or not self.n_rotations):
            raise InvalidParameter("berry sweeps need omegas and n_rotations grids")
        if self.protocol == "hahn" and self.engine == "analytic":
            raise InvalidParameter(
                "analytic engine is not defined for the echo protocol"
            )
        if self.engine == "numeric+noise" and self.noise is None:
            raise InvalidParameter("numeric+noise engine needs a noise model")


@dataclass(frozen=True)
class SweepRecord:
    """Outcome at one grid point."""

    index: int
    protocol: str
    engine: str
    omega: Optional[float]
    n_rotations: Optional[int]
    duration: float
    adiabaticity: Optional[float]
    b_grid: tuple
    p_curve: tuple
    eta: Optional[float]
    max_slope: Optional[float]
    b_max: Optional[float]
    t2g: Optional[float]
    t2g_residual: Optional[float]
    status: str
    error: str = ""


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    records: tuple

    @property
    def ok(self) -> bool:
        return all(r.status == "ok" for r in self.records)


def _grid_points(spec: SweepSpec):
    if spec.protocol == "berry":
        return list(itertools.product(spec.omegas, spec.n_rotations, spec.times))
    return [(None, None, t) for t in spec.times]


def _curve(spec: SweepSpec, omega, n_rot, duration, b_grid, point_index):
    gamma = spec.constants.gamma
    if spec.engine == "analytic":
        if spec.protocol == "ramsey":
            m = DynamicModel(duration, gamma)
            return analytic.ramsey_signal(m, b_grid)
        m = GeometricModel(omega, n_rot, gamma)
        return analytic.berry_signal(m, b_grid)

    if spec.protocol == "ramsey":
        plan = sequences.build_ramsey(duration)
    elif spec.protocol == "hahn":
        plan = sequences.build_hahn(duration)
    else:
        plan = sequences.build_berry(omega, n_rot, duration)

    if spec.engine == "numeric":
        return sequences.execute_batch(plan, b_grid, step_control=spec.step_control,
                                       constants=spec.constants)

    # numeric+noise: ensemble average, one trajectory per run, stream keyed
    # by (seed, point index, trajectory index)
    total = np.zeros_like(b_grid)
    dt = min(spec.noise.tau_c / 10.0, duration / 256.0) \
        if isinstance(spec.noise, noise_mod.Lorentzian) else duration / 256.0
    if not isinstance(spec.noise, noise_mod.Lorentzian):
        raise InvalidParameter("numeric+noise engine needs a Lorentzian model")
    for k in range(spec.ensemble):
        rng_seed = [spec.seed, point_index, k]
        traj = _seeded_trajectory(spec.noise, duration, dt, rng_seed, gamma)
        total += sequences.execute_batch(plan, b_grid, noise_trajectory=traj,
                                         step_control=spec.step_control,
                                         constants=spec.constants)
    return total / spec.ensemble


def _seeded_trajectory(S, duration, dt, seed_key, gamma):
    n = int(math.ceil(duration / dt))
    rng = np.random.default_rng(seed_key)
    a = math.exp(-dt / S.tau_c)
    sigma_step = S.delta * math.sqrt(1.0 - a * a)
    z = rng.standard_normal(n + 1)
    x = np.empty(n + 1)
    x[0] = S.delta * z[0]
    for k in range(n):
        x[k + 1] = a * x[k] + sigma_step * z[k + 1]
    times = np.arange(n + 1) * dt

    def traj(t):
        return np.interp(t, times, x) / gamma

    return traj


def _sensitivity_from_curve(b_grid, p_curve, duration, sigma_p, overhead):
    if float(np.ptp(p_curve)) < 1e-9:
        raise DegenerateSlope("signal slope is flat over the sampled grid")
    slopes = np.gradient(p_curve, b_grid)
    i = int(np.argmax(np.abs(slopes)))
    best = float(abs(slopes[i]))
    if best < 1e-15:
        raise DegenerateSlope("curve slope vanishes over the sampled grid")
    eta = sigma_p * math.sqrt(duration + overhead) / best
    return eta, best


def _auto_decay_grid(S, a_value, quad, n_points=28):
    """Sampling grid spanning the 1/e time of chi(T; A)."""

    def total_chi(t):
        return decoherence_function(S, a_value, t, quad).total - 1.0

    lo, hi = 1e-7, 1e-3
    for _ in range(40):
        if total_chi(hi) > 0:
            break
        hi *= 2.0
    for _ in range(40):
        if total_chi(lo) < 0:
            break
        lo /= 2.0
    t1e = optimize.brentq(total_chi, lo, hi, rtol=1e-10)
    return np.linspace(0.15 * t1e, 2.1 * t1e, n_points)


def _eval_point(args):
    spec, index, omega, n_rot, duration = args
    b_grid = np.asarray(spec.b_grid, dtype=float)
    gamma = spec.constants.gamma
    try:
        p_curve = np.asarray(_curve(spec, omega, n_rot, duration, b_grid, index),
                             dtype=float)
        if spec.protocol == "ramsey":
            model = DynamicModel(duration, gamma)
            b_max = analytic.ramsey_field_range(model)
        elif spec.protocol == "berry":
            model = GeometricModel(omega, n_rot, gamma)
            b_max = analytic.berry_field_range(model)
        else:
            b_max = None

        if spec.engine == "analytic" and spec.protocol == "ramsey":
            rep = analytic.sensitivity(
                lambda b: analytic.ramsey_signal(model, b),
                lambda b: analytic.ramsey_slope(model, b),
                (float(b_grid[0]), float(b_grid[-1])), duration,
                spec.sigma_p, spec.overhead)
            eta, max_slope = rep.eta, rep.max_slope
        elif spec.engine == "analytic":
            rep = analytic.sensitivity(
                lambda b: analytic.berry_signal(model, b),
                lambda b: analytic.berry_slope(model, b),
                (float(b_grid[0]), float(b_grid[-1])), duration,
                spec.sigma_p, spec.overhead)
            eta, max_slope = rep.eta, rep.max_slope
        else:
            eta, max_slope = _sensitivity_from_curve(
                b_grid, p_curve, duration, spec.sigma_p, spec.overhead)

        a_value = None
        if spec.protocol == "berry":
            a_value = adiabaticity(omega, n_rot, duration, 0.0, gamma)

        t2g = t2g_res = None
        if spec.noise is not None and spec.protocol == "berry":
            grid = _auto_decay_grid(spec.noise, a_value, None)
            curve = noise_mod.coherence_decay(spec.noise, a_value, grid)
            t2g, t2g_res = noise_mod.fit_T2g(
                np.stack([curve.times, curve.values], axis=1))

        return SweepRecord(
            index=index, protocol=spec.protocol, engine=spec.engine,
            omega=omega, n_rotations=n_rot, duration=duration,
            adiabaticity=a_value, b_grid=tuple(float(b) for b in b_grid),
            p_curve=tuple(float(p) for p in p_curve), eta=eta,
            max_slope=max_slope, b_max=b_max, t2g=t2g, t2g_residual=t2g_res,
            status="ok")
    except PhasemagError as exc:
        return SweepRecord(
            index=index, protocol=spec.protocol, engine=spec.engine,
            omega=omega, n_rotations=n_rot, duration=duration,
            adiabaticity=None, b_grid=tuple(float(b) for b in b_grid),
            p_curve=(), eta=None, max_slope=None, b_max=None, t2g=None,
            t2g_residual=None, status="error", error=str(exc))


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Evaluate signal curve, sensitivity and field range on every grid point.

    Failures are recorded per point without aborting the sweep.  With
    ``workers`` > 1, points are evaluated in a process pool; results are
    always ordered by grid index.
    """
    points = [(spec, i, om, n, t)
              for i, (om, n, t) in enumerate(_grid_points(spec))]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(_eval_point, points))
    else:
        records = [_eval_point(p) for p in points]
    return SweepResult(spec=spec, records=tuple(records))


# ---------------------------------------------------------------------------
# power-law fitting
# ---------------------------------------------------------------------------

_CONTROL_GETTERS = {
    "omega": lambda r: r.omega,
    "n_rotations": lambda r: r.n_rotations,
    "duration": lambda r: r.duration,
    "adiabaticity": lambda r: r.adiabaticity,
}

_RESPONSE_GETTERS = {
    "eta": lambda r: r.eta,
    "b_max": lambda r: r.b_max,
    "t2g": lambda r: r.t2g,
}


@dataclass(frozen=True)
class PowerLawFit:
    """Multilinear log-log fit: response ~ prod(control^exponent)."""

    response: str
    exponents: dict
    stderr: dict
    log_prefactor: float
    residual_rms: float
    n_points: int


def fit_power_law(result: SweepResult, response: str,
                  controls: Sequence[str]) -> PowerLawFit:
    """Least squares in log-log space; exact on pure power laws.

    Requires at least 3 distinct values per fitted control among the
    successful records, and positive responses.
    """
    if response not in _RESPONSE_GETTERS:
        raise InvalidParameter(f"unknown response {response!r}")
    for c in controls:
        if c not in _CONTROL_GETTERS:
            raise InvalidParameter(f"unknown control {c!r}")
    rows = [r for r in result.records if r.status == "ok"]
    y = []
    x = []
    for r in rows:
        yv = _RESPONSE_GETTERS[response](r)
        cv = [_CONTROL_GETTERS[c](r) for c in controls]
        if yv is None or any(v is None for v in cv):
            continue
        if yv <= 0 or any(v <= 0 for v in cv):
            raise InvalidParameter("power-law fit needs positive values")
        y.append(math.log(yv))
        x.append([1.0] + [math.log(v) for v in cv])
    if len(y) < len(controls) + 1:
        raise FitFailure(f"only {len(y)} usable points for {len(controls)} controls")
    xmat = np.asarray(x)
    for j, c in enumerate(controls):
        if len(set(np.round(xmat[:, j + 1], 12))) < 3:
            raise InvalidParameter(f"need >= 3 distinct values of control {c!r}")
    yvec = np.asarray(y)
    if np.linalg.matrix_rank(xmat) < xmat.shape[1]:
        raise FitFailure("rank-deficient design matrix")
    coef, res_, rank_, sv_ = np.linalg.lstsq(xmat, yvec, rcond=None)
    resid = yvec - xmat @ coef
    dof = max(len(y) - xmat.shape[1], 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(xmat.T @ xmat)
    stderr = {c: float(math.sqrt(max(cov[j + 1, j + 1], 0.0)))
              for j, c in enumerate(controls)}
    exps = {c: float(coef[j + 1]) for j, c in enumerate(controls)}
    return PowerLawFit(response=response, exponents=exps, stderr=stderr,
                       log_prefactor=float(coef[0]),
                       residual_rms=float(np.sqrt(np.mean(resid**2))),
                       n_points=len(y))


# ---------------------------------------------------------------------------
# decoupled-control demonstration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmartControlRow:
    k: float
    omega: float
    n_rotations: int
    adiabaticity: float
    eta: float
    b_max: float
    eta_ratio: float
    b_max_ratio: float


@dataclass(frozen=True)
class SmartControlResult:
    rows: tuple
    enhancement_factor: float
    eta_held_within: float  # max |eta_ratio - 1|


def smart_control_curve(base: GeometricModel, duration: float, k_grid,
                        sigma_p: float = 1.0, overhead: float = 0.0,
                        a_limit: float = 0.1) -> SmartControlResult:
    """Scale Omega -> k*Omega, N -> round(k*N) at fixed T and Omega/N ratio.

    Sensitivity stays constant (max slope tracks N/Omega) while the field
    range grows like k^(3/2).  Raises AdiabaticityViolation naming the
    first k at which the zero-field adiabaticity exceeds ``a_limit``.
    """
    k_grid = sorted(float(k) for k in k_grid)
    if not k_grid or k_grid[0] <= 0:
        raise InvalidParameter("k_grid must be positive")
    rows = []
    base_eta = base_bmax = None
    for k in k_grid:
        omega = k * base.rabi
        n_rot = max(1, int(round(k * base.n_rotations)))
        a_val = adiabaticity(omega, n_rot, duration, 0.0, base.gamma)
        if a_val > a_limit:
            raise AdiabaticityViolation(
                f"adiabaticity {a_val:.3g} exceeds {a_limit:g} at k={k:g}",
                scale=k)
        model = GeometricModel(omega, n_rot, base.gamma)
        b_max = analytic.berry_field_range(model)
        rep = analytic.sensitivity(
            lambda b: analytic.berry_signal(model, b),
            lambda b: analytic.berry_slope(model, b),
            (0.0, b_max), duration, sigma_p, overhead)
        if base_eta is None:
            base_eta, base_bmax = rep.eta, b_max
        rows.append(SmartControlRow(
            k=k, omega=omega, n_rotations=n_rot, adiabaticity=a_val,
            eta=rep.eta, b_max=b_max, eta_ratio=rep.eta / base_eta,
            b_max_ratio=b_max / base_bmax))
    enhancement = max(r.b_max_ratio for r in rows)
    eta_held = max(abs(r.eta_ratio - 1.0) for r in rows)
    return SmartControlResult(rows=tuple(rows), enhancement_factor=enhancement,
                              eta_held_within=eta_held)


# ---------------------------------------------------------------------------
# nonadiabatic sensitivity scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonadiabaticRow:
    a_value: float
    omega: float
    n_rotations: int
    engine: str
    eta_geo: float
    eta_dyn: float
    crossed: bool


def nonadiabatic_sensitivity_scan(a_grid, duration: float, S: SpectralDensity,
                                  n_rotations: int = 2,
                                  sigma_p: float = 1.0,
                                  b_points: int = 161,
                                  constants: PhysicalConstants = NV,
                                  step_control: Optional[StepControl] = None,
                                  quad: Optional[QuadratureSpec] = None):
    """Geometric sensitivity vs adiabaticity at fixed interaction time.

    Each target A is realized exactly by Omega = 2*pi*N/(A*T) at fixed N and
    T.  Signal curves use the closed form for A <= 0.05 and the full
    propagator above; both are attenuated by exp(-chi(T; A)).  The reference
    is the free-precession sensitivity at the same T with its own
    attenuation.  Returns (rows, crossover_a); crossover_a is the first
    grid A with eta_geo < eta_dyn, or None.
    """
    gamma = constants.gamma
    chi_ram = noise_mod.ramsey_exponent(S, duration, quad)
    eta_dyn = sigma_p * math.sqrt(duration) * math.exp(chi_ram) / (gamma * duration)
    rows = []
    crossover = None
    for a_target in sorted(float(a) for a in a_grid):
        if a_target <= 0:
            raise InvalidParameter("adiabaticity values must be positive")
        omega = TWO_PI * n_rotations / (a_target * duration)
        model = GeometricModel(omega, n_rotations, gamma)
        b_max = analytic.berry_field_range(model)
        b_grid = np.linspace(0.0, 1.05 * b_max, b_points)
        if a_target <= 0.05:
            engine = "analytic"
            p_curve = analytic.berry_signal(model, b_grid)
        else:
            engine = "numeric"
            plan = sequences.build_berry(omega, n_rotations, duration)
            p_curve = sequences.execute_batch(plan, b_grid,
                                              step_control=step_control,
                                              constants=constants)
        w_att = math.exp(-decoherence_function(S, a_target, duration, quad).total)
        eta_geo_raw, _ = _sensitivity_from_curve(b_grid, p_curve, duration,
                                                 sigma_p, 0.0)
        eta_geo = eta_geo_raw / w_att
        crossed = eta_geo < eta_dyn
        if crossed and crossover is None:
            crossover = a_target
        rows.append(NonadiabaticRow(a_value=a_target, omega=omega,
                                    n_rotations=n_rotations, engine=engine,
                                    eta_geo=eta_geo, eta_dyn=eta_dyn,
                                    crossed=crossed))
    return rows, crossover


# ---------------------------------------------------------------------------
# decoherence regime scan
# ---------------------------------------------------------------------------

_REGIME_EDGES = ((0.1, "adiabatic"), (1.0, "intermediate"),
                 (5.0, "nonadiabatic"), (math.inf, "strongly-nonadiabatic"))


def classify_regime(a_value: float) -> str:
    for edge, label in _REGIME_EDGES:
        if a_value < edge:
            return label
    return _REGIME_EDGES[-1][1]


@dataclass(frozen=True)
class RegimeRow:
    a_value: float
    t2g: Optional[float]
    residual: Optional[float]
    regime: str
    status: str
    error: str = ""


def decoherence_regime_scan(a_grid, S: SpectralDensity, engine: str = "eq3",
                            omega: float = TWO_PI * 0.5e6,
                            ensemble: int = 100, seed: int = 0,
                            t_points: int = 10,
                            constants: PhysicalConstants = NV,
                            quad: Optional[QuadratureSpec] = None):
    """Coherence time vs adiabaticity.

    ``eq3`` samples exp(-chi(T; A)) and fits the squared exponential.  The
    ``monte-carlo`` engine instead propagates the full sequence at zero
    static field over an OU ensemble, holding A along the decay by scaling
    the turn count with T (nearest integer; N >= 1).  The Monte-Carlo path
    is the authoritative model in the strongly nonadiabatic limit and is
    markedly slower.
    """
    if engine not in ("eq3", "monte-carlo"):
        raise InvalidParameter(f"unknown engine {engine!r}")
    rows = []
    for a_value in sorted(float(a) for a in a_grid):
        try:
            if engine == "eq3":
                grid = _auto_decay_grid(S, a_value, quad, n_points=28)
                curve = noise_mod.coherence_decay(S, a_value, grid, quad)
                samples = np.stack([curve.times, curve.values], axis=1)
            else:
                grid = _auto_decay_grid(S, a_value, quad, n_points=t_points)
                samples = _mc_decay_samples(S, a_value, omega, grid, ensemble,
                                            seed, constants)
            t2g, res = noise_mod.fit_T2g(samples)
            rows.append(RegimeRow(a_value=a_value, t2g=t2g, residual=res,
                                  regime=classify_regime(a_value), status="ok"))
        except PhasemagError as exc:
            rows.append(RegimeRow(a_value=a_value, t2g=None, residual=None,
                                  regime=classify_regime(a_value),
                                  status="error", error=str(exc)))
    return rows


def _mc_decay_samples(S, a_value, omega, t_grid, ensemble, seed, constants):
    ctl = StepControl(tol=1e-3, max_depth=8)
    out = []
    for j, t in enumerate(t_grid):
        n_rot = max(1, int(round(a_value * omega * t / TWO_PI)))
        plan = sequences.build_berry(omega, n_rot, float(t))
        dt = min(S.tau_c / 10.0, float(t) / 128.0)
        bank = noise_mod.ou_bank(S, float(t), dt, ensemble, seed + j,
                                 gamma=constants.gamma)
        p = sequences.execute_batch(plan, np.zeros(ensemble),
                                    noise_trajectory=bank,
                                    step_control=ctl, constants=constants)
        out.append((float(t), float(np.mean(p))))
    return np.asarray(out)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def to_jsonl(result: SweepResult, fits: Sequence[PowerLawFit] = ()) -> str:
    """Line-delimited records with canonical float formatting."""
    lines = []
    for r in result.records:
        obj = {
            "record": "point",
            "index": r.index,
            "protocol": r.protocol,
            "engine": r.engine,
            "omega_MHz": fmt(None if r.omega is None else r.omega / (TWO_PI * 1e6)),
            "N": "" if r.n_rotations is None else int(r.n_rotations),
            "T_us": fmt(r.duration * 1e6),
            "adiabaticity": fmt(r.adiabaticity),
            "eta": fmt(r.eta),
            "max_slope": fmt(r.max_slope),
            "B_max_mT": fmt(None if r.b_max is None else r.b_max * 1e3),
            "T2g_us": fmt(None if r.t2g is None else r.t2g * 1e6),
            "status": r.status,
            "error": r.error,
        }
        lines.append(json.dumps(obj, sort_keys=True))
    for f in fits:
        obj = {
            "record": "power_law_fit",
            "response": f.response,
            "exponents": {k: fmt(v) for k, v in sorted(f.exponents.items())},
            "stderr": {k: fmt(v) for k, v in sorted(f.stderr.items())},
            "residual_rms": fmt(f.residual_rms),
            "n_points": f.n_points,
        }
        lines.append(json.dumps(obj, sort_keys=True))
    return "\n".join(lines) + "\n"
