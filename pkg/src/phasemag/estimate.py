"""Inversion of measured signals to magnetic field values.

The chirped geometric-phase signal has a finite preimage for any signal
level: the cosine argument decreases monotonically from 4*pi*N at B=0 to 0
at large field, so each arccos branch contributes at most one candidate per
2*pi of argument.  The slope dP/dB then selects a unique candidate because
its envelope decreases strictly with field.  The free-precession signal, by
contrast, has an irreducible phase ladder: slope information can only pick a
branch within one fringe, never the fringe itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analytic import (DynamicModel, GeometricModel, berry_field_range,
                       berry_signal, berry_slope, ramsey_slope)
from .constants import TWO_PI
from .errors import InvalidParameter, OutOfRange, Unresolvable

__all__ = [
    "Measurement",
    "FieldEstimate",
    "measure_geometric",
    "measure_dynamic",
    "geometric_candidates",
    "estimate_geometric",
    "estimate_dynamic",
]


@dataclass(frozen=True)
class Measurement:
    """Signal value with an optional slope reading and per-value noise."""

    p: float
    slope: Optional[float] = None
    sigma: float = 0.0
    slope_sigma: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.p):
            raise InvalidParameter("P must be finite")
        if self.sigma < 0 or self.slope_sigma < 0:
            raise InvalidParameter("uncertainties must be nonnegative")
        if abs(self.p) > 1.0 + 3.0 * self.sigma:
            raise OutOfRange(
                f"|P|={abs(self.p):g} exceeds 1 beyond the 3-sigma noise allowance"
            )


@dataclass(frozen=True)
class FieldEstimate:
    """A candidate (or chosen) field value with bookkeeping."""

    b_hat: float
    candidates_considered: int
    lobe_index: int
    confidence: float
    clamped: bool = False


def measure_geometric(m: GeometricModel, b: float, delta_b: Optional[float] = None,
                      sigma: float = 0.0,
                      rng: Optional[np.random.Generator] = None) -> Measurement:
    """Forward model: signal plus two-point finite-difference slope.

    The slope is differenced at b +/- delta_b/2 (default span B_max/1000).
    With ``sigma`` > 0 and an ``rng``, Gaussian noise is added to all three
    signal evaluations.
    """
    if delta_b is None:
        delta_b = berry_field_range(m) / 1e3
    p = float(berry_signal(m, b))
    p_lo = float(berry_signal(m, b - delta_b / 2.0))
    p_hi = float(berry_signal(m, b + delta_b / 2.0))
    if sigma > 0.0:
        if rng is None:
            raise InvalidParameter("noisy measurements need an rng")
        p += sigma * rng.standard_normal()
        p_lo += sigma * rng.standard_normal()
        p_hi += sigma * rng.standard_normal()
    slope = (p_hi - p_lo) / delta_b
    slope_sigma = math.sqrt(2.0) * sigma / delta_b if sigma > 0 else 0.0
    return Measurement(p=min(1.0, max(-1.0, p)) if sigma == 0 else p,
                       slope=slope, sigma=sigma, slope_sigma=slope_sigma)


def measure_dynamic(m: DynamicModel, b: float, delta_b: Optional[float] = None) -> Measurement:
    """Forward model for the free-precession signal (noiseless)."""
    if delta_b is None:
        delta_b = TWO_PI / (m.gamma * m.duration) / 1e3
    p = float(np.cos(m.gamma * b * m.duration))
    slope = float((np.cos(m.gamma * (b + delta_b / 2) * m.duration)
                   - np.cos(m.gamma * (b - delta_b / 2) * m.duration)) / delta_b)
    return Measurement(p=min(1.0, max(-1.0, p)), slope=slope)


def _clamp_signal(meas: Measurement) -> tuple[float, bool]:
    p = meas.p
    if abs(p) <= 1.0:
        return p, False
    if abs(p) <= 1.0 + 3.0 * meas.sigma:
        return math.copysign(1.0, p), True
    raise OutOfRange(f"|P|={abs(p):g} is unphysical beyond noise allowance")


def geometric_candidates(m: GeometricModel, p: float) -> list[tuple[float, int]]:
    """All fields in [0, B_max] with the given signal, as (B, lobe) pairs.

    Candidates are the arccos branches of the monotone argument: for
    arg = 2*pi*k +/- acos(p) within [pi, 4*pi*N], invert
    cos(theta) = 1 - arg/(4*pi*N) to a field.  The lobe index counts
    half-oscillations from B=0.
    """
    n4pi = 4.0 * math.pi * m.n_rotations
    a = math.acos(max(-1.0, min(1.0, p)))
    args = set()
    k = 0
    while TWO_PI * k - a <= n4pi + 1e-12:
        for g in (TWO_PI * k + a, TWO_PI * k - a):
            if math.pi - 1e-12 <= g <= n4pi + 1e-12:
                args.add(round(g, 12))
        k += 1
    out = []
    for g in sorted(args, reverse=True):
        g = min(g, n4pi)
        c = 1.0 - g / n4pi
        if c >= 1.0:
            continue
        b = m.rabi * c / math.sqrt(1.0 - c * c) / m.gamma
        lobe = int((n4pi - g) // math.pi)
        out.append((b, lobe))
    return out


def estimate_geometric(m: GeometricModel, meas: Measurement) -> FieldEstimate:
    """Pick the field candidate whose analytic slope matches the measured one.

    Raises ``Unresolvable`` when the two best candidates match the slope
    equally well within the combined uncertainty (always the case at signal
    extrema, where every candidate has zero slope).
    """
    if meas.slope is None:
        raise InvalidParameter("geometric estimation requires a slope reading")
    p, clamped = _clamp_signal(meas)
    cands = geometric_candidates(m, p)
    if not cands:
        raise Unresolvable("no candidates in range", candidates=())
    slopes = np.array([float(berry_slope(m, b)) for b, _ in cands])
    resid = np.abs(slopes - meas.slope)
    order = np.argsort(resid)
    best = int(order[0])
    # slope scale of the model (envelope at small field), not of the candidates:
    # at signal extrema every candidate slope collapses to ~0 and must tie
    slope_scale = 4.0 * math.pi * m.n_rotations * m.gamma / m.rabi
    tie_tol = max(3.0 * meas.slope_sigma, 1e-9 * slope_scale)
    if len(cands) > 1:
        second = int(order[1])
        if resid[second] - resid[best] <= tie_tol:
            raise Unresolvable(
                "two candidates match the measured slope within uncertainty",
                candidates=tuple(cands[i][0] for i in (best, second)),
            )
    gap = resid[int(order[1])] - resid[best] if len(cands) > 1 else resid[best]
    denom = resid[int(order[1])] + resid[best] if len(cands) > 1 else max(resid[best], 1e-300)
    confidence = float(gap / denom) if denom > 0 else 1.0
    return FieldEstimate(
        b_hat=cands[best][0],
        candidates_considered=len(cands),
        lobe_index=cands[best][1],
        confidence=confidence,
        clamped=clamped,
    )


def estimate_dynamic(m: DynamicModel, meas: Measurement,
                     prior_window: tuple[float, float]) -> list[FieldEstimate]:
    """Every field in the window consistent with the signal (the full ladder).

    The slope, when present, scores candidates within each fringe but cannot
    remove the fringe ambiguity; all candidates are returned sorted by field,
    best slope match first within equal fields.
    """
    p, clamped = _clamp_signal(meas)
    lo, hi = float(prior_window[0]), float(prior_window[1])
    if hi < lo:
        return []
    a = math.acos(p)
    gt = m.gamma * m.duration
    k_lo = math.floor((lo * gt - a) / TWO_PI) - 1
    k_hi = math.ceil((hi * gt + a) / TWO_PI) + 1
    raw = []
    for k in range(k_lo, k_hi + 1):
        for phi in (TWO_PI * k + a, TWO_PI * k - a):
            b = phi / gt
            if lo - 1e-18 <= b <= hi + 1e-18:
                raw.append((b, k))
    raw.sort()
    dedup = []
    scale = max(abs(hi), abs(lo), 1.0 / gt)
    for b, k in raw:
        if not dedup or b - dedup[-1][0] > 1e-12 * scale:
            dedup.append((b, k))
    estimates = []
    slope_scale = m.gamma * m.duration  # largest attainable |dP/dB|
    for b, k in dedup:
        if meas.slope is not None:
            resid = abs(float(ramsey_slope(m, b)) - meas.slope)
            conf = 1.0 / (1.0 + resid / slope_scale)
        else:
            conf = 0.0
        estimates.append(FieldEstimate(
            b_hat=b, candidates_considered=len(dedup), lobe_index=k,
            confidence=conf, clamped=clamped,
        ))
    return estimates
