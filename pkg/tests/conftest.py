"""Shared fixtures and independent oracles for the test suite."""

import math
from pathlib import Path

import numpy as np
import pytest

from phasemag.noise import Lorentzian, calibrate_noise

# coherence-time targets used across the noise and acceptance tests
T2_STAR = 50e-6
T2_ECHO = 500e-6


@pytest.fixture(scope="session")
def calibrated_noise() -> Lorentzian:
    return calibrate_noise(T2_STAR, T2_ECHO)


@pytest.fixture(scope="session")
def repo_docs() -> Path:
    return Path(__file__).resolve().parent.parent / "docs" / "examples"


def rotation_matrix(axis, angle):
    """Reference axis-angle rotation, independent of the library kernels."""
    axis = np.asarray(axis, dtype=float)
    n = axis / np.linalg.norm(axis)
    c, s = math.cos(angle), math.sin(angle)
    k = 1.0 - c
    nx, ny, nz = n
    return np.array([
        [c + k * nx * nx, k * nx * ny - s * nz, k * nx * nz + s * ny],
        [k * nx * ny + s * nz, c + k * ny * ny, k * ny * nz - s * nx],
        [k * nx * nz - s * ny, k * ny * nz + s * nx, c + k * nz * nz],
    ])


def swept_exact(state_vec, rabi, detuning, phase_start, phase_rate, duration):
    """Closed-form propagation for a linear phase sweep.

    In the frame co-rotating with the drive phase the generator is constant,
    (rabi, 0, detuning - rate), so the lab-frame propagator is
    Rz(rho0 + rate*T) @ Rot(axis, |axis|*T) @ Rz(-rho0).  Serves as an
    independent oracle for the mesh-composed propagator.
    """
    axis = np.array([rabi, 0.0, detuning - phase_rate])
    norm = np.linalg.norm(axis)
    if norm == 0.0:
        core = np.eye(3)
    else:
        core = rotation_matrix(axis, norm * duration)
    rz = rotation_matrix([0, 0, 1], phase_start + phase_rate * duration)
    rz_back = rotation_matrix([0, 0, 1], -phase_start)
    return rz @ core @ rz_back @ np.asarray(state_vec, dtype=float)


def chi_fid_ou(delta, tau_c, t):
    """Closed-form free-precession dephasing exponent for an OU bath.

    x - 1 + exp(-x) written via expm1 to stay accurate for t << tau_c.
    """
    x = t / tau_c
    return delta**2 * tau_c**2 * (x + math.expm1(-x))


def chi_echo_ou(delta, tau_c, t):
    """Closed-form two-pulse-echo dephasing exponent for an OU bath.

    x - 3 + 4exp(-x/2) - exp(-x), cancellation-free via expm1.
    """
    x = t / tau_c
    return delta**2 * tau_c**2 * (x + 4.0 * math.expm1(-x / 2.0) - math.expm1(-x))
