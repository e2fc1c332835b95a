"""Predictor feedback for dead-time plants with a finite closed-loop spectrum.

The plant x'(t) = E x(t) + F u(t) is observed through a pure delay T.  The
controller predicts the current state from the delayed measurement and the
input history, and feeds back u = -G y.  The closed loop couples a delay-free
differential part with an algebraic part containing one discrete delay and
one distributed delay; its characteristic determinant collapses to
det(s I - E + F G), so the closed-loop spectrum is exactly eig(E - F G).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .measures import DelayKernel, ExpDensity, dirac
from .model import DdaeSystem
from .spectrum import char_det

__all__ = ["FsaPlant", "Uncontrollable", "build_fsa", "place_poles", "verify_fsa_identity"]


class Uncontrollable(Exception):
    def __init__(self, rank, singular_values):
        super().__init__(
            f"controllability matrix has rank {rank}; singular values {singular_values}"
        )
        self.rank = rank
        self.singular_values = singular_values


@dataclass(frozen=True, eq=False)
class FsaPlant:
    """Single-input plant matrices and the measurement dead time."""

    E: np.ndarray
    F: np.ndarray
    T: float

    def __post_init__(self):
        e_mat = np.array(self.E, dtype=float)
        f_mat = np.array(self.F, dtype=float)
        if f_mat.ndim == 1:
            f_mat = f_mat[:, None]
        n = e_mat.shape[0]
        if e_mat.shape != (n, n):
            raise ValueError("drift matrix must be square")
        if f_mat.shape != (n, 1):
            raise ValueError(f"input matrix must be {n}x1, got {f_mat.shape}")
        if self.T <= 0:
            raise ValueError("dead time must be positive")
        e_mat.setflags(write=False)
        f_mat.setflags(write=False)
        object.__setattr__(self, "E", e_mat)
        object.__setattr__(self, "F", f_mat)
        object.__setattr__(self, "T", float(self.T))

    @property
    def n(self):
        return self.E.shape[0]


def build_fsa(plant, gain):
    """Closed-loop system for the predictor feedback with gain row `gain`.

    The differential part is delay-free; the algebraic (predictor) part
    carries the discrete delay e^{TE} delta_T and the distributed kernel
    -e^{theta E} F G on [0, T].  The result is explicit by construction.
    """
    gain = np.atleast_2d(np.array(gain, dtype=float))
    n, t_delay = plant.n, plant.T
    if gain.shape != (1, n):
        raise ValueError(f"gain must be 1x{n}, got {gain.shape}")
    fg = plant.F @ gain
    a_kernel = dirac(0.0, plant.E, memory=0.0)
    b_kernel = dirac(0.0, -fg, memory=0.0)
    c_kernel = dirac(t_delay, expm(t_delay * plant.E), memory=t_delay)
    d_kernel = DelayKernel(
        n, n, t_delay,
        pieces=(ExpDensity(0.0, t_delay, -np.eye(n), plant.E, fg),),
    )
    return DdaeSystem(n, n, t_delay, a_kernel, b_kernel, c_kernel, d_kernel)


def place_poles(plant, desired, rank_rtol=1e-8, check_tol=1e-6):
    """Gain row assigning eig(E - F G) to the desired locations (Ackermann).

    The desired set must be closed under conjugation; the plant must be
    controllable.  The result is verified with a dense eigensolver.
    """
    n = plant.n
    desired = np.atleast_1d(np.array(desired, dtype=complex))
    if desired.shape != (n,):
        raise ValueError(f"need exactly {n} desired poles")
    coeffs = np.poly(desired)
    if np.max(np.abs(coeffs.imag)) > 1e-9 * max(1.0, np.max(np.abs(coeffs))):
        raise ValueError("desired poles must be closed under conjugation")
    coeffs = coeffs.real

    ctrb = np.hstack([np.linalg.matrix_power(plant.E, k) @ plant.F for k in range(n)])
    svals = np.linalg.svd(ctrb, compute_uv=False)
    rank = int(np.sum(svals > rank_rtol * svals[0])) if svals[0] > 0 else 0
    if rank < n:
        raise Uncontrollable(rank, svals)

    poly_of_e = np.zeros((n, n))
    for c in coeffs:
        poly_of_e = poly_of_e @ plant.E + c * np.eye(n)
    selector = np.zeros(n)
    selector[-1] = 1.0
    gain = np.linalg.solve(ctrb.T, selector) @ poly_of_e

    achieved = np.sort_complex(np.linalg.eigvals(plant.E - plant.F @ gain[None, :]))
    wanted = np.sort_complex(desired)
    if np.max(np.abs(achieved - wanted)) > check_tol:
        raise ArithmeticError(
            f"pole placement verification failed: got {achieved}, wanted {wanted}"
        )
    return gain[None, :]


def _default_samples():
    res = np.linspace(-5.0, 5.0, 10)
    ims = np.linspace(-20.0, 20.0, 10)
    return [complex(re, im) for re in res for im in ims]


def verify_fsa_identity(plant, gain, samples=None):
    """Max relative gap between det Delta(s) and det(s I - E + F G).

    Checked over the sample set (default: a 10x10 grid on [-5,5]x[-20,20]).
    """
    system = build_fsa(plant, gain)
    gain = np.atleast_2d(np.array(gain, dtype=float))
    closed = plant.E - plant.F @ gain
    worst = 0.0
    for s in samples if samples is not None else _default_samples():
        lhs = char_det(system, s)
        rhs = complex(np.linalg.det(s * np.eye(plant.n) - closed))
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(rhs)))
    return worst
