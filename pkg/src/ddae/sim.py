"""Fixed-step method-of-steps simulation and the product-space state norm.

The system is explicitized first, so the algebraic update only ever reads
already-computed values: kernel quadrature weights at lag 0 vanish for the
algebraic part by construction.  The differential part advances with Heun's
explicit trapezoidal rule (order 2); the algebraic part is evaluated through
the same grid weights (order >= 1 for densities, exact for on-grid atoms).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import discretize
from .model import InitialState, check_grid, classify, explicitize

__all__ = ["Trajectory", "HorizonNotMultipleOfStep", "simulate", "state_norm"]


class HorizonNotMultipleOfStep(Exception):
    pass


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Grid samples of a solution: memory segment plus computed segment.

    x[k] and y[k] hold the values at t = k*step, with x[0] = x(0+); the
    memory arrays repeat the initial chi, psi samples on [-r, 0].
    """

    step: float
    memory_chi: np.ndarray
    memory_psi: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @property
    def memory(self):
        return (self.memory_chi.shape[0] - 1) * self.step

    @property
    def horizon(self):
        return (self.x.shape[0] - 1) * self.step

    @property
    def times(self):
        return np.arange(self.x.shape[0]) * self.step

    def full_arrays(self):
        """Samples on the whole grid [-r, horizon]; computed values win at 0."""
        full_x = np.concatenate([self.memory_chi[:-1], self.x])
        full_y = np.concatenate([self.memory_psi[:-1], self.y])
        return full_x, full_y

    def _grid_index(self, t):
        k = int(round(t / self.step))
        if abs(t - k * self.step) > 1e-9 * max(1.0, abs(t)) or not 0 <= k < self.x.shape[0]:
            raise ValueError(f"time {t} is not on the simulated grid")
        return k

    def state_at(self, t):
        """Repackage (x(t), x_t, y_t) as an initial state for a restart."""
        k = self._grid_index(t)
        full_x, full_y = self.full_arrays()
        lag = self.memory_chi.shape[0] - 1
        idx = lag + k
        return InitialState(self.x[k], self.step, full_x[idx - lag : idx + 1], full_y[idx - lag : idx + 1])


def _lagged(arr, end, count):
    # arr[end-count .. end] in decreasing-time order (lag 0 first)
    return arr[end - count : end + 1][::-1]


def _apply(weights, window):
    if weights.shape[0] == 0:
        return np.zeros(weights.shape[1], dtype=complex)
    return np.einsum("qij,qj->i", weights, window)


def simulate(system, init, step, horizon):
    """March the system from the initial state to the horizon.

    Requires step == init.step, a horizon that is a whole number of steps,
    grid-aligned atoms, and a well-posed system.
    """
    if abs(step - init.step) > 1e-12 * max(step, init.step):
        raise ValueError(f"step {step} differs from the initial-state step {init.step}")
    step = init.step
    nsteps = int(round(horizon / step))
    if nsteps < 0 or abs(horizon - nsteps * step) > 1e-9 * max(1.0, abs(horizon)):
        raise HorizonNotMultipleOfStep(f"horizon {horizon} is not a multiple of step {step}")
    check_grid(system, init)
    wp = classify(system)
    esys = explicitize(system, wp)
    n, m = system.n, system.m

    aw = discretize(esys.A, step)
    if m:
        bw = discretize(esys.B, step)
        ew = discretize(esys.C, step)
        fw = discretize(esys.D, step)
    else:
        bw = np.zeros((1, n, 0), dtype=complex)
        ew = np.zeros((1, 0, n), dtype=complex)
        fw = np.zeros((1, 0, 0), dtype=complex)

    lag = init.chi.shape[0] - 1
    total = lag + nsteps + 1
    X = np.zeros((total, n), dtype=complex)
    Y = np.zeros((total, m), dtype=complex)
    X[:lag] = init.chi[:-1]
    Y[:lag] = init.psi[:-1]
    X[lag] = init.phi

    qa, qb, qe, qf = (w.shape[0] - 1 for w in (aw, bw, ew, fw))
    for k in range(nsteps + 1):
        now = lag + k
        # algebraic update: lag-0 weight of the y-part is zero by construction
        Y[now] = _apply(ew, _lagged(X, now, qe)) + _apply(fw[1:], _lagged(Y, now - 1, qf - 1))
        if k == nsteps:
            break
        g_now = _apply(aw, _lagged(X, now, qa)) + _apply(bw, _lagged(Y, now, qb))
        x_pred = X[now] + step * g_now
        y_pred = ew[0] @ x_pred + _apply(ew[1:], _lagged(X, now, qe - 1)) \
            + _apply(fw[1:], _lagged(Y, now, qf - 1))
        g_pred = aw[0] @ x_pred + _apply(aw[1:], _lagged(X, now, qa - 1)) \
            + bw[0] @ y_pred + _apply(bw[1:], _lagged(Y, now, qb - 1))
        X[now + 1] = X[now] + 0.5 * step * (g_now + g_pred)

    return Trajectory(step, init.chi, init.psi, X[lag:], Y[lag:])


def state_norm(trajectory, t):
    """Norm of (x(t), x_t, y_t): sqrt(|x(t)|^2 + integral of |x|^2 + |y|^2).

    The integral runs over [t - r, t] and is evaluated by the trapezoid rule
    on the stored grid samples.
    """
    k = trajectory._grid_index(t)
    full_x, full_y = trajectory.full_arrays()
    lag = trajectory.memory_chi.shape[0] - 1
    idx = lag + k
    seg_x = full_x[idx - lag : idx + 1]
    seg_y = full_y[idx - lag : idx + 1]
    dens = np.sum(np.abs(seg_x) ** 2, axis=1) + np.sum(np.abs(seg_y) ** 2, axis=1)
    if lag >= 1:
        integral = trajectory.step * (0.5 * dens[0] + dens[1:-1].sum() + 0.5 * dens[-1])
    else:
        integral = 0.0
    head = float(np.sum(np.abs(trajectory.x[k]) ** 2))
    return float(np.sqrt(head + integral))
