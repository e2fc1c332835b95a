"""System container, well-posedness classification and explicitization.

A system couples differential equations x'(t) = A x_t + B y_t with algebraic
equations y(t) = C x_t + D y_t, where the four coefficients are causal delay
kernels with memory at most r.  Whether the algebraic part can be solved for
the present value of y is decided by the invertibility of I - D{0}; when that
matrix is invertible the system can be rewritten with a strictly causal
algebraic right-hand side without changing its solutions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .measures import DelayKernel, atom_at_zero, discretize, scale_left, strip_zero_atom

__all__ = [
    "DdaeSystem",
    "InitialState",
    "Posedness",
    "WellPosedness",
    "NotWellPosed",
    "classify",
    "explicitize",
    "initial_offset",
    "consistency_residual",
]

SINGULARITY_RTOL = 1e-10


class NotWellPosed(Exception):
    """The algebraic part cannot be solved for the present value of y."""


class Posedness(enum.Enum):
    EXPLICIT = "Explicit"
    INVERTIBLE = "InvertibleJ"
    SINGULAR = "SingularJ"


@dataclass(frozen=True, eq=False)
class WellPosedness:
    """Classification result, with the matrices cmd-level diagnostics need.

    `instantaneous` is the point mass of D at t = 0; `inverse` is the inverse
    of I - instantaneous when it exists; `sigma_min` its smallest singular
    value (0.0 for an empty algebraic part).
    """

    kind: Posedness
    instantaneous: np.ndarray
    sigma_min: float
    inverse: np.ndarray | None


@dataclass(frozen=True, eq=False)
class DdaeSystem:
    """Dimensions (n, m), memory r and the four kernels of the system."""

    n: int
    m: int
    r: float
    A: DelayKernel
    B: DelayKernel
    C: DelayKernel
    D: DelayKernel

    def __post_init__(self):
        object.__setattr__(self, "r", float(self.r))
        if self.n < 1 or self.m < 0:
            raise ValueError("need n >= 1 and m >= 0")
        if self.r < 0:
            raise ValueError("memory must be nonnegative")
        expected = {"A": (self.n, self.n), "B": (self.n, self.m), "C": (self.m, self.n), "D": (self.m, self.m)}
        tol = 1e-12 * max(self.r, 1.0)
        for name, shape in expected.items():
            kernel = getattr(self, name)
            if self.m == 0 and name in ("B", "C", "D"):
                if kernel is not None:
                    raise ValueError(f"kernel {name} must be None when m = 0")
                continue
            if kernel.shape != shape:
                raise ValueError(f"kernel {name} has shape {kernel.shape}, expected {shape}")
            if kernel.memory > self.r + tol:
                raise ValueError(f"kernel {name} has memory {kernel.memory} > system memory {self.r}")

    @classmethod
    def differential(cls, n, r, A, B=None, C=None, D=None):
        """System without an algebraic part (m = 0)."""
        return cls(n, 0, r, A, None, None, None)


@dataclass(frozen=True, eq=False)
class InitialState:
    """Head value phi = x(0+) plus sampled memory functions on [-r, 0].

    chi and psi hold one row per grid node -r, -r+h, ..., 0; their common
    row count fixes the memory length as (rows - 1) * h.
    """

    phi: np.ndarray
    step: float
    chi: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        phi = np.atleast_1d(np.array(self.phi, dtype=complex))
        chi = np.array(self.chi, dtype=complex)
        psi = np.array(self.psi, dtype=complex)
        if chi.ndim != 2 or psi.ndim != 2:
            raise ValueError("memory samples must be 2-d arrays (node, component)")
        if chi.shape[0] != psi.shape[0]:
            raise ValueError("chi and psi must be sampled on the same grid")
        if chi.shape[1] != phi.shape[0]:
            raise ValueError("phi and chi disagree on the differential dimension")
        if self.step <= 0:
            raise ValueError("step must be positive")
        for arr in (phi, chi, psi):
            arr.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "step", float(self.step))
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "psi", psi)

    @property
    def memory(self):
        return (self.chi.shape[0] - 1) * self.step

    @classmethod
    def constant(cls, phi, chi_value, psi_value, memory, step):
        """Memory functions constant over [-memory, 0]."""
        nodes = _memory_nodes(memory, step) + 1
        chi = np.tile(np.atleast_1d(np.array(chi_value, dtype=complex)), (nodes, 1))
        psi = np.tile(np.atleast_1d(np.array(psi_value, dtype=complex)), (nodes, 1)) \
            if np.size(psi_value) else np.zeros((nodes, 0), dtype=complex)
        return cls(phi, step, chi, psi)


def _memory_nodes(memory, step):
    nodes = int(round(memory / step))
    if abs(memory - nodes * step) > 1e-9 * max(memory, 1.0):
        raise ValueError(f"step {step} does not divide memory {memory}")
    return nodes


def check_grid(system, init):
    """Raise unless the initial-state grid covers the system memory exactly."""
    nodes = _memory_nodes(system.r, init.step)
    if init.chi.shape[0] != nodes + 1:
        raise ValueError(
            f"memory samples have {init.chi.shape[0]} rows, expected {nodes + 1} for r={system.r}, h={init.step}"
        )
    if init.psi.shape[1] != system.m or init.chi.shape[1] != system.n:
        raise ValueError("initial-state component counts do not match the system dimensions")


def classify(system):
    """Decide whether the algebraic part is explicit, invertible or singular."""
    if system.m == 0:
        zero = np.zeros((0, 0), dtype=complex)
        return WellPosedness(Posedness.EXPLICIT, zero, 0.0, zero)
    d0 = atom_at_zero(system.D)
    eye = np.eye(system.m, dtype=complex)
    if not d0.any():
        return WellPosedness(Posedness.EXPLICIT, d0, 1.0, eye)
    j = eye - d0
    svals = np.linalg.svd(j, compute_uv=False)
    sigma_min = float(svals[-1])
    if sigma_min < SINGULARITY_RTOL * max(1.0, float(svals[0])):
        return WellPosedness(Posedness.SINGULAR, d0, sigma_min, None)
    return WellPosedness(Posedness.INVERTIBLE, d0, sigma_min, np.linalg.inv(j))


def explicitize(system, posedness=None):
    """Equivalent system whose algebraic right-hand side is strictly causal.

    Returns the input unchanged when it is already explicit; raises
    NotWellPosed when I - D{0} is singular.
    """
    wp = posedness if posedness is not None else classify(system)
    if wp.kind is Posedness.EXPLICIT:
        return system
    if wp.kind is Posedness.SINGULAR:
        raise NotWellPosed(
            f"I - D{{0}} is singular (smallest singular value {wp.sigma_min:.3e})"
        )
    new_c = scale_left(wp.inverse, system.C)
    new_d = scale_left(wp.inverse, strip_zero_atom(system.D))
    return DdaeSystem(system.n, system.m, system.r, system.A, system.B, new_c, new_d)


def _history_integrals(samples, step):
    """Trapezoid integrals of the sampled memory from -r up to each node.

    Row q of the result is the integral over [-r, -q*step], with q counted
    backwards from the node at 0.
    """
    nodes = samples.shape[0]
    vals = samples.astype(complex)
    out = np.zeros_like(vals)
    running = np.zeros(vals.shape[1], dtype=complex)
    for idx in range(1, nodes):
        running = running + 0.5 * step * (vals[idx - 1] + vals[idx])
        out[idx] = running
    return out[::-1]


def initial_offset(system, init):
    """Constant forcing vector that pins x(0+) to phi in the integral form.

    Evaluates phi minus the time-0 value of the running integral of the
    delayed history terms, using the same grid weights as the simulator:
    each kernel weight at lag q multiplies the trapezoid integral of the
    memory function over [-r, -q*step].
    """
    check_grid(system, init)
    f = init.phi.astype(complex).copy()
    chi_int = _history_integrals(init.chi, init.step)
    weights = discretize(system.A, init.step)
    for q in range(weights.shape[0]):
        f -= weights[q] @ chi_int[q]
    if system.m:
        psi_int = _history_integrals(init.psi, init.step)
        weights = discretize(system.B, init.step)
        for q in range(weights.shape[0]):
            f -= weights[q] @ psi_int[q]
    return f


def consistency_residual(system, init):
    """Norm of psi(0) - (C chi + D psi), evaluated on the sample grid.

    Solutions are not required to satisfy this; the residual is a diagnostic
    for users expecting a continuous solution.
    """
    check_grid(system, init)
    if system.m == 0:
        return 0.0
    predicted = np.zeros(system.m, dtype=complex)
    cw = discretize(system.C, init.step)
    chi_rev = init.chi[::-1]
    for q in range(cw.shape[0]):
        predicted += cw[q] @ chi_rev[q]
    dw = discretize(system.D, init.step)
    psi_rev = init.psi[::-1]
    for q in range(dw.shape[0]):
        predicted += dw[q] @ psi_rev[q]
    return float(np.linalg.norm(init.psi[-1] - predicted))
