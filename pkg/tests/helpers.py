"""Shared builders and independent oracles for the test suite."""

import numpy as np
from scipy.integrate import quad

from ddae import Atom, DdaeSystem, DelayKernel, InitialState, dirac, zero_kernel


def quad_laplace(piece, s, rel_tol=1e-12):
    """Adaptive-quadrature Laplace transform of a single density piece.

    Entirely independent of the closed-form evaluation path.
    """
    rows, cols = piece.shape
    out = np.zeros((rows, cols), dtype=complex)
    for i in range(rows):
        for j in range(cols):
            def integrand_re(theta):
                return (np.exp(-s * theta) * piece.value(theta)[i, j]).real

            def integrand_im(theta):
                return (np.exp(-s * theta) * piece.value(theta)[i, j]).imag

            re_val, _ = quad(integrand_re, piece.a, piece.b, epsabs=1e-13, epsrel=rel_tol, limit=300)
            im_val, _ = quad(integrand_im, piece.a, piece.b, epsabs=1e-13, epsrel=rel_tol, limit=300)
            out[i, j] = complex(re_val, im_val)
    return out


def random_matrix(rng, rows, cols, scale=1.0, complex_entries=False):
    out = rng.uniform(-scale, scale, size=(rows, cols))
    if complex_entries:
        out = out + 1j * rng.uniform(-scale, scale, size=(rows, cols))
    return out


def random_atomic_kernel(rng, rows, cols, memory, grid=None, max_atoms=3, scale=1.0,
                         min_location=0.0, allow_zero=True):
    """Kernel with a few atoms at grid-aligned locations in [min_location, memory]."""
    if grid is None:
        grid = memory / 4 if memory > 0 else 1.0
    lo = int(np.ceil(min_location / grid - 1e-9))
    hi = int(round(memory / grid))
    if not allow_zero:
        lo = max(lo, 1)
    count = rng.integers(1, max_atoms + 1)
    atoms = []
    for _ in range(count):
        q = int(rng.integers(lo, hi + 1))
        atoms.append(Atom(q * grid, random_matrix(rng, rows, cols, scale)))
    return DelayKernel(rows, cols, memory, atoms=tuple(atoms))


def random_system(rng, n_max=3, m_max=3, memory=1.0, grid=0.25, scale=0.6,
                  strictly_causal_d=False, require_invertible=False):
    """Random atomic system; optionally resampled until I - D{0} is invertible."""
    from ddae import classify, Posedness

    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    while True:
        a_kernel = random_atomic_kernel(rng, n, n, memory, grid, scale=scale)
        b_kernel = random_atomic_kernel(rng, n, m, memory, grid, scale=scale)
        c_kernel = random_atomic_kernel(rng, m, n, memory, grid, scale=scale)
        d_kernel = random_atomic_kernel(rng, m, m, memory, grid, scale=scale,
                                        allow_zero=not strictly_causal_d)
        system = DdaeSystem(n, m, memory, a_kernel, b_kernel, c_kernel, d_kernel)
        if not require_invertible:
            return system
        if classify(system).kind is not Posedness.SINGULAR:
            return system


def ade_system(memory=1.0):
    """x'(t) = 0, y(t) = x(t) + y(t): the no-solution/multiple-solution case."""
    return DdaeSystem(
        1, 1, memory,
        zero_kernel(1, 1, memory),
        zero_kernel(1, 1, memory),
        dirac(0.0, [[1.0]], memory=memory),
        dirac(0.0, [[1.0]], memory=memory),
    )


def figure_sg_system(delay=1.0):
    """x'(t) = y(t), y(t) = 2 x(t) + y(t - delay)."""
    return DdaeSystem(
        1, 1, delay,
        zero_kernel(1, 1, delay),
        dirac(0.0, [[1.0]], memory=delay),
        dirac(0.0, [[2.0]], memory=delay),
        dirac(delay, [[1.0]], memory=delay),
    )


def retarded_benchmark():
    """x'(t) = x(t - 1); rightmost characteristic root is the bisection value."""
    return DdaeSystem.differential(1, 1.0, dirac(1.0, [[1.0]]))


def bisect_lambert_root():
    """Rightmost root of s = e^{-s}, by bisection on the real axis."""
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid - np.exp(-mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def double_integrator_plant():
    from ddae import FsaPlant

    return FsaPlant([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], 1.0)


def constant_state(system, step, chi_value=None, psi_value=None, phi=None):
    """Constant memory functions, by default all ones."""
    chi = np.ones(system.n) if chi_value is None else np.asarray(chi_value)
    psi = np.ones(system.m) if psi_value is None else np.asarray(psi_value)
    head = chi if phi is None else np.asarray(phi)
    return InitialState.constant(head, chi, psi, system.r, step)
