"""Causal matrix-valued measures on [0, r]: the convolution kernels of delays.

A kernel is a finite set of point masses (atoms) plus closed-form density
pieces, either polynomial or of the shape K1 e^{theta S} K2.  The family is
closed under sums, left scaling and atomic convolution, and every member has
an exact Laplace transform, so spectral computations downstream never rely
on numerical quadrature of the kernel itself.

The convention is causal throughout: a term "z(t - tau)" is an atom at
location tau >= 0, and all supports live inside [0, memory].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm

__all__ = [
    "MAX_POLY_DEGREE",
    "Atom",
    "PolyDensity",
    "ExpDensity",
    "DelayKernel",
    "NonAtomicConvolution",
    "AtomOffGrid",
    "zero_kernel",
    "dirac",
    "atom_at_zero",
    "add",
    "scale_left",
    "strip_zero_atom",
    "laplace",
    "convolve",
    "total_variation",
    "discretize",
    "entry_kernel",
]

MAX_POLY_DEGREE = 8


class NonAtomicConvolution(Exception):
    """Convolution was requested for a kernel that has density pieces."""


class AtomOffGrid(Exception):
    """An atom location is not an integer multiple of the grid step."""

    def __init__(self, location, step):
        super().__init__(f"atom at t={location!r} does not sit on the step-{step!r} grid")
        self.location = location
        self.step = step


def _matrix(value, rows=None, cols=None):
    out = np.array(value, dtype=complex)
    if out.ndim != 2:
        raise ValueError(f"expected a matrix, got an array of dimension {out.ndim}")
    if rows is not None and out.shape != (rows, cols):
        raise ValueError(f"expected a {rows}x{cols} matrix, got {out.shape[0]}x{out.shape[1]}")
    out.setflags(write=False)
    return out


def _merge_tol(memory):
    return 1e-12 * max(memory, 1.0)


def _integral_expm(a, b, gen):
    """Integral of e^{theta X} over [a, b], robust to singular or defective X.

    Uses the top-right block of the exponential of the augmented matrix
    [[X, I], [0, 0]], which equals the integral of e^{u X} over [0, b - a];
    no inversion of X is ever attempted.
    """
    d = gen.shape[0]
    aug = np.zeros((2 * d, 2 * d), dtype=complex)
    aug[:d, :d] = gen
    aug[:d, d:] = np.eye(d)
    block = expm(aug * (b - a))[:d, d:]
    if a == 0.0:
        return block
    return expm(a * gen) @ block


def _power_moments(a, b, s, degree):
    """Integrals of theta^k e^{-s theta} over [a, b] for k = 0..degree.

    When |s| is comparable to the degree, the integration-by-parts recurrence
    amplifies roundoff, so for |s| (b - a) / 2 <= 2 the integral is expanded
    around the interval midpoint with the exponential factored out there;
    the expansion is exact in the limit s -> 0.  Elsewhere the recurrence is
    stable.
    """
    out = np.empty(degree + 1, dtype=complex)
    half = 0.5 * (b - a)
    center = 0.5 * (a + b)
    if abs(s) * half <= 2.0:
        max_terms = 48
        u_moment = np.zeros(degree + max_terms + 1)
        for p in range(0, degree + max_terms + 1, 2):
            u_moment[p] = 2.0 * half ** (p + 1) / (p + 1)
        shift = np.exp(-s * center)
        for k in range(degree + 1):
            shifted = [math.comb(k, i) * center ** (k - i) for i in range(k + 1)]
            total = 0.0j
            coef = 1.0 + 0.0j  # (-s)^j / j!
            small_streak = 0
            for j in range(max_terms):
                term = coef * sum(ck * u_moment[i + j] for i, ck in enumerate(shifted))
                total += term
                # odd-power terms can vanish exactly; stop on two tiny in a row
                small_streak = small_streak + 1 if abs(term) <= 1e-20 * (abs(total) + 1e-30) else 0
                if j > 4 and small_streak >= 2:
                    break
                coef *= -s / (j + 1)
            out[k] = shift * total
        return out
    ea = np.exp(-s * a)
    eb = np.exp(-s * b)
    out[0] = (ea - eb) / s
    for k in range(1, degree + 1):
        out[k] = (a**k * ea - b**k * eb) / s + (k / s) * out[k - 1]
    return out


@dataclass(frozen=True, eq=False)
class Atom:
    """Point mass: weight matrix sitting at a single nonnegative location."""

    location: float
    weight: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "location", float(self.location))
        object.__setattr__(self, "weight", _matrix(self.weight))
        if self.location < 0:
            raise ValueError(f"atom location {self.location} is negative")

    @property
    def shape(self):
        return self.weight.shape

    def __eq__(self, other):
        if not isinstance(other, Atom):
            return NotImplemented
        return self.location == other.location and np.array_equal(self.weight, other.weight)


@dataclass(frozen=True, eq=False)
class PolyDensity:
    """Density sum_k M_k theta^k on the interval [a, b]."""

    a: float
    b: float
    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        coeffs = tuple(_matrix(c) for c in self.coeffs)
        if not coeffs:
            raise ValueError("polynomial density needs at least one coefficient")
        if len(coeffs) - 1 > MAX_POLY_DEGREE:
            raise ValueError(f"polynomial degree {len(coeffs) - 1} exceeds {MAX_POLY_DEGREE}")
        shape = coeffs[0].shape
        if any(c.shape != shape for c in coeffs):
            raise ValueError("polynomial coefficients differ in shape")
        if not 0 <= self.a < self.b:
            raise ValueError(f"invalid density interval [{self.a}, {self.b}]")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def shape(self):
        return self.coeffs[0].shape

    def value(self, theta):
        acc = np.zeros(self.shape, dtype=complex)
        power = 1.0
        for c in self.coeffs:
            acc = acc + power * c
            power *= theta
        return acc

    def laplace(self, s):
        moments = _power_moments(self.a, self.b, s, len(self.coeffs) - 1)
        acc = np.zeros(self.shape, dtype=complex)
        for c, mk in zip(self.coeffs, moments):
            acc = acc + mk * c
        return acc

    def scaled(self, mat):
        return PolyDensity(self.a, self.b, tuple(mat @ c for c in self.coeffs))

    def entry(self, i, j):
        return PolyDensity(self.a, self.b, tuple(c[i : i + 1, j : j + 1] for c in self.coeffs))

    def is_zero(self):
        return all(not c.any() for c in self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, PolyDensity):
            return NotImplemented
        return (
            self.a == other.a
            and self.b == other.b
            and len(self.coeffs) == len(other.coeffs)
            and all(np.array_equal(c, d) for c, d in zip(self.coeffs, other.coeffs))
        )


@dataclass(frozen=True, eq=False)
class ExpDensity:
    """Density K1 e^{theta S} K2 on the interval [a, b]; S square."""

    a: float
    b: float
    left: np.ndarray
    gen: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        left = _matrix(self.left)
        gen = _matrix(self.gen)
        right = _matrix(self.right)
        if gen.shape[0] != gen.shape[1]:
            raise ValueError("exponential generator must be square")
        if left.shape[1] != gen.shape[0] or gen.shape[1] != right.shape[0]:
            raise ValueError("exponential density factor shapes do not chain")
        if not 0 <= self.a < self.b:
            raise ValueError(f"invalid density interval [{self.a}, {self.b}]")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "gen", gen)
        object.__setattr__(self, "right", right)

    @property
    def shape(self):
        return (self.left.shape[0], self.right.shape[1])

    def value(self, theta):
        return self.left @ expm(theta * self.gen) @ self.right

    def laplace(self, s):
        shifted = self.gen - s * np.eye(self.gen.shape[0])
        return self.left @ _integral_expm(self.a, self.b, shifted) @ self.right

    def scaled(self, mat):
        return ExpDensity(self.a, self.b, mat @ self.left, self.gen, self.right)

    def entry(self, i, j):
        return ExpDensity(self.a, self.b, self.left[i : i + 1, :], self.gen, self.right[:, j : j + 1])

    def is_zero(self):
        return not (self.left.any() and self.right.any())

    def __eq__(self, other):
        if not isinstance(other, ExpDensity):
            return NotImplemented
        return (
            self.a == other.a
            and self.b == other.b
            and np.array_equal(self.left, other.left)
            and np.array_equal(self.gen, other.gen)
            and np.array_equal(self.right, other.right)
        )


@dataclass(frozen=True, eq=False)
class DelayKernel:
    """Matrix-valued causal measure: atoms plus density pieces on [0, memory].

    Atoms closer than 1e-12 * max(memory, 1) are merged by weight addition;
    merged atoms with exactly zero weight are dropped.  Instances are
    immutable and safe to share across threads.
    """

    out_dim: int
    in_dim: int
    memory: float
    atoms: tuple = ()
    pieces: tuple = ()

    def __post_init__(self):
        if self.out_dim < 1 or self.in_dim < 1:
            raise ValueError("kernel dimensions must be positive")
        object.__setattr__(self, "memory", float(self.memory))
        if self.memory < 0:
            raise ValueError("kernel memory must be nonnegative")
        tol = _merge_tol(self.memory)
        shape = (self.out_dim, self.in_dim)

        merged = []
        for atom in sorted(self.atoms, key=lambda at: at.location):
            if atom.shape != shape:
                raise ValueError(f"atom weight shape {atom.shape} does not match kernel shape {shape}")
            if atom.location > self.memory + tol:
                raise ValueError(f"atom at {atom.location} lies outside [0, {self.memory}]")
            if merged and abs(atom.location - merged[-1].location) <= tol:
                merged[-1] = Atom(merged[-1].location, merged[-1].weight + atom.weight)
            else:
                merged.append(atom)
        merged = [at for at in merged if at.weight.any()]

        pieces = tuple(self.pieces)
        for piece in pieces:
            if piece.shape != shape:
                raise ValueError(f"density shape {piece.shape} does not match kernel shape {shape}")
            if piece.b > self.memory + tol:
                raise ValueError(f"density on [{piece.a}, {piece.b}] exceeds memory {self.memory}")

        object.__setattr__(self, "atoms", tuple(merged))
        object.__setattr__(self, "pieces", pieces)

    @property
    def shape(self):
        return (self.out_dim, self.in_dim)

    def is_atomic(self):
        return not self.pieces

    def __eq__(self, other):
        if not isinstance(other, DelayKernel):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.memory == other.memory
            and self.atoms == other.atoms
            and self.pieces == other.pieces
        )


def zero_kernel(out_dim, in_dim, memory):
    """Kernel with no mass at all."""
    return DelayKernel(out_dim, in_dim, memory)


def dirac(location, weight, memory=None):
    """Single point mass at `location`; memory defaults to the location itself."""
    weight = _matrix(weight)
    location = float(location)
    if memory is None:
        memory = location
    if not 0 <= location <= memory:
        raise ValueError(f"atom location {location} outside [0, {memory}]")
    return DelayKernel(weight.shape[0], weight.shape[1], memory, atoms=(Atom(location, weight),))


def atom_at_zero(kernel):
    """Weight of the point mass at t = 0 (densities never contribute)."""
    if kernel.atoms and kernel.atoms[0].location <= _merge_tol(kernel.memory):
        return kernel.atoms[0].weight
    return np.zeros(kernel.shape, dtype=complex)


def add(k1, k2):
    """Pointwise sum of two kernels of equal shape."""
    if k1.shape != k2.shape:
        raise ValueError(f"cannot add kernels of shapes {k1.shape} and {k2.shape}")
    return DelayKernel(
        k1.out_dim,
        k1.in_dim,
        max(k1.memory, k2.memory),
        atoms=k1.atoms + k2.atoms,
        pieces=k1.pieces + k2.pieces,
    )


def scale_left(mat, kernel):
    """Left-multiply every matrix value of the kernel by a square matrix."""
    mat = _matrix(mat)
    if mat.shape != (kernel.out_dim, kernel.out_dim):
        raise ValueError(f"left factor must be {kernel.out_dim}x{kernel.out_dim}, got {mat.shape}")
    return DelayKernel(
        kernel.out_dim,
        kernel.in_dim,
        kernel.memory,
        atoms=tuple(Atom(at.location, mat @ at.weight) for at in kernel.atoms),
        pieces=tuple(piece.scaled(mat) for piece in kernel.pieces),
    )


def strip_zero_atom(kernel):
    """The same kernel with any point mass at t = 0 removed."""
    tol = _merge_tol(kernel.memory)
    kept = tuple(at for at in kernel.atoms if at.location > tol)
    if len(kept) == len(kernel.atoms):
        return kernel
    return DelayKernel(kernel.out_dim, kernel.in_dim, kernel.memory, atoms=kept, pieces=kernel.pieces)


def laplace(kernel, s):
    """Exact Laplace transform of the kernel at the complex point s (entire)."""
    acc = np.zeros(kernel.shape, dtype=complex)
    for atom in kernel.atoms:
        acc = acc + np.exp(-s * atom.location) * atom.weight
    for piece in kernel.pieces:
        acc = acc + piece.laplace(s)
    return acc


def convolve(k1, k2):
    """Convolution of two purely atomic kernels with chaining dimensions."""
    if not (k1.is_atomic() and k2.is_atomic()):
        raise NonAtomicConvolution("convolution is only implemented for purely atomic kernels")
    if k1.in_dim != k2.out_dim:
        raise ValueError(f"inner dimensions {k1.in_dim} and {k2.out_dim} do not match")
    atoms = tuple(
        Atom(a1.location + a2.location, a1.weight @ a2.weight)
        for a1 in k1.atoms
        for a2 in k2.atoms
    )
    return DelayKernel(k1.out_dim, k2.in_dim, k1.memory + k2.memory, atoms=atoms)


def total_variation(kernel, rel_tol=1e-8):
    """Upper bound on the total variation, in spectral norm.

    Atom norms are exact; density integrals use adaptive quadrature, so the
    result is correct to the quadrature tolerance.
    """
    total = 0.0
    for atom in kernel.atoms:
        total += np.linalg.norm(atom.weight, 2)
    for piece in kernel.pieces:
        val, _ = quad(lambda theta: np.linalg.norm(piece.value(theta), 2),
                      piece.a, piece.b, epsrel=rel_tol, epsabs=1e-14, limit=200)
        total += val
    return total


def discretize(kernel, step):
    """Quadrature weights w_q so that sum_q w_q z(t - q*step) ~ (kernel * z)(t).

    Atoms must sit on the grid and land exactly on their node.  Densities are
    integrated by cell-wise trapezoid on the grid nodes, except that density
    mass assigned to node 0 is moved to node 1, so a strictly causal kernel
    always yields w_0 = 0 exactly.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    r = kernel.memory
    cells = int(math.ceil(r / step - 1e-9)) if r > 0 else 0
    snap_tol = 1e-9 * (r if r > 0 else step)
    shape = (cells + 1,) + kernel.shape
    from_atoms = np.zeros(shape, dtype=complex)
    from_pieces = np.zeros(shape, dtype=complex)

    for atom in kernel.atoms:
        q = int(round(atom.location / step))
        if abs(atom.location - q * step) > snap_tol or q > cells:
            raise AtomOffGrid(atom.location, step)
        from_atoms[q] += atom.weight

    for piece in kernel.pieces:
        q_first = int(math.floor(piece.a / step + 1e-12))
        q_last = int(math.ceil(piece.b / step - 1e-12))
        for q in range(q_first, min(q_last, cells)):
            lo = max(piece.a, q * step)
            hi = min(piece.b, (q + 1) * step)
            if hi - lo <= 1e-15 * max(step, 1.0):
                continue
            half = 0.5 * (hi - lo)
            from_pieces[q] += half * piece.value(lo)
            from_pieces[q + 1] += half * piece.value(hi)

    if cells >= 1:
        from_pieces[1] += from_pieces[0]
        from_pieces[0] = 0.0
    return from_atoms + from_pieces


def entry_kernel(kernel, i, j):
    """Scalar 1x1 kernel holding entry (i, j) of every matrix value."""
    atoms = tuple(
        Atom(at.location, at.weight[i : i + 1, j : j + 1])
        for at in kernel.atoms
        if at.weight[i, j] != 0
    )
    pieces = tuple(p.entry(i, j) for p in kernel.pieces)
    pieces = tuple(p for p in pieces if not p.is_zero())
    return DelayKernel(1, 1, kernel.memory, atoms=atoms, pieces=pieces)
