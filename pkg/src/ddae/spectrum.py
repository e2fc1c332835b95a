"""Characteristic matrices, winding-number root counts and growth bounds.

det Delta(s) vanishes exactly at the exponential rates the system can
sustain; the rightmost real part inside a search window estimates the growth
bound.  The determinant of I - L[F](s) for the explicitized algebraic part
("difference part") is reported alongside as a diagnostic: its zero chains
mark where root chains of the full determinant can accumulate, so zeros near
the window edge signal truncation.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .measures import Atom, DelayKernel, NonAtomicConvolution, convolve, laplace
from .model import explicitize

__all__ = [
    "Root",
    "SpectrumReport",
    "RootOnBoundary",
    "WindowTooLarge",
    "DimensionTooLarge",
    "char_matrix",
    "char_det",
    "delta0_det",
    "conv_det",
    "count_roots",
    "find_roots",
]

TWO_PI = 2.0 * math.pi
_MAX_EDGE_DEPTH = 48
_ABS_FLOOR = 1e-280
_BOX_TOL = 1e-6
_JITTERS = (0.0, 1.0, -1.0, 2.0, -2.0, 3.0)
# split positions as box fractions; later entries move the cut well away from
# any feature that blocked the earlier ones
_SPLIT_FRACTIONS = (0.5, 0.4, 0.6, 0.3, 0.7, 0.45, 0.55, 0.2, 0.8)
_MAX_ISOLATE_DEPTH = 240


class RootOnBoundary(Exception):
    """The function is (numerically) zero on the integration contour."""

    def __init__(self, point):
        super().__init__(f"characteristic function vanishes on the contour near {point}")
        self.point = point


class WindowTooLarge(Exception):
    """More roots in the window than the caller allowed."""


class DimensionTooLarge(Exception):
    """Permutation expansion refused; it grows factorially."""


def char_matrix(system, s):
    """Characteristic matrix: diag(s*I, I) minus the kernel transforms at s."""
    n, m = system.n, system.m
    out = np.zeros((n + m, n + m), dtype=complex)
    out[:n, :n] = s * np.eye(n) - laplace(system.A, s)
    if m:
        out[:n, n:] = -laplace(system.B, s)
        out[n:, :n] = -laplace(system.C, s)
        out[n:, n:] = np.eye(m) - laplace(system.D, s)
    return out


def char_det(system, s):
    """Determinant of the characteristic matrix (entire in s)."""
    return complex(np.linalg.det(char_matrix(system, s)))


def _difference_kernel(system):
    """Strictly causal algebraic kernel of the explicitized system."""
    return explicitize(system).D


def delta0_det(system, s, kernel=None):
    """Determinant of I - L[F](s) for the explicitized algebraic part."""
    if system.m == 0:
        return 1.0 + 0.0j
    f_kernel = kernel if kernel is not None else _difference_kernel(system)
    eye = np.eye(system.m)
    return complex(np.linalg.det(eye - laplace(f_kernel, s)))


def _permutation_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def conv_det(kernel, max_dim=8):
    """Determinant under convolution of (delta_0 I - kernel), as a 1x1 kernel.

    The signed permutation expansion of atomic scalar entries; the result is
    supported on [0, m*r] and its transform equals det(I - L[kernel](s)).
    """
    if kernel.pieces:
        raise NonAtomicConvolution("permutation expansion needs a purely atomic kernel")
    m = kernel.out_dim
    if kernel.in_dim != m:
        raise ValueError("conv_det needs a square kernel")
    if m > max_dim:
        raise DimensionTooLarge(f"dimension {m} exceeds the permutation-expansion cap {max_dim}")

    entries = []
    for i in range(m):
        row = []
        for j in range(m):
            atoms = [Atom(at.location, -at.weight[i : i + 1, j : j + 1]) for at in kernel.atoms
                     if at.weight[i, j] != 0]
            if i == j:
                atoms.append(Atom(0.0, np.eye(1)))
            row.append(DelayKernel(1, 1, kernel.memory, atoms=tuple(atoms)))
        entries.append(row)

    signed_atoms = []
    for perm in itertools.permutations(range(m)):
        product = entries[0][perm[0]]
        for i in range(1, m):
            product = convolve(product, entries[i][perm[i]])
        sign = _permutation_sign(perm)
        signed_atoms.extend(Atom(at.location, sign * at.weight) for at in product.atoms)
    return DelayKernel(1, 1, m * kernel.memory, atoms=tuple(signed_atoms))


class _Evaluator:
    """Caching point evaluator that flags exact/underflowed contour zeros."""

    def __init__(self, fn):
        self.fn = fn
        self.cache = {}

    def __call__(self, z):
        v = self.cache.get(z)
        if v is None:
            v = complex(self.fn(z))
            self.cache[z] = v
        if abs(v) < _ABS_FLOOR:
            raise RootOnBoundary(z)
        return v


def _segment_phase(f, za, fa, zb, fb, depth):
    # a nearby root hides a full phase turn between aligned endpoint samples,
    # but it also dents the magnitude: bounding the magnitude ratio per
    # accepted segment forces subdivision down to the scale of any dip
    step = cmath.phase(fb / fa)
    ratio = abs(fb) / abs(fa)
    if abs(step) < math.pi / 2 and 0.25 < ratio < 4.0:
        # midpoint cross-check: halves must agree with the single reading
        zm = 0.5 * (za + zb)
        fm = f(zm)
        half_a = cmath.phase(fm / fa)
        half_b = cmath.phase(fb / fm)
        if (abs(half_a) < math.pi / 2 and abs(half_b) < math.pi / 2
                and 0.25 < abs(fm) / abs(fa) < 4.0
                and abs(half_a + half_b - step) < 1e-9):
            return step
    if depth >= _MAX_EDGE_DEPTH:
        raise RootOnBoundary(0.5 * (za + zb))
    zm = 0.5 * (za + zb)
    fm = f(zm)
    return _segment_phase(f, za, fa, zm, fm, depth + 1) + _segment_phase(f, zm, fm, zb, fb, depth + 1)


def _edge_phase(f, za, zb, rate):
    # seed the subdivision so no segment can rotate by more than ~2 radians
    # from the exponential factors alone; uniform rotation of ~4*pi within one
    # segment would otherwise alias invisibly past every pointwise check
    presplit = max(4, min(int(math.ceil(abs(zb - za) * rate / 2.0)) + 1, 1 << 16))
    pts = [za + (zb - za) * (k / presplit) for k in range(presplit + 1)]
    vals = [f(z) for z in pts]
    return sum(
        _segment_phase(f, pts[k], vals[k], pts[k + 1], vals[k + 1], 0) for k in range(presplit)
    )


def _box_winding(f, box, rate=2.0):
    re0, re1, im0, im1 = box
    corners = [complex(re0, im0), complex(re1, im0), complex(re1, im1), complex(re0, im1)]
    total = sum(_edge_phase(f, corners[k], corners[(k + 1) % 4], rate) for k in range(4))
    count = round(total / TWO_PI)
    if abs(total - TWO_PI * count) > 1e-6:
        raise ArithmeticError(f"contour phase {total} is not a multiple of 2*pi")
    return count


def _kernel_row_span(kernel, row):
    """Largest delay the given output row of the kernel reaches back to."""
    spans = [atom.location for atom in kernel.atoms if atom.weight[row].any()]
    spans += [piece.b for piece in kernel.pieces]
    return max(spans, default=0.0)


def _phase_rate(system):
    """Bound on the rotation rate of det Delta along a contour.

    Every determinant term carries a factor e^{-s tau} with tau at most the
    sum over rows of the largest delay in that row.
    """
    total = 0.5
    for i in range(system.n):
        span = _kernel_row_span(system.A, i)
        if system.m:
            span = max(span, _kernel_row_span(system.B, i))
        total += span
    for i in range(system.m):
        total += max(_kernel_row_span(system.C, i), _kernel_row_span(system.D, i))
    return total


def _difference_rate(kernel):
    return 0.5 + sum(_kernel_row_span(kernel, i) for i in range(kernel.out_dim))


def _count_window(f, box, rate):
    """Count with outward jitter retries when a root sits on the boundary."""
    re0, re1, im0, im1 = box
    diam = max(re1 - re0, im1 - im0)
    last = None
    for attempt in range(len(_JITTERS)):
        pad = attempt * 1e-6 * diam
        try:
            return _box_winding(f, (re0 - pad, re1 + pad, im0 - pad, im1 + pad), rate)
        except RootOnBoundary as exc:
            last = exc
    raise last


def _isolate(f, box, count, rate):
    """Bisect until every sub-box smaller than the tolerance, keep counts."""
    found = []

    def rec(bx, cnt, depth):
        if cnt == 0:
            return
        re0, re1, im0, im1 = bx
        width, height = re1 - re0, im1 - im0
        if max(width, height) < _BOX_TOL:
            found.append((complex(0.5 * (re0 + re1), 0.5 * (im0 + im1)), cnt))
            return
        if depth > _MAX_ISOLATE_DEPTH:
            raise RootOnBoundary(complex(0.5 * (re0 + re1), 0.5 * (im0 + im1)))
        # prefer the long axis, but fall back to the other one: a root cluster
        # hugging a grid line blocks every nearby parallel cut while the
        # orthogonal direction separates it cleanly
        axes = ("re", "im") if width >= height else ("im", "re")
        for axis in axes:
            for fraction in _SPLIT_FRACTIONS:
                if axis == "re":
                    mid = re0 + fraction * width
                    first, second = (re0, mid, im0, im1), (mid, re1, im0, im1)
                else:
                    mid = im0 + fraction * height
                    first, second = (re0, re1, im0, mid), (re0, re1, mid, im1)
                try:
                    c1 = _box_winding(f, first, rate)
                    c2 = _box_winding(f, second, rate)
                except RootOnBoundary:
                    continue
                if c1 + c2 != cnt:
                    continue
                rec(first, c1, depth + 1)
                rec(second, c2, depth + 1)
                return
        raise RootOnBoundary(complex(0.5 * (re0 + re1), 0.5 * (im0 + im1)))

    rec(box, count, 0)
    return found


def _newton_polish(f, start, residual_target):
    s = start
    best = (abs(f(s)), s)
    for _ in range(60):
        fs = f(s)
        if abs(fs) < best[0]:
            best = (abs(fs), s)
        if abs(fs) <= residual_target:
            break
        delta = 1e-7 * (1.0 + abs(s))
        deriv = (f(s + delta) - f(s - delta)) / (2 * delta)
        if deriv == 0:
            break
        step = fs / deriv
        s = s - step
        if abs(step) <= 1e-15 * (1.0 + abs(s)):
            fs = f(s)
            if abs(fs) < best[0]:
                best = (abs(fs), s)
            break
    return best[1], best[0]


def _locate_roots(fn, box, max_roots, degree, rate):
    """Count, isolate and polish the roots of fn inside the box."""
    f = _Evaluator(fn)
    total = _count_window(f, box, rate)
    if total > max_roots:
        raise WindowTooLarge(f"{total} roots in the window exceed the cap {max_roots}")
    raw = _isolate(f, box, total, rate) if total else []
    roots = []
    for center, mult in raw:
        target = 1e-10 * max(1.0, (1.0 + abs(center)) ** degree)
        loc, residual = _newton_polish(f, center, target)
        if abs(loc - center) > 10 * _BOX_TOL:
            loc, residual = center, abs(f(center))
        merged = False
        for idx, existing in enumerate(roots):
            if abs(existing.location - loc) < 2 * _BOX_TOL:
                roots[idx] = Root(existing.location, existing.multiplicity + mult, existing.residual)
                merged = True
                break
        if not merged:
            roots.append(Root(loc, mult, residual))
    roots.sort(key=lambda root: (-root.location.real, root.location.imag))
    return roots, total


@dataclass(frozen=True, eq=False)
class Root:
    location: complex
    multiplicity: int
    residual: float


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Roots of the characteristic determinant inside a search window."""

    window: tuple  # (re_min, re_max, im_max)
    roots: tuple
    growth_bound_in_window: float
    delta0_roots: tuple
    warnings: tuple


def count_roots(system, rectangle):
    """Winding number of det Delta along the rectangle (re0, re1, im0, im1).

    Raises RootOnBoundary when the determinant vanishes on the contour; the
    caller is expected to perturb the rectangle and retry.
    """
    f = _Evaluator(lambda s: char_det(system, s))
    return _box_winding(f, tuple(float(v) for v in rectangle), _phase_rate(system))


def find_roots(system, window, max_roots=64):
    """All characteristic roots in [re_min, re_max] x [-im_max, im_max].

    Returns a report with multiplicities, the growth bound over the window,
    the difference-part roots and truncation warnings.
    """
    re_min, re_max, im_max = (float(v) for v in window)
    if not (re_min < re_max and im_max > 0):
        raise ValueError("window must satisfy re_min < re_max and im_max > 0")
    box = (re_min, re_max, -im_max, im_max)

    roots, total = _locate_roots(lambda s: char_det(system, s), box, max_roots, system.n)

    warnings = []
    delta0 = []
    if system.m:
        kernel = _difference_kernel(system)
        delta0, _ = _locate_roots(
            lambda s: delta0_det(system, s, kernel=kernel), box, max_roots, 0
        )

    if roots:
        growth = max(root.location.real for root in roots)
    else:
        growth = float("-inf")

    if total >= max_roots:
        warnings.append("window may truncate spectrum: root count hit max_roots")
    if any(abs(root.location.real - re_min) <= 0.5 for root in delta0):
        warnings.append("window may truncate spectrum: difference-part roots near the left edge")

    return SpectrumReport(
        (re_min, re_max, im_max), tuple(roots), growth, tuple(delta0), tuple(warnings)
    )
