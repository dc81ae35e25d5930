"""Quantum characteristic functions ``z -> tr T V(z)`` and their algebra.

Every characteristic function evaluates on single points or on batches of
shape ``(..., 2d)``. Internally values are carried as logarithms where that is
exact (Gaussian exponents, the Gaussian prefactor of displacement matrix
elements), which keeps large powers ``f(z/sqrt(n))**n`` accurate.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fock import ProbabilityOperator, displacement_polynomial, phase_to_alpha, weyl_operator
from .symplectic import as_phase, delta

PD_TOL = 1e-8


class QuadratureError(RuntimeError):
    """The integrand has not decayed at the edge of the quadrature box."""


class CharFn:
    """Base class. Subclasses implement :meth:`log_evaluate`."""

    d: int

    def log_evaluate(self, points) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, points) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.exp(self.log_evaluate(points))

    def __call__(self, z):
        z = as_phase(z, self.d)
        out = self.evaluate(z)
        return complex(out) if np.ndim(out) == 0 else out


class Gaussian(CharFn):
    """``exp(i <z0, z> - <Qz, z>/2)``."""

    def __init__(self, Q, z0=None):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape[0] != Q.shape[1] or Q.shape[0] % 2:
            raise ValueError(f"covariance must be 2d x 2d, got shape {Q.shape}")
        self.Q = Q
        self.d = Q.shape[0] // 2
        self.z0 = np.zeros(2 * self.d) if z0 is None else as_phase(z0, self.d)

    @classmethod
    def isotropic(cls, d: int, a: float) -> "Gaussian":
        return cls(a * np.eye(2 * d))

    def log_evaluate(self, points):
        z = as_phase(points, self.d)
        quad = np.einsum("...i,ij,...j->...", z, self.Q, z)
        return 1j * (z @ self.z0) - 0.5 * quad + 0j

    def __repr__(self):
        return f"Gaussian(d={self.d}, z0={self.z0.tolist()}, Q={self.Q.tolist()})"


class OperatorBacked(CharFn):
    """Characteristic function of a probability operator.

    ``method="exact"`` contracts ``T`` with the exact displacement matrix
    elements (the state is a probability operator on the full Fock space that
    happens to live on the first ``cutoff`` levels). ``method="truncated"``
    uses ``V(z)`` built from the truncated ``R(z)``, one eigendecomposition per
    point.
    """

    def __init__(self, T: ProbabilityOperator, method: str = "exact"):
        if method not in ("exact", "truncated"):
            raise ValueError(f"unknown evaluation method {method!r}")
        self.T = T
        self.d = T.d
        self.method = method
        N = T.space.cutoff
        self._tensor = T.matrix.reshape((N,) * (2 * self.d))
        letters = "abcdefghijklmnopqrstuvw"
        rows, cols = letters[:self.d], letters[self.d:2 * self.d]
        # tr(T D) = sum T[m, n] prod_k D_k[n_k, m_k]
        self._einsum = ",".join([rows + cols] + [f"z{cols[k]}{rows[k]}" for k in range(self.d)]) + "->z"

    def _exact_parts(self, z):
        alpha = phase_to_alpha(z)
        log_pref = -0.5 * np.sum(np.abs(alpha) ** 2, axis=-1)
        flat = alpha.reshape(-1, self.d)
        polys = [displacement_polynomial(self.T.space.cutoff, flat[:, k]) for k in range(self.d)]
        poly = np.einsum(self._einsum, self._tensor, *polys, optimize=True)
        return log_pref, poly.reshape(alpha.shape[:-1])

    def log_evaluate(self, points):
        z = as_phase(points, self.d)
        if self.method == "truncated":
            with np.errstate(divide="ignore"):
                return np.log(self._truncated(z) + 0j)
        log_pref, poly = self._exact_parts(z)
        with np.errstate(divide="ignore"):
            return log_pref + np.log(poly + 0j)

    def evaluate(self, points):
        z = as_phase(points, self.d)
        if self.method == "truncated":
            return self._truncated(z)
        log_pref, poly = self._exact_parts(z)
        return np.exp(log_pref) * poly

    def _truncated(self, z):
        flat = z.reshape(-1, 2 * self.d)
        out = np.array([np.trace(self.T.matrix @ weyl_operator(self.T.space, p)) for p in flat])
        return out.reshape(z.shape[:-1])


class Product(CharFn):
    """Pointwise product of characteristic functions."""

    def __init__(self, factors: Sequence[CharFn]):
        factors = list(factors)
        if not factors:
            raise ValueError("empty product")
        dims = {f.d for f in factors}
        if len(dims) != 1:
            raise ValueError(f"dimension mismatch among factors: {sorted(dims)}")
        self.factors = factors
        self.d = factors[0].d

    def log_evaluate(self, points):
        return sum(f.log_evaluate(points) for f in self.factors)

    def evaluate(self, points):
        out = self.factors[0].evaluate(points)
        for f in self.factors[1:]:
            out = out * f.evaluate(points)
        return out


class Translated(CharFn):
    """``exp(i <z0, z>) base(z)``."""

    def __init__(self, base: CharFn, z0):
        self.base = base
        self.d = base.d
        self.z0 = as_phase(z0, base.d)

    def log_evaluate(self, points):
        z = as_phase(points, self.d)
        return 1j * (z @ self.z0) + self.base.log_evaluate(z)

    def evaluate(self, points):
        z = as_phase(points, self.d)
        return np.exp(1j * (z @ self.z0)) * self.base.evaluate(z)


def translate(f: CharFn, z0) -> CharFn:
    return Translated(f, z0)


def convolve(f: CharFn, g: CharFn) -> CharFn:
    """Characteristic function of the convolution: the pointwise product."""
    return Product([f, g])


@dataclass(frozen=True)
class GridSpec:
    """Tensor lattice in R^{2d}: one ``(lo, hi, count)`` triple per coordinate.

    An optional ``radius`` keeps only points with ``||z|| <= radius``.
    """

    axes: tuple[tuple[float, float, int], ...]
    radius: float | None = None

    def __post_init__(self):
        axes = tuple((float(lo), float(hi), int(n)) for lo, hi, n in self.axes)
        if not axes or len(axes) % 2:
            raise ValueError("grid needs an even, nonzero number of axes")
        for lo, hi, n in axes:
            if n < 1 or not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
                raise ValueError(f"bad grid axis {(lo, hi, n)}")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def box(cls, d: int, half_width: float, count: int, radius: float | None = None) -> "GridSpec":
        return cls(((-half_width, half_width, count),) * (2 * d), radius)

    @property
    def d(self) -> int:
        return len(self.axes) // 2

    @property
    def size(self) -> int:
        return len(self.points()) if self.radius is not None else math.prod(n for *_, n in self.axes)

    def points(self) -> np.ndarray:
        ticks = [np.linspace(lo, hi, n) for lo, hi, n in self.axes]
        pts = np.array(list(itertools.product(*ticks)), dtype=float)
        if self.radius is not None:
            pts = pts[np.linalg.norm(pts, axis=1) <= self.radius * (1 + 1e-12)]
        return pts

    def describe(self) -> dict:
        return {"axes": [list(a) for a in self.axes], "radius": self.radius}


def delta_pd_matrix(f: CharFn, points) -> np.ndarray:
    """``M[j, k] = f(z_j - z_k) exp(i Delta(z_j, z_k)/2)``, symmetrized."""
    pts = np.atleast_2d(as_phase(points, f.d))
    if len(pts) == 0:
        raise ValueError("need at least one point")
    diff = pts[:, None, :] - pts[None, :, :]
    M = f.evaluate(diff) * np.exp(0.5j * delta(pts[:, None, :], pts[None, :, :]))
    return 0.5 * (M + M.conj().T)


def delta_pd_check(f: CharFn, points, tol: float = PD_TOL) -> tuple[float, bool]:
    """Minimum eigenvalue of :func:`delta_pd_matrix` and the verdict.

    Passes iff the minimum eigenvalue is at least ``-tol * ||M||_2``. A failure
    proves ``f`` is not the characteristic function of any probability
    operator; a pass on finitely many points is only evidence.
    """
    eig = np.linalg.eigvalsh(delta_pd_matrix(f, points))
    scale = float(np.abs(eig).max())
    return float(eig[0]), bool(eig[0] >= -tol * scale)


def search_delta_pd_witness(f: CharFn, trials: int = 10_000, seed: int = 0,
                            max_points: int = 8, scale_range=(0.5, 4.0)):
    """Random search for a point set violating Delta-positive definiteness.

    Returns ``(min_eigenvalue, points)`` for the worst set found.
    """
    rng = np.random.default_rng(seed)
    best, best_pts = math.inf, None
    for _ in range(trials):
        k = int(rng.integers(2, max_points + 1))
        pts = rng.standard_normal((k, 2 * f.d)) * rng.uniform(*scale_range)
        lam = float(np.linalg.eigvalsh(delta_pd_matrix(f, pts))[0])
        if lam < best:
            best, best_pts = lam, pts
    return best, best_pts


def sup_norm(f: CharFn, grid: GridSpec) -> float:
    pts = grid.points()
    if len(pts) == 0:
        raise ValueError("empty grid")
    return float(np.abs(f.evaluate(pts)).max())


@dataclass(frozen=True)
class Quadrature:
    """Uniform tensor grid on ``[-half_width, half_width]^{2d}``.

    Leaving ``half_width`` unset starts from 8 and widens the box in unit
    steps until ``|f|^2`` on its faces is below ``boundary_tol``; the spacing
    stays at ``spacing`` (161 points per axis at half-width 8).
    """

    half_width: float | None = None
    spacing: float = 0.1
    boundary_tol: float = 1e-10
    min_half_width: float = 8.0
    max_half_width: float = 40.0
    chunk: int = 65536

    def resolve(self, f: CharFn) -> tuple[float, int]:
        if self.half_width is not None:
            L = float(self.half_width)
        else:
            L = self.min_half_width
            while L < self.max_half_width and _face_max(f, L, self.spacing) > self.boundary_tol:
                L += 1.0
        return L, int(round(2 * L / self.spacing)) + 1


def _face_points(d: int, L: float, spacing: float) -> np.ndarray:
    ticks = np.linspace(-L, L, int(round(2 * L / spacing)) + 1)
    faces = []
    for axis in range(2 * d):
        for sign in (-L, L):
            rest = np.array(list(itertools.product(ticks, repeat=2 * d - 1)))
            faces.append(np.insert(rest, axis, sign, axis=1))
    return np.concatenate(faces)


def _face_max(f: CharFn, L: float, spacing: float) -> float:
    return float((np.abs(f.evaluate(_face_points(f.d, L, spacing))) ** 2).max())


def plancherel_norm(f: CharFn, quad: Quadrature = Quadrature()) -> float:
    """``((2 pi)^-d  int |f(z)|^2 dz)^{1/2}`` by a Riemann sum on a box.

    Raises :class:`QuadratureError` when ``|f|^2`` on the box faces exceeds
    ``quad.boundary_tol``.
    """
    d = f.d
    L, npts = quad.resolve(f)
    ticks = np.linspace(-L, L, npts)
    h = ticks[1] - ticks[0]
    total = 0.0
    edge = 0.0
    grid = itertools.product(ticks, repeat=2 * d)
    while True:
        chunk = np.array(list(itertools.islice(grid, quad.chunk)))
        if len(chunk) == 0:
            break
        vals = np.abs(f.evaluate(chunk)) ** 2
        total += vals.sum()
        on_face = np.any(np.abs(chunk) >= L * (1 - 1e-12), axis=1)
        if on_face.any():
            edge = max(edge, float(vals[on_face].max()))
    if edge > quad.boundary_tol:
        raise QuadratureError(f"|f|^2 = {edge:.3g} on the box boundary (half-width {L:g}) "
                              f"exceeds {quad.boundary_tol:g}")
    return math.sqrt(total * h ** (2 * d) / (2 * math.pi) ** d)


def hs_norm(T: ProbabilityOperator) -> float:
    """Hilbert-Schmidt norm ``sqrt(tr T^+ T)``."""
    return float(np.linalg.norm(T.matrix, "fro"))


def write_grid_csv(f: CharFn, grid: GridSpec, stream) -> int:
    """Write ``x1,y1,...,xd,yd,re,im`` rows for every grid point; returns the row count."""
    pts = grid.points()
    vals = f.evaluate(pts) if len(pts) else np.array([])
    writer = csv.writer(stream, lineterminator="\n")
    header = [f"{c}{k}" for k in range(1, grid.d + 1) for c in ("x", "y")] + ["re", "im"]
    writer.writerow(header)
    for p, v in zip(pts, vals):
        writer.writerow([repr(float(c)) for c in p] + [repr(float(v.real)), repr(float(v.imag))])
    return len(pts)
