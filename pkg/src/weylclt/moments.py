"""Distributions of canonical observables in a state and their moments.

For a state ``T`` and a direction ``z`` the measure ``mu_z`` is the
distribution of ``R(z)``: its atoms are the eigenvalues of ``R(z)`` weighted
by ``<v|T|v>``. ``R(z)`` is built on the state's cutoff plus ``padding``
levels per mode; one padding level already makes the first two moments
exact, because ``R`` only couples neighbouring number states.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .fock import FockSpace, ProbabilityOperator, canonical_observable
from .symplectic import as_phase

MERGE_RTOL = 1e-9
WEIGHT_TOL = 1e-10
DEFAULT_PADDING = 1


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finite atomic measure on the real line."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if v.shape != w.shape:
            raise ValueError("values and weights differ in length")
        if not np.all(np.isfinite(v)):
            raise ValueError("atom values must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, x: float = 0.0) -> "DiscreteMeasure":
        return cls(np.array([x]), np.array([1.0]))

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def is_probability(self, tol: float = WEIGHT_TOL) -> bool:
        return abs(self.total - 1.0) <= tol

    def charfn(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.exp(1j * t[..., None] * self.values) @ self.weights

    def to_csv(self, stream) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["value", "weight"])
        for v, w in zip(self.values, self.weights):
            writer.writerow([repr(float(v)), repr(float(w))])

    @classmethod
    def from_csv(cls, stream) -> "DiscreteMeasure":
        rows = list(csv.DictReader(stream))
        return cls(np.array([float(r["value"]) for r in rows]), np.array([float(r["weight"]) for r in rows]))


def _merge_atoms(values: np.ndarray, weights: np.ndarray) -> DiscreteMeasure:
    order = np.argsort(values)
    values, weights = values[order], weights[order]
    tol = MERGE_RTOL * max(1.0, float(np.abs(values).max()))
    out_v, out_w = [values[0]], [weights[0]]
    for v, w in zip(values[1:], weights[1:]):
        if v - out_v[-1] <= tol:
            # weighted position keeps the first moment exact
            tot = out_w[-1] + w
            if tot > 0:
                out_v[-1] = (out_v[-1] * out_w[-1] + v * w) / tot
            out_w[-1] = tot
        else:
            out_v.append(v)
            out_w.append(w)
    return DiscreteMeasure(np.array(out_v), np.array(out_w))


def spectral_measure(T: ProbabilityOperator, z, padding: int = DEFAULT_PADDING) -> DiscreteMeasure:
    """Distribution of ``R(z)`` in the state ``T`` (Dirac at 0 for ``z = 0``)."""
    z = as_phase(z, T.d)
    if not np.any(z):
        return DiscreteMeasure.dirac(0.0)
    Tp = T.embed(T.space.cutoff + padding)
    lam, vecs = np.linalg.eigh(canonical_observable(Tp.space, z))
    w = np.einsum("ij,ik,kj->j", vecs.conj(), Tp.matrix, vecs).real
    w = np.clip(w, 0.0, None)  # rounding can push zero weights slightly negative
    return _merge_atoms(lam, w)


def m1(mu: DiscreteMeasure) -> float:
    return float(mu.weights @ mu.values)


def m2(mu: DiscreteMeasure) -> float:
    return float(mu.weights @ mu.values ** 2)


def sigma2(mu: DiscreteMeasure) -> float:
    """Variance ``m2 - m1^2``; tiny negative rounding is clamped to 0."""
    s = m2(mu) - m1(mu) ** 2
    if s < -1e-12:
        raise ArithmeticError(f"negative variance {s:.3g}")
    return max(s, 0.0)


class LinearityError(ArithmeticError):
    """The mean functional is not linear in ``z`` (cutoff too aggressive)."""


def mean_vector(T: ProbabilityOperator, padding: int = DEFAULT_PADDING,
                checks: int = 8, seed: int = 0, tol: float = 1e-8) -> np.ndarray:
    """Vector ``m`` with ``m1(mu_z) = <m, z>``, i.e. ``(<p_1>, <q_1>, ...)``."""
    n = 2 * T.d
    basis = np.eye(n)
    m = np.array([m1(spectral_measure(T, e, padding)) for e in basis])
    rng = np.random.default_rng(seed)
    for z in rng.standard_normal((checks, n)):
        got = m1(spectral_measure(T, z, padding))
        if abs(got - m @ z) > tol * (1 + np.abs(z).sum()):
            raise LinearityError(f"m1 not linear at z={z.tolist()}: {got} vs {m @ z}")
    return m


def covariance_from_variances(T: ProbabilityOperator, padding: int = DEFAULT_PADDING) -> np.ndarray:
    """``Q`` with ``<Qz, z> = sigma2(mu_z)``, recovered by polarization."""
    n = 2 * T.d
    e = np.eye(n)
    diag = np.array([sigma2(spectral_measure(T, e[j], padding)) for j in range(n)])
    Q = np.diag(diag)
    for j in range(n):
        for k in range(j + 1, n):
            s = sigma2(spectral_measure(T, e[j] + e[k], padding))
            Q[j, k] = Q[k, j] = 0.5 * (s - diag[j] - diag[k])
    return Q


def component_decomposition(z) -> list[np.ndarray]:
    """Split ``z`` into per-mode pieces ``(x_k, y_k)`` padded with zeros."""
    z = as_phase(z)
    d = z.shape[-1] // 2
    parts = []
    for k in range(d):
        part = np.zeros_like(z)
        part[..., 2 * k:2 * k + 2] = z[..., 2 * k:2 * k + 2]
        parts.append(part)
    return parts


def _plain_matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # fixed-order product without BLAS: blocked/FMA kernels can reorder the
    # complex products and leave 1e-16 residue where the exact commutator is 0
    return np.einsum("ij,jk->ik", A, B, optimize=False)


def commuting_family_check(space: FockSpace, z) -> tuple[float, float]:
    """Max commutator norm among the ``R`` of the mode components of ``z``,
    and the residual of ``R(z) = sum_k R(z_k)``."""
    parts = component_decomposition(as_phase(z, space.d))
    Rs = [canonical_observable(space, p) for p in parts]
    worst = 0.0
    for j in range(len(Rs)):
        for k in range(j + 1, len(Rs)):
            comm = _plain_matmul(Rs[j], Rs[k]) - _plain_matmul(Rs[k], Rs[j])
            worst = max(worst, float(np.abs(comm).max()))
    additivity = float(np.abs(canonical_observable(space, z) - sum(Rs)).max())
    return worst, additivity


def moment_inequality_check(T: ProbabilityOperator, z, padding: int = DEFAULT_PADDING):
    """Compare ``m2(mu_z)`` with ``d * sum_k m2(mu_{z_k})``.

    Returns ``(lhs, rhs, passed)``.
    """
    z = as_phase(z, T.d)
    lhs = m2(spectral_measure(T, z, padding))
    rhs = T.d * sum(m2(spectral_measure(T, p, padding)) for p in component_decomposition(z))
    return lhs, rhs, bool(lhs <= rhs + 1e-8 * (1 + rhs))
