"""Truncated d-mode Fock space: mode operators, canonical observables,
Weyl operators and validated probability operators (density matrices).

Conventions: ``a = (q + i p)/sqrt(2)``, so ``q = (a + a^+)/sqrt(2)``,
``p = -i (a - a^+)/sqrt(2)`` and ``[p, q] = -i``. The Weyl operator of
``z = (x_1, y_1, ...)`` is ``V(z) = exp(i sum_k (x_k p_k + y_k q_k))``,
which for one mode is the displacement ``D(alpha)`` with
``alpha = (-x + i y)/sqrt(2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .symplectic import as_phase

MAX_DIM = 4096

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10


class InvalidStateError(ValueError):
    """Raised when a matrix is not a probability operator."""

    def __init__(self, report: "ValidationReport"):
        super().__init__("; ".join(report.failures))
        self.report = report


@dataclass(frozen=True)
class FockSpace:
    """``d`` modes, each truncated to the number states ``|0>, ..., |cutoff-1>``."""

    d: int
    cutoff: int
    max_dim: int = MAX_DIM

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"need at least one mode, got d={self.d}")
        if self.cutoff < 2:
            raise ValueError(f"cutoff must be >= 2, got {self.cutoff}")
        if self.dim > self.max_dim:
            raise ValueError(f"dimension {self.cutoff}^{self.d} = {self.dim} exceeds cap {self.max_dim}")

    @property
    def dim(self) -> int:
        return self.cutoff ** self.d

    def padded(self, extra: int) -> "FockSpace":
        return FockSpace(self.d, self.cutoff + extra, max(self.max_dim, (self.cutoff + extra) ** self.d))


def destroy(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)


def _embed_mode(space: FockSpace, op: np.ndarray, k: int) -> np.ndarray:
    eye = np.eye(space.cutoff, dtype=complex)
    return reduce(np.kron, [op if j == k else eye for j in range(space.d)])


def mode_operators(space: FockSpace, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Momentum and position ``(p_k, q_k)`` of mode ``k`` (1-based).

    On one mode ``[p, q] = -i`` holds on the span of ``|0>, ..., |N-2>``;
    only the last diagonal entry is spoiled by the truncation.
    """
    if not 1 <= k <= space.d:
        raise IndexError(f"mode index {k} outside 1..{space.d}")
    a = destroy(space.cutoff)
    ad = a.conj().T
    q = (a + ad) / math.sqrt(2)
    p = -1j * (a - ad) / math.sqrt(2)
    return _embed_mode(space, p, k - 1), _embed_mode(space, q, k - 1)


def canonical_observable(space: FockSpace, z) -> np.ndarray:
    """``R(z) = sum_k (x_k p_k + y_k q_k)``."""
    z = as_phase(z, space.d)
    R = np.zeros((space.dim, space.dim), dtype=complex)
    for k in range(space.d):
        x, y = z[2 * k], z[2 * k + 1]
        if x == 0 and y == 0:
            continue
        p, q = mode_operators(space, k + 1)
        R += x * p + y * q
    return R


def weyl_operator(space: FockSpace, z) -> np.ndarray:
    """``V(z) = exp(i R(z))`` through the eigendecomposition of ``R(z)``.

    Exactly unitary up to rounding. The Weyl relation only holds away from
    the top of the truncated ladder.
    """
    R = canonical_observable(space, z)
    w, U = np.linalg.eigh(R)
    return (U * np.exp(1j * w)) @ U.conj().T


def weyl_residual(space: FockSpace, z, z2, block: int | None = None) -> float:
    """Max-norm defect of ``V(z)V(z') = e^{i Delta/2} V(z+z')``.

    With ``block`` set, only number states below ``block`` in every mode are
    compared (the part of the matrix unaffected by truncation at large cutoff).
    """
    from .symplectic import delta

    z = as_phase(z, space.d)
    z2 = as_phase(z2, space.d)
    lhs = weyl_operator(space, z) @ weyl_operator(space, z2)
    rhs = np.exp(0.5j * delta(z, z2)) * weyl_operator(space, z + z2)
    diff = lhs - rhs
    if block is not None:
        idx = low_block_indices(space, block)
        diff = diff[np.ix_(idx, idx)]
    return float(np.abs(diff).max())


def low_block_indices(space: FockSpace, block: int) -> np.ndarray:
    """Flat indices of basis states with every occupation below ``block``."""
    occ = np.indices((space.cutoff,) * space.d).reshape(space.d, -1)
    return np.flatnonzero(np.all(occ < block, axis=0))


def phase_to_alpha(z) -> np.ndarray:
    """Per-mode displacement amplitudes ``alpha_k = (-x_k + i y_k)/sqrt(2)``."""
    z = as_phase(z)
    return (-z[..., 0::2] + 1j * z[..., 1::2]) / math.sqrt(2)


def displacement_polynomial(cutoff: int, alpha) -> np.ndarray:
    """Polynomial part of the exact single-mode displacement matrix elements.

    Returns ``P`` with ``<m|D(alpha)|n> = exp(-|alpha|^2/2) P[..., m, n]`` for
    ``m, n < cutoff``. These are the matrix elements of the untruncated
    operator, so a state supported on the first ``cutoff`` levels gets its
    exact characteristic function.
    """
    alpha = np.asarray(alpha, dtype=complex)[..., None, None]
    m, n = np.indices((cutoff, cutoff))
    lo, hi = np.minimum(m, n), np.maximum(m, n)
    k = hi - lo
    coef = np.exp(0.5 * (gammaln(lo + 1) - gammaln(hi + 1)))
    base = np.where(m >= n, alpha, -np.conj(alpha))
    lag = eval_genlaguerre(lo, k, np.abs(alpha) ** 2)
    return coef * base ** k * lag


def displacement_matrix(cutoff: int, alpha) -> np.ndarray:
    """Exact ``<m|D(alpha)|n>`` block for ``m, n < cutoff``."""
    alpha = np.asarray(alpha, dtype=complex)
    return np.exp(-0.5 * np.abs(alpha) ** 2)[..., None, None] * displacement_polynomial(cutoff, alpha)


@dataclass(frozen=True)
class ValidationReport:
    hermitian_defect: float
    min_eigenvalue: float
    trace_defect: float
    failures: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.failures


def validate(matrix, space: FockSpace | None = None) -> ValidationReport:
    """Check the three probability-operator invariants and report margins."""
    M = np.asarray(matrix, dtype=complex)
    failures = []
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if space is not None and M.shape[0] != space.dim:
        raise ValueError(f"matrix dimension {M.shape[0]} does not match space dimension {space.dim}")
    herm = float(np.abs(M - M.conj().T).max())
    if herm > HERMITIAN_TOL:
        failures.append(f"not Hermitian: max |M - M^+| = {herm:.3g}")
    min_eig = float(np.linalg.eigvalsh(0.5 * (M + M.conj().T))[0])
    if min_eig < -PSD_TOL:
        failures.append(f"not positive semidefinite: min eigenvalue {min_eig:.6g} (margin {-min_eig:.6g})")
    tr_def = float(abs(np.trace(M) - 1.0))
    if tr_def > TRACE_TOL:
        failures.append(f"trace off by {tr_def:.3g}")
    return ValidationReport(herm, min_eig, tr_def, tuple(failures))


@dataclass(frozen=True, eq=False)
class ProbabilityOperator:
    """A validated density matrix on a truncated Fock space."""

    matrix: np.ndarray
    space: FockSpace

    def __post_init__(self):
        M = np.array(self.matrix, dtype=complex)
        report = validate(M, self.space)
        if not report.ok:
            raise InvalidStateError(report)
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def d(self) -> int:
        return self.space.d

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ op))

    def embed(self, cutoff: int) -> "ProbabilityOperator":
        """Same state on a larger cutoff (zero amplitude on the new levels)."""
        if cutoff < self.space.cutoff:
            raise ValueError("embedding can only enlarge the cutoff")
        if cutoff == self.space.cutoff:
            return self
        big = self.space.padded(cutoff - self.space.cutoff)
        return ProbabilityOperator(embed_matrix(self.matrix, self.space, cutoff), big)


def embed_matrix(M: np.ndarray, space: FockSpace, cutoff: int) -> np.ndarray:
    d, N = space.d, space.cutoff
    t = np.asarray(M).reshape((N,) * (2 * d))
    t = np.pad(t, [(0, cutoff - N)] * (2 * d))
    return t.reshape(cutoff ** d, cutoff ** d)


def _per_mode(value, d: int, name: str) -> list:
    if np.ndim(value) == 0:
        return [value] * d
    value = list(value)
    if len(value) != d:
        raise ValueError(f"{name} needs {d} entries, got {len(value)}")
    return value


def _coherent_vector(cutoff: int, beta: complex) -> np.ndarray:
    v = np.zeros(cutoff, dtype=complex)
    if beta == 0:
        v[0] = 1
        return v
    n = np.arange(cutoff)
    v = np.exp(n * np.log(abs(beta)) - 0.5 * gammaln(n + 1) + 1j * n * np.angle(beta))
    return v / np.linalg.norm(v)


def make_state(space: FockSpace, kind: str, **params) -> ProbabilityOperator:
    """Build a test state.

    ``kind`` is one of ``vacuum``, ``number`` (``n``), ``coherent``
    (``alpha`` or mean vector ``z0``), ``thermal`` (``nbar``), ``ginibre``
    (``seed``) and ``explicit`` (``matrix``). Scalar parameters are applied to
    every mode. Coherent and thermal states are truncated and renormalized;
    explicit matrices are validated, never repaired.
    """
    d, N = space.d, space.cutoff
    kind = kind.lower()
    if kind == "vacuum":
        M = np.zeros((space.dim, space.dim), dtype=complex)
        M[0, 0] = 1
        return ProbabilityOperator(M, space)
    if kind == "number":
        ns = [int(n) for n in _per_mode(params.get("n", 0), d, "n")]
        for n in ns:
            if not 0 <= n < N:
                raise ValueError(f"number state n={n} outside 0..{N - 1}")
        vecs = []
        for n in ns:
            v = np.zeros(N, dtype=complex)
            v[n] = 1
            vecs.append(v)
        return _pure(space, vecs)
    if kind == "coherent":
        if "z0" in params:
            z0 = as_phase(params["z0"], d)
            # mean (<p_k>, <q_k>) = (x0_k, y0_k) requires beta_k = (y0_k + i x0_k)/sqrt(2)
            betas = [(z0[2 * k + 1] + 1j * z0[2 * k]) / math.sqrt(2) for k in range(d)]
        else:
            betas = [complex(b) for b in _per_mode(params.get("alpha", 0), d, "alpha")]
        return _pure(space, [_coherent_vector(N, b) for b in betas])
    if kind == "thermal":
        nbars = [float(x) for x in _per_mode(params.get("nbar", 1.0), d, "nbar")]
        diags = []
        for nbar in nbars:
            if not nbar > 0:
                raise ValueError(f"thermal occupation must be positive, got {nbar}")
            w = (nbar / (nbar + 1)) ** np.arange(N)
            diags.append(w / w.sum())
        return ProbabilityOperator(np.diag(reduce(np.kron, diags)).astype(complex), space)
    if kind in ("ginibre", "ginibre_random"):
        rng = np.random.default_rng(params.get("seed", 0))
        G = rng.standard_normal((space.dim, space.dim)) + 1j * rng.standard_normal((space.dim, space.dim))
        M = G @ G.conj().T
        M = 0.5 * (M + M.conj().T)
        return ProbabilityOperator(M / np.trace(M).real, space)
    if kind == "explicit":
        if "matrix" not in params:
            raise ValueError("explicit state needs a matrix")
        return ProbabilityOperator(np.asarray(params["matrix"], dtype=complex), space)
    raise ValueError(f"unknown state kind {kind!r}")


def _pure(space: FockSpace, vecs: list[np.ndarray]) -> ProbabilityOperator:
    psi = reduce(np.kron, vecs)
    psi = psi / np.linalg.norm(psi)
    M = np.outer(psi, psi.conj())
    return ProbabilityOperator(0.5 * (M + M.conj().T), space)
