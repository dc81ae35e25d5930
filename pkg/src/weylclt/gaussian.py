"""Covariance admissibility for Gaussian probability operators.

A real symmetric ``Q`` is the covariance of a Gaussian probability operator
iff ``<Qz,z> + <Qz',z'> >= Delta(z,z')`` for all ``z, z'``. With
``w = z + i z'`` the left side minus the right side is ``w^+ (Q + iJ/2) w``,
so the condition is that the Hermitian matrix ``Q + iJ/2`` is positive
semidefinite. :func:`cm_sample_check` tests the inequality directly.
"""
from __future__ import annotations

import numpy as np

from .symplectic import delta, symplectic_matrix

ADMISSIBLE_TOL = 1e-10
SYMMETRY_TOL = 1e-12
SINGULAR_TOL = 1e-10


def _as_covariance(Q) -> np.ndarray:
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] % 2:
        raise ValueError(f"covariance must be a 2d x 2d matrix, got shape {Q.shape}")
    if not np.all(np.isfinite(Q)):
        raise ValueError("covariance has non-finite entries")
    asym = float(np.abs(Q - Q.T).max())
    if asym > SYMMETRY_TOL:
        raise ValueError(f"covariance is not symmetric (max asymmetry {asym:.3g})")
    return Q


def covariance_admissible(Q) -> tuple[float, bool]:
    """Minimum eigenvalue of ``Q + iJ/2`` and whether it is ``>= -1e-10``."""
    Q = _as_covariance(Q)
    H = Q + 0.5j * symplectic_matrix(Q.shape[0] // 2)
    lam = float(np.linalg.eigvalsh(H)[0])
    return lam, lam >= -ADMISSIBLE_TOL


def eigen_witness(Q) -> tuple[np.ndarray, np.ndarray] | None:
    """A pair ``(z, z')`` violating the inequality, read off the bottom eigenvector."""
    Q = _as_covariance(Q)
    H = Q + 0.5j * symplectic_matrix(Q.shape[0] // 2)
    lam, vecs = np.linalg.eigh(H)
    if lam[0] >= -ADMISSIBLE_TOL:
        return None
    w = vecs[:, 0]
    return w.real.copy(), w.imag.copy()


def cm_form(Q, z, z2) -> np.ndarray:
    """``<Qz,z> + <Qz',z'> - Delta(z,z')``, broadcasting over leading axes."""
    Q = np.asarray(Q, dtype=float)
    z = np.asarray(z, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    quad = np.einsum("...i,ij,...j->...", z, Q, z) + np.einsum("...i,ij,...j->...", z2, Q, z2)
    return quad - delta(z, z2)


def cm_sample_check(Q, trials: int = 10_000, seed: int = 0, return_witness: bool = False):
    """Smallest sampled value of ``<Qz,z> + <Qz',z'> - Delta(z,z')``.

    Samples ``(z, z')`` uniformly on the unit sphere of R^{4d}, adds for each
    mode the structured pairs ``x'_k = -x_k, y'_k = y_k`` (other coordinates
    zero), then polishes the worst sample by a seeded random local search.
    A negative value certifies inadmissibility.
    """
    Q = _as_covariance(Q)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = Q.shape[0]
    d = n // 2
    rng = np.random.default_rng(seed)

    pairs = rng.standard_normal((trials, 2 * n))
    pairs /= np.linalg.norm(pairs, axis=1, keepdims=True)
    z, z2 = pairs[:, :n], pairs[:, n:]

    theta = rng.uniform(0, 2 * np.pi, size=max(trials // 10, 16))
    structured = []
    for k in range(d):
        s = np.zeros((theta.size, n))
        s2 = np.zeros((theta.size, n))
        x, y = np.cos(theta), np.sin(theta)
        s[:, 2 * k], s[:, 2 * k + 1] = x, y
        s2[:, 2 * k], s2[:, 2 * k + 1] = -x, y
        structured.append((s, s2))
    z = np.concatenate([z] + [s for s, _ in structured])
    z2 = np.concatenate([z2] + [s2 for _, s2 in structured])
    norm = np.sqrt((z ** 2).sum(1) + (z2 ** 2).sum(1))
    z, z2 = z / norm[:, None], z2 / norm[:, None]

    vals = cm_form(Q, z, z2)
    i = int(np.argmin(vals))
    best, bz, bz2 = float(vals[i]), z[i], z2[i]

    step = 0.3
    for _ in range(400):
        cand = np.concatenate([bz, bz2]) + step * rng.standard_normal((32, 2 * n))
        cand /= np.linalg.norm(cand, axis=1, keepdims=True)
        cvals = cm_form(Q, cand[:, :n], cand[:, n:])
        j = int(np.argmin(cvals))
        if cvals[j] < best:
            best, bz, bz2 = float(cvals[j]), cand[j, :n], cand[j, n:]
        else:
            step *= 0.9
        if step < 1e-6:
            break
    if return_witness:
        return best, (bz, bz2)
    return best


def isotropic_matrix(a: float) -> np.ndarray:
    """The 4x4 matrix of the quadratic form ``a(x^2+y^2+x'^2+y'^2) - x y' + y x'``."""
    return np.array([[a, 0, 0, -0.5],
                     [0, a, 0.5, 0],
                     [0, 0.5, a, 0],
                     [-0.5, 0, 0, a]], dtype=float)


def isotropic_spectrum(a: float) -> np.ndarray:
    """Sorted eigenvalues of :func:`isotropic_matrix`; equal to ``a -/+ 1/2`` twice."""
    if not a > 0:
        raise ValueError("a must be positive")
    return np.linalg.eigvalsh(isotropic_matrix(a))


def check_nonsingular(Q) -> tuple[bool, float]:
    """Whether ``Q`` is nonsingular, and its smallest singular value.

    Admissible covariances are always nonsingular; this raises if the two
    checks ever disagree.
    """
    Q = _as_covariance(Q)
    smin = float(np.linalg.svd(Q, compute_uv=False)[-1])
    nonsingular = smin > SINGULAR_TOL
    if covariance_admissible(Q)[1] and not nonsingular:
        raise AssertionError(f"admissible covariance with smallest singular value {smin:.3g}")
    return nonsingular, smin


def admissibility_report(Q, trials: int = 10_000, seed: int = 0) -> dict:
    """JSON-ready verdict ``{admissible, min_eigenvalue, witness?}``.

    The witness pair comes from the sampled check when it finds a violation,
    otherwise from the bottom eigenvector of ``Q + iJ/2``.
    """
    lam, ok = covariance_admissible(Q)
    out = {"admissible": ok, "min_eigenvalue": lam}
    if not ok:
        worst, (z, z2) = cm_sample_check(Q, trials, seed, return_witness=True)
        source = "sampled"
        if worst >= 0:
            z, z2 = eigen_witness(Q)
            source = "eigenvector"
        out["witness"] = {"z": z.tolist(), "z_prime": z2.tolist(),
                          "value": float(cm_form(Q, z, z2)), "source": source}
    return out
