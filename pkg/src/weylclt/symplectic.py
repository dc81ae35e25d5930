"""Phase-space primitives.

Points of phase space are stored with interleaved coordinates
``(x_1, y_1, ..., x_d, y_d)``. Every other module relies on this ordering.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class PhaseVector:
    """A point ``z`` of the phase space R^{2d}."""

    coords: tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if len(coords) == 0 or len(coords) % 2:
            raise ValueError(f"phase vector needs an even, nonzero length, got {len(coords)}")
        if not all(math.isfinite(c) for c in coords):
            raise ValueError("phase vector coordinates must be finite")
        object.__setattr__(self, "coords", coords)

    @property
    def d(self) -> int:
        return len(self.coords) // 2

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype or float)

    def __len__(self):
        return len(self.coords)


def as_phase(z, d: int | None = None) -> np.ndarray:
    """Coerce ``z`` to a float array whose last axis has length 2d.

    Leading axes are kept so batches of points pass through unchanged.
    """
    arr = np.asarray(z, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] == 0 or arr.shape[-1] % 2:
        raise ValueError(f"phase vectors need an even last axis, got shape {arr.shape}")
    if d is not None and arr.shape[-1] != 2 * d:
        raise ValueError(f"dimension mismatch: expected 2d={2 * d}, got {arr.shape[-1]}")
    return arr


def delta(z, z2) -> float | np.ndarray:
    """Symplectic form ``sum_k (x_k y'_k - y_k x'_k)``.

    Broadcasts over leading axes of ``z`` and ``z2``.
    """
    z = as_phase(z)
    z2 = as_phase(z2)
    if z.shape[-1] != z2.shape[-1]:
        raise ValueError(f"dimension mismatch: {z.shape[-1]} vs {z2.shape[-1]}")
    out = np.sum(z[..., 0::2] * z2[..., 1::2] - z[..., 1::2] * z2[..., 0::2], axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def symplectic_matrix(d: int) -> np.ndarray:
    """Return J with ``z @ J @ z2 == delta(z, z2)``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return np.kron(np.eye(d), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def apply_norming(a, z) -> np.ndarray:
    """Scale the k-th coordinate pair of ``z`` by ``a[k]``."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    z = as_phase(z, d=a.size)
    if np.any(~(a > 0)):
        raise ValueError(f"norming entries must be strictly positive, got {a}")
    return z * np.repeat(a, 2)


class NormingSequence:
    """Diagonal norming matrices ``A_n = diag(a_1, a_1, ..., a_d, a_d)``.

    Parameters
    ----------
    rule : callable
        Maps ``n >= 1`` to the length-d vector ``(a_1^(n), ..., a_d^(n))``.
    d : int
        Number of modes.
    name : str
        Label used in reports.
    """

    def __init__(self, rule: Callable[[int], Sequence[float]], d: int, name: str = "custom",
                 batch_rule: Callable[[np.ndarray], np.ndarray] | None = None):
        self._rule = rule
        self._batch_rule = batch_rule
        self.d = d
        self.name = name

    def __call__(self, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        a = np.atleast_1d(np.asarray(self._rule(n), dtype=float))
        if a.size == 1 and self.d > 1:
            a = np.full(self.d, a[0])
        if a.size != self.d:
            raise ValueError(f"norming rule returned {a.size} entries for d={self.d}")
        if np.any(~(a > 0)):
            raise ValueError(f"norming entries must be strictly positive (n={n}: {a})")
        return a

    def batch(self, ns: np.ndarray) -> np.ndarray:
        """Entries for many ``n`` at once, shape ``(len(ns), d)``."""
        ns = np.asarray(ns, dtype=np.int64)
        if self._batch_rule is None:
            return np.array([self(int(n)) for n in ns]).reshape(len(ns), self.d)
        return np.broadcast_to(self._batch_rule(ns).reshape(len(ns), -1), (len(ns), self.d))

    @classmethod
    def power(cls, d: int, exponent: float = 0.5, scale: float = 1.0) -> "NormingSequence":
        """``a_k^(n) = scale * n**(-exponent)`` for every mode."""
        if exponent == 0.5:
            # same expression as the bound in check_admissibility_bound, so 1/sqrt(n) is not flagged
            def batch(ns):
                return scale / np.sqrt(ns.astype(float))
        else:
            def batch(ns):
                return scale * ns.astype(float) ** -exponent
        name = "sqrt" if (exponent, scale) == (0.5, 1.0) else f"{scale}*n^-{exponent}"
        return cls(lambda n: np.full(d, batch(np.array([n]))[0]), d, name, batch_rule=batch)

    @classmethod
    def sqrt(cls, d: int) -> "NormingSequence":
        return cls.power(d, 0.5)

    @classmethod
    def from_table(cls, table: dict[int, Sequence[float]], d: int) -> "NormingSequence":
        """Norming given explicitly for a finite set of ``n``."""
        table = {int(k): list(v) for k, v in table.items()}

        def rule(n):
            try:
                return table[n]
            except KeyError:
                raise KeyError(f"norming table has no entry for n={n}") from None

        seq = cls(rule, d, "table")
        seq.defined_n = sorted(table)
        return seq


def check_admissibility_bound(seq: NormingSequence, n_max: int,
                              n_values: Iterable[int] | None = None) -> list[tuple[int, int, float]]:
    """List every ``(n, k, a_k^(n))`` with ``a_k^(n) < 1/sqrt(n)``.

    Admissible norming must satisfy ``a_k^(n) >= 1/sqrt(n)``; an empty result
    means this necessary condition holds on the checked range. Indices ``k``
    are 1-based. The comparison is strict with no tolerance.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if n_values is None:
        n_values = getattr(seq, "defined_n", None) or range(1, n_max + 1)
    if isinstance(n_values, range):
        ns = np.arange(max(n_values.start, 1), min(n_values.stop, n_max + 1), dtype=np.int64)
    else:
        ns = np.fromiter(n_values, dtype=np.int64)
        ns = ns[(ns >= 1) & (ns <= n_max)]
    entries = seq.batch(ns)
    if np.any(~(entries > 0)):
        raise ValueError("norming entries must be strictly positive")
    bound = 1.0 / np.sqrt(ns.astype(float))
    rows, cols = np.nonzero(entries < bound[:, None])
    return list(zip(ns[rows].tolist(), (cols + 1).tolist(), entries[rows, cols].tolist()))
