"""Central limit scheme for characteristic functions on phase space, and the
classical domain-of-attraction diagnostics.

Powers ``f(A_n z)**n`` are formed as ``exp(n * log f(A_n z))`` with the
principal logarithm. For integer ``n`` the choice of branch cannot matter:
different branches shift ``n log f`` by multiples of ``2 pi i``. A value
``f = 0`` gives ``log f = -inf`` and the power underflows to exactly 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .charfn import CharFn, Gaussian, GridSpec, OperatorBacked, delta_pd_check
from .fock import ProbabilityOperator
from .gaussian import covariance_admissible
from .moments import covariance_from_variances, mean_vector
from .symplectic import NormingSequence, apply_norming, as_phase, check_admissibility_bound

DEFAULT_THRESHOLD = 0.05
FIXED_POINT_TOL = 1e-10


class InadmissibleLimitError(ArithmeticError):
    """Recovered limit covariance fails the admissibility test."""


def _charfn(T) -> CharFn:
    return T if isinstance(T, CharFn) else OperatorBacked(T)


def centering_sequence(T: ProbabilityOperator, n: int, mean: np.ndarray | None = None) -> np.ndarray:
    """``z_n = -sqrt(n) m``, which cancels the mean under ``1/sqrt(n)`` norming."""
    m = mean_vector(T) if mean is None else np.asarray(mean, dtype=float)
    return -math.sqrt(n) * m


def s_n_char(T, a, z_n, z, n: int):
    """``exp(i <z_n, z>) f(A_n z)**n`` for ``f`` the characteristic function of ``T``.

    ``T`` may be a probability operator or any :class:`CharFn`; ``z`` may be a
    batch of points.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    f = _charfn(T)
    z = as_phase(z, f.d)
    zn = as_phase(z_n, f.d)
    with np.errstate(invalid="ignore", over="ignore"):
        log = 1j * (z @ zn) + n * f.log_evaluate(apply_norming(a, z))
        out = np.exp(log)
    out = np.where(np.isneginf(log.real), 0.0, out)
    return complex(out) if np.ndim(out) == 0 else out


def gaussian_limit_target(T: ProbabilityOperator) -> Gaussian:
    """Centered Gaussian ``exp(-<Qz,z>/2)`` whose ``Q`` reproduces the variances of ``T``."""
    Q = covariance_from_variances(T)
    lam, ok = covariance_admissible(Q)
    if not ok:
        raise InadmissibleLimitError(f"recovered covariance is not admissible (min eigenvalue {lam:.3g})")
    return Gaussian(Q)


def effective_covariance(f: CharFn) -> np.ndarray:
    """Polarized ``Q`` from ``-2 log|f|`` at ``e_j`` and ``e_j + e_k``.

    Exact when ``|f(z)| = exp(-<Qz,z>/2)``; otherwise a Gaussian fit at unit scale.
    """
    n = 2 * f.d
    e = np.eye(n)
    with np.errstate(divide="ignore"):
        v = lambda z: float(-2 * f.log_evaluate(z).real)
        diag = np.array([v(e[j]) for j in range(n)])
        Q = np.diag(diag)
        for j in range(n):
            for k in range(j + 1, n):
                Q[j, k] = Q[k, j] = 0.5 * (v(e[j] + e[k]) - diag[j] - diag[k])
    return Q


class _SnFunction(CharFn):
    def __init__(self, f, a, z_n, n):
        self.f, self.a, self.z_n, self.n, self.d = f, a, z_n, n, f.d

    def log_evaluate(self, points):
        z = as_phase(points, self.d)
        return 1j * (z @ self.z_n) + self.n * self.f.log_evaluate(apply_norming(self.a, z))


@dataclass
class CLTRun:
    T: ProbabilityOperator
    norming: NormingSequence
    grid: GridSpec
    n_list: Sequence[int]
    threshold: float = DEFAULT_THRESHOLD
    center: bool = True

    def __post_init__(self):
        self.n_list = [int(n) for n in self.n_list]
        if not self.n_list:
            raise ValueError("n_list is empty")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])) or self.n_list[0] < 1:
            raise ValueError("n_list must be increasing positive integers")
        if self.grid.d != self.T.d or self.norming.d != self.T.d:
            raise ValueError("dimension mismatch between state, grid and norming")


@dataclass
class CLTReport:
    n_list: list[int]
    sup_errors: list[float]
    underflow_points: list[int]
    target_Q: np.ndarray
    target_admissible: bool
    target_min_eigenvalue: float
    strictly_decreasing: bool
    passed: bool
    threshold: float
    grid: dict
    norming: str
    bound_violations: list[tuple[int, int, float]]
    limit_Q_estimate: np.ndarray
    limit_Q_min_eigenvalue: float
    degenerate_limit: bool
    limit_delta_pd_min_eigenvalue: float
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "errors": [{"n": n, "sup_error": e} for n, e in zip(self.n_list, self.sup_errors)],
            "underflow_points": self.underflow_points,
            "target_Q": self.target_Q.tolist(),
            "target_admissible": self.target_admissible,
            "target_min_eigenvalue": self.target_min_eigenvalue,
            "strictly_decreasing": self.strictly_decreasing,
            "passed": self.passed,
            "threshold": self.threshold,
            "grid": self.grid,
            "norming": self.norming,
            "bound_violations": [list(v) for v in self.bound_violations[:20]],
            "bound_violation_count": len(self.bound_violations),
            "limit_Q_estimate": self.limit_Q_estimate.tolist(),
            "limit_Q_min_eigenvalue": self.limit_Q_min_eigenvalue,
            "degenerate_limit": self.degenerate_limit,
            "limit_delta_pd_min_eigenvalue": self.limit_delta_pd_min_eigenvalue,
            "warnings": self.warnings,
        }


def clt_convergence_report(run: CLTRun) -> CLTReport:
    """Sup-grid distance between ``S_n`` and the Gaussian target for each ``n``.

    The run passes when the last error is below the threshold and either below
    the first error or already at the fixed-point floor (1e-10).
    """
    f = OperatorBacked(run.T)
    m = mean_vector(run.T) if run.center else np.zeros(2 * run.T.d)
    target = gaussian_limit_target(run.T)
    lam_t, ok_t = covariance_admissible(target.Q)
    pts = run.grid.points()
    if len(pts) == 0:
        raise ValueError("empty grid")
    want = target.evaluate(pts)

    errors, zeros = [], []
    for n in run.n_list:
        a = run.norming(n)
        z_n = -n * np.repeat(a, 2) * m
        got = s_n_char(f, a, z_n, pts, n)
        errors.append(float(np.abs(got - want).max()))
        zeros.append(int(np.count_nonzero(got == 0)))

    warnings = []
    violations = check_admissibility_bound(run.norming, max(run.n_list), run.n_list)
    if violations:
        warnings.append(f"norming violates a_k^(n) >= 1/sqrt(n) at {len(violations)} (n, k) pairs; "
                        "it cannot be admissible")

    n_max = run.n_list[-1]
    a_max = run.norming(n_max)
    last = _SnFunction(f, a_max, -n_max * np.repeat(a_max, 2) * m, n_max)
    Q_eff = effective_covariance(last)
    lam_eff, ok_eff = covariance_admissible(Q_eff)
    pd_min, _ = delta_pd_check(last, pts[:: max(1, len(pts) // 64)])
    degenerate = not ok_eff
    if degenerate:
        warnings.append(f"S_n at n={n_max} is close to a Gaussian with inadmissible covariance "
                        f"(min eigenvalue of Q + iJ/2 = {lam_eff:.3g}): degenerate or non-quantum limit")

    decreasing = all(b < a for a, b in zip(errors, errors[1:]))
    passed = errors[-1] < run.threshold and (errors[-1] < errors[0] or errors[-1] <= FIXED_POINT_TOL)
    return CLTReport(run.n_list, errors, zeros, target.Q, ok_t, lam_t, decreasing, passed,
                     run.threshold, run.grid.describe(), run.norming.name, violations,
                     Q_eff, lam_eff, degenerate, pd_min, warnings)


# ---------------------------------------------------------------- classical side


class InfiniteVarianceError(ValueError):
    """The measure has no second moment; use :func:`lemma_L_diagnostic` instead."""


@dataclass(frozen=True)
class ClassicalMeasure:
    """A probability measure on the line.

    ``family`` is ``rademacher``, ``uniform`` (on ``[-width, width]``),
    ``pareto`` (density ``alpha s^alpha / x^(alpha+1)`` on ``[s, inf)``),
    ``dirac`` (at ``loc``) or ``atoms`` (``values``/``weights``).
    """

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        fam = self.family.lower()
        object.__setattr__(self, "family", fam)
        p = self.params
        if fam == "uniform" and not p.get("width", 1.0) > 0:
            raise ValueError("uniform width must be positive")
        elif fam == "pareto":
            if not p.get("alpha", 0) > 0 or not p.get("scale", 1.0) > 0:
                raise ValueError("pareto needs alpha > 0 and scale > 0")
        elif fam == "atoms":
            w = np.asarray(p.get("weights", []), dtype=float)
            v = np.asarray(p.get("values", []), dtype=float)
            if w.size == 0 or w.shape != v.shape or np.any(w < 0) or abs(w.sum() - 1) > 1e-10:
                raise ValueError("atoms need matching values/weights with nonnegative weights summing to 1")
        elif fam not in ("rademacher", "uniform", "dirac"):
            raise ValueError(f"unknown family {self.family!r}")

    @property
    def finite_variance(self) -> bool:
        return self.family != "pareto" or self.params["alpha"] > 2

    def mean(self) -> float:
        fam, p = self.family, self.params
        if fam in ("rademacher", "uniform"):
            return 0.0
        if fam == "dirac":
            return float(p.get("loc", 0.0))
        if fam == "atoms":
            return float(np.dot(p["weights"], p["values"]))
        alpha, s = p["alpha"], p.get("scale", 1.0)
        return alpha * s / (alpha - 1) if alpha > 1 else math.inf

    def variance(self) -> float:
        fam, p = self.family, self.params
        if fam == "rademacher":
            return 1.0
        if fam == "uniform":
            return p.get("width", 1.0) ** 2 / 3
        if fam == "dirac":
            return 0.0
        if fam == "atoms":
            v, w = np.asarray(p["values"]), np.asarray(p["weights"])
            return float(w @ v ** 2 - (w @ v) ** 2)
        alpha, s = p["alpha"], p.get("scale", 1.0)
        if alpha <= 2:
            return math.inf
        return s ** 2 * alpha / ((alpha - 1) ** 2 * (alpha - 2))

    def charfn(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        fam, p = self.family, self.params
        if fam == "rademacher":
            return np.cos(t) + 0j
        if fam == "uniform":
            return np.sinc(p.get("width", 1.0) * t / np.pi) + 0j
        if fam == "dirac":
            return np.exp(1j * t * p.get("loc", 0.0))
        if fam == "atoms":
            return np.exp(1j * t[..., None] * np.asarray(p["values"])) @ np.asarray(p["weights"])
        alpha, s = p["alpha"], p.get("scale", 1.0)
        dens = lambda x: alpha * s ** alpha / x ** (alpha + 1)

        def one(tt):
            if tt == 0:
                return 1.0 + 0j
            re = integrate.quad(dens, s, np.inf, weight="cos", wvar=tt)[0]
            im = integrate.quad(dens, s, np.inf, weight="sin", wvar=tt)[0]
            return re + 1j * im

        return np.vectorize(one, otypes=[complex])(t)


def truncated_second_moment(nu: ClassicalMeasure, x: float) -> float:
    """``U(x)``: integral of ``lambda^2`` over ``|lambda| <= x``."""
    if not x > 0:
        raise ValueError("x must be positive")
    fam, p = nu.family, nu.params
    if fam == "rademacher":
        return 1.0 if x >= 1 else 0.0
    if fam == "uniform":
        w = p.get("width", 1.0)
        return min(x, w) ** 3 / (3 * w)
    if fam == "dirac":
        loc = p.get("loc", 0.0)
        return loc ** 2 if abs(loc) <= x else 0.0
    if fam == "atoms":
        v, w = np.asarray(p["values"]), np.asarray(p["weights"])
        keep = np.abs(v) <= x
        return float(w[keep] @ v[keep] ** 2)
    alpha, s = p["alpha"], p.get("scale", 1.0)
    if x < s:
        return 0.0
    if alpha == 2:
        return 2 * s ** 2 * math.log(x / s)
    return alpha * s ** alpha * (x ** (2 - alpha) - s ** (2 - alpha)) / (2 - alpha)


@dataclass(frozen=True)
class ScaleRule:
    """``b_n = scale * n**(-exponent)``; ``n b_n^2`` is evaluated without rounding loss."""

    exponent: float = 0.5
    scale: float = 1.0

    @classmethod
    def parse(cls, text: str) -> "ScaleRule":
        """``sqrt``, ``power:<p>`` or ``power:<p>:<scale>``."""
        if text == "sqrt":
            return cls()
        kind, *rest = text.split(":")
        if kind != "power" or not 1 <= len(rest) <= 2:
            raise ValueError(f"bad b-rule {text!r}; use sqrt or power:<p>[:<scale>]")
        return cls(float(rest[0]), float(rest[1]) if len(rest) == 2 else 1.0)

    def b(self, n: int) -> float:
        return self.scale * n ** -self.exponent

    def n_b2(self, n: int) -> float:
        return self.scale ** 2 * float(n) ** (1 - 2 * self.exponent)

    def inv(self, n: int) -> float:
        return float(n) ** self.exponent / self.scale


@dataclass
class LemmaLResult:
    n_list: list[int]
    values: list[float]
    regime: str
    hypothesis_holds: bool
    second_moment: float


def lemma_L_diagnostic(nu: ClassicalMeasure, rule: ScaleRule, x: float, n_list: Sequence[int],
                       stable_tol: float = 1e-6, growth_factor: float = 2.0) -> LemmaLResult:
    """The sequence ``n b_n^2 U(x / b_n)`` with a regime label.

    ``stabilized`` when the last two values agree to ``stable_tol`` (relative),
    ``diverging`` when the sequence is nondecreasing and grows by at least
    ``growth_factor`` over the range, else ``undetermined``.
    """
    n_list = [int(n) for n in n_list]
    vals = [rule.n_b2(n) * truncated_second_moment(nu, x * rule.inv(n)) for n in n_list]
    if len(vals) >= 2 and abs(vals[-1] - vals[-2]) <= stable_tol * max(1.0, abs(vals[-1])):
        regime = "stabilized"
    elif len(vals) >= 2 and all(b >= a for a, b in zip(vals, vals[1:])) and vals[-1] >= growth_factor * vals[0] > 0:
        regime = "diverging"
    else:
        regime = "undetermined"
    hyp = all(rule.n_b2(n) >= 1 for n in n_list)
    second = nu.variance() + nu.mean() ** 2 if nu.finite_variance else math.inf
    return LemmaLResult(n_list, vals, regime, hyp, second)


@dataclass
class ClassicalCLTResult:
    n_list: list[int]
    sup_errors: list[float]
    variance: float
    degenerate: bool


def classical_clt_check(nu: ClassicalMeasure, n_list: Sequence[int], t_grid) -> ClassicalCLTResult:
    """Sup over ``t_grid`` of ``|exp(-i t m sqrt(n)) nu^(t/sqrt(n))^n - exp(-sigma^2 t^2/2)|``."""
    if not nu.finite_variance:
        raise InfiniteVarianceError(f"{nu.family} with {nu.params} has infinite variance; "
                                    "use lemma_L_diagnostic")
    t = np.asarray(t_grid, dtype=float)
    m, s2 = nu.mean(), nu.variance()
    want = np.exp(-0.5 * s2 * t ** 2)
    errors = []
    for n in n_list:
        phi = nu.charfn(t / math.sqrt(n))
        with np.errstate(divide="ignore"):
            log = -1j * t * m * math.sqrt(n) + n * np.log(phi + 0j)
        got = np.where(phi == 0, 0.0, np.exp(log))
        errors.append(float(np.abs(got - want).max()))
    return ClassicalCLTResult(list(n_list), errors, s2, s2 == 0)
