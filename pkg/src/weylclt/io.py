"""JSON/CSV file formats read and written by the command-line tools."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .charfn import CharFn, Gaussian, OperatorBacked
from .clt import ClassicalMeasure
from .fock import FockSpace, ProbabilityOperator, make_state
from .symplectic import NormingSequence


class SpecError(ValueError):
    """Malformed input file."""


def load_json(path) -> object:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SpecError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc})") from None


def _complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise SpecError(f"complex numbers are [re, im] pairs, got {value}")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def parse_matrix(rows) -> np.ndarray:
    """Row-major nested ``[re, im]`` pairs (plain reals also accepted)."""
    try:
        return np.array([[_complex(v) for v in row] for row in rows], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"bad matrix: {exc}") from None


def matrix_to_json(M: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(M, dtype=complex)]


def state_from_spec(spec: dict, cutoff: int | None = None) -> ProbabilityOperator:
    """``{"d": int, "cutoff": int, "state": {"kind": ..., params}}``."""
    try:
        d = int(spec["d"])
        N = int(cutoff if cutoff is not None else spec["cutoff"])
        params = dict(spec["state"])
        kind = params.pop("kind")
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"state spec needs d, cutoff and state.kind ({exc})") from None
    space = FockSpace(d, N)
    if "alpha" in params:
        a = params["alpha"]
        params["alpha"] = [_complex(x) for x in a] if isinstance(a, list) and a and isinstance(a[0], list) \
            else _complex(a)
    if "matrix" in params:
        params["matrix"] = parse_matrix(params["matrix"])
    return make_state(space, kind, **params)


def charfn_from_spec(spec: dict, cutoff: int | None = None, method: str = "exact") -> CharFn:
    """A state spec, or ``{"d": int, "charfn": {"kind": "gaussian", "Q": ..., "z0": ...}}``."""
    if "charfn" in spec:
        cf = spec["charfn"]
        if cf.get("kind", "gaussian") != "gaussian":
            raise SpecError(f"unsupported charfn kind {cf.get('kind')!r}")
        if "Q" in cf:
            f = Gaussian(np.asarray(cf["Q"], dtype=float), cf.get("z0"))
        elif "a" in cf:
            f = Gaussian.isotropic(int(spec["d"]), float(cf["a"]))
        else:
            raise SpecError("gaussian charfn needs Q or a")
        if "d" in spec and f.d != int(spec["d"]):
            raise SpecError("charfn dimension does not match d")
        return f
    return OperatorBacked(state_from_spec(spec, cutoff), method=method)


def covariance_from_json(data) -> np.ndarray:
    Q = data["Q"] if isinstance(data, dict) else data
    try:
        Q = np.asarray(Q, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"bad covariance: {exc}") from None
    if Q.ndim != 2:
        raise SpecError("covariance must be a 2-D array")
    return Q


def points_from_json(data, d: int) -> np.ndarray:
    pts = data["points"] if isinstance(data, dict) else data
    try:
        pts = np.asarray(pts, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"bad points: {exc}") from None
    if pts.size == 0:
        raise SpecError("point list is empty")
    if pts.ndim != 2 or pts.shape[1] != 2 * d:
        raise SpecError(f"points must be a list of length-{2 * d} coordinate arrays")
    return pts


def norming_from_spec(text: str, d: int) -> NormingSequence:
    """``sqrt``, ``power:<p>[:<scale>]`` or a JSON file with ``entries`` or ``rule``."""
    if text == "sqrt":
        return NormingSequence.sqrt(d)
    if text.startswith("power:"):
        parts = text.split(":")[1:]
        try:
            p = float(parts[0])
            c = float(parts[1]) if len(parts) > 1 else 1.0
        except (IndexError, ValueError):
            raise SpecError(f"bad norming rule {text!r}") from None
        return NormingSequence.power(d, p, c)
    data = load_json(text)
    if "entries" in data:
        return NormingSequence.from_table({int(k): v for k, v in data["entries"].items()}, d)
    rule = data.get("rule", "sqrt")
    if rule == "sqrt":
        return NormingSequence.sqrt(d)
    if rule == "power":
        return NormingSequence.power(d, float(data.get("exponent", 0.5)), float(data.get("scale", 1.0)))
    raise SpecError(f"unknown norming rule {rule!r}")


def measure_from_spec(spec: dict) -> ClassicalMeasure:
    spec = dict(spec)
    try:
        family = spec.pop("family")
    except KeyError:
        raise SpecError("measure spec needs a family") from None
    try:
        return ClassicalMeasure(family, spec)
    except ValueError as exc:
        raise SpecError(str(exc)) from None
