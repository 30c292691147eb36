"""Plankton-oxygen system: parameters, state, linear part and nonlinearity.

The fractional system is ``d^alpha x = A x + f(x)`` with
``A = diag(-m, -sigma, -mu)`` and ``f`` collecting every saturating and
interaction term. Phytoplankton growth uses the logistic-type competition
bracket ``(B x1 / (x1 + c1) - gamma x2) x2``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import DomainError, InvariantViolation, SingularParameterError

__all__ = [
    "PARAM_NAMES",
    "NEGATIVE_SLACK",
    "ModelParams",
    "State",
    "LinearPart",
    "load_params",
    "rhs_nonlinear",
    "rhs_full",
    "one_norm_state",
]

#: Components down to this value are treated as roundoff, not as violations.
NEGATIVE_SLACK = -1e-12

PARAM_NAMES = (
    "c0", "c1", "c2", "c3", "c4", "h",
    "H", "delta", "v", "B", "beta_pred", "xi",
    "m", "sigma", "mu", "gamma",
)

# half-saturation constant -> coefficients that make it appear in a denominator
_DENOMINATOR_GUARDS = {
    "c0": ("H",),
    "c1": ("B",),
    "c2": ("delta",),
    "c3": ("v",),
    "c4": ("xi", "beta_pred"),
    "h": ("beta_pred",),
}


@dataclass(frozen=True)
class ModelParams:
    """The sixteen nonnegative model constants.

    ``beta_pred`` is the maximum predation rate, named to keep it apart from
    the fractional order.
    """

    c0: float
    c1: float
    c2: float
    c3: float
    c4: float
    h: float
    H: float
    delta: float
    v: float
    B: float
    beta_pred: float
    xi: float
    m: float
    sigma: float
    mu: float
    gamma: float

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, bool) or not isinstance(val, (int, float, np.floating, np.integer)):
                raise DomainError(f"parameter {f.name!r} must be a real number, got {val!r}")
            val = float(val)
            if not math.isfinite(val) or val < 0.0:
                raise DomainError(f"parameter {f.name!r} must be finite and nonnegative, got {val!r}")
            object.__setattr__(self, f.name, val)
        for const, coeffs in _DENOMINATOR_GUARDS.items():
            if getattr(self, const) == 0.0 and all(getattr(self, c) > 0.0 for c in coeffs):
                raise SingularParameterError(
                    f"half-saturation constant {const!r} must be positive when "
                    f"{' and '.join(coeffs)} {'is' if len(coeffs) == 1 else 'are'} positive",
                    name=const,
                )

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        """Build from a mapping holding exactly the sixteen fields (plus optional ``metadata``)."""
        if not isinstance(data, dict):
            raise DomainError("parameter document must be a JSON object")
        unknown = sorted(set(data) - set(PARAM_NAMES) - {"metadata"})
        if unknown:
            raise DomainError(f"unknown parameter field(s): {', '.join(unknown)}")
        missing = [n for n in PARAM_NAMES if n not in data]
        if missing:
            raise DomainError(f"missing parameter field(s): {', '.join(missing)}")
        return cls(**{n: data[n] for n in PARAM_NAMES})

    @classmethod
    def all_ones(cls) -> "ModelParams":
        return cls(**{n: 1.0 for n in PARAM_NAMES})

    def replace(self, **changes) -> "ModelParams":
        d = asdict(self)
        d.update(changes)
        return ModelParams(**d)

    def to_dict(self) -> dict:
        return {n: getattr(self, n) for n in PARAM_NAMES}

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def as_array(self) -> np.ndarray:
        """Parameters in :data:`PARAM_NAMES` order (used by the compiled kernels)."""
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=float)

    @property
    def linear(self) -> "LinearPart":
        return LinearPart.from_params(self)


def load_params(path) -> ModelParams:
    """Read a JSON parameter file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise DomainError(f"parameter file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DomainError(f"parameter file {path} is not valid JSON: {exc}") from None
    return ModelParams.from_dict(data)


@dataclass(frozen=True)
class State:
    """Concentrations of oxygen, phytoplankton and zooplankton."""

    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        for name in ("x1", "x2", "x3"):
            val = float(getattr(self, name))
            if not math.isfinite(val) or val < 0.0:
                raise DomainError(f"state component {name} must be finite and nonnegative, got {val!r}")
            object.__setattr__(self, name, val)

    @classmethod
    def from_sequence(cls, seq) -> "State":
        seq = list(seq)
        if len(seq) != 3:
            raise DomainError(f"a state has three components, got {len(seq)}")
        return cls(*seq)

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3], dtype=float)

    def __iter__(self):
        return iter((self.x1, self.x2, self.x3))


@dataclass(frozen=True)
class LinearPart:
    """Diagonal linear part ``A = diag(-m, -sigma, -mu)``."""

    m: float
    sigma: float
    mu: float

    @classmethod
    def from_params(cls, p: ModelParams) -> "LinearPart":
        return cls(p.m, p.sigma, p.mu)

    @property
    def diagonal(self) -> np.ndarray:
        return np.array([-self.m, -self.sigma, -self.mu])

    @property
    def one_norm(self) -> float:
        """Entrywise 1-norm, which for this diagonal matrix is m + sigma + mu."""
        return float(np.sum(np.abs(self.diagonal)))

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.diagonal.reshape((3,) + (1,) * (x.ndim - 1)) * x


def _as_state_array(x) -> np.ndarray:
    if isinstance(x, State):
        return x.as_array()
    arr = np.asarray(x, dtype=float)
    if arr.shape[:1] != (3,):
        raise DomainError(f"state array must have leading dimension 3, got shape {arr.shape}")
    return arr


def check_state_array(x, where="state"):
    """Reject components below :data:`NEGATIVE_SLACK` or NaN; return count of tiny negatives."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise InvariantViolation(f"{where} contains NaN")
    if np.any(arr < NEGATIVE_SLACK):
        raise InvariantViolation(f"{where} has a component below {NEGATIVE_SLACK}: {float(arr.min())!r}")
    return int(np.count_nonzero(arr < 0.0))


def _safe_div(num, den, name):
    if np.any(den == 0.0):
        raise SingularParameterError(f"denominator involving {name} vanishes", name=name)
    return num / den


def rhs_nonlinear(p: ModelParams, x) -> np.ndarray:
    """Nonlinear part ``f(x)``.

    ``x`` may be a :class:`State`, a length-3 array, or an array of shape
    ``(3, ...)`` for vectorized evaluation.
    """
    x = _as_state_array(x)
    x1, x2, x3 = x[0], x[1], x[2]
    f1 = (
        _safe_div(p.H * p.c0 * x2, x1 + p.c0, "c0")
        - _safe_div(p.delta * x1 * x2, x1 + p.c2, "c2")
        - _safe_div(p.v * x1 * x3, x1 + p.c3, "c3")
    )
    pred = _safe_div(p.beta_pred * x2 * x3, x2 + p.h, "h")
    f2 = (_safe_div(p.B * x1, x1 + p.c1, "c1") - p.gamma * x2) * x2 - pred
    sq = x1 * x1
    f3 = _safe_div(p.xi * sq, sq + p.c4 * p.c4, "c4") * pred
    return np.stack([f1, f2, f3])


def rhs_full(p: ModelParams, x) -> np.ndarray:
    """Full right-hand side ``A x + f(x)``."""
    arr = _as_state_array(x)
    return p.linear.apply(arr) + rhs_nonlinear(p, arr)


def one_norm_state(x) -> float:
    """|x1| + |x2| + |x3|."""
    return float(np.sum(np.abs(_as_state_array(x)), axis=0))
