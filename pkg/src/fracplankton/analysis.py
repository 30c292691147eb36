"""Box-local Lipschitz constants of the nonlinearity and singular Gronwall bounds."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError, NumericalFailure, PreconditionError, SingularParameterError
from .model import ModelParams, rhs_nonlinear
from .specfun import SampledFunction, fractional_integral, mittag_leffler

__all__ = [
    "StateBox",
    "LipschitzReport",
    "GronwallProblem",
    "GronwallBound",
    "CORRECTIONS",
    "lipschitz_constants",
    "empirical_lipschitz",
    "gronwall_bound_constant_q",
    "gronwall_bound_ml",
    "gronwall_bound_general",
]

#: Corrections to the raw per-term constants, applied unless ``uncorrected=True``.
CORRECTIONS = (
    "K8: competition term keeps its factor gamma (B*M1/c1 + 2*gamma*M2)",
    "K11: denominator h*c4**2 instead of h*c4**4",
    "K12: factor M3 from the x3 multiplying the x2-difference",
)


@dataclass(frozen=True)
class StateBox:
    """Componentwise upper bounds 0 <= x_i <= M_i on a trajectory."""

    M1: float
    M2: float
    M3: float

    def __post_init__(self):
        for name in ("M1", "M2", "M3"):
            val = float(getattr(self, name))
            if not (math.isfinite(val) and val > 0.0):
                raise DomainError(f"box bound {name} must be positive and finite, got {val!r}")
            object.__setattr__(self, name, val)

    @classmethod
    def from_sequence(cls, seq) -> "StateBox":
        seq = list(seq)
        if len(seq) != 3:
            raise DomainError(f"a box has three bounds, got {len(seq)}")
        return cls(*seq)

    def as_array(self) -> np.ndarray:
        return np.array([self.M1, self.M2, self.M3])

    def scaled(self, factor) -> "StateBox":
        return StateBox(self.M1 * factor, self.M2 * factor, self.M3 * factor)

    def contains(self, x, slack=1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= -slack) and np.all(x <= self.as_array()))


@dataclass(frozen=True)
class LipschitzReport:
    K: tuple
    L1: float
    L2: float
    L3: float
    L: float
    params: ModelParams
    box: StateBox
    corrections: tuple = ()
    extra: dict = field(default_factory=dict)

    def k(self, i: int) -> float:
        """1-based access, ``report.k(8)`` is K8."""
        return self.K[i - 1]

    def to_dict(self) -> dict:
        d = {f"K{i + 1}": v for i, v in enumerate(self.K)}
        d.update(L1=self.L1, L2=self.L2, L3=self.L3, L=self.L)
        d["params"] = self.params.to_dict()
        d["box"] = {"M1": self.box.M1, "M2": self.box.M2, "M3": self.box.M3}
        d["corrections_applied"] = list(self.corrections)
        d.update(self.extra)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _frac(num, den, name):
    # a term with zero coefficient vanishes whatever its denominator
    if num == 0.0:
        return 0.0
    if den == 0.0:
        raise SingularParameterError(f"Lipschitz constant undefined: {name} is zero", name=name)
    return num / den


def lipschitz_constants(p: ModelParams, box: StateBox, uncorrected: bool = False) -> LipschitzReport:
    """Analytic Lipschitz constant of ``f`` on the box ``[0, M1] x [0, M2] x [0, M3]``.

    Parameters
    ----------
    p : ModelParams
    box : StateBox
    uncorrected : bool
        Skip the corrections in :data:`CORRECTIONS`. Useful only for
        comparison; the uncorrected K11 and K12 are not valid bounds in general.
    """
    M1, M2, M3 = box.M1, box.M2, box.M3
    c0, c1, c2, c3, c4, h = p.c0, p.c1, p.c2, p.c3, p.c4, p.h
    xb = p.xi * p.beta_pred

    K1 = _frac(p.H * M2, c0, "c0")
    K2 = _frac(p.H * (M1 + c0), c0, "c0")
    K3 = _frac(p.delta * M2, c2, "c2")
    K4 = _frac(p.delta * M1 * (M1 + c2), c2 * c2, "c2")
    K5 = _frac(p.v * M3, c3, "c3")
    K6 = _frac(p.v * M1 * (M1 + c3), c3 * c3, "c3")
    K7 = _frac(p.B * M2, c1, "c1")
    K9 = _frac(p.beta_pred * M3, h, "h")
    K10 = _frac(p.beta_pred * M2, h, "h")
    K13 = _frac(xb * M1 * M1 * M2, h * c4 * c4, "h*c4")
    if uncorrected:
        K8 = _frac(p.B * M1, c1, "c1") + 2.0 * M2
        K11 = _frac(2.0 * xb * M1 * M2 * M3, h * c4 ** 4, "h*c4")
        K12 = _frac(xb * M1 * M1, h * c4 * c4, "h*c4")
        corrections = ()
    else:
        K8 = _frac(p.B * M1, c1, "c1") + 2.0 * p.gamma * M2
        K11 = _frac(2.0 * xb * M1 * M2 * M3, h * c4 * c4, "h*c4")
        K12 = _frac(xb * M1 * M1 * M3, h * c4 * c4, "h*c4")
        corrections = CORRECTIONS

    K = (K1, K2, K3, K4, K5, K6, K7, K8, K9, K10, K11, K12, K13)
    L1 = K1 + K3 + K5 + K7 + K11
    L2 = K2 + K4 + K8 + K9 + K12
    L3 = K6 + K10 + K13
    return LipschitzReport(K, L1, L2, L3, max(L1, L2, L3), p, box, corrections)


def empirical_lipschitz(p: ModelParams, box: StateBox, n_samples: int, seed: int,
                        chunk: int = 65536) -> float:
    """Largest sampled ratio ||f(x) - f(y)||_1 / ||x - y||_1 over random pairs in the box.

    Pairs are drawn uniformly and independently from one seeded generator in
    fixed-size chunks, so the result depends only on ``(p, box, n_samples, seed)``.
    """
    if n_samples < 2:
        raise DomainError("empirical_lipschitz needs at least two samples")
    rng = np.random.default_rng(seed)
    hi = box.as_array()[:, None]
    best = 0.0
    remaining = int(n_samples)
    while remaining > 0:
        n = min(chunk, remaining)
        remaining -= n
        x = rng.uniform(0.0, 1.0, size=(3, n)) * hi
        y = rng.uniform(0.0, 1.0, size=(3, n)) * hi
        dx = np.abs(x - y).sum(axis=0)
        df = np.abs(rhs_nonlinear(p, x) - rhs_nonlinear(p, y)).sum(axis=0)
        keep = dx >= 1e-12
        if np.any(keep):
            best = max(best, float(np.max(df[keep] / dx[keep])))
    return best


# ---------------------------------------------------------------------------
# Gronwall-type bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GronwallProblem:
    """Data of the inequality p(t) <= h(t) + q(t) int_0^t (t-s)^(order-1) p(s) ds on [0, horizon].

    ``h`` and ``q`` are either nonnegative constants or :class:`SampledFunction` s.
    """

    h: object
    q: object
    order: float
    horizon: float

    def __post_init__(self):
        if not self.order > 0.0:
            raise DomainError(f"order must be positive, got {self.order!r}")
        if not (math.isfinite(self.horizon) and self.horizon > 0.0):
            raise DomainError(f"horizon must be positive and finite, got {self.horizon!r}")
        for name in ("h", "q"):
            val = getattr(self, name)
            samples = val.values if isinstance(val, SampledFunction) else np.array([float(val)])
            if np.any(samples < 0.0):
                raise PreconditionError(f"{name} must be nonnegative")
            if isinstance(val, SampledFunction) and val.horizon < self.horizon:
                raise DomainError(f"{name} is sampled only up to {val.horizon} < horizon {self.horizon}")

    def h_at(self, t) -> float:
        return float(self.h(t)) if isinstance(self.h, SampledFunction) else float(self.h)

    def q_at(self, t) -> float:
        return float(self.q(t)) if isinstance(self.q, SampledFunction) else float(self.q)


@dataclass(frozen=True)
class GronwallBound:
    """Truncated series bound and an upper estimate of what truncation and rounding left out."""

    value: float
    remainder: float
    n_terms: int


def _series_bound(problem: GronwallProblem, b: float, t: float, n_terms: int, tol: float) -> GronwallBound:
    beta = float(problem.order)
    h_t = problem.h_at(t)
    if b == 0.0 or t == 0.0:
        return GronwallBound(h_t, 0.0, n_terms)
    x = b * special.gamma(beta) * t ** beta
    const_h = not isinstance(problem.h, SampledFunction)
    if const_h:
        h_max = h_t
        phi = None
    else:
        phi = problem.h
        h_max = float(np.max(phi.values[phi.grid <= t])) if np.any(phi.grid <= t) else h_t
        h_max = max(h_max, h_t)

    # sum_k (b Gamma(beta))^k / Gamma(k beta) int_0^t (t-s)^(k beta - 1) h(s) ds
    #   = sum_k (b Gamma(beta))^k I^{k beta} h(t)
    total = h_t
    abs_total = abs(h_t)
    bg = b * special.gamma(beta)
    for k in range(1, n_terms + 1):
        if const_h:
            term = h_t * math.exp(k * math.log(x) - special.gammaln(k * beta + 1.0))
        else:
            term = math.exp(k * math.log(bg)) * fractional_integral(k * beta, phi, t)
        total += term
        abs_total += abs(term)

    # tail after n_terms with h <= h_max: h_max * sum_{k>n} x^k / Gamma(k beta + 1);
    # the ratio of consecutive terms is nonincreasing in k
    k = n_terms + 1
    lt = k * math.log(x) - special.gammaln(k * beta + 1.0)
    ratio = math.exp(math.log(x) + special.gammaln(k * beta + 1.0) - special.gammaln((k + 1) * beta + 1.0))
    if ratio >= 1.0:
        tail = math.inf
    else:
        tail = h_max * math.exp(lt) / (1.0 - ratio)
    remainder = tail + 4.0 * (n_terms + 1) * np.finfo(float).eps * abs_total
    if remainder > tol * max(1.0, abs(total)):
        raise NumericalFailure(
            f"Gronwall series remainder {remainder:.3e} exceeds tolerance; increase n_terms (now {n_terms})",
            partial=total,
            bound=remainder,
        )
    return GronwallBound(total, remainder, n_terms)


def gronwall_bound_constant_q(problem: GronwallProblem, t, n_terms: int = 60, tol: float = 1e-8) -> GronwallBound:
    """Series bound for constant ``q = b``.

    Returns the truncated value of
    ``h(t) + int_0^t sum_{k>=1} (b Gamma(beta))^k / Gamma(k beta) (t-s)^(k beta - 1) h(s) ds``
    with an upper estimate of the neglected tail and accumulated rounding.
    """
    if isinstance(problem.q, SampledFunction):
        raise PreconditionError("gronwall_bound_constant_q needs a constant q; use gronwall_bound_general")
    t = float(t)
    if not (0.0 <= t <= problem.horizon):
        raise DomainError(f"t={t} outside [0, {problem.horizon}]")
    return _series_bound(problem, float(problem.q), t, int(n_terms), tol)


def gronwall_bound_ml(h0, q_val, order, t) -> float:
    """Closed form ``h0 * E_beta(q Gamma(beta) t^beta)`` for nondecreasing forcing."""
    for name, val in (("h0", h0), ("q_val", q_val), ("t", t)):
        if val < 0:
            raise DomainError(f"{name} must be nonnegative, got {val!r}")
    if not order > 0:
        raise DomainError(f"order must be positive, got {order!r}")
    if h0 == 0:
        return 0.0
    return float(h0) * mittag_leffler(order, q_val * special.gamma(order) * float(t) ** order)


def gronwall_bound_general(problem: GronwallProblem, t, n_terms: int = 60, tol: float = 1e-8) -> GronwallBound:
    """Series bound with nondecreasing ``q``, evaluated with ``q`` frozen at ``t``."""
    if isinstance(problem.q, SampledFunction):
        qs = problem.q.values
        if np.any(np.diff(qs) < 0.0):
            raise PreconditionError("q must be nondecreasing on its grid")
    t = float(t)
    if not (0.0 <= t <= problem.horizon):
        raise DomainError(f"t={t} outside [0, {problem.horizon}]")
    return _series_bound(problem, problem.q_at(t), t, int(n_terms), tol)
