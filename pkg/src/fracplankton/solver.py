"""Time integration of the fractional plankton-oxygen system.

Three backends:

``mild_picard``
    Successive approximations on the mild (integral) form. Because the linear
    part is diagonal, the subordination integrals reduce to Mittag-Leffler
    functions: the free evolution is ``x0_i E_alpha(a_i t^alpha)`` and the
    memory kernel is ``u^(alpha-1) E_{alpha,alpha}(a_i u^alpha)``. Only the time
    convolution is discretized, by a product trapezoid rule that integrates
    the kernel exactly against piecewise-linear data.
``abm``
    Fractional Adams-Bashforth-Moulton predictor-corrector with full memory.
``rk4_classical``
    Classical fourth-order Runge-Kutta, only for ``alpha == 1``.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._backend import BACKEND, kernels
from .analysis import StateBox, lipschitz_constants
from .errors import DomainError, InvariantViolation, NumericalFailure
from .model import ModelParams, State, check_state_array, rhs_full, rhs_nonlinear
from .specfun import FractionalOrder, mittag_leffler, mittag_leffler2

__all__ = [
    "METHODS",
    "SolverConfig",
    "Trajectory",
    "PicardDiagnostics",
    "solve",
    "solve_abm",
    "solve_mild_picard",
    "solve_rk4_classical",
    "picard_envelope",
    "mild_convolution_weights",
]

METHODS = ("mild_picard", "abm", "rk4_classical")


@dataclass(frozen=True)
class SolverConfig:
    """Discretization and iteration settings for one solve."""

    order: FractionalOrder
    horizon: float
    n_steps: int
    method: str = "abm"
    picard_max_iter: int = 30
    picard_tol: float = 1e-10
    envelope_constant_K: float | None = None

    def __post_init__(self):
        order = self.order if isinstance(self.order, FractionalOrder) else FractionalOrder(self.order)
        object.__setattr__(self, "order", order)
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise DomainError(f"horizon must be positive and finite, got {self.horizon!r}")
        object.__setattr__(self, "horizon", float(self.horizon))
        if isinstance(self.n_steps, bool) or int(self.n_steps) != self.n_steps or self.n_steps < 8:
            raise DomainError(f"n_steps must be an integer >= 8, got {self.n_steps!r}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.method == "rk4_classical" and self.order.alpha != 1.0:
            raise DomainError("rk4_classical requires alpha = 1")
        if int(self.picard_max_iter) < 1:
            raise DomainError("picard_max_iter must be positive")
        if not self.picard_tol > 0:
            raise DomainError("picard_tol must be positive")
        if self.envelope_constant_K is None:
            object.__setattr__(self, "envelope_constant_K", 1.0 / special.gamma(1.0 + self.order.alpha))
        elif not self.envelope_constant_K > 0:
            raise DomainError("envelope_constant_K must be positive")

    @property
    def alpha(self) -> float:
        return self.order.alpha

    @property
    def step(self) -> float:
        return self.horizon / self.n_steps

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    def replace(self, **changes) -> "SolverConfig":
        d = self.to_dict()
        d["order"] = d.pop("alpha")
        d.update(changes)
        return SolverConfig(**d)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "horizon": self.horizon,
            "n_steps": self.n_steps,
            "method": self.method,
            "picard_max_iter": int(self.picard_max_iter),
            "picard_tol": self.picard_tol,
            "envelope_constant_K": self.envelope_constant_K,
        }


@dataclass(frozen=True)
class Trajectory:
    """States on a uniform grid; ``states[k]`` is the state at ``grid[k]``."""

    grid: np.ndarray
    states: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if states.shape != (grid.size, 3):
            raise DomainError(f"states must have shape ({grid.size}, 3), got {states.shape}")
        tiny = check_state_array(states, where="trajectory")
        meta = dict(self.metadata)
        meta["tiny_negative_components"] = tiny
        grid.flags.writeable = False
        states.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "metadata", meta)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def component(self, i: int) -> np.ndarray:
        return self.states[:, i]

    def sup_distance(self, other: "Trajectory") -> float:
        """max_t ||x(t) - y(t)||_1 on the coarser of the two grids (fine grid must nest)."""
        a, b = (self, other) if self.grid.size <= other.grid.size else (other, self)
        if a.grid.size == b.grid.size:
            if not np.allclose(a.grid, b.grid, rtol=0, atol=1e-12 * max(1.0, a.grid[-1])):
                raise DomainError("trajectories live on different grids")
            return float(np.max(np.abs(a.states - b.states).sum(axis=1)))
        ratio = (b.grid.size - 1) / (a.grid.size - 1)
        if ratio != int(ratio) or abs(a.grid[-1] - b.grid[-1]) > 1e-12 * max(1.0, a.grid[-1]):
            raise DomainError("fine grid must be an integer refinement of the coarse grid")
        sub = b.states[:: int(ratio)]
        return float(np.max(np.abs(a.states - sub).sum(axis=1)))

    def csv_text(self) -> str:
        buf = io.StringIO(newline="")
        buf.write("t,x1,x2,x3\n")
        for t, (x1, x2, x3) in zip(self.grid, self.states):
            buf.write(f"{t:.17g},{x1:.17g},{x2:.17g},{x3:.17g}\n")
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n", encoding="ascii") as fh:
            fh.write(self.csv_text())

    @classmethod
    def from_csv(cls, path, metadata=None) -> "Trajectory":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1:4], metadata or {})

    def metadata_json(self) -> str:
        return json.dumps(self.metadata, indent=2, sort_keys=True)


@dataclass(frozen=True)
class PicardDiagnostics:
    """Convergence record of the successive approximations.

    ``differences[n]`` is ``max_t ||x_{n+1}(t) - x_n(t)||_1`` with ``x_0(t) = x0``;
    ``envelope[n]`` is the a-priori bound for the same ``n`` at ``t = T``
    (``envelope[0]`` is ``nan``: the bound starts at ``n = 1``).
    """

    differences: tuple
    envelope: tuple
    M: float
    K: float
    L: float
    box: StateBox
    converged: bool
    iterations_used: int

    def to_dict(self) -> dict:
        return {
            "differences": list(self.differences),
            "envelope": [None if math.isnan(e) else e for e in self.envelope],
            "M": self.M,
            "K": self.K,
            "L": self.L,
            "box": [self.box.M1, self.box.M2, self.box.M3],
            "converged": self.converged,
            "iterations_used": self.iterations_used,
        }


def _x0_array(x0) -> np.ndarray:
    if isinstance(x0, State):
        return x0.as_array()
    return State.from_sequence(x0).as_array()


def _metadata(p: ModelParams, cfg: SolverConfig, method: str) -> dict:
    return {
        "method": method,
        "alpha": cfg.alpha,
        "horizon": cfg.horizon,
        "n_steps": cfg.n_steps,
        "params_fingerprint": p.fingerprint(),
        "kernel_backend": BACKEND,
    }


def _finish(grid, Y, p, cfg, method, extra=None) -> Trajectory:
    meta = _metadata(p, cfg, method)
    if extra:
        meta.update(extra)
    return Trajectory(grid, Y, meta)


def solve_abm(p: ModelParams, x0, cfg: SolverConfig, kernel_module=None) -> Trajectory:
    """Fractional Adams-Bashforth-Moulton predictor-corrector (O(N^2) full memory).

    Predictor: product rectangle rule; corrector: product trapezoid rule.
    """
    y0 = _x0_array(x0)
    km = kernel_module or kernels
    Y, fail = km.abm_solve(cfg.alpha, cfg.step, cfg.n_steps, y0, p.as_array())
    if fail >= 0:
        raise NumericalFailure(
            f"ABM integration produced a non-finite value after step {fail}", step=int(fail)
        )
    Y[0] = y0
    return _finish(cfg.grid(), Y, p, cfg, "abm")


def solve_rk4_classical(p: ModelParams, x0, cfg: SolverConfig) -> Trajectory:
    """Classical fixed-step RK4 of ``x' = A x + f(x)``; requires ``alpha == 1``."""
    if cfg.alpha != 1.0:
        raise DomainError("rk4_classical requires alpha = 1")
    y = _x0_array(x0)
    h = cfg.step
    Y = np.empty((cfg.n_steps + 1, 3))
    Y[0] = y
    for n in range(cfg.n_steps):
        k1 = rhs_full(p, y)
        k2 = rhs_full(p, y + 0.5 * h * k1)
        k3 = rhs_full(p, y + 0.5 * h * k2)
        k4 = rhs_full(p, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NumericalFailure(f"RK4 produced a non-finite value at step {n + 1}", step=n)
        Y[n + 1] = y
    return _finish(cfg.grid(), Y, p, cfg, "rk4_classical")


def mild_convolution_weights(alpha, rate, step, n_steps):
    """Product-trapezoid weights for ``int_0^t k(t - s) g(s) ds`` on a uniform grid.

    ``k(u) = u^(alpha-1) E_{alpha,alpha}(rate u^alpha)``. Returns ``(W, J)`` such
    that the integral at ``t_n`` is ``sum_{i=1}^n W[n-i] g_i + J[n-1] g_0``.

    Uses the exact primitives
    ``int_0^s k = s^alpha E_{alpha,alpha+1}(rate s^alpha)`` and
    ``int_0^s u k(u) du = s^(alpha+1) (E_{alpha,alpha+1} - E_{alpha,alpha+2})(rate s^alpha)``.
    """
    s = step * np.arange(n_steps + 1, dtype=float)
    z = rate * s ** alpha
    e1 = mittag_leffler2(alpha, alpha + 1.0, z)
    e2 = mittag_leffler2(alpha, alpha + 2.0, z)
    prim0 = s ** alpha * e1
    prim1 = s ** (alpha + 1.0) * (e1 - e2)
    i0 = np.diff(prim0)
    i1 = np.diff(prim1)
    m = np.arange(n_steps, dtype=float)
    # J_m = int_{mh}^{(m+1)h} (u - mh)/h k(u) du
    J = i1 / step - m * i0
    A = i0 - J
    W = np.empty(n_steps)
    W[0] = A[0]
    W[1:] = A[1:] + J[:-1]
    return W, J


def picard_envelope(M, alpha, t, n) -> float:
    """A-priori bound ``M^n t^(n alpha) Gamma(alpha)^n / Gamma(n alpha + 1)`` (log-space)."""
    alpha = float(alpha.alpha if isinstance(alpha, FractionalOrder) else alpha)
    if M < 0 or t < 0 or n < 1:
        raise DomainError("picard_envelope needs M >= 0, t >= 0, n >= 1")
    if M == 0 or t == 0:
        return 0.0
    log_e = n * (math.log(M) + alpha * math.log(t) + special.gammaln(alpha)) - special.gammaln(n * alpha + 1.0)
    return math.exp(log_e) if log_e < 709.0 else math.inf


def solve_mild_picard(p: ModelParams, x0, cfg: SolverConfig, box: StateBox | None = None,
                      kernel_module=None):
    """Successive approximations on the mild formulation.

    Parameters
    ----------
    box : StateBox, optional
        Box used for the Lipschitz constant entering the envelope constant
        ``M = alpha K L ||x0||_1``. Defaults to the componentwise maximum of
        the returned trajectory.

    Returns
    -------
    (Trajectory, PicardDiagnostics)
    """
    y0 = _x0_array(x0)
    km = kernel_module or kernels
    alpha = cfg.alpha
    N = cfg.n_steps
    grid = cfg.grid()
    rates = p.linear.diagonal

    hom = np.empty((3, N + 1))
    weights = []
    ta = grid ** alpha
    for i in range(3):
        hom[i] = y0[i] * mittag_leffler(alpha, rates[i] * ta)
        weights.append(mild_convolution_weights(alpha, rates[i], cfg.step, N))

    X = np.repeat(y0[:, None], N + 1, axis=1)
    diffs = []
    converged = False
    with np.errstate(all="ignore"):
        for _ in range(int(cfg.picard_max_iter)):
            try:
                G = rhs_nonlinear(p, X)
            except Exception as exc:
                raise NumericalFailure(f"Picard iterate left the domain of f: {exc}") from exc
            Xn = np.empty_like(X)
            for i in range(3):
                W, J = weights[i]
                Xn[i] = hom[i] + km.history_convolve(W, J, G[i])
            Xn[:, 0] = y0
            if not np.all(np.isfinite(Xn)):
                raise NumericalFailure(f"Picard iteration {len(diffs) + 1} produced non-finite values",
                                       step=len(diffs))
            d = float(np.max(np.abs(Xn - X).sum(axis=0)))
            diffs.append(d)
            X = Xn
            if d <= cfg.picard_tol:
                converged = True
                break

    if box is None:
        sup = np.max(X, axis=1)
        box = StateBox(*np.maximum(np.maximum(sup, y0), np.finfo(float).tiny))
    L = lipschitz_constants(p, box).L
    K = float(cfg.envelope_constant_K)
    M = alpha * K * L * float(np.abs(y0).sum())
    env = tuple([math.nan] + [picard_envelope(M, alpha, cfg.horizon, n) for n in range(1, len(diffs))])
    diag = PicardDiagnostics(tuple(diffs), env, M, K, L, box, converged, len(diffs))
    traj = _finish(grid, X.T.copy(), p, cfg, "mild_picard",
                   {"picard_converged": converged, "picard_iterations": len(diffs)})
    return traj, diag


def solve(p: ModelParams, x0, cfg: SolverConfig):
    """Dispatch on ``cfg.method``; always returns a :class:`Trajectory`."""
    if cfg.method == "abm":
        return solve_abm(p, x0, cfg)
    if cfg.method == "rk4_classical":
        return solve_rk4_classical(p, x0, cfg)
    traj, _ = solve_mild_picard(p, x0, cfg)
    return traj
