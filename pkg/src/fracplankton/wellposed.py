"""Numerical certificates for existence, uniqueness and continuous dependence.

Each check returns a report with a ``status`` of ``"pass"``, ``"fail"`` or
``"void"`` (hypothesis not met, so the certificate says nothing) and a
``to_dict`` method for serialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import StateBox, gronwall_bound_ml, lipschitz_constants
from .errors import CertificateInvalid, DomainError
from .model import NEGATIVE_SLACK, ModelParams, State
from .reporting import fingerprint
from .solver import (
    PicardDiagnostics,
    SolverConfig,
    Trajectory,
    solve,
    solve_abm,
    solve_mild_picard,
)

__all__ = [
    "UniquenessReport",
    "EnvelopeReport",
    "DependenceReport",
    "BoxReport",
    "check_uniqueness",
    "check_picard_envelope",
    "check_continuous_dependence",
    "check_positivity_and_box",
    "run_fingerprint",
]

#: Norm of the homogeneous solution operator; the kernel integrates to one.
K_STAR = 1.0

ENVELOPE_SLACK = 1e-9
INTERCEPT_TOL = 1e-8


def _x0_array(x0) -> np.ndarray:
    return x0.as_array() if isinstance(x0, State) else State.from_sequence(x0).as_array()


def run_fingerprint(p: ModelParams, x0, cfg: SolverConfig, **extra) -> str:
    """Fingerprint of everything that determines a certificate run."""
    doc = {"params": p.to_dict(), "x0": list(_x0_array(x0)), "solver": cfg.to_dict()}
    doc.update(extra)
    return fingerprint(doc)


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


# ---------------------------------------------------------------------------
# positivity and box


@dataclass(frozen=True)
class BoxReport:
    passed: bool
    box: StateBox
    first_violation: dict | None = None

    @property
    def status(self) -> str:
        return _status(self.passed)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "box": [self.box.M1, self.box.M2, self.box.M3],
            "first_violation": self.first_violation,
        }


def check_positivity_and_box(traj: Trajectory, box: StateBox) -> BoxReport:
    """Verify ``-1e-12 <= x_i(t_k) <= M_i`` at every grid point; report the first violation."""
    X = traj.states
    upper = box.as_array()
    bad = (X < NEGATIVE_SLACK) | (X > upper)
    if not bad.any():
        return BoxReport(True, box)
    k, i = np.argwhere(bad)[0]
    viol = {
        "index": int(k),
        "t": float(traj.grid[k]),
        "component": f"x{i + 1}",
        "value": float(X[k, i]),
        "lower": 0.0,
        "upper": float(upper[i]),
    }
    return BoxReport(False, box, viol)


# ---------------------------------------------------------------------------
# uniqueness


@dataclass(frozen=True)
class UniquenessReport:
    distance: float
    tol: float
    n_steps_picard: int
    n_steps_abm: int
    picard_converged: bool
    picard_iterations: int
    alpha: float
    config_fingerprint: str

    @property
    def passed(self) -> bool:
        return self.distance <= self.tol

    @property
    def status(self) -> str:
        return _status(self.passed)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "distance": self.distance,
            "tol": self.tol,
            "n_steps_picard": self.n_steps_picard,
            "n_steps_abm": self.n_steps_abm,
            "picard_converged": self.picard_converged,
            "picard_iterations": self.picard_iterations,
            "alpha": self.alpha,
            "config_fingerprint": self.config_fingerprint,
        }


def check_uniqueness(p: ModelParams, x0, cfg: SolverConfig, tol: float,
                     n_steps_abm: int | None = None) -> UniquenessReport:
    """Distance between the mild Picard and ABM solutions from the same data.

    Both solutions approximate the unique mild solution, so their distance is
    pure discretization error. With ``n_steps_abm`` different from
    ``cfg.n_steps`` the grids must nest; the distance is taken on the coarser.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    if cfg.alpha > 1.0:
        raise DomainError("both fractional backends need alpha <= 1")
    n_abm = cfg.n_steps if n_steps_abm is None else int(n_steps_abm)
    pic, diag = solve_mild_picard(p, x0, cfg.replace(method="mild_picard"))
    abm = solve_abm(p, x0, cfg.replace(method="abm", n_steps=n_abm))
    dist = pic.sup_distance(abm)
    fp = run_fingerprint(p, x0, cfg, check="uniqueness", tol=tol, n_steps_abm=n_abm)
    return UniquenessReport(dist, float(tol), cfg.n_steps, n_abm, diag.converged,
                            diag.iterations_used, cfg.alpha, fp)


# ---------------------------------------------------------------------------
# Picard envelope


@dataclass(frozen=True)
class EnvelopeReport:
    start: int
    indices: tuple
    differences: tuple
    envelope: tuple
    margins: tuple
    slack: float
    M: float
    K: float
    L: float
    box: StateBox
    converged: bool
    first_margin: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(m >= -self.slack * e for m, e in zip(self.margins, self.envelope))

    @property
    def status(self) -> str:
        return _status(self.passed)

    def to_dict(self) -> dict:
        d = {
            "status": self.status,
            "start": self.start,
            "n": list(self.indices),
            "d_n": list(self.differences),
            "e_n": list(self.envelope),
            "margins": list(self.margins),
            "slack_relative": self.slack,
            "M": self.M,
            "K": self.K,
            "L": self.L,
            "box": [self.box.M1, self.box.M2, self.box.M3],
            "converged": self.converged,
            "margin_n1": self.first_margin,
        }
        d.update(self.extra)
        return d


def check_picard_envelope(diag: PicardDiagnostics, start: int = 2,
                          slack: float = ENVELOPE_SLACK) -> EnvelopeReport:
    """Compare iterate differences ``d_n`` with the a-priori envelope ``e_n``.

    Passes when ``e_n - d_n >= -slack * e_n`` for every ``n >= start`` that was
    computed. The ``n = 1`` margin is always reported.
    """
    if start < 1:
        raise DomainError("the envelope starts at n = 1")
    d = diag.differences
    e = diag.envelope
    idx = tuple(range(start, len(d)))
    dn = tuple(float(d[n]) for n in idx)
    en = tuple(float(e[n]) for n in idx)
    margins = tuple(a - b for a, b in zip(en, dn))
    first = float(e[1] - d[1]) if len(d) > 1 else None
    return EnvelopeReport(start, idx, dn, en, margins, float(slack), diag.M, diag.K, diag.L,
                          diag.box, diag.converged, first)


# ---------------------------------------------------------------------------
# continuous dependence


@dataclass(frozen=True)
class DependenceReport:
    """Deviation of perturbed solutions against the Gronwall bound, one entry per epsilon."""

    epsilons: tuple
    deviations: tuple
    bounds: tuple
    statuses: tuple
    K_star: float
    M: float
    L: float
    K: float
    alpha: float
    horizon: float
    box: StateBox
    direction: tuple
    slope: float | None
    intercept: float | None
    intercept_tol: float
    config_fingerprint: str
    box_violations: tuple = ()

    def __post_init__(self):
        eps = np.asarray(self.epsilons, dtype=float)
        if np.any(np.diff(eps) <= 0):
            raise DomainError("epsilons must be strictly increasing")
        if any(d is not None and d < 0 for d in self.deviations):
            raise DomainError("deviations are nonnegative")

    @property
    def pass_flags(self) -> tuple:
        return tuple(s == "pass" for s in self.statuses)

    @property
    def extrapolates_to_zero(self) -> bool | None:
        if self.intercept is None:
            return None
        return abs(self.intercept) < self.intercept_tol

    @property
    def status(self) -> str:
        if "fail" in self.statuses or self.extrapolates_to_zero is False:
            return "fail"
        if all(s == "void" for s in self.statuses):
            return "void"
        return "pass"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "epsilons": list(self.epsilons),
            "deviations": list(self.deviations),
            "bounds": list(self.bounds),
            "statuses": list(self.statuses),
            "K_star": self.K_star,
            "M": self.M,
            "L": self.L,
            "K": self.K,
            "alpha": self.alpha,
            "horizon": self.horizon,
            "box": [self.box.M1, self.box.M2, self.box.M3],
            "direction": list(self.direction),
            "fit_slope": self.slope,
            "fit_intercept": self.intercept,
            "intercept_tol": self.intercept_tol,
            "extrapolates_to_zero": self.extrapolates_to_zero,
            "box_violations": list(self.box_violations),
            "config_fingerprint": self.config_fingerprint,
        }


def _direction(direction) -> np.ndarray:
    if direction is None or direction == "uniform":
        return np.full(3, 1.0 / 3.0)
    if isinstance(direction, (int, np.integer)) and 0 <= direction < 3:
        v = np.zeros(3)
        v[int(direction)] = 1.0
        return v
    v = np.asarray(direction, dtype=float)
    if v.shape != (3,) or np.any(v < 0) or not v.sum() > 0:
        raise DomainError("direction must be 'uniform', an axis index 0-2, or a nonnegative 3-vector")
    return v / v.sum()


def check_continuous_dependence(p: ModelParams, x0, epsilons, cfg: SolverConfig, box: StateBox,
                                direction=None, on_exit: str = "void",
                                intercept_tol: float = INTERCEPT_TOL) -> DependenceReport:
    """Perturb ``x0`` by vectors of 1-norm ``eps`` and compare with ``eps K* E_alpha(M Gamma(alpha) T^alpha)``.

    Parameters
    ----------
    direction : None, "uniform", int or array_like
        Perturbation direction, normalized to unit 1-norm. The default spreads
        ``eps`` evenly over the three components; an integer selects one axis.
    on_exit : {"void", "raise"}
        What to do when a perturbed trajectory leaves ``box``. ``"void"`` records
        that epsilon as void and keeps going; ``"raise"`` raises
        :class:`CertificateInvalid`. The unperturbed trajectory leaving the
        box always raises, since then no entry can be certified.

    Notes
    -----
    ``M = alpha K L ||x0||_1`` with ``K = cfg.envelope_constant_K`` and ``L`` the
    Lipschitz constant on ``box``. The slope/intercept come from a least-squares
    fit ``deviation ~ c eps + b`` over the non-void entries.
    """
    if on_exit not in ("void", "raise"):
        raise DomainError("on_exit must be 'void' or 'raise'")
    eps = np.asarray(list(epsilons), dtype=float)
    if eps.size == 0 or np.any(eps < 0) or not np.all(np.isfinite(eps)):
        raise DomainError("epsilons must be a nonempty list of nonnegative reals")
    if np.any(np.diff(eps) <= 0):
        raise DomainError("epsilons must be strictly increasing")
    y0 = _x0_array(x0)
    v = _direction(direction)

    base = solve(p, y0, cfg)
    base_check = check_positivity_and_box(base, box)
    if not base_check.passed:
        raise CertificateInvalid(
            f"unperturbed trajectory leaves the box: {base_check.first_violation}"
        )

    L = lipschitz_constants(p, box).L
    K = float(cfg.envelope_constant_K)
    M = cfg.alpha * K * L * float(np.abs(y0).sum())

    devs, bounds, statuses, violations = [], [], [], []
    for e in eps:
        bound = gronwall_bound_ml(e * K_STAR, M, cfg.alpha, cfg.horizon)
        xe = y0 + e * v
        if e == 0.0:
            dev = 0.0
        else:
            if not box.contains(xe):
                viol = {"epsilon": float(e), "index": 0, "t": 0.0, "reason": "initial condition outside box"}
                if on_exit == "raise":
                    raise CertificateInvalid(f"perturbed initial condition leaves the box at eps={e}")
                devs.append(None)
                bounds.append(bound)
                statuses.append("void")
                violations.append(viol)
                continue
            pert = solve(p, xe, cfg)
            chk = check_positivity_and_box(pert, box)
            if not chk.passed:
                if on_exit == "raise":
                    raise CertificateInvalid(
                        f"perturbed trajectory leaves the box at eps={e}: {chk.first_violation}"
                    )
                devs.append(None)
                bounds.append(bound)
                statuses.append("void")
                violations.append(dict(chk.first_violation, epsilon=float(e)))
                continue
            dev = float(np.max(np.abs(pert.states - base.states).sum(axis=1)))
        devs.append(dev)
        bounds.append(bound)
        statuses.append(_status(dev <= bound))

    used = [(e, d) for e, d in zip(eps, devs) if d is not None]
    slope = intercept = None
    if len(used) >= 2:
        A = np.array([[e, 1.0] for e, _ in used])
        sol, *_ = np.linalg.lstsq(A, np.array([d for _, d in used]), rcond=None)
        slope, intercept = float(sol[0]), float(sol[1])

    fp = run_fingerprint(p, y0, cfg, check="continuous_dependence", epsilons=list(eps),
                         box=[box.M1, box.M2, box.M3], direction=list(v))
    return DependenceReport(
        tuple(float(e) for e in eps), tuple(devs), tuple(bounds), tuple(statuses), K_STAR, M, L, K,
        cfg.alpha, cfg.horizon, box, tuple(float(c) for c in v), slope, intercept, float(intercept_tol),
        fp, tuple(violations),
    )
