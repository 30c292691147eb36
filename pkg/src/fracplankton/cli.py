"""Command-line entry point: ``fracplankton <subcommand> [options]``.

Exit codes: 0 success, 1 invalid configuration or domain error, 2 numerical
failure, 3 invariant violation or failed certificate.

A run is driven by one JSON document (``--config``). Model parameters are given
inline under ``params`` or in a separate file named by ``params_file`` (resolved
relative to the config file); all sixteen must be present. Recognized keys::

    params | params_file, x0, alpha, T, n_steps, method, picard_max_iter,
    picard_tol, envelope_constant_K, box, epsilons, direction, tol,
    n_steps_abm, empirical, seed, uncorrected, gronwall

Outputs are deterministic: identical configs give byte-identical files. Every
JSON document carries the package version and the fingerprint (sha256 of the
canonical JSON) of the resolved configuration.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    GronwallProblem,
    StateBox,
    empirical_lipschitz,
    gronwall_bound_constant_q,
    gronwall_bound_general,
    gronwall_bound_ml,
    lipschitz_constants,
)
from .errors import (
    CertificateInvalid,
    DomainError,
    FracPlanktonError,
    InvariantViolation,
    NumericalFailure,
)
from .model import ModelParams, State, load_params
from .reporting import VERSION_STRING, dump_report, fingerprint, jsonable
from .solver import SolverConfig, solve, solve_mild_picard
from .specfun import (
    SampledFunction,
    gamma,
    mittag_leffler,
    mittag_leffler2,
    zeta_density,
    zeta_laplace,
    zeta_moment,
)
from .wellposed import (
    check_continuous_dependence,
    check_picard_envelope,
    check_positivity_and_box,
    check_uniqueness,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_CERTIFICATE = 3

DEFAULT_BOX = (2.0, 2.0, 2.0)
DEFAULT_EPSILONS = (1e-4, 1e-3, 1e-2)
DEFAULT_UNIQUENESS_TOL = 1e-3

_KNOWN_KEYS = {
    "params", "params_file", "x0", "alpha", "T", "n_steps", "method", "picard_max_iter",
    "picard_tol", "envelope_constant_K", "box", "epsilons", "direction", "tol", "n_steps_abm",
    "empirical", "seed", "uncorrected", "gronwall", "metadata",
}


class ConfigError(DomainError):
    """Malformed or incomplete run configuration."""


# ---------------------------------------------------------------------------
# configuration


def _read_config(path) -> dict:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(cfg) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    if "params_file" in cfg:
        if "params" in cfg:
            raise ConfigError("give either 'params' or 'params_file', not both")
        pfile = Path(cfg.pop("params_file"))
        if not pfile.is_absolute():
            pfile = path.parent / pfile
        cfg["params"] = load_params(pfile).to_dict()
    return cfg


def _apply_flags(cfg: dict, args) -> dict:
    for key in ("seed", "empirical", "tol"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config is missing required field '{key}'")
    return cfg[key]


def _params(cfg) -> ModelParams:
    return ModelParams.from_dict(_require(cfg, "params"))


def _box(cfg, default=None) -> StateBox:
    if "box" not in cfg and default is not None:
        cfg["box"] = list(default)
    return StateBox.from_sequence(_require(cfg, "box"))


def _solver_config(cfg, method=None) -> SolverConfig:
    kw = dict(
        order=_require(cfg, "alpha"),
        horizon=_require(cfg, "T"),
        n_steps=_require(cfg, "n_steps"),
        method=method or cfg.get("method", "abm"),
    )
    for key in ("picard_max_iter", "picard_tol", "envelope_constant_K"):
        if key in cfg:
            kw[key] = cfg[key]
    try:
        return SolverConfig(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad solver setting: {exc}") from None


def _x0(cfg) -> State:
    return State.from_sequence(_require(cfg, "x0"))


def _header(cfg: dict, command: str) -> dict:
    # the resolved config (defaults filled in) travels with its fingerprint
    return {"version": VERSION_STRING, "command": command, "config_fingerprint": fingerprint(cfg),
            "config": jsonable(cfg)}


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    target = out / name
    with open(target, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)
    return target


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(cfg: dict, out: Path) -> int:
    p = _params(cfg)
    x0 = _x0(cfg)
    scfg = _solver_config(cfg)
    meta = _header(cfg, "simulate")
    if scfg.method == "mild_picard":
        box = StateBox.from_sequence(cfg["box"]) if "box" in cfg else None
        traj, diag = solve_mild_picard(p, x0, scfg, box=box)
        meta["picard"] = diag.to_dict()
    else:
        traj = solve(p, x0, scfg)
    csv = traj.csv_text()
    _write(out, "trajectory.csv", csv)
    meta.update(
        solver=scfg.to_dict(),
        x0=list(x0.as_array()),
        params_fingerprint=p.fingerprint(),
        trajectory_file="trajectory.csv",
        trajectory_sha256=hashlib.sha256(csv.encode("ascii")).hexdigest(),
        rows=int(traj.grid.size),
        final_state=list(traj.final),
        trajectory_metadata=traj.metadata,
    )
    _write(out, "run_meta.json", dump_report(meta))
    return EXIT_OK


def cmd_lipschitz(cfg: dict, out: Path) -> int:
    p = _params(cfg)
    box = _box(cfg)
    rep = lipschitz_constants(p, box, uncorrected=bool(cfg.get("uncorrected", False)))
    doc = _header(cfg, "lipschitz")
    doc["report"] = rep.to_dict()
    code = EXIT_OK
    n = cfg.get("empirical")
    if n:
        seed = int(cfg.get("seed", 0))
        emp = empirical_lipschitz(p, box, int(n), seed)
        ok = emp <= rep.L
        doc["empirical"] = {
            "n_samples": int(n), "seed": seed, "ratio": emp, "margin": rep.L - emp,
            "status": "pass" if ok else "fail",
        }
        if not ok:
            code = EXIT_CERTIFICATE
    _write(out, "lipschitz_report.json", dump_report(doc))
    print(f"L = {rep.L!r}")
    return code


def _gronwall_function(spec, name):
    if isinstance(spec, (int, float)):
        return float(spec)
    if isinstance(spec, dict) and {"grid", "values"} <= set(spec):
        return SampledFunction(np.asarray(spec["grid"], float), np.asarray(spec["values"], float))
    raise ConfigError(f"gronwall.{name} must be a number or an object with 'grid' and 'values'")


def cmd_gronwall(cfg: dict, out: Path) -> int:
    g = _require(cfg, "gronwall")
    if not isinstance(g, dict):
        raise ConfigError("'gronwall' must be an object")
    beta = float(_require(g, "beta"))
    t = float(_require(g, "t"))
    h = _gronwall_function(_require(g, "h"), "h")
    q = _gronwall_function(_require(g, "q"), "q")
    n_terms = int(g.get("n_terms", 200))
    tol = float(cfg.get("tol", 1e-8))
    prob = GronwallProblem(h, q, beta, float(g.get("horizon", t)))
    doc = _header(cfg, "gronwall")
    if isinstance(q, SampledFunction):
        b = gronwall_bound_general(prob, t, n_terms=n_terms, tol=tol)
        doc["general"] = {"value": b.value, "remainder": b.remainder, "n_terms": b.n_terms,
                          "q_frozen": prob.q_at(t)}
    else:
        b = gronwall_bound_constant_q(prob, t, n_terms=n_terms, tol=tol)
        doc["series"] = {"value": b.value, "remainder": b.remainder, "n_terms": b.n_terms}
        if not isinstance(h, SampledFunction):
            ml = gronwall_bound_ml(h, q, beta, t)
            doc["mittag_leffler"] = {"value": ml, "difference": abs(ml - b.value)}
    _write(out, "gronwall_report.json", dump_report(doc))
    print(f"bound = {b.value!r} (remainder <= {b.remainder:.3e})")
    return EXIT_OK


def cmd_wellposed(cfg: dict, out: Path) -> int:
    p = _params(cfg)
    x0 = _x0(cfg)
    box = _box(cfg, DEFAULT_BOX)
    cfg.setdefault("epsilons", list(DEFAULT_EPSILONS))
    cfg.setdefault("tol", DEFAULT_UNIQUENESS_TOL)
    scfg = _solver_config(cfg)
    doc = _header(cfg, "wellposed")
    doc["solver"] = scfg.to_dict()
    warnings = []

    uniq = check_uniqueness(p, x0, scfg, float(cfg["tol"]), n_steps_abm=cfg.get("n_steps_abm"))
    doc["uniqueness"] = uniq.to_dict()

    pic, diag = solve_mild_picard(p, x0, scfg.replace(method="mild_picard"), box=box)
    env = check_picard_envelope(diag)
    doc["picard_envelope"] = env.to_dict()

    doc["box_picard"] = check_positivity_and_box(pic, box).to_dict()
    base = solve(p, x0, scfg) if scfg.method != "mild_picard" else pic
    doc["box_solution"] = check_positivity_and_box(base, box).to_dict()

    try:
        dep = check_continuous_dependence(p, x0, cfg["epsilons"], scfg, box,
                                          direction=cfg.get("direction"))
        doc["continuous_dependence"] = dep.to_dict()
        for e, s in zip(dep.epsilons, dep.statuses):
            if s == "void":
                warnings.append(f"continuous dependence at eps={e!r} is void: trajectory leaves the box")
    except CertificateInvalid as exc:
        doc["continuous_dependence"] = {"status": "void", "reason": str(exc)}
        warnings.append(f"continuous dependence certificate is void: {exc}")

    checks = ("uniqueness", "picard_envelope", "box_picard", "box_solution", "continuous_dependence")
    failed = [c for c in checks if doc[c]["status"] == "fail"]
    doc["warnings"] = warnings
    doc["status"] = "fail" if failed else "pass"
    _write(out, "wellposed_report.json", dump_report(doc))
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    for c in checks:
        print(f"{c}: {doc[c]['status']}")
    return EXIT_CERTIFICATE if failed else EXIT_OK


def _zeta_check_rows(alpha):
    target = 1.0 / gamma(1.0 + alpha)
    norm = zeta_moment(alpha, 0.0)
    mom = zeta_moment(alpha, 1.0)
    rows = [("normalization", norm, 1.0), ("first_moment", mom, target)]
    for z in (0.5, 1.0, 2.0):
        rows.append((f"laplace(z={z:g})", zeta_laplace(alpha, z), mittag_leffler(alpha, -z)))
    return rows


def cmd_specfun(args) -> int:
    name, vals = args.function, args.args

    def need(n):
        if len(vals) != n:
            raise ConfigError(f"'{name}' takes {n} numeric argument(s), got {len(vals)}")
        try:
            return [float(v) for v in vals]
        except ValueError:
            raise ConfigError(f"non-numeric argument in {vals}") from None

    if name == "ml":
        a, z = need(2)
        if not a > 0:
            raise DomainError("order must be positive")
        print(repr(float(mittag_leffler(a, z))))
    elif name == "ml2":
        a, b, z = need(3)
        print(repr(float(mittag_leffler2(a, b, z))))
    elif name == "zeta":
        a, theta = need(2)
        print(repr(float(zeta_density(a, theta))))
    elif name == "zeta-check":
        (a,) = need(1)
        rows = _zeta_check_rows(a)
        print(f"{'quantity':<18} {'computed':>24} {'expected':>24} {'abs_error':>10}")
        for label, got, want in rows:
            print(f"{label:<18} {got:>24.17g} {want:>24.17g} {abs(got - want):>10.2e}")
        if args.out:
            doc = {"version": VERSION_STRING, "command": "specfun zeta-check",
                   "config_fingerprint": fingerprint({"function": name, "alpha": a}),
                   "rows": [{"quantity": r[0], "computed": r[1], "expected": r[2]} for r in rows]}
            _write(Path(args.out), "specfun_report.json", dump_report(doc))
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown function {name!r}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracplankton", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"fracplankton {VERSION_STRING}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, metavar="PATH", help="JSON run configuration")
        sp.add_argument("--out", default=".", metavar="DIR", help="output directory (default: .)")
        sp.add_argument("--seed", type=int, metavar="N", help="random seed (overrides config)")
        sp.add_argument("--empirical", type=int, metavar="N", help="number of sampled pairs (lipschitz)")
        sp.add_argument("--tol", type=float, metavar="X", help="tolerance (overrides config)")

    common(sub.add_parser("simulate", help="integrate the model and write trajectory.csv"))
    common(sub.add_parser("lipschitz", help="box-local Lipschitz constants"))
    common(sub.add_parser("gronwall", help="evaluate singular Gronwall bounds"))
    common(sub.add_parser("wellposed", help="run uniqueness, envelope, dependence and box certificates"))
    sp = sub.add_parser("specfun", help="evaluate special functions")
    sp.add_argument("function", choices=("ml", "ml2", "zeta", "zeta-check"))
    sp.add_argument("args", nargs="*", help="numeric arguments")
    sp.add_argument("--out", default=None, metavar="DIR", help="also write specfun_report.json (zeta-check)")
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "lipschitz": cmd_lipschitz,
    "gronwall": cmd_gronwall,
    "wellposed": cmd_wellposed,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "specfun":
            return cmd_specfun(args)
        cfg = _apply_flags(_read_config(args.config), args)
        return _COMMANDS[args.command](cfg, Path(args.out))
    except (DomainError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvariantViolation, CertificateInvalid) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE
    except (ArithmeticError, FracPlanktonError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
