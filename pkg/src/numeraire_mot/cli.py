"""Command-line front end: profile, build, price, bounds, verify.

Exit codes: 0 success, 1 verification failure, 2 assumption violation or
infeasible instance, 3 numerical failure, 4 bad configuration.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import checks, config
from . import couplings as cp
from . import lp_oracle as lp
from .errors import (
    AssumptionViolated,
    BracketError,
    ConfigError,
    DegenerateBasis,
    DomainError,
    Infeasible,
    MeanMismatch,
    MethodMismatch,
    NoConvergence,
    NoDensity,
    NumericsFailure,
    OutOfRange,
    Unbounded,
)
from .measures import LogNormal, delta_profile, lognormal_extremizer_closed_form, parse_marginal
from .payoffs import parse_payoff
from .pricing import price

log = logging.getLogger("numeraire_mot")

EXIT_OK, EXIT_FAILED, EXIT_ASSUMPTION, EXIT_NUMERICS, EXIT_CONFIG = 0, 1, 2, 3, 4

PLANS = ("hk", "left", "right")


@dataclass
class RunConfig:
    mu: str = "lognormal:sigma=0.2"
    nu: str = "lognormal:sigma=0.3"
    payoff: str = "straddle2:alpha=1"
    plan: str = "hk"
    grid: int = config.GRID_POINTS
    atoms: int = 100
    out: Optional[Path] = None
    json: bool = False
    suite: str = "all"
    fixtures: list = field(default_factory=list)
    marginal_tol: float = config.MARGINAL_TOL
    martingale_tol: float = config.MARTINGALE_TOL

    def validate(self) -> "RunConfig":
        try:
            self.mu_law = parse_marginal(self.mu)
            self.nu_law = parse_marginal(self.nu)
            self.payoff_fn = parse_payoff(self.payoff)
        except (ValueError, DomainError, OSError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.plan not in PLANS:
            raise ConfigError(f"plan must be one of {PLANS}, got {self.plan!r}")
        if self.grid < 8 or self.atoms < 2:
            raise ConfigError("grid must be >= 8 and atoms >= 2")
        if not (self.marginal_tol > 0 and self.martingale_tol > 0):
            raise ConfigError("tolerances must be positive")
        if self.suite not in checks.SUITES + ("all",):
            raise ConfigError(f"unknown suite {self.suite!r}")
        return self


def read_config(path: Path) -> dict:
    """[mu] [nu] [payoff] sections take ``spec = ...``; [run] holds everything else."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for sec in ("mu", "nu", "payoff"):
        if parser.has_section(sec):
            if "spec" not in parser[sec]:
                raise ConfigError(f"section [{sec}] needs 'spec = ...'")
            out[sec] = parser[sec]["spec"]
    if parser.has_section("run"):
        run = parser["run"]
        casts = {"plan": str, "grid": int, "atoms": int, "out": Path, "suite": str,
                 "marginal_tol": float, "martingale_tol": float}
        for key, val in run.items():
            if key != "json" and key not in casts:
                raise ConfigError(f"unknown [run] key {key!r}")
            try:
                out[key] = run.getboolean(key) if key == "json" else casts[key](val)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {val!r}") from exc
    return out


def make_config(args: argparse.Namespace) -> RunConfig:
    values = read_config(Path(args.config)) if args.config else {}
    for key in ("mu", "nu", "payoff", "plan", "grid", "atoms", "out", "suite"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = Path(v) if key == "out" else v
    if getattr(args, "json", False):
        values["json"] = True
    if getattr(args, "fixture", None):
        values["fixtures"] = list(args.fixture)
    return RunConfig(**values).validate()


# --------------------------------------------------------------------------
# output helpers


def write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["%.12g" % v for v in row])


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def emit(cfg: RunConfig, obj: dict, text: str) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True) if cfg.json else text)


# --------------------------------------------------------------------------
# commands


def cmd_profile(cfg: RunConfig) -> int:
    d = delta_profile(cfg.mu_law, cfg.nu_law)
    out = cfg.out or Path(".")
    write_csv(out / "deltaF.csv", ["x", "deltaF", "deltaG"], zip(d.x, d.dF, d.dG))
    info = {"m": d.m, "m_tilde": d.m_tilde, "product": d.m * d.m_tilde, "plateau_width": d.plateau_width,
            "max_deltaF": d.max_value, "min_deltaF": d.min_value}
    if isinstance(cfg.mu_law, LogNormal) and isinstance(cfg.nu_law, LogNormal):
        m, mt = lognormal_extremizer_closed_form(cfg.mu_law.sigma, cfg.nu_law.sigma)
        info["closed_form"] = {"m": m, "m_tilde": mt}
    write_json(out / "extremizers.json", info)
    emit(cfg, info, f"m = {d.m:.12g}\nm_tilde = {d.m_tilde:.12g}\nm * m_tilde = {d.m * d.m_tilde:.12g}")
    return EXIT_OK


def build_plan(cfg: RunConfig):
    if cfg.plan == "hk":
        return cp.build_hk(cfg.mu_law, cfg.nu_law, cfg.grid)
    if cfg.plan == "left":
        return cp.build_left_monotone(cfg.mu_law, cfg.nu_law, cfg.grid)
    return cp.build_right_monotone(cfg.mu_law, cfg.nu_law, cfg.grid)


def plan_rows(k, n_identity: int = 64):
    """Header and rows for a plan's CSV export, identity rows included for curtains."""
    if isinstance(k, cp.ThreeBandKernel):
        return ["x", "p", "q", "l", "u"], zip(k.nodes, k.p.ordinates, k.q.ordinates,
                                                k.l.ordinates, k.u.ordinates)
    names = {"left": ["x", "Ld", "Lu", "qL"], "right": ["x", "Rd", "Ru", "qR"]}[k.direction]
    split = list(zip(k.nodes, k.T_d.ordinates, k.T_u.ordinates, k.prob.ordinates))
    if k.direction == "left":
        xs = np.geomspace(k.mu.lower(), k.x_star, n_identity + 1)[:-1]
        ident = [(x, x, x, 1.0) for x in xs]
        return names, ident + split
    xs = np.geomspace(k.x_star, k.mu.upper(), n_identity + 1)[1:]
    ident = [(x, x, x, 0.0) for x in xs]
    return names, split + ident


def cmd_build(cfg: RunConfig) -> int:
    k = build_plan(cfg)
    header, rows = plan_rows(k)
    write_csv((cfg.out or Path(".")) / f"{cfg.plan}.csv", header, rows)
    r = cp.validate_coupling(k)
    info = {"plan": cfg.plan, "nodes": int(len(k.nodes)), "flagged": len(k.flagged),
            "marginal_err": r.marginal_err, "martingale_err": r.martingale_err,
            "untabulated_mass": r.untabulated_mass}
    emit(cfg, info, "\n".join(f"{a} = {b}" for a, b in info.items()))
    if not r.ok(cfg.marginal_tol, cfg.martingale_tol):
        log.error("built plan fails validation")
        return EXIT_NUMERICS
    return EXIT_OK


def cmd_price(cfg: RunConfig) -> int:
    k = build_plan(cfg)
    r = price(k, cfg.payoff_fn)
    info = {"plan": cfg.plan, "payoff": cfg.payoff_fn.name, "value": r.value, "error": r.error,
            "tail_bound": r.tail_bound}
    emit(cfg, info, f"value = {r.value:.12g}\nerror = {r.error:.3g}\ntail_bound = {r.tail_bound:.3g}")
    return EXIT_OK


def cmd_bounds(cfg: RunConfig) -> int:
    inst = lp.quantized_instance(cfg.mu_law, cfg.nu_law, cfg.payoff_fn, cfg.atoms)
    lo, hi = lp.solve_bounds(inst, lp.MIN), lp.solve_bounds(inst, lp.MAX)
    info = {"payoff": cfg.payoff_fn.name, "atoms": cfg.atoms, "min": lo.value, "max": hi.value,
            "duality_gap": max(lo.duality_gap, hi.duality_gap),
            "hedge_violation": max(lp.check_hedge(inst, lo.hedge, lp.MIN).max_violation,
                                   lp.check_hedge(inst, hi.hedge, lp.MAX).max_violation)}
    if cfg.out:
        for r in (lo, hi):
            write_csv(cfg.out / f"hedge_{r.direction}_x.csv", ["x", "phi", "h"],
                      zip(inst.x_atoms, r.hedge.phi, r.hedge.h))
            write_csv(cfg.out / f"hedge_{r.direction}_y.csv", ["y", "psi"], zip(inst.y_atoms, r.hedge.psi))
        lp.dump_instance(inst, cfg.out / "instance.txt")
    emit(cfg, info, "\n".join(f"{a} = {b}" for a, b in info.items()))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    fixtures = None
    if cfg.fixtures:
        try:
            fixtures = {Path(p).stem: lp.load_instance(p) for p in cfg.fixtures}
        except (OSError, ValueError, DomainError) as exc:
            raise ConfigError(f"bad fixture: {exc}") from exc
    results = checks.run_suite(cfg.suite, cfg.mu_law, cfg.nu_law, cfg.grid, fixtures)
    ok = all(c.passed for c in results)
    summary = {"suite": cfg.suite, "passed": ok, "checks": [c.as_dict() for c in results]}
    text = "\n".join(f"{'PASS' if c.passed else 'FAIL'} {c.name} {c.value:.3g} (tol {c.tol:g}) {c.detail}".rstrip()
                     for c in results)
    emit(cfg, summary, text)
    return EXIT_OK if ok else EXIT_FAILED


COMMANDS = {
    "profile": cmd_profile,
    "build": cmd_build,
    "price": cmd_price,
    "bounds": cmd_bounds,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="numeraire-mot", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="key = value config with [mu] [nu] [payoff] [run] sections")
        s.add_argument("--mu", help="marginal spec, e.g. lognormal:sigma=0.2")
        s.add_argument("--nu", help="marginal spec")
        s.add_argument("--payoff", help="payoff spec, e.g. straddle2:alpha=1")
        s.add_argument("--plan", choices=PLANS)
        s.add_argument("--grid", type=int, help="nodes per plan")
        s.add_argument("--atoms", type=int, help="quantisation size for LP bounds")
        s.add_argument("--out", help="output directory")
        s.add_argument("--json", action="store_true", help="machine-readable output")
        if name == "verify":
            s.add_argument("--suite", choices=checks.SUITES + ("all",))
            s.add_argument("--fixture", action="append", help="LP instance file with expected_min/max")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AssumptionViolated, Infeasible, MeanMismatch, NoDensity) as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (NumericsFailure, NoConvergence, BracketError, DegenerateBasis, MethodMismatch,
            OutOfRange, Unbounded) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
