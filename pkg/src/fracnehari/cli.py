"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``) whose keys
are listed in :data:`CONFIG_KEYS`; flags given on the command line win.
Exit codes: 0 success, 1 usage or config error, 2 failed verification,
3 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .experiments import (default_grid, explore_2nlfs_fkdv, sweep,
                          verify_theorem_ground_state_beta_large, verify_theorem_lambda2_large,
                          verify_n_system, Report)
from .model import SystemParams, Variant
from .nehari import NonConvergenceError, SolveOptions, initial_guesses, minimize_on_nehari
from .scalar_gs import quadratic_ground_state, scalar_residual, solve_scalar
from .spectral import GridSpec, ParameterDomainError, SymbolKind
from .spectrum import IndeterminateClassificationError, classify_semitrivial, lambda_threshold
from .storage import save_field

__all__ = ["Config", "ConfigError", "run_cli", "main", "CONFIG_VERSION", "EXIT_OK",
           "EXIT_USAGE", "EXIT_VERIFY", "EXIT_NONCONVERGENCE"]

log = logging.getLogger(__name__)

CONFIG_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_NONCONVERGENCE = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    """Run configuration.  ``None`` means "use the scenario default"."""

    version: int = CONFIG_VERSION
    s: float = 0.5
    n: int = 1
    variant: str = Variant.TWO_EQ.value
    lambda1: float = 1.0
    lambda2: float = 1.0
    beta: float | None = None
    lambda0: float | None = None
    lambdas: list[float] | None = None
    betas: list[float] | None = None
    grid_n: int | None = None
    box: float | None = None
    symbol: str = SymbolKind.CONTINUUM.value
    tol: float = 1e-8
    max_iters: int = 5000
    restarts: int = 4
    seed: int = 0
    jobs: int = 1
    power: int = 2
    coeff: float | None = None
    mode: str = "BetaAboveThresholds"
    sweep_key: str = "beta"
    sweep_values: list[float] | None = None
    lambda2_values: list[float] | None = None
    bracket: list[float] | None = None
    out: str | None = None
    cache: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "version" not in d:
            raise ConfigError("config must carry a 'version' key")
        if d["version"] != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {d['version']!r}")
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    # -- derived objects --
    def grid(self) -> GridSpec:
        base = default_grid(self.n)
        N = self.grid_n or base.points_per_dim
        L = self.box or base.box_length
        return GridSpec(self.n, N, L, SymbolKind(self.symbol))

    def options(self) -> SolveOptions:
        return SolveOptions(tol=self.tol, max_iters=self.max_iters, restarts=self.restarts,
                            seed=self.seed, jobs=self.jobs)

    def params(self, default_beta: float = 0.0) -> SystemParams:
        variant = Variant(self.variant)
        beta = default_beta if self.beta is None else self.beta
        if variant is Variant.TWO_EQ:
            return SystemParams.two_eq(self.s, self.lambda1, self.lambda2, beta, self.n)
        if variant is Variant.STAR_N_EQ:
            lams = self.lambdas or [self.lambda2, self.lambda2]
            bets = self.betas or [beta] * len(lams)
            lam0 = self.lambda0 if self.lambda0 is not None else self.lambda1
            return SystemParams.star(self.s, lam0, lams, bets, self.n)
        lams = self.lambdas or [self.lambda1, self.lambda1, self.lambda2]
        bets = self.betas or [beta, beta, beta]
        return SystemParams.two_nlfs_fkdv(self.s, *lams, *bets, n=self.n)


CONFIG_KEYS = tuple(f.name for f in fields(Config))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("configuration (flags override --config)")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--s", type=float, help="fractional exponent")
    g.add_argument("--n", type=int, help="spatial dimension")
    g.add_argument("--variant", choices=[v.value for v in Variant])
    g.add_argument("--lambda1", type=float)
    g.add_argument("--lambda2", type=float)
    g.add_argument("--lambda0", type=float, help="centre frequency of a star system")
    g.add_argument("--lambdas", type=float, nargs="+", help="frequencies of a multi-component system")
    g.add_argument("--beta", type=float, help="coupling constant")
    g.add_argument("--betas", type=float, nargs="+", help="couplings of a multi-component system")
    g.add_argument("--grid-n", dest="grid_n", type=int, help="points per dimension")
    g.add_argument("--box", type=float, help="box length L")
    g.add_argument("--symbol", choices=[k.value for k in SymbolKind])
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iters", dest="max_iters", type=int)
    g.add_argument("--restarts", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--jobs", type=int, help="worker processes for restarts and sweeps")
    g.add_argument("--out", help="output directory")
    g.add_argument("--cache", action="store_true", default=None,
                   help="use the scalar ground-state cache (NEHARI_CACHE_DIR)")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fracnehari", description="Ground states of coupled fractional systems.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("solve-scalar", help="scalar ground state")
    _common(sp)
    sp.add_argument("--power", type=int, choices=(2, 3))
    sp.add_argument("--coeff", type=float)

    _common(sub.add_parser("solve", help="coupled minimization on the Nehari manifold"))
    _common(sub.add_parser("lambda", help="coupling threshold Lambda"))
    _common(sub.add_parser("classify", help="classify the semi-trivial solution"))

    vp = sub.add_parser("verify", help="run a named theorem scenario")
    vp.add_argument("scenario", choices=("th1", "th2", "th3", "th5", "explore-2nlfs"))
    _common(vp)
    vp.add_argument("--mode", choices=("BetaAboveThresholds", "LambdasLarge"))
    vp.add_argument("--lambda2-values", dest="lambda2_values", type=float, nargs="+")
    vp.add_argument("--bracket", type=float, nargs=2)

    wp = sub.add_parser("sweep", help="solve along one parameter; CSV output")
    _common(wp)
    wp.add_argument("--key", dest="sweep_key", choices=("beta", "lambda1", "lambda2", "s"))
    wp.add_argument("--values", dest="sweep_values", type=float, nargs="+")

    cp = sub.add_parser("check", help="operator and solver invariant suite")
    cp.add_argument("--seed", type=int, default=0)
    return p


def _config_from_args(ns: argparse.Namespace) -> Config:
    cfg = Config.load(ns.config) if getattr(ns, "config", None) else Config()
    overrides = {k: v for k, v in vars(ns).items() if k in CONFIG_KEYS and v is not None}
    return replace(cfg, **overrides)


def _emit(payload: dict, out: str | None, name: str):
    text = json.dumps(payload, sort_keys=True, indent=2, default=_default)
    print(text)
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / name).write_text(text)


def _default(o):
    if hasattr(o, "value"):
        return o.value
    if hasattr(o, "item"):
        return o.item()
    if hasattr(o, "tolist"):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def _cmd_solve_scalar(cfg: Config) -> int:
    grid = cfg.grid()
    lam = cfg.lambda2 if cfg.lambda2 is not None else cfg.lambda1
    coeff = cfg.coeff if cfg.coeff is not None else 1.0
    opts = replace(cfg.options(), enforce_positivity=False, tol=min(cfg.tol, 1e-10),
                   max_iters=max(cfg.max_iters, 20000), restarts=1)
    v = solve_scalar(cfg.s, lam, grid, opts, power=cfg.power, coeff=coeff)
    res = scalar_residual(v, cfg.s, lam, cfg.power, coeff)
    payload = {"s": cfg.s, "n": cfg.n, "lambda": lam, "power": cfg.power, "coeff": coeff,
               "grid": grid.to_dict(), "max": v.max(), "min": v.min(), "residual": res}
    if cfg.out:
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        save_field(Path(cfg.out) / "scalar.fld", v, s=cfg.s)
    _emit(payload, cfg.out, "scalar.json")
    return EXIT_OK


def _cmd_solve(cfg: Config) -> int:
    params = cfg.params()
    grid = cfg.grid()
    opts = cfg.options()
    res = minimize_on_nehari(params, initial_guesses(params, grid, opts.seed, opts.restarts),
                             opts)
    if cfg.out:
        d = Path(cfg.out)
        d.mkdir(parents=True, exist_ok=True)
        for j, f in enumerate(res.state):
            save_field(d / f"component{j}.fld", f, s=cfg.s)
        (d / "trace.csv").write_text(res.trace_csv())
    _emit({"params": params.to_dict(), "grid": grid.to_dict(), "result": res.summary()},
          cfg.out, "solve.json")
    return EXIT_OK


def _cmd_lambda(cfg: Config) -> int:
    grid = cfg.grid()
    v2 = quadratic_ground_state(cfg.s, cfg.lambda2, grid, cache=cfg.cache or None)
    thr = lambda_threshold(cfg.s, cfg.lambda1, v2, lambda2=cfg.lambda2)
    _emit(thr.report(), cfg.out, "lambda.json")
    return EXIT_OK


def _cmd_classify(cfg: Config) -> int:
    params = cfg.params()
    if params.variant is not Variant.TWO_EQ:
        raise ConfigError("classify handles the two-equation system; use verify explore-2nlfs")
    grid = cfg.grid()
    v2 = quadratic_ground_state(cfg.s, cfg.lambda2, grid, cache=cfg.cache or None)
    cls = classify_semitrivial(params, grid=grid, v2=v2, seed=cfg.seed)
    _emit({"beta": params.beta, **cls.report()}, cfg.out, "classify.json")
    return EXIT_OK


def _cmd_verify(cfg: Config, scenario: str) -> int:
    grid = cfg.grid()
    opts = cfg.options()
    cache = cfg.cache or None
    out = Path(cfg.out) if cfg.out else None
    if scenario == "th1":
        rep = verify_theorem_ground_state_beta_large(cfg.params(default_beta=10.0), grid, opts,
                                                     cache=cache, out_dir=out)
    elif scenario == "th2":
        kw = {}
        if cfg.lambda2_values:
            kw["lambda2_values"] = tuple(cfg.lambda2_values)
        if cfg.bracket:
            kw["bracket"] = tuple(cfg.bracket)
        rep = verify_theorem_lambda2_large(cfg.params(default_beta=0.3), grid=grid, opts=opts,
                                           cache=cache, out_dir=out, **kw)
    elif scenario in ("th3", "th5"):
        c = cfg
        if scenario == "th3" or Variant(cfg.variant) is Variant.TWO_EQ:
            c = replace(cfg, variant=Variant.STAR_N_EQ.value)
        rep = verify_n_system(c.params(default_beta=10.0), cfg.mode, grid, opts, cache=cache,
                              out_dir=out)
    else:
        c = replace(cfg, variant=Variant.TWO_NLFS_FKDV.value)
        rep = explore_2nlfs_fkdv(c.params(default_beta=0.0), grid, opts, cache=cache)
    if out is not None and not (out / "report.json").exists():
        rep.write(out)
    print(rep.to_json(indent=2))
    if rep.status in ("pass", "exploratory"):
        return EXIT_OK
    return EXIT_VERIFY


def _cmd_sweep(cfg: Config) -> int:
    if not cfg.sweep_values:
        raise ConfigError("sweep needs --values (or sweep_values in the config)")
    out = Path(cfg.out) if cfg.out else None
    csv_path = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "sweep.csv"
    rows = sweep(cfg.params(), cfg.sweep_key, cfg.sweep_values, cfg.grid(), cfg.options(),
                 jobs=cfg.jobs, cache=cfg.cache or None, csv_path=csv_path)
    print(json.dumps(rows, sort_keys=True, indent=2, default=_default))
    return EXIT_OK


def _cmd_check(seed: int) -> int:
    from .checks import run_checks
    results = run_checks(seed)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_VERIFY


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING)
    try:
        if ns.command == "check":
            return _cmd_check(ns.seed)
        cfg = _config_from_args(ns)
        if ns.command == "solve-scalar":
            return _cmd_solve_scalar(cfg)
        if ns.command == "solve":
            return _cmd_solve(cfg)
        if ns.command == "lambda":
            return _cmd_lambda(cfg)
        if ns.command == "classify":
            return _cmd_classify(cfg)
        if ns.command == "verify":
            return _cmd_verify(cfg, ns.scenario)
        return _cmd_sweep(cfg)
    except (ConfigError, ParameterDomainError, IndeterminateClassificationError,
            TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


def main() -> None:
    sys.exit(run_cli())
