"""Command-line front end: ``spinlab <command> [options]``.

Every option can also come from a ``key=value`` config file (``--config``) or from an
environment variable ``SPINLAB_<KEY>`` (upper case, dashes as underscores).  Precedence is
command line, then environment, then config file, then preset, then built-in default.

Output is deterministic: no timestamps, reals printed with 17 significant digits, LF line
endings, sorted JSON keys.  Every output carries the resolved configuration as metadata
(``# key=value`` lines for csv/kv, a ``metadata`` object for json).

Exit codes: 0 success, 2 invalid options or inputs, 1 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from importlib import metadata
from typing import Any, Callable

import numpy as np
import scipy

from . import algebraic_states as alg
from . import quantum_probability as qp
from .chain_model import (
    Boundary,
    ChainSpec,
    Model,
    build_quadratic_form,
    dispersion,
    momentum_grid,
    open_bc_real_roots,
)
from . import entanglement as ent
from .entanglement import entropy_thermo_profile, fit_central_charge, ground_state_report
from .errors import InvalidSpecError, InvalidStateError, NotApplicableError, NumericalInconsistencyError
from .free_fermion import solve
from .scaling import CollapseFit, SweepResult, collapse, sweep

log = logging.getLogger("spinlab")

ENV_PREFIX = "SPINLAB_"
EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2
ROOT_MATCH_TOL = 1e-8


class UsageError(Exception):
    """Invalid options; mapped to exit code 2."""


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def parse_bool(text: str) -> bool:
    val = str(text).strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_grid(text: str, kind: Callable = float) -> list:
    """``start:stop:step`` (stop included), a comma list, or a single value."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"grid {text!r} needs step > 0 and stop >= start")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        vals = [round(start + i * step, 12) for i in range(n)]
    else:
        vals = [float(p) for p in text.split(",") if p.strip()]
    if not vals:
        raise ValueError("empty grid")
    if kind is int:
        if any(v != int(v) for v in vals):
            raise ValueError(f"grid {text!r} must contain integers")
        return [int(v) for v in vals]
    return vals


def parse_range(text: str) -> tuple[float, float]:
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ValueError(f"range must be lo:hi, got {text!r}")
    lo, hi = float(parts[0]), float(parts[1])
    if hi <= lo:
        raise ValueError(f"range {text!r} needs hi > lo")
    return lo, hi


@dataclass(frozen=True)
class Opt:
    key: str
    parse: Callable[[str], Any]
    default: Any
    help: str
    choices: tuple | None = None
    flag: bool = False

    @property
    def dest(self) -> str:
        return self.key.replace("-", "_")


def _common_opts(formats, default_format):
    return [
        Opt("format", str, default_format, "output format", choices=formats),
        Opt("output", str, "-", "output path ('-' for stdout)"),
        Opt("log2", parse_bool, False, "report entropies in bits", flag=True),
        Opt("seed", int, 0, "seed for randomised steps"),
        Opt("threads", int, os.cpu_count() or 1, "worker threads for sweeps"),
    ]


CHAIN_OPTS = [
    Opt("model", str, "ising", "chain family", choices=("ising", "xy")),
    Opt("gamma", float, 1.0, "XY anisotropy (ignored for ising)"),
    Opt("boundary", str, "periodic", "boundary condition", choices=("open", "periodic")),
    Opt("parity", str, "even", "fermion-parity sector of periodic chains", choices=("even", "odd")),
]

COMMANDS = {
    "spectrum": [
        *CHAIN_OPTS,
        Opt("n", int, 8, "number of sites"),
        Opt("lambda", float, 1.0, "transverse field"),
        Opt("matrix", parse_bool, False, "take open-chain energies from the matrix eigensolve", flag=True),
        *_common_opts(("csv", "json"), "csv"),
    ],
    "entropy-scan": [
        Opt("preset", str, None, "parameter preset", choices=("xx-critical", "ising-critical", "off-critical")),
        Opt("method", str, "thermo", "infinite-chain or finite-chain route", choices=("thermo", "finite")),
        Opt("lambda", lambda t: parse_grid(t, float), [1.0], "field grid start:stop:step"),
        Opt("gamma", float, 1.0, "XY anisotropy"),
        Opt("L", lambda t: parse_grid(t, int), list(range(16, 257, 16)), "block-length grid"),
        Opt("n", int, 512, "chain length for the finite route"),
        Opt("model", str, "xy", "chain family for the finite route", choices=("ising", "xy")),
        Opt("boundary", str, "periodic", "boundary for the finite route", choices=("open", "periodic")),
        Opt("quadrature", int, 4096, "quadrature nodes (raised automatically at criticality)"),
        Opt("fit-c", parse_bool, False, "append a fitted central-charge row per parameter point", flag=True),
        *_common_opts(("csv", "json"), "csv"),
    ],
    "schmidt": [
        *CHAIN_OPTS,
        Opt("n", lambda t: parse_grid(t, int), [10], "system sizes (even)"),
        Opt("lambda", lambda t: parse_grid(t, float), parse_grid("0:2:0.05"), "field grid"),
        *_common_opts(("csv", "json"), "csv"),
    ],
    "collapse": [
        Opt("input", str, None, "sweep CSV produced by 'schmidt'"),
        Opt("lambda-c", float, 1.0, "critical field"),
        Opt("window", float, 0.1, "half-width of the field window around lambda-c"),
        Opt("knots", int, 8, "interior knots of the master-curve spline"),
        Opt("mu1-range", parse_range, (0.0, 0.4), "coarse-grid range for mu1"),
        Opt("mu2-range", parse_range, (0.5, 1.5), "coarse-grid range for mu2"),
        *_common_opts(("json", "csv", "kv"), "json"),
    ],
    "bell": [
        Opt("violating-angles", parse_bool, False, "use phi=(0, pi/3), theta=(pi/2, pi/6)", flag=True),
        Opt("phi1", float, 0.0, "left polarizer angle 1"),
        Opt("phi2", float, math.pi / 3, "left polarizer angle 2"),
        Opt("theta1", float, math.pi / 2, "right polarizer angle 1"),
        Opt("theta2", float, math.pi / 6, "right polarizer angle 2"),
        Opt("chsh", parse_bool, False, "also maximise CHSH over unit vectors in psi_lambda", flag=True),
        Opt("lambda", float, 0.5, "psi_lambda parameter for --chsh"),
        *_common_opts(("kv", "json", "csv"), "kv"),
    ],
    "gns": [
        Opt("preset", str, "m2-lambda", "example algebra and state", choices=("m2-lambda", "two-fermion")),
        Opt("lambda", float, 0.5, "weight of e_11 in the m2-lambda state"),
        Opt("theta", float, 0.0, "mixing angle of the two-fermion state"),
        *_common_opts(("kv", "json", "csv"), "kv"),
    ],
}

PRESETS = {
    "xx-critical": {"lambda": [0.5], "gamma": 0.0},
    "ising-critical": {"lambda": [1.0], "gamma": 1.0},
    "off-critical": {"lambda": [0.5], "gamma": 0.5, "L": list(range(10, 201, 10))},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinlab", description="Free-fermion spin chains and algebraic states.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key=value config file")
        for o in opts:
            if o.flag:
                p.add_argument(f"--{o.key}", dest=o.dest, action="store_const", const=True, default=None, help=o.help)
            else:
                p.add_argument(f"--{o.key}", dest=o.dest, default=None, help=o.help, choices=o.choices,
                               metavar=o.key.upper().replace("-", "_") if o.choices is None else None)
    return parser


def read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc
    for num, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{num}: expected key=value")
        out[key.strip()] = val.strip()
    return out


def resolve(command: str, args: argparse.Namespace, env=None) -> dict[str, Any]:
    """Merge command line, environment, config file, preset and defaults."""
    env = os.environ if env is None else env
    opts = {o.key: o for o in COMMANDS[command]}
    config = read_config(args.config) if args.config else {}
    unknown = sorted(set(config) - set(opts))
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")

    def convert(o, raw, source):
        if o.flag and isinstance(raw, bool):
            return raw
        try:
            val = o.parse(raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid value for {o.key} from {source}: {exc}") from exc
        if o.choices is not None and val not in o.choices:
            raise UsageError(f"{o.key} must be one of {', '.join(o.choices)} (from {source})")
        return val

    resolved = {}
    for key, o in opts.items():
        cli_val = getattr(args, o.dest)
        env_val = env.get(ENV_PREFIX + o.dest.upper())
        if cli_val is not None:
            resolved[key] = convert(o, cli_val, "command line")
        elif env_val is not None:
            resolved[key] = convert(o, env_val, "environment")
        elif key in config:
            resolved[key] = convert(o, config[key], "config file")
        else:
            resolved[key] = None
    preset = PRESETS.get(resolved.get("preset")) or {}
    for key, o in opts.items():
        if resolved[key] is None:
            resolved[key] = preset.get(key, o.default)
    if resolved["threads"] < 1:
        raise UsageError("threads must be >= 1")
    return resolved


def _versions() -> dict[str, str]:
    try:
        own = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"version": own, "numpy": np.__version__, "scipy": scipy.__version__}


def _tolerances() -> dict[str, str]:
    tols = {
        "artanh_guard": ent.ARTANH_GUARD,
        "rho_cutoff": ent.RHO_CUTOFF,
        "singular_value": ent.SV_TOL,
        "gns_null": alg.NULL_TOL,
        "root_match": ROOT_MATCH_TOL,
    }
    return {f"tol.{k}": _fmt(v) for k, v in tols.items()}


def _meta(command: str, cfg: dict) -> dict[str, str]:
    meta = {"command": command, **_versions(), **_tolerances()}
    for key, val in cfg.items():
        if key == "output":
            continue
        if isinstance(val, (list, tuple)):
            val = ",".join(_fmt(v) for v in val)
        meta[f"config.{key}"] = "" if val is None else _fmt(val)
    return meta


@dataclass
class Table:
    header: list[str]
    rows: list[list]
    extra_meta: dict | None = None


def render(table: Table, fmt: str, meta: dict) -> str:
    meta = {**meta, **(table.extra_meta or {})}
    if fmt == "json":
        rows = [dict(zip(table.header, (_json_value(v) for v in row))) for row in table.rows]
        return json.dumps({"metadata": meta, "rows": rows}, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}={meta[key]}\n")
    if fmt == "kv":
        for row in table.rows:
            for k, v in zip(table.header, row):
                buf.write(f"{k}={_fmt(v)}\n")
        return buf.getvalue()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def _chain_spec(cfg, n, lam) -> ChainSpec:
    boundary = Boundary(cfg["boundary"])
    parity = cfg["parity"] if boundary is Boundary.PERIODIC else None
    return ChainSpec(Model(cfg["model"]), n, lam, cfg["gamma"], boundary, parity)


def cmd_spectrum(cfg) -> Table:
    spec = _chain_spec(cfg, cfg["n"], cfg["lambda"])
    if spec.boundary is Boundary.PERIODIC:
        phis = momentum_grid(spec).phis
        lams = dispersion(spec, phis)
        return Table(["k", "phi", "lambda_k"], [[k, p, l] for k, (p, l) in enumerate(zip(phis, lams))])
    matrix_lams = solve(build_quadratic_form(spec)).lambdas
    if cfg["matrix"]:
        return Table(["k", "phi", "lambda_k"], [[k, math.nan, l] for k, l in enumerate(matrix_lams)])
    if spec.model is not Model.ISING:
        raise UsageError("open XY chains have no root equation here; pass --matrix")
    if spec.lam == 0:
        raise UsageError("the open-chain root equation needs lambda != 0; pass --matrix")
    roots = open_bc_real_roots(spec)
    bulk = dispersion(spec, roots)
    n_edge = spec.n_sites - len(roots)
    edge = matrix_lams[:n_edge]
    if np.max(np.abs(np.sort(np.concatenate([edge, bulk])) - matrix_lams)) > ROOT_MATCH_TOL * max(1.0, matrix_lams[-1]):
        raise NumericalInconsistencyError("root-equation energies disagree with the matrix eigensolve")
    rows = [[k, p, l] for k, (p, l) in enumerate(zip(roots, bulk))]
    rows += [[len(roots) + j, math.nan, l] for j, l in enumerate(edge)]
    return Table(["k", "phi", "lambda_k"], rows)


def cmd_entropy_scan(cfg) -> Table:
    scale = 1.0 / math.log(2.0) if cfg["log2"] else 1.0
    Ls = sorted(set(cfg["L"]))
    if min(Ls) < 1:
        raise UsageError("block lengths must be >= 1")
    rows = []
    for lam in cfg["lambda"]:
        gamma = 1.0 if cfg["method"] == "finite" and cfg["model"] == "ising" else cfg["gamma"]
        if cfg["method"] == "thermo":
            S = entropy_thermo_profile(lam, gamma, Ls, cfg["quadrature"])
        else:
            if max(Ls) > cfg["n"]:
                raise UsageError("block length exceeds the chain length")
            spec = _chain_spec({**cfg, "parity": "even"}, cfg["n"], lam)
            S = np.array([ground_state_report(spec, L).entropy for L in Ls])
        rows += [[lam, gamma, L, s * scale] for L, s in zip(Ls, S)]
        if cfg["fit-c"]:
            c, _, _ = fit_central_charge(np.column_stack([Ls, S]))
            rows.append([lam, gamma, "c_fit", c])
    return Table(["lambda", "gamma", "L", "entropy"], rows)


def cmd_schmidt(cfg) -> SweepResult:
    template = _chain_spec(cfg, 2, 0.0)
    base = 2.0 if cfg["log2"] else None
    return sweep(cfg["n"], cfg["lambda"], template=template, threads=cfg["threads"], base=base)


def cmd_collapse(cfg) -> Table:
    if not cfg["input"]:
        raise UsageError("collapse needs --input")
    try:
        with open(cfg["input"], encoding="utf-8") as fh:
            data = SweepResult.from_csv(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read {cfg['input']!r}: {exc}") from exc
    fit: CollapseFit = collapse(data, cfg["lambda-c"], box=(cfg["mu1-range"], cfg["mu2-range"]),
                                window=cfg["window"], n_knots=cfg["knots"])
    return Table(
        ["mu1", "mu2", "cost", "nu_est", "beta_est", "n_points"],
        [[fit.mu1, fit.mu2, fit.cost, fit.nu_est, fit.beta_est, fit.n_points]],
    )


def cmd_bell(cfg) -> Table:
    if cfg["violating-angles"]:
        phis, thetas = qp.VIOLATING_ANGLES
    else:
        phis, thetas = (cfg["phi1"], cfg["phi2"]), (cfg["theta1"], cfg["theta2"])
    chk = qp.bell_check(phis, thetas)
    header = ["lhs", "rhs", "violated"]
    row = [chk.lhs, chk.rhs, chk.violated]
    if cfg["chsh"]:
        val, _ = qp.maximize_chsh(cfg["lambda"], seed=cfg["seed"])
        header += ["chsh_max"]
        row += [val]
    return Table(header, [row])


def cmd_gns(cfg) -> Table:
    if cfg["preset"] == "m2-lambda":
        algebra, state = alg.m2_lambda(cfg["lambda"])
    else:
        _, big_state, algebra = alg.two_fermion(cfg["theta"])
        state = alg.restrict_state(big_state, algebra)
    res = alg.gns(algebra, state, seed=cfg["seed"])
    irreducible, kdim = alg.purity_report(res)
    entropy = res.entropy / math.log(2.0) if cfg["log2"] else res.entropy
    return Table(
        ["algebra_dim", "hilbert_dim", "n_blocks", "commutant_dim", "irreducible", "entropy"],
        [[algebra.dim, res.hilbert_dim, res.n_blocks, kdim, irreducible, entropy]],
    )


HANDLERS = {
    "spectrum": cmd_spectrum,
    "entropy-scan": cmd_entropy_scan,
    "schmidt": cmd_schmidt,
    "collapse": cmd_collapse,
    "bell": cmd_bell,
    "gns": cmd_gns,
}


def run(argv=None, env=None) -> tuple[int, str]:
    """Execute one command; returns (exit code, text destined for stdout).

    When an output path is configured the text goes to that file instead and the
    returned text is empty.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), ""
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args.command, args, env)
        out = HANDLERS[args.command](cfg)
        meta = _meta(args.command, cfg)
        if isinstance(out, SweepResult):
            res = SweepResult(rows=out.rows, metadata={**out.metadata, **meta}, failures=out.failures)
            text = res.to_json() if cfg["format"] == "json" else res.to_csv()
        else:
            text = render(out, cfg["format"], meta)
    except (UsageError, InvalidSpecError, InvalidStateError, NotApplicableError) as exc:
        print(f"spinlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE, ""
    except (NumericalInconsistencyError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"spinlab: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL, ""
    if cfg["output"] != "-":
        try:
            with open(cfg["output"], "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"spinlab: error: cannot write {cfg['output']!r}: {exc}", file=sys.stderr)
            return EXIT_USAGE, ""
        return EXIT_OK, ""
    return EXIT_OK, text


def main(argv=None) -> int:
    code, text = run(argv)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
