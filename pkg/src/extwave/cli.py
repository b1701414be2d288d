"""Command-line entry point: ``extwave <subcommand> [options]``.

Every subcommand accepts ``--config FILE`` (plain ``key=value`` lines; keys
may carry a ``<subcommand>.`` prefix, solver settings use ``solver.``),
``--out DIR`` and ``--seed N``.  Command-line flags override the file.
Exit status: 0 pass, 2 certificate or threshold failure, 1 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import kernel_verifier as kv
from . import lifespan as ls
from .certificates import BoundCertificate, certificates_to_csv
from .exterior_solver import RunRecord, SolverConfig, parse_key_values, run
from .exterior_solver.decomposition import REFERENCE_PROBES, decomposition_convergence
from .exterior_solver.diagnostics import fit_local_energy_decay
from .exterior_solver.estimates import certify_elliptic, certify_sobolev
from .free_propagator import BUILTIN_DATA, k0_eval, verify_homogeneous_decay
from .geometry import Obstacle
from .weights import certify_weight_inequality

EXIT_PASS, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
SUBCOMMANDS = ("weights-certify", "kernel-verify", "propagate", "solve", "decay-fit",
               "decompose-check", "lifespan-sweep", "estimate-certify")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# value parsing ---------------------------------------------------------------

def parse_number(text) -> float:
    """Float from ``0.5``, ``1e-3`` or a fraction such as ``1/64``."""
    s = str(text).strip()
    try:
        return float(s)
    except ValueError:
        try:
            return float(Fraction(s))
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"not a number: {text!r}") from None


def parse_list(text) -> list:
    return [parse_number(v) for v in str(text).replace(";", ",").split(",") if v.strip()]


def parse_points(text) -> list:
    """``x,y;x,y`` into a list of pairs."""
    pts = []
    for item in filter(None, (s.strip() for s in str(text).split(";"))):
        xy = parse_list(item)
        if len(xy) != 2:
            raise UsageError(f"bad point {item!r}")
        pts.append(tuple(xy))
    return pts


def parse_data(spec: str):
    """``name[:key=value,...]`` into built-in CauchyData."""
    name, _, body = str(spec).partition(":")
    if name not in BUILTIN_DATA:
        raise UsageError(f"unknown data {name!r}; choose from {sorted(BUILTIN_DATA)}")
    kw = {}
    for item in filter(None, body.split(",")):
        k, sep, v = item.partition("=")
        if not sep:
            raise UsageError(f"bad data parameter {item!r}")
        try:
            kw[k.strip()] = parse_number(v)
        except UsageError:
            kw[k.strip()] = v.strip()
    try:
        return BUILTIN_DATA[name](**kw)
    except TypeError as exc:
        raise UsageError(str(exc)) from None


class Settings:
    """Flag values backed by the config file; flags win."""

    def __init__(self, args, command: str):
        self.args, self.command = args, command
        self.file = {}
        if args.config is not None:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise UsageError(f"cannot read config: {exc}") from None
            try:
                self.file = {k.replace("-", "_"): v for k, v in parse_key_values(text).items()}
            except ValueError as exc:
                raise UsageError(f"config: {exc}") from None

    def get(self, key: str, default=None):
        key = key.replace("-", "_")
        v = getattr(self.args, key, None)
        if v is not None:
            return v
        for k in (f"{self.command.replace('-', '_')}.{key}", key):
            if k in self.file:
                return self.file[k]
        return default

    def solver(self, **defaults) -> SolverConfig:
        d = {k: str(v) for k, v in defaults.items()}
        d.update({k[7:]: v for k, v in self.file.items() if k.startswith("solver.")})
        for k in ("h", "cfl", "domain_half_width", "t_end", "local_b"):
            if k in d:
                d[k] = repr(parse_number(d[k]))
        try:
            return SolverConfig.from_dict(d)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"solver config: {exc}") from None


# output ----------------------------------------------------------------------

def _out_dir(settings: Settings) -> Path:
    d = Path(settings.get("out", "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write(path: Path, text: str, seed: int) -> Path:
    path.write_text(f"# seed={seed}\n" + text)
    return path


def emit_plot_data(series, path, labels=("x", "y"), fit: Optional[dict] = None) -> Path:
    """Two-column CSV of ``series`` (pairs or an (x, y) tuple of arrays) plus a
    ``.txt`` sidecar holding the axis labels and any fit parameters."""
    if isinstance(series, tuple) and len(series) == 2 and np.ndim(series[0]) == 1:
        x, y = np.asarray(series[0], float), np.asarray(series[1], float)
    else:
        arr = np.asarray(series, float).reshape(-1, 2) if len(series) else np.empty((0, 2))
        x, y = arr[:, 0], arr[:, 1]
    if x.size == 0 or x.size != y.size:
        raise ValueError("plot series must be nonempty with matching columns")
    p = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(labels)
    for a, b in zip(x, y):
        w.writerow([repr(float(a)), repr(float(b))])
    p.write_text(buf.getvalue())
    side = [f"x_label={labels[0]}", f"y_label={labels[1]}", f"n={x.size}"]
    side += [f"fit.{k}={v!r}" if isinstance(v, float) else f"fit.{k}={v}"
             for k, v in (fit or {}).items()]
    p.with_suffix(".txt").write_text("\n".join(side) + "\n")
    return p


def _report(certs: Sequence[BoundCertificate], out: Path, name: str, seed: int) -> int:
    text = certificates_to_csv(certs)
    _write(out / name, text, seed)
    sys.stdout.write(text)
    return EXIT_PASS if all(c.passed for c in certs) else EXIT_FAIL


# subcommands -----------------------------------------------------------------

def cmd_weights_certify(s: Settings) -> int:
    ineq = s.get("inequality")
    if ineq not in ("el1", "el2"):
        raise UsageError("--inequality must be el1 or el2")
    rho = parse_number(s.get("rho", 0.5))
    grid = None
    if s.get("grid"):
        grid = {}
        for item in filter(None, str(s.get("grid")).split(";")):
            k, _, v = item.partition("=")
            grid[k.strip()] = int(parse_number(v)) if k.strip().startswith("n_") else parse_number(v)
    cert = certify_weight_inequality(ineq, rho, grid=grid)
    return _report([cert], _out_dir(s), f"weights_{ineq}.csv", s.seed)


def cmd_kernel_verify(s: Settings) -> int:
    ineq = s.get("inequality")
    out = _out_dir(s)
    if ineq == "kernel1-identity":
        n = int(parse_number(s.get("n-points", 200)))
        pts = kv.random_kernel_points(n, s.seed)
        err = np.array([kv.identity_discrepancy(p) for p in pts])
        k = int(np.argmax(err))
        worst_err = float(err[k])
        tol = parse_number(s.get("tolerance", 1e-6))
        worst = pts[k]
        text = ("check,n_points,max_relative_error,tolerance,lam,s,r,t\n"
                f"kernel1-identity,{n},{worst_err!r},{tol!r},{worst.lam!r},{worst.s!r},"
                f"{worst.r!r},{worst.t!r}\n")
        _write(out / "kernel1_identity.csv", text, s.seed)
        sys.stdout.write(text)
        return EXIT_PASS if worst_err <= tol else EXIT_FAIL
    kappa = parse_number(s.get("kappa", 1.0))
    grid = s.get("grid")
    if ineq == "der11":
        cert = kv.certify_der11(parse_number(s.get("nu", 1.0)), kappa, grid=grid)
    elif ineq in kv.KERNEL_IDS:
        cert = kv.certify_kernel_bound(ineq, grid=grid, kappa=kappa)
    else:
        raise UsageError(f"unknown inequality {ineq!r}")
    return _report([cert], out, f"kernel_{ineq}.csv", s.seed)


def cmd_propagate(s: Settings) -> int:
    data = parse_data(s.get("data", "gaussian"))
    out = _out_dir(s)
    nu = s.get("nu")
    if nu is not None:
        cert = verify_homogeneous_decay(data, parse_number(nu))
        return _report([cert], out, "homogeneous_decay.csv", s.seed)
    times = parse_list(s.get("t", "1"))
    points = parse_points(s.get("points", "0,0"))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x", "y", "value", "error_estimate"])
    for t in times:
        for p in points:
            v, e = k0_eval(data, t, p, full_output=True)
            w.writerow([repr(t), repr(p[0]), repr(p[1]), repr(float(v)), repr(float(e))])
    _write(out / "propagate.csv", buf.getvalue(), s.seed)
    sys.stdout.write(buf.getvalue())
    return EXIT_PASS


def _solve(s: Settings) -> RunRecord:
    cfg = s.solver()
    data = parse_data(s.get("data", "annular_bump"))
    eps = parse_number(s.get("epsilon", 1.0))
    probes = {}
    for i, p in enumerate(parse_points(s.get("probes", ""))):
        probes[f"p{i}"] = p
    rec, _ = run(cfg, data.w0, data.w1, eps, probes=probes)
    return rec


def cmd_solve(s: Settings) -> int:
    rec = _solve(s)
    d = rec.save(_out_dir(s) / "record")
    (d / "seed.txt").write_text(f"seed={s.seed}\n")
    print(f"record written to {d}")
    return EXIT_PASS


def cmd_decay_fit(s: Settings) -> int:
    src = s.get("record")
    if src is not None:
        try:
            rec = RunRecord.load(src)
        except OSError as exc:
            raise UsageError(f"cannot read record: {exc}") from None
    else:
        rec = _solve(s)
    window = tuple(parse_list(s.get("window", "20,200")))
    fit = fit_local_energy_decay(rec, window=window)
    min_gamma = parse_number(s.get("min-gamma", 0.8))
    out = _out_dir(s)
    t, y = rec.array("t"), rec.array("local_energy_b2")
    keep = (t > 0) & (y > 0)
    summary = {"gamma": fit.gamma, "intercept": fit.intercept, "residual": fit.residual,
               "n": fit.n, "window": f"{window[0]:g}-{window[1]:g}", "seed": s.seed}
    emit_plot_data((0.5 * np.log1p(t[keep] ** 2), np.log(y[keep])), out / "decay_plot.csv",
                   ("log<t>", "log local energy"), summary)
    text = f"gamma,intercept,residual,n,min_gamma\n{fit.gamma!r},{fit.intercept!r}," \
           f"{fit.residual!r},{fit.n},{min_gamma!r}\n"
    _write(out / "decay_fit.csv", text, s.seed)
    sys.stdout.write(text)
    return EXIT_PASS if fit.gamma >= min_gamma else EXIT_FAIL


def cmd_decompose_check(s: Settings) -> int:
    data = parse_data(s.get("data", "annular_bump"))
    obstacle = Obstacle.from_spec(s.get("obstacle", "disk:0.5"))
    hs = parse_list(s.get("h", "1/32,1/64"))
    t = parse_number(s.get("t", 5.0))
    probes = parse_points(s.get("probes")) if s.get("probes") else REFERENCE_PROBES
    _, errs, orders = decomposition_convergence(data, obstacle, hs=hs, probes=probes, t=t)
    min_order = parse_number(s.get("min-order", 1.5))
    max_err = parse_number(s.get("max-discrepancy", 5e-3))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "max_discrepancy", "order"])
    for i, (h, e) in enumerate(zip(hs, errs)):
        w.writerow([repr(h), repr(float(e)), repr(float(orders[i - 1])) if i else ""])
    _write(_out_dir(s) / "decomposition.csv", buf.getvalue(), s.seed)
    sys.stdout.write(buf.getvalue())
    ok = errs[-1] <= max_err and bool(np.all(orders >= min_order))
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_lifespan_sweep(s: Settings) -> int:
    eps = parse_list(s.get("epsilons", "1.6,1.4,1.2,1.0,0.9,0.8"))
    t_cap = parse_number(s.get("t_cap", 50.0))
    h = parse_number(s.get("h", 1 / 64))
    cfg = ls.default_config(h=h, t_cap=t_cap)
    if any(k.startswith("solver.") for k in s.file):
        cfg = s.solver(**cfg.to_dict())
    data = parse_data(s.get("data", "annular_bump"))
    guard = str(s.get("guard", "0")).lower() in ("1", "true", "yes")
    try:
        spec = ls.SweepSpec(eps, cfg, parse_number(s.get("threshold_factor", 1e6)), t_cap)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = ls.sweep(spec, data, guard=guard)
    out = _out_dir(s)
    text = res.to_csv()
    _write(out / "lifespan.csv", text, s.seed)
    sys.stdout.write(text)
    if res.fit is not None:
        ok = ~res.fit.censored
        emit_plot_data((res.fit.epsilons[ok] ** -2, np.log(res.fit.T_hat[ok])),
                       out / "lifespan_plot.csv", ("eps^-2", "log T_hat"), res.fit.summary())
    min_r2 = parse_number(s.get("min-r2", 0.9))
    ok = res.fit is not None and res.fit.r2 >= min_r2 and res.monotone
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_estimate_certify(s: Settings) -> int:
    which = s.get("which", "all")
    if which not in ("elliptic", "hardy", "sobolev", "all"):
        raise UsageError("--which must be elliptic, hardy, sobolev or all")
    certs = []
    if which in ("elliptic", "hardy", "all"):
        obstacle = Obstacle.from_spec(s.get("obstacle", "disk:0.5"))
        trials = int(parse_number(s.get("trials", 50)))
        ell = certify_elliptic(obstacle, trials=trials, rng=s.seed)
        if which in ("elliptic", "all"):
            certs.append(ell)
        if which in ("hardy", "all"):
            certs.append(ell.extra["hardy"])
    if which in ("sobolev", "all"):
        certs.append(certify_sobolev(trials=int(parse_number(s.get("sobolev_trials", 8))),
                                     rng=s.seed))
    return _report(certs, _out_dir(s), f"estimates_{which}.csv", s.seed)


COMMANDS = {
    "weights-certify": cmd_weights_certify,
    "kernel-verify": cmd_kernel_verify,
    "propagate": cmd_propagate,
    "solve": cmd_solve,
    "decay-fit": cmd_decay_fit,
    "decompose-check": cmd_decompose_check,
    "lifespan-sweep": cmd_lifespan_sweep,
    "estimate-certify": cmd_estimate_certify,
}

_FLAGS = {
    "weights-certify": [("--inequality", "el1 or el2"), ("--rho", "weight exponent"),
                        ("--grid", "log-cone grid, key=value;...")],
    "kernel-verify": [("--inequality", "kernel id, der11 or kernel1-identity"),
                      ("--grid", "grid spec key=value;..."), ("--kappa", None), ("--nu", None),
                      ("--n-points", "random points for the identity check"),
                      ("--tolerance", "identity tolerance")],
    "propagate": [("--data", "name[:key=value,...]"), ("--t", "comma separated times"),
                  ("--points", "x,y;x,y"), ("--nu", "certify decay with this nu instead")],
    "solve": [("--data", None), ("--epsilon", None), ("--probes", "x,y;x,y")],
    "decay-fit": [("--record", "saved run directory"), ("--data", None), ("--epsilon", None),
                  ("--window", "t0,t1"), ("--min-gamma", None)],
    "decompose-check": [("--data", None), ("--obstacle", None), ("--h", "comma separated h"),
                        ("--t", None), ("--probes", None), ("--min-order", None),
                        ("--max-discrepancy", None)],
    "lifespan-sweep": [("--epsilons", "strictly decreasing list"), ("--t-cap", None),
                       ("--h", None), ("--data", None), ("--guard", "0 or 1"),
                       ("--min-r2", None)],
    "estimate-certify": [("--which", "elliptic, hardy, sobolev or all"), ("--obstacle", None),
                         ("--trials", None)],
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="extwave", description="Exterior wave equation experiments.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key=value file")
        sp.add_argument("--out", help="output directory (default .)")
        sp.add_argument("--seed", type=int, default=None, help="seed for random trials")
        for flag, help_ in _FLAGS[name]:
            sp.add_argument(flag, help=help_)
    return p


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand")
        settings = Settings(args, args.command)
        seed = settings.get("seed", 0)
        settings.seed = int(parse_number(seed))
        return COMMANDS[args.command](settings)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:  # invalid parameters rejected by a module
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv: Optional[Sequence[str]] = None) -> int:
    return dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
