"""Command-line driver: ``kzising <subcommand> [options]``.

Every subcommand writes one table (CSV with a ``#`` metadata block, or JSON)
to ``--out`` or stdout.  Options may also come from a ``key = value`` file
given with ``--config``; explicit flags win over the file, the file wins over
built-in defaults.

Exit status: 0 on success, 1 on a runtime failure, 2 on a usage error.
"""

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from . import __version__
from . import correlators as co
from . import ed_oracle as ed
from . import higher_order as ho
from . import spinspin as ss
from .bdg_solver import IntegratorConfig, evolve_grid, kink_density, spectrum
from .errors import (ConditioningError, DegeneracyError, DomainError, FitError,
                     IntegrationError)
from .protocol import (ChainSpec, Halt, RampProtocol, default_chain_size,
                       dephasing_length, dephasing_time, kz_scales, lz_probability)

COMMANDS = ("spectrum", "correlator", "sweep", "higher", "spinspin", "oracle")


class UsageError(Exception):
    pass


def _floats(text):
    try:
        vals = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}")
    return vals


def _ints(text):
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise UsageError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


@dataclass
class RunConfig:
    command: str
    tau_q: Optional[float] = None
    g0: float = 10.0
    n: Optional[int] = None
    halt_g: Optional[float] = None
    halt_t: Optional[float] = None
    rmax: Optional[int] = None
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    out: Optional[str] = None
    format: str = "csv"
    kinds: str = "exact,approx,analytic,dephased"
    positions: Optional[str] = None
    fit: bool = False
    tau_list: Optional[str] = None
    tw_list: Optional[str] = None
    tw_unit: str = "time"

    # field conversion for values read from a config file
    _types = {"tau_q": float, "g0": float, "n": int, "halt_g": float, "halt_t": float,
              "rmax": int, "rel_tol": float, "abs_tol": float}

    def resolved(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def protocol(self, tau_q=None, halt_t=None) -> RampProtocol:
        tau = self.tau_q if tau_q is None else tau_q
        if tau is None:
            raise UsageError("--tau-q is required")
        t_w = self.halt_t if halt_t is None else halt_t
        halt = None
        if self.halt_g is not None or t_w is not None:
            halt = Halt(0.5 if self.halt_g is None else self.halt_g,
                        0.0 if t_w is None else t_w)
        return RampProtocol(tau, self.g0, halt)

    def chain(self, tau_q, minimum=0) -> ChainSpec:
        if self.n is not None:
            return ChainSpec(self.n)
        N = max(default_chain_size(tau_q), int(math.ceil(minimum)))
        return ChainSpec(N + (N % 2))

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(self.rel_tol, self.abs_tol)


def read_config_file(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _coerce(key, val):
    if key == "fit":
        if isinstance(val, bool):
            return val
        return str(val).lower() in ("1", "true", "yes", "on")
    conv = RunConfig._types.get(key)
    if conv is None or val is None:
        return val
    try:
        return conv(val)
    except ValueError:
        raise UsageError(f"{key}: cannot parse {val!r} as {conv.__name__}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--tau-q", dest="tau_q", help="quench time")
    common.add_argument("--g0", help="initial transverse field (default 10)")
    common.add_argument("--n", help="chain length (even, >= 4)")
    common.add_argument("--halt-g", dest="halt_g", help="field of the halt, in (0, 1)")
    common.add_argument("--halt-t", dest="halt_t", help="duration of the halt")
    common.add_argument("--rmax", help="largest separation R")
    common.add_argument("--rel-tol", dest="rel_tol")
    common.add_argument("--abs-tol", dest="abs_tol")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))

    p = argparse.ArgumentParser(prog="kzising", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="final excitation spectrum p_k")
    c = sub.add_parser("correlator", parents=[common], help="scaled kink-kink correlators")
    c.add_argument("--kinds", help="comma-separated subset of " + ",".join(co.KINDS))
    s = sub.add_parser("sweep", parents=[common], help="density and l_w over tau_q x t_w")
    s.add_argument("--tau-list", dest="tau_list", help="comma-separated quench times")
    s.add_argument("--tw-list", dest="tw_list", help="comma-separated halt durations")
    s.add_argument("--tw-unit", dest="tw_unit", choices=("time", "tD"),
                   help="unit of --tw-list (default: time)")
    h = sub.add_parser("higher", parents=[common], help="dephased multi-kink correlator")
    h.add_argument("--positions", help="kink positions, e.g. 0,40,90")
    z = sub.add_parser("spinspin", parents=[common], help="dephased sz-sz correlator")
    z.add_argument("--fit", action="store_true", default=argparse.SUPPRESS,
                   help="fit the damped-oscillation asymptote")
    sub.add_parser("oracle", parents=[common], help="dense ED vs free-fermion check")
    return p


def resolve(argv) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    cmd = ns.pop("command")
    values = {}
    if "config" in ns:
        values.update(read_config_file(ns.pop("config")))
    values.update(ns)
    known = {f.name for f in fields(RunConfig)} - {"command"}
    unknown = set(values) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = RunConfig(cmd, **{k: _coerce(k, v) for k, v in values.items()})
    if cfg.format not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {cfg.format!r}")
    return cfg


# ---- output ---------------------------------------------------------------

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


@dataclass
class Table:
    columns: list
    rows: list
    trailer: dict = field(default_factory=dict)


def render(table: Table, cfg: RunConfig) -> str:
    meta = {"version": __version__, **cfg.resolved()}
    if cfg.format == "json":
        def num(x):
            if isinstance(x, (np.floating, float)):
                return float(x)
            if isinstance(x, (np.integer,)):
                return int(x)
            return x
        doc = {"meta": meta, "columns": table.columns,
               "rows": [[num(v) for v in r] for r in table.rows]}
        doc.update({k: {kk: num(vv) for kk, vv in v.items()} if isinstance(v, dict) else num(v)
                    for k, v in table.trailer.items()})
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k} = {_fmt(v)}\n")
    buf.write(",".join(table.columns) + "\n")
    for r in table.rows:
        buf.write(",".join(_fmt(v) for v in r) + "\n")
    for k, v in table.trailer.items():
        if isinstance(v, dict):
            v = ", ".join(f"{kk} = {_fmt(vv)}" for kk, vv in v.items())
        buf.write(f"# {k}: {_fmt(v)}\n")
    return buf.getvalue()


# ---- commands -------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig) -> Table:
    pr = cfg.protocol()
    sp = spectrum(pr, cfg.chain(pr.tau_q), cfg.integrator())
    full, gauss = lz_probability(pr, sp.k)
    rows = [list(r) for r in zip(sp.k, sp.p, gauss, full)]
    return Table(["k", "p_k_numeric", "p_k_lz_gaussian", "p_k_lz_full"], rows)


def _kinds(cfg, halted):
    kinds = [k.strip() for k in cfg.kinds.split(",") if k.strip()]
    bad = [k for k in kinds if k not in co.KINDS]
    if bad or not kinds:
        raise UsageError(f"--kinds must be a subset of {','.join(co.KINDS)}, got {cfg.kinds!r}")
    # with a halt the analytic curve uses the halted dephasing length
    return [("analytic_halted" if k == "analytic" and halted else k, k) for k in kinds]


def cmd_correlator(cfg: RunConfig) -> Table:
    pr = cfg.protocol()
    sc = kz_scales(pr)
    chain = cfg.chain(pr.tau_q)
    kinds = _kinds(cfg, pr.halt is not None)
    modes = evolve_grid(pr, chain, cfg.integrator())
    n = kink_density(spectrum(pr, chain, modes=modes))
    rmax = cfg.rmax or int(math.ceil(1.12 / n))
    fc = co.fermion_correlators(modes, min(rmax + 1, chain.N - 1), sc)
    R = np.arange(1, rmax + 1)
    cols = [co.scaled_series(fc, kind, R, n, sc).values for kind, _ in kinds]
    rows = [[int(r), n * r] + [c[i] for c in cols] for i, r in enumerate(R)]
    return Table(["R", "nR"] + [label for _, label in kinds], rows,
                 {"kink_density": n})


def _sweep_cell(cfg, tau, t_w):
    g_w = 0.5 if cfg.halt_g is None else cfg.halt_g
    pr = RampProtocol(tau, cfg.g0, Halt(g_w, t_w))
    sc = kz_scales(pr)
    # room for the positive hump and its tail without wraparound
    chain = cfg.chain(tau, minimum=5.0 * sc.l_w)
    modes = evolve_grid(pr, chain, cfg.integrator())
    n = kink_density(spectrum(pr, chain, modes=modes))
    fc = co.fermion_correlators(modes, min(chain.N - 1, int(3 * sc.l_w) + 2), sc)
    row = [tau, t_w, n, sc.n, sc.xi_hat, sc.l_w, None, None, ""]
    try:
        fit = co.fit_dephasing_length(fc, n, sc.rescaled(n).l_w)
        row[6], row[7] = fit.l, fit.residual
    except FitError as e:
        row[7] = e.residual
        row[8] = str(e)
    return row


def cmd_sweep(cfg: RunConfig) -> Table:
    taus = _floats(cfg.tau_list) if cfg.tau_list is not None else (
        [cfg.tau_q] if cfg.tau_q is not None else [])
    tws = _floats(cfg.tw_list) if cfg.tw_list is not None else [cfg.halt_t or 0.0]
    if not taus or not tws:
        raise UsageError("sweep needs non-empty --tau-list and --tw-list")
    g_w = 0.5 if cfg.halt_g is None else cfg.halt_g
    rows = []
    for tau in taus:
        for tw in tws:
            t_w = tw * dephasing_time(tau, g_w) if cfg.tw_unit == "tD" else tw
            try:
                rows.append(_sweep_cell(cfg, tau, t_w))
            except (IntegrationError, ConditioningError, DomainError) as e:
                rows.append([tau, t_w, None, None, None, None, None, None, str(e)])
    cols = ["tau_q", "t_w", "n_numeric", "n_closed_form", "xi_hat",
            "l_w_closed_form", "l_w_fitted", "fit_residual", "error"]
    return Table(cols, rows)


def cmd_higher(cfg: RunConfig) -> Table:
    if cfg.positions is None:
        raise UsageError("--positions is required")
    pos = ho.KinkPositions.from_offsets(_ints(cfg.positions))
    sc = kz_scales(cfg.protocol())
    val = ho.connected_kink_correlator(sc, pos)
    cols = [f"R_{i}" for i in range(pos.M + 1)] + ["M", "value", "scaled_value"]
    row = list(pos.positions) + [pos.M, val, val * sc.xi_hat ** (pos.M + 1)]
    return Table(cols, [row])


def cmd_spinspin(cfg: RunConfig) -> Table:
    sc = kz_scales(cfg.protocol())
    rmax = cfg.rmax or int(math.ceil(5.5 * sc.xi_hat))
    vals = ss.czz_series(sc, rmax)
    R = np.arange(1, rmax + 1)
    rows = [[int(r), r / sc.xi_hat, v] for r, v in zip(R, vals)]
    trailer = {}
    if cfg.fit:
        sel = (R >= sc.xi_hat) & (R <= 5.0 * sc.xi_hat)
        fit = ss.fit_asymptote(R[sel], vals[sel], sc)
        trailer["fit"] = {"decay_rate": fit.decay_rate, "frequency": fit.frequency,
                          "phase": fit.phase, "amplitude": fit.amplitude,
                          "residual": fit.residual}
    return Table(["R", "R_over_xi", "czz"], rows, trailer)


def cmd_oracle(cfg: RunConfig) -> Table:
    pr = cfg.protocol()
    N = cfg.n or 8
    if N > ed.N_MAX:
        raise UsageError(f"oracle supports N <= {ed.N_MAX}, got {N}")
    chain = ChainSpec(N)
    icfg = cfg.integrator()
    dense = ed.measure_kinks(ed.evolve(ed.ground_state(N, pr.g0), pr, icfg))
    fc = co.fermion_correlators(evolve_grid(pr, chain, icfg), N - 1)
    rows = []

    def add(name, R, a, b):
        rows.append([name, R, a, b, abs(a - b)])

    add("n", 0, co.kink_density_from_correlators(fc), dense.n)
    for R in range(1, N // 2 + 1):
        add("ckk", R, co.kink_kink_exact(fc, R), dense.ckk[R - 1])
    for R in range(1, N // 2 + 1):
        add("czz", R, ss.czz_exact(fc, R), dense.czz[R - 1])
    return Table(["observable", "R", "pipeline", "oracle", "abs_diff"], rows)


HANDLERS = {"spectrum": cmd_spectrum, "correlator": cmd_correlator, "sweep": cmd_sweep,
            "higher": cmd_higher, "spinspin": cmd_spinspin, "oracle": cmd_oracle}


def run(argv=None) -> int:
    try:
        cfg = resolve(argv)
        table = HANDLERS[cfg.command](cfg)
    except SystemExit as e:  # argparse usage errors
        return int(e.code or 0)
    except (UsageError, DomainError, DegeneracyError) as e:
        print(f"kzising: error: {e}", file=sys.stderr)
        return 2
    except (IntegrationError, FitError, ConditioningError, OSError) as e:
        print(f"kzising: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    text = render(table, cfg)
    try:
        if cfg.out:
            with open(cfg.out, "w", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
            sys.stdout.flush()
    except BrokenPipeError:
        # reader closed early (e.g. `| head`); keep the interpreter from complaining at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except OSError as e:
        print(f"kzising: cannot write output: {e}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
