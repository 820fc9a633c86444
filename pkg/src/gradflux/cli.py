"""Command-line entry point: ``gradflux {verify,variance-scan,tail-scan,energy-bound}``.

Settings come from an optional ``key = value`` configuration file
(``--config``) overridden by command-line flags. Every output CSV starts
with ``#`` lines holding the resolved manifest, so equal manifests give
byte-identical files.
"""

import argparse
import configparser
import csv
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .energy import dstar_exponent, tail_bound
from .lattice import build_torus
from .potentials import parse_potential

__all__ = ["ExperimentManifest", "load_manifest", "build_parser", "main",
           "cmd_verify", "cmd_variance_scan", "cmd_tail_scan", "cmd_energy_bound"]

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


@dataclass
class ExperimentManifest:
    """Everything that determines a run; serialized into each output header."""

    subcommand: str
    d: int = 2
    L: int = 4
    kind: str = "torus"
    potential: str = "power"
    p: float = 4.0
    n_chains: int = 4
    n_samples: int = 20000
    burn_in: object = None
    thin: int = 1
    scan: str = "systematic"
    seed: int = 0
    workers: int = 1
    t_grid: list = field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0])
    l: int = 40
    suite: str = "all"
    out: str = "."
    version: str = __version__

    def potential_obj(self):
        return parse_potential(self.potential, p=self.p)

    def header_lines(self):
        keys = ["subcommand", "version", "seed", "d", "L", "kind", "potential", "p",
                "n_chains", "n_samples", "burn_in", "thin", "scan", "t_grid", "l", "suite"]
        lines = ["# gradflux manifest v1"]
        for k in keys:
            v = getattr(self, k)
            if isinstance(v, list):
                v = ",".join(_fmt(x) for x in v)
            elif isinstance(v, float):
                v = _fmt(v)
            lines.append(f"# {k} = {v}")
        return lines


def _fmt(x):
    return repr(float(x))


_INT_KEYS = {"d", "L", "n_chains", "n_samples", "thin", "seed", "workers", "l"}
_FLOAT_KEYS = {"p"}


def _coerce(key, value):
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key == "burn_in":
        return None if str(value).lower() in ("", "none", "auto") else int(value)
    if key == "t_grid":
        if isinstance(value, (list, tuple)):
            return [float(x) for x in value]
        return [float(x) for x in str(value).replace(" ", "").split(",") if x]
    return value


def load_manifest(subcommand, config=None, overrides=None):
    """Manifest from defaults, then the config file, then explicit overrides.

    The config file holds ``key = value`` lines, optionally under sections;
    a section named after the subcommand overrides the ``[run]`` section and
    keys outside any section.
    """
    m = ExperimentManifest(subcommand)
    valid = set(ExperimentManifest.__dataclass_fields__) - {"subcommand", "version"}
    if config is not None:
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        with open(config) as fh:
            text = fh.read()
        cp.read_string("[DEFAULT]\n" + text if not text.lstrip().startswith("[") else text)
        for section in ("DEFAULT", "run", subcommand):
            if section == "DEFAULT":
                items = cp.defaults().items()
            elif cp.has_section(section):
                items = [(k, v) for k, v in cp.items(section, raw=True)]
            else:
                continue
            for k, v in items:
                k = k.replace("-", "_")
                if k not in valid:
                    raise ValueError(f"unknown configuration key {k!r}")
                setattr(m, k, _coerce(k, v))
    for k, v in (overrides or {}).items():
        if v is not None:
            setattr(m, k, _coerce(k, v))
    return m


def _out_path(m, name):
    os.makedirs(m.out, exist_ok=True)
    return os.path.join(m.out, name)


def _write_csv(path, m, columns, rows, extra_headers=()):
    with open(path, "w", newline="\n") as fh:
        for line in m.header_lines() + [f"# {x}" for x in extra_headers]:
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# ----------------------------------------------------------------------
# subcommands

def cmd_verify(m, stream=sys.stdout):
    """Run the named suite(s); exit code 1 on any failure, with witnesses."""
    from .verify import SUITES, run_suite

    names = list(SUITES) if m.suite == "all" else [m.suite]
    ok = True
    rows = []
    for name in names:
        kw = {"seed": m.seed} if name in ("logconcave", "energy", "chessboard") else {}
        (rep,) = run_suite(name, **kw)
        for line in rep.log:
            stream.write(f"  {line}\n")
        for r in rep.failures:
            stream.write("  " + r.line() + "\n")
        stream.write(rep.summary() + "\n")
        ok &= rep.passed
        for r in rep.results:
            rows.append((rep.suite, r.check, r.instance, r.passed, r.lhs, r.rhs, r.tolerance))
    _write_csv(_out_path(m, "verify.csv"), m,
               ["suite", "check", "instance", "passed", "lhs", "rhs", "tolerance"],
               rows)
    return EXIT_OK if ok else EXIT_FAIL


def _diagonal(G, d, L, lo=1):
    """Vertices ``(k, ..., k)`` for ``k = lo..L``."""
    return [G.index_of([k] * d) for k in range(lo, L + 1)]


def _chain_config(m, track):
    from .sampler import ChainConfig

    return ChainConfig(n_chains=m.n_chains, burn_in=m.burn_in, thin=m.thin,
                       n_samples=m.n_samples, seed=m.seed, scan=m.scan,
                       track=track, workers=m.workers)


def cmd_variance_scan(m, stream=sys.stdout):
    """Variance along the diagonal of a torus, with the fitted growth constant."""
    from .sampler import run_chains, variance_estimate

    if m.kind != "torus":
        raise ValueError("variance scans run on tori")
    G = build_torus(m.d, m.L)
    U = m.potential_obj()
    verts = _diagonal(G, m.d, m.L)
    s = run_chains(G, U, _chain_config(m, verts))
    rows = []
    running = 0.0
    for v in verts:
        est = variance_estimate(s, v)
        r1 = G.l1(v)
        if m.d == 2:
            fit = est.value / math.log(1.0 + r1)
        else:
            running = max(running, est.value)
            fit = running
        rows.append((v, r1, est.value, est.se, est.n_batches, fit))
    fit_name = "var_over_log" if m.d == 2 else "running_max"
    extra = []
    if m.d == 2:
        C = max(r[5] for r in rows)
        extra.append(f"fitted C = {_fmt(C)} in Var <= C log(1 + |v|_1)")
    else:
        extra.append(f"running max = {_fmt(running)}")
    path = _out_path(m, "variance_scan.csv")
    _write_csv(path, m, ["vertex", "l1", "variance", "se", "batches", fit_name], rows, extra)
    stream.write(f"wrote {path}\n")
    return EXIT_OK


def cmd_tail_scan(m, stream=sys.stdout):
    """Empirical tails at the antipodal vertex against ``exp(-D(t))``."""
    from .sampler import run_chains, tail_estimate

    if m.d < 3:
        raise ValueError("tail scans need d >= 3")
    if not m.potential.startswith("power_plus_quadratic"):
        raise ValueError("tail scans need a power_plus_quadratic potential")
    G = build_torus(m.d, m.L)
    U = m.potential_obj()
    v = G.index_of([m.L] * m.d)
    s = run_chains(G, U, _chain_config(m, [v]))
    est = tail_estimate(s, v, m.t_grid)
    curve = tail_bound(G, U, v, m.t_grid)
    rows = []
    flagged = 0
    for t, e, b in zip(m.t_grid, est, curve.values):
        bad = e.value - 3.0 * e.se > b
        flagged += bad
        rows.append((t, e.value, e.se, b, bad))
    path = _out_path(m, "tail_scan.csv")
    _write_csv(path, m, ["t", "empirical", "se", "bound", "flag"], rows,
               [f"vertex = {v}", f"flagged = {flagged}"])
    stream.write(f"wrote {path} ({flagged} flagged)\n")
    return EXIT_OK if flagged == 0 else EXIT_FAIL


def cmd_energy_bound(m, stream=sys.stdout):
    """``D*(t)`` with its exponent fit, and ``D(t)`` on the configured torus."""
    U = m.potential_obj()
    p = U.p if U.p is not None else 2.0
    curve = dstar_exponent(m.d, p, m.t_grid, l=m.l)
    path = _out_path(m, "energy_bound.csv")
    rows = []
    G = build_torus(m.d, m.L)
    v = G.index_of([m.L] * m.d)
    Dt = tail_bound(G, U, v, m.t_grid).extra["D"]
    for t, val, res, D in zip(curve.t, curve.values, curve.residuals, Dt):
        rows.append((t, val, curve.exponent, res, D))
    _write_csv(path, m, ["t", "value", "exponent_fit", "residual", "D_torus"], rows,
               [curve.label])
    stream.write(f"wrote {path} (exponent {curve.exponent:.4f})\n")
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "variance-scan": cmd_variance_scan,
    "tail-scan": cmd_tail_scan,
    "energy-bound": cmd_energy_bound,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="gradflux", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gradflux {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out", help="output directory")

    def model(sp):
        sp.add_argument("--d", type=int)
        sp.add_argument("--L", type=int)
        sp.add_argument("--potential", help="quadratic, power, power_plus_quadratic or abs")
        sp.add_argument("--p", type=float)
        sp.add_argument("--chains", dest="n_chains", type=int)
        sp.add_argument("--samples", dest="n_samples", type=int)
        sp.add_argument("--burn-in", dest="burn_in")
        sp.add_argument("--thin", type=int)

    v = sub.add_parser("verify", help="run property suites")
    v.add_argument("suite", nargs="?", choices=["logconcave", "isoperimetry", "energy",
                                                "chessboard", "all"])
    common(v)
    vs = sub.add_parser("variance-scan", help="variance along a torus diagonal")
    common(vs)
    model(vs)
    ts = sub.add_parser("tail-scan", help="empirical tails against the energy bound")
    common(ts)
    model(ts)
    ts.add_argument("--t-grid", dest="t_grid", help="comma-separated t values")
    eb = sub.add_parser("energy-bound", help="D*(t) exponents and D(t)")
    common(eb)
    eb.add_argument("--d", type=int)
    eb.add_argument("--L", type=int)
    eb.add_argument("--potential")
    eb.add_argument("--p", type=float)
    eb.add_argument("--t-grid", dest="t_grid")
    eb.add_argument("--l", type=int)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    opts = vars(args).copy()
    sub = opts.pop("subcommand")
    config = opts.pop("config", None)
    try:
        m = load_manifest(sub, config, opts)
        return COMMANDS[sub](m)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"gradflux: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
